//! Winding numbers, oriented areas and planar change of variables for
//! Hölder curves and maps.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::holder::{mollify_grid, mollify_grid_gradient, GridMap, MollifierKernel, SampledPath};
use crate::quadrature::{composite_gl5, gl5, GL3};
use crate::young::{auto_depth, dyadic_eps, extrapolate, levy_area_rs, young_mollified, Level};

/// A closed polyline in R², given by a sampled path whose ends agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve2D {
    path: SampledPath,
}

impl ClosedCurve2D {
    pub fn new(path: SampledPath) -> Result<Self> {
        if path.dim() != 2 {
            return Err(Error::DimensionMismatch(format!("closed curves live in R^2, got R^{}", path.dim())));
        }
        let c = ClosedCurve2D { path };
        let (a, b) = (c.xy(0), c.xy(c.len() - 1));
        let gap = (a.0 - b.0).hypot(a.1 - b.1);
        if gap > 1e-9 * c.diameter() {
            return Err(precondition(format!("curve is not closed: end gap {gap:e}")));
        }
        Ok(c)
    }

    /// Closed curve through the given vertices on t = i/N; the first vertex is repeated at the end.
    pub fn from_points(pts: &[(f64, f64)]) -> Result<Self> {
        if pts.is_empty() {
            return Err(precondition("no vertices"));
        }
        let n = pts.len();
        let times = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = pts.iter().chain(std::iter::once(&pts[0])).flat_map(|p| [p.0, p.1]).collect();
        ClosedCurve2D::new(SampledPath::new(times, 2, values)?)
    }

    /// Samples of s ↦ f(s) on s = i/N, i = 0..=N; the last sample is set to the first.
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(n: usize, f: F) -> Result<Self> {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| f(i as f64 / n as f64)).collect();
        ClosedCurve2D::from_points(&pts)
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xy(&self, i: usize) -> (f64, f64) {
        let p = self.path.point(i);
        (p[0], p[1])
    }

    /// [xmin, xmax, ymin, ymax]
    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for i in 0..self.len() {
            let (x, y) = self.xy(i);
            b = [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)];
        }
        b
    }

    /// Diagonal of the bounding box (an upper bound for the diameter).
    pub fn diameter(&self) -> f64 {
        let b = self.bbox();
        (b[1] - b[0]).hypot(b[3] - b[2])
    }

    pub fn reversed(&self) -> Self {
        let n = self.len();
        let times = self.path.times().to_vec();
        let values = (0..n).rev().flat_map(|i| self.path.point(i).to_vec()).collect();
        ClosedCurve2D { path: SampledPath::new(times, 2, values).expect("reversal keeps a valid path") }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let values = self.path.values().chunks(2).flat_map(|p| [p[0] + dx, p[1] + dy]).collect();
        ClosedCurve2D { path: SampledPath::new(self.path.times().to_vec(), 2, values).expect("translation keeps a valid path") }
    }

    /// Signed area of the polygon through the samples.
    pub fn shoelace(&self) -> f64 {
        (0..self.len() - 1)
            .map(|i| {
                let (a, b) = (self.xy(i), self.xy(i + 1));
                a.0 * b.1 - a.1 * b.0
            })
            .sum::<f64>()
            * 0.5
    }

    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        (0..self.len() - 1).map(move |i| (self.xy(i), self.xy(i + 1)))
    }

    /// Distance from z to the polyline.
    pub fn distance_to(&self, z: (f64, f64)) -> f64 {
        self.segments().map(|(a, b)| segment_distance(z, a, b)).fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(z: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((z.0 - a.0) * dx + (z.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (z.0 - a.0 - s * dx).hypot(z.1 - a.1 - s * dy)
}

/// Winding number of the curve around z by signed-angle summation.
/// Points closer than 1e−9·diameter to the curve are refused.
pub fn winding_number(curve: &ClosedCurve2D, z: (f64, f64)) -> Result<i64> {
    winding_number_guarded(curve, z, 1e-9 * curve.diameter())
}

pub fn winding_number_guarded(curve: &ClosedCurve2D, z: (f64, f64), guard: f64) -> Result<i64> {
    if curve.distance_to(z) <= guard {
        return Err(Error::OnCurve(z.0, z.1));
    }
    let total: f64 = curve
        .segments()
        .map(|(a, b)| {
            let (ax, ay, bx, by) = (a.0 - z.0, a.1 - z.1, b.0 - z.0, b.1 - z.1);
            (ax * by - ay * bx).atan2(ax * bx + ay * by)
        })
        .sum();
    Ok((total / std::f64::consts::TAU).round() as i64)
}

/// Integer winding values at cell centres over the curve's bounding box
/// inflated by one cell. Row `j`, column `i` sits at `j * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingField {
    pub lo: [f64; 2],
    pub cell: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<i64>,
    /// centre within half a cell diagonal of the curve
    pub mask: Vec<bool>,
}

impl WindingField {
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.lo[0] + (i as f64 + 0.5) * self.cell[0], self.lo[1] + (j as f64 + 0.5) * self.cell[1])
    }

    pub fn cell_area(&self) -> f64 {
        self.cell[0] * self.cell[1]
    }

    /// Σ v·w·cellarea over unmasked cells.
    pub fn integral_with<V: Fn(f64, f64) -> f64>(&self, v: V) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                if !self.mask[k] && self.values[k] != 0 {
                    let (x, y) = self.center(i, j);
                    s += v(x, y) * self.values[k] as f64;
                }
            }
        }
        s * self.cell_area()
    }

    pub fn integral(&self) -> f64 {
        self.integral_with(|_, _| 1.0)
    }

    pub fn mask_area(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 * self.cell_area()
    }

    pub fn sup_abs(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Bound ‖w‖_∞·mask_area on what the masked cells could contribute.
    pub fn mask_bound(&self) -> f64 {
        self.sup_abs() as f64 * self.mask_area()
    }

    /// (Σ|w|^p·cellarea)^{1/p} over unmasked cells.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| !m)
            .map(|(&w, _)| (w.abs() as f64).powf(p))
            .sum();
        (s * self.cell_area()).powf(1.0 / p)
    }

    /// Rows of `x,y,w,masked`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,w,masked")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                let (x, y) = self.center(i, j);
                writeln!(out, "{x},{y},{},{}", self.values[k], self.mask[k] as u8)?;
            }
        }
        Ok(())
    }

    /// Plain PGM raster; grey level w − min(w), masked cells drawn at the maximum level + 1.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        let min = self.values.iter().copied().min().unwrap_or(0);
        let max = self.values.iter().copied().max().unwrap_or(0);
        let top = (max - min + 1).max(1);
        writeln!(out, "P2\n{} {}\n{}", self.nx, self.ny, top)?;
        for j in (0..self.ny).rev() {
            let row: Vec<String> = (0..self.nx)
                .map(|i| {
                    let k = j * self.nx + i;
                    if self.mask[k] { top.to_string() } else { (self.values[k] - min).to_string() }
                })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Signed crossings of the horizontal line at height y: (x, +1 upward / −1 downward).
/// Half-open in y so a vertex on the line is counted once.
fn crossing(a: (f64, f64), b: (f64, f64), y: f64) -> Option<(f64, i64)> {
    let sign = if a.1 <= y && y < b.1 {
        1
    } else if b.1 <= y && y < a.1 {
        -1
    } else {
        return None;
    };
    Some((a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1), sign))
}

/// Winding numbers on a `resolution`² cell grid by signed crossing counts along rows.
pub fn winding_field(curve: &ClosedCurve2D, resolution: usize) -> Result<WindingField> {
    if resolution < 16 {
        return Err(precondition("winding field needs at least 16 cells per axis"));
    }
    let b = curve.bbox();
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { curve.diameter().max(1.0) * 1e-3 };
    let cell = [span(b[0], b[1]) / resolution as f64, span(b[2], b[3]) / resolution as f64];
    let (nx, ny) = (resolution + 2, resolution + 2);
    let lo = [b[0] - cell[0], b[2] - cell[1]];
    let yc = |j: usize| lo[1] + (j as f64 + 0.5) * cell[1];
    let xc = |i: usize| lo[0] + (i as f64 + 0.5) * cell[0];

    let mut rows: Vec<Vec<(f64, i64)>> = vec![Vec::new(); ny];
    for (a, bb) in curve.segments() {
        let (ymin, ymax) = (a.1.min(bb.1), a.1.max(bb.1));
        let j0 = (((ymin - lo[1]) / cell[1] - 0.5).floor().max(0.0)) as usize;
        let j1 = (((ymax - lo[1]) / cell[1] - 0.5).ceil().max(0.0) as usize).min(ny - 1);
        for (j, row) in rows.iter_mut().enumerate().take(j1 + 1).skip(j0) {
            if let Some(c) = crossing(a, bb, yc(j)) {
                row.push(c);
            }
        }
    }
    let values: Vec<i64> = rows
        .into_par_iter()
        .flat_map_iter(|mut row| {
            row.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut out = vec![0i64; nx];
            let mut w = 0;
            let mut k = row.len();
            for i in (0..nx).rev() {
                let x = xc(i);
                while k > 0 && row[k - 1].0 > x {
                    k -= 1;
                    w += row[k].1;
                }
                out[i] = w;
            }
            out
        })
        .collect();

    let mut mask = vec![false; nx * ny];
    let r = 0.5 * cell[0].hypot(cell[1]);
    for (a, bb) in curve.segments() {
        let i0 = (((a.0.min(bb.0) - r - lo[0]) / cell[0] - 0.5).floor().max(0.0)) as usize;
        let i1 = (((a.0.max(bb.0) + r - lo[0]) / cell[0] - 0.5).ceil().max(0.0) as usize).min(nx - 1);
        let j0 = (((a.1.min(bb.1) - r - lo[1]) / cell[1] - 0.5).floor().max(0.0)) as usize;
        let j1 = (((a.1.max(bb.1) + r - lo[1]) / cell[1] - 0.5).ceil().max(0.0) as usize).min(ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if segment_distance((xc(i), yc(j)), a, bb) < r {
                    mask[j * nx + i] = true;
                }
            }
        }
    }
    Ok(WindingField { lo, cell, nx, ny, values, mask })
}

/// ∫ v(y) w(curve, y) dy over the plane, exact up to quadrature of v.
///
/// The plane is cut into horizontal bands between consecutive vertex heights. Inside
/// a band every crossing moves linearly, so Gauss points in y integrate the winding
/// length exactly; v is integrated along each x interval with five-point panels no
/// wider than diameter/2048.
pub fn winding_integral<V: Fn(f64, f64) -> f64 + Sync>(curve: &ClosedCurve2D, v: V) -> f64 {
    winding_integral_panels(curve, v, curve.diameter() / 2048.0)
}

/// [`winding_integral`] with an explicit panel width for the x quadrature.
pub fn winding_integral_panels<V: Fn(f64, f64) -> f64 + Sync>(curve: &ClosedCurve2D, v: V, panel: f64) -> f64 {
    let segs: Vec<((f64, f64), (f64, f64))> = curve.segments().filter(|(a, b)| a.1 != b.1).collect();
    if segs.is_empty() {
        return 0.0;
    }
    let mut ys: Vec<f64> = segs.iter().flat_map(|(a, b)| [a.1, b.1]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by(|&p, &q| segs[p].0 .1.min(segs[p].1 .1).total_cmp(&segs[q].0 .1.min(segs[q].1 .1)));
    // active segment lists per band, built by a sweep
    let mut bands: Vec<(f64, f64, Vec<usize>)> = Vec::with_capacity(ys.len());
    let mut active: Vec<usize> = Vec::new();
    let mut next = 0;
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        while next < order.len() && segs[order[next]].0 .1.min(segs[order[next]].1 .1) <= y0 {
            active.push(order[next]);
            next += 1;
        }
        active.retain(|&s| segs[s].0 .1.max(segs[s].1 .1) >= y1);
        bands.push((y0, y1, active.clone()));
    }
    bands
        .par_iter()
        .map(|(y0, y1, act)| {
            let (mid, half) = (0.5 * (y0 + y1), 0.5 * (y1 - y0));
            let mut total = 0.0;
            for (g, wg) in GL3 {
                let y = mid + half * g;
                let mut cr: Vec<(f64, i64)> = act
                    .iter()
                    .map(|&s| {
                        let (a, b) = segs[s];
                        let sign = if b.1 > a.1 { 1 } else { -1 };
                        (a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1), sign)
                    })
                    .collect();
                cr.sort_by(|p, q| p.0.total_cmp(&q.0));
                let mut w = 0;
                let mut line = 0.0;
                for k in (1..cr.len()).rev() {
                    w += cr[k].1;
                    if w != 0 {
                        let (a, b) = (cr[k - 1].0, cr[k].0);
                        let pieces = ((b - a) / panel).ceil().max(1.0) as usize;
                        let step = (b - a) / pieces as f64;
                        for p in 0..pieces {
                            let x0 = a + p as f64 * step;
                            line += w as f64 * gl5(x0, x0 + step, |x| v(x, y));
                        }
                    }
                }
                total += wg * line;
            }
            total * half
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Both sides of the Green identity for a closed curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenArea {
    /// ½∫ x dy − y dx by extrapolated Riemann–Stieltjes sums
    pub value: f64,
    pub error_estimate: f64,
    pub rs_levels: Vec<Level>,
    /// the same integral by mollification, when the samples are uniform
    pub mollified: Option<f64>,
    pub mollified_error: Option<f64>,
    pub warnings: Vec<String>,
}

/// ½∫ γ^x dγ^y − γ^y dγ^x for a curve with α-Hölder components, α > 1/2.
pub fn oriented_area_green(curve: &ClosedCurve2D, alpha: f64) -> Result<GreenArea> {
    if !(2.0 * alpha > 1.0) {
        return Err(Error::YoungCondition(2.0 * alpha));
    }
    let p = curve.path();
    let (x, y) = (p.component(0), p.component(1));
    let depth = auto_depth(p.intervals(), 6);
    let rs = levy_area_rs(&x, &y, depth, 2.0 * alpha - 1.0)?;
    let mut warnings = Vec::new();
    if depth < 3 {
        warnings.push(format!("only {} dyadic levels available; no useful extrapolation", depth + 1));
    }
    let (mut mollified, mut mollified_error) = (None, None);
    if let Some(h) = p.uniform_spacing() {
        if p.intervals() >= 256 {
            let eps = dyadic_eps(64.0 * h, 5);
            let k = MollifierKernel::default();
            let xs = p.select(&[0])?;
            let ys = p.select(&[1])?;
            let a = young_mollified(&xs, &ys, &eps, &k, Some(alpha), Some(alpha))?;
            let b = young_mollified(&ys, &xs, &eps, &k, Some(alpha), Some(alpha))?;
            mollified = Some(0.5 * (a.value - b.value));
            mollified_error = Some(0.5 * (a.error_estimate + b.error_estimate));
        }
    }
    Ok(GreenArea {
        value: rs.value,
        error_estimate: rs.error_estimate,
        rs_levels: rs.levels,
        mollified,
        mollified_error,
        warnings,
    })
}

/// Completion of a planar path by the segments 0 → η(a) and η(b) → 0,
/// parametrized on [a − 1, b + 1].
pub fn close_curve(path: &SampledPath) -> Result<ClosedCurve2D> {
    if path.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("close_curve takes planar paths, got R^{}", path.dim())));
    }
    let mut times = vec![path.start() - 1.0];
    times.extend_from_slice(path.times());
    times.push(path.end() + 1.0);
    let mut values = vec![0.0, 0.0];
    values.extend_from_slice(path.values());
    values.extend_from_slice(&[0.0, 0.0]);
    ClosedCurve2D::new(SampledPath::new(times, 2, values)?)
}

/// Riemann-sum Jacobian Σ_i f(p_i) ∮_{∂Q_i} g1 dg2 over k×k subsquares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianSum {
    pub value: f64,
    pub error_estimate: f64,
    /// param = 1/k
    pub levels: Vec<Level>,
    pub rate: Option<f64>,
}

/// Boundary integrals use the antisymmetric sums ½(g1_i g2_j − g2_i g1_j) over the
/// grid nodes on each subsquare boundary, so swapping g1 and g2 flips the sign
/// exactly. Tags are subsquare centres. `ks` must increase by factors of two and
/// divide the number of grid intervals.
pub fn zust_jacobian_square(
    f: &GridMap,
    g1: &GridMap,
    g2: &GridMap,
    ks: &[usize],
    alpha: f64,
    beta: f64,
) -> Result<JacobianSum> {
    if !(alpha + 2.0 * beta > 2.0) {
        return Err(Error::YoungCondition(alpha + 2.0 * beta - 1.0));
    }
    for g in [f, g1, g2] {
        if g.dim() != 2 || g.ncomp() != 1 {
            return Err(Error::DimensionMismatch("Jacobian sums take scalar fields on a square".into()));
        }
    }
    if g1.shape() != g2.shape() || g1.lo() != g2.lo() || g1.hi() != g2.hi() {
        return Err(Error::DimensionMismatch("g1 and g2 live on different grids".into()));
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(precondition("subdivision counts must double from level to level"));
    }
    let (n0, n1) = (g1.shape()[0] - 1, g1.shape()[1] - 1);
    let (v1, v2) = (g1.values(), g2.values());
    let node = |i: usize, j: usize| i * (n1 + 1) + j;
    let mut levels = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 || n0 % k != 0 || n1 % k != 0 {
            return Err(precondition(format!("{k} subsquares per side do not fit the {n0}x{n1} grid")));
        }
        let (s0, s1) = (n0 / k, n1 / k);
        let total: f64 = (0..k * k)
            .into_par_iter()
            .map(|q| {
                let (a, b) = (q / k, q % k);
                let (i0, j0) = (a * s0, b * s1);
                // counter-clockwise in (axis 0, axis 1)
                let mut loop_nodes = Vec::with_capacity(2 * (s0 + s1) + 1);
                loop_nodes.extend((0..s0).map(|t| node(i0 + t, j0)));
                loop_nodes.extend((0..s1).map(|t| node(i0 + s0, j0 + t)));
                loop_nodes.extend((0..s0).map(|t| node(i0 + s0 - t, j0 + s1)));
                loop_nodes.extend((0..s1).map(|t| node(i0, j0 + s1 - t)));
                loop_nodes.push(node(i0, j0));
                let area: f64 = loop_nodes.windows(2).map(|w| v1[w[0]] * v2[w[1]] - v2[w[0]] * v1[w[1]]).sum::<f64>() * 0.5;
                let c = [
                    g1.lo()[0] + (i0 as f64 + 0.5 * s0 as f64) * g1.spacing(0),
                    g1.lo()[1] + (j0 as f64 + 0.5 * s1 as f64) * g1.spacing(1),
                ];
                f.interpolate(&c)[0] * area
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        levels.push(Level { param: 1.0 / k as f64, value: total });
    }
    let vals: Vec<f64> = levels.iter().map(|l| l.value).collect();
    let (value, error_estimate, rate) = extrapolate(&vals, 2.0, alpha + 2.0 * beta - 2.0);
    Ok(JacobianSum { value, error_estimate, levels, rate })
}

/// Both sides of ∫(v∘f)J_f = ∫ v·w(f|∂B², y) dy on the unit disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeOfVariables {
    /// extrapolated limit of ∫_{B²} (v∘f_ε) J_{f_ε}
    pub lhs: f64,
    pub lhs_error: f64,
    pub lhs_levels: Vec<Level>,
    /// ∫ v·w over the plane for the sampled boundary curve
    pub rhs: f64,
    /// the same from the masked winding field
    pub rhs_field: f64,
    pub mask_bound: f64,
    pub gap: f64,
}

/// `f` maps a box containing the closed unit disk (plus the largest ε) to R².
/// `gamma` is the declared Hölder exponent of f.
pub fn change_of_variables_check<V: Fn(f64, f64) -> f64 + Sync>(
    f: &GridMap,
    v: V,
    eps: &[f64],
    gamma: f64,
    kernel: &MollifierKernel,
) -> Result<ChangeOfVariables> {
    if !(2.0 * gamma > 1.0) {
        return Err(Error::YoungCondition(2.0 * gamma));
    }
    if f.dim() != 2 || f.ncomp() != 2 {
        return Err(Error::DimensionMismatch("change of variables takes maps from R^2 to R^2".into()));
    }
    if eps.is_empty() || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(precondition("eps sequence must be non-empty and strictly decreasing"));
    }
    let reach = 1.0 + eps[0];
    if (0..2).any(|a| f.lo()[a] > -reach || f.hi()[a] < reach) {
        return Err(precondition("grid box must contain the unit disk widened by the largest eps"));
    }
    let h = f.spacing(0).max(f.spacing(1));

    // boundary curve f|∂B²
    let nb = (16 * f.shape()[0].max(f.shape()[1])).next_power_of_two();
    let curve = ClosedCurve2D::from_fn(nb, |s| {
        let th = std::f64::consts::TAU * s;
        let p = f.interpolate(&[th.cos(), th.sin()]);
        (p[0], p[1])
    })?;
    let rhs = winding_integral(&curve, &v);
    let field = winding_field(&curve, f.shape()[0].max(f.shape()[1]).max(16))?;
    let rhs_field = field.integral_with(&v);

    // polar quadrature of the mollified Jacobian
    let radial = composite_gl5(0.0, 1.0, (1.0 / h).ceil() as usize);
    let nth = ((std::f64::consts::TAU / h).ceil() as usize * 2).next_power_of_two();
    let mut lhs_levels = Vec::with_capacity(eps.len());
    for &e in eps {
        let fe = mollify_grid(f, e, kernel)?;
        let ge = mollify_grid_gradient(f, e, kernel)?;
        let value: f64 = radial
            .par_iter()
            .map(|&(r, wr)| {
                let mut ring = 0.0;
                let (mut p, mut d) = ([0.0; 2], [0.0; 4]);
                for q in 0..nth {
                    let th = std::f64::consts::TAU * (q as f64 + 0.5) / nth as f64;
                    let x = [r * th.cos(), r * th.sin()];
                    fe.interpolate_into(&x, &mut p);
                    ge.interpolate_into(&x, &mut d);
                    ring += v(p[0], p[1]) * (d[0] * d[3] - d[1] * d[2]);
                }
                ring * wr * r * std::f64::consts::TAU / nth as f64
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        lhs_levels.push(Level { param: e, value });
    }
    let vals: Vec<f64> = lhs_levels.iter().map(|l| l.value).collect();
    let ratio = if eps.len() >= 2 { eps[eps.len() - 2] / eps[eps.len() - 1] } else { 2.0 };
    let (lhs, lhs_error, _) = extrapolate(&vals, ratio, 2.0 * gamma - 1.0);
    Ok(ChangeOfVariables {
        lhs,
        lhs_error,
        lhs_levels,
        rhs,
        rhs_field,
        mask_bound: field.mask_bound(),
        gap: (lhs - rhs).abs(),
    })
}

/// L^p norm of the winding function, with a warning when p ≥ 2γ.
pub fn winding_lp_norm(curve: &ClosedCurve2D, p: f64, gamma: f64, resolution: usize) -> Result<(f64, Vec<String>)> {
    if !(p >= 1.0) {
        return Err(precondition(format!("p = {p} below 1")));
    }
    let mut warnings = Vec::new();
    if p >= 2.0 * gamma {
        warnings.push(format!("p = {p} outside the integrable range p < 2γ = {}", 2.0 * gamma));
    }
    Ok((winding_field(curve, resolution)?.lp_norm(p), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn circle(n: usize, r: f64) -> ClosedCurve2D {
        ClosedCurve2D::from_fn(n, |s| (r * (TAU * s).cos(), r * (TAU * s).sin())).unwrap()
    }

    #[test]
    fn circle_windings() {
        let c = circle(256, 1.0);
        assert_eq!(winding_number(&c, (0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_number(&c, (3.0, 0.0)).unwrap(), 0);
        assert_eq!(winding_number(&c.reversed(), (0.1, 0.2)).unwrap(), -1);
        let twice = ClosedCurve2D::from_fn(512, |s| ((2.0 * TAU * s).cos(), (2.0 * TAU * s).sin())).unwrap();
        assert_eq!(winding_number(&twice, (0.0, 0.0)).unwrap(), 2);
        assert!(matches!(winding_number(&c, (1.0, 0.0)), Err(Error::OnCurve(..))));
    }

    #[test]
    fn open_curve_rejected() {
        let p = SampledPath::from_fn(0.0, 1.0, 10, 2, |t| vec![t, 0.0]).unwrap();
        assert!(ClosedCurve2D::new(p).is_err());
    }

    #[test]
    fn field_matches_pointwise() {
        // figure eight: ccw right lobe, cw left lobe
        let c = ClosedCurve2D::from_fn(400, |s| ((TAU * s).sin(), (TAU * s).sin() * (TAU * s).cos())).unwrap();
        let f = winding_field(&c, 40).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for j in 0..f.ny {
            for i in 0..f.nx {
                let k = j * f.nx + i;
                if f.mask[k] {
                    continue;
                }
                let w = winding_number(&c, f.center(i, j)).unwrap();
                assert_eq!(w, f.values[k], "cell {i},{j}");
                seen.insert(w);
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![-1, 0, 1]);
    }

    #[test]
    fn field_border_is_zero_and_mask_shrinks() {
        let c = circle(1024, 1.0);
        let coarse = winding_field(&c, 32).unwrap();
        let fine = winding_field(&c, 256).unwrap();
        for f in [&coarse, &fine] {
            for i in 0..f.nx {
                assert_eq!(f.values[i], 0);
                assert_eq!(f.values[(f.ny - 1) * f.nx + i], 0);
            }
        }
        assert!(fine.mask_area() < 0.2 * coarse.mask_area());
        assert!((fine.integral() - PI).abs() <= fine.mask_bound());
    }

    #[test]
    fn band_integral_is_exact_for_polygons() {
        let square = ClosedCurve2D::from_points(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]).unwrap();
        assert!((winding_integral(&square, |_, _| 1.0) - 2.0).abs() < 1e-12);
        // ∫∫ x over the rectangle
        assert!((winding_integral(&square, |x, _| x) - 2.0).abs() < 1e-13);
        let c = circle(4096, 1.0);
        assert!((winding_integral(&c, |_, _| 1.0) - c.shoelace()).abs() < 1e-12);
        let eight = ClosedCurve2D::from_fn(500, |s| ((TAU * s).sin(), (TAU * s).sin() * (TAU * s).cos())).unwrap();
        assert!((winding_integral(&eight, |_, _| 1.0) - eight.shoelace()).abs() < 1e-12);
    }

    #[test]
    fn green_area_of_circle() {
        let c = circle(1 << 12, 1.0);
        let g = oriented_area_green(&c, 1.0).unwrap();
        assert!((g.value - PI).abs() < 1e-9, "{}", g.value);
        assert!((g.mollified.unwrap() - PI).abs() < 1e-6, "{:?}", g.mollified);
        let r = oriented_area_green(&c.reversed(), 1.0).unwrap();
        assert!((r.value + g.value).abs() < 1e-11, "{} {}", r.value, g.value);
        assert!(oriented_area_green(&c, 0.5).is_err());
    }

    #[test]
    fn close_curve_cases() {
        let seg = SampledPath::from_fn(0.0, 1.0, 8, 2, |t| vec![1.0 - t, t]).unwrap();
        let c = close_curve(&seg).unwrap();
        assert!((c.shoelace() - 0.5).abs() < 1e-15);
        let pt = SampledPath::from_fn(0.0, 1.0, 1, 2, |_| vec![1.0, 0.0]).unwrap();
        assert_eq!(close_curve(&pt).unwrap().shoelace(), 0.0);
        // a loop through the origin keeps its area
        let through = SampledPath::from_fn(0.0, 1.0, 256, 2, |s| vec![1.0 - (TAU * s).cos(), (TAU * s).sin()]).unwrap();
        let closed = ClosedCurve2D::new(through.clone()).unwrap();
        assert!((close_curve(&through).unwrap().shoelace() - closed.shoelace()).abs() < 1e-14);
    }

    fn square_grid<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> GridMap {
        GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![n + 1, n + 1], 1, |x| vec![f(x[0], x[1])]).unwrap()
    }

    #[test]
    fn jacobian_identity_and_swap() {
        let one = square_grid(64, |_, _| 1.0);
        let gx = square_grid(64, |x, _| x);
        let gy = square_grid(64, |_, y| y);
        let j = zust_jacobian_square(&one, &gx, &gy, &[1, 2, 4, 8], 1.0, 1.0).unwrap();
        assert!((j.value - 1.0).abs() < 1e-14);
        let f = square_grid(64, |x, y| (x * y).cos());
        let g1 = square_grid(64, |x, y| x + 0.2 * (3.0 * y).sin());
        let g2 = square_grid(64, |x, y| y + 0.1 * x * x);
        let a = zust_jacobian_square(&f, &g1, &g2, &[2, 4, 8], 1.0, 1.0).unwrap();
        let b = zust_jacobian_square(&f, &g2, &g1, &[2, 4, 8], 1.0, 1.0).unwrap();
        for (p, q) in a.levels.iter().zip(&b.levels) {
            assert_eq!(p.value, -q.value);
        }
        assert!(zust_jacobian_square(&f, &g1, &g2, &[2, 4], 0.5, 0.5).is_err());
    }

    #[test]
    fn identity_change_of_variables() {
        let f = GridMap::from_fn(vec![-1.25, -1.25], vec![1.25, 1.25], vec![101, 101], 2, |x| x.to_vec()).unwrap();
        let k = MollifierKernel::default();
        let r = change_of_variables_check(&f, |_, _| 1.0, &[0.2, 0.1], 1.0, &k).unwrap();
        assert!((r.lhs - PI).abs() < 1e-10, "{}", r.lhs);
        assert!((r.rhs - PI).abs() < 1e-4);
        let half = change_of_variables_check(&f, |x, _| if x > 0.0 { 1.0 } else { 0.0 }, &[0.2, 0.1], 1.0, &k).unwrap();
        assert!((half.lhs - PI / 2.0).abs() < 1e-3, "{}", half.lhs);
        assert!((half.rhs - PI / 2.0).abs() < 1e-3, "{}", half.rhs);
    }

    #[test]
    fn lp_norms_of_circle() {
        let c = circle(2048, 1.0);
        let (l1, w1) = winding_lp_norm(&c, 1.0, 1.0, 512).unwrap();
        assert!(w1.is_empty());
        assert!((l1 - PI).abs() < 2e-2);
        let (l2, _) = winding_lp_norm(&c, 2.0, 1.0, 512).unwrap();
        assert!((l2 - PI.sqrt()).abs() < 1e-2);
        let (_, w) = winding_lp_norm(&c, 1.8, 0.8, 64).unwrap();
        assert_eq!(w.len(), 1);
    }
}
