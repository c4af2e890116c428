//! Horizontal curves in H^n: height change, residuals, lifts of curves and
//! maps, and decay of mollified contact pullbacks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::exterior::{combinations, Covector};
use crate::holder::{
    estimate_holder_exponent, grid_seminorm, ls_slope, mollify_grid, mollify_grid_gradient, GridMap, MollifierKernel,
    SampledPath, TargetMetric,
};
use crate::planar::{close_curve, winding_field, winding_integral, ClosedCurve2D};
use crate::young::{auto_depth, levy_area_rs};

/// A sampled curve in H^n = R^{2n+1}, coordinates (x1, y1, …, xn, yn, t).
#[derive(Debug, Clone, PartialEq)]
pub struct HPath {
    path: SampledPath,
}

impl HPath {
    pub fn new(path: SampledPath) -> Result<Self> {
        if path.dim() < 3 || path.dim().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!("H^n paths need 2n+1 components, got {}", path.dim())));
        }
        Ok(HPath { path })
    }

    pub fn n(&self) -> usize {
        self.path.dim() / 2
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn into_path(self) -> SampledPath {
        self.path
    }

    pub fn planar(&self) -> SampledPath {
        let comps: Vec<usize> = (0..2 * self.n()).collect();
        self.path.select(&comps).expect("planar components exist")
    }

    pub fn height(&self) -> Vec<f64> {
        self.path.component(2 * self.n())
    }
}

/// ∫ x dy − y dx over each sample interval from local quadratic interpolants.
///
/// On [i, i+1] the quadratics through i−1, i, i+1 and through i, i+1, i+2 are
/// integrated exactly and averaged; the end intervals use the one available fit.
/// Fewer than three samples fall back to the chord.
pub fn area_increments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 3 {
        return (0..n.saturating_sub(1)).map(|i| x[i] * y[i + 1] - y[i] * x[i + 1]).collect();
    }
    // fit centred at c, integrated over u ∈ [0, 1] (forward) or [−1, 0]
    let fit = |c: usize, forward: bool| {
        let (x0, y0) = (x[c], y[c]);
        let a = 0.5 * (x[c + 1] - x[c - 1]);
        let b = 0.5 * (x[c + 1] - 2.0 * x0 + x[c - 1]);
        let cc = 0.5 * (y[c + 1] - y[c - 1]);
        let d = 0.5 * (y[c + 1] - 2.0 * y0 + y[c - 1]);
        let lin = x0 * cc - y0 * a;
        let quad = x0 * d - y0 * b;
        let top = (a * d - b * cc) / 3.0;
        if forward { lin + quad + top } else { lin - quad + top }
    };
    (0..n - 1)
        .map(|i| {
            let left = (i >= 1).then(|| fit(i, true));
            let right = (i + 2 < n).then(|| fit(i + 1, false));
            match (left, right) {
                (Some(l), Some(r)) => 0.5 * (l + r),
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!(),
            }
        })
        .collect()
}

/// Per-interval height increments −2 Σ_j ∫ x_j dy_j − y_j dx_j of the planar part.
pub fn height_increments(planar: &SampledPath) -> Result<Vec<f64>> {
    if !planar.dim().is_multiple_of(2) || planar.dim() == 0 {
        return Err(Error::DimensionMismatch(format!("planar part needs 2n components, got {}", planar.dim())));
    }
    let mut inc = vec![0.0; planar.intervals()];
    for j in 0..planar.dim() / 2 {
        let a = area_increments(&planar.component(2 * j), &planar.component(2 * j + 1));
        inc.iter_mut().zip(a).for_each(|(s, v)| *s -= 2.0 * v);
    }
    Ok(inc)
}

fn resolve_alpha(planar: &SampledPath, alpha: Option<f64>, warnings: &mut Vec<String>) -> Result<f64> {
    let a = match alpha.or(planar.gamma()) {
        Some(a) => a,
        None => {
            let a = estimate_holder_exponent(planar)?;
            warnings.push(format!("planar exponent not declared; estimated {a:.3}"));
            a
        }
    };
    if !(2.0 * a > 1.0) {
        return Err(Error::YoungCondition(2.0 * a));
    }
    Ok(a)
}

fn index_of(path: &SampledPath, t: f64) -> Result<usize> {
    let ts = path.times();
    let tol = 1e-9 * (path.end() - path.start());
    let i = ts.partition_point(|&s| s < t - tol);
    if i < ts.len() && (ts[i] - t).abs() <= tol {
        Ok(i)
    } else {
        Err(precondition(format!("time {t} is not a sample time")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightChange {
    /// −4 Σ_j of the extrapolated Lévy areas
    pub value: f64,
    pub error_estimate: f64,
    /// the same from summed quadratic-rule increments
    pub quadrature: f64,
    pub warnings: Vec<String>,
}

/// Height change −2 Σ_j ∫_a^b x_j dy_j − y_j dx_j forced on a horizontal curve.
/// `a` and `b` must be sample times. Only the planar components are read.
pub fn height_change(path: &HPath, a: f64, b: f64, alpha: Option<f64>) -> Result<HeightChange> {
    planar_height_change(&path.planar(), a, b, alpha)
}

pub fn planar_height_change(planar: &SampledPath, a: f64, b: f64, alpha: Option<f64>) -> Result<HeightChange> {
    let mut warnings = Vec::new();
    let al = resolve_alpha(planar, alpha, &mut warnings)?;
    let (i, j) = (index_of(planar, a)?, index_of(planar, b)?);
    if j < i {
        let r = planar_height_change(planar, b, a, Some(al))?;
        return Ok(HeightChange { value: -r.value, quadrature: -r.quadrature, ..r });
    }
    if i == j {
        return Ok(HeightChange { value: 0.0, error_estimate: 0.0, quadrature: 0.0, warnings });
    }
    let piece = planar.slice(i, j)?;
    let depth = auto_depth(j - i, 8);
    let (mut value, mut err) = (0.0, 0.0);
    for c in 0..planar.dim() / 2 {
        let r = levy_area_rs(&piece.component(2 * c), &piece.component(2 * c + 1), depth, 2.0 * al - 1.0)?;
        value -= 4.0 * r.value;
        err += 4.0 * r.error_estimate;
    }
    let inc = height_increments(planar)?;
    let quadrature: f64 = inc[i..j].iter().sum();
    Ok(HeightChange { value, error_estimate: err.max((value - quadrature).abs()), quadrature, warnings })
}

/// max_s |γ^t(s) − γ^t(a) − (height change from a to s)|, with the height change
/// accumulated from quadratic-rule increments.
pub fn horizontality_residual(path: &HPath, alpha: Option<f64>) -> Result<f64> {
    let planar = path.planar();
    resolve_alpha(&planar, alpha.or(path.path().gamma()), &mut Vec::new())?;
    let inc = height_increments(&planar)?;
    let t = path.height();
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for (k, d) in inc.iter().enumerate() {
        acc += d;
        worst = worst.max((t[k + 1] - t[0] - acc).abs());
    }
    Ok(worst)
}

/// Horizontal lift with γ^t(a) = t0.
pub fn horizontal_lift_curve(planar: &SampledPath, t0: f64, alpha: Option<f64>) -> Result<HPath> {
    let al = resolve_alpha(planar, alpha, &mut Vec::new())?;
    let inc = height_increments(planar)?;
    let mut heights = Vec::with_capacity(planar.len());
    heights.push(t0);
    for d in inc {
        heights.push(heights[heights.len() - 1] + d);
    }
    let mut comps: Vec<Vec<f64>> = (0..planar.dim()).map(|c| planar.component(c)).collect();
    comps.push(heights);
    HPath::new(SampledPath::from_components(planar.times().to_vec(), &comps)?.with_gamma(al))
}

/// Height change against −4 Σ_j ∫ w(close(γ_j), z) dz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaIdentity {
    pub height: f64,
    pub height_error: f64,
    /// −4 Σ_j of the exact winding integrals of the closed projections
    pub area_sum: f64,
    /// the same from masked winding fields
    pub field_area_sum: f64,
    pub field_bound: f64,
    pub holds: bool,
}

pub fn area_identity(path: &HPath, alpha: Option<f64>, resolution: usize) -> Result<AreaIdentity> {
    let planar = path.planar();
    let hc = planar_height_change(&planar, planar.start(), planar.end(), alpha)?;
    let (mut area_sum, mut field_area_sum, mut field_bound) = (0.0, 0.0, 0.0);
    for j in 0..path.n() {
        let closed = close_curve(&planar.select(&[2 * j, 2 * j + 1])?)?;
        area_sum -= 4.0 * winding_integral(&closed, |_, _| 1.0);
        if closed.diameter() > 0.0 {
            let f = winding_field(&closed, resolution)?;
            field_area_sum -= 4.0 * f.integral();
            field_bound += 4.0 * f.mask_bound();
        }
    }
    let slack = 1e-12 * (1.0 + hc.value.abs());
    let holds = (hc.value - area_sum).abs() <= hc.error_estimate + slack
        && (hc.value - field_area_sum).abs() <= hc.error_estimate + field_bound + slack;
    Ok(AreaIdentity { height: hc.value, height_error: hc.error_estimate, area_sum, field_area_sum, field_bound, holds })
}

/// Why a map could not be lifted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Obstruction {
    /// "probe" or "plaquette"
    pub kind: String,
    /// probe index, or the plaquette's lower-left node
    pub location: Vec<usize>,
    pub area_sum: f64,
    pub tolerance: f64,
    pub probe_areas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftOutcome {
    Lifted {
        /// the map with τ appended as the last component
        map: GridMap,
        probe_areas: Vec<f64>,
        max_plaquette: f64,
        /// max |τ_A − τ_B| over two different spanning trees
        tree_deviation: f64,
        tolerance: f64,
    },
    Obstructed(Obstruction),
}

/// Area sum Σ_j ∫ w(close((f∘η)_j), z) dz for a loop η given in domain coordinates.
pub fn probe_area(f: &GridMap, probe: &[(f64, f64)]) -> Result<f64> {
    let nc = f.ncomp();
    let mut comps = vec![Vec::with_capacity(probe.len()); nc];
    let mut buf = vec![0.0; nc];
    for p in probe {
        f.interpolate_into(&[p.0, p.1], &mut buf);
        for c in 0..nc {
            comps[c].push(buf[c]);
        }
    }
    let times: Vec<f64> = (0..probe.len()).map(|i| i as f64).collect();
    let mut total = 0.0;
    for j in 0..nc / 2 {
        let piece = SampledPath::from_components(times.clone(), &[comps[2 * j].clone(), comps[2 * j + 1].clone()])?;
        let closed = match ClosedCurve2D::new(piece.clone()) {
            Ok(c) => c,
            Err(_) => close_curve(&piece)?,
        };
        total += winding_integral(&closed, |_, _| 1.0);
    }
    Ok(total)
}

/// Lifts f: Ω → R^{2n} on a 2-D box grid to Ω → H^n by integrating the height
/// form along grid edges from `base` (node multi-index), after checking the
/// probe loops and every plaquette. `tolerance` defaults to 1e−6·|Ω|·[f]²_α.
pub fn lift_map(
    f: &GridMap,
    base: [usize; 2],
    t0: f64,
    probes: &[Vec<(f64, f64)>],
    alpha: f64,
    tolerance: Option<f64>,
) -> Result<LiftOutcome> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch("lift_map takes maps on a planar box grid".into()));
    }
    if !f.ncomp().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!("target must be R^2n, got R^{}", f.ncomp())));
    }
    if !(2.0 * alpha > 1.0) {
        return Err(Error::YoungCondition(2.0 * alpha));
    }
    let [n0, n1] = [f.shape()[0], f.shape()[1]];
    if base[0] >= n0 || base[1] >= n1 {
        return Err(precondition("basepoint outside the grid"));
    }
    let tol = match tolerance {
        Some(t) => t,
        None => {
            let area = (f.hi()[0] - f.lo()[0]) * (f.hi()[1] - f.lo()[1]);
            let scale = 4.0 * f.spacing(0).max(f.spacing(1));
            let semi = grid_seminorm(f, alpha, scale, TargetMetric::Euclidean)?;
            1e-6 * area * semi.max(1e-300).powi(2)
        }
    };
    let probe_areas: Vec<f64> = probes.iter().map(|p| probe_area(f, p)).collect::<Result<_>>()?;
    if let Some((k, &a)) = probe_areas.iter().enumerate().max_by(|p, q| p.1.abs().total_cmp(&q.1.abs())) {
        if a.abs() > tol {
            return Ok(LiftOutcome::Obstructed(Obstruction {
                kind: "probe".into(),
                location: vec![k],
                area_sum: a,
                tolerance: tol,
                probe_areas,
            }));
        }
    }

    // edge increments: along axis 0 (i → i+1) and axis 1 (j → j+1)
    let comps: Vec<Vec<f64>> = (0..f.ncomp()).map(|c| f.component(c)).collect();
    let node = |i: usize, j: usize| i * n1 + j;
    let line_increments = |nodes: &[usize]| -> Vec<f64> {
        let mut inc = vec![0.0; nodes.len() - 1];
        for p in 0..comps.len() / 2 {
            let x: Vec<f64> = nodes.iter().map(|&k| comps[2 * p][k]).collect();
            let y: Vec<f64> = nodes.iter().map(|&k| comps[2 * p + 1][k]).collect();
            for (s, v) in inc.iter_mut().zip(area_increments(&x, &y)) {
                *s -= 2.0 * v;
            }
        }
        inc
    };
    // e0[i][j]: (i,j) → (i+1,j); e1[i][j]: (i,j) → (i,j+1)
    let e0: Vec<Vec<f64>> = (0..n1)
        .into_par_iter()
        .map(|j| line_increments(&(0..n0).map(|i| node(i, j)).collect::<Vec<_>>()))
        .collect();
    let e1: Vec<Vec<f64>> = (0..n0)
        .into_par_iter()
        .map(|i| line_increments(&(0..n1).map(|j| node(i, j)).collect::<Vec<_>>()))
        .collect();
    let up0 = |i: usize, j: usize| e0[j][i];
    let up1 = |i: usize, j: usize| e1[i][j];

    let mut worst = (0usize, 0usize, 0.0f64);
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let s = up0(i, j) + up1(i + 1, j) - up0(i, j + 1) - up1(i, j);
            if s.abs() > worst.2.abs() {
                worst = (i, j, s);
            }
        }
    }
    if worst.2.abs() > tol {
        return Ok(LiftOutcome::Obstructed(Obstruction {
            kind: "plaquette".into(),
            location: vec![worst.0, worst.1],
            area_sum: worst.2,
            tolerance: tol,
            probe_areas,
        }));
    }

    // tree A: along axis 1 through the base row, then along axis 0 in every column
    let mut ta = vec![0.0; n0 * n1];
    ta[node(base[0], base[1])] = t0;
    for j in base[1] + 1..n1 {
        ta[node(base[0], j)] = ta[node(base[0], j - 1)] + up1(base[0], j - 1);
    }
    for j in (0..base[1]).rev() {
        ta[node(base[0], j)] = ta[node(base[0], j + 1)] - up1(base[0], j);
    }
    for j in 0..n1 {
        for i in base[0] + 1..n0 {
            ta[node(i, j)] = ta[node(i - 1, j)] + up0(i - 1, j);
        }
        for i in (0..base[0]).rev() {
            ta[node(i, j)] = ta[node(i + 1, j)] - up0(i, j);
        }
    }
    // tree B: the transposed comb
    let mut tb = vec![0.0; n0 * n1];
    tb[node(base[0], base[1])] = t0;
    for i in base[0] + 1..n0 {
        tb[node(i, base[1])] = tb[node(i - 1, base[1])] + up0(i - 1, base[1]);
    }
    for i in (0..base[0]).rev() {
        tb[node(i, base[1])] = tb[node(i + 1, base[1])] - up0(i, base[1]);
    }
    for i in 0..n0 {
        for j in base[1] + 1..n1 {
            tb[node(i, j)] = tb[node(i, j - 1)] + up1(i, j - 1);
        }
        for j in (0..base[1]).rev() {
            tb[node(i, j)] = tb[node(i, j + 1)] - up1(i, j);
        }
    }
    let tree_deviation = ta.iter().zip(&tb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = comps;
    out.push(ta);
    let map = f.from_components(&out)?;
    Ok(LiftOutcome::Lifted { map, probe_areas, max_plaquette: worst.2.abs(), tree_deviation, tolerance: tol })
}

fn check_target(f: &GridMap) -> Result<usize> {
    if f.ncomp() < 3 || f.ncomp().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!("target must be R^(2n+1), got R^{}", f.ncomp())));
    }
    Ok(f.ncomp() / 2)
}

/// Vector field ∇f_ε^t + 2 Σ_j (f_ε^{x_j} ∇f_ε^{y_j} − f_ε^{y_j} ∇f_ε^{x_j}), the
/// components of f_ε^*α, at every node.
pub fn pullback_alpha_mollified(f: &GridMap, eps: f64, kernel: &MollifierKernel) -> Result<GridMap> {
    let n = check_target(f)?;
    let m = f.dim();
    let fe = mollify_grid(f, eps, kernel)?;
    let ge = mollify_grid_gradient(f, eps, kernel)?;
    let vals: Vec<f64> = (0..f.node_count())
        .into_par_iter()
        .flat_map_iter(|k| {
            let v = fe.value(k);
            let d = ge.value(k);
            (0..m)
                .map(|a| {
                    let mut s = d[2 * n * m + a];
                    for j in 0..n {
                        s += 2.0 * (v[2 * j] * d[(2 * j + 1) * m + a] - v[2 * j + 1] * d[2 * j * m + a]);
                    }
                    s
                })
                .collect::<Vec<_>>()
        })
        .collect();
    f.with_values(m, vals)
}

/// f_ε^*κ for a constant-coefficient k-form κ on R^{2n+1}; components are the
/// dense coefficients on the k-subsets of the domain axes.
pub fn pullback_form_mollified(f: &GridMap, form: &Covector, eps: f64, kernel: &MollifierKernel) -> Result<GridMap> {
    check_target(f)?;
    if form.ambient_dim() != f.ncomp() {
        return Err(Error::DimensionMismatch(format!("form on R^{} for a map into R^{}", form.ambient_dim(), f.ncomp())));
    }
    let m = f.dim();
    let k = form.degree();
    let subsets = combinations(m, k);
    if subsets.is_empty() {
        return f.with_values(1, vec![0.0; f.node_count()]);
    }
    let ge = mollify_grid_gradient(f, eps, kernel)?;
    let nc = f.ncomp();
    let vals: Vec<f64> = (0..f.node_count())
        .into_par_iter()
        .flat_map_iter(|node| {
            let d = ge.value(node);
            subsets
                .iter()
                .map(|s| {
                    let cols: Vec<Vec<f64>> = s.iter().map(|&a| (0..nc).map(|c| d[c * m + a as usize]).collect()).collect();
                    form.eval(&cols).unwrap_or(f64::NAN)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    f.with_values(subsets.len(), vals)
}

/// Which pulled-back form a decay experiment measures.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayForm {
    ContactAlpha,
    Generic(Covector),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub form: String,
    pub gamma: f64,
    pub eps_values: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub fitted_slope: f64,
    pub reference_slope: f64,
    /// fitted ≥ reference − 0.1
    pub passed: bool,
    /// nodes within this distance of the box boundary are excluded
    pub margin: f64,
    pub limitation: String,
}

/// sup over interior nodes of the pointwise norm of f_ε^*form, fitted in log–log
/// against ε. The reference slope is 2γ − 1 for the contact form and −k(1 − γ)
/// for a k-form.
pub fn decay_exponent_fit(f: &GridMap, form: &DecayForm, eps: &[f64], gamma: f64, kernel: &MollifierKernel) -> Result<DecayReport> {
    check_target(f)?;
    if eps.len() < 4 || eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(precondition("need at least 4 strictly decreasing positive eps values"));
    }
    // six octaves, so that 2^-4..2^-10 qualifies
    if eps[0] / eps[eps.len() - 1] < 64.0 * (1.0 - 1e-12) {
        return Err(precondition("eps values must span at least a factor of 64"));
    }
    let margin = 2.0 * eps[0];
    let m = f.dim();
    let interior: Vec<usize> = (0..f.node_count())
        .filter(|&k| {
            let x = f.coords(k);
            (0..m).all(|a| x[a] - f.lo()[a] >= margin - 1e-12 && f.hi()[a] - x[a] >= margin - 1e-12)
        })
        .collect();
    if interior.is_empty() {
        return Err(precondition("no grid nodes keep a margin of twice the largest eps"));
    }
    let (name, reference) = match form {
        DecayForm::ContactAlpha => ("contact_alpha".to_string(), 2.0 * gamma - 1.0),
        DecayForm::Generic(k) => (format!("generic_{}_form", k.degree()), -(k.degree() as f64) * (1.0 - gamma)),
    };
    let mut sup_norms = Vec::with_capacity(eps.len());
    for &e in eps {
        let g = match form {
            DecayForm::ContactAlpha => pullback_alpha_mollified(f, e, kernel)?,
            DecayForm::Generic(k) => pullback_form_mollified(f, k, e, kernel)?,
        };
        let sup = interior
            .iter()
            .map(|&k| g.value(k).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        sup_norms.push(sup);
    }
    if sup_norms.iter().all(|&s| s < 1e-14) {
        return Err(precondition("degenerate fit: every sup norm is below 1e-14"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        eps.iter().zip(&sup_norms).filter(|(_, &s)| s > 0.0).map(|(e, s)| (e.ln(), s.ln())).unzip();
    let fitted_slope = ls_slope(&x, &y);
    Ok(DecayReport {
        form: name,
        gamma,
        eps_values: eps.to_vec(),
        sup_norms,
        fitted_slope,
        reference_slope: reference,
        passed: fitted_slope >= reference - 0.1,
        margin,
        limitation: "finite data cannot separate convergence to zero without a rate from slow blow-up; \
                     the slope is evidence, not a membership test"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::weierstrass_path;
    use std::f64::consts::{PI, TAU};

    fn helix(n: usize) -> HPath {
        let p = SampledPath::from_fn(0.0, 1.0, n, 3, |s| vec![(TAU * s).cos(), (TAU * s).sin(), -4.0 * PI * s]).unwrap();
        HPath::new(p).unwrap()
    }

    #[test]
    fn circle_height() {
        let h = helix(1 << 12);
        let hc = height_change(&h, 0.0, 1.0, Some(1.0)).unwrap();
        assert!((hc.value + 4.0 * PI).abs() < 1e-9, "{}", hc.value);
        assert!((hc.quadrature + 4.0 * PI).abs() < 1e-9);
        assert!(horizontality_residual(&h, Some(1.0)).unwrap() < 1e-6);
        let lift = horizontal_lift_curve(&h.planar(), 0.0, Some(1.0)).unwrap();
        assert!((lift.height()[lift.height().len() - 1] + 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn constant_and_vertical() {
        let v = HPath::new(SampledPath::from_fn(0.0, 1.0, 64, 3, |s| vec![0.3, -0.2, 2.0 * s]).unwrap()).unwrap();
        assert_eq!(height_change(&v, 0.0, 1.0, Some(1.0)).unwrap().value, 0.0);
        assert!((horizontality_residual(&v, Some(1.0)).unwrap() - 2.0).abs() < 1e-15);
        let lift = horizontal_lift_curve(&v.planar(), 1.5, Some(1.0)).unwrap();
        assert!(lift.height().iter().all(|&t| t == 1.5));
    }

    #[test]
    fn young_condition_enforced() {
        let h = helix(64);
        assert!(matches!(height_change(&h, 0.0, 1.0, Some(0.5)), Err(Error::YoungCondition(_))));
        assert!(height_change(&h, 0.0, 0.3, Some(1.0)).is_err());
    }

    #[test]
    fn lift_properties() {
        let w = weierstrass_path(0.75, 2, 12, 1 << 12, 4, 3).unwrap();
        let lift = horizontal_lift_curve(&w, 0.0, None).unwrap();
        assert!(horizontality_residual(&lift, None).unwrap() < 1e-9);
        // uniqueness up to a vertical constant
        let other = horizontal_lift_curve(&w, 2.5, None).unwrap();
        let dev = lift.height().iter().zip(other.height()).map(|(a, b)| (b - a - 2.5).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9);
        // dilation: planar × r, heights × r²
        let r = 1.7;
        let scaled = SampledPath::new(w.times().to_vec(), 4, w.values().iter().map(|v| r * v).collect()).unwrap();
        let ls = horizontal_lift_curve(&scaled, 0.0, Some(0.75)).unwrap();
        let dev = lift.height().iter().zip(ls.height()).map(|(a, b)| (b - r * r * a).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9);
        // concatenation
        let p = lift.planar();
        let whole = planar_height_change(&p, 0.0, 1.0, None).unwrap();
        let a = planar_height_change(&p, 0.0, 0.5, None).unwrap();
        let b = planar_height_change(&p, 0.5, 1.0, None).unwrap();
        assert!((whole.value - a.value - b.value).abs() <= whole.error_estimate + a.error_estimate + b.error_estimate);
    }

    #[test]
    fn quadratic_rule_is_exact_for_parabola_pairs() {
        // x = s, y = s²: ∫_0^1 x dy − y dx = 2/3 − 1/3
        let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = s.iter().map(|v| v * v).collect();
        let total: f64 = area_increments(&s, &y).iter().sum();
        assert!((total - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn area_identity_on_loop() {
        let h = helix(1 << 10);
        let id = area_identity(&h, Some(1.0), 256).unwrap();
        assert!(id.holds, "{id:?}");
        assert!((id.area_sum + 4.0 * PI).abs() < 1e-4);
    }

    fn disk_probe(r: f64, n: usize) -> Vec<(f64, f64)> {
        (0..=n).map(|i| {
            let th = TAU * (i % n) as f64 / n as f64;
            (r * th.cos(), r * th.sin())
        }).collect()
    }

    #[test]
    fn lift_map_cases() {
        let flat = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![17, 17], 2, |x| vec![x[0], 0.0]).unwrap();
        match lift_map(&flat, [0, 0], 0.7, &[disk_probe(0.3, 64)], 1.0, None).unwrap() {
            LiftOutcome::Lifted { map, .. } => assert!(map.component(2).iter().all(|&t| (t - 0.7).abs() < 1e-15)),
            other => panic!("{other:?}"),
        }
        let id = GridMap::from_fn(vec![-1.1, -1.1], vec![1.1, 1.1], vec![45, 45], 2, |x| x.to_vec()).unwrap();
        match lift_map(&id, [22, 22], 0.0, &[disk_probe(1.0, 4096)], 1.0, None).unwrap() {
            LiftOutcome::Obstructed(o) => {
                assert_eq!(o.kind, "probe");
                assert!((o.area_sum - PI).abs() < 1e-3);
            }
            other => panic!("{other:?}"),
        }
        // no probes: the plaquettes still catch it
        assert!(matches!(lift_map(&id, [0, 0], 0.0, &[], 1.0, None).unwrap(), LiftOutcome::Obstructed(_)));
    }

    #[test]
    fn lagrangian_graph_lifts() {
        // (u, φ_u, v, φ_v) with φ = sin(u)cos(2v)
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![65, 65], 4, |x| {
            let (u, v) = (x[0], x[1]);
            vec![u, u.cos() * (2.0 * v).cos(), v, -2.0 * u.sin() * (2.0 * v).sin()]
        })
        .unwrap();
        match lift_map(&g, [32, 10], 0.0, &[disk_probe(0.2, 256).iter().map(|p| (p.0 + 0.5, p.1 + 0.5)).collect()], 1.0, None)
            .unwrap()
        {
            LiftOutcome::Lifted { tree_deviation, map, .. } => {
                assert!(tree_deviation < 1e-6, "{tree_deviation}");
                // τ = −2(uφ_u + vφ_v − 2φ) + const
                let exact = |u: f64, v: f64| {
                    let phi = u.sin() * (2.0 * v).cos();
                    -2.0 * (u * u.cos() * (2.0 * v).cos() - 2.0 * v * u.sin() * (2.0 * v).sin() - 2.0 * phi)
                };
                let base = exact(0.5, 10.0 / 64.0);
                for k in (0..map.node_count()).step_by(97) {
                    let x = map.coords(k);
                    assert!((map.value(k)[4] - (exact(x[0], x[1]) - base)).abs() < 1e-6);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vertical_line_pullback() {
        let f = GridMap::from_fn(vec![0.0], vec![1.0], vec![1025], 3, |x| vec![0.0, 0.0, x[0]]).unwrap();
        let k = MollifierKernel::default();
        let g = pullback_alpha_mollified(&f, 0.05, &k).unwrap();
        assert!((g.value(512)[0] - 1.0).abs() < 1e-12);
        let r = decay_exponent_fit(&f, &DecayForm::ContactAlpha, &[0.2, 0.05, 0.01, 0.002], 0.5, &k).unwrap();
        assert!(r.fitted_slope.abs() < 0.05);
        let c = GridMap::from_fn(vec![0.0], vec![1.0], vec![65], 3, |_| vec![1.0, 2.0, 3.0]).unwrap();
        assert!(pullback_alpha_mollified(&c, 0.05, &k).unwrap().values().iter().all(|v| v.abs() < 1e-14));
    }
}
