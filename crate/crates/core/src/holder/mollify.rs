use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::kernel::{bump, bump_deriv, MollifierKernel};
use super::{GridMap, SampledPath};
use crate::error::{precondition, Result};

/// How samples are continued past the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Repeat the end value (paths and grids).
    Constant,
    /// Pad with zeros (compactly supported data).
    Zero,
}

/// A mollified path with the width of the boundary collar it is unreliable in.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub path: SampledPath,
    pub collar: f64,
    pub boundary: Boundary,
}

fn radius(h: f64, eps: f64) -> Result<usize> {
    if !(eps >= h * (1.0 - 1e-12)) {
        return Err(precondition(format!("eps {eps:e} smaller than one grid cell {h:e}")));
    }
    Ok((eps / h * (1.0 + 1e-12)).floor() as usize)
}

/// Discrete weights of η_ε on offsets −R..=R, summing to 1.
pub fn smoothing_weights(h: f64, eps: f64, _kernel: &MollifierKernel) -> Result<Vec<f64>> {
    let r = radius(h, eps)? as isize;
    let mut w: Vec<f64> = (-r..=r).map(|o| bump(o as f64 * h / eps)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Ok(w)
}

/// Weights D_o with f_ε'(x_i) ≈ Σ_o (f_{i+o} − f_i) D_o; exact on linear data.
pub fn derivative_weights(h: f64, eps: f64, _kernel: &MollifierKernel) -> Result<Vec<f64>> {
    let r = radius(h, eps)? as isize;
    if r < 1 {
        return Err(precondition("eps too small for a derivative stencil"));
    }
    let mut d: Vec<f64> = (-r..=r).map(|o| -bump_deriv(o as f64 * h / eps)).collect();
    let norm: f64 = (-r..=r).zip(&d).map(|(o, v)| o as f64 * h * v).sum();
    if norm <= 0.0 {
        return Err(precondition("eps too small for a derivative stencil"));
    }
    d.iter_mut().for_each(|v| *v /= norm);
    Ok(d)
}

fn fetch(vals: &[f64], i: isize, boundary: Boundary) -> f64 {
    let n = vals.len() as isize;
    if i >= 0 && i < n {
        vals[i as usize]
    } else {
        match boundary {
            Boundary::Constant => vals[i.clamp(0, n - 1) as usize],
            Boundary::Zero => 0.0,
        }
    }
}

// stencils longer than this go through the FFT
const FFT_THRESHOLD: usize = 96;

/// out[i] = Σ_k w[k]·ext[i + k] for i in 0..=ext.len() − w.len().
fn correlate_fft(ext: &[f64], w: &[f64]) -> Vec<f64> {
    let n = ext.len() + w.len();
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex64> = ext.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(size, Complex64::new(0.0, 0.0));
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    for (k, &wk) in w.iter().enumerate() {
        b[(size - k) % size] = Complex64::new(wk, 0.0);
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    (0..=ext.len() - w.len()).map(|i| a[i].re * scale).collect()
}

fn extended(vals: &[f64], lo: isize, hi: isize, boundary: Boundary) -> Vec<f64> {
    (lo..hi).map(|i| fetch(vals, i, boundary)).collect()
}

/// Convolution of one sampled line on the index range −pad..n+pad.
pub fn convolve_line(vals: &[f64], w: &[f64], pad: usize, boundary: Boundary) -> Vec<f64> {
    let r = (w.len() / 2) as isize;
    let n = vals.len() + 2 * pad;
    if w.len() > FFT_THRESHOLD {
        let ext = extended(vals, -(pad as isize) - r, (vals.len() + pad) as isize + r, boundary);
        return correlate_fft(&ext, w);
    }
    (0..n)
        .into_par_iter()
        .map(|j| {
            let i = j as isize - pad as isize;
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                s += wk * fetch(vals, i + k as isize - r, boundary);
            }
            s
        })
        .collect()
}

/// Derivative of the mollified line in the subtracted-constant form.
pub fn differentiate_line(vals: &[f64], d: &[f64], pad: usize, boundary: Boundary) -> Vec<f64> {
    let r = (d.len() / 2) as isize;
    let n = vals.len() + 2 * pad;
    if d.len() > FFT_THRESHOLD {
        let ext = extended(vals, -(pad as isize) - r, (vals.len() + pad) as isize + r, boundary);
        let total: f64 = d.iter().sum();
        let raw = correlate_fft(&ext, d);
        return raw.iter().enumerate().map(|(j, s)| s - total * ext[j + r as usize]).collect();
    }
    (0..n)
        .into_par_iter()
        .map(|j| {
            let i = j as isize - pad as isize;
            let c = fetch(vals, i, boundary);
            let mut s = 0.0;
            for (k, dk) in d.iter().enumerate() {
                s += dk * (fetch(vals, i + k as isize - r, boundary) - c);
            }
            s
        })
        .collect()
}

fn uniform(path: &SampledPath) -> Result<f64> {
    path.uniform_spacing().ok_or_else(|| precondition("mollification needs uniformly spaced samples"))
}

fn rebuild(path: &SampledPath, comps: Vec<Vec<f64>>, eps: f64) -> Result<Mollified> {
    let mut p = SampledPath::from_components(path.times().to_vec(), &comps)?;
    if let Some(g) = path.gamma() {
        p = p.with_gamma(g);
    }
    Ok(Mollified { path: p, collar: eps, boundary: Boundary::Constant })
}

/// f∗η_ε on the sample times, constant extension past the ends.
pub fn mollify(path: &SampledPath, eps: f64, kernel: &MollifierKernel) -> Result<Mollified> {
    let h = uniform(path)?;
    let w = smoothing_weights(h, eps, kernel)?;
    let comps = (0..path.dim()).map(|c| convolve_line(&path.component(c), &w, 0, Boundary::Constant)).collect();
    rebuild(path, comps, eps)
}

/// (f − f(x))∗η_ε' on the sample times.
pub fn mollify_derivative(path: &SampledPath, eps: f64, kernel: &MollifierKernel) -> Result<Mollified> {
    let h = uniform(path)?;
    let d = derivative_weights(h, eps, kernel)?;
    let comps = (0..path.dim()).map(|c| differentiate_line(&path.component(c), &d, 0, Boundary::Constant)).collect();
    rebuild(path, comps, eps)
}

fn grid_stencil(grid: &GridMap, eps: f64) -> Result<Vec<(Vec<isize>, f64)>> {
    let m = grid.dim();
    let radii: Vec<isize> = (0..m).map(|a| radius(grid.spacing(a), eps).map(|r| r as isize)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut o: Vec<isize> = radii.iter().map(|r| -r).collect();
    loop {
        let rho2: f64 = (0..m).map(|a| (o[a] as f64 * grid.spacing(a) / eps).powi(2)).sum();
        if rho2 < 1.0 {
            out.push((o.clone(), rho2.sqrt()));
        }
        let mut a = m;
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            if o[a] < radii[a] {
                o[a] += 1;
                break;
            }
            o[a] = -radii[a];
        }
    }
}

fn shifted(grid: &GridMap, idx: &[usize], o: &[isize]) -> usize {
    let shape = grid.shape();
    let mut node = 0usize;
    for a in 0..idx.len() {
        let i = (idx[a] as isize + o[a]).clamp(0, shape[a] as isize - 1) as usize;
        node = node * shape[a] + i;
    }
    node
}

/// Grid mollification, nearest-node extension past the box.
pub fn mollify_grid(grid: &GridMap, eps: f64, _kernel: &MollifierKernel) -> Result<GridMap> {
    let stencil = grid_stencil(grid, eps)?;
    let total: f64 = stencil.iter().map(|(_, r)| bump(*r)).sum();
    let weights: Vec<f64> = stencil.iter().map(|(_, r)| bump(*r) / total).collect();
    let nc = grid.ncomp();
    if grid.dim() == 1 && stencil.len() > FFT_THRESHOLD {
        let dense = dense_1d(&stencil, &weights);
        let cols: Vec<Vec<f64>> = (0..nc)
            .map(|c| {
                let line: Vec<f64> = (0..grid.node_count()).map(|k| grid.value(k)[c]).collect();
                convolve_line(&line, &dense, 0, Boundary::Constant)
            })
            .collect();
        return grid.with_values(nc, interleave(&cols));
    }
    let rows: Vec<Vec<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let idx = grid.multi_index(node);
            let mut acc = vec![0.0; nc];
            for ((o, _), w) in stencil.iter().zip(&weights) {
                let v = grid.value(shifted(grid, &idx, o));
                for c in 0..nc {
                    acc[c] += w * v[c];
                }
            }
            acc
        })
        .collect();
    grid.with_values(nc, rows.concat())
}

/// Weights of a 1-D stencil on every offset −R..=R, zero where absent.
fn dense_1d(stencil: &[(Vec<isize>, f64)], w: &[f64]) -> Vec<f64> {
    let r = stencil.iter().map(|(o, _)| o[0].unsigned_abs()).max().unwrap_or(0);
    let mut d = vec![0.0; 2 * r + 1];
    for ((o, _), wk) in stencil.iter().zip(w) {
        d[(o[0] + r as isize) as usize] = *wk;
    }
    d
}

fn interleave(cols: &[Vec<f64>]) -> Vec<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect()
}

/// Gradient of the grid mollification; component c, axis a sits at slot c·m + a.
pub fn mollify_grid_gradient(grid: &GridMap, eps: f64, _kernel: &MollifierKernel) -> Result<GridMap> {
    let m = grid.dim();
    let stencil: Vec<(Vec<isize>, f64)> = grid_stencil(grid, eps)?.into_iter().filter(|(_, r)| *r > 0.0).collect();
    // per-axis weights, normalized so linear data differentiates exactly
    let mut weights = vec![vec![0.0; stencil.len()]; m];
    for a in 0..m {
        let h = grid.spacing(a);
        let mut norm = 0.0;
        for (s, (o, r)) in stencil.iter().enumerate() {
            let y = o[a] as f64 * h / eps;
            let w = -bump_deriv(*r) * y / r;
            weights[a][s] = w;
            norm += o[a] as f64 * h * w;
        }
        if norm <= 0.0 {
            return Err(precondition("eps too small for a derivative stencil"));
        }
        weights[a].iter_mut().for_each(|w| *w /= norm);
    }
    let nc = grid.ncomp();
    if m == 1 && stencil.len() > FFT_THRESHOLD {
        let d = dense_1d(&stencil, &weights[0]);
        let cols: Vec<Vec<f64>> = (0..nc)
            .map(|c| {
                let line: Vec<f64> = (0..grid.node_count()).map(|k| grid.value(k)[c]).collect();
                differentiate_line(&line, &d, 0, Boundary::Constant)
            })
            .collect();
        return grid.with_values(nc, interleave(&cols));
    }
    let rows: Vec<Vec<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let idx = grid.multi_index(node);
            let centre = grid.value(node);
            let mut acc = vec![0.0; nc * m];
            for (s, (o, _)) in stencil.iter().enumerate() {
                let v = grid.value(shifted(grid, &idx, o));
                for c in 0..nc {
                    let dv = v[c] - centre[c];
                    for a in 0..m {
                        acc[c * m + a] += weights[a][s] * dv;
                    }
                }
            }
            acc
        })
        .collect();
    grid.with_values(nc * m, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> MollifierKernel {
        MollifierKernel::default()
    }

    #[test]
    fn constants_and_lines() {
        let p = SampledPath::from_fn(0.0, 1.0, 200, 2, |t| vec![3.0, 2.0 * t - 1.0]).unwrap();
        let eps = 0.05;
        let m = mollify(&p, eps, &kernel()).unwrap();
        let d = mollify_derivative(&p, eps, &kernel()).unwrap();
        for i in 0..p.len() {
            let t = p.times()[i];
            assert!((m.path.point(i)[0] - 3.0).abs() < 1e-14);
            assert!(d.path.point(i)[0].abs() < 1e-14);
            if t > eps && t < 1.0 - eps {
                assert!((m.path.point(i)[1] - (2.0 * t - 1.0)).abs() < 1e-13);
                assert!((d.path.point(i)[1] - 2.0).abs() < 1e-12);
            }
        }
        assert_eq!(m.collar, eps);
    }

    #[test]
    fn eps_below_cell_rejected() {
        let p = SampledPath::from_fn(0.0, 1.0, 10, 1, |t| vec![t]).unwrap();
        assert!(mollify(&p, 0.05, &kernel()).is_err());
        let q = SampledPath::new(vec![0.0, 0.1, 0.3], 1, vec![0.0; 3]).unwrap();
        assert!(mollify(&q, 0.5, &kernel()).is_err());
    }

    #[test]
    fn contraction_in_sup_norm() {
        let p = super::super::weierstrass_path(0.5, 2, 10, 2048, 1, 9).unwrap();
        let m = mollify(&p, 0.01, &kernel()).unwrap();
        assert!(m.path.sup_norm() <= p.sup_norm() + 1e-15);
    }

    #[test]
    fn grid_linear_interior() {
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![41, 41], 1, |x| vec![x[0] - 2.0 * x[1]]).unwrap();
        let eps = 0.1;
        let f = mollify_grid(&g, eps, &kernel()).unwrap();
        let df = mollify_grid_gradient(&g, eps, &kernel()).unwrap();
        for node in 0..g.node_count() {
            let x = g.coords(node);
            if x.iter().all(|&v| v > eps + 1e-9 && v < 1.0 - eps - 1e-9) {
                assert!((f.value(node)[0] - g.value(node)[0]).abs() < 1e-13);
                assert!((df.value(node)[0] - 1.0).abs() < 1e-12);
                assert!((df.value(node)[1] + 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_path_matches_direct_sums() {
        let p = super::super::weierstrass_path(0.6, 2, 12, 4096, 1, 3).unwrap();
        let line = p.component(0);
        let w = smoothing_weights(1.0 / 4096.0, 0.05, &kernel()).unwrap();
        let d = derivative_weights(1.0 / 4096.0, 0.05, &kernel()).unwrap();
        assert!(w.len() > FFT_THRESHOLD);
        let r = (w.len() / 2) as isize;
        let fast = convolve_line(&line, &w, 7, Boundary::Zero);
        let dfast = differentiate_line(&line, &d, 0, Boundary::Constant);
        for j in [0usize, 5, 900, 4110] {
            let i = j as isize - 7;
            let direct: f64 = w.iter().enumerate().map(|(k, wk)| wk * fetch(&line, i + k as isize - r, Boundary::Zero)).sum();
            assert!((fast[j] - direct).abs() < 1e-13);
        }
        for i in [0usize, 2000, 4095] {
            let c = line[i];
            let direct: f64 = d
                .iter()
                .enumerate()
                .map(|(k, dk)| dk * (fetch(&line, i as isize + k as isize - r, Boundary::Constant) - c))
                .sum();
            assert!((dfast[i] - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
        // 1-D grids agree with the path routines
        let g = GridMap::new(vec![0.0], vec![1.0], vec![p.len()], 1, line.clone()).unwrap();
        let gd = mollify_grid_gradient(&g, 0.05, &kernel()).unwrap();
        let gm = mollify_grid(&g, 0.05, &kernel()).unwrap();
        let pm = mollify(&p, 0.05, &kernel()).unwrap();
        for i in [10usize, 2048, 4000] {
            assert!((gm.value(i)[0] - pm.path.point(i)[0]).abs() < 1e-12);
            assert!(gd.value(i)[0].is_finite());
        }
    }
}
