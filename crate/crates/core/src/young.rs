//! One-dimensional Young integrals ∫ f dg by dyadic Riemann–Stieltjes sums
//! and by mollification, plus the Fourier-block diagnostics.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::holder::{
    convolve_line, derivative_weights, differentiate_line, estimate_holder_exponent, holder_seminorm,
    smoothing_weights, Boundary, MollifierKernel, SampledPath, TargetMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RiemannStieltjes,
    Mollified,
}

/// One refinement level: partition step or ε, and the approximation there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub param: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungResult {
    pub value: f64,
    pub method: Method,
    /// max of the last Cauchy increment and the extrapolation correction
    pub error_estimate: f64,
    /// coarse to fine
    pub levels: Vec<Level>,
    /// convergence rate used for the extrapolation, if any
    pub rate: Option<f64>,
    /// midpoint-tag sums, Riemann–Stieltjes only
    pub midpoint_levels: Vec<Level>,
    pub tag_consistent: Option<bool>,
    pub alpha: f64,
    pub beta: f64,
    pub warnings: Vec<String>,
}

/// Exponents for a pair: explicit values win, then path metadata, then an estimate.
pub fn resolve_exponents(
    f: &SampledPath,
    g: &SampledPath,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<(f64, f64, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut pick = |p: &SampledPath, given: Option<f64>, name: &str| -> Result<f64> {
        if let Some(v) = given.or(p.gamma()) {
            return Ok(v);
        }
        let v = estimate_holder_exponent(p)?;
        warnings.push(format!("{name} exponent not declared; estimated {v:.3} from dyadic oscillations"));
        Ok(v)
    };
    let a = pick(f, alpha, "integrand")?;
    let b = pick(g, beta, "integrator")?;
    if !(a + b > 1.0) {
        return Err(Error::YoungCondition(a + b));
    }
    Ok((a, b, warnings))
}

fn same_grid(f: &SampledPath, g: &SampledPath) -> Result<()> {
    if f.len() != g.len() || f.times().iter().zip(g.times()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs())) {
        return Err(Error::DimensionMismatch("paths are sampled at different times".into()));
    }
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::DimensionMismatch("Young integrals take scalar paths".into()));
    }
    Ok(())
}

/// Largest usable dyadic depth for N intervals, capped at `max`.
pub fn auto_depth(n: usize, max: usize) -> usize {
    (n.trailing_zeros() as usize).min(max)
}

/// Extrapolates a coarse-to-fine sequence whose parameter shrinks by `ratio` per level.
///
/// The first pass reads a rate off the last three values, floored at `floor_rate`.
/// A rate of at least 0.9 lying within 0.1 of an integer p is snapped to p, and the
/// following passes eliminate p+1, p+2, … in turn. Otherwise a further pass runs only
/// while the next detected rate exceeds the previous one by more than 0.5. Passes stop
/// once the correction grows. No extrapolation happens when increments do not shrink.
/// The error estimate is the larger of the last raw increment and the total correction.
pub fn extrapolate(values: &[f64], ratio: f64, floor_rate: f64) -> (f64, f64, Option<f64>) {
    let n = values.len();
    let last = values[n - 1];
    let raw_step = if n >= 2 { (last - values[n - 2]).abs() } else { 0.0 };
    let mut seq = values.to_vec();
    let mut first_rate = None;
    let mut prev_rate = f64::NEG_INFINITY;
    // an integer leading rate is taken to start an expansion in integer powers
    let mut integer_steps = false;
    let mut prev_shift = f64::INFINITY;
    while seq.len() >= 2 {
        let m = seq.len();
        let p = if integer_steps {
            prev_rate + 1.0
        } else {
            if m < 3 {
                break;
            }
            let d2 = seq[m - 1] - seq[m - 2];
            let d1 = seq[m - 2] - seq[m - 3];
            if d2 == 0.0 {
                break;
            }
            let rho = d1 / d2;
            if !(rho > 1.0) || !rho.is_finite() {
                break;
            }
            let mut p = (rho.ln() / ratio.ln()).min(8.0);
            if first_rate.is_none() {
                p = p.max(floor_rate.max(1e-3));
                if p >= 0.9 && (p - p.round()).abs() < 0.1 {
                    p = p.round();
                    integer_steps = true;
                }
            } else if p < prev_rate + 0.5 {
                break;
            }
            p
        };
        let f = 1.0 / (ratio.powf(p) - 1.0);
        let next: Vec<f64> = seq.windows(2).map(|w| w[1] + (w[1] - w[0]) * f).collect();
        let shift = (next[next.len() - 1] - seq[m - 1]).abs();
        if first_rate.is_some() && shift > prev_shift {
            break;
        }
        prev_shift = shift;
        seq = next;
        first_rate.get_or_insert(p);
        prev_rate = p;
    }
    let value = *seq.last().unwrap();
    (value, raw_step.max((value - last).abs()), first_rate)
}

fn level_sums<F>(n: usize, depth: usize, term: F) -> Vec<Level>
where
    F: Fn(usize, usize) -> f64,
{
    (0..=depth)
        .rev()
        .map(|l| {
            let stride = 1usize << l;
            let mut s = 0.0;
            let mut i = 0;
            while i < n {
                s += term(i, i + stride);
                i += stride;
            }
            Level { param: stride as f64, value: s }
        })
        .collect()
}

/// Sub-sample refinements of the linear interpolant appended after stride 1.
const SUB_LEVELS: usize = 3;

/// Exponent sum from which dyadic sums are extrapolated as a smooth expansion.
const SMOOTH_EXPONENT_SUM: f64 = 1.9;

/// Fewest fine cells per ε before the mollified integrand is upsampled.
const MIN_CELLS_PER_EPS: f64 = 4.0;

/// Whether the last three increments keep one sign and shrink by ratios above 1.5
/// that agree within a factor 1.5, as a clean power law does. Exact sequences pass.
fn steady(vals: &[f64]) -> bool {
    let n = vals.len();
    if n < 4 {
        return true;
    }
    let d: Vec<f64> = vals[n - 4..].windows(2).map(|w| w[1] - w[0]).collect();
    if d[1] == 0.0 && d[2] == 0.0 {
        return true;
    }
    if !(d[0] * d[1] > 0.0 && d[1] * d[2] > 0.0) {
        return false;
    }
    let (r1, r2) = (d[0] / d[1], d[1] / d[2]);
    r1 > 1.5 && r2 > 1.5 && r1.max(r2) / r1.min(r2) < 1.5
}

/// Dyadic left-point Riemann–Stieltjes sums Σ f(t_i)(g(t_{i+1}) − g(t_i)) at strides
/// 2^depth, …, 2, 1. Smooth data are extrapolated in the step through the trapezoid
/// sums; rough data continue on the linear interpolant below the sample spacing.
pub fn young_rs(f: &SampledPath, g: &SampledPath, depth: usize, alpha: Option<f64>, beta: Option<f64>) -> Result<YoungResult> {
    same_grid(f, g)?;
    let (a, b, warnings) = resolve_exponents(f, g, alpha, beta)?;
    let n = f.intervals();
    if !n.is_multiple_of(1usize << depth) {
        return Err(precondition(format!("{n} intervals are not divisible by 2^{depth}")));
    }
    let fv = f.component(0);
    let gv = g.component(0);
    let h = (f.end() - f.start()) / n as f64;
    let mut levels = level_sums(n, depth, |i, j| fv[i] * (gv[j] - gv[i]));
    levels.iter_mut().for_each(|l| l.param *= h);
    let vals: Vec<f64> = levels.iter().map(|l| l.value).collect();
    // trapezoid sums at each stride: the sub-sample limit of that level's interpolant,
    // with an even expansion for smooth data and exact integration by parts
    let trap: Vec<f64> = level_sums(n, depth, |i, j| 0.5 * (fv[i] + fv[j]) * (gv[j] - gv[i])).iter().map(|l| l.value).collect();
    let trapezoid = trap[trap.len() - 1];
    let (value, err, rate) = if a + b >= SMOOTH_EXPONENT_SUM && steady(&trap) {
        extrapolate(&trap, 2.0, a + b - 1.0)
    } else {
        // rough at the sample spacing: the limit is taken on the linear interpolant,
        // where the left sum at step h/2^m is the trapezoid sum minus ΣΔfΔg/2^(m+1)
        let cross = 2.0 * (trapezoid - vals[vals.len() - 1]);
        for m in 1..=SUB_LEVELS {
            let scale = 2f64.powi(m as i32);
            levels.push(Level { param: h / scale, value: trapezoid - 0.5 * cross / scale });
        }
        let all: Vec<f64> = levels.iter().map(|l| l.value).collect();
        extrapolate(&all, 2.0, a + b - 1.0)
    };
    let mut midpoint_levels = level_sums(n, depth, |i, j| if j - i >= 2 { fv[(i + j) / 2] * (gv[j] - gv[i]) } else { f64::NAN });
    midpoint_levels.retain(|l| l.value.is_finite());
    midpoint_levels.iter_mut().for_each(|l| l.param *= h);
    midpoint_levels.push(Level { param: h, value: trapezoid });
    let tag_consistent = midpoint_levels.last().map(|m| {
        let fine = vals[vals.len() - 1];
        let cauchy = if vals.len() >= 2 { (fine - vals[vals.len() - 2]).abs() } else { 0.0 };
        (m.value - fine).abs() <= 2.0 * cauchy + 1e-13 * (1.0 + fine.abs())
    });
    let mut warnings = warnings;
    if tag_consistent == Some(false) {
        warnings.push("left and midpoint tags disagree beyond the Cauchy estimate".into());
    }
    Ok(YoungResult {
        value,
        method: Method::RiemannStieltjes,
        error_estimate: err,
        levels,
        rate,
        midpoint_levels,
        tag_consistent,
        alpha: a,
        beta: b,
        warnings,
    })
}

/// ½∫(x dy − y dx) by dyadic sums of ½(x_i y_j − y_i x_j); exact for the polygon
/// through the samples at each level, and exactly antisymmetric in (x, y).
pub fn levy_area_rs(x: &[f64], y: &[f64], depth: usize, floor_rate: f64) -> Result<YoungResult> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DimensionMismatch("area needs two equally long sample arrays".into()));
    }
    let n = x.len() - 1;
    if !n.is_multiple_of(1usize << depth) {
        return Err(precondition(format!("{n} intervals are not divisible by 2^{depth}")));
    }
    let levels = level_sums(n, depth, |i, j| 0.5 * (x[i] * y[j] - y[i] * x[j]));
    let vals: Vec<f64> = levels.iter().map(|l| l.value).collect();
    let (value, err, rate) = extrapolate(&vals, 2.0, floor_rate);
    Ok(YoungResult {
        value,
        method: Method::RiemannStieltjes,
        error_estimate: err,
        levels,
        rate,
        midpoint_levels: Vec::new(),
        tag_consistent: None,
        alpha: f64::NAN,
        beta: f64::NAN,
        warnings: Vec::new(),
    })
}

/// Mollified sum ∫ f_ε g_ε' over the domain widened by ε on each side.
fn mollified_value(fv: &[f64], gv: &[f64], h: f64, eps: f64, kernel: &MollifierKernel) -> Result<f64> {
    let up = (MIN_CELLS_PER_EPS * h / eps).ceil().max(1.0) as usize;
    if up > 1 {
        let up = up.next_power_of_two();
        return mollified_value(&upsample(fv, up), &upsample(gv, up), h / up as f64, eps, kernel);
    }
    let w = smoothing_weights(h, eps, kernel)?;
    let d = derivative_weights(h, eps, kernel)?;
    let pad = w.len() / 2 + 1;
    let fe = convolve_line(fv, &w, pad, Boundary::Constant);
    let ge = differentiate_line(gv, &d, pad, Boundary::Constant);
    // the integrand vanishes at both padded ends, so the trapezoid rule is a plain sum
    Ok(fe.iter().zip(&ge).map(|(a, b)| a * b).sum::<f64>() * h)
}

/// Linear interpolation onto a grid `factor` times finer.
fn upsample(v: &[f64], factor: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((v.len() - 1) * factor + 1);
    for w in v.windows(2) {
        out.extend((0..factor).map(|r| w[0] + (w[1] - w[0]) * r as f64 / factor as f64));
    }
    out.push(v[v.len() - 1]);
    out
}

/// lim_ε ∫ f_ε g_ε' dx along a strictly decreasing ε sequence, extrapolated.
pub fn young_mollified(
    f: &SampledPath,
    g: &SampledPath,
    eps: &[f64],
    kernel: &MollifierKernel,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<YoungResult> {
    same_grid(f, g)?;
    let (a, b, warnings) = resolve_exponents(f, g, alpha, beta)?;
    if eps.is_empty() || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(precondition("eps sequence must be non-empty and strictly decreasing"));
    }
    let h = f.uniform_spacing().ok_or_else(|| precondition("mollified integral needs uniform samples"))?;
    let fv = f.component(0);
    let gv = g.component(0);
    let levels: Vec<Level> = eps
        .iter()
        .map(|&e| mollified_value(&fv, &gv, h, e, kernel).map(|v| Level { param: e, value: v }))
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = levels.iter().map(|l| l.value).collect();
    let ratio = if eps.len() >= 2 { eps[eps.len() - 2] / eps[eps.len() - 1] } else { 2.0 };
    let mut warnings = warnings;
    if eps.len() >= 3 {
        let r0 = eps[eps.len() - 3] / eps[eps.len() - 2];
        if (r0 - ratio).abs() > 1e-6 * ratio {
            warnings.push("last three eps levels are not geometric; rate estimate is approximate".into());
        }
    }
    let (value, err, rate) = extrapolate(&vals, ratio, a + b - 1.0);
    Ok(YoungResult {
        value,
        method: Method::Mollified,
        error_estimate: err,
        levels,
        rate,
        midpoint_levels: Vec::new(),
        tag_consistent: None,
        alpha: a,
        beta: b,
        warnings,
    })
}

/// Geometric sequence ε_0, ε_0/2, … with `count` terms.
pub fn dyadic_eps(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| eps0 / 2f64.powi(i as i32)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// |∫ f dg| against |b − a|^{α+β}[f]_α[g]_β for f vanishing somewhere.
pub fn young_bound_check(f: &SampledPath, g: &SampledPath, alpha: f64, beta: f64) -> Result<BoundCheck> {
    same_grid(f, g)?;
    if !(alpha + beta > 1.0) {
        return Err(Error::YoungCondition(alpha + beta));
    }
    let fv = f.component(0);
    let vanishes = fv.contains(&0.0) || fv.windows(2).any(|w| w[0] * w[1] < 0.0);
    if !vanishes {
        return Err(precondition("integrand has no vanishing point"));
    }
    let depth = auto_depth(f.intervals(), 8);
    let lhs = young_rs(f, g, depth, Some(alpha), Some(beta))?.value.abs();
    let sf = holder_seminorm(f, alpha, f64::INFINITY, TargetMetric::Euclidean)?;
    let sg = holder_seminorm(g, beta, f64::INFINITY, TargetMetric::Euclidean)?;
    let rhs = (f.end() - f.start()).powf(alpha + beta) * sf * sg;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(BoundCheck { lhs, rhs, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub k: u32,
    pub energy: f64,
    pub bound: f64,
}

/// Fourier energy in the dyadic blocks 2^k ≤ |n| < 2^{k+1}, against [f]_α² 2^{−2kα}.
pub fn fourier_block_bounds(f: &SampledPath, alpha: f64) -> Result<Vec<Block>> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch("block bounds take scalar paths".into()));
    }
    let n = f.intervals();
    if !n.is_power_of_two() || n < 4 {
        return Err(precondition("number of intervals must be a power of two"));
    }
    let v = f.component(0);
    let osc = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    if (v[0] - v[n]).abs() > 1e-9 * (1.0 + osc) {
        return Err(precondition("path is not periodic: endpoint values differ"));
    }
    let mut buf: Vec<Complex64> = v[..n].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr() / (n * n) as f64).collect();
    let semi = holder_seminorm(f, alpha, f64::INFINITY, TargetMetric::Euclidean)?;
    let mut out = Vec::new();
    let mut k = 0u32;
    while (1usize << k) <= n / 2 {
        let lo = 1usize << k;
        let hi = (lo << 1).min(n / 2 + 1);
        let mut e = 0.0;
        for m in lo..hi {
            e += power[m];
            if m != n - m {
                e += power[n - m];
            }
        }
        out.push(Block { k, energy: e, bound: semi * semi * 2f64.powf(-2.0 * k as f64 * alpha) });
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, f: impl Fn(f64) -> f64) -> SampledPath {
        SampledPath::from_fn(0.0, 1.0, n, 1, |t| vec![f(t)]).unwrap()
    }

    #[test]
    fn x_dx_is_half() {
        let x = line(1024, |t| t);
        let r = young_rs(&x, &x, 6, Some(1.0), Some(1.0)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-13);
        assert_eq!(r.tag_consistent, Some(true));
        assert_eq!(r.levels.len(), 7);
    }

    #[test]
    fn telescoping() {
        let one = line(256, |_| 1.0);
        let g = line(256, |t| (5.0 * t).sin() + t * t);
        let r = young_rs(&one, &g, 4, Some(1.0), Some(1.0)).unwrap();
        assert!((r.value - ((5.0f64).sin() + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn young_condition_refused() {
        let x = line(64, |t| t);
        assert!(matches!(young_rs(&x, &x, 2, Some(0.5), Some(0.5)), Err(Error::YoungCondition(_))));
    }

    #[test]
    fn non_monotone_eps_refused() {
        let x = line(1024, |t| t);
        let k = MollifierKernel::default();
        assert!(young_mollified(&x, &x, &[0.02, 0.04], &k, Some(1.0), Some(1.0)).is_err());
    }

    #[test]
    fn mollified_smooth() {
        let f = line(4096, |t| (3.0 * t).cos());
        let g = line(4096, |t| t * t * t);
        let exact = {
            // ∫_0^1 cos(3t)·3t² dt by parts
            let s = 3.0f64;
            let anti = |t: f64| 3.0 * (t * t * (s * t).sin() / s + 2.0 * t * (s * t).cos() / (s * s) - 2.0 * (s * t).sin() / (s * s * s));
            anti(1.0) - anti(0.0)
        };
        let k = MollifierKernel::default();
        let r = young_mollified(&f, &g, &dyadic_eps(0.08, 4), &k, Some(1.0), Some(1.0)).unwrap();
        assert!((r.value - exact).abs() < 1e-8, "{} vs {exact}", r.value);
        let rs = young_rs(&f, &g, 6, Some(1.0), Some(1.0)).unwrap();
        assert!((rs.value - exact).abs() < 1e-8, "{} vs {exact}", rs.value);
    }

    #[test]
    fn rough_pair_limit_is_the_interpolant_integral() {
        let f = crate::holder::weierstrass_path(0.6, 2, 10, 1024, 1, 4).unwrap();
        let g = crate::holder::weierstrass_path(0.6, 2, 10, 1024, 1, 5).unwrap();
        let (fv, gv) = (f.component(0), g.component(0));
        let trapezoid: f64 = (0..1024).map(|i| 0.5 * (fv[i] + fv[i + 1]) * (gv[i + 1] - gv[i])).sum();
        let r = young_rs(&f, &g, 6, None, None).unwrap();
        assert!((r.value - trapezoid).abs() < 1e-12 * trapezoid.abs().max(1.0));
        assert_eq!(r.levels.len(), 7 + SUB_LEVELS);
    }

    #[test]
    fn steady_needs_a_clean_power_law() {
        assert!(steady(&[1.0, 1.5, 1.75, 1.875]));
        assert!(steady(&[2.0, 2.0, 2.0, 2.0]));
        assert!(!steady(&[1.0, 1.5, 1.4, 1.45]));
        assert!(!steady(&[1.0, 1.5, 1.75, 1.76]));
    }

    #[test]
    fn upsampling_is_linear() {
        assert_eq!(upsample(&[0.0, 4.0, 0.0], 4), vec![0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn levy_area_antisymmetric() {
        let x: Vec<f64> = (0..=64).map(|i| (i as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = (0..=64).map(|i| (i as f64 * 0.17).cos()).collect();
        let a = levy_area_rs(&x, &y, 3, 0.5).unwrap();
        let b = levy_area_rs(&y, &x, 3, 0.5).unwrap();
        assert_eq!(a.value, -b.value);
    }

    #[test]
    fn bound_check_trivial_cases() {
        let zero = line(256, |_| 0.0);
        let g = line(256, |t| t);
        assert_eq!(young_bound_check(&zero, &g, 0.6, 0.6).unwrap().ratio, 0.0);
        let odd = line(256, |t| t - 0.5);
        assert!(young_bound_check(&odd, &g, 0.6, 0.6).unwrap().lhs < 1e-14);
        let pos = line(256, |t| 1.0 + t);
        assert!(young_bound_check(&pos, &g, 0.6, 0.6).is_err());
    }

    #[test]
    fn single_mode_block() {
        let f = line(1024, |t| (std::f64::consts::TAU * 8.0 * t).cos());
        let blocks = fourier_block_bounds(&f, 0.5).unwrap();
        for b in &blocks {
            if b.k == 3 {
                assert!((b.energy - 0.5).abs() < 1e-12);
            } else {
                assert!(b.energy < 1e-20);
            }
        }
        let c = line(64, |_| 2.0);
        assert!(fourier_block_bounds(&c, 0.5).unwrap().iter().all(|b| b.energy < 1e-25));
        assert!(fourier_block_bounds(&line(64, |t| t), 0.5).is_err());
    }
}
