use rayon::prelude::*;

use super::{GridMap, SampledPath};
use crate::error::{precondition, Error, Result};
use crate::heisenberg::{koranyi_dist, HPoint};

/// Distance used on the target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMetric {
    Euclidean,
    /// Korányi distance; the target must be R^{2n+1} in (x1,y1,…,t) order.
    Koranyi,
}

fn target_dist(a: &[f64], b: &[f64], metric: TargetMetric) -> f64 {
    match metric {
        TargetMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        TargetMetric::Koranyi => {
            let p = HPoint { z: a[..a.len() - 1].to_vec(), t: a[a.len() - 1] };
            let q = HPoint { z: b[..b.len() - 1].to_vec(), t: b[b.len() - 1] };
            koranyi_dist(&p, &q).map(|r| r.koranyi).unwrap_or(f64::NAN)
        }
    }
}

fn check_metric(dim: usize, metric: TargetMetric) -> Result<()> {
    if metric == TargetMetric::Koranyi && (dim < 3 || dim.is_multiple_of(2)) {
        return Err(Error::DimensionMismatch(format!("Korányi metric needs R^(2n+1), got R^{dim}")));
    }
    Ok(())
}

/// sup d(f(x), f(y)) / |x − y|^γ over sample pairs with 0 < |x − y| < scale_eps.
pub fn holder_seminorm(path: &SampledPath, gamma: f64, scale_eps: f64, metric: TargetMetric) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(precondition(format!("exponent {gamma} outside (0,1]")));
    }
    check_metric(path.dim(), metric)?;
    let t = path.times();
    let n = path.len();
    let per_row: Vec<Option<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<f64> = None;
            for j in i + 1..n {
                let dt = t[j] - t[i];
                if dt >= scale_eps {
                    break;
                }
                let q = target_dist(path.point(i), path.point(j), metric) / dt.powf(gamma);
                best = Some(best.map_or(q, |b: f64| b.max(q)));
            }
            best
        })
        .collect();
    per_row
        .into_iter()
        .flatten()
        .reduce(f64::max)
        .ok_or_else(|| precondition("no sample pairs below the requested scale"))
}

/// Grid version of [`holder_seminorm`]; pairs are enumerated by index offsets.
pub fn grid_seminorm(grid: &GridMap, gamma: f64, scale_eps: f64, metric: TargetMetric) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(precondition(format!("exponent {gamma} outside (0,1]")));
    }
    check_metric(grid.ncomp(), metric)?;
    let m = grid.dim();
    let radii: Vec<isize> = (0..m)
        .map(|a| {
            let r = if scale_eps.is_finite() { (scale_eps / grid.spacing(a)).ceil() as isize } else { isize::MAX };
            r.min(grid.shape()[a] as isize - 1)
        })
        .collect();
    // half-space of offsets: first nonzero coordinate positive
    let mut offsets = Vec::new();
    let mut o: Vec<isize> = radii.iter().map(|r| -r).collect();
    'outer: loop {
        let first = o.iter().find(|&&v| v != 0);
        if matches!(first, Some(&v) if v > 0) {
            let d: f64 = (0..m).map(|a| (o[a] as f64 * grid.spacing(a)).powi(2)).sum::<f64>().sqrt();
            if d < scale_eps {
                offsets.push((o.clone(), d));
            }
        }
        let mut a = m;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            if o[a] < radii[a] {
                o[a] += 1;
                break;
            }
            o[a] = -radii[a];
        }
    }
    if offsets.is_empty() {
        return Err(precondition("no sample pairs below the requested scale"));
    }
    let shape = grid.shape().to_vec();
    let best = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let idx = grid.multi_index(node);
            let mut best = 0.0f64;
            for (o, d) in &offsets {
                let mut other = 0usize;
                let mut inside = true;
                for a in 0..m {
                    let j = idx[a] as isize + o[a];
                    if j < 0 || j >= shape[a] as isize {
                        inside = false;
                        break;
                    }
                    other = other * shape[a] + j as usize;
                }
                if inside {
                    best = best.max(target_dist(grid.value(node), grid.value(other), metric) / d.powf(gamma));
                }
            }
            best
        })
        .collect::<Vec<_>>();
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// Maximal increment max_i |f(t_{i+lag}) − f(t_i)| for each lag.
pub fn oscillation_at_lags(path: &SampledPath, lags: &[usize]) -> Vec<f64> {
    lags.iter()
        .map(|&lag| {
            (0..path.len().saturating_sub(lag))
                .map(|i| target_dist(path.point(i), path.point(i + lag), TargetMetric::Euclidean))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Hölder exponent estimate from dyadic-lag oscillations, clipped to (0, 1].
/// Only the middle of the lag range is fitted, away from grid and domain scales.
pub fn estimate_holder_exponent(path: &SampledPath) -> Result<f64> {
    let n = path.intervals();
    let mut lags = Vec::new();
    let mut l = 1;
    while 4 * l <= n {
        lags.push(l);
        l *= 2;
    }
    if lags.len() < 3 {
        return Err(precondition("path too short to estimate an exponent"));
    }
    let osc = oscillation_at_lags(path, &lags);
    let h = path.times()[1] - path.times()[0];
    let (x, y): (Vec<f64>, Vec<f64>) = lags
        .iter()
        .zip(&osc)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&l, &o)| ((l as f64 * h).ln(), o.ln()))
        .unzip();
    if x.len() < 3 {
        // constant data: any exponent works
        return Ok(1.0);
    }
    Ok(ls_slope(&x, &y).clamp(1e-3, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_sqrt() {
        let p = SampledPath::from_fn(0.0, 1.0, 100, 1, |t| vec![t]).unwrap();
        assert!((holder_seminorm(&p, 1.0, f64::INFINITY, TargetMetric::Euclidean).unwrap() - 1.0).abs() < 1e-12);
        let q = SampledPath::from_fn(0.0, 1.0, 100, 1, |t| vec![t.sqrt()]).unwrap();
        assert!((holder_seminorm(&q, 0.5, f64::INFINITY, TargetMetric::Euclidean).unwrap() - 1.0).abs() < 1e-12);
        let c = SampledPath::from_fn(0.0, 1.0, 10, 1, |_| vec![2.0]).unwrap();
        assert_eq!(holder_seminorm(&c, 0.7, f64::INFINITY, TargetMetric::Euclidean).unwrap(), 0.0);
        assert!(holder_seminorm(&p, 1.0, 0.001, TargetMetric::Euclidean).is_err());
    }

    #[test]
    fn koranyi_needs_odd_dimension() {
        let p = SampledPath::from_fn(0.0, 1.0, 10, 2, |t| vec![t, t]).unwrap();
        assert!(holder_seminorm(&p, 0.5, 1.0, TargetMetric::Koranyi).is_err());
        let v = SampledPath::from_fn(0.0, 1.0, 10, 3, |t| vec![0.0, 0.0, t]).unwrap();
        let s = holder_seminorm(&v, 0.5, f64::INFINITY, TargetMetric::Koranyi).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_brute_force() {
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![6, 5], 1, |x| vec![(3.0 * x[0]).sin() * x[1]]).unwrap();
        let s = grid_seminorm(&g, 0.7, f64::INFINITY, TargetMetric::Euclidean).unwrap();
        let mut best = 0.0f64;
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                if i == j {
                    continue;
                }
                let (a, b) = (g.coords(i), g.coords(j));
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                best = best.max((g.value(i)[0] - g.value(j)[0]).abs() / d.powf(0.7));
            }
        }
        assert!((s - best).abs() < 1e-12);
    }

    #[test]
    fn exponent_estimate_linear() {
        let p = SampledPath::from_fn(0.0, 1.0, 1024, 1, |t| vec![3.0 * t]).unwrap();
        assert!((estimate_holder_exponent(&p).unwrap() - 1.0).abs() < 1e-9);
    }
}
