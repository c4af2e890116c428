use serde::Serialize;

use crate::error::{precondition, Result};

/// Piecewise-linear concave function through `knots`, constant after the last one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveModulus {
    pub knots: Vec<(f64, f64)>,
}

impl ConcaveModulus {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        for w in self.knots.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t <= t1 {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        self.knots.last().unwrap().1
    }
}

/// Least concave majorant of a nondecreasing sampled modulus with ω₁(0⁺) = 0,
/// as the upper hull of the samples together with the origin.
pub fn concave_modulus(ts: &[f64], values: &[f64]) -> Result<ConcaveModulus> {
    if ts.len() != values.len() || ts.is_empty() {
        return Err(precondition("times and values must be non-empty and of equal length"));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || ts[0] < 0.0 {
        return Err(precondition("times must be nonnegative and strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(precondition("values must be finite and nonnegative"));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(precondition("modulus samples are decreasing"));
    }
    if ts[0] == 0.0 && values[0] != 0.0 {
        return Err(precondition("modulus must vanish at 0"));
    }
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    pts.extend(ts.iter().zip(values).filter(|(t, _)| **t > 0.0).map(|(&t, &v)| (t, v)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord a→p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(ConcaveModulus { knots: hull })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_kept() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let m = concave_modulus(&ts, &ts).unwrap();
        for &t in &ts {
            assert!((m.eval(t) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn step_becomes_chord() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| if t >= 0.5 { 1.0 } else { 0.0 }).collect();
        let m = concave_modulus(&ts, &vs).unwrap();
        assert_eq!(m.knots, vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]);
        assert!((m.eval(0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_capped() {
        let ts: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let vs: Vec<f64> = ts.iter().map(|t| t * t).collect();
        let m = concave_modulus(&ts, &vs).unwrap();
        for &t in &ts {
            assert!((m.eval(t) - t).abs() < 1e-15);
        }
        assert_eq!(m.eval(5.0), 1.0);
    }

    #[test]
    fn decreasing_rejected() {
        assert!(concave_modulus(&[0.1, 0.2], &[0.5, 0.4]).is_err());
    }
}
