use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use super::{combinations, symplectic, wedge, wedge_power, Covector};
use crate::error::{Error, Result};

/// Largest ambient dimension accepted by the Lefschetz solver.
pub const MAX_LEFSCHETZ_DIM: usize = 8;

struct Factor {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    cond: f64,
}

type Cache = Mutex<HashMap<(usize, usize), Arc<Factor>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn check_dims(ambient: usize, kp: usize) -> Result<usize> {
    if !ambient.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!("Lefschetz map needs an even dimension, got {ambient}")));
    }
    if ambient > MAX_LEFSCHETZ_DIM {
        return Err(Error::DimensionMismatch(format!("dimension {ambient} above the cap {MAX_LEFSCHETZ_DIM}")));
    }
    let m = ambient / 2;
    if kp == 0 || kp > m {
        return Err(Error::Degree(format!("power {kp} outside 1..={m}")));
    }
    Ok(m)
}

fn factor(ambient: usize, kp: usize) -> Result<Arc<Factor>> {
    let m = check_dims(ambient, kp)?;
    if let Some(f) = cache().lock().unwrap().get(&(ambient, kp)) {
        return Ok(f.clone());
    }
    let src = combinations(ambient, m - kp);
    let dst = combinations(ambient, m + kp);
    let wk = wedge_power(&symplectic(ambient, m), kp);
    let mut mat = DMatrix::<f64>::zeros(dst.len(), src.len());
    for (j, key) in src.iter().enumerate() {
        let e = Covector::basis(ambient, &key.iter().map(|&i| i as usize).collect::<Vec<_>>())?;
        let img = wedge(&e, &wk)?;
        for (i, dk) in dst.iter().enumerate() {
            mat[(i, j)] = img.coeff(dk);
        }
    }
    let sv = mat.clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let f = Arc::new(Factor { lu: mat.lu(), cond: hi / lo });
    cache().lock().unwrap().insert((ambient, kp), f.clone());
    Ok(f)
}

/// a ∧ ω^kp on R^{2m}; requires deg a = m − kp.
pub fn lefschetz_apply(a: &Covector, kp: usize) -> Result<Covector> {
    let m = check_dims(a.ambient_dim(), kp)?;
    if a.degree() + kp != m {
        return Err(Error::Degree(format!("degree {} is not {m} - {kp}", a.degree())));
    }
    wedge(a, &wedge_power(&symplectic(a.ambient_dim(), m), kp))
}

/// Solves a ∧ ω^kp = b for a; requires deg b = m + kp.
pub fn lefschetz_invert(b: &Covector, kp: usize) -> Result<Covector> {
    let n = b.ambient_dim();
    let m = check_dims(n, kp)?;
    if b.degree() != m + kp {
        return Err(Error::Degree(format!("degree {} is not {m} + {kp}", b.degree())));
    }
    let f = factor(n, kp)?;
    let rhs = nalgebra::DVector::from_vec(b.to_dense());
    let x = f.lu.solve(&rhs).ok_or_else(|| Error::Internal("singular Lefschetz matrix".into()))?;
    let a = Covector::from_dense(n, m - kp, x.as_slice());
    let resid = lefschetz_apply(&a, kp)?.sub(b)?.max_abs();
    if resid > 1e-9 * b.max_abs().max(1.0) {
        return Err(Error::Internal(format!("Lefschetz residual {resid:e}")));
    }
    Ok(a)
}

/// 2-norm condition number of the Lefschetz basis matrix.
pub fn lefschetz_condition(ambient: usize, kp: usize) -> Result<f64> {
    Ok(factor(ambient, kp)?.cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let one = Covector::scalar(2, 1.0);
        let r = lefschetz_apply(&one, 1).unwrap();
        assert_eq!(r.coeff(&[0, 1]), 1.0);
        assert_eq!(lefschetz_invert(&r, 1).unwrap().coeff(&[]), 1.0);

        let one4 = Covector::scalar(4, 1.0);
        let r = lefschetz_apply(&one4, 2).unwrap();
        assert_eq!(r.coeff(&[0, 1, 2, 3]), 2.0);
        let back = lefschetz_invert(&Covector::basis(4, &[0, 1, 2, 3]).unwrap().scale(2.0), 2).unwrap();
        assert!((back.coeff(&[]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dx1_times_omega() {
        // dx1 ∧ (dx1∧dy1 + dx2∧dy2) = dx1∧dx2∧dy2
        let dx1 = Covector::basis(4, &[0]).unwrap();
        let r = lefschetz_apply(&dx1, 1).unwrap();
        assert_eq!(r.terms().count(), 1);
        assert_eq!(r.coeff(&[0, 2, 3]), 1.0);
    }

    #[test]
    fn degree_checks() {
        assert!(lefschetz_apply(&Covector::basis(4, &[0, 1]).unwrap(), 1).is_err());
        assert!(lefschetz_apply(&Covector::scalar(3, 1.0), 1).is_err());
        assert!(lefschetz_apply(&Covector::scalar(10, 1.0), 5).is_err());
    }

    #[test]
    fn condition_reported() {
        for m in 1..=4 {
            for kp in 1..=m {
                let c = lefschetz_condition(2 * m, kp).unwrap();
                assert!(c.is_finite() && c >= 1.0);
            }
        }
    }
}
