use crate::error::{precondition, Result};

/// The bump exp(−1/(1−r²)) on r < 1, tabulated on [−1, 1].
///
/// The table fixes the normalization constants; evaluation itself uses
/// the closed form so derivatives stay smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    resolution: usize,
    table: Vec<f64>,
}

impl Default for MollifierKernel {
    fn default() -> Self {
        MollifierKernel::new(1025).expect("default resolution is valid")
    }
}

/// Unnormalized profile as a function of the radius.
pub fn bump(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// d/dr of [`bump`].
pub fn bump_deriv(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        let q = 1.0 - r2;
        -2.0 * r / (q * q) * (-1.0 / q).exp()
    }
}

impl MollifierKernel {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 17 || resolution % 4 != 1 {
            return Err(precondition("kernel resolution must be 1 mod 4 and at least 17"));
        }
        let table = (0..resolution).map(|i| bump(-1.0 + 2.0 * i as f64 / (resolution - 1) as f64)).collect();
        Ok(MollifierKernel { resolution, table })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// ∫_{R^m} bump(|x|) dx from the table: |S^{m−1}| ∫_0^1 r^{m−1} bump(r) dr.
    /// Odd m gives an even integrand flat at r = 1, where the trapezoid rule is
    /// spectrally accurate; even m uses Simpson's rule.
    pub fn mass(&self, m: usize) -> f64 {
        let half = &self.table[self.resolution / 2..];
        let h = 1.0 / (half.len() - 1) as f64;
        let mut s = 0.0;
        for (i, v) in half.iter().enumerate() {
            let r = i as f64 * h;
            let w = if i == 0 || i == half.len() - 1 {
                if m % 2 == 1 { 0.5 } else { 1.0 / 3.0 }
            } else if m % 2 == 1 {
                1.0
            } else if i % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
            s += w * r.powi(m as i32 - 1) * v;
        }
        let sphere = 2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma_fn(m as f64 / 2.0);
        sphere * s * h
    }

    /// Normalized kernel value η(x) on R^m at radius r.
    pub fn eval(&self, r: f64, m: usize) -> f64 {
        bump(r) / self.mass(m)
    }
}

fn gamma_fn(x: f64) -> f64 {
    // half-integer and integer arguments only
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as usize).map(|i| i as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            g *= y;
            y += 1.0;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_converged() {
        let coarse = MollifierKernel::new(1025).unwrap();
        let fine = MollifierKernel::new(16385).unwrap();
        for m in 1..=3 {
            let a = coarse.mass(m);
            let b = fine.mass(m);
            assert!(((a - b) / b).abs() < 1e-10, "m={m}: {a} vs {b}");
        }
        // known 1-D value of ∫ exp(−1/(1−x²)) dx
        assert!((coarse.mass(1) - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn profile_shape() {
        let k = MollifierKernel::default();
        assert!(k.table().iter().all(|&v| v >= 0.0));
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(k.table()[0], 0.0);
        let h = 1e-6;
        let fd = (bump(0.3 + h) - bump(0.3 - h)) / (2.0 * h);
        assert!((fd - bump_deriv(0.3)).abs() < 1e-8);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_fn(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_fn(3.0), 2.0);
        assert!((gamma_fn(1.5) - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }
}
