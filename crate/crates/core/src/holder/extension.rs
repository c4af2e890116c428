use super::kernel::{bump, bump_deriv, MollifierKernel};
use super::mollify::{convolve_line, derivative_weights, differentiate_line, smoothing_weights, Boundary};
use super::{GridMap, SampledPath};
use crate::error::{precondition, Result};

/// Cutoff ψ: 1 on [0, 1/2], 0 on [3/4, ∞), cubic smoothstep between.
pub fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 0.75 {
        0.0
    } else {
        let u = (s - 0.5) * 4.0;
        1.0 - u * u * (3.0 - 2.0 * u)
    }
}

pub fn cutoff_deriv(s: f64) -> f64 {
    if s <= 0.5 || s >= 0.75 {
        0.0
    } else {
        let u = (s - 0.5) * 4.0;
        -24.0 * u * (1.0 - u)
    }
}

/// Extension samples on (x, t) plus any warnings about the input.
#[derive(Debug, Clone)]
pub struct Extension {
    pub grid: GridMap,
    pub warnings: Vec<String>,
}

fn check_support(f: &SampledPath) -> Vec<String> {
    let sup = f.sup_norm();
    let ends = [f.point(0), f.point(f.len() - 1)];
    if ends.iter().any(|p| p.iter().any(|v| v.abs() > 1e-12 * sup.max(1e-300))) {
        vec!["input does not vanish at the ends of its domain; zero padding introduces a jump".into()]
    } else {
        Vec::new()
    }
}

/// ext_R f(x, t) = ψ(t/R)·(f∗η_t)(x) on t = R/L, 2R/L, …, R (L = `t_count`).
/// f is padded with zeros outside its domain.
pub fn gagliardo_extend(f: &SampledPath, r_cut: f64, kernel: &MollifierKernel, t_count: usize) -> Result<Extension> {
    let h = f.uniform_spacing().ok_or_else(|| precondition("extension needs uniformly spaced samples"))?;
    if t_count < 2 || !(r_cut > 0.0) {
        return Err(precondition("need a positive cutoff radius and at least two t levels"));
    }
    let t_min = r_cut / t_count as f64;
    if t_min < h {
        return Err(precondition("smallest t level is below the sample spacing"));
    }
    let nx = f.len();
    let d = f.dim();
    let mut values = vec![0.0; nx * t_count * d];
    for j in 0..t_count {
        let t = t_min * (j + 1) as f64;
        let psi = cutoff(t / r_cut);
        if psi == 0.0 {
            continue;
        }
        let w = smoothing_weights(h, t, kernel)?;
        for c in 0..d {
            let line = convolve_line(&f.component(c), &w, 0, Boundary::Zero);
            for (i, v) in line.into_iter().enumerate() {
                values[(i * t_count + j) * d + c] = psi * v;
            }
        }
    }
    let grid = GridMap::new(vec![f.start(), t_min], vec![f.end(), r_cut], vec![nx, t_count], d, values)?;
    Ok(Extension { grid, warnings: check_support(f) })
}

/// (∂_x, ∂_t) of the extension at level t, one pair per sample and component.
pub fn extension_gradient(f: &SampledPath, r_cut: f64, kernel: &MollifierKernel, t: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    let h = f.uniform_spacing().ok_or_else(|| precondition("extension needs uniformly spaced samples"))?;
    let w = smoothing_weights(h, t, kernel)?;
    let dw = derivative_weights(h, t, kernel)?;
    // exact t-derivative of the normalized discrete weights
    let r = (w.len() / 2) as isize;
    let raw: Vec<f64> = (-r..=r).map(|o| bump(o as f64 * h / t)).collect();
    let draw: Vec<f64> = (-r..=r)
        .map(|o| {
            let rho = o as f64 * h / t;
            bump_deriv(rho) * (-rho / t)
        })
        .collect();
    let s: f64 = raw.iter().sum();
    let ds: f64 = draw.iter().sum();
    let wt: Vec<f64> = raw.iter().zip(&draw).map(|(b, db)| (db * s - b * ds) / (s * s)).collect();
    let psi = cutoff(t / r_cut);
    let dpsi = cutoff_deriv(t / r_cut) / r_cut;
    let mut out = vec![Vec::with_capacity(f.dim()); f.len()];
    for c in 0..f.dim() {
        let comp = f.component(c);
        let u = convolve_line(&comp, &w, 0, Boundary::Zero);
        let ux = differentiate_line(&comp, &dw, 0, Boundary::Zero);
        let ut = differentiate_line(&comp, &wt, 0, Boundary::Zero);
        for i in 0..f.len() {
            out[i].push((psi * ux[i], dpsi * u[i] + psi * ut[i]));
        }
    }
    Ok(out)
}

/// sup over x of |D ext_R f(·, t)|.
pub fn extension_gradient_sup(f: &SampledPath, r_cut: f64, kernel: &MollifierKernel, t: f64) -> Result<f64> {
    let g = extension_gradient(f, r_cut, kernel, t)?;
    Ok(g.iter()
        .map(|row| row.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::mollify;

    #[test]
    fn cutoff_plateaus() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(0.75), 0.0);
        assert_eq!(cutoff(2.0), 0.0);
        let h = 1e-7;
        let fd = (cutoff(0.6 + h) - cutoff(0.6 - h)) / (2.0 * h);
        assert!((fd - cutoff_deriv(0.6)).abs() < 1e-6);
    }

    #[test]
    fn zero_extends_to_zero() {
        let f = SampledPath::from_fn(0.0, 1.0, 256, 1, |_| vec![0.0]).unwrap();
        let e = gagliardo_extend(&f, 0.5, &MollifierKernel::default(), 8).unwrap();
        assert!(e.grid.values().iter().all(|&v| v == 0.0));
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn first_level_is_mollification() {
        let f = SampledPath::from_fn(0.0, 1.0, 512, 1, |x| vec![(std::f64::consts::PI * x).sin().powi(3)]).unwrap();
        let k = MollifierKernel::default();
        let e = gagliardo_extend(&f, 0.4, &k, 8).unwrap();
        let m = mollify(&f, 0.05, &k).unwrap();
        for i in 0..f.len() {
            let v = e.grid.value(i * 8)[0];
            // away from the ends padding choice is irrelevant
            if f.times()[i] > 0.06 && f.times()[i] < 0.94 {
                assert!((v - m.path.point(i)[0]).abs() < 1e-14);
            }
        }
        let top = e.grid.value(7)[0];
        assert_eq!(top, 0.0);
    }

    #[test]
    fn warns_on_nonzero_ends() {
        let f = SampledPath::from_fn(0.0, 1.0, 64, 1, |_| vec![1.0]).unwrap();
        let e = gagliardo_extend(&f, 0.5, &MollifierKernel::default(), 4).unwrap();
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn t_derivative_matches_difference() {
        let f = SampledPath::from_fn(0.0, 1.0, 1024, 1, |x| vec![(6.0 * x).sin() * x * (1.0 - x)]).unwrap();
        let k = MollifierKernel::default();
        let (t, dt) = (0.05, 1e-5);
        let g = extension_gradient(&f, 0.5, &k, t).unwrap();
        let w1 = smoothing_weights(1.0 / 1024.0, t + dt, &k).unwrap();
        let w0 = smoothing_weights(1.0 / 1024.0, t - dt, &k).unwrap();
        let c = f.component(0);
        let u1 = convolve_line(&c, &w1, 0, Boundary::Zero);
        let u0 = convolve_line(&c, &w0, 0, Boundary::Zero);
        // the stencil radius is unchanged across ±dt here
        assert_eq!(w1.len(), w0.len());
        for i in (100..900).step_by(50) {
            let fd = (u1[i] - u0[i]) / (2.0 * dt);
            assert!((fd - g[i][0].1).abs() < 1e-6, "{fd} vs {}", g[i][0].1);
        }
    }
}
