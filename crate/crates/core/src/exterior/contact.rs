//! Splitting forms on H^n along the contact form α.

use super::{binomial, combinations, lefschetz_invert, sort_sign, symplectic, wedge, wedge_power, Covector};
use crate::error::{precondition, Error, Result};
use crate::heisenberg::{contact_form_at, HPoint};
use crate::holder::{fd_partial, GridMap};

fn half_dim(n: usize) -> Result<usize> {
    if n.is_multiple_of(2) || n < 3 {
        return Err(Error::DimensionMismatch(format!("contact splitting needs R^(2m+1), got R^{n}")));
    }
    Ok((n - 1) / 2)
}

/// κ = β∧α(p) + γ∧(dα)^{k−m} with β, γ free of dt, for m+1 ≤ k ≤ 2m.
pub fn contact_decompose_pointwise(kappa: &Covector, p: &HPoint) -> Result<(Covector, Covector)> {
    let n = kappa.ambient_dim();
    let m = half_dim(n)?;
    if p.n() != m {
        return Err(Error::DimensionMismatch(format!("point in H^{} for a form on R^{n}", p.n())));
    }
    let k = kappa.degree();
    if k < m + 1 || k > 2 * m {
        return Err(Error::Degree(format!("degree {k} outside {}..={}", m + 1, 2 * m)));
    }
    let t = (n - 1) as u8;
    let mut kappa0 = Vec::new();
    let mut kappa1 = Vec::new();
    for (key, c) in kappa.terms() {
        let idx: Vec<usize> = key.iter().map(|&i| i as usize).collect();
        if key.last() == Some(&t) {
            kappa1.push((idx[..k - 1].to_vec(), c));
        } else {
            kappa0.push((idx, c));
        }
    }
    let k0 = Covector::from_terms(n, k, &kappa0)?;
    let beta = Covector::from_terms(n, k - 1, &kappa1)?;
    // dt = α − θ with θ the planar part of α
    let theta = contact_form_at(p).sub(&Covector::basis(n, &[n - 1])?)?;
    let delta = k0.sub(&wedge(&beta, &theta)?)?.with_ambient(n - 1)?;
    let scale = 4f64.powi(-((k - m) as i32));
    let gamma = lefschetz_invert(&delta, k - m)?.scale(scale).with_ambient(n)?;
    Ok((beta, gamma))
}

/// A field of k-covectors on a grid over R^n, stored densely per node.
#[derive(Debug, Clone)]
pub struct CovectorField {
    pub degree: usize,
    pub grid: GridMap,
}

impl CovectorField {
    pub fn new(degree: usize, grid: GridMap) -> Result<Self> {
        let n = grid.dim();
        if degree > n || grid.ncomp() != binomial(n, degree) {
            return Err(Error::DimensionMismatch(format!(
                "{} components for {degree}-covectors on R^{n}",
                grid.ncomp()
            )));
        }
        Ok(CovectorField { degree, grid })
    }

    pub fn from_fn<F>(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, degree: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Covector,
    {
        let n = shape.len();
        let grid = GridMap::from_fn(lo, hi, shape, binomial(n, degree).max(1), |x| f(x).to_dense())?;
        CovectorField::new(degree, grid)
    }

    pub fn ambient_dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn at(&self, node: usize) -> Covector {
        Covector::from_dense(self.grid.dim(), self.degree, self.grid.value(node))
    }

    fn from_nodes(grid: &GridMap, degree: usize, nodes: &[Covector]) -> Result<Self> {
        let n = grid.dim();
        let width = binomial(n, degree);
        let mut v = Vec::with_capacity(nodes.len() * width);
        for c in nodes {
            v.extend(c.to_dense());
        }
        CovectorField::new(degree, grid.with_values(width, v)?)
    }

    /// Finite-difference exterior derivative, second order.
    pub fn exterior_derivative(&self) -> Result<CovectorField> {
        let n = self.grid.dim();
        let k = self.degree;
        if k >= n {
            return Err(Error::Degree("d of a top-degree field".into()));
        }
        let src = combinations(n, k);
        let dst = combinations(n, k + 1);
        let mut out = vec![vec![0.0; self.grid.node_count()]; dst.len()];
        for (ci, key) in src.iter().enumerate() {
            let comp = self.grid.component(ci);
            if comp.iter().all(|&v| v == 0.0) {
                continue;
            }
            for j in 0..n as u8 {
                if key.contains(&j) {
                    continue;
                }
                let mut new_key = vec![j];
                new_key.extend(key);
                let s = sort_sign(&mut new_key).expect("distinct indices");
                let slot = dst.binary_search(&new_key).expect("canonical key");
                let der = fd_partial(&comp, self.grid.shape(), self.grid.spacing(j as usize), j as usize)?;
                for (o, d) in out[slot].iter_mut().zip(der) {
                    *o += s * d;
                }
            }
        }
        CovectorField::new(k + 1, self.grid.from_components(&out)?)
    }

    fn map_nodes<F>(&self, degree: usize, f: F) -> Result<CovectorField>
    where
        F: Fn(&Covector, &[f64]) -> Result<Covector>,
    {
        let nodes: Vec<Covector> =
            (0..self.grid.node_count()).map(|i| f(&self.at(i), &self.grid.coords(i))).collect::<Result<_>>()?;
        CovectorField::from_nodes(&self.grid, degree, &nodes)
    }

    /// Nodewise maximum of |coefficient| of self − other.
    pub fn max_diff(&self, other: &CovectorField) -> f64 {
        self.grid.values().iter().zip(other.grid.values()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn point_at(x: &[f64]) -> HPoint {
    HPoint::from_coords(x).expect("grid coordinates are finite")
}

/// Exact splitting κ = β'∧α + d(γ'∧α) of a sampled field.
#[derive(Debug, Clone)]
pub struct ExactDecomposition {
    pub beta_prime: CovectorField,
    pub gamma_prime: CovectorField,
}

pub fn contact_decompose_exact(kappa: &CovectorField) -> Result<ExactDecomposition> {
    let n = kappa.ambient_dim();
    let m = half_dim(n)?;
    let k = kappa.degree;
    if k < m + 1 || k > 2 * m + 1 {
        return Err(Error::Degree(format!("degree {k} outside {}..={}", m + 1, 2 * m + 1)));
    }
    if kappa.grid.shape().iter().any(|&s| s < 3) {
        return Err(precondition("grid too coarse to differentiate: fewer than 3 nodes per axis"));
    }
    let d_alpha = symplectic(n, m).scale(4.0);
    let (beta, gamma) = if k == 2 * m + 1 {
        let norm = 4f64.powi(m as i32) * (1..=m).map(|i| i as f64).product::<f64>();
        let beta = CovectorField::from_nodes(&kappa.grid, k - 1, &vec![Covector::zero(n, k - 1); kappa.grid.node_count()])?;
        let base = wedge_power(&d_alpha, m - 1);
        let gamma = kappa.map_nodes(k - 2, |c, x| {
            let f = c.coeff(&(0..n as u8).collect::<Vec<_>>()) / norm;
            Ok(wedge(&contact_form_at(&point_at(x)), &base)?.scale(f))
        })?;
        (beta, gamma)
    } else {
        let pow = wedge_power(&d_alpha, k - m - 1);
        let pairs: Vec<(Covector, Covector)> = (0..kappa.grid.node_count())
            .map(|i| contact_decompose_pointwise(&kappa.at(i), &point_at(&kappa.grid.coords(i))))
            .collect::<Result<_>>()?;
        let betas: Vec<Covector> = pairs.iter().map(|p| p.0.clone()).collect();
        let gammas: Vec<Covector> = pairs.iter().map(|p| wedge(&p.1, &pow)).collect::<Result<_>>()?;
        (
            CovectorField::from_nodes(&kappa.grid, k - 1, &betas)?,
            CovectorField::from_nodes(&kappa.grid, k - 2, &gammas)?,
        )
    };
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let dgamma = gamma.exterior_derivative()?;
    let beta_prime = CovectorField::new(
        k - 1,
        beta.grid.with_values(
            beta.grid.ncomp(),
            beta.grid.values().iter().zip(dgamma.grid.values()).map(|(b, d)| b - sign * d).collect(),
        )?,
    )?;
    let gamma_prime = CovectorField::new(
        k - 2,
        gamma.grid.with_values(gamma.grid.ncomp(), gamma.grid.values().iter().map(|g| sign * g).collect())?,
    )?;
    Ok(ExactDecomposition { beta_prime, gamma_prime })
}

/// β'∧α + d(γ'∧α), with d by the same finite differences.
pub fn contact_reconstruct(split: &ExactDecomposition) -> Result<CovectorField> {
    let k = split.beta_prime.degree + 1;
    let alpha = |x: &[f64]| contact_form_at(&point_at(x));
    let first = split.beta_prime.map_nodes(k, |b, x| wedge(b, &alpha(x)))?;
    let ga = split.gamma_prime.map_nodes(k - 1, |g, x| wedge(g, &alpha(x)))?;
    let second = ga.exterior_derivative()?;
    let v: Vec<f64> = first.grid.values().iter().zip(second.grid.values()).map(|(a, b)| a + b).collect();
    CovectorField::new(k, first.grid.with_values(first.grid.ncomp(), v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_area_form() {
        let kappa = Covector::basis(3, &[0, 1]).unwrap();
        let p = HPoint::from_coords(&[0.3, -0.7, 2.0]).unwrap();
        let (b, g) = contact_decompose_pointwise(&kappa, &p).unwrap();
        assert!(b.is_zero());
        assert_eq!(g.degree(), 0);
        assert!((g.coeff(&[]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_form_splits_to_zero() {
        let p = HPoint::identity(2);
        let (b, g) = contact_decompose_pointwise(&Covector::zero(5, 3), &p).unwrap();
        assert!(b.is_zero() && g.is_zero());
    }

    #[test]
    fn degree_range() {
        let p = HPoint::identity(1);
        assert!(contact_decompose_pointwise(&Covector::basis(3, &[0]).unwrap(), &p).is_err());
        assert!(contact_decompose_pointwise(&Covector::basis(4, &[0, 1]).unwrap(), &p).is_err());
    }

    #[test]
    fn constant_area_field() {
        let kappa = CovectorField::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![5, 5, 5], 2, |_| {
            Covector::basis(3, &[0, 1]).unwrap()
        })
        .unwrap();
        let split = contact_decompose_exact(&kappa).unwrap();
        for i in 0..split.gamma_prime.grid.node_count() {
            assert!((split.gamma_prime.at(i).coeff(&[]) - 0.25).abs() < 1e-15);
            assert!(split.beta_prime.at(i).max_abs() < 1e-13);
        }
        let back = contact_reconstruct(&split).unwrap();
        assert!(back.max_diff(&kappa) < 1e-12);
    }

    #[test]
    fn top_degree_field() {
        let kappa = CovectorField::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![9, 9, 9], 3, |x| {
            Covector::basis(3, &[0, 1, 2]).unwrap().scale(1.0 + x[0] * x[2])
        })
        .unwrap();
        let split = contact_decompose_exact(&kappa).unwrap();
        let back = contact_reconstruct(&split).unwrap();
        assert!(back.max_diff(&kappa) < 1e-10);
    }

    #[test]
    fn coarse_grid_rejected() {
        let kappa = CovectorField::from_fn(vec![0.0; 3], vec![1.0; 3], vec![2, 3, 3], 2, |_| Covector::zero(3, 2)).unwrap();
        assert!(contact_decompose_exact(&kappa).is_err());
    }
}
