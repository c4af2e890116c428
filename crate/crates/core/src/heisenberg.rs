//! The Heisenberg group H^n on R^{2n+1} with coordinates (x1,y1,…,xn,yn,t).

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::exterior::Covector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub z: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMetricReport {
    pub euclid: f64,
    pub koranyi: f64,
    pub phi: f64,
}

#[derive(Serialize, Deserialize)]
struct WirePoint {
    n: usize,
    z: Vec<f64>,
    t: f64,
}

impl HPoint {
    pub fn new(z: Vec<f64>, t: f64) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!("planar part of length {}", z.len())));
        }
        if z.iter().any(|v| !v.is_finite()) || !t.is_finite() {
            return Err(precondition("non-finite coordinate"));
        }
        Ok(HPoint { z, t })
    }

    /// Builds from the interleaved coordinate list (x1,y1,…,t).
    pub fn from_coords(c: &[f64]) -> Result<Self> {
        let (t, z) = c.split_last().ok_or_else(|| Error::DimensionMismatch("empty coordinates".into()))?;
        HPoint::new(z.to_vec(), *t)
    }

    pub fn identity(n: usize) -> Self {
        HPoint { z: vec![0.0; 2 * n], t: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.z.clone();
        c.push(self.t);
        c
    }

    pub fn x(&self, j: usize) -> f64 {
        self.z[2 * j]
    }

    pub fn y(&self, j: usize) -> f64 {
        self.z[2 * j + 1]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&WirePoint { n: self.n(), z: self.z.clone(), t: self.t })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: WirePoint = serde_json::from_str(s)?;
        if w.z.len() != 2 * w.n {
            return Err(Error::Parse(format!("n = {} but z has {} entries", w.n, w.z.len())));
        }
        HPoint::new(w.z, w.t)
    }

    /// CSV row: n, z…, t.
    pub fn to_csv_row(&self) -> String {
        let mut parts = vec![self.n().to_string()];
        parts.extend(self.z.iter().map(|v| format!("{v:.17e}")));
        parts.push(format!("{:.17e}", self.t));
        parts.join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals: Vec<&str> = row.trim().split(',').collect();
        let n: usize = vals[0].trim().parse().map_err(|_| Error::Parse(format!("bad n in {row:?}")))?;
        if vals.len() != 2 * n + 2 {
            return Err(Error::Parse(format!("expected {} fields in {row:?}", 2 * n + 2)));
        }
        let nums: Vec<f64> = vals[1..]
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))))
            .collect::<Result<_>>()?;
        HPoint::from_coords(&nums)
    }
}

fn same_n(p: &HPoint, q: &HPoint) -> Result<()> {
    if p.z.len() != q.z.len() {
        return Err(Error::DimensionMismatch(format!("H^{} vs H^{}", p.n(), q.n())));
    }
    Ok(())
}

/// (z,t)*(z',t') = (z+z', t+t'+2Σ(y_j x'_j − x_j y'_j)).
pub fn group_mul(p: &HPoint, q: &HPoint) -> Result<HPoint> {
    same_n(p, q)?;
    let mut skew = 0.0;
    for j in 0..p.n() {
        skew += p.y(j) * q.x(j) - p.x(j) * q.y(j);
    }
    Ok(HPoint { z: p.z.iter().zip(&q.z).map(|(a, b)| a + b).collect(), t: p.t + q.t + 2.0 * skew })
}

pub fn group_inv(p: &HPoint) -> HPoint {
    HPoint { z: p.z.iter().map(|v| -v).collect(), t: -p.t }
}

/// Skew term φ(p,q) = t − t' + 2Σ(x'_j y_j − x_j y'_j); the height of q^{-1}*p.
pub fn phi(p: &HPoint, q: &HPoint) -> Result<f64> {
    same_n(p, q)?;
    let mut s = 0.0;
    for j in 0..p.n() {
        s += q.x(j) * p.y(j) - p.x(j) * q.y(j);
    }
    Ok(p.t - q.t + 2.0 * s)
}

pub fn koranyi_dist(p: &HPoint, q: &HPoint) -> Result<HMetricReport> {
    let ph = phi(p, q)?;
    let dz2: f64 = p.z.iter().zip(&q.z).map(|(a, b)| (a - b) * (a - b)).sum();
    let euclid = (dz2 + (p.t - q.t) * (p.t - q.t)).sqrt();
    let koranyi = (dz2 * dz2 + ph * ph).sqrt().sqrt();
    Ok(HMetricReport { euclid, koranyi, phi: ph })
}

/// δ_r(z,t) = (rz, r²t).
pub fn dilate(p: &HPoint, r: f64) -> Result<HPoint> {
    if !(r >= 0.0) {
        return Err(precondition(format!("dilation factor {r} is negative")));
    }
    Ok(HPoint { z: p.z.iter().map(|v| r * v).collect(), t: r * r * p.t })
}

/// α(p) = dt + 2Σ(x_j dy_j − y_j dx_j) on R^{2n+1}.
pub fn contact_form_at(p: &HPoint) -> Covector {
    let n = p.n();
    let dim = 2 * n + 1;
    let mut terms = vec![(vec![2 * n], 1.0)];
    for j in 0..n {
        terms.push((vec![2 * j + 1], 2.0 * p.x(j)));
        terms.push((vec![2 * j], -2.0 * p.y(j)));
    }
    Covector::from_terms(dim, 1, &terms).expect("valid indices")
}

/// Left-invariant frame at p: X_j = ∂x_j + 2y_j ∂t, Y_j = ∂y_j − 2x_j ∂t.
pub fn frame_x(p: &HPoint, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * p.n() + 1];
    v[2 * j] = 1.0;
    v[2 * p.n()] = 2.0 * p.y(j);
    v
}

pub fn frame_y(p: &HPoint, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * p.n() + 1];
    v[2 * j + 1] = 1.0;
    v[2 * p.n()] = -2.0 * p.x(j);
    v
}

pub fn frame_t(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * n + 1];
    v[2 * n] = 1.0;
    v
}

/// Best constants with c_lower·|p−q| ≤ d_K ≤ c_upper·|p−q|^{1/2} over all pairs.
pub fn metric_comparison_check(points: &[HPoint]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(precondition("need at least two points"));
    }
    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let r = koranyi_dist(&points[i], &points[j])?;
            if r.euclid == 0.0 {
                continue;
            }
            lower = lower.min(r.koranyi / r.euclid);
            upper = upper.max(r.koranyi / r.euclid.sqrt());
        }
    }
    if !lower.is_finite() {
        return Err(precondition("all points coincide"));
    }
    Ok((lower, upper))
}
