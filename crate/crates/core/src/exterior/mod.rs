//! Covectors on R^n: wedge, Hodge star, interior product and the
//! symplectic (Lefschetz) maps.
//!
//! Indices are 0-based in memory and 1-based on the wire.

mod contact;
mod lefschetz;

pub use contact::{
    contact_decompose_exact, contact_decompose_pointwise, contact_reconstruct, CovectorField,
    ExactDecomposition,
};
pub use lefschetz::{lefschetz_apply, lefschetz_condition, lefschetz_invert, MAX_LEFSCHETZ_DIM};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing multi-index, 0-based.
pub type MultiIndex = Vec<u8>;

/// A k-covector on R^n, stored sparsely on the basis dx_I.
///
/// A covector whose degree exceeds `n` is the zero result of an
/// overflowing wedge; see [`Covector::overflowed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    n: usize,
    k: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

/// Sign of the permutation sorting `idx`, or `None` if it repeats an entry.
/// Insertion sort with swap counting.
pub fn sort_sign(idx: &mut [u8]) -> Option<f64> {
    let mut swaps = 0usize;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// All strictly increasing k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<u8> = (0..k as u8).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (cur[i] as usize) < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl Covector {
    pub fn zero(n: usize, k: usize) -> Self {
        Covector { n, k, terms: BTreeMap::new() }
    }

    /// The constant c as a 0-covector.
    pub fn scalar(n: usize, c: f64) -> Self {
        let mut z = Self::zero(n, 0);
        z.set(vec![], c);
        z
    }

    /// c·dx_I for an arbitrary (possibly unsorted) 0-based index list.
    pub fn basis(n: usize, idx: &[usize]) -> Result<Self> {
        let mut out = Self::zero(n, idx.len());
        if idx.iter().any(|&i| i >= n) {
            return Err(Error::Degree(format!("index out of range for R^{n}")));
        }
        if idx.len() > n {
            return Ok(out);
        }
        let mut key: Vec<u8> = idx.iter().map(|&i| i as u8).collect();
        if let Some(s) = sort_sign(&mut key) {
            out.set(key, s);
        }
        Ok(out)
    }

    /// Builds a covector from (0-based index list, coefficient) pairs.
    pub fn from_terms(n: usize, k: usize, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut out = Self::zero(n, k);
        for (idx, c) in terms {
            if idx.len() != k {
                return Err(Error::Degree(format!("term of length {} in a {k}-covector", idx.len())));
            }
            let b = Self::basis(n, idx)?;
            for (key, s) in b.terms {
                out.add_to(key, s * c);
            }
        }
        Ok(out)
    }

    /// Dense coefficients in [`combinations`] order.
    pub fn from_dense(n: usize, k: usize, coeffs: &[f64]) -> Self {
        let mut out = Self::zero(n, k);
        for (key, &c) in combinations(n, k).into_iter().zip(coeffs) {
            out.set(key, c);
        }
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        combinations(self.n, self.k).iter().map(|key| self.coeff(key)).collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// True for the zero result of a wedge whose degree exceeded the ambient dimension.
    pub fn overflowed(&self) -> bool {
        self.k > self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn coeff(&self, key: &[u8]) -> f64 {
        self.terms.get(key).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn set(&mut self, key: MultiIndex, c: f64) {
        if c == 0.0 {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, c);
        }
    }

    fn add_to(&mut self, key: MultiIndex, c: f64) {
        let v = self.coeff(&key) + c;
        self.set(key, v);
    }

    fn check_same(&self, other: &Covector) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("R^{} vs R^{}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Covector) -> Result<Covector> {
        self.check_same(other)?;
        if self.k != other.k {
            return Err(Error::Degree(format!("adding degrees {} and {}", self.k, other.k)));
        }
        let mut out = self.clone();
        for (key, &c) in &other.terms {
            out.add_to(key.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Covector) -> Result<Covector> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Covector {
        let mut out = Self::zero(self.n, self.k);
        for (key, &c) in &self.terms {
            out.set(key.clone(), c * s);
        }
        out
    }

    /// Inner product making the dx_I orthonormal.
    pub fn dot(&self, other: &Covector) -> f64 {
        self.terms.iter().map(|(key, &c)| c * other.coeff(key)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// True when no index is in `coords`.
    pub fn avoids(&self, coords: &[usize]) -> bool {
        self.terms.keys().all(|key| key.iter().all(|&i| !coords.contains(&(i as usize))))
    }

    /// Reinterprets the covector on R^m, m ≥ every used index.
    pub fn with_ambient(&self, m: usize) -> Result<Covector> {
        if self.terms.keys().flatten().any(|&i| i as usize >= m) || self.k > m {
            return Err(Error::DimensionMismatch(format!("cannot place a covector of R^{} into R^{m}", self.n)));
        }
        Ok(Covector { n: m, k: self.k, terms: self.terms.clone() })
    }

    /// Evaluates the covector on k vectors.
    pub fn eval(&self, vs: &[Vec<f64>]) -> Result<f64> {
        if vs.len() != self.k {
            return Err(Error::Degree(format!("{} arguments for a {}-covector", vs.len(), self.k)));
        }
        let mut acc = 0.0;
        for (key, &c) in &self.terms {
            // determinant of the k×k minor
            let m: Vec<Vec<f64>> = vs.iter().map(|v| key.iter().map(|&i| v[i as usize]).collect()).collect();
            acc += c * det(m);
        }
        Ok(acc)
    }
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let k = m.len();
    let mut d = 1.0;
    for c in 0..k {
        let p = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..k {
            let f = m[r][c] / m[c][c];
            for j in c..k {
                m[r][j] -= f * m[c][j];
            }
        }
    }
    d
}

/// Wedge product. Dimension mismatch is an error; degree overflow gives
/// the flagged zero covector.
pub fn wedge(a: &Covector, b: &Covector) -> Result<Covector> {
    a.check_same(b)?;
    let mut out = Covector::zero(a.n, a.k + b.k);
    if a.k + b.k > a.n {
        return Ok(out);
    }
    for (ka, &ca) in &a.terms {
        for (kb, &cb) in &b.terms {
            let mut key: Vec<u8> = ka.iter().chain(kb.iter()).copied().collect();
            if let Some(s) = sort_sign(&mut key) {
                out.add_to(key, s * ca * cb);
            }
        }
    }
    Ok(out)
}

/// Hodge star: ∗dx_I = sgn(I, J) dx_J with J the complement of I.
pub fn hodge_star(a: &Covector) -> Covector {
    let mut out = Covector::zero(a.n, a.n.saturating_sub(a.k));
    for (key, &c) in &a.terms {
        let comp: Vec<u8> = (0..a.n as u8).filter(|i| !key.contains(i)).collect();
        let mut perm: Vec<u8> = key.iter().chain(comp.iter()).copied().collect();
        let s = sort_sign(&mut perm).expect("disjoint indices");
        out.set(comp, s * c);
    }
    out
}

/// Contraction ι_v a.
pub fn interior_product(v: &[f64], a: &Covector) -> Result<Covector> {
    if v.len() != a.n {
        return Err(Error::DimensionMismatch(format!("vector of length {} on R^{}", v.len(), a.n)));
    }
    if a.k == 0 {
        return Err(Error::Degree("interior product of a 0-covector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("non-finite vector entry".into()));
    }
    let mut out = Covector::zero(a.n, a.k - 1);
    for (key, &c) in &a.terms {
        for (pos, &i) in key.iter().enumerate() {
            let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let mut rest = key.clone();
            rest.remove(pos);
            out.add_to(rest, s * v[i as usize] * c);
        }
    }
    Ok(out)
}

/// ω = Σ dx_j ∧ dy_j on the first 2m coordinates of R^ambient (interleaved layout).
pub fn symplectic(ambient: usize, m: usize) -> Covector {
    assert!(2 * m <= ambient);
    let mut out = Covector::zero(ambient, 2);
    for j in 0..m {
        out.set(vec![2 * j as u8, 2 * j as u8 + 1], 1.0);
    }
    out
}

/// a ∧ a ∧ … (p factors); p = 0 gives the constant 1.
pub fn wedge_power(a: &Covector, p: usize) -> Covector {
    let mut out = Covector::scalar(a.n, 1.0);
    for _ in 0..p {
        out = wedge(&out, a).expect("same ambient dimension");
    }
    out
}

#[derive(Serialize, Deserialize)]
struct WireTerm {
    idx: Vec<usize>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct WireCovector {
    n: usize,
    k: usize,
    terms: Vec<WireTerm>,
}

impl Serialize for Covector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireCovector {
            n: self.n,
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|(key, &c)| WireTerm { idx: key.iter().map(|&i| i as usize + 1).collect(), c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Covector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireCovector::deserialize(d)?;
        if w.k > w.n {
            return Err(D::Error::custom("degree exceeds ambient dimension"));
        }
        let mut out = Covector::zero(w.n, w.k);
        for t in w.terms {
            if t.idx.len() != w.k || t.idx.iter().any(|&i| i == 0 || i > w.n) {
                return Err(D::Error::custom("bad multi-index"));
            }
            if t.idx.windows(2).any(|p| p[0] >= p[1]) {
                return Err(D::Error::custom("multi-index not strictly increasing"));
            }
            if !t.c.is_finite() {
                return Err(D::Error::custom("non-finite coefficient"));
            }
            out.add_to(t.idx.iter().map(|&i| (i - 1) as u8).collect(), t.c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        for n in 0..7 {
            for k in 0..=n {
                let c = combinations(n, k);
                assert_eq!(c.len(), binomial(n, k));
                assert!(c.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn basis_wedges() {
        let dx1 = Covector::basis(3, &[0]).unwrap();
        let dx2 = Covector::basis(3, &[1]).unwrap();
        let w = wedge(&dx1, &dx2).unwrap();
        assert_eq!(w.coeff(&[0, 1]), 1.0);
        assert!(wedge(&dx1, &dx1).unwrap().is_zero());
        assert_eq!(wedge(&dx2, &dx1).unwrap().coeff(&[0, 1]), -1.0);
    }

    #[test]
    fn omega_squared() {
        let w = symplectic(4, 2);
        let w2 = wedge(&w, &w).unwrap();
        assert_eq!(w2.coeff(&[0, 1, 2, 3]), 2.0);
        assert_eq!(w2.terms().count(), 1);
    }

    #[test]
    fn overflow_flag() {
        let a = Covector::basis(2, &[0, 1]).unwrap();
        let b = Covector::basis(2, &[0]).unwrap();
        let w = wedge(&a, &b).unwrap();
        assert!(w.overflowed() && w.is_zero());
        assert_eq!(w.degree(), 3);
    }

    #[test]
    fn mismatch_is_error() {
        let a = Covector::basis(2, &[0]).unwrap();
        let b = Covector::basis(3, &[0]).unwrap();
        assert!(matches!(wedge(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn stars() {
        let dx1 = Covector::basis(3, &[0]).unwrap();
        assert_eq!(hodge_star(&dx1).coeff(&[1, 2]), 1.0);
        let dx2 = Covector::basis(3, &[1]).unwrap();
        assert_eq!(hodge_star(&dx2).coeff(&[0, 2]), -1.0);
        let vol = Covector::basis(2, &[0, 1]).unwrap();
        assert_eq!(hodge_star(&vol).coeff(&[]), 1.0);
    }

    #[test]
    fn contraction_basic() {
        let a = Covector::basis(2, &[0, 1]).unwrap();
        let r = interior_product(&[1.0, 0.0], &a).unwrap();
        assert_eq!(r.coeff(&[1]), 1.0);
        assert!(interior_product(&[1.0, 0.0], &Covector::scalar(2, 1.0)).is_err());
    }

    #[test]
    fn eval_matches_determinant() {
        let a = Covector::basis(3, &[0, 2]).unwrap();
        let v = vec![vec![1.0, 5.0, 2.0], vec![3.0, 7.0, 4.0]];
        assert_eq!(a.eval(&v).unwrap(), 1.0 * 4.0 - 2.0 * 3.0);
    }

    #[test]
    fn json_round_trip() {
        let a = Covector::from_terms(4, 2, &[(vec![0, 3], 1.5), (vec![2, 1], 2.0)]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"idx\":[2,3]"));
        assert!(s.contains("\"c\":-2.0"));
        let b: Covector = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Covector>(r#"{"n":2,"k":1,"terms":[{"idx":[3],"c":1}]}"#).is_err());
    }
}
