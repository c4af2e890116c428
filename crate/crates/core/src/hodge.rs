//! Differential forms on flat tori T^k = R^k/Z^k stored by Fourier modes,
//! with d, δ, ∗, the Laplace solve and the Hodge decomposition.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{precondition, Error, Result};
use crate::exterior::{combinations, sort_sign, MultiIndex};

/// An ℓ-form on T^k with Fourier coefficients on the lattice [−M, M]^k for
/// every basis component dx_I. Mode ξ sits at index Σ_a (ξ_a + M)(2M+1)^{k−1−a}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierForm {
    k: usize,
    l: usize,
    m: usize,
    components: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl FourierForm {
    pub fn zero(k: usize, l: usize, m: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(precondition(format!("torus dimension {k} not in 1..=3")));
        }
        if l > k {
            return Err(Error::Degree(format!("{l}-form on T^{k}")));
        }
        let size = (2 * m + 1).pow(k as u32);
        let components = combinations(k, l).into_iter().map(|i| (i, vec![Complex64::new(0.0, 0.0); size])).collect();
        Ok(FourierForm { k, l, m, components })
    }

    pub fn torus_dim(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn cutoff(&self) -> usize {
        self.m
    }

    pub fn mode_count(&self) -> usize {
        (2 * self.m + 1).pow(self.k as u32)
    }

    pub fn components(&self) -> &BTreeMap<MultiIndex, Vec<Complex64>> {
        &self.components
    }

    pub fn component(&self, idx: &[u8]) -> Option<&[Complex64]> {
        self.components.get(idx).map(|v| v.as_slice())
    }

    pub fn component_mut(&mut self, idx: &[u8]) -> Option<&mut Vec<Complex64>> {
        self.components.get_mut(idx)
    }

    /// Frequency vector of lattice slot `s`.
    pub fn mode(&self, mut s: usize) -> Vec<i64> {
        let side = 2 * self.m + 1;
        let mut xi = vec![0i64; self.k];
        for a in (0..self.k).rev() {
            xi[a] = (s % side) as i64 - self.m as i64;
            s /= side;
        }
        xi
    }

    pub fn slot(&self, xi: &[i64]) -> Option<usize> {
        let side = (2 * self.m + 1) as i64;
        let mut s = 0i64;
        for &x in xi {
            if x.unsigned_abs() as usize > self.m {
                return None;
            }
            s = s * side + x + self.m as i64;
        }
        Some(s as usize)
    }

    fn zero_slot(&self) -> usize {
        self.slot(&vec![0; self.k]).expect("origin is on the lattice")
    }

    fn same_shape(&self, o: &FourierForm) -> Result<()> {
        if (self.k, self.l, self.m) != (o.k, o.l, o.m) {
            return Err(Error::DimensionMismatch(format!(
                "forms (k={}, l={}, M={}) and (k={}, l={}, M={})",
                self.k, self.l, self.m, o.k, o.l, o.m
            )));
        }
        Ok(())
    }

    fn zip_with(&self, o: &FourierForm, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<FourierForm> {
        self.same_shape(o)?;
        let mut out = self.clone();
        for (key, v) in out.components.iter_mut() {
            for (a, b) in v.iter_mut().zip(&o.components[key]) {
                *a = f(*a, *b);
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &FourierForm) -> Result<FourierForm> {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &FourierForm) -> Result<FourierForm> {
        self.zip_with(o, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> FourierForm {
        let mut out = self.clone();
        out.components.values_mut().flatten().for_each(|z| *z *= c);
        out
    }

    /// L² inner product over the unit torus (Parseval).
    pub fn inner(&self, o: &FourierForm) -> Result<f64> {
        self.same_shape(o)?;
        Ok(self
            .components
            .iter()
            .map(|(key, v)| v.iter().zip(&o.components[key]).map(|(a, b)| (a * b.conj()).re).sum::<f64>())
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same shape").max(0.0).sqrt()
    }

    /// ‖∇w‖₂ = (Σ 4π²|ξ|²|ŵ|²)^{1/2}.
    pub fn gradient_norm(&self) -> f64 {
        let mut s = 0.0;
        for v in self.components.values() {
            for (slot, z) in v.iter().enumerate() {
                s += TAU * TAU * self.xi2(slot) as f64 * z.norm_sqr();
            }
        }
        s.sqrt()
    }

    fn xi2(&self, slot: usize) -> i64 {
        self.mode(slot).iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.values().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of ŵ(−ξ) = conj ŵ(ξ).
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in self.components.values() {
            for s in 0..v.len() {
                let neg: Vec<i64> = self.mode(s).iter().map(|x| -x).collect();
                let t = self.slot(&neg).expect("lattice is symmetric");
                worst = worst.max((v[s] - v[t].conj()).norm());
            }
        }
        worst
    }

    /// Value of component dx_I at x.
    pub fn eval(&self, idx: &[u8], x: &[f64]) -> f64 {
        let Some(v) = self.components.get(idx) else { return 0.0 };
        v.iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(s, z)| {
                let phase: f64 = self.mode(s).iter().zip(x).map(|(&xi, &xa)| xi as f64 * xa).sum::<f64>() * TAU;
                (z * Complex64::from_polar(1.0, phase)).re
            })
            .sum()
    }

    /// Frequency-zero part of every component.
    pub fn harmonic_part(&self) -> FourierForm {
        let z = self.zero_slot();
        let mut out = FourierForm::zero(self.k, self.l, self.m).expect("shape already valid");
        for (key, v) in &self.components {
            out.components.get_mut(key).unwrap()[z] = v[z];
        }
        out
    }
}

/// Nonzero entries (row J, column I, axis a, sign) of the per-mode symbol of d
/// on ℓ-forms over T^k: (dw)_J gets sign·(2πi ξ_a) w_I with J = {a} ∪ I.
pub fn d_entries(k: usize, l: usize) -> Vec<(MultiIndex, MultiIndex, usize, i64)> {
    let mut out = Vec::new();
    for key in combinations(k, l) {
        for a in 0..k as u8 {
            let mut target: Vec<u8> = std::iter::once(a).chain(key.iter().copied()).collect();
            if let Some(sign) = sort_sign(&mut target) {
                out.push((target, key.clone(), a as usize, sign as i64));
            }
        }
    }
    out
}

/// Entries (source I, target J, sign) of the flat star on ℓ-forms over T^k.
pub fn star_entries(k: usize, l: usize) -> Vec<(MultiIndex, MultiIndex, i64)> {
    combinations(k, l)
        .into_iter()
        .map(|key| {
            let comp: Vec<u8> = (0..k as u8).filter(|i| !key.contains(i)).collect();
            let mut perm: Vec<u8> = key.iter().chain(comp.iter()).copied().collect();
            let s = sort_sign(&mut perm).expect("disjoint indices");
            (key, comp, s as i64)
        })
        .collect()
}

/// Exterior derivative, mode by mode.
pub fn d_spectral(w: &FourierForm) -> Result<FourierForm> {
    if w.l >= w.k {
        return Err(Error::Degree(format!("d of a top-degree form on T^{}", w.k)));
    }
    let mut out = FourierForm::zero(w.k, w.l + 1, w.m)?;
    let size = w.mode_count();
    let modes: Vec<Vec<i64>> = (0..size).map(|s| w.mode(s)).collect();
    for (target, key, a, sign) in d_entries(w.k, w.l) {
        let v = &w.components[&key];
        let dst = out.components.get_mut(&target).unwrap();
        for s in 0..size {
            let f = Complex64::new(0.0, sign as f64 * TAU * modes[s][a] as f64);
            dst[s] += f * v[s];
        }
    }
    Ok(out)
}

/// Flat Hodge star ∗dx_I = sgn(I, J) dx_J.
pub fn star_spectral(w: &FourierForm) -> FourierForm {
    let mut out = FourierForm::zero(w.k, w.k - w.l, w.m).expect("degree stays in range");
    for (key, comp, s) in star_entries(w.k, w.l) {
        out.components.insert(comp, w.components[&key].iter().map(|z| z * s as f64).collect());
    }
    out
}

type IntMatrix = BTreeMap<(MultiIndex, MultiIndex), i64>;

fn compose(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = IntMatrix::new();
    for ((r, m1), x) in a {
        for ((m2, c), y) in b {
            if m1 == m2 {
                *out.entry((r.clone(), c.clone())).or_insert(0) += x * y;
            }
        }
    }
    out
}

fn d_symbol(k: usize, l: usize, xi: &[i64]) -> IntMatrix {
    let mut out = IntMatrix::new();
    for (t, key, a, sign) in d_entries(k, l) {
        *out.entry((t, key)).or_insert(0) += sign * xi[a];
    }
    out
}

fn star_symbol(k: usize, l: usize) -> IntMatrix {
    star_entries(k, l).into_iter().map(|(key, comp, s)| ((comp, key), s)).collect()
}

/// δ's integer symbol (without the 2πi factor) on ℓ-forms.
fn delta_symbol(k: usize, l: usize, xi: &[i64]) -> IntMatrix {
    let sign = if (k * (l - 1) + 1).is_multiple_of(2) { 1 } else { -1 };
    let m = compose(&star_symbol(k, k - l + 1), &compose(&d_symbol(k, k - l, xi), &star_symbol(k, l)));
    m.into_iter().map(|(key, v)| (key, sign * v)).collect()
}

/// Largest entry of the integer symbols of d∘d and δ∘δ over every mode of the
/// lattice [−M, M]^k and every degree; zero means both vanish exactly.
pub fn nilpotency_defect(k: usize, m: usize) -> Result<i64> {
    let probe = FourierForm::zero(k, 0, m)?;
    let mut worst = 0i64;
    for s in 0..probe.mode_count() {
        let xi = probe.mode(s);
        for l in 0..=k {
            if l + 2 <= k {
                let dd = compose(&d_symbol(k, l + 1, &xi), &d_symbol(k, l, &xi));
                worst = worst.max(dd.values().map(|v| v.abs()).max().unwrap_or(0));
            }
            if l >= 2 {
                let ss = compose(&delta_symbol(k, l - 1, &xi), &delta_symbol(k, l, &xi));
                worst = worst.max(ss.values().map(|v| v.abs()).max().unwrap_or(0));
            }
        }
    }
    Ok(worst)
}

/// Codifferential δ = (−1)^{k(ℓ−1)+1} ∗ d ∗ on ℓ-forms over T^k.
pub fn delta_spectral(w: &FourierForm) -> Result<FourierForm> {
    if w.l == 0 {
        return Err(Error::Degree("δ of a 0-form".into()));
    }
    let sign = if (w.k * (w.l - 1) + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(star_spectral(&d_spectral(&star_spectral(w))?).scale(sign))
}

/// Solution η of Δη = w − h with h the harmonic part; η has no harmonic part.
/// Δ = dδ + δd acts on mode ξ as 4π²|ξ|².
pub fn laplace_solve(w: &FourierForm) -> (FourierForm, FourierForm) {
    let mut eta = w.clone();
    for v in eta.components.values_mut() {
        for (s, z) in v.iter_mut().enumerate() {
            let q = w.xi2(s);
            *z = if q == 0 { Complex64::new(0.0, 0.0) } else { *z / (TAU * TAU * q as f64) };
        }
    }
    (eta, w.harmonic_part())
}

/// Δ applied per mode.
pub fn laplacian(w: &FourierForm) -> FourierForm {
    let mut out = w.clone();
    for v in out.components.values_mut() {
        for (s, z) in v.iter_mut().enumerate() {
            *z *= TAU * TAU * w.xi2(s) as f64;
        }
    }
    out
}

/// w = dω₁ + δω₂ + h with ω₁ = δη, ω₂ = dη and Δη = w − h.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeSplit {
    pub d_part: FourierForm,
    pub delta_part: FourierForm,
    pub harmonic: FourierForm,
    /// degree ℓ − 1; absent for functions
    pub omega1: Option<FourierForm>,
    /// degree ℓ + 1; absent for top-degree forms
    pub omega2: Option<FourierForm>,
}

pub fn hodge_decompose(w: &FourierForm) -> Result<HodgeSplit> {
    let (eta, harmonic) = laplace_solve(w);
    let zero = FourierForm::zero(w.k, w.l, w.m)?;
    let omega1 = if w.l > 0 { Some(delta_spectral(&eta)?) } else { None };
    let omega2 = if w.l < w.k { Some(d_spectral(&eta)?) } else { None };
    let d_part = match &omega1 {
        Some(o) => d_spectral(o)?,
        None => zero.clone(),
    };
    let delta_part = match &omega2 {
        Some(o) => delta_spectral(o)?,
        None => zero,
    };
    Ok(HodgeSplit { d_part, delta_part, harmonic, omega1, omega2 })
}

/// Residuals of a split: reconstruction, the three pairwise inner products,
/// Pythagoras, and the side conditions δω₁ = 0, dω₂ = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub reconstruction: f64,
    pub inner_d_delta: f64,
    pub inner_d_harmonic: f64,
    pub inner_delta_harmonic: f64,
    pub pythagoras: f64,
    pub delta_omega1: f64,
    pub d_omega2: f64,
}

pub fn split_report(w: &FourierForm, s: &HodgeSplit) -> Result<SplitReport> {
    let rest = w.sub(&s.d_part)?.sub(&s.delta_part)?.sub(&s.harmonic)?;
    let side = |o: &Option<FourierForm>, f: fn(&FourierForm) -> Result<FourierForm>| -> Result<f64> {
        match o {
            Some(o) if o.l > 0 && o.l < o.k || (o.l == 0 && o.k > 0) => f(o).map(|r| r.norm()).or(Ok(0.0)),
            _ => Ok(0.0),
        }
    };
    Ok(SplitReport {
        reconstruction: rest.norm(),
        inner_d_delta: s.d_part.inner(&s.delta_part)?.abs(),
        inner_d_harmonic: s.d_part.inner(&s.harmonic)?.abs(),
        inner_delta_harmonic: s.delta_part.inner(&s.harmonic)?.abs(),
        pythagoras: (w.norm().powi(2) - s.d_part.norm().powi(2) - s.delta_part.norm().powi(2) - s.harmonic.norm().powi(2))
            .abs(),
        delta_omega1: side(&s.omega1, delta_spectral)?,
        d_omega2: side(&s.omega2, d_spectral)?,
    })
}

/// Range of the Gaffney and Poincaré-type ratios over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaffneyReport {
    /// (‖w‖ + ‖dw‖ + ‖δw‖)/‖w‖_{1,2}
    pub gaffney_min: f64,
    pub gaffney_max: f64,
    /// ‖w‖_{1,2}/(‖dw‖ + ‖δw‖), over forms with nonzero dw or δw
    pub poincare_min: f64,
    pub poincare_max: f64,
    /// corpus positions where dw = δw = 0
    pub harmonic_flagged: Vec<usize>,
}

pub fn gaffney_check(corpus: &[FourierForm]) -> Result<GaffneyReport> {
    if corpus.is_empty() {
        return Err(precondition("empty corpus"));
    }
    let mut r = GaffneyReport {
        gaffney_min: f64::INFINITY,
        gaffney_max: 0.0,
        poincare_min: f64::INFINITY,
        poincare_max: 0.0,
        harmonic_flagged: Vec::new(),
    };
    for (i, w) in corpus.iter().enumerate() {
        let n0 = w.norm();
        let dn = if w.l < w.k { d_spectral(w)?.norm() } else { 0.0 };
        let sn = if w.l > 0 { delta_spectral(w)?.norm() } else { 0.0 };
        let sob = (n0 * n0 + w.gradient_norm().powi(2)).sqrt();
        if sob == 0.0 {
            continue;
        }
        let g = (n0 + dn + sn) / sob;
        r.gaffney_min = r.gaffney_min.min(g);
        r.gaffney_max = r.gaffney_max.max(g);
        if dn + sn <= 1e-14 * sob {
            r.harmonic_flagged.push(i);
            continue;
        }
        let p = sob / (dn + sn);
        r.poincare_min = r.poincare_min.min(p);
        r.poincare_max = r.poincare_max.max(p);
    }
    Ok(r)
}

/// Random real ℓ-form with coefficients uniform in the unit disc, damped by
/// (1 + |ξ|²)^{−1}. `mean_zero` drops the harmonic part.
pub fn random_form(k: usize, l: usize, m: usize, seed: u64, mean_zero: bool) -> Result<FourierForm> {
    let mut w = FourierForm::zero(k, l, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = w.mode_count();
    let zero = w.zero_slot();
    let modes: Vec<Vec<i64>> = (0..size).map(|s| w.mode(s)).collect();
    for v in w.components.values_mut() {
        // slots past the origin pair with their mirror images below it
        for s in zero..size {
            let damp = 1.0 / (1.0 + modes[s].iter().map(|x| (x * x) as f64).sum::<f64>());
            let z = if s == zero {
                if mean_zero { Complex64::new(0.0, 0.0) } else { Complex64::new(rng.gen_range(-1.0..1.0), 0.0) }
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp
            };
            v[s] = z;
            v[2 * zero - s] = z.conj();
        }
    }
    Ok(w)
}

#[derive(Serialize, Deserialize)]
struct WireForm {
    k: usize,
    l: usize,
    #[serde(rename = "M")]
    m: usize,
    components: BTreeMap<String, Vec<[f64; 2]>>,
}

fn key_string(idx: &[u8]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

impl FourierForm {
    /// `{"k", "l", "M", "components": {"1,2": [[re, im], …]}}`, indices 1-based,
    /// modes in lattice order.
    pub fn to_json_value(&self) -> Value {
        let wire = WireForm {
            k: self.k,
            l: self.l,
            m: self.m,
            components: self
                .components
                .iter()
                .map(|(key, v)| (key_string(key), v.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        };
        serde_json::to_value(wire).expect("plain data serializes")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json_value())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: WireForm = serde_json::from_str(s)?;
        let mut w = FourierForm::zero(wire.k, wire.l, wire.m).map_err(|e| Error::Parse(e.to_string()))?;
        let size = w.mode_count();
        for (key, vals) in wire.components {
            let idx: Vec<u8> = if key.is_empty() {
                Vec::new()
            } else {
                key.split(',')
                    .map(|p| p.trim().parse::<u8>().ok().filter(|&i| i >= 1 && i as usize <= wire.k).map(|i| i - 1))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::Parse(format!("bad component key {key:?}")))?
            };
            if idx.len() != wire.l || idx.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::Parse(format!("component {key:?} is not an increasing {}-index", wire.l)));
            }
            if vals.len() != size {
                return Err(Error::Parse(format!("component {key:?} has {} modes, expected {size}", vals.len())));
            }
            if vals.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Parse("non-finite coefficient".into()));
            }
            w.components.insert(idx, vals.iter().map(|p| Complex64::new(p[0], p[1])).collect());
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(k: usize, l: usize, m: usize, idx: &[u8], xi: &[i64], c: Complex64) -> FourierForm {
        let mut w = FourierForm::zero(k, l, m).unwrap();
        let s = w.slot(xi).unwrap();
        w.component_mut(idx).unwrap()[s] = c;
        let neg: Vec<i64> = xi.iter().map(|x| -x).collect();
        let t = w.slot(&neg).unwrap();
        w.component_mut(idx).unwrap()[t] += c.conj();
        w
    }

    #[test]
    fn lattice_order() {
        let w = FourierForm::zero(2, 0, 2).unwrap();
        assert_eq!(w.mode(0), vec![-2, -2]);
        assert_eq!(w.mode(1), vec![-2, -1]);
        assert_eq!(w.slot(&[0, 0]), Some(12));
        assert_eq!(w.slot(&[3, 0]), None);
    }

    #[test]
    fn derivative_of_sine() {
        // sin(2πx) = (e^{2πix} − e^{−2πix})/2i
        let w = single(2, 0, 3, &[], &[1, 0], Complex64::new(0.0, -0.5));
        assert!((w.eval(&[], &[0.125, 0.3]) - (TAU * 0.125).sin()).abs() < 1e-15);
        let dw = d_spectral(&w).unwrap();
        for x in [0.0, 0.2, 0.7] {
            assert!((dw.eval(&[0], &[x, 0.4]) - TAU * (TAU * x).cos()).abs() < 1e-12);
            assert_eq!(dw.eval(&[1], &[x, 0.4]), 0.0);
        }
        let c = single(2, 0, 3, &[], &[0, 0], Complex64::new(0.5, 0.0));
        assert_eq!(d_spectral(&c).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn nilpotent_and_signs() {
        for (k, m) in [(2, 4), (3, 3)] {
            for l in 0..=k {
                let w = random_form(k, l, m, 5 + l as u64, false).unwrap();
                let scale = w.max_abs() * (TAU * m as f64).powi(2) * 1e-15;
                if l + 2 <= k {
                    assert!(d_spectral(&d_spectral(&w).unwrap()).unwrap().max_abs() <= scale);
                }
                if l >= 2 {
                    assert!(delta_spectral(&delta_spectral(&w).unwrap()).unwrap().max_abs() <= scale);
                }
                let ss = star_spectral(&star_spectral(&w));
                let sign = if (l * (k - l)) % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(ss, w.scale(sign));
                assert!(w.reality_defect() == 0.0);
            }
        }
    }

    #[test]
    fn symbols_are_nilpotent() {
        assert_eq!(nilpotency_defect(2, 3).unwrap(), 0);
        assert_eq!(nilpotency_defect(3, 2).unwrap(), 0);
        // δd on functions is |ξ|² as an integer symbol
        let xi = [2, -1];
        let m = compose(&delta_symbol(2, 1, &xi), &d_symbol(2, 0, &xi));
        assert_eq!(m.get(&(vec![], vec![])), Some(&-5));
    }

    #[test]
    fn delta_d_is_laplacian_on_functions() {
        let f = single(2, 0, 3, &[], &[2, -1], Complex64::new(0.3, 0.4));
        let lhs = delta_spectral(&d_spectral(&f).unwrap()).unwrap();
        let rhs = laplacian(&f);
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
        // constant 1-form is co-closed
        let c = single(2, 1, 2, &[1], &[0, 0], Complex64::new(0.5, 0.0));
        assert_eq!(delta_spectral(&c).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn laplace_single_mode_and_harmonic() {
        let w = single(3, 1, 2, &[2], &[1, 1, 0], Complex64::new(1.0, 0.0));
        let (eta, h) = laplace_solve(&w);
        assert_eq!(h.max_abs(), 0.0);
        assert!(eta.sub(&w.scale(1.0 / (2.0 * TAU * TAU))).unwrap().max_abs() < 1e-16);
        let c = single(2, 1, 2, &[0], &[0, 0], Complex64::new(0.5, 0.0));
        let (eta, h) = laplace_solve(&c);
        assert_eq!(eta.max_abs(), 0.0);
        assert_eq!(h, c);
        let r = random_form(2, 1, 6, 9, false).unwrap();
        let (eta, h) = laplace_solve(&r);
        assert!(laplacian(&eta).sub(&r.sub(&h).unwrap()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn decomposition_identities() {
        for (k, l) in [(2, 0), (2, 1), (2, 2), (3, 1), (3, 2)] {
            let w = random_form(k, l, 5, 31, false).unwrap();
            let s = hodge_decompose(&w).unwrap();
            let r = split_report(&w, &s).unwrap();
            assert!(r.reconstruction < 1e-10, "{k},{l}: {r:?}");
            assert!(r.inner_d_delta < 1e-10 && r.inner_d_harmonic < 1e-10 && r.inner_delta_harmonic < 1e-10);
            assert!(r.pythagoras < 1e-9);
            assert!(r.delta_omega1 < 1e-10 && r.d_omega2 < 1e-10);
        }
        // exact forms have no co-exact part
        let phi = random_form(2, 0, 4, 2, false).unwrap();
        let s = hodge_decompose(&d_spectral(&phi).unwrap()).unwrap();
        assert!(s.delta_part.max_abs() < 1e-12);
        assert_eq!(s.harmonic.max_abs(), 0.0);
    }

    #[test]
    fn gaffney_single_mode_and_flag() {
        // for one mode ξ: ‖dw‖² + ‖δw‖² = 4π²|ξ|²‖w‖²
        let w = single(2, 1, 3, &[0], &[1, 2], Complex64::new(0.2, 0.1));
        let r = gaffney_check(std::slice::from_ref(&w)).unwrap();
        let q = TAU * 5f64.sqrt();
        let dn = d_spectral(&w).unwrap().norm() / w.norm();
        let sn = delta_spectral(&w).unwrap().norm() / w.norm();
        assert!(((dn * dn + sn * sn) - q * q).abs() < 1e-9);
        let expect = (1.0 + dn + sn) / (1.0 + q * q).sqrt();
        assert!((r.gaffney_max - expect).abs() < 1e-12);
        let h = single(2, 1, 3, &[1], &[0, 0], Complex64::new(1.0, 0.0));
        let r = gaffney_check(&[w, h]).unwrap();
        assert_eq!(r.harmonic_flagged, vec![1]);
        assert!(gaffney_check(&[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let w = random_form(3, 2, 2, 4, true).unwrap();
        let back = FourierForm::from_json(&w.to_json().unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(w.to_json().unwrap().contains("\"1,2\""));
        assert!(FourierForm::from_json(r#"{"k":2,"l":1,"M":1,"components":{"3":[]}}"#).is_err());
    }
}
