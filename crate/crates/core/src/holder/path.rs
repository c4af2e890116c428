use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GridMap;
use crate::error::{precondition, Error, Result};

/// A curve in R^d sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
    gamma: Option<f64>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(precondition("a path needs at least two samples"));
        }
        if dim == 0 || values.len() != times.len() * dim {
            return Err(Error::DimensionMismatch(format!("{} values for {} samples in R^{dim}", values.len(), times.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(precondition("times must be strictly increasing"));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(precondition("non-finite sample"));
        }
        Ok(SampledPath { times, dim, values, gamma: None })
    }

    /// Samples `f` at N+1 equally spaced times on [a, b].
    pub fn from_fn<F>(a: f64, b: f64, n: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let times: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let mut values = Vec::with_capacity(times.len() * dim);
        for &t in &times {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!("sampler returned {} values, expected {dim}", v.len())));
            }
            values.extend(v);
        }
        SampledPath::new(times, dim, values)
    }

    /// Builds a path from per-component arrays on the given times.
    pub fn from_components(times: Vec<f64>, comps: &[Vec<f64>]) -> Result<Self> {
        let d = comps.len();
        let mut values = vec![0.0; times.len() * d];
        for (c, comp) in comps.iter().enumerate() {
            if comp.len() != times.len() {
                return Err(Error::DimensionMismatch("component length differs from time count".into()));
            }
            for (i, v) in comp.iter().enumerate() {
                values[i * d + c] = *v;
            }
        }
        SampledPath::new(times, d, values)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples N+1.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    /// Keeps only the listed components, in order.
    pub fn select(&self, comps: &[usize]) -> Result<SampledPath> {
        let cols: Vec<Vec<f64>> = comps.iter().map(|&c| self.component(c)).collect();
        let mut p = SampledPath::from_components(self.times.clone(), &cols)?;
        p.gamma = self.gamma;
        Ok(p)
    }

    /// Samples i..=j.
    pub fn slice(&self, i: usize, j: usize) -> Result<SampledPath> {
        if j <= i || j >= self.len() {
            return Err(precondition(format!("bad sample range {i}..={j}")));
        }
        let mut p = SampledPath::new(self.times[i..=j].to_vec(), self.dim, self.values[i * self.dim..(j + 1) * self.dim].to_vec())?;
        p.gamma = self.gamma;
        Ok(p)
    }

    /// Uniform spacing h if the times are equally spaced (relative tolerance 1e-9).
    pub fn uniform_spacing(&self) -> Option<f64> {
        let h = (self.end() - self.start()) / self.intervals() as f64;
        let ok = self.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        ok.then_some(h)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.point(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// CSV with columns t, v1..vd and a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let head: Vec<String> = std::iter::once("t".to_string()).chain((1..=self.dim).map(|c| format!("v{c}"))).collect();
        writeln!(w, "{}", head.join(","))?;
        for i in 0..self.len() {
            let mut row = format!("{:.17e}", self.times[i]);
            for v in self.point(i) {
                row.push_str(&format!(",{v:.17e}"));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<SampledPath> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut dim = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let nums: std::result::Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
            let nums = match nums {
                Ok(v) => v,
                Err(_) if times.is_empty() && lineno == 0 => continue,
                Err(_) => return Err(Error::Parse(format!("line {}: not numeric", lineno + 1))),
            };
            if nums.len() < 2 {
                return Err(Error::Parse(format!("line {}: need t and at least one value", lineno + 1)));
            }
            match dim {
                None => dim = Some(nums.len() - 1),
                Some(d) if d != nums.len() - 1 => {
                    return Err(Error::Parse(format!("line {}: ragged row", lineno + 1)));
                }
                _ => {}
            }
            times.push(nums[0]);
            values.extend_from_slice(&nums[1..]);
        }
        let dim = dim.ok_or_else(|| Error::Parse("empty path file".into()))?;
        SampledPath::new(times, dim, values).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Lacunary Fourier series Σ_{k<terms} a^{−kγ} cos(a^k 2πx + φ_k) per component,
/// sampled at x = i/N, i = 0..=N, with phases drawn from a seeded ChaCha stream.
pub fn weierstrass_path(gamma: f64, a_base: u32, terms: usize, n: usize, dim: usize, seed: u64) -> Result<SampledPath> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(precondition(format!("exponent {gamma} outside (0,1)")));
    }
    if a_base < 2 || n < 1 || dim == 0 {
        return Err(precondition("base must be at least 2 and N, d positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<Vec<f64>> =
        (0..dim).map(|_| (0..terms).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()).collect();
    let a = a_base as f64;
    let p = SampledPath::from_fn(0.0, 1.0, n, dim, |x| {
        phases
            .iter()
            .map(|ph| {
                let mut s = 0.0;
                let mut freq = 1.0;
                for (k, phi) in ph.iter().enumerate() {
                    // reduce the argument exactly: a^k·x mod 1 is exact for dyadic x and integer a
                    let arg = (freq * x).fract();
                    s += a.powf(-(k as f64) * gamma) * (std::f64::consts::TAU * arg + phi).cos();
                    freq *= a;
                }
                s
            })
            .collect()
    })?;
    Ok(p.with_gamma(gamma))
}

/// Complex lacunary series z(s) = Σ_{k<terms} a^{−kγ} exp(i(2π a^k s + φ_k)) as a
/// planar path (Re z, Im z) on s = i/N, with seeded phases.
pub fn weierstrass_spiral(gamma: f64, a_base: u32, terms: usize, n: usize, seed: u64) -> Result<SampledPath> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(precondition(format!("exponent {gamma} outside (0,1)")));
    }
    if a_base < 2 || n < 1 {
        return Err(precondition("base must be at least 2 and N positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let a = a_base as f64;
    let p = SampledPath::from_fn(0.0, 1.0, n, 2, |x| {
        let (mut re, mut im, mut freq) = (0.0, 0.0, 1.0);
        for (k, phi) in phases.iter().enumerate() {
            let arg = std::f64::consts::TAU * (freq * x).fract() + phi;
            let amp = a.powf(-(k as f64) * gamma);
            re += amp * arg.cos();
            im += amp * arg.sin();
            freq *= a;
        }
        vec![re, im]
    })?;
    Ok(p.with_gamma(gamma))
}

/// Two-variable analogue of [`weierstrass_path`] on a grid: component c is
/// Σ_k a^{−kγ} cos(2π a^k ⟨u_k, x⟩ + φ_k) with seeded random unit directions u_k.
pub fn weierstrass_field(
    gamma: f64,
    a_base: u32,
    terms: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    ncomp: usize,
    seed: u64,
) -> Result<GridMap> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(precondition(format!("exponent {gamma} outside (0,1)")));
    }
    if a_base < 2 || ncomp == 0 {
        return Err(precondition("base must be at least 2 and the component count positive"));
    }
    let m = lo.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // per component and term: phase and direction
    let modes: Vec<Vec<(f64, Vec<f64>)>> = (0..ncomp)
        .map(|_| {
            (0..terms)
                .map(|_| {
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let mut u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
                    u.iter_mut().for_each(|v| *v /= norm);
                    (phase, u)
                })
                .collect()
        })
        .collect();
    let a = a_base as f64;
    GridMap::from_fn(lo, hi, shape, ncomp, |x| {
        modes
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .enumerate()
                    .map(|(k, (phase, u))| {
                        let proj: f64 = u.iter().zip(x).map(|(p, q)| p * q).sum();
                        a.powf(-(k as f64) * gamma) * (std::f64::consts::TAU * a.powi(k as i32) * proj + phase).cos()
                    })
                    .sum()
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(SampledPath::new(vec![0.0], 1, vec![1.0]).is_err());
        assert!(SampledPath::new(vec![0.0, 0.0], 1, vec![1.0, 2.0]).is_err());
        assert!(SampledPath::new(vec![0.0, 1.0], 2, vec![1.0, 2.0]).is_err());
        assert!(SampledPath::new(vec![0.0, 1.0], 1, vec![f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = SampledPath::from_fn(0.0, 2.0, 7, 2, |t| vec![t.sin(), t * t]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = SampledPath::read_csv(&buf[..]).unwrap();
        assert_eq!(p, q);
        assert!(SampledPath::read_csv(&b"t,v1\n0,1\n1,2,3\n"[..]).is_err());
    }

    #[test]
    fn uniform_detection() {
        let p = SampledPath::from_fn(0.0, 1.0, 10, 1, |t| vec![t]).unwrap();
        assert!((p.uniform_spacing().unwrap() - 0.1).abs() < 1e-15);
        let q = SampledPath::new(vec![0.0, 0.1, 0.3], 1, vec![0.0; 3]).unwrap();
        assert!(q.uniform_spacing().is_none());
    }

    #[test]
    fn single_term_is_cosine() {
        let p = weierstrass_path(0.5, 2, 1, 64, 1, 3).unwrap();
        let q = weierstrass_path(0.5, 2, 1, 64, 1, 3).unwrap();
        assert_eq!(p, q);
        // a pure cosine of unit amplitude
        let mx = p.component(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(mx <= 1.0 && mx > 0.99);
        assert!((p.component(0)[0] - p.component(0)[64]).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ() {
        let p = weierstrass_path(0.6, 2, 8, 256, 1, 1).unwrap();
        let q = weierstrass_path(0.6, 2, 8, 256, 1, 2).unwrap();
        assert_ne!(p, q);
        assert_eq!(p.gamma(), Some(0.6));
    }
}
