use std::io::{Read, Write};

use crate::error::{precondition, Error, Result};

/// Samples of a map from a box in R^m to R^N on a uniform grid.
///
/// Nodes are stored row-major (last axis fastest); node `i` owns
/// `values[i*N..(i+1)*N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    ncomp: usize,
    values: Vec<f64>,
}

impl GridMap {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != shape.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch("box and shape lengths differ".into()));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(precondition("grid needs at least 2 nodes per axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(precondition("empty box"));
        }
        let nodes: usize = shape.iter().product();
        if values.len() != nodes * ncomp || ncomp == 0 {
            return Err(Error::DimensionMismatch(format!("{} values for {nodes} nodes x {ncomp}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(precondition("non-finite grid value"));
        }
        Ok(GridMap { lo, hi, shape, ncomp, values })
    }

    pub fn from_fn<F>(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, ncomp: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let nodes: usize = shape.iter().product();
        let mut g = GridMap { lo, hi, shape, ncomp, values: vec![0.0; nodes * ncomp] };
        for i in 0..nodes {
            let x = g.coords(i);
            let v = f(&x);
            g.values[i * ncomp..(i + 1) * ncomp].copy_from_slice(&v[..ncomp]);
        }
        GridMap::new(g.lo, g.hi, g.shape, g.ncomp, g.values)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            idx[a] = node % self.shape[a];
            node /= self.shape[a];
        }
        idx
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lo[a] + i as f64 * self.spacing(a))
            .collect()
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.ncomp..(node + 1) * self.ncomp]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.ncomp).copied().collect()
    }

    /// Same geometry, new values.
    pub fn with_values(&self, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        GridMap::new(self.lo.clone(), self.hi.clone(), self.shape.clone(), ncomp, values)
    }

    /// Builds a grid from per-component node arrays.
    pub fn from_components(&self, comps: &[Vec<f64>]) -> Result<Self> {
        let nodes = self.node_count();
        let mut v = vec![0.0; nodes * comps.len()];
        for (c, comp) in comps.iter().enumerate() {
            for i in 0..nodes {
                v[i * comps.len() + c] = comp[i];
            }
        }
        self.with_values(comps.len(), v)
    }

    /// Multilinear interpolation, clamped to the box.
    pub fn interpolate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncomp];
        self.interpolate_into(x, &mut out);
        out
    }

    /// [`GridMap::interpolate`] writing into `out` (length N).
    pub fn interpolate_into(&self, x: &[f64], out: &mut [f64]) {
        if self.dim() == 2 {
            let locate = |a: usize| {
                let s = ((x[a] - self.lo[a]) / self.spacing(a)).clamp(0.0, (self.shape[a] - 1) as f64);
                let i = (s.floor() as usize).min(self.shape[a] - 2);
                (i, s - i as f64)
            };
            let ((i, u), (j, v)) = (locate(0), locate(1));
            let nc = self.ncomp;
            let n00 = i * self.shape[1] + j;
            let n10 = n00 + self.shape[1];
            let w = [(n00, (1.0 - u) * (1.0 - v)), (n00 + 1, (1.0 - u) * v), (n10, u * (1.0 - v)), (n10 + 1, u * v)];
            for (c, o) in out.iter_mut().enumerate() {
                *o = w.iter().map(|&(n, wt)| wt * self.values[n * nc + c]).sum();
            }
            return;
        }
        let m = self.dim();
        let mut base = vec![0usize; m];
        let mut frac = vec![0.0; m];
        for a in 0..m {
            let s = ((x[a] - self.lo[a]) / self.spacing(a)).clamp(0.0, (self.shape[a] - 1) as f64);
            let i = (s.floor() as usize).min(self.shape[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..m {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let node = self.linear(&idx);
            for (o, v) in out.iter_mut().zip(self.value(node)) {
                *o += w * v;
            }
        }
    }

    /// Writes the binary layout: eight little-endian f64 header entries
    /// `[m, N, n0, n1, lo0, hi0, lo1, hi1]` followed by the row-major values.
    /// Only m = 1 or 2 fits the header; for m = 1 the second axis reads `1, 0, 0`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        if self.dim() > 2 {
            return Err(precondition("binary grid layout holds at most two axes"));
        }
        let (n1, lo1, hi1) = if self.dim() == 2 { (self.shape[1] as f64, self.lo[1], self.hi[1]) } else { (1.0, 0.0, 0.0) };
        let header = [self.dim() as f64, self.ncomp as f64, self.shape[0] as f64, n1, self.lo[0], self.hi[0], lo1, hi1];
        for v in header.iter().chain(self.values.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() % 8 != 0 || buf.len() < 64 {
            return Err(Error::Parse("truncated grid file".into()));
        }
        let vals: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let h = &vals[..8];
        let as_count = |x: f64| -> Result<usize> {
            if x.fract() != 0.0 || x < 1.0 {
                return Err(Error::Parse(format!("bad count {x} in grid header")));
            }
            Ok(x as usize)
        };
        let m = as_count(h[0])?;
        let ncomp = as_count(h[1])?;
        let (lo, hi, shape) = match m {
            1 => (vec![h[4]], vec![h[5]], vec![as_count(h[2])?]),
            2 => (vec![h[4], h[6]], vec![h[5], h[7]], vec![as_count(h[2])?, as_count(h[3])?]),
            _ => return Err(Error::Parse(format!("grid header dimension {m}"))),
        };
        GridMap::new(lo, hi, shape, ncomp, vals[8..].to_vec()).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Second-order finite-difference partial derivative of one node array along `axis`:
/// central in the interior, one-sided three-point at the ends.
pub fn fd_partial(values: &[f64], shape: &[usize], h: f64, axis: usize) -> Result<Vec<f64>> {
    let n = shape[axis];
    if n < 3 {
        return Err(precondition("finite differences need at least 3 nodes per axis"));
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; values.len()];
    for (node, o) in out.iter_mut().enumerate() {
        let i = (node / stride) % n;
        let v = |d: isize| values[(node as isize + d * stride as isize) as usize];
        *o = if i == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h)
        } else {
            (v(1) - v(-1)) / (2.0 * h)
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = GridMap::from_fn(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0], vec![3, 4, 5], 1, |x| vec![x[0]]).unwrap();
        for node in 0..g.node_count() {
            assert_eq!(g.linear(&g.multi_index(node)), node);
        }
        assert_eq!(g.coords(g.linear(&[2, 3, 4])), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn fd_exact_on_quadratics() {
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 7], 1, |x| vec![x[0] * x[0] + 3.0 * x[1]]).unwrap();
        let dx = fd_partial(g.values(), g.shape(), g.spacing(0), 0).unwrap();
        let dy = fd_partial(g.values(), g.shape(), g.spacing(1), 1).unwrap();
        for node in 0..g.node_count() {
            let x = g.coords(node);
            assert!((dx[node] - 2.0 * x[0]).abs() < 1e-12);
            assert!((dy[node] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse() {
        assert!(fd_partial(&[0.0, 1.0], &[2], 1.0, 0).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let g = GridMap::from_fn(vec![-1.0, 0.0], vec![1.0, 2.0], vec![4, 3], 2, |x| vec![x[0], x[1] * x[0]]).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (8 + 24));
        assert_eq!(GridMap::read_binary(&buf[..]).unwrap(), g);
        assert!(GridMap::read_binary(&buf[..40]).is_err());
    }

    #[test]
    fn bilinear_exact_on_linear() {
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 4], 1, |x| vec![2.0 * x[0] - x[1]]).unwrap();
        let v = g.interpolate(&[0.37, 0.81]);
        assert!((v[0] - (0.74 - 0.81)).abs() < 1e-14);
    }
}
