//! Gauss–Legendre rules on [−1, 1] and composite panels.

pub(crate) const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_8),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

pub(crate) const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_42),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_2),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_2),
    (0.906_179_845_938_664, 0.236_926_885_056_189_42),
];

/// Nodes and weights of `panels` five-point panels on [a, b].
pub(crate) fn composite_gl5(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let w = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(5 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (x, wt) in GL5 {
            out.push((mid + 0.5 * w * x, 0.5 * w * wt));
        }
    }
    out
}

/// ∫_a^b f with one five-point rule.
pub(crate) fn gl5<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL5.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        // five points integrate degree 9 exactly
        let v = gl5(0.0, 2.0, |x| x.powi(9));
        assert!((v - 102.4).abs() < 1e-12);
        let s: f64 = GL3.iter().map(|(x, w)| w * x.powi(4)).sum();
        assert!((s - 0.4).abs() < 1e-15);
        let c: f64 = composite_gl5(0.0, 1.0, 7).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((c - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
