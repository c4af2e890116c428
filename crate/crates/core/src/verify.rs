//! The acceptance criteria as runnable checks with a named tolerance table.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{
    binomial, contact_decompose_exact, contact_decompose_pointwise, contact_reconstruct, hodge_star,
    interior_product, lefschetz_apply, lefschetz_invert, symplectic, wedge, wedge_power, Covector, CovectorField,
};
use crate::heisenberg::{contact_form_at, dilate, group_mul, koranyi_dist, HPoint};
use crate::hodge::{
    d_spectral, delta_spectral, gaffney_check, hodge_decompose, nilpotency_defect, random_form, split_report,
    star_spectral, FourierForm,
};
use crate::holder::{weierstrass_field, weierstrass_path, weierstrass_spiral, GridMap, MollifierKernel, SampledPath};
use crate::horizontal::{area_identity, decay_exponent_fit, horizontal_lift_curve, lift_map, DecayForm, LiftOutcome};
use crate::planar::{change_of_variables_check, oriented_area_green, winding_field, winding_integral, ClosedCurve2D};
use crate::young::{dyadic_eps, fourier_block_bounds, young_bound_check, young_mollified, young_rs};

/// (key, default, meaning)
const DEFAULTS: &[(&str, f64, &str)] = &[
    ("exterior.residual", 1e-12, "max residual of the pointwise algebra identities"),
    ("contact.pointwise", 1e-12, "pointwise contact reconstruction residual"),
    ("contact.grid_order", 1.8, "minimum observed order of the grid reconstruction"),
    ("metric.symmetry", 0.0, "max |d(p,q) - d(q,p)|"),
    ("metric.triangle_slack", 1e-12, "max triangle-inequality violation"),
    ("metric.dilation", 1e-12, "max relative dilation defect"),
    ("metric.left_invariance", 1e-12, "max left-translation defect"),
    ("young.smooth", 1e-8, "smooth integrals against the closed form"),
    ("young.cross_method", 1e-3, "relative gap between the two Young methods"),
    ("young.corpus_constant", 7.73, "bound on the Young-Loeve ratio over the corpus"),
    ("young.block_ratio", 4.0, "bound on Fourier block energy over its Hölder bound"),
    ("green.circle", 1e-8, "circle: Green area against pi and against the winding integral"),
    ("green.perturbed_gap", 1e-2, "relative Green/winding-field gap on perturbed circles"),
    ("cov.identity", 1e-6, "identity map: both sides against pi"),
    ("cov.perturbed_gap", 1e-2, "relative gap of the two sides for a perturbed map"),
    ("lift.circle", 1e-6, "lifted circle height change against -4 pi"),
    ("lift.area_identity", 1.0, "height/area mismatch as a fraction of the combined error bound"),
    ("lift.uniqueness", 1e-9, "deviation of two lifts from a vertical translate"),
    ("obstruction.area", 1e-3, "boundary-loop area of the identity map against pi"),
    ("obstruction.tree", 1e-6, "spanning-tree deviation for curl-free maps"),
    ("decay.contact_min", 0.4, "minimum fitted contact slope"),
    ("decay.generic_slack", 0.1, "allowed shortfall of the generic slope below its ceiling"),
    ("decay.control", 0.05, "|slope| for the vertical-line control"),
    ("hodge.reconstruction", 1e-10, "relative reconstruction residual"),
    ("hodge.orthogonality", 1e-10, "relative pairwise inner products"),
    ("hodge.pythagoras", 1e-9, "relative Pythagoras defect"),
    ("hodge.uniqueness", 1e-12, "parts after a harmonic shift of the potential"),
    ("hodge.seed_spread", 0.05, "relative spread of corpus ratios between seed batches"),
    ("hodge.nilpotency", 0.0, "largest entry of the integer symbols of dd and δδ"),
    ("hodge.float_nilpotency", 1e-12, "relative size of dd w and δδ w in floating point"),
    ("hodge.potential_bound", 0.0, "potentials violating the lowest-frequency Poincaré bound"),
    ("hodge.gaffney_min", 1.0, "lower bound of the Gaffney ratio"),
    ("hodge.ratio_bound", 1.0, "corpus ratio maxima as fractions of their analytic bounds"),
    ("hodge.flagged", 0.0, "mean-zero corpus forms flagged harmonic"),
    ("determinism.differences", 0.0, "differing manifest bytes between repeated runs"),
];

/// Named tolerances; unknown keys are rejected when overriding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULTS.iter().map(|(k, v, _)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("tolerance {key} missing from the table"))
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !self.0.contains_key(key) {
            return Err(Error::Parse(format!("unknown tolerance key {key:?}")));
        }
        if !value.is_finite() {
            return Err(Error::Parse(format!("tolerance {key} is not finite")));
        }
        self.0.insert(key.to_string(), value);
        Ok(())
    }

    /// Overrides from a JSON object of key → number.
    pub fn apply_json(&mut self, text: &str) -> Result<()> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        for (k, v) in map {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn describe() -> Vec<(&'static str, f64, &'static str)> {
        DEFAULTS.to_vec()
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub tolerance_key: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub suite: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub passed: bool,
}

impl CriterionReport {
    /// One line: status, id, suite, then every check as measured vs bound.
    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{status}] C{:02} {:<12} {}", self.id, self.suite, self.title);
        if let Some(e) = &self.error {
            s.push_str(&format!(" | error: {e}"));
        }
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let mark = if c.passed { "" } else { " !" };
            s.push_str(&format!(" | {} {:.3e} {rel} {:.3e}{mark}", c.label, c.measured, c.bound));
        }
        s
    }
}

/// (id, suite, title)
pub const CRITERIA: &[(u8, &str, &str)] = &[
    (1, "exterior", "exterior algebra identities"),
    (2, "exterior", "contact decompositions"),
    (3, "heisenberg", "Korányi metric axioms"),
    (4, "young", "Young integrals"),
    (5, "winding", "Green area and winding field"),
    (6, "winding", "change of variables"),
    (7, "lift", "horizontal lifting"),
    (8, "lift", "lift obstruction"),
    (9, "decay", "contact decay rates"),
    (10, "hodge", "Hodge decomposition on tori"),
    (11, "determinism", "repeatable manifests"),
];

#[derive(Debug, Clone)]
#[derive(Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub tolerances: Tolerances,
}


/// Criteria whose id, suite or title contains `filter` (all when None).
pub fn select(filter: Option<&str>) -> Vec<u8> {
    CRITERIA
        .iter()
        .filter(|(id, suite, title)| match filter {
            None => true,
            Some(f) => {
                let f = f.to_lowercase();
                suite.contains(&f) || title.to_lowercase().contains(&f) || f == id.to_string() || f == format!("c{id:02}")
            }
        })
        .map(|c| c.0)
        .collect()
}

struct Collector<'a> {
    tol: &'a Tolerances,
    checks: Vec<Check>,
}

impl Collector<'_> {
    fn at_most(&mut self, label: &str, key: &str, measured: f64) {
        let bound = self.tol.get(key);
        let passed = measured <= bound;
        self.push(label, key, measured, bound, Relation::AtMost, passed);
    }

    fn at_least(&mut self, label: &str, key: &str, measured: f64) {
        let bound = self.tol.get(key);
        self.at_least_bound(label, key, measured, bound);
    }

    fn at_least_bound(&mut self, label: &str, key: &str, measured: f64, bound: f64) {
        let passed = measured >= bound;
        self.push(label, key, measured, bound, Relation::AtLeast, passed);
    }

    fn push(&mut self, label: &str, key: &str, measured: f64, bound: f64, relation: Relation, passed: bool) {
        self.checks.push(Check {
            label: label.to_string(),
            tolerance_key: key.to_string(),
            measured,
            bound,
            relation,
            // NaN never passes
            passed: passed && !measured.is_nan(),
        });
    }
}

/// Runs one criterion; failures inside the computation become a failed report.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionReport {
    let &(_, suite, title) = CRITERIA.iter().find(|c| c.0 == id).expect("known criterion id");
    let mut col = Collector { tol: &opts.tolerances, checks: Vec::new() };
    let seed = opts.seed;
    let outcome = match id {
        1 => exterior_identities(&mut col, seed),
        2 => contact_splittings(&mut col, seed),
        3 => metric_axioms(&mut col, seed),
        4 => young_suite(&mut col, seed),
        5 => green_winding(&mut col, seed),
        6 => change_of_variables(&mut col, seed),
        7 => lifting(&mut col, seed),
        8 => obstruction(&mut col),
        9 => decay(&mut col, seed),
        10 => hodge_suite(&mut col, seed),
        11 => determinism(&mut col, seed),
        _ => unreachable!(),
    };
    let error = outcome.err().map(|e| e.to_string());
    let passed = error.is_none() && !col.checks.is_empty() && col.checks.iter().all(|c| c.passed);
    CriterionReport { id, suite: suite.to_string(), title: title.to_string(), checks: col.checks, error, passed }
}

/// Runs the selected criteria in order, returning reports and per-criterion seconds.
pub fn verify_all(ids: &[u8], opts: &VerifyOptions) -> (Vec<CriterionReport>, Vec<(u8, f64)>) {
    let mut reports = Vec::with_capacity(ids.len());
    let mut timing = Vec::with_capacity(ids.len());
    for &id in ids {
        let t = Instant::now();
        reports.push(run_criterion(id, opts));
        timing.push((id, t.elapsed().as_secs_f64()));
    }
    (reports, timing)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_covector(r: &mut ChaCha8Rng, n: usize, k: usize) -> Covector {
    let coeffs: Vec<f64> = (0..binomial(n, k)).map(|_| r.gen_range(-1.0..1.0)).collect();
    Covector::from_dense(n, k, &coeffs)
}

fn diff(a: &Covector, b: &Covector) -> Result<f64> {
    Ok(a.sub(b)?.max_abs())
}

fn sign(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn exterior_identities(col: &mut Collector, seed: u64) -> Result<()> {
    let mut r = rng(seed, 1);
    let (mut anti, mut star, mut leib, mut power, mut lef) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = r.gen_range(1..=8usize);
        let k = r.gen_range(0..=n);
        let l = r.gen_range(0..=n);
        let a = random_covector(&mut r, n, k);
        let b = random_covector(&mut r, n, l);
        anti = anti.max(diff(&wedge(&a, &b)?, &wedge(&b, &a)?.scale(sign(k * l)))?);
        star = star.max(diff(&hodge_star(&hodge_star(&a)), &a.scale(sign(k * (n - k))))?);
        let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        if k >= 1 && l >= 1 {
            let lhs = interior_product(&v, &wedge(&a, &b)?)?;
            let rhs = wedge(&interior_product(&v, &a)?, &b)?.add(&wedge(&a, &interior_product(&v, &b)?)?.scale(sign(k)))?;
            leib = leib.max(diff(&lhs, &rhs)?);
        }
        // symplectic powers and Lefschetz on R^{2m}, m ≤ 4
        let m = r.gen_range(1..=4usize);
        let omega = symplectic(2 * m, m);
        let p = r.gen_range(1..=m);
        let v: Vec<f64> = (0..2 * m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let lhs = interior_product(&v, &wedge_power(&omega, p))?;
        let rhs = wedge(&wedge_power(&omega, p - 1), &interior_product(&v, &omega)?)?.scale(p as f64);
        power = power.max(diff(&lhs, &rhs)?);
        let x = random_covector(&mut r, 2 * m, m - p);
        lef = lef.max(diff(&lefschetz_invert(&lefschetz_apply(&x, p)?, p)?, &x)?);
    }
    col.at_most("wedge_anticommute", "exterior.residual", anti);
    col.at_most("star_star_sign", "exterior.residual", star);
    col.at_most("interior_leibniz", "exterior.residual", leib);
    col.at_most("interior_of_power", "exterior.residual", power);
    col.at_most("lefschetz_roundtrip", "exterior.residual", lef);
    Ok(())
}

fn trig_kappa(x: &[f64], k: usize, coeffs: &[(f64, [f64; 3], f64)]) -> Covector {
    let vals: Vec<f64> =
        coeffs.iter().map(|(a, w, ph)| a * (w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + ph).sin()).collect();
    Covector::from_dense(3, k, &vals)
}

fn contact_splittings(col: &mut Collector, seed: u64) -> Result<()> {
    let mut r = rng(seed, 2);
    let mut worst = 0.0f64;
    let mut dt_free = true;
    for _ in 0..1000 {
        let m = r.gen_range(1..=2usize);
        let n = 2 * m + 1;
        let k = r.gen_range(m + 1..=2 * m);
        let kappa = random_covector(&mut r, n, k);
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let p = HPoint::from_coords(&c)?;
        let (beta, gamma) = contact_decompose_pointwise(&kappa, &p)?;
        dt_free &= beta.avoids(&[n - 1]) && gamma.avoids(&[n - 1]);
        let dalpha = symplectic(n, m).scale(4.0);
        let back = wedge(&beta, &contact_form_at(&p))?.add(&wedge(&gamma, &wedge_power(&dalpha, k - m))?)?;
        worst = worst.max(diff(&back, &kappa)?);
    }
    col.at_most("pointwise_residual", "contact.pointwise", worst);
    col.at_most("pointwise_dt_components", "contact.pointwise", if dt_free { 0.0 } else { 1.0 });

    // grid reconstruction under refinement, degree 2 on H^1
    let coeffs: Vec<(f64, [f64; 3], f64)> = (0..3)
        .map(|_| {
            (r.gen_range(0.5..1.0), [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)], r.gen_range(0.0..TAU))
        })
        .collect();
    let mut res = Vec::new();
    for cells in [8usize, 16, 32, 64] {
        let field = CovectorField::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![cells + 1; 3], 2, |x| trig_kappa(x, 2, &coeffs))?;
        let split = contact_decompose_exact(&field)?;
        res.push(contact_reconstruct(&split)?.max_diff(&field));
    }
    let order = (res[res.len() - 2] / res[res.len() - 1]).log2();
    col.at_least("grid_order", "contact.grid_order", order);
    Ok(())
}

fn random_hpoint(r: &mut ChaCha8Rng, n: usize) -> Result<HPoint> {
    let z: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-1.0..1.0)).collect();
    HPoint::new(z, r.gen_range(-1.0..1.0))
}

fn metric_axioms(col: &mut Collector, seed: u64) -> Result<()> {
    let mut r = rng(seed, 3);
    let (mut sym, mut tri, mut dil, mut left) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for i in 0..100_000 {
        let n = 1 + i % 3;
        let p = random_hpoint(&mut r, n)?;
        let q = random_hpoint(&mut r, n)?;
        let s = random_hpoint(&mut r, n)?;
        let dpq = koranyi_dist(&p, &q)?.koranyi;
        let dqp = koranyi_dist(&q, &p)?.koranyi;
        sym = sym.max((dpq - dqp).abs());
        let dps = koranyi_dist(&p, &s)?.koranyi;
        let dqs = koranyi_dist(&q, &s)?.koranyi;
        tri = tri.max(dps - dpq - dqs);
        if i % 10 == 0 {
            let rr = r.gen_range(0.0..4.0);
            let d = koranyi_dist(&dilate(&p, rr)?, &dilate(&q, rr)?)?.koranyi;
            dil = dil.max((d - rr * dpq).abs() / (rr * dpq).max(f64::MIN_POSITIVE));
            let g = random_hpoint(&mut r, n)?;
            let dg = koranyi_dist(&group_mul(&g, &p)?, &group_mul(&g, &q)?)?.koranyi;
            left = left.max((dg - dpq).abs());
        }
    }
    col.at_most("symmetry", "metric.symmetry", sym);
    col.at_most("triangle_slack", "metric.triangle_slack", tri.max(0.0));
    col.at_most("dilation_relative", "metric.dilation", dil);
    col.at_most("left_invariance", "metric.left_invariance", left);
    Ok(())
}

fn young_suite(col: &mut Collector, seed: u64) -> Result<()> {
    let kernel = MollifierKernel::default();
    // (a) smooth: ∫_0^1 cos(3t) d(t³)
    let f = SampledPath::from_fn(0.0, 1.0, 4096, 1, |t| vec![(3.0 * t).cos()])?;
    let g = SampledPath::from_fn(0.0, 1.0, 4096, 1, |t| vec![t * t * t])?;
    let anti = |t: f64| 3.0 * (t * t * (3.0 * t).sin() / 3.0 + 2.0 * t * (3.0 * t).cos() / 9.0 - 2.0 * (3.0 * t).sin() / 27.0);
    let exact = anti(1.0) - anti(0.0);
    let rs = young_rs(&f, &g, 6, Some(1.0), Some(1.0))?;
    let mo = young_mollified(&f, &g, &dyadic_eps(0.08, 4), &kernel, Some(1.0), Some(1.0))?;
    col.at_most("smooth_rs", "young.smooth", (rs.value - exact).abs());
    col.at_most("smooth_mollified", "young.smooth", (mo.value - exact).abs());

    // (b) Weierstrass pairs, α = β = 0.6, N = 2^14
    let mut cross = 0.0f64;
    for s in 0..4 {
        let f = weierstrass_path(0.6, 2, 14, 1 << 14, 1, seed * 1000 + 2 * s)?;
        let g = weierstrass_path(0.6, 2, 14, 1 << 14, 1, seed * 1000 + 2 * s + 1)?;
        let a = young_rs(&f, &g, 8, None, None)?;
        let b = young_mollified(&f, &g, &dyadic_eps(1.0 / 64.0, 12), &kernel, None, None)?;
        cross = cross.max((a.value - b.value).abs() / a.value.abs().max(1e-300));
    }
    col.at_most("weierstrass_cross_method", "young.cross_method", cross);

    // (c) Young–Loève ratio over 100 seeds
    let mut ratio = 0.0f64;
    for s in 0..100 {
        let f = weierstrass_path(0.6, 2, 10, 1 << 10, 1, seed * 1000 + 300 + 2 * s)?;
        let g = weierstrass_path(0.6, 2, 10, 1 << 10, 1, seed * 1000 + 301 + 2 * s)?;
        ratio = ratio.max(young_bound_check(&f, &g, 0.6, 0.6)?.ratio);
    }
    col.at_most("corpus_ratio_max", "young.corpus_constant", ratio);

    // (d) Fourier blocks of base-2 Weierstrass, k ≤ 10
    let w = weierstrass_path(0.6, 2, 12, 1 << 12, 1, seed * 1000 + 999)?;
    let worst = fourier_block_bounds(&w, 0.6)?
        .iter()
        .filter(|b| b.k <= 10)
        .map(|b| b.energy / b.bound)
        .fold(0.0, f64::max);
    col.at_most("block_ratio_max", "young.block_ratio", worst);
    Ok(())
}

fn green_winding(col: &mut Collector, seed: u64) -> Result<()> {
    let circle = ClosedCurve2D::from_fn(1 << 16, |s| ((TAU * s).cos(), (TAU * s).sin()))?;
    let g = oriented_area_green(&circle, 1.0)?;
    let band = winding_integral(&circle, |_, _| 1.0);
    col.at_most("circle_green_vs_pi", "green.circle", (g.value - PI).abs());
    col.at_most("circle_green_vs_winding", "green.circle", (g.value - band).abs());

    let mut gap = 0.0f64;
    for s in 0..3 {
        let w = weierstrass_path(0.8, 2, 14, 1 << 14, 2, seed * 1000 + 50 + s)?;
        let curve = ClosedCurve2D::from_fn(1 << 14, |t| {
            let i = (t * (1 << 14) as f64).round() as usize;
            let p = w.point(i);
            ((TAU * t).cos() + 0.1 * p[0], (TAU * t).sin() + 0.1 * p[1])
        })?;
        let green = oriented_area_green(&curve, 0.8)?;
        let field = winding_field(&curve, 1 << 10)?;
        gap = gap.max((green.value - field.integral()).abs() / green.value.abs());
    }
    col.at_most("perturbed_relative_gap", "green.perturbed_gap", gap);
    Ok(())
}

fn change_of_variables(col: &mut Collector, seed: u64) -> Result<()> {
    let kernel = MollifierKernel::default();
    let (lo, hi, shape) = (vec![-1.25, -1.25], vec![1.25, 1.25], vec![512, 512]);
    let id = GridMap::from_fn(lo.clone(), hi.clone(), shape.clone(), 2, |x| x.to_vec())?;
    let eps = dyadic_eps(0.08, 4);
    let r = change_of_variables_check(&id, |_, _| 1.0, &eps, 1.0, &kernel)?;
    col.at_most("identity_lhs_vs_pi", "cov.identity", (r.lhs - PI).abs());
    col.at_most("identity_rhs_vs_pi", "cov.identity", (r.rhs - PI).abs());

    let noise = weierstrass_field(0.8, 2, 9, lo, hi, shape, 2, seed * 1000 + 7)?;
    let vals: Vec<f64> = id.values().iter().zip(noise.values()).map(|(a, b)| a + 0.1 * b).collect();
    let f = id.with_values(2, vals)?;
    let v = |x: f64, y: f64| 1.0 + 0.5 * x - 0.25 * y * y;
    let p = change_of_variables_check(&f, v, &eps, 0.8, &kernel)?;
    col.at_most("perturbed_relative_gap", "cov.perturbed_gap", p.gap / p.lhs.abs());
    Ok(())
}

fn lifting(col: &mut Collector, seed: u64) -> Result<()> {
    let circle = SampledPath::from_fn(0.0, 1.0, 1 << 12, 2, |s| vec![(TAU * s).cos(), (TAU * s).sin()])?;
    let lift = horizontal_lift_curve(&circle, 0.0, Some(1.0))?;
    let h = lift.height();
    col.at_most("circle_height_change", "lift.circle", (h[h.len() - 1] - h[0] + 4.0 * PI).abs());

    let mut worst_fraction = 0.0f64;
    let mut worst_dev = 0.0f64;
    for s in 0..10 {
        let w = weierstrass_path(0.75, 2, 12, 1 << 12, 2, seed * 1000 + 100 + s)?;
        let lift = horizontal_lift_curve(&w, 0.0, None)?;
        let id = area_identity(&lift, None, 512)?;
        let bound = id.height_error + id.field_bound + 1e-12 * (1.0 + id.height.abs());
        let mismatch = (id.height - id.area_sum).abs().max((id.height - id.field_area_sum).abs() - id.field_bound);
        worst_fraction = worst_fraction.max(mismatch / bound);
        let other = horizontal_lift_curve(&w, 2.5, None)?;
        let dev = lift.height().iter().zip(other.height()).map(|(a, b)| (b - a - 2.5).abs()).fold(0.0, f64::max);
        worst_dev = worst_dev.max(dev);
    }
    col.at_most("area_identity_fraction", "lift.area_identity", worst_fraction);
    col.at_most("uniqueness_deviation", "lift.uniqueness", worst_dev);
    Ok(())
}

fn circle_probe(c: (f64, f64), r: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let th = TAU * (i % n) as f64 / n as f64;
            (c.0 + r * th.cos(), c.1 + r * th.sin())
        })
        .collect()
}

fn obstruction(col: &mut Collector) -> Result<()> {
    let id = GridMap::from_fn(vec![-1.1, -1.1], vec![1.1, 1.1], vec![45, 45], 2, |x| x.to_vec())?;
    match lift_map(&id, [22, 22], 0.0, &[circle_probe((0.0, 0.0), 1.0, 4096)], 1.0, None)? {
        LiftOutcome::Obstructed(o) => {
            col.at_most("identity_boundary_area_vs_pi", "obstruction.area", (o.area_sum - PI).abs());
        }
        LiftOutcome::Lifted { .. } => {
            col.at_most("identity_refused", "obstruction.area", f64::INFINITY);
        }
    }
    // Lagrangian graphs (u, φ_u, v, φ_v) are curl-free for the Liouville form
    let mut worst = 0.0f64;
    let phis: [(f64, f64); 2] = [(1.0, 2.0), (2.5, -1.0)];
    for (a, b) in phis {
        let g = GridMap::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![65, 65], 4, |x| {
            let (u, v) = (x[0], x[1]);
            vec![u, a * (a * u).cos() * (b * v).cos(), v, -b * (a * u).sin() * (b * v).sin()]
        })?;
        match lift_map(&g, [32, 10], 0.0, &[circle_probe((0.5, 0.5), 0.2, 256)], 1.0, None)? {
            LiftOutcome::Lifted { tree_deviation, .. } => worst = worst.max(tree_deviation),
            LiftOutcome::Obstructed(_) => worst = f64::INFINITY,
        }
    }
    col.at_most("curl_free_tree_deviation", "obstruction.tree", worst);
    Ok(())
}

fn decay(col: &mut Collector, seed: u64) -> Result<()> {
    let kernel = MollifierKernel::default();
    let gamma = 0.75;
    let eps: Vec<f64> = (8..=15).map(|j| 2f64.powi(-j)).collect();
    let w = weierstrass_spiral(gamma, 2, 18, 1 << 18, seed)?;
    let lift = horizontal_lift_curve(&w, 0.0, None)?;
    let p = lift.path();
    let g = GridMap::new(vec![0.0], vec![1.0], vec![p.len()], 3, p.values().to_vec())?;
    let contact = decay_exponent_fit(&g, &DecayForm::ContactAlpha, &eps, gamma, &kernel)?;
    col.at_least("contact_slope", "decay.contact_min", contact.fitted_slope);
    let dy = Covector::basis(3, &[1])?;
    let generic = decay_exponent_fit(&g, &DecayForm::Generic(dy), &eps, gamma, &kernel)?;
    let floor = generic.reference_slope - col.tol.get("decay.generic_slack");
    col.at_least_bound("generic_slope", "decay.generic_slack", generic.fitted_slope, floor);

    let line = GridMap::from_fn(vec![0.0], vec![1.0], vec![1 << 14], 3, |x| vec![0.0, 0.0, x[0]])?;
    let control = decay_exponent_fit(&line, &DecayForm::ContactAlpha, &dyadic_eps(0.05, 8), 0.5, &kernel)?;
    col.at_most("vertical_control_slope", "decay.control", control.fitted_slope.abs());
    Ok(())
}

fn hodge_suite(col: &mut Collector, seed: u64) -> Result<()> {
    let (mut rec, mut orth, mut pyth, mut uniq, mut float_dd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut poincare_ok = true;
    for (k, m) in [(2usize, 32usize), (3, 16)] {
        for l in 0..=k {
            let w = random_form(k, l, m, seed * 1000 + 10 * k as u64 + l as u64, false)?;
            let scale = w.norm();
            let s = hodge_decompose(&w)?;
            let rep = split_report(&w, &s)?;
            rec = rec.max(rep.reconstruction / scale);
            orth = orth.max(rep.inner_d_delta.max(rep.inner_d_harmonic).max(rep.inner_delta_harmonic) / (scale * scale));
            pyth = pyth.max(rep.pythagoras / (scale * scale));
            // a harmonic shift of the ω₁ potential leaves the parts alone
            if let Some(o1) = &s.omega1 {
                let h = random_form(k, l - 1, m, seed + 77, false)?.harmonic_part();
                let shifted = d_spectral(&o1.add(&h)?)?;
                uniq = uniq.max(shifted.sub(&s.d_part)?.max_abs());
                // ‖ω₁‖ ≤ (2π)^{-1}‖dω₁‖ for mean-zero potentials
                poincare_ok &= o1.norm() <= s.d_part.norm() / TAU * (1.0 + 1e-12) + 1e-300;
            }
            let again = hodge_decompose(&w)?;
            uniq = uniq.max(again.delta_part.sub(&s.delta_part)?.max_abs());
            if l + 2 <= k {
                float_dd = float_dd.max(d_spectral(&d_spectral(&w)?)?.max_abs() / d_spectral(&w)?.max_abs().max(1e-300));
            }
            if l >= 2 {
                float_dd = float_dd.max(delta_spectral(&delta_spectral(&w)?)?.max_abs() / scale);
            }
            let ss = star_spectral(&star_spectral(&w));
            if ss != w.scale(sign(l * (k - l))) {
                float_dd = f64::INFINITY;
            }
        }
    }
    col.at_most("reconstruction", "hodge.reconstruction", rec);
    col.at_most("orthogonality", "hodge.orthogonality", orth);
    col.at_most("pythagoras", "hodge.pythagoras", pyth);
    col.at_most("uniqueness", "hodge.uniqueness", uniq);
    let defect = (nilpotency_defect(2, 32)? + nilpotency_defect(3, 16)?) as f64;
    col.at_most("dd_and_deltadelta_integer_symbol", "hodge.nilpotency", defect);
    col.at_most("dd_float_relative", "hodge.float_nilpotency", float_dd);
    col.at_most("poincare_potential_constant", "hodge.potential_bound", if poincare_ok { 0.0 } else { 1.0 });

    // Gaffney–Poincaré ratios on two batches of 100 mean-zero forms
    let mut stats = Vec::new();
    for batch in 0..2u64 {
        let corpus: Vec<FourierForm> = (0..100u64)
            .map(|i| {
                let (k, m) = if i % 2 == 0 { (2, 32) } else { (3, 16) };
                random_form(k, 1 + (i as usize / 2) % (k - 1), m, seed * 100_000 + batch * 1000 + i, true)
            })
            .collect::<Result<_>>()?;
        stats.push(gaffney_check(&corpus)?);
    }
    let g_hi = stats.iter().map(|s| s.gaffney_max).fold(0.0, f64::max);
    let g_lo = stats.iter().map(|s| s.gaffney_min).fold(f64::INFINITY, f64::min);
    let p_hi = stats.iter().map(|s| s.poincare_max).fold(0.0, f64::max);
    col.at_least("gaffney_min", "hodge.gaffney_min", g_lo);
    col.at_most("gaffney_max_over_sqrt3", "hodge.ratio_bound", g_hi / 3f64.sqrt());
    // per mode ‖w‖²_{1,2} ≤ (1 + 1/4π²)(‖dw‖² + ‖δw‖²)
    col.at_most("poincare_max_over_bound", "hodge.ratio_bound", p_hi / (1.0 + 1.0 / (TAU * TAU)).sqrt());
    let spread = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let sp = spread(stats[0].gaffney_max, stats[1].gaffney_max)
        .max(spread(stats[0].poincare_max, stats[1].poincare_max))
        .max(spread(stats[0].gaffney_min, stats[1].gaffney_min));
    col.at_most("seed_spread", "hodge.seed_spread", sp);
    let flagged = stats.iter().map(|s| s.harmonic_flagged.len()).sum::<usize>() as f64;
    col.at_most("harmonic_flagged", "hodge.flagged", flagged);
    Ok(())
}

fn determinism(col: &mut Collector, seed: u64) -> Result<()> {
    let differences = crate::cli::determinism_probe(seed)?;
    col.at_most("manifest_byte_differences", "determinism.differences", differences as f64);
    Ok(())
}
