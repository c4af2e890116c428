//! Batch frontend: experiment configs in, CSV/JSON artifacts plus a checksummed
//! manifest out.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{precondition, Error, Result};
use crate::exterior::Covector;
use crate::heisenberg::{koranyi_dist, metric_comparison_check, HPoint};
use crate::hodge::{hodge_decompose, random_form, split_report, FourierForm};
use crate::holder::{
    weierstrass_field, weierstrass_path, weierstrass_spiral, GridMap, MollifierKernel, SampledPath,
};
use crate::horizontal::{decay_exponent_fit, height_change, horizontal_lift_curve, horizontality_residual, DecayForm};
use crate::planar::{oriented_area_green, winding_field, zust_jacobian_square, ClosedCurve2D};
use crate::verify::{self, Tolerances, VerifyOptions};
use crate::young::{auto_depth, dyadic_eps, young_mollified, young_rs};

pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Young,
    Winding,
    Lift,
    Decay,
    Jacobian2d,
    Hodge,
    Metric,
    Generate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Young => "young",
            Command::Winding => "winding",
            Command::Lift => "lift",
            Command::Decay => "decay",
            Command::Jacobian2d => "jacobian2d",
            Command::Hodge => "hodge",
            Command::Metric => "metric",
            Command::Generate => "generate",
        }
    }

    /// Parameter keys each command accepts.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Young => &["method", "alpha", "beta", "in", "in2", "out", "depth", "eps0", "levels", "kernel_resolution"],
            Command::Winding => &["curve", "res", "out", "pgm", "alpha", "out_format"],
            Command::Lift => &["planar", "t0", "alpha", "out", "out_format"],
            Command::Decay => &["map", "form", "gamma", "eps", "out", "kernel_resolution"],
            Command::Jacobian2d => &["f", "g1", "g2", "alpha", "beta", "levels", "out"],
            Command::Hodge => &["in", "out"],
            Command::Metric => &["points", "out"],
            Command::Generate => &[
                "kind", "gamma", "n", "terms", "base", "dim", "radius", "turns", "shape", "lo", "hi", "ncomp", "k", "l",
                "M", "mean_zero", "out", "out_format",
            ],
        }
    }
}

/// A complete run description. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.command.keys();
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown parameter {k:?} for {}", self.command.name())));
            }
        }
        Ok(())
    }

    /// Applies `key=value`; the value is read as JSON when it parses, else as a string.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec.split_once('=').ok_or_else(|| Error::Parse(format!("override {spec:?} is not key=value")))?;
        let k = k.trim();
        let value = serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.to_string()));
        match k {
            "seed" => {
                self.seed = value.as_u64().ok_or_else(|| Error::Parse(format!("seed {v:?} is not an unsigned integer")))?
            }
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => {
                self.params.insert(k.to_string(), value);
            }
        }
        self.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Written once per run. Wall time lives in the separate timing file so that
/// identical runs give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub threads: usize,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub timing_file: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Params<'a> {
    cmd: Command,
    map: &'a BTreeMap<String, Value>,
}

impl Params<'_> {
    fn bad(&self, key: &str, what: &str) -> Error {
        Error::Parse(format!("{}: parameter {key} {what}", self.cmd.name()))
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn str_or(&self, key: &str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Ok(v.to_string()),
        }
    }

    fn required(&self, key: &str) -> Result<String> {
        match self.get(key) {
            None => Err(self.bad(key, "is required")),
            Some(_) => self.str_or(key, ""),
        }
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => parse_number(s).map(Some).ok_or_else(|| self.bad(key, "is not a number")),
            Some(_) => Err(self.bad(key, "is not a number")),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.f64_opt(key)? {
            None => Ok(default),
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(_) => Err(self.bad(key, "is not a non-negative integer")),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::String(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(_) => Err(self.bad(key, "is not a boolean")),
        }
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Number(n) => n.as_f64(),
                    Value::String(s) => parse_number(s),
                    _ => None,
                })
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| self.bad(key, "has a non-numeric entry")),
            Some(Value::String(s)) => parse_list(s).ok_or_else(|| self.bad(key, "is not a list")),
            Some(Value::Number(n)) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
            Some(_) => Err(self.bad(key, "is not a list")),
        }
    }
}

/// Numbers, plus `b^e` powers such as `2^-10`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().ok()?;
        let e: f64 = e.trim().parse().ok()?;
        return Some(b.powf(e));
    }
    s.parse().ok()
}

/// Comma lists, or `b^e1..b^e2` for every integer exponent in between.
fn parse_list(s: &str) -> Option<Vec<f64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (ba, ea) = a.trim().split_once('^')?;
        let (bb, eb) = b.trim().split_once('^')?;
        let base: f64 = ba.trim().parse().ok()?;
        if bb.trim().parse::<f64>().ok()? != base {
            return None;
        }
        let (e0, e1): (i32, i32) = (ea.trim().parse().ok()?, eb.trim().parse().ok()?);
        let step = if e1 >= e0 { 1 } else { -1 };
        let mut out = Vec::new();
        let mut e = e0;
        loop {
            out.push(base.powi(e));
            if e == e1 {
                break;
            }
            e += step;
        }
        return Some(out);
    }
    s.split(',').map(parse_number).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutFormat {
    #[default]
    Csv,
    Json,
}

struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    inputs: Vec<FileEntry>,
}

impl Outputs {
    fn add(&mut self, name: String, bytes: Vec<u8>) -> Result<()> {
        if self.files.iter().any(|(n, _)| *n == name) || name == MANIFEST || name == TIMING {
            return Err(precondition(format!("output name {name:?} used twice")));
        }
        self.files.push((name, bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: String, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.add(name, s.into_bytes())
    }

    fn read(&mut self, path: &str) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}"))))?;
        self.inputs.push(FileEntry { path: path.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    fn read_path(&mut self, path: &str) -> Result<SampledPath> {
        let bytes = self.read(path)?;
        SampledPath::read_csv(BufReader::new(bytes.as_slice()))
    }

    fn read_grid(&mut self, path: &str) -> Result<GridMap> {
        let bytes = self.read(path)?;
        GridMap::read_binary(bytes.as_slice())
    }
}

fn path_bytes(p: &SampledPath, fmt: OutFormat) -> Result<Vec<u8>> {
    match fmt {
        OutFormat::Csv => {
            let mut buf = Vec::new();
            p.write_csv(&mut buf)?;
            Ok(buf)
        }
        OutFormat::Json => {
            let rows: Vec<&[f64]> = (0..p.len()).map(|i| p.point(i)).collect();
            let mut s = serde_json::to_string(&json!({"t": p.times(), "values": rows}))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}

fn with_ext(name: &str, fmt: OutFormat) -> String {
    let ext = match fmt {
        OutFormat::Csv => "csv",
        OutFormat::Json => "json",
    };
    match name.rsplit_once('.') {
        Some((stem, _)) => format!("{stem}.{ext}"),
        None => format!("{name}.{ext}"),
    }
}

fn out_format(p: &Params, global: OutFormat) -> Result<OutFormat> {
    match p.get("out_format") {
        None => Ok(global),
        Some(_) => match p.str_or("out_format", "csv")?.as_str() {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(Error::Parse(format!("unknown out_format {other:?}"))),
        },
    }
}

fn kernel(p: &Params) -> Result<MollifierKernel> {
    MollifierKernel::new(p.usize_or("kernel_resolution", 1025)?)
}

/// Parses `contact`, `dxJ`/`dyJ`/`dt`, or `generic:I` with a 1-based comma index list.
fn parse_form(spec: &str, ambient: usize) -> Result<DecayForm> {
    let s = spec.trim();
    if s == "contact" {
        return Ok(DecayForm::ContactAlpha);
    }
    let idx: Vec<usize> = if let Some(rest) = s.strip_prefix("generic:") {
        rest.split(',')
            .map(|t| t.trim().parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse(format!("bad index list in form {spec:?}")))?
    } else if s == "dt" {
        vec![ambient - 1]
    } else if let Some(j) = s.strip_prefix("dx").and_then(|j| j.parse::<usize>().ok()) {
        vec![2 * (j.max(1) - 1)]
    } else if let Some(j) = s.strip_prefix("dy").and_then(|j| j.parse::<usize>().ok()) {
        vec![2 * (j.max(1) - 1) + 1]
    } else {
        return Err(Error::Parse(format!("unknown form {spec:?}")));
    };
    Ok(DecayForm::Generic(Covector::basis(ambient, &idx).map_err(|e| Error::Parse(e.to_string()))?))
}

fn dispatch(cfg: &ExperimentConfig, fmt: OutFormat, out: &mut Outputs) -> Result<()> {
    let p = Params { cmd: cfg.command, map: &cfg.params };
    match cfg.command {
        Command::Generate => generate(&p, cfg.seed, fmt, out),
        Command::Young => {
            let f = out.read_path(&p.required("in")?)?;
            let g = out.read_path(&p.required("in2")?)?;
            let (alpha, beta) = (p.f64_opt("alpha")?, p.f64_opt("beta")?);
            let method = p.str_or("method", "both")?;
            let mut result = Map::new();
            if method == "rs" || method == "both" {
                let depth = p.usize_or("depth", auto_depth(f.intervals(), 8))?;
                result.insert("rs".into(), serde_json::to_value(young_rs(&f, &g, depth, alpha, beta)?)?);
            }
            if method == "mollified" || method == "both" {
                let h = (f.end() - f.start()) / f.intervals().max(1) as f64;
                let eps0 = p.f64_or("eps0", 64.0 * h)?;
                // by default the sequence reaches h/8, below the sample spacing
                let default_levels = ((eps0 / h).log2().round().max(0.0) as usize) + 4;
                let eps = dyadic_eps(eps0, p.usize_or("levels", default_levels)?);
                let r = young_mollified(&f, &g, &eps, &kernel(&p)?, alpha, beta)?;
                result.insert("mollified".into(), serde_json::to_value(r)?);
            }
            if result.is_empty() {
                return Err(Error::Parse(format!("unknown method {method:?}")));
            }
            if let (Some(a), Some(b)) = (result.get("rs"), result.get("mollified")) {
                let (va, vb) = (a["value"].as_f64().unwrap_or(f64::NAN), b["value"].as_f64().unwrap_or(f64::NAN));
                let bound = a["error_estimate"].as_f64().unwrap_or(0.0) + b["error_estimate"].as_f64().unwrap_or(0.0);
                result.insert("difference".into(), json!(va - vb));
                result.insert("within_estimates".into(), json!((va - vb).abs() <= bound));
            }
            out.json(p.str_or("out", "result.json")?, &result)
        }
        Command::Winding => {
            let curve = ClosedCurve2D::new(out.read_path(&p.required("curve")?)?)?;
            let field = winding_field(&curve, p.usize_or("res", 512)?)?;
            let fmt = out_format(&p, fmt)?;
            let name = with_ext(&p.str_or("out", "field.csv")?, fmt);
            match fmt {
                OutFormat::Csv => {
                    let mut buf = Vec::new();
                    field.write_csv(&mut buf)?;
                    out.add(name, buf)?;
                }
                OutFormat::Json => out.json(
                    name,
                    &json!({"lo": field.lo, "cell": field.cell, "nx": field.nx, "ny": field.ny,
                            "values": field.values, "masked": field.mask}),
                )?,
            }
            if let Some(pgm) = p.get("pgm").map(|_| p.str_or("pgm", "")).transpose()? {
                let mut buf = Vec::new();
                field.write_pgm(&mut buf)?;
                out.add(pgm, buf)?;
            }
            let green = oriented_area_green(&curve, p.f64_or("alpha", 1.0)?)?;
            out.json(
                "winding_summary.json".into(),
                &json!({
                    "field_integral": field.integral(),
                    "mask_area": field.mask_area(),
                    "mask_bound": field.mask_bound(),
                    "sup_abs": field.sup_abs(),
                    "green_area": green,
                }),
            )
        }
        Command::Lift => {
            let planar = out.read_path(&p.required("planar")?)?;
            let alpha = p.f64_opt("alpha")?;
            let lift = horizontal_lift_curve(&planar, p.f64_or("t0", 0.0)?, alpha)?;
            let fmt = out_format(&p, fmt)?;
            out.add(with_ext(&p.str_or("out", "hpath.csv")?, fmt), path_bytes(lift.path(), fmt)?)?;
            let h = lift.height();
            let hc = height_change(&lift, planar.start(), planar.end(), alpha)?;
            out.json(
                "lift_summary.json".into(),
                &json!({
                    "final_height": h[h.len() - 1],
                    "height_change": hc,
                    "horizontality_residual": horizontality_residual(&lift, alpha)?,
                }),
            )
        }
        Command::Decay => {
            let map = out.read_grid(&p.required("map")?)?;
            let form = parse_form(&p.str_or("form", "contact")?, map.ncomp())?;
            let eps = p.list_or("eps", &(4..=10).map(|j| 2f64.powi(-j)).collect::<Vec<_>>())?;
            let gamma = p.f64_opt("gamma")?.ok_or_else(|| p.bad("gamma", "is required"))?;
            let report = decay_exponent_fit(&map, &form, &eps, gamma, &kernel(&p)?)?;
            out.json(p.str_or("out", "report.json")?, &report)
        }
        Command::Jacobian2d => {
            let f = out.read_grid(&p.required("f")?)?;
            let g1 = out.read_grid(&p.required("g1")?)?;
            let g2 = out.read_grid(&p.required("g2")?)?;
            let ks: Vec<usize> = p
                .list_or("levels", &[1.0, 2.0, 4.0, 8.0])?
                .iter()
                .map(|&k| if k >= 1.0 && k.fract() == 0.0 { Ok(k as usize) } else { Err(p.bad("levels", "must be positive integers")) })
                .collect::<Result<_>>()?;
            let j = zust_jacobian_square(&f, &g1, &g2, &ks, p.f64_or("alpha", 1.0)?, p.f64_or("beta", 1.0)?)?;
            out.json(p.str_or("out", "jacobian.json")?, &j)
        }
        Command::Hodge => {
            let text = out.read(&p.required("in")?)?;
            let w = FourierForm::from_json(std::str::from_utf8(&text).map_err(|e| Error::Parse(e.to_string()))?)?;
            let s = hodge_decompose(&w)?;
            let report = split_report(&w, &s)?;
            out.json(
                p.str_or("out", "split.json")?,
                &json!({
                    "d_part": s.d_part.to_json_value(),
                    "delta_part": s.delta_part.to_json_value(),
                    "harmonic": s.harmonic.to_json_value(),
                    "omega1": s.omega1.as_ref().map(|o| o.to_json_value()),
                    "omega2": s.omega2.as_ref().map(|o| o.to_json_value()),
                    "report": report,
                }),
            )
        }
        Command::Metric => {
            let text = out.read(&p.required("points")?)?;
            let text = String::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
            let pts: Vec<HPoint> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('n'))
                .map(HPoint::from_csv_row)
                .collect::<Result<_>>()?;
            let (lower, upper) = metric_comparison_check(&pts)?;
            let mut pairs = Vec::new();
            for i in 0..pts.len().min(64) {
                for j in i + 1..pts.len().min(64) {
                    let r = koranyi_dist(&pts[i], &pts[j])?;
                    pairs.push(json!({"i": i, "j": j, "euclid": r.euclid, "koranyi": r.koranyi, "phi": r.phi}));
                }
            }
            out.json(p.str_or("out", "metric.json")?, &json!({"c_lower": lower, "c_upper": upper, "points": pts.len(), "pairs": pairs}))
        }
    }
}

fn generate(p: &Params, seed: u64, fmt: OutFormat, out: &mut Outputs) -> Result<()> {
    let kind = p.str_or("kind", "weierstrass")?;
    let fmt = out_format(p, fmt)?;
    let n = p.usize_or("n", 1 << 14)?;
    let default_terms = (n.max(2) as f64).log2().ceil() as usize;
    let gamma = p.f64_or("gamma", 0.75)?;
    let base = p.usize_or("base", 2)? as u32;
    match kind.as_str() {
        "weierstrass" => {
            let w = weierstrass_path(gamma, base, p.usize_or("terms", default_terms)?, n, p.usize_or("dim", 1)?, seed)?;
            out.add(with_ext(&p.str_or("out", "path.csv")?, fmt), path_bytes(&w, fmt)?)
        }
        "spiral" => {
            let w = weierstrass_spiral(gamma, base, p.usize_or("terms", default_terms)?, n, seed)?;
            out.add(with_ext(&p.str_or("out", "spiral.csv")?, fmt), path_bytes(&w, fmt)?)
        }
        "circle" => {
            let (r, turns) = (p.f64_or("radius", 1.0)?, p.f64_or("turns", 1.0)?);
            let c = SampledPath::from_fn(0.0, 1.0, n, 2, |s| {
                let th = std::f64::consts::TAU * turns * s;
                vec![r * th.cos(), r * th.sin()]
            })?;
            out.add(with_ext(&p.str_or("out", "circle.csv")?, fmt), path_bytes(&c, fmt)?)
        }
        "lifted" => {
            // lifted spiral as a one-axis grid, the input of `decay`
            let w = weierstrass_spiral(gamma, base, p.usize_or("terms", default_terms)?, n, seed)?;
            let lift = horizontal_lift_curve(&w, 0.0, None)?;
            let g = GridMap::new(vec![0.0], vec![1.0], vec![lift.path().len()], 3, lift.path().values().to_vec())?;
            let mut buf = Vec::new();
            g.write_binary(&mut buf)?;
            out.add(p.str_or("out", "map.grid")?, buf)
        }
        "field" => {
            let shape: Vec<usize> = p.list_or("shape", &[256.0, 256.0])?.iter().map(|&v| v as usize).collect();
            let lo = p.list_or("lo", &vec![-1.25; shape.len()])?;
            let hi = p.list_or("hi", &vec![1.25; shape.len()])?;
            let g = weierstrass_field(gamma, base, p.usize_or("terms", 9)?, lo, hi, shape, p.usize_or("ncomp", 1)?, seed)?;
            let mut buf = Vec::new();
            g.write_binary(&mut buf)?;
            out.add(p.str_or("out", "field.grid")?, buf)
        }
        "form" => {
            let k = p.usize_or("k", 2)?;
            let m = p.usize_or("M", if k == 2 { 32 } else { 16 })?;
            let w = random_form(k, p.usize_or("l", 1)?, m, seed, p.bool_or("mean_zero", false)?)?;
            out.json(p.str_or("out", "form.json")?, &w.to_json_value())
        }
        other => Err(Error::Parse(format!("unknown generator kind {other:?}"))),
    }
}

fn write_bundle(dir: &Path, files: &[(String, Vec<u8>)], manifest: &impl Serialize, timing: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        let target = dir.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(target, bytes)?;
    }
    let mut m = serde_json::to_string_pretty(manifest)?;
    m.push('\n');
    fs::write(dir.join(MANIFEST), m)?;
    let mut t = serde_json::to_string_pretty(timing)?;
    t.push('\n');
    fs::write(dir.join(TIMING), t)?;
    Ok(())
}

fn entries(files: &[(String, Vec<u8>)]) -> Vec<FileEntry> {
    let mut v: Vec<FileEntry> = files
        .iter()
        .map(|(n, b)| FileEntry { path: n.clone(), bytes: b.len() as u64, sha256: sha256_hex(b) })
        .collect();
    v.sort_by(|a, b| a.path.cmp(&b.path));
    v
}

/// Executes a config and writes its outputs, `manifest.json` and `timing.json`.
pub fn run(config: &ExperimentConfig, fmt: OutFormat) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let mut out = Outputs { files: Vec::new(), inputs: Vec::new() };
    dispatch(config, fmt, &mut out)?;
    let manifest = RunManifest {
        toolkit: "hkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        inputs: out.inputs,
        outputs: entries(&out.files),
        timing_file: TIMING.into(),
    };
    let timing = json!({"wall_seconds": start.elapsed().as_secs_f64()});
    write_bundle(&config.output_dir, &out.files, &manifest, &timing)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyManifest {
    pub toolkit: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub filter: Option<String>,
    pub criteria: Vec<u8>,
    pub tolerances: BTreeMap<String, f64>,
    pub all_passed: bool,
    pub outputs: Vec<FileEntry>,
    pub timing_file: String,
}

/// Runs the selected criteria; with an output directory also writes
/// `verify.json`, the manifest and the timing file.
pub fn verify_to(
    filter: Option<&str>,
    opts: &VerifyOptions,
    dir: Option<&Path>,
) -> Result<(Vec<verify::CriterionReport>, Option<VerifyManifest>)> {
    let ids = verify::select(filter);
    if ids.is_empty() {
        return Err(Error::Parse(format!("filter {filter:?} selects no criteria")));
    }
    let (reports, timing) = verify::verify_all(&ids, opts);
    let Some(dir) = dir else { return Ok((reports, None)) };
    let mut body = serde_json::to_string_pretty(&reports)?;
    body.push('\n');
    let files = vec![("verify.json".to_string(), body.into_bytes())];
    let manifest = VerifyManifest {
        toolkit: "hkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: opts.seed,
        threads: rayon::current_num_threads(),
        filter: filter.map(str::to_string),
        criteria: ids,
        tolerances: opts.tolerances.entries().clone(),
        all_passed: reports.iter().all(|r| r.passed),
        outputs: entries(&files),
        timing_file: TIMING.into(),
    };
    let t: Map<String, Value> = timing.iter().map(|(id, s)| (format!("C{id:02}"), json!(s))).collect();
    write_bundle(dir, &files, &manifest, &Value::Object(t))?;
    Ok((reports, Some(manifest)))
}

fn scratch_dir(tag: &str) -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    std::env::temp_dir().join(format!(
        "hkit-{tag}-{}-{nanos}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ))
}

fn snapshot(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != TIMING) {
                out.insert(path.strip_prefix(dir).expect("inside dir").to_path_buf(), fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn probe_once(seed: u64, dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let d = |s: &str| dir.join(s);
    let s = |p: PathBuf| Value::String(p.to_string_lossy().into_owned());
    let cfg = |command, params: Value, sub: &str| ExperimentConfig {
        command,
        params: serde_json::from_value(params).expect("object literal"),
        seed,
        output_dir: d(sub),
    };
    let runs = [
        cfg(Command::Generate, json!({"kind": "weierstrass", "gamma": 0.7, "n": 4096, "out": "f.csv"}), "gen_f"),
        ExperimentConfig { seed: seed + 1, ..cfg(Command::Generate, json!({"kind": "weierstrass", "gamma": 0.7, "n": 4096, "out": "g.csv"}), "gen_g") },
        cfg(Command::Young, json!({"in": s(d("gen_f/f.csv")), "in2": s(d("gen_g/g.csv"))}), "young"),
        cfg(Command::Generate, json!({"kind": "circle", "n": 1024}), "gen_c"),
        cfg(Command::Winding, json!({"curve": s(d("gen_c/circle.csv")), "res": 128, "pgm": "field.pgm"}), "winding"),
        cfg(Command::Lift, json!({"planar": s(d("gen_c/circle.csv")), "alpha": 1.0}), "lift"),
        cfg(Command::Generate, json!({"kind": "form", "k": 2, "l": 1, "M": 8}), "gen_w"),
        cfg(Command::Hodge, json!({"in": s(d("gen_w/form.json"))}), "hodge"),
    ];
    for r in &runs {
        run(r, OutFormat::Csv)?;
    }
    let opts = VerifyOptions { seed, tolerances: Tolerances::default() };
    verify_to(Some("heisenberg"), &opts, Some(&d("verify")))?;
    snapshot(dir)
}

/// Runs a fixed set of experiments and a verify pass twice into the same scratch
/// directory; returns how many files differ between the two rounds.
pub fn determinism_probe(seed: u64) -> Result<usize> {
    let dir = scratch_dir("probe");
    let first = probe_once(seed, &dir);
    let _ = fs::remove_dir_all(&dir);
    let first = first?;
    let second = probe_once(seed, &dir);
    let _ = fs::remove_dir_all(&dir);
    let second = second?;
    let mut differing = first.iter().filter(|(k, v)| second.get(*k) != Some(*v)).count();
    differing += second.keys().filter(|k| !first.contains_key(*k)).count();
    if first.keys().filter(|k| k.ends_with(MANIFEST)).count() < 9 {
        return Err(Error::Internal("probe produced too few manifests".into()));
    }
    Ok(differing)
}

#[derive(Parser, Debug)]
#[command(name = "hkit", version, about = "Hölder analysis on the Heisenberg group")]
struct Cli {
    /// worker threads (default: HKIT_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    out_format: OutFormat,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// ∫ f dg by dyadic sums and/or mollification
    Young(YoungArgs),
    /// winding-number field of a closed planar curve
    Winding(WindingArgs),
    /// horizontal lift of a planar path
    Lift(LiftArgs),
    /// mollified pullback decay rate of a map
    Decay(DecayArgs),
    /// Riemann-sum Jacobian ∫ f dg1∧dg2 on a square
    Jacobian2d(JacobianArgs),
    /// Hodge decomposition of a Fourier form
    Hodge(HodgeArgs),
    /// Korányi metric comparison constants of a point cloud
    Metric(MetricArgs),
    /// synthetic inputs
    Generate(GenerateArgs),
    /// execute an experiment config file
    Run(RunArgs),
    /// run the acceptance criteria
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct YoungArgs {
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: String,
    #[arg(long)]
    in2: String,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    kernel_resolution: Option<usize>,
    #[arg(long, default_value = "result.json")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct WindingArgs {
    #[arg(long)]
    curve: String,
    #[arg(long)]
    res: Option<usize>,
    #[arg(long)]
    pgm: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "field.csv")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LiftArgs {
    #[arg(long)]
    planar: String,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "hpath.csv")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DecayArgs {
    #[arg(long)]
    map: String,
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    gamma: f64,
    /// `2^-4..2^-10` or a comma list
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long)]
    kernel_resolution: Option<usize>,
    #[arg(long, default_value = "report.json")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct JacobianArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    g1: String,
    #[arg(long)]
    g2: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// comma list of subdivision counts
    #[arg(long)]
    levels: Option<String>,
    #[arg(long, default_value = "jacobian.json")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct HodgeArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: String,
    #[arg(long, default_value = "split.json")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MetricArgs {
    #[arg(long)]
    points: String,
    #[arg(long, default_value = "metric.json")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long)]
    base: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    turns: Option<f64>,
    /// comma list
    #[arg(long)]
    shape: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<String>,
    #[arg(long)]
    ncomp: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long = "modes")]
    #[serde(rename = "M")]
    m: Option<usize>,
    #[arg(long)]
    mean_zero: bool,
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    seed: u64,
    /// output file; the default name depends on the kind
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// `key=value` override, repeatable; `seed` and `output_dir` are accepted too
    #[arg(long = "param")]
    params: Vec<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// keep criteria whose suite or title contains this, or `C07`
    #[arg(long)]
    filter: Option<String>,
    /// JSON object of tolerance overrides
    #[arg(long)]
    tolerances: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn direct(command: Command, args: &impl Serialize, out: &Path, seed: u64) -> Result<ExperimentConfig> {
    let Value::Object(obj) = serde_json::to_value(args)? else { unreachable!("args serialize to objects") };
    let mut params: BTreeMap<String, Value> = obj.into_iter().filter(|(_, v)| !v.is_null()).collect();
    // comma lists arrive as strings; numbers inside are parsed on use
    let dir = out.parent().map(Path::to_path_buf).filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| PathBuf::from("."));
    let name = out.file_name().ok_or_else(|| Error::Parse(format!("bad output path {}", out.display())))?;
    params.insert("out".into(), Value::String(name.to_string_lossy().into_owned()));
    let cfg = ExperimentConfig { command, params, seed, output_dir: dir };
    cfg.validate()?;
    Ok(cfg)
}

fn error_json(e: &Error) -> String {
    json!({"error": {"kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()}}).to_string()
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("HKIT_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("HKIT_THREADS={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Parse("thread count must be positive".into()));
        }
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    init_threads(cli.threads)?;
    let fmt = cli.out_format;
    let cfg = match cli.command {
        Sub::Young(a) => direct(Command::Young, &a, &a.out, 0)?,
        Sub::Winding(a) => direct(Command::Winding, &a, &a.out, 0)?,
        Sub::Lift(a) => direct(Command::Lift, &a, &a.out, 0)?,
        Sub::Decay(a) => direct(Command::Decay, &a, &a.out, 0)?,
        Sub::Jacobian2d(a) => direct(Command::Jacobian2d, &a, &a.out, 0)?,
        Sub::Hodge(a) => direct(Command::Hodge, &a, &a.out, 0)?,
        Sub::Metric(a) => direct(Command::Metric, &a, &a.out, 0)?,
        Sub::Generate(a) => {
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from(default_name(&a.kind)));
            let mut cfg = direct(Command::Generate, &a, &out, a.seed)?;
            if a.mean_zero {
                cfg.params.insert("mean_zero".into(), Value::Bool(true));
            } else {
                cfg.params.remove("mean_zero");
            }
            cfg
        }
        Sub::Run(a) => {
            let text = fs::read_to_string(&a.config)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.config.display()))))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            for spec in &a.params {
                cfg.apply_override(spec)?;
            }
            cfg
        }
        Sub::Verify(a) => {
            let mut tolerances = Tolerances::default();
            if let Some(path) = &a.tolerances {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
                tolerances.apply_json(&text)?;
            }
            let opts = VerifyOptions { seed: a.seed, tolerances };
            let (reports, _) = verify_to(a.filter.as_deref(), &opts, a.out_dir.as_deref())?;
            for r in &reports {
                println!("{}", r.summary_line());
            }
            let passed = reports.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", reports.len());
            return Ok(if passed == reports.len() { 0 } else { 1 });
        }
    };
    let manifest = run(&cfg, fmt)?;
    for o in &manifest.outputs {
        println!("{}", cfg.output_dir.join(&o.path).display());
    }
    println!("{}", cfg.output_dir.join(MANIFEST).display());
    Ok(0)
}

fn default_name(kind: &str) -> &'static str {
    match kind {
        "spiral" => "spiral.csv",
        "circle" => "circle.csv",
        "lifted" => "map.grid",
        "field" => "field.grid",
        "form" => "form.json",
        _ => "path.csv",
    }
}

/// Entry point for the binary; returns the process exit code. Errors go to
/// stderr as one JSON object.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = Error::Parse(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_and_list_syntax() {
        assert_eq!(parse_number("2^-3"), Some(0.125));
        assert_eq!(parse_list("2^-4..2^-6"), Some(vec![0.0625, 0.03125, 0.015625]));
        assert_eq!(parse_list("1,2.5"), Some(vec![1.0, 2.5]));
        assert_eq!(parse_list("2^-4..3^-6"), None);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok = r#"{"command":"lift","params":{"planar":"c.csv","t0":0},"seed":3,"output_dir":"o"}"#;
        let c = ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(c.seed, 3);
        assert!(ExperimentConfig::from_json(r#"{"command":"lift","params":{"bogus":1},"output_dir":"o"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"lift","output_dir":"o","extra":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"fly","output_dir":"o"}"#).is_err());
        let mut c = c;
        c.apply_override("t0=1.5").unwrap();
        assert_eq!(c.params["t0"], json!(1.5));
        c.apply_override("seed=9").unwrap();
        assert_eq!(c.seed, 9);
        assert!(c.apply_override("nope=1").is_err());
    }

    #[test]
    fn forms() {
        assert!(matches!(parse_form("contact", 3).unwrap(), DecayForm::ContactAlpha));
        match parse_form("dy1", 3).unwrap() {
            DecayForm::Generic(c) => assert_eq!(c.coeff(&[1]), 1.0),
            _ => panic!(),
        }
        match parse_form("generic:1,3", 5).unwrap() {
            DecayForm::Generic(c) => assert_eq!(c.coeff(&[0, 2]), 1.0),
            _ => panic!(),
        }
        assert!(parse_form("dz", 3).is_err());
    }
}
