//! TOML run configuration with an explicit schema version. Every rejection
//! names the violated rule and, where it can be located, the offending line.

use std::fs;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::beltrami::{BeltramiProblem, SolveOptions};
use crate::criteria::OrliczFunction;
use crate::domain::{BoundaryData, DomainSpec};
use crate::error::{Error, Result};
use crate::export::{read_complex_csv, read_real_csv};
use crate::poisson::{a_from_mu, MatrixField, PoissonProblem};
use crate::presets::{orlicz_from_name, DomainPreset, MuPreset, Params, PhiPreset, QPreset, SourcePreset, DEFAULT_SAMPLES};
use crate::qc::{LadderOptions, QcOptions, DEFAULT_CAPS};
use crate::{ComplexField64, Grid64, RealField64, C64};

pub const SCHEMA_VERSION: i64 = 1;
pub const DEFAULT_N: usize = 256;
pub const DEFAULT_HALF_WIDTH: f64 = 2.0;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 20240917;
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-2;
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 2e-2;

/// A preset with parameters, or a CSV field relative to the config file.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Preset { name: String, params: Params },
    File(PathBuf),
}

impl Spec {
    fn preset(name: &str) -> Self {
        Spec::Preset { name: name.into(), params: Params::new() }
    }
}

/// Coefficient matrix of the divergence-form problem.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    Identity,
    /// `A = A(μ)` from the `[mu]` section.
    FromMu,
    /// CSV fields `a11, a12, a21, a22`.
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub center: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iterations: usize,
    pub loop_tolerance: f64,
    pub ladder_caps: Vec<f64>,
    pub ladder_tol: f64,
    pub ladder_threshold: f64,
    pub run_all_levels: bool,
    pub anchor: Option<C64>,
    /// Relative interior (or weak) residual above which a solve is reported with warnings.
    pub residual_tolerance: f64,
    /// Boundary sup error above which a solve is reported with warnings.
    pub boundary_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditPoints {
    List(Vec<C64>),
    /// Every `stride`-th boundary sample.
    Boundary { stride: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub points: AuditPoints,
    pub criteria: Vec<String>,
    pub eps0: Option<f64>,
    pub levels: usize,
    pub fmo_levels: usize,
    pub delta: f64,
    pub orlicz: Spec,
    /// `1/t` or `1/(t log)`.
    pub psi: Vec<String>,
    /// Dominant `Q ≥ K^T` for the FMO test; `K^T` itself when absent.
    pub dominant: Option<Spec>,
}

pub const CRITERIA: [&str; 8] = ["FMO", "BMO", "MEAN", "CZ", "LEHTO", "ORLICZ", "EXP", "PSI"];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub schema_version: i64,
    pub seed: u64,
    pub grid: GridConfig,
    pub domain: Spec,
    pub samples: usize,
    pub mu: Spec,
    pub sigma: Spec,
    pub phi: Spec,
    pub a: MatrixSpec,
    pub g: Spec,
    pub solver: SolverConfig,
    pub audit: AuditConfig,
    /// Directory CSV paths are resolved against.
    pub base_dir: PathBuf,
    source: String,
}

const TOP_KEYS: [&str; 11] = ["schema_version", "seed", "grid", "domain", "mu", "sigma", "phi", "A", "g", "solver", "audit"];

fn located(source: &str, section: &str, key: Option<&str>, message: String) -> Error {
    Error::Config { line: line_of(source, section, key), message }
}

/// 1-based line of `key` inside `[section]` (or of the header when `key` is None).
fn line_of(source: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(k) = key {
            if let Some(rest) = line.strip_prefix(k) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

struct Reader<'a> {
    source: &'a str,
}

impl Reader<'_> {
    fn err(&self, section: &str, key: Option<&str>, msg: impl Into<String>) -> Error {
        let m = msg.into();
        let loc = if section.is_empty() { String::new() } else { format!("[{section}] ") };
        located(self.source, section, key, format!("{loc}{m}"))
    }

    fn keys(&self, t: &Table, section: &str, allowed: &[&str]) -> Result<()> {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(section, Some(k), format!("unknown key `{k}` (allowed: {})", allowed.join(", "))));
            }
        }
        Ok(())
    }

    fn table<'t>(&self, root: &'t Table, name: &str) -> Result<Option<&'t Table>> {
        match root.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(self.err("", Some(name), format!("`{name}` must be a table"))),
        }
    }

    fn number(&self, t: &Table, section: &str, key: &str) -> Result<Option<f64>> {
        match t.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(Value::Float(f)) if f.is_finite() => Ok(Some(*f)),
            Some(_) => Err(self.err(section, Some(key), format!("`{key}` must be a finite number"))),
        }
    }

    fn uint(&self, t: &Table, section: &str, key: &str) -> Result<Option<u64>> {
        match t.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.err(section, Some(key), format!("`{key}` must be a non-negative integer"))),
        }
    }

    fn boolean(&self, t: &Table, section: &str, key: &str) -> Result<Option<bool>> {
        match t.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(section, Some(key), format!("`{key}` must be true or false"))),
        }
    }

    fn string(&self, t: &Table, section: &str, key: &str) -> Result<Option<String>> {
        match t.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.err(section, Some(key), format!("`{key}` must be a string"))),
        }
    }

    fn numbers(&self, v: &Value, section: &str, key: &str) -> Result<Vec<f64>> {
        let bad = || self.err(section, Some(key), format!("`{key}` must be a number or a (nested) array of numbers"));
        match v {
            Value::Integer(i) => Ok(vec![*i as f64]),
            Value::Float(f) if f.is_finite() => Ok(vec![*f]),
            Value::Array(a) => {
                let mut out = Vec::new();
                for x in a {
                    out.extend(self.numbers(x, section, key).map_err(|_| bad())?);
                }
                Ok(out)
            }
            _ => Err(bad()),
        }
    }

    fn point(&self, t: &Table, section: &str, key: &str) -> Result<Option<C64>> {
        match t.get(key) {
            None => Ok(None),
            Some(v) => {
                let n = self.numbers(v, section, key)?;
                if n.len() != 2 {
                    return Err(self.err(section, Some(key), format!("`{key}` must be a point [x, y]")));
                }
                Ok(Some(C64::new(n[0], n[1])))
            }
        }
    }

    /// `preset = "..."` plus parameters, or `file = "..."`.
    fn spec(&self, root: &Table, section: &str, default: Spec) -> Result<Spec> {
        let Some(t) = self.table(root, section)? else { return Ok(default) };
        match (t.get("preset"), t.get("file")) {
            (Some(_), Some(_)) => Err(self.err(section, Some("file"), "give either `preset` or `file`, not both")),
            (None, Some(_)) => {
                self.keys(t, section, &["file"])?;
                Ok(Spec::File(self.string(t, section, "file")?.unwrap_or_default().into()))
            }
            (Some(_), None) => {
                let name = self.string(t, section, "preset")?.unwrap_or_default();
                let mut params = Params::new();
                for (k, v) in t.iter().filter(|(k, _)| k.as_str() != "preset") {
                    params.0.insert(k.clone(), self.numbers(v, section, k)?);
                }
                Ok(Spec::Preset { name, params })
            }
            (None, None) => Err(self.err(section, None, "needs `preset = \"...\"` or `file = \"...\"`")),
        }
    }
}

impl Config {
    pub fn parse(source: &str, base_dir: &Path) -> Result<Config> {
        let root: Table = toml::from_str(source).map_err(|e| Error::Config {
            line: e.span().map(|s| source[..s.start].lines().count().max(1)),
            message: format!("malformed TOML: {}", e.message()),
        })?;
        let r = Reader { source };
        r.keys(&root, "", &TOP_KEYS)?;
        let schema_version = match root.get("schema_version") {
            Some(Value::Integer(v)) => *v,
            Some(_) => return Err(r.err("", Some("schema_version"), "`schema_version` must be an integer")),
            None => return Err(Error::Config { line: None, message: format!("missing `schema_version` (current: {SCHEMA_VERSION})") }),
        };
        if schema_version != SCHEMA_VERSION {
            return Err(r.err("", Some("schema_version"), format!("unsupported schema_version {schema_version} (supported: {SCHEMA_VERSION})")));
        }
        let seed = r.uint(&root, "", "seed")?.unwrap_or(DEFAULT_SEED);

        let empty = Table::new();
        let gt = r.table(&root, "grid")?.unwrap_or(&empty);
        r.keys(gt, "grid", &["n", "half_width", "center"])?;
        let grid = GridConfig {
            n: r.uint(gt, "grid", "n")?.map_or(DEFAULT_N, |v| v as usize),
            half_width: r.number(gt, "grid", "half_width")?.unwrap_or(DEFAULT_HALF_WIDTH),
            center: r.point(gt, "grid", "center")?.unwrap_or(C64::new(0.0, 0.0)),
        };

        let (domain, samples) = match r.table(&root, "domain")? {
            None => (Spec::Preset { name: "disk".into(), params: Params::new() }, DEFAULT_SAMPLES),
            Some(t) => {
                let spec = r.spec(&root, "domain", Spec::preset("disk"))?;
                let samples = r.uint(t, "domain", "samples")?.map_or(DEFAULT_SAMPLES, |v| v as usize);
                (spec, samples)
            }
        };
        let mu = r.spec(&root, "mu", Spec::preset("zero"))?;
        let sigma = r.spec(&root, "sigma", Spec::preset("zero"))?;
        let phi = r.spec(&root, "phi", Spec::Preset { name: "const".into(), params: Params::new() })?;
        let g = r.spec(&root, "g", Spec::preset("zero"))?;

        let a = match r.table(&root, "A")? {
            None => MatrixSpec::Identity,
            Some(t) => {
                r.keys(t, "A", &["preset", "files"])?;
                match (r.string(t, "A", "preset")?, t.get("files")) {
                    (Some(p), None) if p == "identity" => MatrixSpec::Identity,
                    (Some(p), None) if p == "from-mu" => MatrixSpec::FromMu,
                    (Some(p), None) => return Err(r.err("A", Some("preset"), format!("unknown A preset `{p}` (identity, from-mu)"))),
                    (None, Some(Value::Array(fs))) if fs.len() == 4 && fs.iter().all(|v| v.is_str()) => {
                        MatrixSpec::Files(fs.iter().map(|v| PathBuf::from(v.as_str().unwrap_or_default())).collect())
                    }
                    _ => return Err(r.err("A", None, "needs `preset` (identity, from-mu) or `files` = [a11, a12, a21, a22]")),
                }
            }
        };

        let st = r.table(&root, "solver")?.unwrap_or(&empty);
        r.keys(st, "solver", &["tol", "max_iterations", "loop_tolerance", "ladder_caps", "ladder_tol", "ladder_threshold", "run_all_levels", "anchor", "residual_tolerance", "boundary_tolerance"])?;
        let solver = SolverConfig {
            tol: r.number(st, "solver", "tol")?.unwrap_or(DEFAULT_TOL),
            max_iterations: r.uint(st, "solver", "max_iterations")?.map_or(QcOptions::default().max_iterations, |v| v as usize),
            loop_tolerance: r.number(st, "solver", "loop_tolerance")?.unwrap_or(crate::harmonic::DEFAULT_LOOP_TOLERANCE),
            ladder_caps: match st.get("ladder_caps") {
                Some(v) => r.numbers(v, "solver", "ladder_caps")?,
                None => DEFAULT_CAPS.to_vec(),
            },
            ladder_tol: r.number(st, "solver", "ladder_tol")?.unwrap_or(LadderOptions::default().tol),
            ladder_threshold: r.number(st, "solver", "ladder_threshold")?.unwrap_or(crate::beltrami::LADDER_THRESHOLD),
            run_all_levels: r.boolean(st, "solver", "run_all_levels")?.unwrap_or(false),
            anchor: r.point(st, "solver", "anchor")?,
            residual_tolerance: r.number(st, "solver", "residual_tolerance")?.unwrap_or(DEFAULT_RESIDUAL_TOLERANCE),
            boundary_tolerance: r.number(st, "solver", "boundary_tolerance")?.unwrap_or(DEFAULT_BOUNDARY_TOLERANCE),
        };

        let at = r.table(&root, "audit")?.unwrap_or(&empty);
        r.keys(at, "audit", &["points", "boundary_stride", "criteria", "eps0", "levels", "fmo_levels", "delta", "orlicz", "psi", "dominant"])?;
        let points = match (at.get("points"), r.uint(at, "audit", "boundary_stride")?) {
            (Some(v), None) => {
                let n = r.numbers(v, "audit", "points")?;
                if n.len() % 2 != 0 || n.is_empty() {
                    return Err(r.err("audit", Some("points"), "`points` must be a list of [x, y] pairs"));
                }
                AuditPoints::List(n.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
            }
            (None, s) => AuditPoints::Boundary { stride: s.unwrap_or(32).max(1) as usize },
            (Some(_), Some(_)) => return Err(r.err("audit", Some("boundary_stride"), "give either `points` or `boundary_stride`")),
        };
        let strings = |key: &str, default: &[&str]| -> Result<Vec<String>> {
            match at.get(key) {
                None => Ok(default.iter().map(|s| s.to_string()).collect()),
                Some(Value::Array(a)) if a.iter().all(|v| v.is_str()) => Ok(a.iter().map(|v| v.as_str().unwrap_or_default().to_string()).collect()),
                Some(_) => Err(r.err("audit", Some(key), format!("`{key}` must be a list of strings"))),
            }
        };
        let criteria = strings("criteria", &["FMO", "MEAN", "CZ", "LEHTO", "ORLICZ", "PSI"])?;
        if let Some(c) = criteria.iter().find(|c| !CRITERIA.contains(&c.as_str())) {
            return Err(r.err("audit", Some("criteria"), format!("unknown criterion `{c}` (known: {})", CRITERIA.join(", "))));
        }
        let psi = strings("psi", &["1/t"])?;
        if let Some(p) = psi.iter().find(|p| !matches!(p.as_str(), "1/t" | "1/(t log)")) {
            return Err(r.err("audit", Some("psi"), format!("unknown psi family `{p}` (1/t, 1/(t log))")));
        }
        let sub = |key: &str| -> Result<Option<Spec>> {
            match at.get(key) {
                None => Ok(None),
                Some(Value::Table(t)) => {
                    let section = format!("audit.{key}");
                    let mut wrapper = Table::new();
                    wrapper.insert(section.clone(), Value::Table(t.clone()));
                    r.spec(&wrapper, &section, Spec::preset("const")).map(Some)
                }
                Some(_) => Err(r.err("audit", Some(key), format!("`{key}` must be a table"))),
            }
        };
        let audit = AuditConfig {
            points,
            criteria,
            eps0: r.number(at, "audit", "eps0")?,
            levels: r.uint(at, "audit", "levels")?.map_or(crate::criteria::INTEGRAL_LEVELS, |v| v as usize),
            fmo_levels: r.uint(at, "audit", "fmo_levels")?.map_or(crate::criteria::FMO_LEVELS, |v| v as usize),
            delta: r.number(at, "audit", "delta")?.unwrap_or(1.0),
            orlicz: sub("orlicz")?.unwrap_or(Spec::Preset { name: "exp".into(), params: Params::new().with("alpha", 0.5) }),
            psi,
            dominant: sub("dominant")?,
        };

        let cfg = Config { schema_version, seed, grid, domain, samples, mu, sigma, phi, a, g, solver, audit, base_dir: base_dir.to_path_buf(), source: source.to_string() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse-time invariants that need no field data.
    fn validate(&self) -> Result<()> {
        self.grid().map_err(|e| self.at("grid", Some("n"), e))?;
        self.domain().map_err(|e| self.at("domain", None, e))?;
        for (section, spec) in [("mu", &self.mu), ("sigma", &self.sigma), ("phi", &self.phi), ("g", &self.g)] {
            if let Spec::Preset { name, params } = spec {
                let r = match section {
                    "mu" => MuPreset::from_name(name, params).map(|_| ()),
                    "phi" => PhiPreset::from_name(name, params).map(|_| ()),
                    _ => SourcePreset::from_name(name, params).map(|_| ()),
                };
                r.map_err(|e| self.at(section, Some("preset"), e))?;
            }
        }
        if !(self.solver.tol > 0.0) || !(self.solver.ladder_tol > 0.0) || !(self.solver.loop_tolerance > 0.0)
            || !(self.solver.residual_tolerance > 0.0)
            || !(self.solver.boundary_tolerance > 0.0)
        {
            return Err(self.at("solver", None, Error::InvalidParameter("tolerances must be positive".into())));
        }
        if self.solver.ladder_caps.is_empty() || self.solver.ladder_caps.iter().any(|c| !(*c > 1.0)) {
            return Err(self.at("solver", Some("ladder_caps"), Error::InvalidParameter("ladder caps must be > 1".into())));
        }
        self.orlicz().map_err(|e| self.at("audit.orlicz", Some("preset"), e))?;
        if let Some(Spec::Preset { name, params }) = &self.audit.dominant {
            QPreset::from_name(name, params).map_err(|e| self.at("audit.dominant", Some("preset"), e))?;
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        let src = fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Config::parse(&src, path.parent().unwrap_or(Path::new(".")))
    }

    /// Wraps an error with the location of `[section] key`.
    pub fn at(&self, section: &str, key: Option<&str>, e: Error) -> Error {
        match e {
            Error::Config { .. } => e,
            e => located(&self.source, section, key, format!("[{section}] {e}")),
        }
    }

    pub fn grid(&self) -> Result<Grid64> {
        Grid64::new(self.grid.center, self.grid.half_width, self.grid.n)
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        match &self.domain {
            Spec::Preset { name, params } => {
                let mut p = params.clone();
                p.0.remove("samples");
                let mut allowed = p.clone();
                allowed.0.insert("samples".into(), vec![self.samples as f64]);
                DomainPreset::from_name(name, &allowed)?.build(self.samples)
            }
            Spec::File(_) => Err(Error::InvalidParameter("domains are presets (disk, ellipse, polygon)".into())),
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn complex_from(&self, spec: &Spec, grid: Grid64, section: &str, preset: impl Fn(&str, &Params) -> Result<ComplexField64>) -> Result<ComplexField64> {
        match spec {
            Spec::Preset { name, params } => preset(name, params),
            Spec::File(p) => {
                let f = read_complex_csv(&self.resolve(p)).map_err(|e| self.at(section, Some("file"), e))?;
                if f.grid() != &grid {
                    return Err(self.at(section, Some("file"), Error::GridMismatch));
                }
                Ok(f.fill_masked(C64::new(0.0, 0.0)).without_mask())
            }
        }
    }

    pub fn mu_preset(&self) -> Option<MuPreset> {
        match &self.mu {
            Spec::Preset { name, params } => MuPreset::from_name(name, params).ok(),
            Spec::File(_) => None,
        }
    }

    pub fn mu_field(&self, grid: Grid64) -> Result<ComplexField64> {
        let f = self.complex_from(&self.mu, grid, "mu", |n, p| Ok(MuPreset::from_name(n, p)?.field(grid)))?;
        if let Some((k, m)) = f.values().iter().enumerate().find(|(_, m)| !(m.norm() < 1.0)) {
            let z = grid.node_at(k);
            return Err(self.at("mu", None, Error::Ellipticity { x: z.re, y: z.im, modulus: m.norm() }));
        }
        Ok(f)
    }

    pub fn sigma_field(&self, grid: Grid64) -> Result<ComplexField64> {
        self.complex_from(&self.sigma, grid, "sigma", |n, p| Ok(SourcePreset::from_name(n, p)?.complex_field(grid)))
    }

    pub fn g_field(&self, grid: Grid64) -> Result<RealField64> {
        match &self.g {
            Spec::Preset { name, params } => Ok(SourcePreset::from_name(name, params)?.real_field(grid)),
            Spec::File(p) => self.real_file(p, grid, "g"),
        }
    }

    fn real_file(&self, p: &Path, grid: Grid64, section: &str) -> Result<RealField64> {
        let f = read_real_csv(&self.resolve(p)).map_err(|e| self.at(section, Some("file"), e))?;
        if f.grid() != &grid {
            return Err(self.at(section, Some("file"), Error::GridMismatch));
        }
        Ok(f.fill_masked(0.0).without_mask())
    }

    pub fn boundary_data(&self, domain: &DomainSpec) -> Result<BoundaryData> {
        match &self.phi {
            Spec::Preset { name, params } => PhiPreset::from_name(name, params)?.boundary_data(domain),
            Spec::File(_) => Err(self.at("phi", Some("file"), Error::InvalidParameter("boundary data come from presets (const, cos, table)".into()))),
        }
    }

    pub fn orlicz(&self) -> Result<OrliczFunction> {
        match &self.audit.orlicz {
            Spec::Preset { name, params } => orlicz_from_name(name, params),
            Spec::File(_) => Err(Error::InvalidParameter("Orlicz functions are presets".into())),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let qc = QcOptions { tol: self.solver.tol, max_iterations: self.solver.max_iterations };
        SolveOptions {
            qc,
            ladder: LadderOptions { caps: self.solver.ladder_caps.clone(), tol: self.solver.ladder_tol, solver: qc, run_all_levels: self.solver.run_all_levels },
            ladder_threshold: self.solver.ladder_threshold,
            loop_tolerance: self.solver.loop_tolerance,
            seed: self.seed,
        }
    }

    /// Validated Beltrami problem; invariant violations point at their section.
    pub fn beltrami_problem(&self) -> Result<BeltramiProblem> {
        let grid = self.grid().map_err(|e| self.at("grid", Some("n"), e))?;
        let domain = self.domain().map_err(|e| self.at("domain", None, e))?;
        let mu = self.mu_field(grid)?;
        let sigma = self.sigma_field(grid).map_err(|e| self.at("sigma", None, e))?;
        let phi = self.boundary_data(&domain).map_err(|e| self.at("phi", None, e))?;
        BeltramiProblem::new(domain, mu, sigma, phi, self.solver.anchor).map_err(|e| {
            let section = if e.to_string().contains("anchor") { "solver" } else { "sigma" };
            self.at(section, None, e)
        })
    }

    pub fn matrix_field(&self, grid: Grid64) -> Result<MatrixField> {
        match &self.a {
            MatrixSpec::Identity => Ok(MatrixField::identity(grid)),
            MatrixSpec::FromMu => a_from_mu(&self.mu_field(grid)?).map_err(|e| self.at("A", None, e)),
            MatrixSpec::Files(fs) => {
                let f = |i: usize| self.real_file(&fs[i], grid, "A");
                MatrixField::new(f(0)?, f(1)?, f(2)?, f(3)?).map_err(|e| self.at("A", Some("files"), e))
            }
        }
    }

    pub fn poisson_problem(&self) -> Result<PoissonProblem> {
        let grid = self.grid().map_err(|e| self.at("grid", Some("n"), e))?;
        let domain = self.domain().map_err(|e| self.at("domain", None, e))?;
        let a = self.matrix_field(grid)?;
        let g = self.g_field(grid).map_err(|e| self.at("g", None, e))?;
        let phi = self.boundary_data(&domain).map_err(|e| self.at("phi", None, e))?;
        PoissonProblem::new(domain, a, g, phi).map_err(|e| self.at("g", None, e))
    }

    /// Canonical TOML; `parse(to_toml())` reproduces the configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config serializes")
    }

    /// The canonical configuration as JSON, for manifests.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_table()).expect("config serializes")
    }

    /// Replaces the grid size and seed, re-checking the grid.
    pub fn with_overrides(mut self, grid_n: Option<usize>, seed: Option<u64>) -> Result<Config> {
        if let Some(n) = grid_n {
            self.grid.n = n;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        self.grid().map_err(|e| Error::config(format!("--grid-n: {e}")))?;
        Ok(self)
    }

    fn to_table(&self) -> Table {
        let mut root = Table::new();
        root.insert("schema_version".into(), Value::Integer(self.schema_version));
        root.insert("seed".into(), Value::Integer(self.seed as i64));
        let mut g = Table::new();
        g.insert("n".into(), Value::Integer(self.grid.n as i64));
        g.insert("half_width".into(), Value::Float(self.grid.half_width));
        g.insert("center".into(), point(self.grid.center));
        root.insert("grid".into(), Value::Table(g));
        let mut d = spec_table(&self.domain);
        d.insert("samples".into(), Value::Integer(self.samples as i64));
        root.insert("domain".into(), Value::Table(d));
        for (k, s) in [("mu", &self.mu), ("sigma", &self.sigma), ("phi", &self.phi), ("g", &self.g)] {
            root.insert(k.into(), Value::Table(spec_table(s)));
        }
        let mut a = Table::new();
        match &self.a {
            MatrixSpec::Identity => {
                a.insert("preset".into(), Value::String("identity".into()));
            }
            MatrixSpec::FromMu => {
                a.insert("preset".into(), Value::String("from-mu".into()));
            }
            MatrixSpec::Files(fs) => {
                a.insert("files".into(), Value::Array(fs.iter().map(|p| Value::String(p.display().to_string())).collect()));
            }
        }
        root.insert("A".into(), Value::Table(a));
        let s = &self.solver;
        let mut st = Table::new();
        st.insert("tol".into(), Value::Float(s.tol));
        st.insert("max_iterations".into(), Value::Integer(s.max_iterations as i64));
        st.insert("loop_tolerance".into(), Value::Float(s.loop_tolerance));
        st.insert("ladder_caps".into(), Value::Array(s.ladder_caps.iter().map(|&c| Value::Float(c)).collect()));
        st.insert("ladder_tol".into(), Value::Float(s.ladder_tol));
        st.insert("ladder_threshold".into(), Value::Float(s.ladder_threshold));
        st.insert("run_all_levels".into(), Value::Boolean(s.run_all_levels));
        st.insert("residual_tolerance".into(), Value::Float(s.residual_tolerance));
        st.insert("boundary_tolerance".into(), Value::Float(s.boundary_tolerance));
        if let Some(z) = s.anchor {
            st.insert("anchor".into(), point(z));
        }
        root.insert("solver".into(), Value::Table(st));
        let au = &self.audit;
        let mut at = Table::new();
        match &au.points {
            AuditPoints::List(ps) => {
                at.insert("points".into(), Value::Array(ps.iter().map(|&z| point(z)).collect()));
            }
            AuditPoints::Boundary { stride } => {
                at.insert("boundary_stride".into(), Value::Integer(*stride as i64));
            }
        }
        at.insert("criteria".into(), Value::Array(au.criteria.iter().map(|c| Value::String(c.clone())).collect()));
        if let Some(e) = au.eps0 {
            at.insert("eps0".into(), Value::Float(e));
        }
        at.insert("levels".into(), Value::Integer(au.levels as i64));
        at.insert("fmo_levels".into(), Value::Integer(au.fmo_levels as i64));
        at.insert("delta".into(), Value::Float(au.delta));
        at.insert("orlicz".into(), Value::Table(spec_table(&au.orlicz)));
        at.insert("psi".into(), Value::Array(au.psi.iter().map(|c| Value::String(c.clone())).collect()));
        if let Some(d) = &au.dominant {
            at.insert("dominant".into(), Value::Table(spec_table(d)));
        }
        root.insert("audit".into(), Value::Table(at));
        root
    }
}

fn point(z: C64) -> Value {
    Value::Array(vec![Value::Float(z.re), Value::Float(z.im)])
}

fn spec_table(s: &Spec) -> Table {
    let mut t = Table::new();
    match s {
        Spec::Preset { name, params } => {
            t.insert("preset".into(), Value::String(name.clone()));
            for (k, v) in &params.0 {
                let val = if v.len() == 1 { Value::Float(v[0]) } else { Value::Array(v.iter().map(|&x| Value::Float(x)).collect()) };
                t.insert(k.clone(), val);
            }
        }
        Spec::File(p) => {
            t.insert("file".into(), Value::String(p.display().to_string()));
        }
    }
    t
}
