//! `beltrami`: Dirichlet solvers for degenerate Beltrami and divergence-form
//! Poisson equations, a μ-conformal map tool and a degeneracy auditor.
//!
//! Exit codes: 0 solved within tolerances, 1 usage or configuration error,
//! 2 solved with warnings, 3 stage failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beltrami::audit::run_audit;
use beltrami::beltrami::{conformal_map, residual_report, solve_with};
use beltrami::config::Config;
use beltrami::criteria::Verdict;
use beltrami::error::{Error, Result};
use beltrami::export::Manifest;
use beltrami::poisson::{solve_poisson_with, weak_residual};
use beltrami::C64;
use clap::{Parser, Subcommand};
use serde_json::json;

/// Fraction of grid cells sampled by the homeomorphism probe.
const PROBE_FRACTION: f64 = 0.01;
/// Number of test bumps (a 5×5 lattice) in the weak residual.
const BASIS_SIZE: usize = 25;

#[derive(Parser, Debug)]
#[command(name = "beltrami", version, about = "Degenerate Beltrami and Poisson Dirichlet solvers via quasiconformal factorization")]
struct Cli {
    /// Directory receiving CSV fields, heatmaps and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured grid size (power of two, >= 8).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve `ω_z̄ = μ ω_z + σ` in D with `Re ω = φ` on ∂D.
    SolveBeltrami { config: PathBuf },
    /// Solve `div(A∇u) = g` in D with `u = φ` on ∂D.
    SolvePoisson { config: PathBuf },
    /// Evaluate degeneracy criteria of μ at boundary or listed points.
    AuditCriteria { config: PathBuf },
    /// Compute the μ-conformal map `f` and its Jacobian.
    QcMap { config: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveBeltrami { .. } => "solve-beltrami",
            Command::SolvePoisson { .. } => "solve-poisson",
            Command::AuditCriteria { .. } => "audit-criteria",
            Command::QcMap { .. } => "qc-map",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::SolveBeltrami { config } | Command::SolvePoisson { config } | Command::AuditCriteria { config } | Command::QcMap { config } => config,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match Config::from_path(cli.command.config()).and_then(|c| c.with_overrides(cli.grid_n, cli.seed)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create {}: {e}", cli.out_dir.display());
        return ExitCode::from(1);
    }
    let mut manifest = Manifest::new(cli.command.name(), cfg.seed, cfg.to_value());
    let run = match &cli.command {
        Command::SolveBeltrami { .. } => solve_beltrami(&cfg, &cli.out_dir, &mut manifest),
        Command::SolvePoisson { .. } => solve_poisson(&cfg, &cli.out_dir, &mut manifest),
        Command::AuditCriteria { .. } => audit_criteria(&cfg, &cli.out_dir, &mut manifest),
        Command::QcMap { .. } => qc_map(&cfg, &cli.out_dir, &mut manifest),
    };
    let code = match run {
        Ok(()) if manifest.warnings.is_empty() => 0,
        Ok(()) => {
            manifest.status = "warnings".into();
            2
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            manifest.status = format!("failed: {e}");
            3
        }
    };
    if let Err(e) = manifest.write(&cli.out_dir) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(3);
    }
    if !cli.quiet {
        eprintln!("{}: {} ({} files in {})", manifest.command, manifest.status, manifest.files.len(), cli.out_dir.display());
        for w in &manifest.warnings {
            eprintln!("warning: {w}");
        }
    }
    ExitCode::from(code)
}

fn solve_beltrami(cfg: &Config, dir: &Path, m: &mut Manifest) -> Result<()> {
    let problem = cfg.beltrami_problem()?;
    let sol = solve_with(&problem, &cfg.solve_options())?;
    m.warnings.extend(sol.warnings.iter().cloned());
    let rep = residual_report(&sol, &problem)?;
    m.residual("interior_residual", rep.interior_residual);
    m.residual("relative_residual", rep.relative_residual);
    m.residual("residual_nodes", rep.nodes_used);
    m.residual("boundary_error", rep.boundary_error);
    m.residual("gauge", rep.gauge);
    m.residual("loop_residual", sol.conjugate.loop_residual);
    m.residual("source_norms", json!(sol.source_norms));
    check(m, "relative interior residual", rep.relative_residual, cfg.solver.residual_tolerance);
    check(m, "boundary error", rep.boundary_error, cfg.solver.boundary_tolerance);
    map_residuals(m, &sol.map, sol.ladder_trace.as_deref(), cfg.seed);
    m.complex_field(dir, "omega", &sol.omega)?;
    m.complex_field(dir, "f", &sol.map.f)?;
    m.complex_field(dir, "S", &sol.s)?;
    m.complex_field(dir, "H", &sol.h)?;
    m.complex_field(dir, "A", &sol.a)?;
    Ok(())
}

fn solve_poisson(cfg: &Config, dir: &Path, m: &mut Manifest) -> Result<()> {
    let problem = cfg.poisson_problem()?;
    let sol = solve_poisson_with(&problem, &cfg.solve_options())?;
    m.warnings.extend(sol.warnings.iter().cloned());
    let rep = weak_residual(&sol.u, &problem, BASIS_SIZE)?;
    m.residual("weak_residual_max", rep.max_normalized);
    m.residual("weak_residuals", json!(rep.normalized));
    m.residual("boundary_error", rep.boundary_error);
    m.residual("density_norms", json!(sol.density_norms));
    check(m, "weak residual", rep.max_normalized, cfg.solver.residual_tolerance);
    check(m, "boundary error", rep.boundary_error, cfg.solver.boundary_tolerance);
    map_residuals(m, &sol.map, sol.ladder_trace.as_deref(), cfg.seed);
    m.real_field(dir, "u", &sol.u)?;
    m.complex_field(dir, "f", &sol.map.f)?;
    m.real_field(dir, "G", &sol.density)?;
    m.real_field(dir, "N_G", &sol.potential)?;
    m.real_field(dir, "H", &sol.harmonic.u)?;
    Ok(())
}

fn qc_map(cfg: &Config, dir: &Path, m: &mut Manifest) -> Result<()> {
    let grid = cfg.grid()?;
    let domain = cfg.domain()?;
    // μ is extended by zero outside D, as in the Dirichlet solvers.
    let mu = cfg.mu_field(grid)?.map_with_node(|z, m| if domain.contains(z) { m } else { C64::new(0.0, 0.0) });
    let (map, trace) = conformal_map(&mu, &domain, &cfg.solve_options(), &mut m.warnings)?;
    if map.min_jacobian() <= 0.0 {
        m.warnings.push(format!("non-positive Jacobian on the grid (min {:e})", map.min_jacobian()));
    }
    map_residuals(m, &map, trace.as_deref(), cfg.seed);
    m.complex_field(dir, "f", &map.f)?;
    m.real_field(dir, "J", &map.jacobian)?;
    Ok(())
}

fn check(m: &mut Manifest, what: &str, value: f64, tolerance: f64) {
    if value.is_nan() || value > tolerance {
        m.warnings.push(format!("{what} {value:.3e} exceeds tolerance {tolerance:.1e}"));
    }
}

fn map_residuals(m: &mut Manifest, map: &beltrami::qc::QCMap<f64>, trace: Option<&[f64]>, seed: u64) {
    m.residual("beltrami_residual", map.beltrami_residual);
    m.residual("qc_iterations", map.iterations);
    m.residual("qc_last_change", map.last_change);
    m.residual("min_jacobian", map.min_jacobian());
    if let Some(t) = trace {
        m.residual("ladder_trace", json!(t));
    }
    let probe = map.homeomorphism_probe(PROBE_FRACTION, seed);
    m.residual("homeomorphism_probe", json!({"cells": probe.cells_checked, "degenerate": probe.degenerate, "overlaps": probe.overlaps}));
    if !probe.passed() {
        m.warnings.push(format!("homeomorphism probe: {} degenerate, {} overlapping cells", probe.degenerate, probe.overlaps));
    }
}

/// `audit.csv` with one row per (point, criterion) and one trace CSV per row.
fn audit_criteria(cfg: &Config, dir: &Path, m: &mut Manifest) -> Result<()> {
    let rows = run_audit(cfg)?;
    let traces = dir.join("traces");
    fs::create_dir_all(&traces)?;
    let mut table = String::from("x,y,criterion,verdict,growth_exponent,trace_file\n");
    for (i, row) in rows.iter().enumerate() {
        let slug: String = row.label.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
        let rel = format!("traces/{i:04}_{slug}.csv");
        let mut t = String::from("eps,value\n");
        for (e, v) in &row.result.trace {
            t.push_str(&format!("{e:e},{v:e}\n"));
        }
        let path = dir.join(&rel);
        fs::write(&path, t)?;
        m.record(dir, &path, None, None)?;
        let r = &row.result;
        table.push_str(&format!("{:e},{:e},{},{},{:e},{rel}\n", row.z0.re, row.z0.im, row.label, r.verdict, r.growth_exponent));
        m.verdicts.push(json!({
            "x": row.z0.re, "y": row.z0.im, "criterion": row.label, "verdict": r.verdict.to_string(),
            "growth_exponent": r.growth_exponent, "params": r.params, "note": r.note, "trace_file": rel,
        }));
        if r.verdict == Verdict::Inconclusive {
            m.warnings.push(format!("{} at ({}, {}) is inconclusive", row.label, row.z0.re, row.z0.im));
        }
    }
    let path = dir.join("audit.csv");
    fs::write(&path, table)?;
    m.record(dir, &path, None, None)?;
    Ok(())
}
