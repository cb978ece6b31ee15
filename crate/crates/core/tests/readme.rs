use std::path::Path;

use beltrami::beltrami::{solve_with, BeltramiProblem, SolveOptions};
use beltrami::config::{AuditPoints, Config, MatrixSpec};
use beltrami::domain::{BoundaryData, DomainSpec};
use beltrami::{ComplexField64, Grid64, C64};

const README: &str = include_str!("../../../README.md");

fn fenced(lang: &str) -> &'static str {
    let open = format!("```{lang}\n");
    let start = README.find(&open).expect("fenced block") + open.len();
    &README[start..start + README[start..].find("```").unwrap()]
}

#[test]
fn documented_config_parses() {
    let cfg = Config::parse(fenced("toml"), Path::new(".")).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.a, MatrixSpec::FromMu);
    assert_eq!(cfg.audit.points, AuditPoints::List(vec![C64::new(1.0, 0.0)]));
    assert_eq!(cfg.audit.criteria.len(), 7);
    cfg.beltrami_problem().unwrap();
}

#[test]
fn documented_library_example() {
    let grid = Grid64::centered(2.0, 64).unwrap();
    let disk = DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 256).unwrap();
    let phi = BoundaryData::from_fn(&disk, |z| z.re).unwrap();
    let zero = ComplexField64::zeros(grid);
    let problem = BeltramiProblem::new(disk, zero.clone(), zero, phi, None).unwrap();
    let sol = solve_with(&problem, &SolveOptions::default()).unwrap();
    assert!((sol.eval(C64::new(0.3, 0.2)).unwrap() - C64::new(0.3, 0.2)).norm() < 1e-6);
}
