//! Degeneracy audit of a configured coefficient: every selected criterion at
//! every selected point.

use crate::config::{AuditPoints, Config, Spec};
use crate::criteria::{
    bmo_refinement_test, cz_test, default_eps0, fmo_radii, fmo_test, lehto_test, mean_test, orlicz_test,
    psi_condition_test, tangent_dilatation_local, CriterionVerdict, Ladder, Local, PsiFamily,
};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::presets::{MuPreset, QPreset};
use crate::{ComplexField64, C64};

/// Grid sizes of the BMO refinement study.
pub const BMO_SIZES: [usize; 3] = [64, 128, 256];

#[derive(Debug, Clone)]
pub struct AuditRow {
    pub z0: C64,
    /// Criterion label including its family, e.g. `PSI(1/t)`.
    pub label: String,
    pub result: CriterionVerdict,
}

enum Coefficient {
    Preset(MuPreset),
    Field(ComplexField64),
}

impl Coefficient {
    fn mu(&self, z: C64) -> C64 {
        match self {
            Coefficient::Preset(p) => p.eval(z),
            Coefficient::Field(f) => f.interpolate(z).unwrap_or(C64::new(f64::NAN, f64::NAN)),
        }
    }

    fn dilatation(&self, z: C64) -> f64 {
        let m = self.mu(z).norm();
        (1.0 + m) / (1.0 - m)
    }
}

pub fn audit_points(points: &AuditPoints, domain: &DomainSpec) -> Vec<C64> {
    match points {
        AuditPoints::List(ps) => ps.clone(),
        AuditPoints::Boundary { stride } => domain.samples().iter().step_by((*stride).max(1)).copied().collect(),
    }
}

fn dominant(cfg: &Config) -> Result<Option<QPreset>> {
    match &cfg.audit.dominant {
        None => Ok(None),
        Some(Spec::Preset { name, params }) => QPreset::from_name(name, params).map(Some),
        Some(Spec::File(_)) => Err(Error::InvalidParameter("the FMO dominant is a preset".into())),
    }
}

/// Rows ordered by point, then by criterion in configuration order.
pub fn run_audit(cfg: &Config) -> Result<Vec<AuditRow>> {
    let domain = cfg.domain()?;
    let coef = match cfg.mu_preset() {
        Some(p) => Coefficient::Preset(p),
        None => Coefficient::Field(cfg.mu_field(cfg.grid()?)?),
    };
    let q_dom = dominant(cfg)?;
    let phi = cfg.orlicz()?;
    let mut rows = Vec::new();
    for z0 in audit_points(&cfg.audit.points, &domain) {
        let eps0 = cfg.audit.eps0.unwrap_or_else(|| default_eps0(&domain, z0));
        let ladder = Ladder::new(eps0, cfg.audit.levels)?;
        let kt = tangent_dilatation_local(|z| coef.mu(z), z0);
        let k: &Local<'_> = &kt;
        for name in &cfg.audit.criteria {
            let mut push = |label: String, result: CriterionVerdict| rows.push(AuditRow { z0, label, result });
            match name.as_str() {
                "FMO" => {
                    let eps = if cfg.audit.fmo_levels == crate::criteria::FMO_LEVELS { fmo_radii(eps0)? } else { Ladder::new(eps0, cfg.audit.fmo_levels)?.radii() };
                    let v = match &q_dom {
                        Some(q) => fmo_test(&|d| q.local(d, z0), &eps)?,
                        None => fmo_test(k, &eps)?,
                    };
                    push("FMO".into(), v)
                }
                "MEAN" => push("MEAN".into(), mean_test(k, &ladder)?),
                "CZ" => push("CZ".into(), cz_test(k, &ladder)?),
                "LEHTO" => push("LEHTO".into(), lehto_test(k, &ladder)?),
                "ORLICZ" => push(format!("ORLICZ({})", phi.name()), orlicz_test(k, &phi, cfg.audit.delta, &ladder)?),
                "EXP" => {
                    let alpha = match &cfg.audit.orlicz {
                        Spec::Preset { params, .. } => params.scalar("alpha", Some(0.5))?,
                        Spec::File(_) => 0.5,
                    };
                    push("EXP".into(), crate::criteria::exp_test(k, alpha, &ladder)?)
                }
                "PSI" => {
                    for fam in &cfg.audit.psi {
                        let family = if fam == "1/t" { PsiFamily::Inverse } else { PsiFamily::InverseLog };
                        push(format!("PSI({fam})"), psi_condition_test(k, &family, &ladder)?);
                    }
                }
                // Global, not pointwise: handled below.
                "BMO" => {}
                other => return Err(Error::InvalidParameter(format!("unknown criterion `{other}`"))),
            }
        }
    }
    if cfg.audit.criteria.iter().any(|c| c == "BMO") {
        let v = match &q_dom {
            Some(q) => bmo_refinement_test(&|z| q.at(z), &domain, &BMO_SIZES)?,
            None => bmo_refinement_test(&|z| coef.dilatation(z), &domain, &BMO_SIZES)?,
        };
        rows.push(AuditRow { z0: domain.centroid(), label: "BMO-dominant".into(), result: v });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Verdict;
    use std::path::Path;

    #[test]
    fn log_degenerate_boundary_point() {
        let src = "schema_version = 1\n[mu]\npreset = \"log-degenerate\"\nlambda = 0.5\nz0 = [1, 0]\n[audit]\npoints = [[1, 0], [0, 1]]\ncriteria = [\"LEHTO\", \"PSI\"]\nlevels = 60\n";
        let cfg = Config::parse(src, Path::new(".")).unwrap();
        let rows = run_audit(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].label, "LEHTO");
        assert_eq!(rows[0].result.verdict, Verdict::Satisfied);
        assert!(rows.iter().all(|r| r.result.verdict != Verdict::Violated || r.z0 == C64::new(1.0, 0.0)));
    }
}
