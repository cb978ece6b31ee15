//! Preset × criterion verdict matrix shared by the matrix and acceptance tests.

use beltrami::criteria::{
    cz_test, fmo_radii, fmo_test, lehto_test, mean_test, orlicz_test, psi_condition_test, CriterionVerdict, Ladder,
    OrliczFunction, PsiFamily, Verdict, INTEGRAL_LEVELS,
};
use beltrami::presets::QPreset;
use beltrami::C64;

use Verdict::{Satisfied as S, Violated as V};


/// Verdicts from closed-form antiderivatives of the radial profiles.
pub fn oracle() -> Vec<(QPreset, C64, [Verdict; 7])> {
    let origin = C64::new(0.0, 0.0);
    vec![
        (QPreset::Const { c: 1.0 }, origin, [S, S, S, S, S, S, S]),
        (QPreset::Log, origin, [S, S, V, S, S, V, S]),
        (QPreset::PowLog { lambda: 0.5 }, origin, [S, S, S, S, S, S, S]),
        (QPreset::InvR, origin, [V, V, V, V, V, V, V]),
        (QPreset::ExpIntegrable, C64::new(1.0, 0.0), [V, S, V, S, S, V, S]),
    ]
}

pub fn evaluate(q: &QPreset, z0: C64) -> Vec<CriterionVerdict> {
    let k = |d: C64| q.local(d, z0);
    let eps0 = 0.5 * (-std::f64::consts::E).exp();
    let ladder = Ladder::new(eps0, INTEGRAL_LEVELS).unwrap();
    vec![
        fmo_test(&k, &fmo_radii(eps0).unwrap()).unwrap(),
        mean_test(&k, &ladder).unwrap(),
        cz_test(&k, &ladder).unwrap(),
        lehto_test(&k, &ladder).unwrap(),
        orlicz_test(&k, &OrliczFunction::exp(0.5).unwrap(), 1.0, &ladder).unwrap(),
        psi_condition_test(&k, &PsiFamily::Inverse, &ladder).unwrap(),
        psi_condition_test(&k, &PsiFamily::InverseLog, &ladder).unwrap(),
    ]
}
