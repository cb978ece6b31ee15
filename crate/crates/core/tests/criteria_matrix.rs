mod common;

use common::{evaluate, oracle};

const COLUMNS: [&str; 7] = ["FMO", "MEAN", "CZ", "LEHTO", "ORLICZ(exp)", "PSI(1/t)", "PSI(1/(t log))"];

#[test]
fn verdict_matrix_matches_oracle() {
    let mut disagreements = Vec::new();
    for (q, z0, expect) in oracle() {
        for ((v, e), col) in evaluate(&q, z0).iter().zip(expect).zip(COLUMNS) {
            if v.verdict != e {
                disagreements.push(format!("{} / {col}: got {} (slope {:.3}), expected {e}", q.name(), v.verdict, v.growth_exponent));
            }
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:#?}");
}
