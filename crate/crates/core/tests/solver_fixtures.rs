//! Solver verdicts against a committed suite solved offline by an
//! independent conic solver (see `fixtures/gen_fixtures.py`).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use steerkit::sdp::{solve, Certificate, ProblemDocument, SdpStatus};

const OBJECTIVE_TOL: f64 = 1e-6;
const GAP_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-8;
const MARGIN_FLOOR: f64 = 1e-8;

#[derive(Deserialize)]
struct Verdict {
    status: String,
    objective: Option<f64>,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn oracle() -> BTreeMap<String, Verdict> {
    let text = std::fs::read_to_string(fixtures().join("oracle.json")).expect("oracle.json");
    serde_json::from_str(&text).expect("oracle format")
}

fn load(name: &str) -> steerkit::Problem {
    let path = fixtures().join("sdp").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let doc: ProblemDocument = serde_json::from_str(&text).expect("problem format");
    doc.to_problem().expect("valid problem")
}

#[test]
fn suite_has_the_expected_shape() {
    let oracle = oracle();
    assert_eq!(oracle.len(), 25);
    let infeasible = oracle.values().filter(|v| v.status == "primal-infeasible").count();
    assert_eq!(infeasible, 5);
}

#[test]
fn statuses_and_objectives_match_the_oracle() {
    let mut failures = Vec::new();
    for (name, want) in oracle() {
        let sol = solve(&load(&name)).unwrap();
        if sol.status.label() != want.status {
            failures.push(format!("{name}: status {} vs oracle {}", sol.status.label(), want.status));
            continue;
        }
        match sol.status {
            SdpStatus::Optimal => {
                let obj = want.objective.expect("optimal verdict carries an objective");
                let err = (sol.objective_value - obj).abs();
                if err > OBJECTIVE_TOL {
                    failures.push(format!("{name}: objective {} vs {obj} (err {err:e})", sol.objective_value));
                }
                if sol.gap > GAP_TOL {
                    failures.push(format!("{name}: gap {:e}", sol.gap));
                }
                if sol.primal_residual > RESIDUAL_TOL || sol.dual_residual > RESIDUAL_TOL {
                    failures.push(format!("{name}: residuals {:e} / {:e}", sol.primal_residual, sol.dual_residual));
                }
                let problem = load(&name);
                for (spec, block) in problem.blocks.iter().zip(&sol.blocks) {
                    if spec.cone == steerkit::sdp::Cone::Psd {
                        let lo = block.min_eigenvalue().unwrap();
                        if lo < -PSD_TOL {
                            failures.push(format!("{name}: block eigenvalue {lo:e}"));
                        }
                    }
                }
            }
            SdpStatus::PrimalInfeasible => match &sol.certificate {
                Some(Certificate::Farkas { margin, .. }) if *margin > MARGIN_FLOOR => {}
                other => failures.push(format!("{name}: missing or weak certificate {other:?}")),
            },
            _ => failures.push(format!("{name}: unexpected status {:?}", sol.status)),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
