use p2f_core::cex::ProofFailure;
use p2f_core::lang::load;
use p2f_core::repair::{baseline_verdicts, repair_failure, RepairConfig};
use p2f_core::solver::{check, SolverConfig};
use p2f_core::vcgen::class_obligations;
use std::time::Instant;

const CLOCK: &str = include_str!("data/clock_buggy.mcl");

#[test]
fn probe() {
    let tp = load("clock.mcl", CLOCK).unwrap();
    let class = tp.program().classes[0].clone();
    let cfg = SolverConfig::default();
    let t0 = Instant::now();
    let failures: Vec<ProofFailure> = class_obligations(&tp, &class)
        .into_iter()
        .filter(|ob| !check(ob, &cfg).is_verified())
        .map(|obligation| ProofFailure { obligation })
        .collect();
    eprintln!("verify pass: {:?}", t0.elapsed());
    for f in &failures {
        eprintln!("FAILURE: {}", f.key());
    }
    let t1 = Instant::now();
    let baseline = baseline_verdicts(&tp, &class, &cfg);
    eprintln!("baseline: {:?} ({} obligations)", t1.elapsed(), baseline.len());
    let t2 = Instant::now();
    let report = repair_failure(&failures[0], &tp, CLOCK, &baseline, &RepairConfig::default());
    eprintln!(
        "repair {}: {:?}, candidates={}, valid={}",
        report.failure_key,
        t2.elapsed(),
        report.candidates_generated,
        report.valid_fixes.len()
    );
}
