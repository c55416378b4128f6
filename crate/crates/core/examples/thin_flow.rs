//! Solve one spillback thin flow and verify it independently.

use nashflow::io;
use nashflow::num::ratio;
use nashflow::thinflow::{solve_thin_flow_with, verify_thin_flow, SolveOptions};

pub fn main() {
    let named = io::parse_thin_flow_instance(include_str!("../fixtures/n1_right_phase2.json")).unwrap();
    let options = SolveOptions { collect_alternatives: true };
    let outcome = solve_thin_flow_with(&named.instance, &options).unwrap();
    let sol = &outcome.solution;

    for (name, x) in named.arc_names.iter().zip(&sol.flow) {
        println!("x'_{name} = {x}");
    }
    for (name, (l, c)) in named.node_names.iter().zip(sol.labels.iter().zip(&sol.factors)) {
        println!("ℓ'_{name} = {l}, c_{name} = {c}");
    }
    println!("{} linear programs, {} other solutions", outcome.programs_solved, outcome.alternatives.len());

    let report = verify_thin_flow(&named.instance, sol);
    assert!(report.is_valid());
    assert_eq!(sol.factors[1], ratio(2, 3));

    // a wrong factor is caught with a witness
    let mut wrong = sol.clone();
    wrong.factors[1] = ratio(1, 1);
    let report = verify_thin_flow(&named.instance, &wrong);
    for v in &report.violations {
        println!("with c_v = 1: {:?} fails on {:?} ({} vs {})", v.condition, v.subject, v.lhs, v.rhs);
    }
    assert!(!report.is_valid());
}
