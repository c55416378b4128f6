//! Check a trajectory with the engine-independent validator, then show that
//! each deliberately broken trajectory is caught.

use nashflow::engine::{compute_nash_flow, TerminationPolicy};
use nashflow::io;
use nashflow::network::validate_network;
use nashflow::validator::{self, mutations::mutation_fixtures, run_check};

pub fn main() {
    let net = io::parse_network(include_str!("../fixtures/n1_left.json")).unwrap();
    let net = validate_network(&net).unwrap();
    let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();

    let report = validator::validate_trajectory(&traj);
    for r in &report.results {
        println!("{:?}: {}", r.check, if r.passed { "pass" } else { "fail" });
    }
    assert!(report.passed());

    let eps = validator::epsilon_lower_bound(&net);
    println!("every queued arc releases at least {} per unit of time", eps.epsilon);

    for m in mutation_fixtures() {
        let report = run_check(m.check, &m.trajectory).unwrap();
        let w = report.witnesses().find(|w| w.condition == m.condition).expect("mutation is caught");
        println!("{}: {:?} violated at θ={} ({} vs {})", m.name, w.condition, w.time, w.lhs, w.rhs);
    }
}
