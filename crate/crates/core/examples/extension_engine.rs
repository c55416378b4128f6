//! Watch the engine extend the equilibrium phase by phase and report which
//! bound stopped each step.

use nashflow::engine::{compute_nash_flow_observed, TerminationPolicy};
use nashflow::io;
use nashflow::network::validate_network;

pub fn main() {
    let net = io::parse_network(include_str!("../fixtures/diamond.json")).unwrap();
    let net = validate_network(&net).unwrap();
    let traj = compute_nash_flow_observed(&net, &TerminationPolicy::default(), |ev| {
        let binding: Vec<String> = ev
            .bounds
            .binding()
            .iter()
            .map(|b| format!("{:?} on {}", b.kind, net.arc(b.arc).name))
            .collect();
        println!(
            "phase {} from θ={}: α={} {}",
            ev.index + 1,
            ev.phase.start,
            ev.bounds.alpha,
            if binding.is_empty() { "(no bound, steady state)".to_string() } else { binding.join(", ") }
        );
    })
    .unwrap();
    println!("{:?} after {} phases", traj.termination(), traj.phases().len());
}
