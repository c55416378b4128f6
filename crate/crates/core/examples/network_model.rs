//! Load a network file, check it, and look at what the checks reject.

use nashflow::io;
use nashflow::network::validate_network;

pub fn main() {
    let net = io::parse_network(include_str!("../fixtures/diamond.json")).expect("fixture parses");
    let net = validate_network(&net).expect("fixture is valid");
    println!("{} nodes, {} arcs, rate {}", net.node_count(), net.arc_count(), net.inflow_rate);
    for e in net.arc_ids() {
        let a = net.arc(e);
        println!(
            "  {}: {} -> {}  τ={} σ={} ν⁺={} ν⁻={}",
            a.name,
            net.node_name(a.tail),
            net.node_name(a.head),
            a.transit,
            a.storage,
            a.inflow_cap,
            a.outflow_cap
        );
    }

    // "auto" resolved to something no inflow can exceed
    let sa = net.arc_by_name("sa").unwrap();
    assert!(net.arc(sa).inflow_cap > net.inflow_rate);

    let bad = io::parse_network(include_str!("../fixtures/invalid_storage.json")).expect("fixture parses");
    let violations = validate_network(&bad).unwrap_err();
    println!("rejected network:");
    for v in &violations {
        println!("  {v}");
    }
    assert_eq!(violations.len(), 2);
}
