//! Export a trajectory to JSON, read it back, and draw its queues.

use nashflow::engine::{compute_nash_flow, TerminationPolicy};
use nashflow::io;
use nashflow::network::validate_network;
use nashflow::svg::{render_svg, PlotKind};

pub fn main() {
    let net = io::parse_network(include_str!("../fixtures/n1_right.json")).unwrap();
    let net = validate_network(&net).unwrap();
    let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();

    let json = io::trajectory_to_json(&traj);
    let back = io::parse_trajectory(&json).unwrap();
    assert_eq!(io::trajectory_to_json(&back), json);
    println!("trajectory export: {} bytes, round trip exact", json.len());

    let dir = std::env::temp_dir();
    for (kind, name) in [(PlotKind::Labels, "labels"), (PlotKind::Queues, "queues"), (PlotKind::Loads, "loads")] {
        let path = dir.join(format!("nashflow_n1_right_{name}.svg"));
        std::fs::write(&path, render_svg(&back, kind, None)).unwrap();
        println!("wrote {}", path.display());
    }
}
