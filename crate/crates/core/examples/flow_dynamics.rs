//! Queues, loads, exit times and spillback factors of a computed trajectory.

use nashflow::dynamics::node_spillback_factor;
use nashflow::engine::{compute_nash_flow, TerminationPolicy};
use nashflow::io;
use nashflow::network::validate_network;
use nashflow::num::{int, ratio};

pub fn main() {
    let net = io::parse_network(include_str!("../fixtures/n1_right.json")).unwrap();
    let net = validate_network(&net).unwrap();
    let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();
    let e2 = net.arc_by_name("e2").unwrap();

    for t in [2, 5, 7, 10] {
        let theta = int(t);
        println!(
            "θ={t}: z_e2={} d_e2={} full={} exit time={}",
            traj.queue_length(e2, &theta),
            traj.arc_load(e2, &theta),
            traj.is_full(e2, &theta),
            traj.exit_time(e2, &theta).unwrap()
        );
    }
    // e2 fills up at arc time 7 and then only admits 2 per unit of time
    assert!(traj.is_full(e2, &int(7)));
    assert_eq!(traj.inflow_bound(e2, &int(8)), int(2));

    // the merge at v: e1 pushes 3, the full arc e2 takes 2, so v throttles to 2/3
    let (c, outflow) = node_spillback_factor(&[int(3)], &int(2), &[int(3)]).unwrap();
    println!("c_v = {c}, f⁻_e1 = {}", outflow[0]);
    assert_eq!(c, ratio(2, 3));
}
