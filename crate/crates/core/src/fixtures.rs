//! Small reference networks used by the examples and tests.

use crate::network::{ArcId, ArcParams, Network, NodeId};
use crate::thinflow::{ThinFlowArc, ThinFlowInstance};
use crate::num::{int, Extended};

fn arc(name: &str, tail: usize, head: usize, transit: i64, storage: Option<i64>, cap_in: i64, cap_out: i64) -> ArcParams {
    ArcParams {
        name: name.into(),
        tail: NodeId(tail),
        head: NodeId(head),
        transit: int(transit),
        storage: storage.map_or(Extended::Infinite, |s| Extended::Finite(int(s))),
        inflow_cap: int(cap_in),
        outflow_cap: int(cap_out),
    }
}

/// The introductory three-node example `s -> v -> t` with a short arc `e2`
/// of storage 8 and a long detour `e3`. `e2_outflow_cap` is 1 for the left
/// variant (queueing, detour opens) and 2 for the right one (spillback).
pub fn intro_network(e2_outflow_cap: i64) -> Network {
    Network {
        node_names: vec!["s".into(), "v".into(), "t".into()],
        arcs: vec![
            arc("e1", 0, 1, 1, None, 4, 3),
            arc("e2", 1, 2, 1, Some(8), 3, e2_outflow_cap),
            arc("e3", 1, 2, 7, None, 3, 2),
        ],
        source: NodeId(0),
        sink: NodeId(2),
        inflow_rate: int(3),
    }
}

/// The introductory example with spillback disabled: infinite storage and
/// inflow capacities above the total outflow capacity entering each tail.
pub fn intro_network_without_spillback(e2_outflow_cap: i64) -> Network {
    let mut net = intro_network(e2_outflow_cap);
    for i in 0..net.arcs.len() {
        net.arcs[i].storage = Extended::Infinite;
        net.arcs[i].inflow_cap = net.unrestricted_inflow_cap(net.arcs[i].tail);
    }
    net
}

/// A single arc `s -> t` whose outflow capacity equals the inflow rate.
pub fn single_arc(transit: i64, rate: i64) -> Network {
    Network {
        node_names: vec!["s".into(), "t".into()],
        arcs: vec![arc("e", 0, 1, transit, None, rate + 1, rate)],
        source: NodeId(0),
        sink: NodeId(1),
        inflow_rate: int(rate),
    }
}

/// A random valid network with `nodes` nodes: a backbone path from the source
/// to the sink plus random extra arcs, none entering the source.
pub fn random_network<R: rand::Rng>(rng: &mut R, nodes: usize) -> Network {
    assert!(nodes >= 2, "need a source and a sink");
    let rate = int(rng.gen_range(1..=3));
    let pick = |rng: &mut R, options: &[(i64, i64)]| {
        let (n, d) = options[rng.gen_range(0..options.len())];
        crate::num::ratio(n, d)
    };
    let mut arcs = Vec::new();
    let mut add = |rng: &mut R, tail: usize, head: usize| {
        let transit = pick(rng, &[(1, 1), (2, 1), (3, 1), (1, 2), (3, 2)]);
        let outflow_cap = pick(rng, &[(1, 1), (2, 1), (3, 1), (1, 2), (3, 2)]);
        let (storage, inflow_cap) = if tail == 0 {
            (Extended::Infinite, &rate + pick(rng, &[(1, 1), (1, 2), (2, 1)]))
        } else {
            let cap = pick(rng, &[(1, 1), (2, 1), (3, 1), (4, 1), (3, 2)]);
            let storage = if rng.gen_bool(0.6) {
                Extended::Finite(&cap * &transit + int(rng.gen_range(1..=8)))
            } else {
                Extended::Infinite
            };
            (storage, cap)
        };
        arcs.push(ArcParams {
            name: format!("a{}", arcs.len()),
            tail: NodeId(tail),
            head: NodeId(head),
            transit,
            storage,
            inflow_cap,
            outflow_cap,
        });
    };
    for v in 1..nodes {
        let tail = rng.gen_range(0..v);
        add(rng, tail, v);
    }
    if nodes > 2 {
        let tail = rng.gen_range(1..nodes - 1);
        add(rng, tail, nodes - 1);
    }
    let extra = rng.gen_range(0..=nodes);
    for _ in 0..extra {
        let tail = rng.gen_range(0..nodes - 1);
        let head = rng.gen_range(1..nodes);
        if tail != head {
            add(rng, tail, head);
        }
    }
    let mut node_names: Vec<String> = (0..nodes).map(|v| format!("v{v}")).collect();
    node_names[0] = "s".into();
    node_names[nodes - 1] = "t".into();
    Network { node_names, arcs, source: NodeId(0), sink: NodeId(nodes - 1), inflow_rate: rate }
}

/// A random acyclic thin-flow instance on `nodes` nodes (numbered in
/// topological order, source first, sink last) with at most `max_arcs` arcs
/// and random resetting flags.
pub fn random_thin_flow_instance<R: rand::Rng>(rng: &mut R, nodes: usize, max_arcs: usize) -> ThinFlowInstance {
    assert!(nodes >= 2 && max_arcs >= nodes - 1, "need a backbone");
    let pick = |rng: &mut R, options: &[(i64, i64)]| {
        let (n, d) = options[rng.gen_range(0..options.len())];
        crate::num::ratio(n, d)
    };
    let mut ends: Vec<(usize, usize)> = (1..nodes).map(|v| (rng.gen_range(0..v), v)).collect();
    let extra = rng.gen_range(0..=max_arcs - ends.len());
    for _ in 0..extra {
        let u = rng.gen_range(0..nodes - 1);
        let v = rng.gen_range(u + 1..nodes);
        ends.push((u, v));
    }
    let arcs = ends
        .into_iter()
        .enumerate()
        .map(|(k, (u, v))| ThinFlowArc {
            id: ArcId(k),
            tail: NodeId(u),
            head: NodeId(v),
            outflow_cap: pick(rng, &[(1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (5, 3)]),
            inflow_bound: pick(rng, &[(1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (4, 1), (7, 3)]),
            resetting: rng.gen_bool(0.4),
        })
        .collect();
    ThinFlowInstance {
        node_count: nodes,
        source: NodeId(0),
        sink: NodeId(nodes - 1),
        arcs,
        demand: pick(rng, &[(1, 2), (1, 1), (2, 1), (3, 1), (5, 2)]),
    }
}
