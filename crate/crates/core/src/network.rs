//! Static network description, structural validation and the super-source
//! normalization.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{self, Extended, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node#{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arc#{}", self.0)
    }
}

/// One street segment: transit time, storage and the two bottleneck rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcParams {
    pub name: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub transit: Q,
    pub storage: Extended,
    pub inflow_cap: Q,
    pub outflow_cap: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub node_names: Vec<String>,
    pub arcs: Vec<ArcParams>,
    pub source: NodeId,
    pub sink: NodeId,
    pub inflow_rate: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("arcs {arcs:?} form a directed cycle with zero total transit time")]
    ZeroTransitCycle { arcs: Vec<ArcId> },
    #[error("node `{name}` is not reachable from the source")]
    UnreachableNode { node: NodeId, name: String },
    #[error("arc `{name}`: storage {storage} must exceed inflow capacity times transit time ({bound})")]
    StorageTooSmall { arc: ArcId, name: String, storage: String, bound: String },
    #[error("arc `{name}`: {reason}")]
    SourceArcViolation { arc: ArcId, name: String, reason: String },
    #[error("arc `{name}`: {which} capacity must be positive")]
    NonpositiveCapacity { arc: ArcId, name: String, which: &'static str },
    #[error("arc `{name}`: transit time must be nonnegative")]
    NegativeTransit { arc: ArcId, name: String },
    #[error("arc `{name}`: endpoint out of range")]
    DanglingArc { arc: ArcId, name: String },
    #[error("network inflow rate must be positive")]
    NonpositiveRate,
    #[error("source and sink must differ")]
    SourceIsSink,
}

/// A network that passed [`validate_network`]. Immutable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedNetwork(Network);

impl Deref for ValidatedNetwork {
    type Target = Network;

    fn deref(&self) -> &Network {
        &self.0
    }
}

impl ValidatedNetwork {
    pub fn into_inner(self) -> Network {
        self.0
    }
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, e: ArcId) -> &ArcParams {
        &self.arcs[e.0]
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_names.len()).map(NodeId)
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn arc_by_name(&self, name: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.name == name).map(ArcId)
    }

    pub fn incoming(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.arc_ids().filter(move |&e| self.arc(e).head == v)
    }

    pub fn outgoing(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.arc_ids().filter(move |&e| self.arc(e).tail == v)
    }

    /// Inflow capacity that can never bind: the total outflow capacity
    /// entering `tail` (plus the network inflow at the source) plus one.
    pub fn unrestricted_inflow_cap(&self, tail: NodeId) -> Q {
        let mut total: Q = self.incoming(tail).map(|e| self.arc(e).outflow_cap.clone()).sum();
        if tail == self.source {
            total += &self.inflow_rate;
        }
        total + num::one()
    }

    /// Shortest transit-time distances from the source (the labels of the empty flow).
    pub fn transit_distances(&self) -> Vec<Option<Q>> {
        let n = self.node_count();
        let mut dist: Vec<Option<Q>> = vec![None; n];
        let mut done = vec![false; n];
        dist[self.source.0] = Some(Q::zero());
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && dist[v].is_some())
                .min_by(|&a, &b| dist[a].cmp(&dist[b]));
            let Some(u) = next else { break };
            done[u] = true;
            let du = dist[u].clone().expect("set above");
            for e in self.outgoing(NodeId(u)) {
                let a = self.arc(e);
                let cand = &du + &a.transit;
                let w = a.head.0;
                if dist[w].as_ref().is_none_or(|d| cand < *d) {
                    dist[w] = Some(cand);
                }
            }
        }
        dist
    }
}

/// Linear order of `0..node_count` with every arc of `arcs` pointing forward,
/// or a witness cycle.
pub fn topological_order(
    node_count: usize,
    arcs: &[(ArcId, NodeId, NodeId)],
) -> Result<Vec<NodeId>, CycleFound> {
    let mut indeg = vec![0usize; node_count];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for (i, (_, tail, head)) in arcs.iter().enumerate() {
        indeg[head.0] += 1;
        out[tail.0].push(i);
    }
    let mut queue: VecDeque<usize> = (0..node_count).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(v) = queue.pop_front() {
        order.push(NodeId(v));
        for &i in &out[v] {
            let h = arcs[i].2 .0;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push_back(h);
            }
        }
    }
    if order.len() == node_count {
        return Ok(order);
    }
    // every remaining node has a remaining in-arc; walk backwards until a node repeats
    let remaining: Vec<bool> = (0..node_count).map(|v| indeg[v] > 0).collect();
    let start = remaining.iter().position(|&r| r).expect("some node is left");
    let back_arc = |v: usize| -> usize {
        arcs.iter()
            .position(|(_, t, h)| h.0 == v && remaining[t.0])
            .expect("remaining node has a remaining predecessor")
    };
    let mut seen = vec![None; node_count];
    let mut path = Vec::new();
    let mut v = start;
    while seen[v].is_none() {
        seen[v] = Some(path.len());
        let i = back_arc(v);
        path.push(i);
        v = arcs[i].1 .0;
    }
    let from = seen[v].expect("loop exits on a repeated node");
    let mut cycle: Vec<ArcId> = path[from..].iter().map(|&i| arcs[i].0).collect();
    cycle.reverse();
    Err(CycleFound { arcs: cycle })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("arc set contains the directed cycle {arcs:?}")]
pub struct CycleFound {
    pub arcs: Vec<ArcId>,
}

/// Checks every structural assumption of the model and reports all violations.
pub fn validate_network(net: &Network) -> Result<ValidatedNetwork, Vec<Violation>> {
    let mut violations = Vec::new();
    let n = net.node_count();
    if !net.inflow_rate.is_positive() {
        violations.push(Violation::NonpositiveRate);
    }
    if net.source == net.sink {
        violations.push(Violation::SourceIsSink);
    }
    for e in net.arc_ids() {
        let a = net.arc(e);
        let name = a.name.clone();
        if a.tail.0 >= n || a.head.0 >= n {
            violations.push(Violation::DanglingArc { arc: e, name });
            continue;
        }
        if a.transit.is_negative() {
            violations.push(Violation::NegativeTransit { arc: e, name: name.clone() });
        }
        if !a.inflow_cap.is_positive() {
            violations.push(Violation::NonpositiveCapacity { arc: e, name: name.clone(), which: "inflow" });
        }
        if !a.outflow_cap.is_positive() {
            violations.push(Violation::NonpositiveCapacity { arc: e, name: name.clone(), which: "outflow" });
        }
        if let Extended::Finite(sigma) = &a.storage {
            let bound = &a.inflow_cap * &a.transit;
            if *sigma <= bound || !sigma.is_positive() {
                violations.push(Violation::StorageTooSmall {
                    arc: e,
                    name: name.clone(),
                    storage: num::format_rational(sigma),
                    bound: num::format_rational(&bound),
                });
            }
        }
        if a.head == net.source {
            violations.push(Violation::SourceArcViolation {
                arc: e,
                name: name.clone(),
                reason: "the source must not have incoming arcs".into(),
            });
        }
        if a.tail == net.source {
            if !a.storage.is_infinite() {
                violations.push(Violation::SourceArcViolation {
                    arc: e,
                    name: name.clone(),
                    reason: "arcs leaving the source need infinite storage".into(),
                });
            }
            if a.inflow_cap <= net.inflow_rate {
                violations.push(Violation::SourceArcViolation {
                    arc: e,
                    name,
                    reason: "arcs leaving the source need an inflow capacity above the network inflow rate".into(),
                });
            }
        }
    }
    if violations.iter().any(|v| matches!(v, Violation::DanglingArc { .. })) {
        return Err(violations);
    }
    let dist = net.transit_distances();
    for v in net.node_ids() {
        if dist[v.0].is_none() {
            violations.push(Violation::UnreachableNode { node: v, name: net.node_name(v).to_string() });
        }
    }
    let zero_arcs: Vec<(ArcId, NodeId, NodeId)> = net
        .arc_ids()
        .filter(|&e| net.arc(e).transit.is_zero())
        .map(|e| (e, net.arc(e).tail, net.arc(e).head))
        .collect();
    if let Err(CycleFound { arcs }) = topological_order(n, &zero_arcs) {
        violations.push(Violation::ZeroTransitCycle { arcs });
    }
    if violations.is_empty() {
        Ok(ValidatedNetwork(net.clone()))
    } else {
        Err(violations)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SuperSourceError {
    #[error("the super source needs a positive network inflow rate")]
    NonpositiveRate,
}

fn source_assumptions_hold(net: &Network) -> bool {
    net.incoming(net.source).next().is_none()
        && net.outgoing(net.source).all(|e| {
            let a = net.arc(e);
            a.storage.is_infinite() && a.inflow_cap > net.inflow_rate
        })
}

/// Adds a node `s*` feeding the old source through an arc with zero transit
/// time, infinite storage, outflow capacity `r` and inflow capacity `r + 1`.
/// Networks that already satisfy the source assumptions are returned unchanged.
pub fn add_super_source(net: &Network) -> Result<Network, SuperSourceError> {
    if !net.inflow_rate.is_positive() {
        return Err(SuperSourceError::NonpositiveRate);
    }
    if source_assumptions_hold(net) {
        return Ok(net.clone());
    }
    let mut out = net.clone();
    let mut name = String::from("s*");
    while out.node_by_name(&name).is_some() {
        name.push('*');
    }
    let star = NodeId(out.node_names.len());
    out.node_names.push(name.clone());
    let r = net.inflow_rate.clone();
    out.arcs.push(ArcParams {
        name: format!("{name}->{}", net.node_name(net.source)),
        tail: star,
        head: net.source,
        transit: Q::zero(),
        storage: Extended::Infinite,
        inflow_cap: &r + num::one(),
        outflow_cap: r,
    });
    out.source = star;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::int;

    fn arc(name: &str, tail: usize, head: usize, tau: i64, sigma: Option<i64>, cin: i64, cout: i64) -> ArcParams {
        ArcParams {
            name: name.into(),
            tail: NodeId(tail),
            head: NodeId(head),
            transit: int(tau),
            storage: sigma.map_or(Extended::Infinite, |s| Extended::Finite(int(s))),
            inflow_cap: int(cin),
            outflow_cap: int(cout),
        }
    }

    fn net(nodes: &[&str], arcs: Vec<ArcParams>, r: i64) -> Network {
        Network {
            node_names: nodes.iter().map(|s| s.to_string()).collect(),
            arcs,
            source: NodeId(0),
            sink: NodeId(nodes.len() - 1),
            inflow_rate: int(r),
        }
    }

    #[test]
    fn intro_network_is_valid() {
        assert!(validate_network(&fixtures::intro_network(1)).is_ok());
        assert!(validate_network(&fixtures::intro_network(2)).is_ok());
    }

    #[test]
    fn storage_too_small() {
        let n = net(&["s", "t"], vec![arc("e", 0, 1, 1, Some(1), 2, 1)], 1);
        let errs = validate_network(&n).unwrap_err();
        assert!(errs.iter().any(|v| matches!(v, Violation::StorageTooSmall { .. })));
    }

    #[test]
    fn zero_transit_cycle() {
        let n = net(
            &["s", "u", "v", "t"],
            vec![
                arc("a", 0, 1, 1, None, 5, 1),
                arc("uv", 1, 2, 0, None, 5, 1),
                arc("vu", 2, 1, 0, None, 5, 1),
                arc("b", 2, 3, 1, None, 5, 1),
            ],
            1,
        );
        let errs = validate_network(&n).unwrap_err();
        let cycle = errs.iter().find_map(|v| match v {
            Violation::ZeroTransitCycle { arcs } => Some(arcs.clone()),
            _ => None,
        });
        let mut cycle = cycle.expect("zero transit cycle reported");
        cycle.sort();
        assert_eq!(cycle, vec![ArcId(1), ArcId(2)]);
    }

    #[test]
    fn unreachable_and_source_violations() {
        let n = net(
            &["s", "x", "t"],
            vec![arc("st", 0, 2, 1, Some(10), 5, 1), arc("ts", 2, 0, 1, None, 5, 1)],
            1,
        );
        let errs = validate_network(&n).unwrap_err();
        assert!(errs.iter().any(|v| matches!(v, Violation::UnreachableNode { node: NodeId(1), .. })));
        assert_eq!(
            errs.iter().filter(|v| matches!(v, Violation::SourceArcViolation { .. })).count(),
            2
        );
    }

    #[test]
    fn super_source_repairs_source_assumptions() {
        let n = net(
            &["s", "t"],
            vec![arc("st", 0, 1, 1, Some(10), 2, 1), arc("ts", 1, 0, 1, None, 5, 1)],
            3,
        );
        assert!(validate_network(&n).is_err());
        let fixed = add_super_source(&n).unwrap();
        let v = validate_network(&fixed).unwrap();
        let star = v.arc(ArcId(2));
        assert_eq!(star.transit, int(0));
        assert_eq!(star.outflow_cap, int(3));
        assert_eq!(star.inflow_cap, int(4));
        assert_eq!(v.node_name(v.source), "s*");
    }

    #[test]
    fn super_source_is_idempotent_on_valid_networks() {
        let n = fixtures::intro_network(1);
        assert_eq!(add_super_source(&n).unwrap(), n);
    }

    #[test]
    fn super_source_rejects_zero_rate() {
        let mut n = fixtures::intro_network(1);
        n.inflow_rate = int(0);
        assert_eq!(add_super_source(&n), Err(SuperSourceError::NonpositiveRate));
    }

    #[test]
    fn topological_orders() {
        let n = fixtures::intro_network(1);
        let all: Vec<_> = n.arc_ids().map(|e| (e, n.arc(e).tail, n.arc(e).head)).collect();
        assert_eq!(topological_order(3, &all).unwrap(), vec![NodeId(0), NodeId(1), NodeId(2)]);
        let full = vec![all[1]];
        assert_eq!(topological_order(3, &full).unwrap(), vec![NodeId(0), NodeId(1), NodeId(2)]);
        let cyc = vec![(ArcId(0), NodeId(0), NodeId(1)), (ArcId(1), NodeId(1), NodeId(0))];
        assert_eq!(
            topological_order(2, &cyc).unwrap_err().arcs.len(),
            2
        );
    }

    #[test]
    fn auto_inflow_cap() {
        let n = fixtures::intro_network(1);
        // outflow capacity entering v is 3
        assert_eq!(n.unrestricted_inflow_cap(NodeId(1)), int(4));
        assert_eq!(n.unrestricted_inflow_cap(NodeId(0)), int(4));
    }
}
