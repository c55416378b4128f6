//! Configurations: the combinatorial part of a spillback thin flow.
//!
//! A configuration fixes, for every active arc, which branch of `ρ_e` is
//! tight (or that the arc carries no flow) and, for every node, whether it is
//! throttled and by which outgoing arc. Given a configuration all thin-flow
//! conditions are linear in `(x', ℓ', μ)` with `μ_v = c_v ℓ'_v`.
//!
//! Configurations are ordered canonically: fewer throttled nodes first, then
//! lexicographically over the decision sequence (nodes in topological order,
//! each node's throttle choice followed by its incoming arcs by index).

use serde::{Deserialize, Serialize};

use super::ThinFlowInstance;
use crate::network::{topological_order, ArcId, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArcState {
    /// Non-resetting, positive flow, `ρ_e` attained by `ℓ'_u`.
    Follow,
    /// Non-resetting, positive flow, `ρ_e` attained by the queue term.
    Queue,
    /// Resetting, positive flow.
    Tight,
    /// No flow.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    /// Per instance arc.
    pub arc_states: Vec<ArcState>,
    /// Per node: `None` if `c_v = 1`, else the instance index of the outgoing
    /// arc attaining the maximum in the blocking condition.
    pub throttle: Vec<Option<usize>>,
}

impl Configuration {
    /// Decider `w_e`: the label term attains `ρ_e`.
    pub fn w(&self, k: usize) -> bool {
        self.arc_states[k] == ArcState::Follow
    }

    /// Decider `y_e`: the arc carries no flow.
    pub fn y(&self, k: usize) -> bool {
        self.arc_states[k] == ArcState::Zero
    }

    /// Decider `z_v`: the node is not throttled.
    pub fn z(&self, v: NodeId) -> bool {
        self.throttle[v.0].is_none()
    }

    pub fn throttled_count(&self) -> usize {
        self.throttle.iter().filter(|t| t.is_some()).count()
    }
}

/// A configuration with some decisions still open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialConfiguration {
    pub arc_states: Vec<Option<ArcState>>,
    pub throttle: Vec<Option<Option<usize>>>,
}

impl PartialConfiguration {
    pub fn open(arcs: usize, nodes: usize) -> Self {
        PartialConfiguration { arc_states: vec![None; arcs], throttle: vec![None; nodes] }
    }

    pub fn complete(&self) -> Option<Configuration> {
        Some(Configuration {
            arc_states: self.arc_states.iter().cloned().collect::<Option<_>>()?,
            throttle: self.throttle.iter().cloned().collect::<Option<_>>()?,
        })
    }
}

impl From<&Configuration> for PartialConfiguration {
    fn from(c: &Configuration) -> Self {
        PartialConfiguration {
            arc_states: c.arc_states.iter().map(|s| Some(*s)).collect(),
            throttle: c.throttle.iter().map(|t| Some(*t)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Arc(usize, Vec<ArcState>),
    Throttle(NodeId, Vec<Option<usize>>),
}

impl Decision {
    pub fn len(&self) -> usize {
        match self {
            Decision::Arc(_, o) => o.len(),
            Decision::Throttle(_, o) => o.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, choice: usize, cfg: &mut PartialConfiguration) {
        match self {
            Decision::Arc(k, o) => cfg.arc_states[*k] = Some(o[choice]),
            Decision::Throttle(v, o) => cfg.throttle[v.0] = Some(o[choice]),
        }
    }

    pub fn clear(&self, cfg: &mut PartialConfiguration) {
        match self {
            Decision::Arc(k, _) => cfg.arc_states[*k] = None,
            Decision::Throttle(v, _) => cfg.throttle[v.0] = None,
        }
    }

    pub fn throttles(&self, choice: usize) -> bool {
        matches!(self, Decision::Throttle(_, o) if o[choice].is_some())
    }

    pub fn can_throttle(&self) -> bool {
        matches!(self, Decision::Throttle(_, o) if o.iter().any(|c| c.is_some()))
    }
}

/// Arcs on no `s-t` path carry no flow; arcs on every `s-t` path carry all of it.
fn structural_classes(inst: &ThinFlowInstance) -> (Vec<bool>, Vec<bool>) {
    let n = inst.node_count;
    let reach = |from: NodeId, forward: bool, skip: Option<usize>| -> Vec<bool> {
        let mut seen = vec![false; n];
        seen[from.0] = true;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for (k, a) in inst.arcs.iter().enumerate() {
                if Some(k) == skip {
                    continue;
                }
                let (x, y) = if forward { (a.tail, a.head) } else { (a.head, a.tail) };
                if x == v && !seen[y.0] {
                    seen[y.0] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    let from_s = reach(inst.source, true, None);
    let to_t = reach(inst.sink, false, None);
    let useless: Vec<bool> = inst.arcs.iter().map(|a| !(from_s[a.tail.0] && to_t[a.head.0])).collect();
    let cut: Vec<bool> = (0..inst.arcs.len())
        .map(|k| !useless[k] && !reach(inst.source, true, Some(k))[inst.sink.0])
        .collect();
    (useless, cut)
}

/// The canonical decision sequence with structurally impossible options removed.
pub fn decision_sequence(inst: &ThinFlowInstance) -> Vec<Decision> {
    let (useless, cut) = structural_classes(inst);
    let arcs: Vec<(ArcId, NodeId, NodeId)> = inst.arcs.iter().map(|a| (a.id, a.tail, a.head)).collect();
    let order = topological_order(inst.node_count, &arcs).expect("instance is acyclic");
    let mut seq = Vec::new();
    for v in order {
        let mut options = vec![None];
        options.extend(
            inst.arcs
                .iter()
                .enumerate()
                .filter(|(k, a)| a.tail == v && !useless[*k])
                .map(|(k, _)| Some(k)),
        );
        seq.push(Decision::Throttle(v, options));
        for (k, a) in inst.arcs.iter().enumerate().filter(|(_, a)| a.head == v) {
            let positive = if a.resetting {
                vec![ArcState::Tight]
            } else {
                vec![ArcState::Follow, ArcState::Queue]
            };
            let options = if useless[k] {
                vec![ArcState::Zero]
            } else if cut[k] {
                positive
            } else {
                positive.into_iter().chain([ArcState::Zero]).collect()
            };
            seq.push(Decision::Arc(k, options));
        }
    }
    seq
}

/// Every configuration in canonical order.
pub fn enumerate_configurations(inst: &ThinFlowInstance) -> ConfigurationIter {
    let decisions = decision_sequence(inst);
    let max_throttled = decisions.iter().filter(|d| d.can_throttle()).count();
    ConfigurationIter {
        cursor: vec![0; decisions.len()],
        decisions,
        arcs: inst.arcs.len(),
        nodes: inst.node_count,
        throttled: 0,
        max_throttled,
        exhausted: false,
    }
}

pub struct ConfigurationIter {
    decisions: Vec<Decision>,
    cursor: Vec<usize>,
    arcs: usize,
    nodes: usize,
    throttled: usize,
    max_throttled: usize,
    exhausted: bool,
}

impl ConfigurationIter {
    fn advance(&mut self) {
        for i in (0..self.cursor.len()).rev() {
            self.cursor[i] += 1;
            if self.cursor[i] < self.decisions[i].len() {
                return;
            }
            self.cursor[i] = 0;
        }
        // odometer wrapped: next throttle count
        self.throttled += 1;
        if self.throttled > self.max_throttled {
            self.exhausted = true;
        }
    }
}

impl Iterator for ConfigurationIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        while !self.exhausted {
            let count = self
                .decisions
                .iter()
                .zip(&self.cursor)
                .filter(|(d, &c)| d.throttles(c))
                .count();
            let current = if count == self.throttled {
                let mut cfg = PartialConfiguration::open(self.arcs, self.nodes);
                for (d, &c) in self.decisions.iter().zip(&self.cursor) {
                    d.apply(c, &mut cfg);
                }
                cfg.complete()
            } else {
                None
            };
            self.advance();
            if current.is_some() {
                return current;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thinflow::tests::{intro_phase_one, single_arc_instance};

    #[test]
    fn single_arc_has_at_most_four() {
        let inst = single_arc_instance();
        let all: Vec<_> = enumerate_configurations(&inst).collect();
        assert!(all.len() <= 4);
        assert_eq!(all[0].throttled_count(), 0);
    }

    #[test]
    fn intro_phase_one_count_and_order() {
        let inst = intro_phase_one();
        let all: Vec<_> = enumerate_configurations(&inst).collect();
        assert!(all.len() <= 1 << 7);
        let counts: Vec<usize> = all.iter().map(|c| c.throttled_count()).collect();
        let mut sorted = counts.clone();
        sorted.sort();
        assert_eq!(counts, sorted);
    }
}
