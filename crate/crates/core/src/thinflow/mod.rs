//! Spillback thin flows with resetting: the static problem solved at every
//! phase start.
//!
//! A solution is found by a depth-first search over [`Configuration`]s in
//! canonical order. Every complete configuration is solved as an exact linear
//! program in the variables `(x', ℓ', μ, t)` where `μ_v = c_v ℓ'_v` and `t` is
//! a common lower bound on the flow of the arcs declared positive, and the
//! result is accepted only after exact verification. Partial configurations
//! are pruned by a floating-point solve of their relaxation; if rounding ever
//! prunes every solution, the search is repeated with exact pruning.

pub mod config;
pub mod lp;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use config::{enumerate_configurations, ArcState, Configuration, PartialConfiguration};
use config::{decision_sequence, Decision};
use lp::{LinearProgram, LpOutcome, Relation};

use crate::network::{topological_order, ArcId, NodeId};
use crate::num::{self, Q};

/// One arc of the current shortest-paths network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinFlowArc {
    /// Identifier in the surrounding network.
    pub id: ArcId,
    pub tail: NodeId,
    pub head: NodeId,
    pub outflow_cap: Q,
    pub inflow_bound: Q,
    pub resetting: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinFlowInstance {
    pub node_count: usize,
    pub source: NodeId,
    pub sink: NodeId,
    pub arcs: Vec<ThinFlowArc>,
    pub demand: Q,
}

/// `x'` per instance arc, `ℓ'` and `c` per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThinFlowSolution {
    pub flow: Vec<Q>,
    pub labels: Vec<Q>,
    pub factors: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ThinFlowError {
    #[error("invalid thin-flow instance: {0}")]
    InvalidInstance(String),
    #[error("no configuration yields a spillback thin flow")]
    NoSolutionFound,
}

/// `ρ_e(ℓ'_u, x'_e, c_v)`.
pub fn rho(label_tail: &Q, flow: &Q, factor_head: &Q, outflow_cap: &Q, resetting: bool) -> Q {
    let queue_term = flow / (factor_head * outflow_cap);
    if resetting {
        queue_term
    } else {
        num::max_q(label_tail, &queue_term).clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TfCondition {
    /// Sign and range constraints on `x'`, `ℓ'` and `c`.
    Domain,
    Conservation,
    Tf1,
    Tf2,
    Tf3,
    Tf4,
    Tf5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TfSubject {
    Node(NodeId),
    Arc(ArcId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TfViolation {
    pub condition: TfCondition,
    pub subject: TfSubject,
    pub lhs: Q,
    pub rhs: Q,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThinFlowReport {
    pub violations: Vec<TfViolation>,
}

impl ThinFlowReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, condition: TfCondition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

impl ThinFlowInstance {
    pub fn validate(&self) -> Result<(), ThinFlowError> {
        let bad = |s: &str| Err(ThinFlowError::InvalidInstance(s.to_string()));
        let n = self.node_count;
        if self.source.0 >= n || self.sink.0 >= n || self.source == self.sink {
            return bad("source and sink must be distinct nodes");
        }
        if !self.demand.is_positive() {
            return bad("demand must be positive");
        }
        for a in &self.arcs {
            if a.tail.0 >= n || a.head.0 >= n {
                return bad("arc endpoint out of range");
            }
            if !a.outflow_cap.is_positive() || !a.inflow_bound.is_positive() {
                return bad("capacities and inflow bounds must be positive");
            }
        }
        let arcs: Vec<_> = self.arcs.iter().map(|a| (a.id, a.tail, a.head)).collect();
        if topological_order(n, &arcs).is_err() {
            return bad("the active network must be acyclic");
        }
        let mut seen = vec![false; n];
        seen[self.source.0] = true;
        let mut stack = vec![self.source];
        while let Some(v) = stack.pop() {
            for a in self.arcs.iter().filter(|a| a.tail == v) {
                if !seen[a.head.0] {
                    seen[a.head.0] = true;
                    stack.push(a.head);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("every node must be reachable from the source");
        }
        Ok(())
    }

    fn incoming(&self, v: NodeId) -> impl Iterator<Item = (usize, &ThinFlowArc)> + '_ {
        self.arcs.iter().enumerate().filter(move |(_, a)| a.head == v)
    }

    fn outgoing(&self, v: NodeId) -> impl Iterator<Item = (usize, &ThinFlowArc)> + '_ {
        self.arcs.iter().enumerate().filter(move |(_, a)| a.tail == v)
    }
}

/// Checks flow conservation and the five thin-flow conditions exactly.
pub fn verify_thin_flow(inst: &ThinFlowInstance, sol: &ThinFlowSolution) -> ThinFlowReport {
    let mut report = ThinFlowReport::default();
    let push = |report: &mut ThinFlowReport, condition, subject, lhs: Q, rhs: Q| {
        report.violations.push(TfViolation { condition, subject, lhs, rhs });
    };
    let n = inst.node_count;
    if sol.flow.len() != inst.arcs.len() || sol.labels.len() != n || sol.factors.len() != n {
        push(&mut report, TfCondition::Domain, TfSubject::Node(inst.source), Q::zero(), Q::zero());
        return report;
    }
    let zero = Q::zero();
    let one = Q::one();
    for (k, a) in inst.arcs.iter().enumerate() {
        if sol.flow[k].is_negative() {
            push(&mut report, TfCondition::Domain, TfSubject::Arc(a.id), sol.flow[k].clone(), zero.clone());
        }
    }
    for v in 0..n {
        if sol.labels[v].is_negative() {
            push(&mut report, TfCondition::Domain, TfSubject::Node(NodeId(v)), sol.labels[v].clone(), zero.clone());
        }
        if !sol.factors[v].is_positive() || sol.factors[v] > one {
            push(&mut report, TfCondition::Domain, TfSubject::Node(NodeId(v)), sol.factors[v].clone(), one.clone());
        }
    }
    if !report.violations.is_empty() {
        return report;
    }
    for v in (0..n).map(NodeId) {
        let out: Q = inst.outgoing(v).map(|(k, _)| &sol.flow[k]).sum();
        let inn: Q = inst.incoming(v).map(|(k, _)| &sol.flow[k]).sum();
        let want = if v == inst.source {
            inst.demand.clone()
        } else if v == inst.sink {
            -inst.demand.clone()
        } else {
            Q::zero()
        };
        if &out - &inn != want {
            push(&mut report, TfCondition::Conservation, TfSubject::Node(v), out - inn, want);
        }
    }
    let s = inst.source.0;
    let tf1 = one.clone() / &sol.factors[s];
    if sol.labels[s] != tf1 {
        push(&mut report, TfCondition::Tf1, TfSubject::Node(inst.source), sol.labels[s].clone(), tf1);
    }
    let rho_of = |k: usize, a: &ThinFlowArc| {
        rho(&sol.labels[a.tail.0], &sol.flow[k], &sol.factors[a.head.0], &a.outflow_cap, a.resetting)
    };
    for v in (0..n).map(NodeId).filter(|&v| v != inst.source) {
        let min = inst.incoming(v).map(|(k, a)| rho_of(k, a)).min();
        match min {
            Some(m) if m == sol.labels[v.0] => {}
            Some(m) => push(&mut report, TfCondition::Tf2, TfSubject::Node(v), sol.labels[v.0].clone(), m),
            None => push(&mut report, TfCondition::Tf2, TfSubject::Node(v), sol.labels[v.0].clone(), zero.clone()),
        }
    }
    for (k, a) in inst.arcs.iter().enumerate() {
        if sol.flow[k].is_positive() {
            let r = rho_of(k, a);
            if sol.labels[a.head.0] != r {
                push(&mut report, TfCondition::Tf3, TfSubject::Arc(a.id), sol.labels[a.head.0].clone(), r);
            }
        }
    }
    for v in (0..n).map(NodeId) {
        let max = inst
            .outgoing(v)
            .map(|(k, a)| &sol.flow[k] / &a.inflow_bound)
            .max()
            .unwrap_or_else(Q::zero);
        if sol.labels[v.0] < max {
            push(&mut report, TfCondition::Tf4, TfSubject::Node(v), sol.labels[v.0].clone(), max.clone());
        }
        if sol.factors[v.0] < one && sol.labels[v.0] != max {
            push(&mut report, TfCondition::Tf5, TfSubject::Node(v), sol.labels[v.0].clone(), max);
        }
    }
    report
}

/// Variable layout of the configuration programs.
struct Vars {
    m: usize,
    n: usize,
}

impl Vars {
    fn x(&self, k: usize) -> usize {
        k
    }
    fn l(&self, v: usize) -> usize {
        self.m + v
    }
    fn mu(&self, v: usize) -> usize {
        self.m + self.n + v
    }
    fn t(&self) -> usize {
        self.m + 2 * self.n
    }
    fn count(&self) -> usize {
        self.m + 2 * self.n + 1
    }
}

/// The linear program of a (partial) configuration. Undecided arcs only keep
/// `x'_e ≤ ν⁻_e μ_v`, which every branch implies.
fn configuration_program(inst: &ThinFlowInstance, cfg: &PartialConfiguration) -> LinearProgram {
    use Relation::*;
    let vars = Vars { m: inst.arcs.len(), n: inst.node_count };
    let mut lp = LinearProgram::new(vars.count());
    let one = Q::one();
    let neg = -Q::one();
    for v in (0..inst.node_count).map(NodeId) {
        if v == inst.sink {
            continue;
        }
        let mut row: Vec<(usize, Q)> = inst.outgoing(v).map(|(k, _)| (vars.x(k), one.clone())).collect();
        row.extend(inst.incoming(v).map(|(k, _)| (vars.x(k), neg.clone())));
        let rhs = if v == inst.source { inst.demand.clone() } else { Q::zero() };
        lp.add(row, Eq, rhs);
    }
    lp.add(vec![(vars.mu(inst.source.0), one.clone())], Eq, one.clone());
    for v in 0..inst.node_count {
        let row = vec![(vars.mu(v), one.clone()), (vars.l(v), neg.clone())];
        match cfg.throttle[v] {
            Some(None) => lp.add(row, Eq, Q::zero()),
            Some(Some(k)) => {
                lp.add(row, Le, Q::zero());
                let b = inst.arcs[k].inflow_bound.clone();
                lp.add(vec![(vars.l(v), b), (vars.x(k), neg.clone())], Eq, Q::zero());
            }
            None => lp.add(row, Le, Q::zero()),
        }
    }
    for (k, a) in inst.arcs.iter().enumerate() {
        let (u, v) = (a.tail.0, a.head.0);
        lp.add(vec![(vars.x(k), one.clone()), (vars.l(u), -a.inflow_bound.clone())], Le, Q::zero());
        let cap_row = vec![(vars.x(k), one.clone()), (vars.mu(v), -a.outflow_cap.clone())];
        let positive = vec![(vars.x(k), one.clone()), (vars.t(), neg.clone())];
        match cfg.arc_states[k] {
            None => lp.add(cap_row, Le, Q::zero()),
            Some(ArcState::Zero) => {
                lp.add(vec![(vars.x(k), one.clone())], Eq, Q::zero());
                if a.resetting {
                    lp.add(vec![(vars.l(v), one.clone())], Eq, Q::zero());
                } else {
                    lp.add(vec![(vars.l(v), one.clone()), (vars.l(u), neg.clone())], Le, Q::zero());
                }
            }
            Some(ArcState::Follow) => {
                lp.add(vec![(vars.l(v), one.clone()), (vars.l(u), neg.clone())], Eq, Q::zero());
                lp.add(cap_row, Le, Q::zero());
                lp.add(positive, Ge, Q::zero());
            }
            Some(ArcState::Queue) => {
                lp.add(cap_row, Eq, Q::zero());
                lp.add(vec![(vars.l(u), one.clone()), (vars.l(v), neg.clone())], Le, Q::zero());
                lp.add(positive, Ge, Q::zero());
            }
            Some(ArcState::Tight) => {
                lp.add(cap_row, Eq, Q::zero());
                lp.add(positive, Ge, Q::zero());
            }
        }
    }
    lp.add(vec![(vars.t(), one.clone())], Le, one);
    lp.maximize(vec![(vars.t(), Q::one())]);
    lp
}

/// Solves the program of `cfg`; `None` unless some point has every declared
/// positive arc strictly positive.
fn program_point(inst: &ThinFlowInstance, cfg: &PartialConfiguration) -> Option<Vec<Q>> {
    match configuration_program(inst, cfg).solve() {
        LpOutcome::Optimal { values, objective } if objective.is_positive() => Some(values),
        _ => None,
    }
}

/// Turns a program point into a thin flow. Nodes without throughput get
/// `c_v = 1` and the label `min ρ_e` over their incoming arcs, in
/// topological order.
fn recover_solution(inst: &ThinFlowInstance, values: &[Q]) -> ThinFlowSolution {
    let vars = Vars { m: inst.arcs.len(), n: inst.node_count };
    let flow: Vec<Q> = (0..inst.arcs.len()).map(|k| values[vars.x(k)].clone()).collect();
    let mut labels: Vec<Q> = (0..inst.node_count).map(|v| values[vars.l(v)].clone()).collect();
    let mut factors = vec![Q::one(); inst.node_count];
    let arcs: Vec<_> = inst.arcs.iter().map(|a| (a.id, a.tail, a.head)).collect();
    let order = topological_order(inst.node_count, &arcs).expect("instance is acyclic");
    for v in order {
        let throughput: Q = inst.incoming(v).map(|(k, _)| &flow[k]).sum();
        if v == inst.source || throughput.is_positive() {
            if labels[v.0].is_positive() {
                factors[v.0] = &values[vars.mu(v.0)] / &labels[v.0];
            }
            continue;
        }
        labels[v.0] = inst
            .incoming(v)
            .map(|(_, a)| if a.resetting { Q::zero() } else { labels[a.tail.0].clone() })
            .min()
            .unwrap_or_else(Q::zero);
    }
    ThinFlowSolution { flow, labels, factors }
}

/// The thin flow of one complete configuration, if it has one.
pub fn solve_configuration(inst: &ThinFlowInstance, cfg: &Configuration) -> Option<ThinFlowSolution> {
    let values = program_point(inst, &PartialConfiguration::from(cfg))?;
    let sol = recover_solution(inst, &values);
    verify_thin_flow(inst, &sol).is_valid().then_some(sol)
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Also collect every distinct thin flow reachable from any configuration.
    pub collect_alternatives: bool,
}

#[derive(Clone, Debug)]
pub struct ThinFlowOutcome {
    pub solution: ThinFlowSolution,
    pub configuration: Configuration,
    /// Distinct solutions other than `solution`, in canonical order.
    pub alternatives: Vec<ThinFlowSolution>,
    /// Linear programs solved during the search.
    pub programs_solved: usize,
}

/// Screened programs count as feasible only above this optimum.
const SCREEN_MARGIN: f64 = 1e-7;

struct Search<'a> {
    inst: &'a ThinFlowInstance,
    decisions: Vec<Decision>,
    /// Throttle decisions with a throttling option among `decisions[i..]`.
    throttle_room: Vec<usize>,
    cfg: PartialConfiguration,
    programs: usize,
    /// Prune with floating-point programs; leaves are always solved exactly.
    screened: bool,
}

impl Search<'_> {
    fn feasible(&mut self) -> bool {
        self.programs += 1;
        if self.screened {
            configuration_program(self.inst, &self.cfg).solve_approx().is_some_and(|t| t > SCREEN_MARGIN)
        } else {
            program_point(self.inst, &self.cfg).is_some()
        }
    }

    /// Forced decisions stay applied for the whole search.
    fn undo(&mut self, d: &Decision) {
        if d.len() > 1 {
            d.clear(&mut self.cfg);
        }
    }

    fn dfs(&mut self, depth: usize, throttled: usize, target: usize) -> Option<(Configuration, ThinFlowSolution)> {
        if depth == self.decisions.len() {
            if throttled != target {
                return None;
            }
            if self.screened && !self.feasible() {
                return None;
            }
            let cfg = self.cfg.complete().expect("all decisions taken");
            self.programs += 1;
            return solve_configuration(self.inst, &cfg).map(|s| (cfg, s));
        }
        let d = self.decisions[depth].clone();
        for choice in 0..d.len() {
            let t = throttled + usize::from(d.throttles(choice));
            if t > target || t + self.throttle_room[depth + 1] < target {
                continue;
            }
            d.apply(choice, &mut self.cfg);
            let leaf = depth + 1 == self.decisions.len();
            if d.len() == 1 || leaf || self.feasible() {
                if let Some(hit) = self.dfs(depth + 1, t, target) {
                    self.undo(&d);
                    return Some(hit);
                }
            }
            self.undo(&d);
        }
        None
    }
}

/// The first thin flow in canonical configuration order.
pub fn solve_thin_flow(inst: &ThinFlowInstance) -> Result<ThinFlowSolution, ThinFlowError> {
    solve_thin_flow_with(inst, &SolveOptions::default()).map(|o| o.solution)
}

pub fn solve_thin_flow_with(inst: &ThinFlowInstance, options: &SolveOptions) -> Result<ThinFlowOutcome, ThinFlowError> {
    inst.validate()?;
    let decisions = decision_sequence(inst);
    let mut throttle_room = vec![0; decisions.len() + 1];
    for i in (0..decisions.len()).rev() {
        throttle_room[i] = throttle_room[i + 1] + usize::from(decisions[i].can_throttle());
    }
    let max_throttled = throttle_room[0];
    // forced decisions hold in every configuration, so the relaxations see them from the start
    let mut cfg = PartialConfiguration::open(inst.arcs.len(), inst.node_count);
    for d in decisions.iter().filter(|d| d.len() == 1) {
        d.apply(0, &mut cfg);
    }
    let mut search = Search {
        inst,
        decisions,
        throttle_room,
        cfg,
        programs: 0,
        screened: true,
    };
    // a screened pass finds the canonical solution unless rounding prunes it;
    // the exact pass is the fallback that keeps the search complete
    let found = (0..=max_throttled).find_map(|target| search.dfs(0, 0, target)).or_else(|| {
        search.screened = false;
        (0..=max_throttled).find_map(|target| search.dfs(0, 0, target))
    });
    let (configuration, solution) = found.ok_or(ThinFlowError::NoSolutionFound)?;
    let alternatives = if options.collect_alternatives {
        let mut seen = vec![solution.clone()];
        for cfg in enumerate_configurations(inst) {
            if let Some(s) = solve_configuration(inst, &cfg) {
                if !seen.contains(&s) {
                    seen.push(s);
                }
            }
        }
        seen.split_off(1)
    } else {
        Vec::new()
    };
    Ok(ThinFlowOutcome { solution, configuration, alternatives, programs_solved: search.programs })
}

/// Reference solver: tries every configuration in canonical order.
pub fn solve_by_enumeration(inst: &ThinFlowInstance) -> Result<(Configuration, ThinFlowSolution), ThinFlowError> {
    inst.validate()?;
    enumerate_configurations(inst)
        .find_map(|cfg| solve_configuration(inst, &cfg).map(|s| (cfg, s)))
        .ok_or(ThinFlowError::NoSolutionFound)
}
