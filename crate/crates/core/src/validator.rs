//! Definition-level checks of feasibility and equilibrium conditions.
//!
//! Every check reads a trajectory only through its public accessors, so a
//! hand-built trajectory can be validated as well as engine output. All
//! quantities are piecewise linear or piecewise constant, so evaluating at
//! every breakpoint of every relevant function plus one interior point per
//! segment covers all times. Seeded random points are added on top.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{node_spillback_factor, EquilibriumTrajectory};
use crate::network::{topological_order, ArcId, Network, NodeId};
use crate::num::{self, serde_q, serde_q_vec, Extended, Q};
use crate::thinflow::{verify_thin_flow, TfCondition, TfSubject, ThinFlowArc, ThinFlowInstance, ThinFlowSolution};

pub mod mutations;

pub const DEFAULT_SEED: u64 = 20_180_716;
pub const SAMPLES_PER_PHASE: usize = 20;
/// Witnesses kept per check; the rest are only counted.
const MAX_WITNESSES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Feasibility,
    DerivedConditions,
    NashCondition,
    EpsilonBound,
    PhaseDerivatives,
    Reduction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Inflow,
    FairAllocation,
    NoSlack,
    NoDeadlock,
    Conservation,
    OutflowCapacity,
    NonDeficit,
    Storage,
    /// `F⁺_e(ℓ_u(θ)) = F⁻_e(ℓ_v(θ)) = x_e(θ)`.
    UnderlyingFlow,
    /// Flow enters only active arcs.
    ActiveSupport,
    /// Materialized labels equal recomputed earliest arrivals.
    Labels,
    EpsilonOutflow,
    ThinFlow(TfCondition),
    /// Phase record disagrees with the slopes of the flow functions.
    PhaseRecord,
    SpillbackFactor,
    FullArc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Node(NodeId),
    Arc(ArcId),
    Phase(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: Condition,
    pub subject: Subject,
    #[serde(with = "serde_q")]
    pub time: Q,
    #[serde(with = "serde_q")]
    pub lhs: Q,
    #[serde(with = "serde_q")]
    pub rhs: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
    /// Witnesses beyond the stored ones.
    pub omitted: usize,
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(check: Check, mut witnesses: Vec<Witness>, notes: Vec<String>) -> Self {
        let omitted = witnesses.len().saturating_sub(MAX_WITNESSES);
        witnesses.truncate(MAX_WITNESSES);
        CheckResult { check, passed: witnesses.is_empty(), witnesses, omitted, notes }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub results: Vec<CheckResult>,
    /// Arc times at which pointwise conditions were evaluated.
    #[serde(with = "serde_q_vec")]
    pub samples: Vec<Q>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn result(&self, check: Check) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check)
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.results.iter().flat_map(|r| &r.witnesses)
    }

    pub fn has_witness(&self, condition: Condition) -> bool {
        self.witnesses().any(|w| w.condition == condition)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidatorError {
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
}

/// The sampling seed, overridable through `NASHFLOW_SEED`.
pub fn seed_from_env() -> u64 {
    std::env::var("NASHFLOW_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

/// Finite evaluation points for a trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePlan {
    pub seed: u64,
    /// Arc times for pointwise feasibility conditions.
    pub arc_times: Vec<Q>,
    /// Source times for the equilibrium conditions, inside the committed range.
    pub source_times: Vec<Q>,
}

fn with_midpoints(points: BTreeSet<Q>) -> Vec<Q> {
    let sorted: Vec<Q> = points.into_iter().collect();
    let mut out = Vec::with_capacity(2 * sorted.len());
    for w in sorted.windows(2) {
        out.push(w[0].clone());
        out.push((&w[0] + &w[1]) / num::int(2));
    }
    out.extend(sorted.last().cloned());
    out
}

impl SamplePlan {
    pub fn new(traj: &EquilibriumTrajectory, seed: u64) -> Self {
        let net = traj.network();
        let mut rng = StdRng::seed_from_u64(seed);
        let starts = traj.phase_starts();
        let last_start = starts.last().cloned().unwrap_or_else(Q::zero);
        let window_end = match traj.end() {
            Extended::Finite(e) => e.clone(),
            Extended::Infinite => &last_start + num::max_q(&last_start, &Q::one()),
        };

        let mut source: BTreeSet<Q> = starts.iter().cloned().collect();
        source.insert(Q::zero());
        source.insert(window_end.clone());
        for v in net.node_ids() {
            source.extend(traj.label(v).breakpoints().filter(|t| **t >= Q::zero() && **t <= window_end).cloned());
        }
        let mut bounds: Vec<Q> = starts.clone();
        bounds.push(window_end.clone());
        let mut random = Vec::new();
        for w in bounds.windows(2) {
            let len = &w[1] - &w[0];
            if !len.is_positive() {
                continue;
            }
            for _ in 0..SAMPLES_PER_PHASE {
                let k: i64 = rng.gen_range(1..1000);
                random.push(&w[0] + &len * num::ratio(k, 1000));
            }
        }
        let mut arc: BTreeSet<Q> = BTreeSet::new();
        arc.insert(Q::zero());
        for theta in &source {
            arc.extend(traj.labels_at(theta));
        }
        source.extend(random.iter().cloned());
        let source_times = with_midpoints(source);
        for e in net.arc_ids() {
            let a = net.arc(e);
            arc.extend(traj.inflow(e).breakpoints().cloned());
            arc.extend(traj.inflow(e).breakpoints().map(|t| t + &a.transit));
            arc.extend(traj.outflow(e).breakpoints().cloned());
            arc.insert(a.transit.clone());
            arc.extend(traj.queue_function(e).level_points(&Q::zero()));
            if let Extended::Finite(sigma) = &a.storage {
                arc.extend(traj.load_function(e).level_points(sigma));
            }
        }
        for v in net.node_ids() {
            arc.extend(traj.label(v).breakpoints().cloned());
        }
        let horizon = arc.iter().next_back().cloned().unwrap_or_else(Q::zero) + Q::one();
        arc.insert(horizon);
        arc.retain(|t| !t.is_negative());
        // breakpoints and midpoints decide every condition; the random images
        // are extra interior points at each node's local phase times
        let mut arc_times = with_midpoints(arc);
        for theta in &random {
            arc_times.extend(traj.labels_at(theta));
        }
        arc_times.sort();
        arc_times.dedup();
        SamplePlan { seed, arc_times, source_times }
    }
}

fn witness(condition: Condition, subject: Subject, time: &Q, lhs: Q, rhs: Q) -> Witness {
    Witness { condition, subject, time: time.clone(), lhs, rhs }
}

fn network_inflow(traj: &EquilibriumTrajectory, theta: &Q) -> Q {
    let inside = !theta.is_negative()
        && match traj.end() {
            Extended::Finite(e) => theta < e,
            Extended::Infinite => true,
        };
    if inside {
        traj.network().inflow_rate.clone()
    } else {
        Q::zero()
    }
}

fn feasibility_at(traj: &EquilibriumTrajectory, theta: &Q, out: &mut Vec<Witness>) {
    let net = traj.network();
    for e in net.arc_ids() {
        let f = traj.inflow(e).eval(theta);
        let b = traj.inflow_bound(e, theta);
        if *f > b {
            out.push(witness(Condition::Inflow, Subject::Arc(e), theta, f.clone(), b));
        }
    }
    for v in net.node_ids() {
        let ins: Vec<ArcId> = net.incoming(v).collect();
        let push: Vec<Q> = ins.iter().map(|&e| traj.push_rate(e, theta)).collect();
        let actual: Vec<Q> = ins.iter().map(|&e| traj.outflow(e).eval(theta).clone()).collect();
        let caps: Vec<Q> = ins.iter().map(|&e| net.arc(e).outflow_cap.clone()).collect();
        let entering: Q = actual.iter().sum();
        if v != net.sink {
            let leaving: Q = net.outgoing(v).map(|e| traj.inflow(e).eval(theta)).sum();
            let supplied = if v == net.source { &entering + network_inflow(traj, theta) } else { entering.clone() };
            if leaving != supplied {
                out.push(witness(Condition::Conservation, Subject::Node(v), theta, leaving, supplied));
            }
        }
        let mut throttled = false;
        for (k, &e) in ins.iter().enumerate() {
            if actual[k] > push[k] {
                out.push(witness(Condition::FairAllocation, Subject::Arc(e), theta, actual[k].clone(), push[k].clone()));
            }
            throttled |= actual[k] < push[k];
        }
        if !throttled {
            continue;
        }
        if entering.is_zero() {
            for (k, &e) in ins.iter().enumerate() {
                if actual[k] < push[k] {
                    out.push(witness(Condition::FairAllocation, Subject::Arc(e), theta, actual[k].clone(), push[k].clone()));
                }
            }
        } else if let Ok((_, expected)) = node_spillback_factor(&push, &entering, &caps) {
            for (k, &e) in ins.iter().enumerate() {
                if actual[k] != expected[k] {
                    out.push(witness(Condition::FairAllocation, Subject::Arc(e), theta, actual[k].clone(), expected[k].clone()));
                }
            }
        }
        let slack = net
            .outgoing(v)
            .map(|e| traj.inflow_bound(e, theta) - traj.inflow(e).eval(theta))
            .min();
        if slack.as_ref().is_none_or(|s| !s.is_zero()) {
            out.push(witness(Condition::NoSlack, Subject::Node(v), theta, slack.unwrap_or_else(Q::one), Q::zero()));
        }
    }
    let full: Vec<(ArcId, NodeId, NodeId)> = net
        .arc_ids()
        .filter(|&e| traj.is_full(e, theta))
        .map(|e| (e, net.arc(e).tail, net.arc(e).head))
        .collect();
    if let Err(cycle) = topological_order(net.node_count(), &full) {
        let e = cycle.arcs.first().copied().unwrap_or(ArcId(0));
        out.push(witness(Condition::NoDeadlock, Subject::Arc(e), theta, num::int(cycle.arcs.len() as i64), Q::zero()));
    }
}

fn derived_at(traj: &EquilibriumTrajectory, theta: &Q, out: &mut Vec<Witness>) {
    let net = traj.network();
    for e in net.arc_ids() {
        let a = net.arc(e);
        let f = traj.outflow(e).eval(theta);
        if *f > a.outflow_cap {
            out.push(witness(Condition::OutflowCapacity, Subject::Arc(e), theta, f.clone(), a.outflow_cap.clone()));
        }
        let z = traj.queue_length(e, theta);
        if z.is_negative() {
            out.push(witness(Condition::NonDeficit, Subject::Arc(e), theta, z, Q::zero()));
        }
        if let Extended::Finite(sigma) = &a.storage {
            let d = traj.arc_load(e, theta);
            if d > *sigma {
                out.push(witness(Condition::Storage, Subject::Arc(e), theta, d, sigma.clone()));
            }
        }
    }
}

fn nash_at(traj: &EquilibriumTrajectory, theta: &Q, out: &mut Vec<Witness>) {
    let net = traj.network();
    let labels = traj.labels_at(theta);
    for e in net.arc_ids() {
        let a = net.arc(e);
        let (lu, lv) = (&labels[a.tail.0], &labels[a.head.0]);
        let x = traj.static_flow(e).eval(theta);
        let entered = traj.cumulative_inflow(e).eval(lu);
        let left = traj.cumulative_outflow(e).eval(lv);
        if entered != left {
            out.push(witness(Condition::UnderlyingFlow, Subject::Arc(e), theta, entered.clone(), left));
        }
        if x != entered {
            out.push(witness(Condition::UnderlyingFlow, Subject::Arc(e), theta, x, entered));
        }
        let used = traj.inflow(e).eval(lu).is_positive() || traj.inflow(e).left_limit(lu).is_positive();
        if used {
            match traj.exit_time(e, lu) {
                Ok(t) if t == *lv => {}
                Ok(t) => out.push(witness(Condition::ActiveSupport, Subject::Arc(e), theta, lv.clone(), t)),
                Err(_) => out.push(witness(Condition::ActiveSupport, Subject::Arc(e), theta, lv.clone(), Q::zero())),
            }
        }
    }
    for (v, arrival) in traj.earliest_arrival(theta).into_iter().enumerate() {
        if arrival.as_ref() != Some(&labels[v]) {
            let rhs = arrival.unwrap_or_else(|| num::int(-1));
            out.push(witness(Condition::Labels, Subject::Node(NodeId(v)), theta, labels[v].clone(), rhs));
        }
    }
}

/// `ε` with its ingredients. `tighter` is set when every capacity exceeds 1,
/// in which case the capped `ν_min` is not the sharpest choice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonBound {
    pub epsilon: Q,
    pub nu_min: Q,
    pub capacity_sum: Q,
    pub arcs: usize,
    pub tighter: bool,
}

/// `ε = (ν_min / Σ)^m · ν_min` with `ν_min = min({ν⁺_e, ν⁻_e} ∪ {1})` and
/// `Σ = max{Σ_e ν⁺_e, 1}`.
pub fn epsilon_lower_bound(net: &Network) -> EpsilonBound {
    let caps = || net.arcs.iter().flat_map(|a| [&a.inflow_cap, &a.outflow_cap]);
    let one = Q::one();
    let actual_min = caps().min().cloned();
    let nu_min = actual_min.clone().map_or(one.clone(), |m| num::min_q(&m, &one).clone());
    let total: Q = net.arcs.iter().map(|a| &a.inflow_cap).sum();
    let capacity_sum = num::max_q(&total, &one).clone();
    let base = &nu_min / &capacity_sum;
    let mut epsilon = nu_min.clone();
    for _ in 0..net.arc_count() {
        epsilon *= &base;
    }
    EpsilonBound {
        epsilon,
        nu_min,
        capacity_sum,
        arcs: net.arc_count(),
        tighter: actual_min.is_some_and(|m| m > one),
    }
}

fn epsilon_at(traj: &EquilibriumTrajectory, eps: &Q, theta: &Q, out: &mut Vec<Witness>) {
    for e in traj.network().arc_ids() {
        if traj.queue_length(e, theta).is_positive() {
            let f = traj.outflow(e).eval(theta);
            if f < eps {
                out.push(witness(Condition::EpsilonOutflow, Subject::Arc(e), theta, f.clone(), eps.clone()));
            }
        }
    }
}

fn phase_derivatives(traj: &EquilibriumTrajectory) -> Vec<Witness> {
    let net = traj.network();
    let mut out = Vec::new();
    for (i, phase) in traj.phases().iter().enumerate() {
        let phi = &phase.start;
        let labels = traj.labels_at(phi);
        let dl: Vec<Q> = net.node_ids().map(|v| traj.label(v).slope_after(phi)).collect();
        let dx: Vec<Q> = net.arc_ids().map(|e| traj.static_flow(e).slope_after(phi)).collect();
        if dl != phase.label_rates || dx != phase.flow_rates {
            let v = (0..dl.len()).find(|&v| dl[v] != phase.label_rates[v]);
            let (lhs, rhs) = match v {
                Some(v) => (dl[v].clone(), phase.label_rates[v].clone()),
                None => {
                    let k = (0..dx.len()).find(|&k| dx[k] != phase.flow_rates[k]).unwrap_or(0);
                    (dx[k].clone(), phase.flow_rates[k].clone())
                }
            };
            out.push(witness(Condition::PhaseRecord, Subject::Phase(i), phi, lhs, rhs));
        }
        let mut arcs = Vec::new();
        for e in net.arc_ids() {
            let a = net.arc(e);
            let (lu, lv) = (&labels[a.tail.0], &labels[a.head.0]);
            let Ok(exit) = traj.exit_time(e, lu) else {
                out.push(witness(Condition::ThinFlow(TfCondition::Domain), Subject::Arc(e), phi, lu.clone(), Q::zero()));
                continue;
            };
            if exit != *lv {
                continue;
            }
            arcs.push(ThinFlowArc {
                id: e,
                tail: a.tail,
                head: a.head,
                outflow_cap: a.outflow_cap.clone(),
                inflow_bound: traj.inflow_bound(e, lu),
                resetting: exit > lu + &a.transit,
            });
        }
        let sol = ThinFlowSolution {
            flow: arcs.iter().map(|a| dx[a.id.0].clone()).collect(),
            labels: dl,
            factors: phase.factors.clone(),
        };
        let inst = ThinFlowInstance {
            node_count: net.node_count(),
            source: net.source,
            sink: net.sink,
            arcs,
            demand: net.inflow_rate.clone(),
        };
        for v in verify_thin_flow(&inst, &sol).violations {
            let subject = match v.subject {
                TfSubject::Node(n) => Subject::Node(n),
                TfSubject::Arc(e) => Subject::Arc(e),
            };
            out.push(witness(Condition::ThinFlow(v.condition), subject, phi, v.lhs, v.rhs));
        }
    }
    out
}

fn report(plan: &SamplePlan, results: Vec<CheckResult>) -> ValidationReport {
    ValidationReport { seed: plan.seed, results, samples: plan.arc_times.clone() }
}

fn run_feasibility(traj: &EquilibriumTrajectory, plan: &SamplePlan) -> CheckResult {
    let mut w = Vec::new();
    for t in &plan.arc_times {
        feasibility_at(traj, t, &mut w);
    }
    CheckResult::new(Check::Feasibility, w, Vec::new())
}

fn run_derived(traj: &EquilibriumTrajectory, plan: &SamplePlan) -> CheckResult {
    let mut w = Vec::new();
    for t in &plan.arc_times {
        derived_at(traj, t, &mut w);
    }
    CheckResult::new(Check::DerivedConditions, w, Vec::new())
}

fn run_nash(traj: &EquilibriumTrajectory, plan: &SamplePlan) -> CheckResult {
    let mut w = Vec::new();
    for t in &plan.source_times {
        nash_at(traj, t, &mut w);
    }
    CheckResult::new(Check::NashCondition, w, Vec::new())
}

fn run_epsilon(traj: &EquilibriumTrajectory, plan: &SamplePlan) -> CheckResult {
    let bound = epsilon_lower_bound(traj.network());
    let mut w = Vec::new();
    for t in &plan.arc_times {
        epsilon_at(traj, &bound.epsilon, t, &mut w);
    }
    let mut notes = vec![format!("epsilon = {}", num::format_rational(&bound.epsilon))];
    if bound.tighter {
        notes.push("all capacities exceed 1; a tighter bound holds".into());
    }
    CheckResult::new(Check::EpsilonBound, w, notes)
}

/// Inflow, fair allocation, no slack and no deadlock conditions, plus flow
/// conservation at every non-sink node.
pub fn check_feasibility(traj: &EquilibriumTrajectory) -> ValidationReport {
    let plan = SamplePlan::new(traj, seed_from_env());
    report(&plan, vec![run_feasibility(traj, &plan)])
}

/// Outflow capacity, non-deficit and storage conditions.
pub fn check_derived_conditions(traj: &EquilibriumTrajectory) -> ValidationReport {
    let plan = SamplePlan::new(traj, seed_from_env());
    report(&plan, vec![run_derived(traj, &plan)])
}

/// The underlying-static-flow identity, flow only on active arcs, and labels
/// equal to recomputed earliest arrival times.
pub fn check_nash_condition(traj: &EquilibriumTrajectory) -> ValidationReport {
    let plan = SamplePlan::new(traj, seed_from_env());
    report(&plan, vec![run_nash(traj, &plan)])
}

/// `f⁻_e ≥ ε` whenever arc `e` holds a queue.
pub fn check_epsilon_bound(traj: &EquilibriumTrajectory) -> ValidationReport {
    let plan = SamplePlan::new(traj, seed_from_env());
    report(&plan, vec![run_epsilon(traj, &plan)])
}

/// Every phase's derivatives form a spillback thin flow on the instance
/// read off the trajectory at the phase start.
pub fn check_phase_derivatives(traj: &EquilibriumTrajectory) -> ValidationReport {
    let plan = SamplePlan { seed: seed_from_env(), arc_times: Vec::new(), source_times: Vec::new() };
    report(&plan, vec![CheckResult::new(Check::PhaseDerivatives, phase_derivatives(traj), Vec::new())])
}

/// On a network without effective spillback, no node is ever throttled and
/// no arc is ever full.
pub fn check_original_model_reduction(net: &Network, traj: &EquilibriumTrajectory) -> Result<ValidationReport, ValidatorError> {
    for a in &net.arcs {
        if !a.storage.is_infinite() {
            return Err(ValidatorError::PreconditionNotMet(format!("arc {} has finite storage", a.name)));
        }
        let mut bound: Q = net.incoming(a.tail).map(|e| &net.arc(e).outflow_cap).sum();
        if a.tail == net.source {
            bound += &net.inflow_rate;
        }
        if a.inflow_cap <= bound {
            return Err(ValidatorError::PreconditionNotMet(format!(
                "arc {} has inflow capacity {} not above {}",
                a.name,
                num::format_rational(&a.inflow_cap),
                num::format_rational(&bound)
            )));
        }
    }
    let plan = SamplePlan::new(traj, seed_from_env());
    let mut w = Vec::new();
    for p in traj.phases() {
        for (v, c) in p.factors.iter().enumerate() {
            if !c.is_one() {
                w.push(witness(Condition::SpillbackFactor, Subject::Node(NodeId(v)), &p.start, c.clone(), Q::one()));
            }
        }
    }
    for t in &plan.arc_times {
        for e in traj.network().arc_ids() {
            if traj.is_full(e, t) {
                w.push(witness(Condition::FullArc, Subject::Arc(e), t, traj.arc_load(e, t), Q::zero()));
            }
            let f = traj.outflow(e).eval(t);
            let b = traj.push_rate(e, t);
            if *f < b {
                w.push(witness(Condition::SpillbackFactor, Subject::Arc(e), t, f.clone(), b));
            }
        }
    }
    Ok(report(&plan, vec![CheckResult::new(Check::Reduction, w, Vec::new())]))
}

/// Runs one check by name.
pub fn run_check(check: Check, traj: &EquilibriumTrajectory) -> Result<ValidationReport, ValidatorError> {
    Ok(match check {
        Check::Feasibility => check_feasibility(traj),
        Check::DerivedConditions => check_derived_conditions(traj),
        Check::NashCondition => check_nash_condition(traj),
        Check::EpsilonBound => check_epsilon_bound(traj),
        Check::PhaseDerivatives => check_phase_derivatives(traj),
        Check::Reduction => check_original_model_reduction(traj.network(), traj)?,
    })
}

/// Every trajectory-level check with one shared sample plan.
pub fn validate_trajectory(traj: &EquilibriumTrajectory) -> ValidationReport {
    validate_trajectory_seeded(traj, seed_from_env())
}

pub fn validate_trajectory_seeded(traj: &EquilibriumTrajectory, seed: u64) -> ValidationReport {
    let plan = SamplePlan::new(traj, seed);
    let results = vec![
        run_feasibility(traj, &plan),
        run_derived(traj, &plan),
        run_nash(traj, &plan),
        run_epsilon(traj, &plan),
        CheckResult::new(Check::PhaseDerivatives, phase_derivatives(traj), Vec::new()),
    ];
    report(&plan, results)
}
