//! Phase-by-phase construction of a Nash flow over time by α-extensions.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::dynamics::{reconstruct_arc_flows, ArcClasses, DynamicsError, EquilibriumTrajectory, PhaseProfile, Termination};
use crate::network::{ArcId, ValidatedNetwork};
use crate::num::{self, Extended, Q};
use crate::thinflow::{self, ThinFlowArc, ThinFlowError, ThinFlowInstance, ThinFlowSolution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationPolicy {
    pub phase_cap: usize,
    pub horizon: Extended,
    /// Steps shorter than this count as stalled.
    pub alpha_min: Q,
    /// Consecutive stalled steps before giving up.
    pub stall_repeats: usize,
}

impl Default for TerminationPolicy {
    fn default() -> Self {
        TerminationPolicy {
            phase_cap: 1000,
            horizon: Extended::Infinite,
            alpha_min: Q::new(BigInt::from(1), BigInt::from(10).pow(9)),
            stall_repeats: 50,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid termination policy: {0}")]
    InvalidPolicy(&'static str),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("phase {phase}: {source}")]
    ThinFlow {
        phase: usize,
        #[source]
        source: ThinFlowError,
        instance: Box<ThinFlowInstance>,
    },
    #[error("phase {phase}: no positive step size (computed {alpha})")]
    NonpositiveAlpha { phase: usize, alpha: String },
    #[error("arc {arc} holds more than its storage at time {time}")]
    StorageExceeded { arc: ArcId, time: String },
}

/// A restricted Nash flow over time on `[0, time)` together with the data
/// needed for the next thin flow.
#[derive(Clone, Debug)]
pub struct EngineState {
    network: ValidatedNetwork,
    phases: Vec<PhaseProfile>,
    time: Q,
    labels: Vec<Q>,
    flows: Vec<Q>,
    classes: ArcClasses,
    inflow_bounds: Vec<Q>,
    trajectory: EquilibriumTrajectory,
}

/// Which bound family limits the step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Waiting times stay nonnegative on resetting arcs.
    Resetting,
    /// Inactive arcs stay inactive.
    Inactive,
    /// Inflow bounds of spillback arcs stay constant.
    SpillbackBound,
    /// Non-spillback arcs stay below storage.
    Storage,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaBound {
    pub kind: BoundKind,
    pub arc: ArcId,
    pub alpha: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaBounds {
    pub alpha: Extended,
    pub bounds: Vec<AlphaBound>,
}

impl AlphaBounds {
    pub fn binding(&self) -> Vec<&AlphaBound> {
        match &self.alpha {
            Extended::Finite(a) => self.bounds.iter().filter(|b| b.alpha == *a).collect(),
            Extended::Infinite => Vec::new(),
        }
    }
}

fn fmt(q: &Q) -> String {
    num::format_rational(q)
}

impl EngineState {
    /// The empty flow over time.
    pub fn initial(network: &ValidatedNetwork) -> Result<Self, EngineError> {
        let trajectory = reconstruct_arc_flows(network, &[], Extended::Finite(Q::zero()))?;
        Self::at(network.clone(), Vec::new(), Q::zero(), trajectory)
    }

    fn at(
        network: ValidatedNetwork,
        phases: Vec<PhaseProfile>,
        time: Q,
        trajectory: EquilibriumTrajectory,
    ) -> Result<Self, EngineError> {
        let labels = trajectory.labels_at(&time);
        let flows: Vec<Q> = network.arc_ids().map(|e| trajectory.static_flow(e).eval(&time)).collect();
        let classes = trajectory.classify_arcs(&time)?;
        let mut inflow_bounds = Vec::with_capacity(network.arc_count());
        for e in network.arc_ids() {
            let lu = &labels[network.arc(e).tail.0];
            if let Extended::Finite(sigma) = &network.arc(e).storage {
                if trajectory.arc_load(e, lu) > *sigma {
                    return Err(EngineError::StorageExceeded { arc: e, time: fmt(lu) });
                }
            }
            inflow_bounds.push(trajectory.inflow_bound(e, lu));
        }
        Ok(EngineState { network, phases, time, labels, flows, classes, inflow_bounds, trajectory })
    }

    pub fn network(&self) -> &ValidatedNetwork {
        &self.network
    }

    pub fn phases(&self) -> &[PhaseProfile] {
        &self.phases
    }

    /// Current phase start `φ`.
    pub fn time(&self) -> &Q {
        &self.time
    }

    /// `ℓ_v(φ)`.
    pub fn labels(&self) -> &[Q] {
        &self.labels
    }

    /// `x_e(φ)`.
    pub fn flows(&self) -> &[Q] {
        &self.flows
    }

    pub fn classes(&self) -> &ArcClasses {
        &self.classes
    }

    /// `b⁺_e(ℓ_u(φ))`.
    pub fn inflow_bounds(&self) -> &[Q] {
        &self.inflow_bounds
    }

    /// The committed restricted flow on `[0, φ)`.
    pub fn trajectory(&self) -> &EquilibriumTrajectory {
        &self.trajectory
    }

    /// The thin-flow problem on the current shortest-paths network.
    pub fn thin_flow_instance(&self) -> ThinFlowInstance {
        let net = &self.network;
        let arcs = net
            .arc_ids()
            .filter(|e| self.classes.active[e.0])
            .map(|e| {
                let a = net.arc(e);
                ThinFlowArc {
                    id: e,
                    tail: a.tail,
                    head: a.head,
                    outflow_cap: a.outflow_cap.clone(),
                    inflow_bound: self.inflow_bounds[e.0].clone(),
                    resetting: self.classes.resetting[e.0],
                }
            })
            .collect();
        ThinFlowInstance {
            node_count: net.node_count(),
            source: net.source,
            sink: net.sink,
            arcs,
            demand: net.inflow_rate.clone(),
        }
    }

    /// The phase that `sol` would start at `φ`.
    pub fn phase_profile(&self, inst: &ThinFlowInstance, sol: &ThinFlowSolution) -> PhaseProfile {
        let mut flow_rates = vec![Q::zero(); self.network.arc_count()];
        for (k, a) in inst.arcs.iter().enumerate() {
            flow_rates[a.id.0] = sol.flow[k].clone();
        }
        PhaseProfile {
            start: self.time.clone(),
            flow_rates,
            label_rates: sol.labels.clone(),
            factors: sol.factors.clone(),
            active: self.classes.active.clone(),
            resetting: self.classes.resetting.clone(),
            spillback: self.classes.spillback.clone(),
            inflow_bounds: self.inflow_bounds.clone(),
        }
    }

    /// The committed flow continued by `phase` forever.
    fn extended(&self, phase: &PhaseProfile) -> Result<EquilibriumTrajectory, EngineError> {
        let mut phases = self.phases.clone();
        phases.push(phase.clone());
        Ok(reconstruct_arc_flows(&self.network, &phases, Extended::Infinite)?)
    }
}

/// Largest feasible step for `phase` at the state's `φ`, from the four bound
/// families. `Infinite` means no family binds.
pub fn max_feasible_alpha(state: &EngineState, phase: &PhaseProfile) -> Result<AlphaBounds, EngineError> {
    let net = &state.network;
    let l = &state.labels;
    let dl = &phase.label_rates;
    let ext = state.extended(phase)?;
    let mut bounds = Vec::new();
    for e in net.arc_ids() {
        let a = net.arc(e);
        let (u, v) = (a.tail.0, a.head.0);
        let gap = &l[v] - &l[u] - &a.transit;
        let drift = &dl[v] - &dl[u];
        if state.classes.resetting[e.0] && drift.is_negative() {
            bounds.push(AlphaBound { kind: BoundKind::Resetting, arc: e, alpha: gap / -drift });
        } else if !state.classes.active[e.0] && drift.is_positive() {
            bounds.push(AlphaBound { kind: BoundKind::Inactive, arc: e, alpha: -gap / drift });
        }
        if !state.classes.active[e.0] {
            continue;
        }
        if state.classes.spillback[e.0] {
            if dl[u].is_positive() {
                if let Some(next) = ext.outflow(e).next_change_after(&l[u]) {
                    bounds.push(AlphaBound { kind: BoundKind::SpillbackBound, arc: e, alpha: (next - &l[u]) / &dl[u] });
                }
            }
        } else if let Extended::Finite(sigma) = &a.storage {
            let load = ext.static_flow(e).sub(&ext.cumulative_outflow(e).compose(ext.label(a.tail)));
            if let Some(hit) = load.first_crossing(sigma, &state.time) {
                bounds.push(AlphaBound { kind: BoundKind::Storage, arc: e, alpha: hit - &state.time });
            }
        }
    }
    let alpha = bounds
        .iter()
        .map(|b| b.alpha.clone())
        .min()
        .map_or(Extended::Infinite, Extended::Finite);
    if let Extended::Finite(a) = &alpha {
        if !a.is_positive() {
            return Err(EngineError::NonpositiveAlpha { phase: state.phases.len(), alpha: fmt(a) });
        }
    }
    Ok(AlphaBounds { alpha, bounds })
}

/// Direct check of the four step-size conditions for a given `α > 0`.
pub fn alpha_is_feasible(state: &EngineState, phase: &PhaseProfile, alpha: &Q) -> Result<bool, EngineError> {
    let net = &state.network;
    let l = &state.labels;
    let dl = &phase.label_rates;
    let ext = state.extended(phase)?;
    let stop = &state.time + alpha;
    for e in net.arc_ids() {
        let a = net.arc(e);
        let (u, v) = (a.tail.0, a.head.0);
        let gap_end = &l[v] - &l[u] + alpha * (&dl[v] - &dl[u]);
        if state.classes.resetting[e.0] && gap_end < a.transit {
            return Ok(false);
        }
        if !state.classes.active[e.0] {
            if gap_end > a.transit {
                return Ok(false);
            }
            continue;
        }
        if state.classes.spillback[e.0] {
            let window_end = &l[u] + alpha * &dl[u];
            if ext.outflow(e).next_change_after(&l[u]).is_some_and(|t| *t < window_end) {
                return Ok(false);
            }
        } else if let Extended::Finite(sigma) = &a.storage {
            let load = ext.static_flow(e).sub(&ext.cumulative_outflow(e).compose(ext.label(a.tail)));
            let inside = load.breakpoints().filter(|t| **t >= state.time && **t < stop);
            let below = std::iter::once(&state.time).chain(inside).all(|t| load.eval(t) < *sigma);
            if !below || load.eval(&stop) > *sigma {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff no bound family constrains the step.
pub fn detect_steady_state(state: &EngineState, phase: &PhaseProfile) -> Result<bool, EngineError> {
    Ok(max_feasible_alpha(state, phase)?.alpha.is_infinite())
}

/// Commits `phase` on `[φ, φ + α)`. `α = ∞` yields the final trajectory.
pub fn apply_extension(state: &EngineState, phase: PhaseProfile, alpha: &Q) -> Result<EngineState, EngineError> {
    if !alpha.is_positive() {
        return Err(EngineError::NonpositiveAlpha { phase: state.phases.len(), alpha: fmt(alpha) });
    }
    let mut phases = state.phases.clone();
    phases.push(phase);
    let time = &state.time + alpha;
    let trajectory = reconstruct_arc_flows(&state.network, &phases, Extended::Finite(time.clone()))?;
    EngineState::at(state.network.clone(), phases, time, trajectory)
}

/// Everything known about one committed phase, passed to observers.
pub struct PhaseEvent<'a> {
    pub index: usize,
    pub before: &'a EngineState,
    pub instance: &'a ThinFlowInstance,
    pub solution: &'a ThinFlowSolution,
    pub phase: &'a PhaseProfile,
    pub bounds: &'a AlphaBounds,
    /// The state after the commit; `None` for the final infinite phase.
    pub after: Option<&'a EngineState>,
}

pub fn compute_nash_flow(net: &ValidatedNetwork, policy: &TerminationPolicy) -> Result<EquilibriumTrajectory, EngineError> {
    compute_nash_flow_observed(net, policy, |_| {})
}

/// [`compute_nash_flow`] calling `observer` after every phase.
pub fn compute_nash_flow_observed(
    net: &ValidatedNetwork,
    policy: &TerminationPolicy,
    mut observer: impl FnMut(&PhaseEvent<'_>),
) -> Result<EquilibriumTrajectory, EngineError> {
    if policy.phase_cap == 0 {
        return Err(EngineError::InvalidPolicy("phase cap must be at least 1"));
    }
    if !policy.horizon.is_positive() || policy.horizon == Extended::Finite(Q::zero()) {
        return Err(EngineError::InvalidPolicy("horizon must be positive"));
    }
    let mut state = EngineState::initial(net)?;
    let mut stalled = 0;
    loop {
        let index = state.phases.len();
        let instance = state.thin_flow_instance();
        let solution = thinflow::solve_thin_flow(&instance).map_err(|source| EngineError::ThinFlow {
            phase: index,
            source,
            instance: Box::new(instance.clone()),
        })?;
        let phase = state.phase_profile(&instance, &solution);
        let bounds = max_feasible_alpha(&state, &phase)?;
        let remaining = match &policy.horizon {
            Extended::Finite(h) => Extended::Finite(h - &state.time),
            Extended::Infinite => Extended::Infinite,
        };
        let step = bounds.alpha.clone().min(remaining.clone());
        let Extended::Finite(step) = step else {
            observer(&PhaseEvent { index, before: &state, instance: &instance, solution: &solution, phase: &phase, bounds: &bounds, after: None });
            let mut phases = state.phases.clone();
            phases.push(phase);
            let traj = reconstruct_arc_flows(net, &phases, Extended::Infinite)?;
            return Ok(traj.with_termination(Termination::SteadyState));
        };
        let next = apply_extension(&state, phase.clone(), &step)?;
        observer(&PhaseEvent { index, before: &state, instance: &instance, solution: &solution, phase: &phase, bounds: &bounds, after: Some(&next) });
        stalled = if step < policy.alpha_min { stalled + 1 } else { 0 };
        let termination = if Extended::Finite(step.clone()) == remaining {
            Some(Termination::Horizon)
        } else if next.phases.len() >= policy.phase_cap {
            Some(Termination::PhaseCap)
        } else if stalled >= policy.stall_repeats {
            Some(Termination::StalledProgress)
        } else {
            None
        };
        state = next;
        if let Some(t) = termination {
            return Ok(state.trajectory.clone().with_termination(t));
        }
    }
}
