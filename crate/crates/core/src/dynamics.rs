//! Flow dynamics reconstructed from a list of thin-flow phases.
//!
//! Phases are the single source of truth. Labels `ℓ_v`, the underlying static
//! flow `x_e`, the rates `f±_e` and their integrals `F±_e` are materialized
//! once; queues, loads, bounds and exit times are derived from them on demand.
//!
//! A trajectory whose `end` is finite describes the restricted flow in which
//! only particles departing before `end` exist: `f⁺_e` vanishes after
//! `ℓ_u(end)` and `f⁻_e` after `ℓ_v(end)`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ArcId, Network, NodeId};
use crate::num::{self, Extended, Q};
use crate::pwl::{PiecewiseConstant, PiecewiseLinear};

/// One thin-flow phase `[start, next start)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseProfile {
    #[serde(with = "num::serde_q")]
    pub start: Q,
    /// `x'_e`, zero off the active set.
    #[serde(with = "num::serde_q_vec")]
    pub flow_rates: Vec<Q>,
    /// `ℓ'_v`.
    #[serde(with = "num::serde_q_vec")]
    pub label_rates: Vec<Q>,
    /// Spillback factors `c_v`.
    #[serde(with = "num::serde_q_vec")]
    pub factors: Vec<Q>,
    pub active: Vec<bool>,
    pub resetting: Vec<bool>,
    pub spillback: Vec<bool>,
    /// `b⁺_e` used by the phase's thin flow.
    #[serde(with = "num::serde_q_vec")]
    pub inflow_bounds: Vec<Q>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    SteadyState,
    PhaseCap,
    StalledProgress,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("inconsistent phases: {0}")]
    InconsistentPhases(String),
    #[error("a particle entering {arc} at time {time} never leaves the queue")]
    UnboundedWait { arc: ArcId, time: String },
    #[error("{set} membership of {arc} at time {time} differs between label and definition")]
    ClassificationMismatch { arc: ArcId, time: String, set: &'static str },
    #[error("outflow demand {demand} exceeds the available supply {supply}")]
    DemandExceedsSupply { demand: String, supply: String },
    #[error("outflow demand must be positive")]
    NonpositiveDemand,
}

/// Arc classes at one point in time, indexed by arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcClasses {
    pub active: Vec<bool>,
    pub resetting: Vec<bool>,
    pub spillback: Vec<bool>,
}

impl ArcClasses {
    fn ids(flags: &[bool]) -> Vec<ArcId> {
        flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| ArcId(i)).collect()
    }

    pub fn active_ids(&self) -> Vec<ArcId> {
        Self::ids(&self.active)
    }

    pub fn resetting_ids(&self) -> Vec<ArcId> {
        Self::ids(&self.resetting)
    }

    pub fn spillback_ids(&self) -> Vec<ArcId> {
        Self::ids(&self.spillback)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumTrajectory {
    network: Network,
    phases: Vec<PhaseProfile>,
    end: Extended,
    termination: Termination,
    labels: Vec<PiecewiseLinear>,
    static_flow: Vec<PiecewiseLinear>,
    inflow: Vec<PiecewiseConstant>,
    outflow: Vec<PiecewiseConstant>,
    cum_inflow: Vec<PiecewiseLinear>,
    cum_outflow: Vec<PiecewiseLinear>,
}

fn fmt(q: &Q) -> String {
    num::format_rational(q)
}

/// Builds every arc-level function from the phase list. `end` is the source
/// time up to which the phases are committed.
pub fn reconstruct_arc_flows(
    net: &Network,
    phases: &[PhaseProfile],
    end: Extended,
) -> Result<EquilibriumTrajectory, DynamicsError> {
    let n = net.node_count();
    let m = net.arc_count();
    for (i, p) in phases.iter().enumerate() {
        if p.flow_rates.len() != m
            || p.inflow_bounds.len() != m
            || p.active.len() != m
            || p.resetting.len() != m
            || p.spillback.len() != m
            || p.label_rates.len() != n
            || p.factors.len() != n
        {
            return Err(DynamicsError::InconsistentPhases(format!("phase {i} has the wrong shape")));
        }
        if p.label_rates.iter().any(|l| l.is_negative()) {
            return Err(DynamicsError::InconsistentPhases(format!("phase {i} has a decreasing label")));
        }
        if p.flow_rates.iter().any(|x| x.is_negative()) {
            return Err(DynamicsError::InconsistentPhases(format!("phase {i} has a negative flow rate")));
        }
    }
    if let Some(first) = phases.first() {
        if !first.start.is_zero() {
            return Err(DynamicsError::InconsistentPhases("the first phase must start at 0".into()));
        }
    }
    if phases.windows(2).any(|w| w[0].start >= w[1].start) {
        return Err(DynamicsError::InconsistentPhases("phase starts must increase".into()));
    }
    if let (Some(last), Extended::Finite(e)) = (phases.last(), &end) {
        if *e <= last.start {
            return Err(DynamicsError::InconsistentPhases("trajectory ends before its last phase".into()));
        }
    }
    if phases.is_empty() && end.is_infinite() {
        return Err(DynamicsError::InconsistentPhases("an infinite trajectory needs a phase".into()));
    }

    let dist = net.transit_distances();
    let dist: Vec<Q> = dist
        .into_iter()
        .map(|d| d.ok_or_else(|| DynamicsError::InconsistentPhases("unreachable node".into())))
        .collect::<Result<_, _>>()?;

    // breakpoint values of ℓ and x at every phase start and the finite end
    let mut times: Vec<Q> = phases.iter().map(|p| p.start.clone()).collect();
    if let Extended::Finite(e) = &end {
        if times.last() != Some(e) {
            times.push(e.clone());
        }
    }
    let mut label_at = vec![dist.clone()];
    let mut flow_at = vec![vec![Q::zero(); m]];
    for k in 1..times.len() {
        let p = &phases[k - 1];
        let dt = &times[k] - &times[k - 1];
        let prev_l = &label_at[k - 1];
        let prev_x = &flow_at[k - 1];
        label_at.push((0..n).map(|v| &prev_l[v] + &dt * &p.label_rates[v]).collect());
        flow_at.push((0..m).map(|e| &prev_x[e] + &dt * &p.flow_rates[e]).collect());
    }

    let final_label_slope = |v: usize| phases.last().map_or(num::one(), |p| p.label_rates[v].clone());
    let labels: Vec<PiecewiseLinear> = (0..n)
        .map(|v| {
            let points = times
                .iter()
                .zip(&label_at)
                .map(|(t, l)| (t.clone(), l[v].clone()))
                .collect::<Vec<_>>();
            let points = if points.is_empty() { vec![(Q::zero(), dist[v].clone())] } else { points };
            PiecewiseLinear::new(points, num::one(), final_label_slope(v)).expect("phase starts increase")
        })
        .collect();
    let static_flow: Vec<PiecewiseLinear> = (0..m)
        .map(|e| {
            let points = times
                .iter()
                .zip(&flow_at)
                .map(|(t, x)| (t.clone(), x[e].clone()))
                .collect::<Vec<_>>();
            let points = if points.is_empty() { vec![(Q::zero(), Q::zero())] } else { points };
            let slope = phases.last().map_or(Q::zero(), |p| p.flow_rates[e].clone());
            PiecewiseLinear::new(points, Q::zero(), slope).expect("phase starts increase")
        })
        .collect();

    // rate on the label interval of `node` during each phase
    let rates = |node: usize, e: usize| -> Result<PiecewiseConstant, DynamicsError> {
        let mut steps: Vec<(Q, Q)> = Vec::new();
        for (i, p) in phases.iter().enumerate() {
            let lo = &label_at[i][node];
            let hi = label_at.get(i + 1).map(|l| &l[node]);
            let nonempty = match hi {
                Some(h) => h > lo,
                None => p.label_rates[node].is_positive(),
            };
            if !nonempty {
                continue;
            }
            let value = if p.flow_rates[e].is_zero() {
                Q::zero()
            } else {
                &p.flow_rates[e] / &p.label_rates[node]
            };
            steps.push((lo.clone(), value));
        }
        let last_open = phases.last().is_some_and(|p| p.label_rates[node].is_positive());
        if !end.is_infinite() || !last_open {
            let stop = label_at.last().expect("at least the initial labels")[node].clone();
            if steps.last().is_some_and(|(t, _)| *t >= stop) {
                return Err(DynamicsError::InconsistentPhases("label intervals overlap".into()));
            }
            steps.push((stop, Q::zero()));
        }
        PiecewiseConstant::new(Q::zero(), steps)
            .map_err(|_| DynamicsError::InconsistentPhases("label intervals overlap".into()))
    };
    let mut inflow = Vec::with_capacity(m);
    let mut outflow = Vec::with_capacity(m);
    for e in net.arc_ids() {
        let a = net.arc(e);
        inflow.push(rates(a.tail.0, e.0)?);
        outflow.push(rates(a.head.0, e.0)?);
    }
    Ok(EquilibriumTrajectory::from_functions(
        net.clone(),
        phases.to_vec(),
        end,
        Termination::Horizon,
        labels,
        static_flow,
        inflow,
        outflow,
    ))
}

impl EquilibriumTrajectory {
    /// Assembles a trajectory from explicit functions. The cumulative flows are
    /// the exact integrals of the rates, anchored at zero.
    #[allow(clippy::too_many_arguments)]
    pub fn from_functions(
        network: Network,
        phases: Vec<PhaseProfile>,
        end: Extended,
        termination: Termination,
        labels: Vec<PiecewiseLinear>,
        static_flow: Vec<PiecewiseLinear>,
        inflow: Vec<PiecewiseConstant>,
        outflow: Vec<PiecewiseConstant>,
    ) -> Self {
        let cum_inflow = inflow.iter().map(|f| f.integral(&Q::zero())).collect();
        let cum_outflow = outflow.iter().map(|f| f.integral(&Q::zero())).collect();
        EquilibriumTrajectory {
            network,
            phases,
            end,
            termination,
            labels,
            static_flow,
            inflow,
            outflow,
            cum_inflow,
            cum_outflow,
        }
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn phases(&self) -> &[PhaseProfile] {
        &self.phases
    }

    pub fn end(&self) -> &Extended {
        &self.end
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn phase_starts(&self) -> Vec<Q> {
        self.phases.iter().map(|p| p.start.clone()).collect()
    }

    /// Index of the phase containing source time `theta`.
    pub fn phase_at(&self, theta: &Q) -> Option<usize> {
        let i = self.phases.iter().rposition(|p| p.start <= *theta)?;
        match &self.end {
            Extended::Finite(e) if theta >= e => None,
            _ => Some(i),
        }
    }

    /// `ℓ_v`.
    pub fn label(&self, v: NodeId) -> &PiecewiseLinear {
        &self.labels[v.0]
    }

    pub fn labels_at(&self, theta: &Q) -> Vec<Q> {
        self.labels.iter().map(|l| l.eval(theta)).collect()
    }

    /// `x_e`.
    pub fn static_flow(&self, e: ArcId) -> &PiecewiseLinear {
        &self.static_flow[e.0]
    }

    /// `f⁺_e`.
    pub fn inflow(&self, e: ArcId) -> &PiecewiseConstant {
        &self.inflow[e.0]
    }

    /// `f⁻_e`.
    pub fn outflow(&self, e: ArcId) -> &PiecewiseConstant {
        &self.outflow[e.0]
    }

    /// `F⁺_e`.
    pub fn cumulative_inflow(&self, e: ArcId) -> &PiecewiseLinear {
        &self.cum_inflow[e.0]
    }

    /// `F⁻_e`.
    pub fn cumulative_outflow(&self, e: ArcId) -> &PiecewiseLinear {
        &self.cum_outflow[e.0]
    }

    /// `z_e(θ) = F⁺_e(θ − τ_e) − F⁻_e(θ)`.
    pub fn queue_length(&self, e: ArcId, theta: &Q) -> Q {
        let tau = &self.network.arc(e).transit;
        self.cum_inflow[e.0].eval(&(theta - tau)) - self.cum_outflow[e.0].eval(theta)
    }

    pub fn queue_function(&self, e: ArcId) -> PiecewiseLinear {
        let tau = &self.network.arc(e).transit;
        self.cum_inflow[e.0].shift(tau).sub(&self.cum_outflow[e.0])
    }

    /// `d_e(θ) = F⁺_e(θ) − F⁻_e(θ)`.
    pub fn arc_load(&self, e: ArcId, theta: &Q) -> Q {
        self.cum_inflow[e.0].eval(theta) - self.cum_outflow[e.0].eval(theta)
    }

    pub fn load_function(&self, e: ArcId) -> PiecewiseLinear {
        self.cum_inflow[e.0].sub(&self.cum_outflow[e.0])
    }

    pub fn is_full(&self, e: ArcId, theta: &Q) -> bool {
        match &self.network.arc(e).storage {
            Extended::Finite(sigma) => self.arc_load(e, theta) >= *sigma,
            Extended::Infinite => false,
        }
    }

    /// `b⁺_e(θ)`: `min{f⁻_e(θ), ν⁺_e}` on a full arc, `ν⁺_e` otherwise.
    pub fn inflow_bound(&self, e: ArcId, theta: &Q) -> Q {
        let cap = &self.network.arc(e).inflow_cap;
        if self.is_full(e, theta) {
            num::min_q(self.outflow[e.0].eval(theta), cap).clone()
        } else {
            cap.clone()
        }
    }

    /// Left limit of `b⁺_e` at `θ`.
    pub fn inflow_bound_left(&self, e: ArcId, theta: &Q) -> Q {
        let cap = &self.network.arc(e).inflow_cap;
        let full_left = match &self.network.arc(e).storage {
            Extended::Finite(sigma) => {
                let load = self.load_function(e);
                load.eval(theta) >= *sigma && !load.slope_before(theta).is_positive()
            }
            Extended::Infinite => false,
        };
        if full_left {
            num::min_q(self.outflow[e.0].left_limit(theta), cap).clone()
        } else {
            cap.clone()
        }
    }

    /// `b⁻_e(θ)`: zero before `τ_e`, `ν⁻_e` while queued, else the arriving rate capped at `ν⁻_e`.
    pub fn push_rate(&self, e: ArcId, theta: &Q) -> Q {
        let a = self.network.arc(e);
        if *theta < a.transit {
            return Q::zero();
        }
        if self.queue_length(e, theta).is_positive() {
            return a.outflow_cap.clone();
        }
        num::min_q(self.inflow[e.0].eval(&(theta - &a.transit)), &a.outflow_cap).clone()
    }

    /// Left limit of `b⁻_e` at `θ`.
    pub fn push_rate_left(&self, e: ArcId, theta: &Q) -> Q {
        let a = self.network.arc(e);
        if *theta <= a.transit {
            return Q::zero();
        }
        let z = self.queue_function(e);
        if z.eval(theta).is_positive() || z.slope_before(theta).is_negative() {
            return a.outflow_cap.clone();
        }
        num::min_q(self.inflow[e.0].left_limit(&(theta - &a.transit)), &a.outflow_cap).clone()
    }

    /// `T_e(θ)`: the first time the cumulative outflow reaches `F⁺_e(θ)`, no
    /// earlier than `θ + τ_e`.
    pub fn exit_time(&self, e: ArcId, theta: &Q) -> Result<Q, DynamicsError> {
        let tau = &self.network.arc(e).transit;
        let level = self.cum_inflow[e.0].eval(theta);
        self.cum_outflow[e.0]
            .first_crossing(&level, &(theta + tau))
            .ok_or_else(|| DynamicsError::UnboundedWait { arc: e, time: fmt(theta) })
    }

    /// `q_e(θ) = T_e(θ) − θ − τ_e`.
    pub fn waiting_time(&self, e: ArcId, theta: &Q) -> Result<Q, DynamicsError> {
        let tau = &self.network.arc(e).transit;
        Ok(self.exit_time(e, theta)? - theta - tau)
    }

    /// Bellman recomputation of the earliest arrival times for departure time
    /// `θ`. Exit times are nondecreasing, so a label-setting scan is exact.
    pub fn earliest_arrival(&self, theta: &Q) -> Vec<Option<Q>> {
        let net = &self.network;
        let n = net.node_count();
        let mut label: Vec<Option<Q>> = vec![None; n];
        let mut done = vec![false; n];
        label[net.source.0] = Some(theta.clone());
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && label[v].is_some())
                .min_by(|&a, &b| label[a].cmp(&label[b]));
            let Some(u) = next else { break };
            done[u] = true;
            let lu = label[u].clone().expect("selected nodes are labelled");
            for e in net.outgoing(NodeId(u)) {
                let Ok(t) = self.exit_time(e, &lu) else { continue };
                let w = net.arc(e).head.0;
                if label[w].as_ref().is_none_or(|l| t < *l) {
                    label[w] = Some(t);
                }
            }
        }
        label
    }

    /// Arc classes at source time `θ` from the label characterization,
    /// cross-checked against the definitions via exit and waiting times.
    pub fn classify_arcs(&self, theta: &Q) -> Result<ArcClasses, DynamicsError> {
        let classes = self.classify_by_labels(theta);
        let l = self.labels_at(theta);
        for e in self.network.arc_ids() {
            let a = self.network.arc(e);
            let lu = &l[a.tail.0];
            let lv = &l[a.head.0];
            let exit = self.exit_time(e, lu)?;
            let active = *lv == exit;
            let resetting = exit > lu + &a.transit;
            if active != classes.active[e.0] {
                return Err(DynamicsError::ClassificationMismatch { arc: e, time: fmt(theta), set: "active" });
            }
            if resetting != classes.resetting[e.0] {
                return Err(DynamicsError::ClassificationMismatch { arc: e, time: fmt(theta), set: "resetting" });
            }
            if classes.spillback[e.0] && !active {
                return Err(DynamicsError::ClassificationMismatch { arc: e, time: fmt(theta), set: "spillback" });
            }
        }
        Ok(classes)
    }

    /// Arc classes from labels alone: active iff `ℓ_v ≥ ℓ_u + τ_e`, resetting
    /// iff strict, spillback iff full at `ℓ_u(θ)`.
    pub fn classify_by_labels(&self, theta: &Q) -> ArcClasses {
        let l = self.labels_at(theta);
        let mut classes = ArcClasses {
            active: Vec::new(),
            resetting: Vec::new(),
            spillback: Vec::new(),
        };
        for e in self.network.arc_ids() {
            let a = self.network.arc(e);
            let reach = &l[a.tail.0] + &a.transit;
            classes.active.push(l[a.head.0] >= reach);
            classes.resetting.push(l[a.head.0] > reach);
            classes.spillback.push(self.is_full(e, &l[a.tail.0]));
        }
        classes
    }

    /// Replaces `f⁺_e`; the cumulative inflow follows.
    pub fn with_inflow(mut self, e: ArcId, f: PiecewiseConstant) -> Self {
        self.cum_inflow[e.0] = f.integral(&Q::zero());
        self.inflow[e.0] = f;
        self
    }

    /// Replaces `f⁻_e`; the cumulative outflow follows.
    pub fn with_outflow(mut self, e: ArcId, f: PiecewiseConstant) -> Self {
        self.cum_outflow[e.0] = f.integral(&Q::zero());
        self.outflow[e.0] = f;
        self
    }

    pub fn with_label(mut self, v: NodeId, f: PiecewiseLinear) -> Self {
        self.labels[v.0] = f;
        self
    }

    pub fn with_static_flow(mut self, e: ArcId, f: PiecewiseLinear) -> Self {
        self.static_flow[e.0] = f;
        self
    }

    pub fn with_phases(mut self, phases: Vec<PhaseProfile>) -> Self {
        self.phases = phases;
        self
    }
}

/// Fair allocation at a node: the maximal `c ∈ (0, 1]` with
/// `Σ min{b⁻_e, c·ν⁻_e} = Ω`, and the resulting outflow rates.
pub fn node_spillback_factor(push: &[Q], demand: &Q, caps: &[Q]) -> Result<(Q, Vec<Q>), DynamicsError> {
    assert_eq!(push.len(), caps.len(), "one capacity per push rate");
    if !demand.is_positive() {
        return Err(DynamicsError::NonpositiveDemand);
    }
    let outflows = |c: &Q| -> Vec<Q> {
        push.iter()
            .zip(caps)
            .map(|(b, nu)| num::min_q(b, &(c * nu)).clone())
            .collect()
    };
    let one = num::one();
    let supply: Q = outflows(&one).iter().sum();
    if supply < *demand {
        return Err(DynamicsError::DemandExceedsSupply { demand: fmt(demand), supply: fmt(&supply) });
    }
    if supply == *demand {
        return Ok((one.clone(), outflows(&one)));
    }
    // H(a) = Σ min{b_e, a ν_e} is increasing until its last kink; scan the kinks
    let mut kinks: Vec<Q> = push.iter().zip(caps).map(|(b, nu)| b / nu).filter(|k| *k < one).collect();
    kinks.sort();
    kinks.dedup();
    let h = |a: &Q| -> Q { outflows(a).iter().sum() };
    let mut lo = Q::zero();
    let mut h_lo = Q::zero();
    for k in kinks.iter().chain(std::iter::once(&one)) {
        let h_k = h(k);
        if h_k >= *demand {
            let c = &lo + (demand - &h_lo) * (k - &lo) / (&h_k - &h_lo);
            return Ok((c.clone(), outflows(&c)));
        }
        lo = k.clone();
        h_lo = h_k;
    }
    unreachable!("H(1) exceeds the demand")
}
