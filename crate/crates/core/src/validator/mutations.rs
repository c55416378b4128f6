//! Deliberately broken trajectories, one per validator condition family.
//! Each fixture must make its target check report at least one witness.

use crate::dynamics::{reconstruct_arc_flows, EquilibriumTrajectory, Termination};
use crate::engine::{compute_nash_flow, TerminationPolicy};
use crate::fixtures::{intro_network, intro_network_without_spillback};
use crate::network::{validate_network, ArcId, ArcParams, Network, NodeId};
use crate::num::{int, ratio, Extended, Q};
use crate::pwl::{PiecewiseConstant, PiecewiseLinear};

use super::{Check, Condition};

pub struct MutationFixture {
    pub name: &'static str,
    pub description: &'static str,
    pub check: Check,
    /// The condition the mutation is designed to break.
    pub condition: Condition,
    pub trajectory: EquilibriumTrajectory,
}

fn solve(net: Network) -> EquilibriumTrajectory {
    let net = validate_network(&net).expect("fixture network is valid");
    compute_nash_flow(&net, &TerminationPolicy::default()).expect("fixture network solves")
}

fn steps(left: i64, steps: &[(Q, Q)]) -> PiecewiseConstant {
    PiecewiseConstant::new(int(left), steps.to_vec()).expect("steps are sorted")
}

const E1: ArcId = ArcId(0);
const E2: ArcId = ArcId(1);
const E3: ArcId = ArcId(2);

/// Two nodes `a`, `b` joined in both directions by arcs that fill up together.
fn two_cycle() -> EquilibriumTrajectory {
    let arc = |name: &str, tail: usize, head: usize, storage: Extended| ArcParams {
        name: name.into(),
        tail: NodeId(tail),
        head: NodeId(head),
        transit: int(1),
        storage,
        inflow_cap: int(3),
        outflow_cap: int(2),
    };
    let net = Network {
        node_names: vec!["s".into(), "a".into(), "b".into(), "t".into()],
        arcs: vec![
            arc("sa", 0, 1, Extended::Infinite),
            arc("ab", 1, 2, Extended::Finite(int(4))),
            arc("ba", 2, 1, Extended::Finite(int(4))),
            arc("at", 1, 3, Extended::Infinite),
        ],
        source: NodeId(0),
        sink: NodeId(3),
        inflow_rate: int(2),
    };
    let net = validate_network(&net).expect("two-cycle network is valid").into_inner();
    let dist = net.transit_distances();
    let labels = dist
        .iter()
        .map(|d| PiecewiseLinear::identity().add_constant(d.as_ref().expect("reachable")))
        .collect();
    let fill = steps(0, &[(int(0), int(2)), (int(2), int(0))]);
    let none = PiecewiseConstant::zero();
    EquilibriumTrajectory::from_functions(
        net,
        Vec::new(),
        Extended::Finite(int(0)),
        Termination::Horizon,
        labels,
        vec![PiecewiseLinear::constant(int(0)); 4],
        vec![none.clone(), fill.clone(), fill, none.clone()],
        vec![none; 4],
    )
}

/// The ten documented mutations.
pub fn mutation_fixtures() -> Vec<MutationFixture> {
    let left = solve(intro_network(1));
    let right = solve(intro_network(2));
    let mut out = Vec::new();

    out.push(MutationFixture {
        name: "inflow-above-bound",
        description: "right variant with e2 inflow raised to 3 while e2 is full",
        check: Check::Feasibility,
        condition: Condition::Inflow,
        trajectory: right.clone().with_inflow(E2, steps(0, &[(int(1), int(3))])),
    });
    out.push(MutationFixture {
        name: "full-arc-cycle",
        description: "two opposite arcs both full at the same time",
        check: Check::Feasibility,
        condition: Condition::NoDeadlock,
        trajectory: two_cycle(),
    });
    out.push(MutationFixture {
        name: "outflow-above-capacity",
        description: "left variant with e2 releasing twice its outflow capacity",
        check: Check::DerivedConditions,
        condition: Condition::OutflowCapacity,
        trajectory: left.clone().with_outflow(E2, steps(0, &[(int(2), int(2))])),
    });

    let reroute_e2 = steps(0, &[(int(1), int(2)), (int(4), int(1))]);
    let reroute_e3 = steps(0, &[(int(1), int(1)), (int(4), int(2))]);
    out.push(MutationFixture {
        name: "reroute-onto-inactive-arc",
        description: "left variant sending part of the early flow into the long detour e3",
        check: Check::NashCondition,
        condition: Condition::ActiveSupport,
        trajectory: left.clone().with_inflow(E2, reroute_e2).with_inflow(E3, reroute_e3),
    });

    let t = NodeId(2);
    let label_t = PiecewiseLinear::new(vec![(int(0), int(2)), (int(3), int(11))], int(1), int(2)).expect("sorted");
    out.push(MutationFixture {
        name: "perturbed-sink-label",
        description: "left variant with the sink label rising at rate 2 in the second phase",
        check: Check::PhaseDerivatives,
        condition: Condition::ThinFlow(crate::thinflow::TfCondition::Tf3),
        trajectory: left.clone().with_label(t, label_t),
    });
    out.push(MutationFixture {
        name: "unfair-merge",
        description: "left variant with e3 throttled to 1 at the sink while e2 keeps releasing at full rate",
        check: Check::Feasibility,
        condition: Condition::FairAllocation,
        trajectory: left.clone().with_outflow(E3, steps(0, &[(int(11), int(1))])),
    });
    out.push(MutationFixture {
        name: "overfull-arc",
        description: "right variant with e2 releasing only 1 once full",
        check: Check::DerivedConditions,
        condition: Condition::Storage,
        trajectory: right.clone().with_outflow(E2, steps(0, &[(int(2), int(2)), (int(7), int(1))])),
    });
    out.push(MutationFixture {
        name: "negative-queue",
        description: "left variant with e1 releasing flow before any can arrive",
        check: Check::DerivedConditions,
        condition: Condition::NonDeficit,
        trajectory: left.clone().with_outflow(E1, steps(0, &[(int(0), int(3))])),
    });
    out.push(MutationFixture {
        name: "starved-queue",
        description: "left variant with queued e2 draining at 1/2000",
        check: Check::EpsilonBound,
        condition: Condition::EpsilonOutflow,
        trajectory: left.clone().with_outflow(E2, steps(0, &[(int(2), ratio(1, 2000))])),
    });

    let plain = solve(intro_network_without_spillback(1));
    let mut phases = plain.phases().to_vec();
    phases[0].factors[1] = ratio(1, 2);
    let reconstructed = reconstruct_arc_flows(plain.network(), &phases, plain.end().clone())
        .expect("same shape")
        .with_termination(plain.termination());
    out.push(MutationFixture {
        name: "throttled-without-spillback",
        description: "left variant without spillback but with a recorded factor below 1 at v",
        check: Check::Reduction,
        condition: Condition::SpillbackFactor,
        trajectory: reconstructed,
    });
    out
}
