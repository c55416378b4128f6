//! Reference values on the introductory network, checked exactly through the
//! public API. Values quoted from the source narrative and values derived by
//! hand from it are both frozen here.

use nashflow::dynamics::node_spillback_factor;
use nashflow::engine::{apply_extension, compute_nash_flow, max_feasible_alpha, EngineState, TerminationPolicy};
use nashflow::fixtures::{intro_network, single_arc};
use nashflow::network::{add_super_source, topological_order, validate_network, ArcParams, Violation};
use nashflow::num::{int, ratio, Extended, Q};
use nashflow::thinflow::{rho, solve_thin_flow, verify_thin_flow, TfCondition, TfSubject, ThinFlowSolution};
use nashflow::validator::epsilon_lower_bound;
use nashflow::{ArcId, EquilibriumTrajectory, Network, NodeId, PiecewiseLinear};

const S: NodeId = NodeId(0);
const V: NodeId = NodeId(1);
const T: NodeId = NodeId(2);
const E1: ArcId = ArcId(0);
const E2: ArcId = ArcId(1);
const E3: ArcId = ArcId(2);

fn q(n: i64) -> Q {
    int(n)
}

fn solve(cap: i64) -> EquilibriumTrajectory {
    let net = validate_network(&intro_network(cap)).unwrap();
    compute_nash_flow(&net, &TerminationPolicy::default()).unwrap()
}

fn first_phase(cap: i64) -> (EngineState, nashflow::PhaseProfile) {
    let net = validate_network(&intro_network(cap)).unwrap();
    let state = EngineState::initial(&net).unwrap();
    let inst = state.thin_flow_instance();
    let sol = solve_thin_flow(&inst).unwrap();
    let phase = state.phase_profile(&inst, &sol);
    (state, phase)
}

#[test]
fn network_checks() {
    assert!(validate_network(&intro_network(1)).is_ok());
    let mut tight = single_arc(1, 1);
    tight.arcs[0].storage = Extended::Finite(q(1));
    tight.arcs[0].inflow_cap = q(2);
    // an arc out of the source also needs infinite storage, so two reasons apply
    let errs = validate_network(&tight).unwrap_err();
    assert!(errs.iter().any(|e| matches!(e, Violation::StorageTooSmall { .. })));

    let mut cycle = intro_network(1);
    let zero = |tail: NodeId, head: NodeId| ArcParams {
        name: format!("{tail}{head}"),
        tail,
        head,
        transit: q(0),
        storage: Extended::Infinite,
        inflow_cap: q(1),
        outflow_cap: q(1),
    };
    cycle.arcs.push(zero(V, T));
    cycle.arcs.push(zero(T, V));
    let errs = validate_network(&cycle).unwrap_err();
    assert!(errs.iter().any(|e| matches!(e, Violation::ZeroTransitCycle { .. })));
}

#[test]
fn super_source() {
    let net = intro_network(1);
    assert_eq!(add_super_source(&net).unwrap(), net);
    let mut into_source = intro_network(1);
    into_source.arcs.push(ArcParams { tail: V, head: S, ..into_source.arcs[2].clone() });
    let lifted = add_super_source(&into_source).unwrap();
    assert!(validate_network(&lifted).is_ok());
    let mut no_rate = net;
    no_rate.inflow_rate = q(0);
    assert!(add_super_source(&no_rate).is_err());
}

#[test]
fn topological_orders() {
    let net = intro_network(1);
    let ends = |ids: &[ArcId]| ids.iter().map(|&e| (e, net.arc(e).tail, net.arc(e).head)).collect::<Vec<_>>();
    assert_eq!(topological_order(3, &ends(&[E2])).unwrap(), vec![S, V, T]);
    assert_eq!(topological_order(3, &ends(&[E1, E2, E3])).unwrap(), vec![S, V, T]);
    let two = [(ArcId(0), S, V), (ArcId(1), V, S)];
    assert!(topological_order(2, &two).is_err());
}

#[test]
fn piecewise_linear_values() {
    let f = PiecewiseLinear::with_final_slope(vec![(q(0), q(0))], q(3)).unwrap();
    assert_eq!(f.eval(&q(2)), q(6));

    let left = solve(1);
    let label_t = left.label(T);
    assert_eq!(label_t.eval(&q(0)), q(2));
    assert_eq!(label_t.eval(&q(3)), q(11));
    assert_eq!(label_t.slope_after(&q(0)), q(3));
    assert_eq!(label_t.slope_after(&q(3)), q(1));
    // cumulative flows vanish before time zero
    assert_eq!(left.cumulative_inflow(E1).eval(&q(-5)), q(0));
    assert_eq!(left.cumulative_outflow(E2).eval(&q(-1)), q(0));

    // leaving e2 after entering at ℓ_v(θ) is the sink label on the first phase
    for k in 0..=12 {
        let theta = ratio(k, 4);
        let exit = left.exit_time(E2, &left.label(V).eval(&theta)).unwrap();
        assert_eq!(exit, label_t.eval(&theta));
    }

    let a = PiecewiseLinear::line(q(0), q(2), q(3));
    let b = PiecewiseLinear::line(q(0), q(8), q(1));
    let lower = PiecewiseLinear::pointwise_min(&[a, b]).unwrap();
    assert_eq!(lower.breakpoints().cloned().collect::<Vec<_>>(), vec![q(3)]);

    let right = solve(2);
    assert_eq!(right.load_function(E2).first_crossing(&q(8), &q(0)), Some(q(7)));
}

#[test]
fn arc_flows() {
    let left = solve(1);
    for (t, rate) in [(1, 3), (3, 3), (4, 1), (50, 1)] {
        assert_eq!(*left.inflow(E2).eval(&q(t)), q(rate), "f⁺_e2({t})");
    }
    let right = solve(2);
    for t in [2, 5, 7, 100] {
        assert_eq!(*right.outflow(E2).eval(&q(t)), q(2), "f⁻_e2({t})");
    }
}

#[test]
fn queues_loads_and_waiting() {
    let left = solve(1);
    let right = solve(2);
    assert_eq!(left.queue_length(E2, &q(5)), q(6));
    assert_eq!(right.queue_length(E2, &q(7)), q(5));
    assert_eq!(right.arc_load(E2, &q(7)), q(8));
    assert_eq!(left.arc_load(E2, &q(5)), q(7));
    assert_eq!(left.queue_length(E3, &ratio(1, 2)), q(0));
    assert_eq!(right.inflow_bound(E2, &q(7)), q(2));
    assert_eq!(right.inflow_bound(E2, &q(20)), q(2));
    assert_eq!(left.inflow_bound(E2, &q(20)), q(3));
    assert_eq!(left.push_rate(E2, &ratio(1, 2)), q(0));
    assert_eq!(left.push_rate(E2, &q(3)), q(1));
    assert_eq!(left.waiting_time(E2, &q(4)).unwrap(), q(6));
    assert_eq!(right.waiting_time(E2, &q(7)).unwrap(), q(3));
    assert_eq!(left.waiting_time(E1, &q(10)).unwrap(), q(0));
}

#[test]
fn labels_and_classes() {
    let left = solve(1);
    let right = solve(2);
    assert_eq!(left.labels_at(&q(0)), vec![q(0), q(1), q(2)]);
    assert_eq!(left.labels_at(&q(3))[T.0], q(11));
    assert_eq!(right.labels_at(&q(6))[T.0], q(11));

    let c0 = left.classify_arcs(&q(0)).unwrap();
    assert_eq!(c0.active, vec![true, true, false]);
    assert!(c0.resetting.iter().all(|r| !r));
    assert!(c0.spillback.iter().all(|r| !r));
    let c3 = left.classify_arcs(&q(3)).unwrap();
    assert_eq!(c3.active, vec![true, true, true]);
    assert_eq!(c3.resetting, vec![false, true, false]);
    let c6 = right.classify_arcs(&q(6)).unwrap();
    assert_eq!(c6.spillback, vec![false, true, false]);
}

#[test]
fn spillback_factors() {
    let (c, f) = node_spillback_factor(&[q(3)], &q(2), &[q(3)]).unwrap();
    assert_eq!((c, f), (ratio(2, 3), vec![q(2)]));
    let (c, f) = node_spillback_factor(&[q(1), q(1)], &q(2), &[q(2), q(2)]).unwrap();
    assert_eq!((c, f), (q(1), vec![q(1), q(1)]));
    let (c, f) = node_spillback_factor(&[q(4), q(4)], &q(4), &[q(2), q(6)]).unwrap();
    assert_eq!((c, f), (ratio(1, 2), vec![q(1), q(3)]));
}

#[test]
fn rho_values() {
    assert_eq!(rho(&q(1), &q(3), &ratio(2, 3), &q(3), false), ratio(3, 2));
    assert_eq!(rho(&q(5), &q(0), &q(1), &q(2), false), q(5));
    assert_eq!(rho(&q(9), &q(1), &q(1), &q(1), true), q(1));
}

#[test]
fn thin_flows_of_the_phases() {
    let left = solve(1);
    let right = solve(2);
    let (state, phase) = first_phase(1);
    let inst = state.thin_flow_instance();
    assert_eq!(inst.arcs.len(), 2);
    assert_eq!(phase.flow_rates, vec![q(3), q(3), q(0)]);
    assert_eq!(phase.label_rates, vec![q(1), q(1), q(3)]);
    assert_eq!(phase.factors, vec![q(1); 3]);
    assert_eq!(left.phases()[1].flow_rates, vec![q(3), q(1), q(2)]);
    assert_eq!(left.phases()[1].label_rates, vec![q(1), q(1), q(1)]);
    assert_eq!(right.phases()[1].flow_rates, vec![q(3), q(3), q(0)]);
    assert_eq!(right.phases()[1].label_rates, vec![q(1), ratio(3, 2), ratio(3, 2)]);
    assert_eq!(right.phases()[1].factors, vec![q(1), ratio(2, 3), q(1)]);
    assert_eq!(right.phases()[0].label_rates[T.0], ratio(3, 2));
}

#[test]
fn verifier_on_the_right_variant() {
    let net = validate_network(&intro_network(2)).unwrap();
    let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();
    // rebuild the second-phase instance from the committed state
    let (state, phase) = first_phase(2);
    let after = apply_extension(&state, phase, &q(6)).unwrap();
    let inst = after.thin_flow_instance();
    let ids: Vec<ArcId> = inst.arcs.iter().map(|a| a.id).collect();
    assert_eq!(ids, vec![E1, E2]);
    assert_eq!(inst.arcs[1].inflow_bound, q(2));
    let good = ThinFlowSolution {
        flow: vec![q(3), q(3)],
        labels: vec![q(1), ratio(3, 2), ratio(3, 2)],
        factors: vec![q(1), ratio(2, 3), q(1)],
    };
    assert!(verify_thin_flow(&inst, &good).is_valid());
    let bad = ThinFlowSolution { factors: vec![q(1); 3], ..good.clone() };
    let report = verify_thin_flow(&inst, &bad);
    assert!(report
        .violations
        .iter()
        .any(|v| v.condition == TfCondition::Tf3 && v.subject == TfSubject::Arc(ArcId(0))));
    let solved = solve_thin_flow(&inst).unwrap();
    assert_eq!(solved, good);
    assert_eq!(after.phase_profile(&inst, &solved), traj.phases()[1]);
}

#[test]
fn step_sizes() {
    let (state, phase) = first_phase(1);
    let bounds = max_feasible_alpha(&state, &phase).unwrap();
    assert_eq!(bounds.alpha, Extended::Finite(q(3)));
    let after = apply_extension(&state, phase, &q(3)).unwrap();
    assert_eq!(after.labels()[T.0], q(11));
    assert_eq!(after.flows()[E2.0], q(9));
    let inst = after.thin_flow_instance();
    let sol = solve_thin_flow(&inst).unwrap();
    let second = after.phase_profile(&inst, &sol);
    assert_eq!(max_feasible_alpha(&after, &second).unwrap().alpha, Extended::Infinite);

    let (state, phase) = first_phase(2);
    assert_eq!(max_feasible_alpha(&state, &phase).unwrap().alpha, Extended::Finite(q(6)));
    assert!(apply_extension(&state, phase.clone(), &q(0)).is_err());
    let after = apply_extension(&state, phase, &q(6)).unwrap();
    assert_eq!(after.classes().spillback, vec![false, true, false]);
    assert_eq!(after.inflow_bounds()[E2.0], q(2));
}

#[test]
fn single_arc_is_steady_from_the_start() {
    let net = validate_network(&single_arc(2, 3)).unwrap();
    let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();
    assert_eq!(traj.phases().len(), 1);
    assert_eq!(traj.termination(), nashflow::Termination::SteadyState);
    for t in [0, 1, 7] {
        assert_eq!(traj.label(NodeId(1)).eval(&q(t)), q(t + 2));
    }
}

#[test]
fn cumulative_identity_and_epsilon() {
    let left = solve(1);
    assert_eq!(left.static_flow(E2).eval(&q(3)), q(9));
    assert_eq!(left.cumulative_inflow(E2).eval(&q(4)), q(9));
    assert_eq!(left.cumulative_outflow(E2).eval(&q(11)), q(9));
    assert_eq!(left.static_flow(E1).eval(&q(0)), q(0));

    assert_eq!(epsilon_lower_bound(&intro_network(1)).epsilon, ratio(1, 1000));
    let unit: Network = {
        let mut n = single_arc(1, 1);
        n.arcs[0].inflow_cap = q(1);
        n
    };
    assert_eq!(epsilon_lower_bound(&unit).epsilon, q(1));
}
