//! JSON documents for networks, thin-flow instances, trajectories and reports.
//!
//! Rationals are written as strings `"p/q"` (integers may also be plain JSON
//! numbers on input). Storage may be `"inf"` and an inflow capacity may be
//! `"auto"`, which resolves to one more than the total outflow capacity that
//! can reach the arc's tail, so the arc never restricts inflow.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dynamics::{DynamicsError, EquilibriumTrajectory, PhaseProfile, Termination};
use crate::network::{ArcId, ArcParams, Network, NodeId};
use crate::num::{self, serde_ext, serde_q, serde_q_vec, Extended, Q};
use crate::pwl::{ConstantTable, LinearTable, PiecewiseConstant, PiecewiseLinear, PwlError};
use crate::thinflow::{ThinFlowArc, ThinFlowInstance, ThinFlowOutcome, ThinFlowReport, TfSubject};

pub const TRAJECTORY_FORMAT: &str = "nashflow-trajectory/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {message}")]
    Field { context: String, message: String },
    #[error("{context}: unknown node {name:?}")]
    UnknownNode { context: String, name: String },
    #[error("node {0:?} is listed twice")]
    DuplicateNode(String),
    #[error("{context}: {source}")]
    Table {
        context: String,
        #[source]
        source: PwlError,
    },
    #[error("inconsistent trajectory: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

fn field(context: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Field { context: context.into(), message: message.into() }
}

fn rational(v: &Value, context: &str) -> Result<Q, IoError> {
    serde_q::value_to_q(v).map_err(|m| field(context, m))
}

fn q_value(q: &Q) -> Value {
    Value::String(num::format_rational(q))
}

struct NodeIndex<'a>(&'a [String]);

impl NodeIndex<'_> {
    fn new(names: &[String]) -> Result<NodeIndex<'_>, IoError> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(IoError::DuplicateNode(n.clone()));
            }
        }
        Ok(NodeIndex(names))
    }

    fn get(&self, name: &str, context: &str) -> Result<NodeId, IoError> {
        self.0
            .iter()
            .position(|n| n == name)
            .map(NodeId)
            .ok_or_else(|| IoError::UnknownNode { context: context.into(), name: name.into() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcEntry>,
    pub source: String,
    pub sink: String,
    pub rate: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tail: String,
    pub head: String,
    pub transit: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<Value>,
    pub cap_in: Value,
    pub cap_out: Value,
}

impl NetworkFile {
    pub fn to_network(&self) -> Result<Network, IoError> {
        let index = NodeIndex::new(&self.nodes)?;
        let mut arcs = Vec::with_capacity(self.arcs.len());
        let mut auto = Vec::new();
        for (k, a) in self.arcs.iter().enumerate() {
            let name = a.name.clone().unwrap_or_else(|| format!("e{}", k + 1));
            let ctx = |f: &str| format!("arc {name}, field {f}");
            let storage = match &a.storage {
                None => Extended::Infinite,
                Some(Value::String(s)) => num::parse_extended(s).map_err(|e| field(ctx("storage"), e.to_string()))?,
                Some(v) => Extended::Finite(rational(v, &ctx("storage"))?),
            };
            let inflow_cap = if a.cap_in == Value::String("auto".into()) {
                auto.push(k);
                Q::from_integer(0.into())
            } else {
                rational(&a.cap_in, &ctx("cap_in"))?
            };
            arcs.push(ArcParams {
                tail: index.get(&a.tail, &ctx("tail"))?,
                head: index.get(&a.head, &ctx("head"))?,
                transit: rational(&a.transit, &ctx("transit"))?,
                storage,
                inflow_cap,
                outflow_cap: rational(&a.cap_out, &ctx("cap_out"))?,
                name,
            });
        }
        let mut net = Network {
            node_names: self.nodes.clone(),
            arcs,
            source: index.get(&self.source, "source")?,
            sink: index.get(&self.sink, "sink")?,
            inflow_rate: rational(&self.rate, "rate")?,
        };
        for k in auto {
            net.arcs[k].inflow_cap = net.unrestricted_inflow_cap(net.arcs[k].tail);
        }
        Ok(net)
    }

    pub fn from_network(net: &Network) -> Self {
        NetworkFile {
            nodes: net.node_names.clone(),
            arcs: net
                .arcs
                .iter()
                .map(|a| ArcEntry {
                    name: Some(a.name.clone()),
                    tail: net.node_names[a.tail.0].clone(),
                    head: net.node_names[a.head.0].clone(),
                    transit: q_value(&a.transit),
                    storage: Some(Value::String(a.storage.to_string())),
                    cap_in: q_value(&a.inflow_cap),
                    cap_out: q_value(&a.outflow_cap),
                })
                .collect(),
            source: net.node_names[net.source.0].clone(),
            sink: net.node_names[net.sink.0].clone(),
            rate: q_value(&net.inflow_rate),
        }
    }
}

pub fn parse_network(text: &str) -> Result<Network, IoError> {
    serde_json::from_str::<NetworkFile>(text)?.to_network()
}

pub fn network_to_json(net: &Network) -> String {
    to_json(&NetworkFile::from_network(net))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinFlowFile {
    pub nodes: Vec<String>,
    pub source: String,
    pub sink: String,
    pub demand: Value,
    pub arcs: Vec<ThinFlowArcEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinFlowArcEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tail: String,
    pub head: String,
    pub cap_out: Value,
    pub inflow_bound: Value,
    #[serde(default)]
    pub resetting: bool,
}

/// A thin-flow instance with the names used in its file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedInstance {
    pub instance: ThinFlowInstance,
    pub node_names: Vec<String>,
    pub arc_names: Vec<String>,
}

pub fn parse_thin_flow_instance(text: &str) -> Result<NamedInstance, IoError> {
    let file: ThinFlowFile = serde_json::from_str(text)?;
    let index = NodeIndex::new(&file.nodes)?;
    let mut arcs = Vec::new();
    let mut arc_names = Vec::new();
    for (k, a) in file.arcs.iter().enumerate() {
        let name = a.name.clone().unwrap_or_else(|| format!("e{}", k + 1));
        let ctx = |f: &str| format!("arc {name}, field {f}");
        arcs.push(ThinFlowArc {
            id: ArcId(k),
            tail: index.get(&a.tail, &ctx("tail"))?,
            head: index.get(&a.head, &ctx("head"))?,
            outflow_cap: rational(&a.cap_out, &ctx("cap_out"))?,
            inflow_bound: rational(&a.inflow_bound, &ctx("inflow_bound"))?,
            resetting: a.resetting,
        });
        arc_names.push(name);
    }
    let instance = ThinFlowInstance {
        node_count: file.nodes.len(),
        source: index.get(&file.source, "source")?,
        sink: index.get(&file.sink, "sink")?,
        arcs,
        demand: rational(&file.demand, "demand")?,
    };
    Ok(NamedInstance { instance, node_names: file.nodes, arc_names })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcValue {
    pub arc: String,
    #[serde(with = "serde_q")]
    pub flow: Q,
    pub state: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeValue {
    pub node: String,
    #[serde(with = "serde_q")]
    pub label: Q,
    #[serde(with = "serde_q")]
    pub factor: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throttled_by: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationEntry {
    pub condition: String,
    pub subject: String,
    #[serde(with = "serde_q")]
    pub lhs: Q,
    #[serde(with = "serde_q")]
    pub rhs: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinFlowDocument {
    pub arcs: Vec<ArcValue>,
    pub nodes: Vec<NodeValue>,
    pub programs_solved: usize,
    pub valid: bool,
    pub violations: Vec<ViolationEntry>,
    pub alternatives: usize,
}

pub fn thin_flow_document(named: &NamedInstance, outcome: &ThinFlowOutcome, report: &ThinFlowReport) -> ThinFlowDocument {
    let sol = &outcome.solution;
    let cfg = &outcome.configuration;
    ThinFlowDocument {
        arcs: named
            .arc_names
            .iter()
            .enumerate()
            .map(|(k, name)| ArcValue {
                arc: name.clone(),
                flow: sol.flow[k].clone(),
                state: format!("{:?}", cfg.arc_states[k]).to_lowercase(),
            })
            .collect(),
        nodes: named
            .node_names
            .iter()
            .enumerate()
            .map(|(v, name)| NodeValue {
                node: name.clone(),
                label: sol.labels[v].clone(),
                factor: sol.factors[v].clone(),
                throttled_by: cfg.throttle[v].map(|k| named.arc_names[k].clone()),
            })
            .collect(),
        programs_solved: outcome.programs_solved,
        valid: report.is_valid(),
        violations: report
            .violations
            .iter()
            .map(|v| ViolationEntry {
                condition: format!("{:?}", v.condition),
                subject: match v.subject {
                    TfSubject::Node(n) => named.node_names[n.0].clone(),
                    TfSubject::Arc(e) => named.arc_names[e.0].clone(),
                },
                lhs: v.lhs.clone(),
                rhs: v.rhs.clone(),
            })
            .collect(),
        alternatives: outcome.alternatives.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRow {
    #[serde(with = "serde_q")]
    pub start: Q,
    /// `ℓ_v(φ)` per node.
    #[serde(with = "serde_q_vec")]
    pub labels: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    pub label_rates: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    pub factors: Vec<Q>,
    /// `x_e(φ)` per arc.
    #[serde(with = "serde_q_vec")]
    pub flows: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    pub flow_rates: Vec<Q>,
    /// Per arc: `A` active, `R` resetting, `F` full (spillback).
    pub classes: Vec<String>,
    #[serde(with = "serde_q_vec")]
    pub inflow_bounds: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFunctions {
    pub node: String,
    pub label: LinearTable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcFunctions {
    pub arc: String,
    pub static_flow: LinearTable,
    pub inflow: ConstantTable,
    pub outflow: ConstantTable,
    pub cumulative_inflow: LinearTable,
    pub cumulative_outflow: LinearTable,
    pub queue: LinearTable,
    pub load: LinearTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryExport {
    pub format: String,
    pub network: NetworkFile,
    #[serde(with = "serde_ext")]
    pub end: Extended,
    pub termination: Termination,
    pub phases: Vec<PhaseRow>,
    pub nodes: Vec<NodeFunctions>,
    pub arcs: Vec<ArcFunctions>,
}

fn class_flags(p: &PhaseProfile, k: usize) -> String {
    let mut s = String::new();
    for (set, c) in [(&p.active, 'A'), (&p.resetting, 'R'), (&p.spillback, 'F')] {
        if set[k] {
            s.push(c);
        }
    }
    s
}

impl TrajectoryExport {
    pub fn from_trajectory(traj: &EquilibriumTrajectory) -> Self {
        let net = traj.network();
        let phases = traj
            .phases()
            .iter()
            .map(|p| PhaseRow {
                start: p.start.clone(),
                labels: traj.labels_at(&p.start),
                label_rates: p.label_rates.clone(),
                factors: p.factors.clone(),
                flows: net.arc_ids().map(|e| traj.static_flow(e).eval(&p.start)).collect(),
                flow_rates: p.flow_rates.clone(),
                classes: (0..net.arc_count()).map(|k| class_flags(p, k)).collect(),
                inflow_bounds: p.inflow_bounds.clone(),
            })
            .collect();
        TrajectoryExport {
            format: TRAJECTORY_FORMAT.into(),
            network: NetworkFile::from_network(net),
            end: traj.end().clone(),
            termination: traj.termination(),
            phases,
            nodes: net
                .node_ids()
                .map(|v| NodeFunctions { node: net.node_name(v).into(), label: traj.label(v).into() })
                .collect(),
            arcs: net
                .arc_ids()
                .map(|e| ArcFunctions {
                    arc: net.arc(e).name.clone(),
                    static_flow: traj.static_flow(e).into(),
                    inflow: traj.inflow(e).into(),
                    outflow: traj.outflow(e).into(),
                    cumulative_inflow: traj.cumulative_inflow(e).into(),
                    cumulative_outflow: traj.cumulative_outflow(e).into(),
                    queue: (&traj.queue_function(e)).into(),
                    load: (&traj.load_function(e)).into(),
                })
                .collect(),
        }
    }

    /// Rebuilds the trajectory from its function tables. Derived tables and
    /// the per-phase values must agree with the primary functions.
    pub fn to_trajectory(&self) -> Result<EquilibriumTrajectory, IoError> {
        if self.format != TRAJECTORY_FORMAT {
            return Err(field("format", format!("expected {TRAJECTORY_FORMAT:?}, found {:?}", self.format)));
        }
        let net = self.network.to_network()?;
        let (n, m) = (net.node_count(), net.arc_count());
        if self.nodes.len() != n || self.arcs.len() != m {
            return Err(IoError::Inconsistent("function tables do not match the network".into()));
        }
        let linear = |t: &LinearTable, ctx: String| {
            PiecewiseLinear::try_from(t).map_err(|source| IoError::Table { context: ctx, source })
        };
        let constant = |t: &ConstantTable, ctx: String| {
            PiecewiseConstant::try_from(t).map_err(|source| IoError::Table { context: ctx, source })
        };
        let mut labels = Vec::with_capacity(n);
        for (v, f) in self.nodes.iter().enumerate() {
            if f.node != net.node_names[v] {
                return Err(IoError::Inconsistent(format!("node table {} is out of order", f.node)));
            }
            labels.push(linear(&f.label, format!("label of {}", f.node))?);
        }
        let (mut static_flow, mut inflow, mut outflow) = (Vec::new(), Vec::new(), Vec::new());
        for (k, f) in self.arcs.iter().enumerate() {
            if f.arc != net.arcs[k].name {
                return Err(IoError::Inconsistent(format!("arc table {} is out of order", f.arc)));
            }
            static_flow.push(linear(&f.static_flow, format!("static flow of {}", f.arc))?);
            inflow.push(constant(&f.inflow, format!("inflow of {}", f.arc))?);
            outflow.push(constant(&f.outflow, format!("outflow of {}", f.arc))?);
        }
        let mut phases = Vec::with_capacity(self.phases.len());
        for (i, row) in self.phases.iter().enumerate() {
            if row.label_rates.len() != n || row.factors.len() != n || row.labels.len() != n {
                return Err(IoError::Inconsistent(format!("phase {i} has the wrong number of node values")));
            }
            if row.flow_rates.len() != m || row.classes.len() != m || row.inflow_bounds.len() != m || row.flows.len() != m
            {
                return Err(IoError::Inconsistent(format!("phase {i} has the wrong number of arc values")));
            }
            let flag = |c: char| row.classes.iter().map(|s| s.contains(c)).collect::<Vec<_>>();
            if let Some(bad) = row.classes.iter().find(|s| s.chars().any(|c| !"ARF".contains(c))) {
                return Err(field(format!("phase {i}, classes"), format!("unknown flags {bad:?}")));
            }
            phases.push(PhaseProfile {
                start: row.start.clone(),
                flow_rates: row.flow_rates.clone(),
                label_rates: row.label_rates.clone(),
                factors: row.factors.clone(),
                active: flag('A'),
                resetting: flag('R'),
                spillback: flag('F'),
                inflow_bounds: row.inflow_bounds.clone(),
            });
        }
        let traj = EquilibriumTrajectory::from_functions(
            net,
            phases,
            self.end.clone(),
            self.termination,
            labels,
            static_flow,
            inflow,
            outflow,
        );
        let again = TrajectoryExport::from_trajectory(&traj);
        for (mine, theirs) in self.arcs.iter().zip(&again.arcs) {
            if mine != theirs {
                return Err(IoError::Inconsistent(format!("derived tables of arc {} disagree with its rates", mine.arc)));
            }
        }
        for (i, (mine, theirs)) in self.phases.iter().zip(&again.phases).enumerate() {
            if mine.labels != theirs.labels || mine.flows != theirs.flows {
                return Err(IoError::Inconsistent(format!("phase {i} values disagree with the functions")));
            }
        }
        Ok(traj)
    }
}

pub fn trajectory_to_json(traj: &EquilibriumTrajectory) -> String {
    to_json(&TrajectoryExport::from_trajectory(traj))
}

pub fn parse_trajectory(text: &str) -> Result<EquilibriumTrajectory, IoError> {
    serde_json::from_str::<TrajectoryExport>(text)?.to_trajectory()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{compute_nash_flow, TerminationPolicy};
    use crate::fixtures::intro_network;
    use crate::network::validate_network;
    use crate::num::int;

    const N1: &str = r#"{
        "nodes": ["s", "v", "t"],
        "arcs": [
            {"name": "e1", "tail": "s", "head": "v", "transit": 1, "storage": "inf", "cap_in": 4, "cap_out": 3},
            {"name": "e2", "tail": "v", "head": "t", "transit": 1, "storage": 8, "cap_in": 3, "cap_out": "1"},
            {"name": "e3", "tail": "v", "head": "t", "transit": 7, "cap_in": "auto", "cap_out": 2}
        ],
        "source": "s", "sink": "t", "rate": 3
    }"#;

    #[test]
    fn parses_intro_network() {
        let net = parse_network(N1).unwrap();
        assert_eq!(net.arcs[2].inflow_cap, int(4));
        assert_eq!(net.arcs[1].storage, Extended::Finite(int(8)));
        assert_eq!(net.arcs[2].storage, Extended::Infinite);
        let mut expected = intro_network(1);
        expected.arcs[2].inflow_cap = int(4);
        assert_eq!(net, expected);
    }

    #[test]
    fn network_round_trip() {
        let net = intro_network(2);
        assert_eq!(parse_network(&network_to_json(&net)).unwrap(), net);
    }

    #[test]
    fn reports_bad_fields() {
        let bad = N1.replace("\"cap_out\": 3", "\"cap_out\": \"three\"");
        assert!(matches!(parse_network(&bad), Err(IoError::Field { .. })));
        let bad = N1.replace("\"head\": \"v\"", "\"head\": \"w\"");
        assert!(matches!(parse_network(&bad), Err(IoError::UnknownNode { .. })));
        let bad = N1.replace("\"cap_out\": 3", "\"cap_out\": 1.5");
        assert!(parse_network(&bad).is_err());
    }

    #[test]
    fn trajectory_round_trip_is_lossless() {
        for cap in [1, 2] {
            let net = validate_network(&intro_network(cap)).unwrap();
            let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();
            let text = trajectory_to_json(&traj);
            let back = parse_trajectory(&text).unwrap();
            assert_eq!(trajectory_to_json(&back), text);
            assert_eq!(back.phases(), traj.phases());
        }
    }

    #[test]
    fn rejects_edited_derived_table() {
        let net = validate_network(&intro_network(1)).unwrap();
        let traj = compute_nash_flow(&net, &TerminationPolicy::default()).unwrap();
        let mut doc = TrajectoryExport::from_trajectory(&traj);
        doc.arcs[0].queue.left_slope = int(5);
        assert!(matches!(doc.to_trajectory(), Err(IoError::Inconsistent(_))));
    }
}
