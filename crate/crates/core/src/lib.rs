//! Exact computation and validation of dynamic equilibria (Nash flows over
//! time) in the deterministic queuing model with spillback.
//!
//! The equilibrium is built phase by phase: at every phase start the current
//! shortest-path network is classified, a spillback thin flow is solved on it,
//! and the labels and flows are extended linearly for the largest feasible
//! step. All arithmetic is exact over arbitrary-precision rationals.
//!
//! ```
//! use nashflow::{engine, fixtures, network};
//!
//! let net = network::validate_network(&fixtures::intro_network(1)).unwrap();
//! let traj = engine::compute_nash_flow(&net, &engine::TerminationPolicy::default()).unwrap();
//! assert_eq!(traj.phases().len(), 2);
//! ```

pub mod cli;
pub mod dynamics;
pub mod engine;
pub mod fixtures;
pub mod io;
pub mod network;
pub mod num;
pub mod pwl;
pub mod svg;
pub mod thinflow;
pub mod validator;

pub use dynamics::{EquilibriumTrajectory, PhaseProfile, Termination};
pub use network::{ArcId, ArcParams, Network, NodeId, ValidatedNetwork};
pub use num::{Extended, Q};
pub use pwl::{PiecewiseConstant, PiecewiseLinear};
