//! Optimal influence-budget allocation over consensus networks.
//!
//! Agents hold opinions `x` that evolve as `dx/dt = -L x + B u + e`, where `L`
//! is the Laplacian of a weighted trust graph and each channel column of `B`
//! is driven by an effort `u_i(t) in [0, u_max_i]` at cost `c_i(u_i)`. Given a
//! budget, the crate finds the schedule maximising a terminal objective:
//!
//! * [`waterfill::solve`] solves the linear objective exactly by spectral
//!   water-filling and returns a bang-bang schedule with a switch-count
//!   certificate;
//! * [`sigmoid::solve_sigmoid`] approximates the sigmoid objective with the
//!   late-decider surrogate;
//! * [`oracle::enumerate_best`] brute-forces small instances;
//! * [`sweep::run_sweep`] tabulates switch bounds over random geometric graphs.

pub mod bounds;
pub mod costate;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod problem;
pub mod scenarios;
pub mod schedule;
pub mod sigmoid;
pub mod sweep;
pub mod waterfill;

pub use bounds::{bound_general, bound_linear, switch_bound_report, Shift, SwitchBoundReport};
pub use costate::{channel_profile, terminal_costate, ChannelProfile, TerminalCostate};
pub use dynamics::{closed_form_gain, objective_value, simulate, Trajectory};
pub use error::{Error, Result};
pub use graph::{
    build_laplacian, random_geometric_graph, spectral_decompose, Laplacian, SpectralDecomposition,
    WeightedGraph,
};
pub use oracle::{enumerate_best, EnumerationSpec, OracleResult};
pub use problem::{
    validate_problem, CampaignProblem, Channel, CostModel, Drift, Finding, Objective, ObjectiveKind,
};
pub use schedule::{BangBangSchedule, ChannelSchedule, ControlSignal, Interval};
pub use sigmoid::{solve_sigmoid, SigmoidConfig, SigmoidSolution};
pub use waterfill::{solve, WaterfillSolution};
