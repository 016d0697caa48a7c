//! Kirchhoff flows on conductance networks with mixed pressure and flow
//! boundary conditions, and optimization of the conductances for minimal
//! dissipation or minimal complementary dissipation under a material
//! constraint or penalty.
//!
//! The crate is organized around five pieces:
//!
//! - [`network`]: graph topology, edge weights, boundary conditions and
//!   validated views of the positive-conductance subgraph;
//! - [`solver`]: assembly and dense direct solution of the pressure system,
//!   gauge handling and boundary-condition superposition;
//! - [`energy`]: dissipation, pressure work, complementary dissipation,
//!   material cost and the penalized objective;
//! - [`optimizer`]: conductance refitting along the cube-root flow law,
//!   loop and path current descent, pruning, and the constrained and
//!   penalized drivers;
//! - [`topology`]: forest and connection certificates plus the conformance
//!   residual of the conductance-flow law.

pub mod energy;
pub mod network;
pub mod optimizer;
pub mod solver;
pub mod topology;

pub use energy::{
    complementary_dissipation, dissipation, material_cost, penalty_objective, pressure_work,
    EnergyError, EnergyReport, Objective,
};
pub use network::{
    connected_components, default_prune_threshold, positive_subgraph, Boundary, Component,
    ConductanceError, Conductances, Edge, Network, NetworkBuilder, OrientedEdge, SubgraphView,
    ValidationReport, Violation,
};
pub use optimizer::{
    loop_current_minimize, material_of_penalty, murray_conductances, optimize_constrained,
    optimize_penalized, path_current_minimize, penalty_stationarity_residual,
    prune_and_redistribute, relax_flows, OptimizeConfig, OptimizeError, OptimizeMode,
    OptimizeResult, Termination,
};
pub use solver::{
    assemble_system, decompose_flow, solve_kirchhoff, FlowState, Gauge, LinearSystem, SolverError,
};
pub use topology::{
    analyze, equal_pressure_connection, fundamental_cycles, is_forest, murray_residual,
    pressures_equal, TopologyReport,
};
