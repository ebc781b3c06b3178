//! Orientation problems for equal-split flows on tree-shaped power networks:
//! exact flow evaluation, an exhaustive oracle, an exact feasibility and
//! min-max-load solver, rounded-flow approximation schemes, and generators
//! for hard instances.

pub mod exact;
pub mod flow;
pub mod fptas;
pub mod hardgen;
pub mod model;
pub mod oracle;
pub mod rounding;

pub use exact::{solve_min_max_load, valid, MinMaxSolution};
pub use flow::{
    check_feasible, compute_flow, evaluate, objectives, FeasibilityReport, FlowAssignment, Objective, Objectives,
};
pub use fptas::{
    compute_tables, feasible_with_bounds, solve_max_min_load_fptas, solve_min_reserve_fptas, FptasSolution,
    IoTables, TableStats,
};
pub use model::{parse_network, parse_orientation, scale_instance, Capacity, Network, NodeKind, Orientation, Rational};
pub use oracle::{brute_force_io, brute_force_optimum, OracleOptimum};
pub use rounding::{build_grids, rounded_flow, rounded_objectives, LoadWindow, RoundingContext};
