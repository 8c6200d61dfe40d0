//! Solver toolkit for designing hub-and-shuttle transit networks.
//!
//! The problem: given a set of trips on a metric, a set of candidate hubs and
//! a cost model, decide which directed hub-to-hub bus legs to open so that the
//! combined cost of opening legs and routing every trip (by taxi, by bus on
//! open legs, or a mix) is minimal. The main solver is a Benders decomposition
//! with per-trip shortest-path subproblems, Pareto-optimal cuts, cut bundling
//! and core-point updates; a monolithic MIP and a brute-force enumerator serve
//! as oracles.

pub mod benders;
pub mod cuts;
pub mod export;
pub mod generator;
pub mod instance;
pub mod lp;
pub mod mip;
pub mod monolith;
pub mod pmedian;
pub mod preprocess;
pub mod subproblem;

pub use benders::{solve_benders, BendersConfig, BendersRun};
pub use cuts::BundlingScheme;
pub use instance::{CostParams, Instance, Node, Trip};
