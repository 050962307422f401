//! Spatial competition with congestion costs.
//!
//! Facilities choose locations on the unit market, clients split between them
//! trading off distance against facility load with weight `alpha`. This crate
//! solves the client equilibrium of any placement, evaluates facility
//! deviations and approximation factors, evaluates the known analytic
//! approximation factors of the canonical placements, and runs the
//! agent-based discretization of the market.
//!
//! Indices are 0-based throughout the library.

pub mod closed_form;
pub mod deviation;
pub mod discrete;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod report;

pub use closed_form::{
    cont_frac, placement, quality_pair, rho_general, rho_small, rho_three, sc_opt, ContFracKind,
    PlacementKind,
};
pub use deviation::{
    approximation_factor, best_response, deviation_utility, improvement_factors, BestResponse,
    ResponseSide, DEFAULT_GRID,
};
pub use discrete::{
    build_grid, discrete_potential, empirical_client_equilibrium, facility_best_response_scan,
    improvement_factors_empirical, Assignment, ClientGrid, DiscretePlacement, SimConfig,
};
pub use equilibrium::{
    solve_client_equilibrium, solve_client_equilibrium_from, EquilibriumSolution, DEFAULT_TOL,
};
pub use error::{Error, Result};
pub use model::{
    client_cost, interval_distance, loads_from_borders, potential, social_cost, Borders,
    CostBreakdown, ModelParams, Placement,
};
pub use report::{FacilityImprovement, ImprovementReport};
