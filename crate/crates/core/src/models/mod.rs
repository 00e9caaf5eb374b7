//! Discrete models: loop-erased walks, uniform spanning trees and their
//! Peano contours, triangular-lattice percolation, reflected walks and
//! half-plane excursions.

mod excursion;
mod lerw;
mod percolation;
mod ust;
mod walks;

pub use excursion::{
    excursion_against_hull, excursion_avoid_experiment, halfplane_survival_indicator,
    sample_brownian_excursion, ExcursionReport, ExcursionRun,
};
pub use lerw::{
    lerw_conditioned_law, lerw_exact_law, loop_erase, path_law_tv, sample_lerw, LERW_REJECTION_CAP,
};
pub use percolation::{
    annulus_cells, arc_crossing, arm_count, arm_experiment, arm_indicator,
    cardy_crossing_experiment, crossing, exploration_domain, exploration_interface,
    exploration_walk, extract_interface, keyed_color, percolation_sample, percolation_sample_keyed,
    rhombus, rhombus_crossing_experiment, rle_decode, rle_dump, triangle_cells, CardyReport,
    CrossingDirection, ExplorationPath, PercolationConfig,
};
pub use ust::{tree_path, ust_peano, wilson_ust, wilson_ust_wired, PeanoCurve, SpanningTree};
pub use walks::{
    disc_coordinate, halfplane_position, halfplane_reflected_walk,
    reflected_nondisconnection_experiment, reflected_nondisconnection_indicator, wedge_exact_law,
    wedge_point, wedge_reflected_walk, wedge_transitions, wedge_uniformity_experiment,
    NondisconnectionEstimate, WedgeState, NONDISCONNECTION_CAP,
};
