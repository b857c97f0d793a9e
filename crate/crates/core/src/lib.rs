//! Coupled influence-network model of a composite socio-economic system.
//!
//! Subsystem performance is aggregated from dynamic relationship strengths and fixed utility
//! weights; strengths evolve from the ratio of consecutive performance changes. The crate also
//! calibrates utility weights and initial strengths from observed data, audits an external
//! development index through the quality proportioning coefficient, and ranks subsystems by
//! principal-component loading.

pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod scenario;
pub mod types;

pub use analysis::{
    influence_centrality, influence_ranking, quality_coefficient, trend, Centrality,
    InfluenceRanking, ObservationDesign, QualityPoint, TrendClass, TrendReport,
};
pub use calibration::{
    solve_utility_min_norm, tune_initial_r, verify_min_norm, CalibrationReport, LinearForward,
    PolicyFunction, TuneOptions,
};
pub use error::{Error, ParseKind, Result};
pub use model::{
    compute_weights, simulate, step, update_matrix, update_relationship, Branch, BranchCounts,
    ModelState, SimulationTrace, StepOutcome, TraceStep,
};
pub use scenario::{Scenario, UtilitySpec};
pub use types::{
    InfluenceMatrix, ModelOptions, PerformanceVector, PolicyIntervention, SubsystemSet,
    UtilityMatrix,
};
