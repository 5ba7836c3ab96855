//! Distances between finitely supported measures on the real line and a particle
//! solver for a structured population transport model with transmission conditions
//! at discrete states.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`, which is what the CLI and the acceptance suite use.

pub mod closed_form;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod measure;
pub mod metrics;
pub mod scalar;
pub mod stability;

pub use closed_form::AnalyticSolution;
pub use dynamics::{
    simulate, simulate_with, ModelCoefficients, ModelFile, PiecewiseLinearFn, SolverSettings, Trajectory,
};
pub use error::{Error, Result};
pub use grid::BreakpointGrid;
pub use measure::{DiscreteMeasure, Interval, SignedAtomVector};
pub use metrics::{distance, flat_metric, metric_oracle, mt_metric, norm_distance, wasserstein1, MetricKind};
pub use scalar::Scalar;
pub use stability::StabilityConstants;

pub type Measure = DiscreteMeasure<f64>;
pub type Grid = BreakpointGrid<f64>;
pub type Model = ModelCoefficients<f64>;
pub type Table = PiecewiseLinearFn<f64>;
pub type Traj = Trajectory<f64>;
pub type Settings = SolverSettings<f64>;
pub type Constants = StabilityConstants<f64>;
