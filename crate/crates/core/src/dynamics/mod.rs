//! Transport with transmission conditions: coefficient tables, characteristics, the
//! superposition formula and a particle solver.

mod characteristics;
mod model;
mod pwl;
mod simulate;

pub use characteristics::{
    accumulate_g, branching_eta, characteristic_x, hitting_time_tau, superposition_eval, BranchingMeasure,
    Displacement, StepIntegral,
};
pub use model::{ModelCoefficients, ModelFile, SolverSettings};
pub use pwl::PiecewiseLinearFn;
pub use simulate::{simulate, simulate_with, Trajectory};
