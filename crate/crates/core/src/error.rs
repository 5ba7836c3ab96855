use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative weight {weight} at position {position}")]
    NegativeWeight { position: f64, weight: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid breakpoint grid: {0}")]
    InvalidGrid(String),
    #[error("invalid piecewise-linear table: {0}")]
    InvalidTable(String),
    #[error("total masses differ ({0} vs {1}); Wasserstein-1 is unbounded")]
    UnequalMass(f64, f64),
    #[error("Wasserstein-1 needs positive total mass")]
    ZeroMass,
    #[error("measure-transmission metric requires a breakpoint grid")]
    MissingGrid,
    #[error("oracle support of {size} atoms exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("time {t} outside sampled range [0, {end}]")]
    OutOfRange { t: f64, end: f64 },
    #[error("{0}")]
    ExampleOutOfRange(String),
    #[error("invalid time step: {0}")]
    InvalidStep(String),
    #[error("horizon {t} is not below T_max = {t_max}")]
    HorizonExceeded { t: f64, t_max: f64 },
    #[error("branching time {r} precedes arrival time {tau}")]
    BranchBeforeArrival { r: f64, tau: f64 },
    #[error("g1 has non-positive infimum {0} on the admissible range")]
    NonPositiveSpeed(f64),
    #[error("local stability denominator is non-positive ({0}); shrink the horizon")]
    DenominatorNonpositive(f64),
    #[error("model violates assumption {0}")]
    AssumptionViolated(String),
    #[error("LP solver failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
