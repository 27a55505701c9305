use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid resolution {0} is below the minimum of 4 cells per axis")]
    ResolutionTooSmall(usize),
    #[error("domain half-width must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("the 2D domain is the unit disk; half-width must be 1, got {0}")]
    DiskRadius(f64),
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("field has {found} values but the grid has {expected} active cells")]
    FieldLength { expected: usize, found: usize },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("CFL violation: Courant number {0} exceeds 1")]
    CflViolation(f64),
    #[error("negative density {value:e} in cell {cell} exceeds the clamp threshold")]
    NegativeDensity { value: f64, cell: usize },
    #[error("time step {dt} exceeds the stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("parameters lie on a classification boundary: {0}")]
    BoundaryCase(&'static str),
    #[error("neither species has a positive net growth rate")]
    NoViableSpecies,
    #[error("history frames must have strictly increasing times (got {0} after {1})")]
    NonMonotoneHistory(f64, f64),
    #[error("time {t} lies outside the stored history [{start}, {end}]")]
    OutsideHistory { t: f64, start: f64, end: f64 },
    #[error("characteristic left the domain by {0:e}")]
    DomainExit(f64),
    #[error("cluster {0} has no overlap with the active cells")]
    EmptyCluster(usize),
    #[error("invalid proliferation series: {0}")]
    InvalidSeries(&'static str),
    #[error("objective has no interior minimum in [{lo}, {hi}]")]
    NoInteriorMinimum { lo: f64, hi: f64 },
    #[error("output sink failed: {0}")]
    Sink(String),
}
