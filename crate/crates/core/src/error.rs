use thiserror::Error;

/// Errors surfaced by grid construction, moment extraction, and time stepping.
#[derive(Debug, Error)]
pub enum Error {
    #[error("odd node count: n_per_axis = {0} breaks the v -> -v lattice symmetry")]
    OddNodeCount(usize),

    #[error("n_per_axis = {0} is below the minimum of 8; Gaussians would be under-resolved")]
    TooFewNodes(usize),

    #[error("v_max = {0} is below the minimum of 4; Gaussian tails would be truncated")]
    DomainTooSmall(f64),

    #[error("field length {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("cell index {cell} out of range (n_cells = {n_cells})")]
    CellOutOfRange { cell: usize, n_cells: usize },

    #[error("vacuum state at cell {cell}: density {rho:.3e} is below the floor {floor:.1e}")]
    Vacuum { cell: usize, rho: f64, floor: f64 },

    #[error("nonpositive temperature {0:.3e}")]
    NonpositiveTemperature(f64),

    #[error("nonpositive density {0:.3e}")]
    NonpositiveDensity(f64),

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("CFL violation: |v| dt / dx = {ratio:.3} exceeds the limit {limit}")]
    CflViolation { ratio: f64, limit: f64 },

    #[error("relaxation stability violation: dt = {dt} exceeds {fraction} * tau = {bound:.6e}")]
    RelaxationUnstable { dt: f64, fraction: f64, bound: f64 },

    #[error("perturbation too large for the linearized contract: ||f|| = {0:.3e} > 0.1")]
    PerturbationTooLarge(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered at cell {cell}")]
    NonFinite { cell: usize },

    #[error("decay fit needs at least {needed} samples above the norm floor, got {got}")]
    DegenerateFitWindow { needed: usize, got: usize },

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
