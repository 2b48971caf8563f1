//! Discrete-velocity solver for the Shakhov relaxation model of the
//! Boltzmann equation, together with the linearization toolbox around the
//! global Maxwellian and the verification machinery for the model's exact
//! identities (conservation, heat-flux cancellation, coercivity dichotomy,
//! H-functional monotonicity, third-moment evolution).
//!
//! Layout:
//! - [`grid`]: truncated velocity lattice and the quadrature defining every
//!   `dv` integral,
//! - [`moments`]: macroscopic fields `(rho, U, T, Theta, q)` and the derived
//!   `(G, H)` moments,
//! - [`shakhov`]: local Maxwellian, Shakhov target, relaxation time, and the
//!   pointwise/momentwise operator identities,
//! - [`linear`]: perturbation transform, the 13- and 8-element bases,
//!   projections, the linearized operator, the nonlinear residual, and the
//!   Jacobian pair of the macroscopic change of variables,
//! - [`solver`]: transport/relaxation stepping with Strang splitting plus run
//!   diagnostics,
//! - [`verify`]: the executable check suites behind the CLI subcommands.

pub mod checkpoint;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linear;
pub mod moments;
pub mod reference;
pub mod sampling;
pub mod shakhov;
pub mod solver;
pub mod verify;

pub use error::Error;
pub use grid::{build_grid, DistributionField, FieldKind, VelocityGrid};
pub use moments::{compute_gh, compute_macro, GhMoments, MacroState};
pub use shakhov::ModelParams;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
