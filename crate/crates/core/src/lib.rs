//! Sharp-front self-similar solution of one-dimensional nonlinear magnetic
//! diffusion with a step-function resistivity and a constant boundary field,
//! together with an independent finite-volume simulator and the comparison
//! harness used to check one against the other.
//!
//! Units throughout are cm, µs, 10³ T, 10⁵ J/cm³ and 10² mΩ·cm. In that unit
//! group the vacuum permeability is the dimensionless number 4π×10⁻²
//! (see [`params::MU0_DEFAULT`]).
//!
//! Module map:
//! - [`quadrature`]: adaptive Gauss–Kronrod kernel and the three scaled
//!   integral families every closed-form expression is built from.
//! - [`special`]: erf/erfc/E₁ reference implementations, used as independent
//!   oracles for the quadrature path.
//! - [`exact`]: knee field and front constant, the similarity profile, and
//!   the physical fields `B(x,t)`, `e(x,t)`, `x_c(t)`.
//! - [`simulator`]: explicit conservative finite-volume solver of the coupled
//!   diffusion/heating system.
//! - [`verify`]: error norms, convergence orders and the comparison report.
//! - [`cli`]: configuration loading, command implementations and file output.

pub mod cli;
pub mod error;
pub mod exact;
pub mod interp;
pub mod params;
pub mod quadrature;
pub mod simulator;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{ExactSolution, SimilarityProfile, SolvedConstants};
pub use params::ProblemParams;
pub use quadrature::QuadratureSpec;
pub use exact::FieldProfile;
pub use simulator::{Mesh1D, SimConfig, SimState};
pub use verify::ComparisonReport;


