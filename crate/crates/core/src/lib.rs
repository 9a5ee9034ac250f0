//! Periodic cnoidal traveling waves of the regularized Schamel equation
//!
//! ```text
//! u_t - u_xxt + (u + |u|^{3/2})_x = 0
//! ```
//!
//! The crate builds the explicit family `k ↦ φₖ` of `L`-periodic waves,
//! the analytic bottom of the spectrum of the linearized operator via the
//! Lamé equation, the stability functional `Φ` in closed form, and the
//! numerical machinery (collocation eigensolver, quadrature, pseudospectral
//! time stepping) that checks each of those independently.

pub mod error;
pub mod evolution;
pub mod fourier;
pub mod lame;
pub mod operator;
pub mod special;
pub mod stability;
pub mod wave;

pub use error::{Error, Result};
pub use special::EllipticModulus;
pub use wave::WaveParams;
