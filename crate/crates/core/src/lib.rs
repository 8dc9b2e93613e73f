//! Numerical laboratory for globally expanding free-boundary gas flows with a
//! self-consistent Newtonian field.
//!
//! The library is organised around the Lagrangian picture of a compressible
//! polytropic gas occupying an expanding ellipsoidal domain:
//!
//! * [`affine`] — the background matrix ODE driving the ellipsoidal expansion,
//!   its conserved energy, derived frame quantities, and an independent
//!   Picard-iteration oracle used to cross-validate the integrator.
//! * [`profiles`] — the enthalpy profile on the reference unit ball, induced
//!   density/velocity fields of the background motion, and admissibility
//!   diagnostics for the adiabatic exponent.
//! * [`geometry`] — a tensor-product grid on the unit ball with
//!   polynomially-exact differentiation and quadrature, tangential/radial
//!   vector fields, flow-map derivatives, and Lie (pullback) operators.
//! * [`field`] — the anisotropic Green kernel, the nonlocal force field via
//!   direct singular convolution, and identity checks (divergence/curl
//!   structure, normal reconstruction from tangential data).
//! * [`dynamics`] — time integration of the perturbation system on top of the
//!   background frame: a radial one-dimensional mode and a coarse
//!   three-dimensional mode.
//! * [`monitors`] — weighted high-order energy, vorticity and dissipation
//!   norms, curl-transport residuals, and decay-rate fits.
//!
//! All floating point work is `f64`. Every routine is deterministic: identical
//! inputs produce bit-identical outputs.

pub mod affine;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod monitors;
pub mod numerics;
pub mod params;
pub mod profiles;

pub use error::Error;
pub use params::{FieldSign, GasParams};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
