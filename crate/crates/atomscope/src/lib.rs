//! Pseudo-relativistic Thomas-Fermi and Hartree-Fock models of heavy atoms,
//! with numerical checks of the inequalities that relate them.
//!
//! Units are Hartree atomic units with the kinetic energy
//! `alpha^-1 (sqrt(-Delta + alpha^-2) - alpha^-1)`, which reduces to `-Delta/2`
//! as `alpha -> 0`. The coupling `kappa = Z alpha` must stay below `2/pi`.

pub mod error;
pub mod expcli;
pub mod hartreefock;
pub mod ode;
pub mod quadrature;
pub mod radial;
pub mod relkin;
pub mod semiclassics;
pub mod thomasfermi;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

pub use error::{Error, Result};

/// Scalar type accepted by the generic numerical kernels.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}

pub type KineticSymbol = relkin::KineticSymbol<f64>;
pub type DaubechiesFunctional = relkin::DaubechiesFunctional<f64>;
pub type Quadrature = quadrature::Quadrature<f64>;
