//! Solvers for l1-penalized least-squares regression.
//!
//! The central object is the minimizer of
//! `||Kx - y||^2 + 2 lambda sum_i w_i |x_i|`, which is piecewise linear
//! as a function of the penalty `lambda`. The [`homotopy`] module walks
//! that path exactly; [`iterative`] provides five approximation schemes;
//! [`path`] interpolates and certifies computed paths.
//!
//! Everything is generic over the [`scalar::Scalar`] backend: `f64` for
//! speed, [`Rational`] for bit-exact results.

pub mod error;
pub mod experiment;
pub mod homotopy;
pub mod io;
pub mod iterative;
pub mod linalg;
pub mod ops;
pub mod path;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Scalar, Tolerance};

/// Exact arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

/// Concrete problem types for the two backends.
pub type RationalProblem = homotopy::Problem<Rational>;
pub type FloatProblem = homotopy::Problem<f64>;

pub type RationalVector = linalg::Vector<Rational>;
pub type FloatVector = linalg::Vector<f64>;
pub type RationalMatrix = linalg::Matrix<Rational>;
pub type FloatMatrix = linalg::Matrix<f64>;

pub type RationalPath = path::Path<Rational>;
pub type FloatPath = path::Path<f64>;
