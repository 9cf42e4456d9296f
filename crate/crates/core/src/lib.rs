//! Numerical toolkit for Einstein deformations of hyperbolic manifolds near
//! thin tubes: hyperboloid geometry, tube quotients by loxodromic isometries,
//! orbit counting through torus reductions, finite-difference calculus for
//! warped tube metrics, and the spectral/weighted-norm checks built on top.

pub mod error;
pub mod hyperbolic;
pub mod sampling;
pub mod spectral;
pub mod torus;
pub mod tube;
pub mod warped;

pub use error::{Error, Result};
