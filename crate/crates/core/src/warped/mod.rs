//! Finite-difference calculus for warped tube metrics.

pub mod diff;
pub mod einstein;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod newton;
pub mod operators;

pub use einstein::{detect_einstein, einstein_operator, EinsteinReport};
pub use field::{OneForm, ScalarField, WarpedField, WarpedMetric};
pub use geometry::{bianchi, warped_ricci};
pub use grid::{FdOrder, TubeGrid};
pub use newton::{newton_solve, NewtonOptions, NewtonOutcome};
pub use operators::{
    covariant_laplacian, lichnerowicz, linearized_einstein, weitzenboeck_constant_curvature, weitzenboeck_pointwise,
};
