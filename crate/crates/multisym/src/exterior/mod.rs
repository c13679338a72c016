//! Charts, differential forms, multivectors, and the exterior-calculus
//! operators over exact expression coefficients.

mod chart;
mod eval;
mod form;
mod linsolve;

pub use chart::{Chart, ChartError, ChartMap, ChartRef, Coordinate, Role};
pub use eval::{CompiledForm, FormValue};
pub use form::{
    interior_product, lie_derivative, sort_with_sign, DifferentialForm, ExteriorError,
    MultiVector,
};
pub use linsolve::{solve_contraction, SolveOutcome};
