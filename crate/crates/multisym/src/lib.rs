//! Multisymplectic geometry at desk scale.
//!
//! This crate implements the covariant Hamiltonian formalism for classical
//! mechanics and first-order field theory on coordinate charts:
//!
//! - [`expr`]: exact symbolic scalars (rational functions plus `sin`, `cos`,
//!   `exp`) used as the coefficient field everywhere else;
//! - [`exterior`]: charts, differential forms, multivectors, and the
//!   exterior-calculus operators (wedge, exterior derivative, interior
//!   product, Lie derivative, pullback);
//! - [`mechanics`]: canonical symplectic mechanics on (q, p) charts —
//!   Hamiltonian vector fields, Poisson brackets, implicit-midpoint flow,
//!   symmetry classification, the presymplectic extended phase space, and
//!   weak (on-constraint-surface) bracket checks;
//! - [`ddw`]: covariant field theory — Legendre transforms, the universal
//!   and De Donder-Weyl multisymplectic forms, the first-order field
//!   equations, a leapfrog solver for 1+1-dimensional wave-type systems, and
//!   residual checks in both coordinate and geometric (n-vector) form;
//! - [`observables`]: observable (n-1)-forms, their generating vector
//!   fields and brackets, pseudobrackets along solutions, slice functionals,
//!   and the covariant-phase-space variational identity;
//! - [`report`]: verification report records shared with the CLI.
//!
//! Grid-level evaluations (residuals, slice integrals, pseudobrackets) are
//! data-parallel across grid rows when the `parallel` feature (default) is
//! enabled; outputs are deterministic either way.

pub mod ddw;
pub mod expr;
pub mod exterior;
pub mod mechanics;
pub mod observables;
pub mod parallel;
pub mod probe;
pub mod report;

pub use expr::Expression;
