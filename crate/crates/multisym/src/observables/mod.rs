//! Observable (n-1)-forms and their calculus.
//!
//! An algebraic observable is an (n-1)-form `F` admitting a vector field
//! `xi_F` with `xi_F . Omega + dF = 0`; the generator is found by the same
//! symbolic linear solve used in mechanics. Brackets pair generators through
//! `Omega`:
//!
//! - `{F, G} = (xi_F ^ xi_G) . Omega`, again an algebraic observable;
//! - the bracket is antisymmetric and satisfies Jacobi modulo the exact
//!   term `d((xi_F ^ xi_G ^ xi_K) . Omega)`;
//! - `F` is *dynamical* when `dH_cov(xi_F) = 0`; its slice integrals then
//!   depend only on the slice's homology class, which is the field-theoretic
//!   Noether statement `dF|_Gamma = 0`.
//!
//! Grid-level checks (pseudobrackets along solutions, slice functionals,
//! the variational identity) live in the submodules.

mod cps;
mod pseudo;
mod slice;

pub use cps::{cps_variation_check, gamma_from_trajectory, CpsInput, CpsReport};
pub use pseudo::{compare_observables, pseudobracket_along, PseudobracketResult};
pub use slice::{homology_drift, slice_bracket, slice_integral, Slice};

use thiserror::Error;

use crate::expr::Expression;
use crate::exterior::{
    interior_product, solve_contraction, DifferentialForm, ExteriorError, MultiVector,
    SolveOutcome,
};

use crate::ddw::DDWSystem;

#[derive(Debug, Error)]
pub enum ObsError {
    #[error("form degree {form} does not fit an observable for this {omega}-form structure")]
    DegreeMismatch { form: usize, omega: usize },
    #[error("form is not an algebraic observable (equation {equation:?} has residual {residual})")]
    NotObservable { equation: Vec<usize>, residual: String },
    #[error("coefficients outside the rational fragment: numeric-only certificate (consistent: {consistent}, max residual {max_residual:.3e})")]
    NumericOnly { consistent: bool, max_residual: f64 },
    #[error("the pairing with Omega is degenerate along columns {0:?}")]
    DegenerateStructure(Vec<usize>),
    #[error("vector-field components must live on the base coordinates; '{0}' does not")]
    NotBaseCoordinate(String),
    #[error("slice time {0} is not on the grid (no interpolation)")]
    OffGridSlice(f64),
    #[error("grids in the family are inconsistent")]
    GridMismatch,
    #[error("variation size must be positive, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("expression error: {0}")]
    Expr(#[from] crate::expr::ExprError),
    #[error("evaluation error: {0}")]
    Eval(#[from] crate::expr::EvalError),
    #[error("field-theory error: {0}")]
    Ddw(#[from] crate::ddw::DdwError),
}

/// An (n-1)-form together with its generating vector field.
#[derive(Debug, Clone)]
pub struct ObservableForm {
    pub form: DifferentialForm,
    /// `xi_F` with `xi_F . Omega + dF = 0`.
    pub generator: MultiVector,
}

#[derive(Debug)]
pub enum ObservableOutcome {
    Observable(ObservableForm),
    /// Certificate of inconsistency: the equation (by multi-index) whose
    /// residual cannot be matched by any vector field.
    NotObservable { equation: Vec<usize>, residual: Expression },
    /// Analytic coefficients: only a seeded numeric certificate is offered.
    NumericOnly { consistent: bool, max_residual: f64 },
}

/// Solves `xi_F . Omega + dF = 0` for the generator of `F`.
pub fn solve_observable_vf(
    f: &DifferentialForm,
    omega: &DifferentialForm,
) -> Result<ObservableOutcome, ObsError> {
    if f.degree() + 2 != omega.degree() {
        return Err(ObsError::DegreeMismatch { form: f.degree(), omega: omega.degree() });
    }
    let rhs = f.exterior_derivative().neg();
    match solve_contraction(omega, &rhs)? {
        SolveOutcome::Unique(generator) => {
            Ok(ObservableOutcome::Observable(ObservableForm { form: f.clone(), generator }))
        }
        SolveOutcome::Underdetermined { free_columns, .. } => {
            Err(ObsError::DegenerateStructure(free_columns))
        }
        SolveOutcome::Inconsistent { equation, residual } => {
            Ok(ObservableOutcome::NotObservable { equation, residual })
        }
        SolveOutcome::NumericOnly { consistent, max_residual } => {
            Ok(ObservableOutcome::NumericOnly { consistent, max_residual })
        }
    }
}

/// Convenience wrapper that demands observability.
pub fn expect_observable(
    f: &DifferentialForm,
    omega: &DifferentialForm,
) -> Result<ObservableForm, ObsError> {
    match solve_observable_vf(f, omega)? {
        ObservableOutcome::Observable(o) => Ok(o),
        ObservableOutcome::NotObservable { equation, residual } => {
            Err(ObsError::NotObservable { equation, residual: residual.to_string() })
        }
        ObservableOutcome::NumericOnly { consistent, max_residual } => {
            Err(ObsError::NumericOnly { consistent, max_residual })
        }
    }
}

/// Generalized momentum `P_zeta = zeta . theta` for a vector field on the
/// base (components in the spacetime/field coordinates only).
pub fn momentum_observable(
    sys: &DDWSystem,
    zeta: &[(String, Expression)],
) -> Result<ObservableForm, ObsError> {
    let chart = sys.chart();
    let base = sys.n() + sys.k();
    let mut components = Vec::new();
    for (name, comp) in zeta {
        let idx = chart
            .index_of(name)
            .map_err(|_| ObsError::NotBaseCoordinate(name.clone()))?;
        if idx >= base {
            return Err(ObsError::NotBaseCoordinate(name.clone()));
        }
        for free in comp.free_variables() {
            let fidx = chart
                .index_of(&free)
                .map_err(|_| ObsError::NotBaseCoordinate(free.clone()))?;
            if fidx >= base {
                return Err(ObsError::NotBaseCoordinate(free));
            }
        }
        components.push((idx, comp.clone()));
    }
    let zeta_field = MultiVector::vector_field(chart.clone(), components)?;
    let p_form = interior_product(&zeta_field, sys.theta())?;
    expect_observable(&p_form, sys.omega())
}

/// Position-type observable `Q = sum xi_M dq^M` from coefficients on
/// base-coordinate (n-1)-indices.
pub fn position_observable(
    sys: &DDWSystem,
    coefficients: impl IntoIterator<Item = (Vec<usize>, Expression)>,
) -> Result<ObservableForm, ObsError> {
    let chart = sys.chart();
    let base = sys.n() + sys.k();
    let terms: Vec<(Vec<usize>, Expression)> = coefficients.into_iter().collect();
    for (idx, c) in &terms {
        if idx.iter().any(|i| *i >= base) {
            return Err(ObsError::NotBaseCoordinate(format!("index {idx:?}")));
        }
        for free in c.free_variables() {
            let fidx = chart
                .index_of(&free)
                .map_err(|_| ObsError::NotBaseCoordinate(free.clone()))?;
            if fidx >= base {
                return Err(ObsError::NotBaseCoordinate(free));
            }
        }
    }
    let q_form = DifferentialForm::from_terms(chart.clone(), sys.n() - 1, terms)?;
    expect_observable(&q_form, sys.omega())
}

/// The canonical energy (n-1)-form `-(d/dx^0) . theta`; on shell its slice
/// integral is the spatial energy functional.
pub fn energy_observable(sys: &DDWSystem) -> Result<ObservableForm, ObsError> {
    let chart = sys.chart();
    let t_name = chart.name(chart.spacetime_index(0).expect("time coordinate")).to_string();
    let mut o = momentum_observable(sys, &[(t_name, Expression::one())])?;
    o.form = o.form.neg();
    o.generator = o.generator.neg();
    Ok(o)
}

/// `{F, G} = (xi_F ^ xi_G) . Omega`; the result is again an algebraic
/// observable and is returned with its own generator.
pub fn form_bracket(
    f: &ObservableForm,
    g: &ObservableForm,
    omega: &DifferentialForm,
) -> Result<ObservableForm, ObsError> {
    let pair = f.generator.wedge(&g.generator)?;
    let bracket = interior_product(&pair, omega)?;
    expect_observable(&bracket, omega)
}

/// The cyclic bracket sum and the exact term
/// `d((xi_F ^ xi_G ^ xi_K) . Omega)`; they agree identically.
pub fn jacobi_defect(
    f: &ObservableForm,
    g: &ObservableForm,
    k: &ObservableForm,
    omega: &DifferentialForm,
) -> Result<(DifferentialForm, DifferentialForm), ObsError> {
    let fg = form_bracket(f, g, omega)?;
    let gk = form_bracket(g, k, omega)?;
    let kf = form_bracket(k, f, omega)?;
    let s = form_bracket(&fg, k, omega)?
        .form
        .add(&form_bracket(&gk, f, omega)?.form)?
        .add(&form_bracket(&kf, g, omega)?.form)?;
    let exact = if omega.degree() < 3 {
        // in mechanics the triple contraction underflows; the defect is zero
        DifferentialForm::zero(omega.chart().clone(), s.degree())
    } else {
        let triple = f.generator.wedge(&g.generator)?.wedge(&k.generator)?;
        interior_product(&triple, omega)?.exterior_derivative()
    };
    Ok((s, exact))
}

/// `true` iff `dH_cov(xi_F) = 0`: the observable commutes with the dynamics
/// and its slice functionals are homology-invariant.
pub fn dynamical_check(sys: &DDWSystem, f: &ObservableForm) -> bool {
    f.generator
        .apply(sys.covariant_hamiltonian())
        .equivalent(&Expression::zero())
}

#[cfg(test)]
mod tests;
