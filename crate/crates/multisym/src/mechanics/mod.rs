//! Classical symplectic mechanics on (q, p) charts.
//!
//! A [`HamiltonianSystem`] carries the canonical 1-form `theta = p_i dq^i`,
//! the symplectic form `Omega = d theta`, and a Hamiltonian expression.
//! Hamiltonian vector fields are obtained by a symbolic linear solve of
//! `xi . Omega = -df` (the uniform sign convention of this crate), Poisson
//! brackets by double contraction `{f, g} = (xi_f ^ xi_g) . Omega`, and
//! flows by the implicit-midpoint rule.

mod extended;
mod flow;
mod symmetry;

pub use extended::{ExtendedPhaseSpace, PresymplecticReport};
pub use flow::Trajectory;
pub use symmetry::{ExactnessWitness, SymmetryClassification};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::Expression;
use crate::exterior::{
    interior_product, solve_contraction, Chart, ChartRef, DifferentialForm, ExteriorError,
    MultiVector, Role, SolveOutcome,
};
use crate::probe;

#[derive(Debug, Error)]
pub enum MechanicsError {
    #[error("chart is not a (q, p) phase-space chart: {0}")]
    ChartShape(String),
    #[error("Hamiltonian has vanishing differential at all probe points")]
    CriticalHamiltonian,
    #[error("symplectic form is degenerate at probe point {0:?}")]
    Degenerate(Vec<f64>),
    #[error("phase point has wrong dimension: expected {expected}, got {got}")]
    BadPoint { expected: usize, got: usize },
    #[error("flow parameters invalid: {0}")]
    BadFlowParameters(String),
    #[error("Newton iteration failed to reach tolerance at step {step}")]
    NewtonNonConvergence { step: usize },
    #[error("constraint bindings are not explicitly solvable: {0}")]
    UnsolvableBindings(String),
    #[error("kernel extraction failed at probe {0:?}")]
    KernelExtraction(Vec<f64>),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("expression error: {0}")]
    Expr(#[from] crate::expr::ExprError),
    #[error("evaluation error: {0}")]
    Eval(#[from] crate::expr::EvalError),
    #[error("vector field solve failed unexpectedly: {0}")]
    SolveInvariant(String),
}

/// Newton tolerance for the implicit midpoint step.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Newton iteration cap per step.
pub const NEWTON_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    chart: ChartRef,
    hamiltonian: Expression,
    theta: DifferentialForm,
    omega: DifferentialForm,
    /// Degrees of freedom (position count).
    n: usize,
}

impl HamiltonianSystem {
    /// Builds the system and validates the structural invariants: `Omega`
    /// closed (exactly) and non-degenerate at seeded probe points, and `dH`
    /// not identically zero at the probes.
    pub fn new(chart: ChartRef, hamiltonian: Expression) -> Result<Self, MechanicsError> {
        let mut q_idx = Vec::new();
        let mut p_idx = Vec::new();
        for (i, c) in chart.coords().iter().enumerate() {
            match c.role {
                Role::GenericQ { i: k } => q_idx.push((k, i)),
                Role::GenericP { i: k } => p_idx.push((k, i)),
                _ => {
                    return Err(MechanicsError::ChartShape(format!(
                        "coordinate '{}' is neither position nor momentum",
                        c.name
                    )))
                }
            }
        }
        if q_idx.len() != p_idx.len() || q_idx.is_empty() {
            return Err(MechanicsError::ChartShape(
                "positions and momenta must pair up".into(),
            ));
        }
        q_idx.sort_unstable();
        p_idx.sort_unstable();
        let n = q_idx.len();

        let theta = DifferentialForm::from_terms(
            chart.clone(),
            1,
            q_idx
                .iter()
                .zip(&p_idx)
                .map(|((_, qi), (_, pi))| (vec![*qi], Expression::var(chart.name(*pi)))),
        )?;
        let omega = theta.exterior_derivative();
        let sys = HamiltonianSystem { chart, hamiltonian, theta, omega, n };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<(), MechanicsError> {
        if !self.omega.exterior_derivative().is_zero() {
            // cannot happen for omega = d theta; kept as an invariant guard
            return Err(MechanicsError::SolveInvariant("d(omega) != 0".into()));
        }
        let dim = self.chart.dim();
        let points = probe::probe_points(probe::DEFAULT_SEED, probe::DEFAULT_PROBES, dim);
        let names = self.chart.names();
        let mut dh_somewhere = false;
        for pt in &points {
            let bind: BTreeMap<String, f64> =
                names.iter().cloned().zip(pt.iter().copied()).collect();
            let mut grad = 0.0_f64;
            for name in &names {
                grad += self.hamiltonian.diff(name).evaluate(&bind)?.abs();
            }
            if grad > 1e-9 {
                dh_somewhere = true;
            }
            let m = omega_matrix(&self.omega, &bind)?;
            if m.rank(1e-9) < dim {
                return Err(MechanicsError::Degenerate(pt.clone()));
            }
        }
        if !dh_somewhere {
            return Err(MechanicsError::CriticalHamiltonian);
        }
        Ok(())
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn hamiltonian(&self) -> &Expression {
        &self.hamiltonian
    }

    pub fn theta(&self) -> &DifferentialForm {
        &self.theta
    }

    pub fn omega(&self) -> &DifferentialForm {
        &self.omega
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.n
    }

    /// Chart index of the k-th position coordinate.
    pub fn q_index(&self, k: usize) -> usize {
        self.chart
            .coords()
            .iter()
            .position(|c| c.role == Role::GenericQ { i: k })
            .expect("validated chart")
    }

    pub fn p_index(&self, k: usize) -> usize {
        self.chart
            .coords()
            .iter()
            .position(|c| c.role == Role::GenericP { i: k })
            .expect("validated chart")
    }

    /// The unique `xi_f` with `xi_f . Omega = -df`, by symbolic linear
    /// solve over the rational-function field.
    pub fn hamiltonian_vector_field(
        &self,
        f: &Expression,
    ) -> Result<MultiVector, MechanicsError> {
        let df = DifferentialForm::scalar(self.chart.clone(), f.clone()).exterior_derivative();
        match solve_contraction(&self.omega, &df.neg())? {
            SolveOutcome::Unique(xi) => Ok(xi),
            other => Err(MechanicsError::SolveInvariant(format!(
                "non-degenerate Omega must give a unique field, got {other:?}"
            ))),
        }
    }

    /// `{f, g} = (xi_f ^ xi_g) . Omega`, which agrees with the coordinate
    /// expression `sum_i (df/dp_i dg/dq^i - df/dq^i dg/dp_i)`.
    pub fn poisson_bracket(
        &self,
        f: &Expression,
        g: &Expression,
    ) -> Result<Expression, MechanicsError> {
        let xf = self.hamiltonian_vector_field(f)?;
        let xg = self.hamiltonian_vector_field(g)?;
        let pair = xf.wedge(&xg)?;
        Ok(interior_product(&pair, &self.omega)?.scalar_part())
    }

    /// The coordinate formula for the bracket, kept as an independent route
    /// for cross-checks.
    pub fn poisson_bracket_coordinates(&self, f: &Expression, g: &Expression) -> Expression {
        let mut acc = Expression::zero();
        for k in 0..self.n {
            let qn = self.chart.name(self.q_index(k)).to_string();
            let pn = self.chart.name(self.p_index(k)).to_string();
            acc = acc + f.diff(&pn) * g.diff(&qn) - f.diff(&qn) * g.diff(&pn);
        }
        acc
    }

    /// Classifies a vector field: symplectic iff `d(xi . Omega) = 0`; when
    /// the contraction is exact with polynomial coefficients, recovers the
    /// witness `f` with `xi . Omega = -df` by radial path integration from
    /// the chart origin; Noether-conserved iff additionally `L_xi H = 0`.
    pub fn classify_symmetry(&self, xi: &MultiVector) -> SymmetryClassification {
        symmetry::classify(self, xi)
    }

    /// Extends to the (q^0, q, p_0, p) phase space with covariant
    /// Hamiltonian `p_0 + H`.
    pub fn extended(&self) -> Result<ExtendedPhaseSpace, MechanicsError> {
        ExtendedPhaseSpace::new(self)
    }
}

/// Evaluates the coefficient matrix `Omega_ab` of a 2-form at a point.
pub(crate) fn omega_matrix(
    omega: &DifferentialForm,
    bind: &BTreeMap<String, f64>,
) -> Result<nalgebra::DMatrix<f64>, crate::expr::EvalError> {
    let dim = omega.chart().dim();
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for (idx, c) in omega.terms() {
        let v = c.evaluate(bind)?;
        m[(idx[0], idx[1])] = v;
        m[(idx[1], idx[0])] = -v;
    }
    Ok(m)
}

/// Builds a mechanics chart and system in one call.
pub fn system(
    positions: &[&str],
    momenta: &[&str],
    hamiltonian: &str,
) -> Result<HamiltonianSystem, MechanicsError> {
    let chart = Chart::mechanics(positions, momenta)
        .map_err(|e| MechanicsError::ChartShape(e.to_string()))?;
    let h = Expression::parse(hamiltonian)
        .map_err(|e| MechanicsError::ChartShape(format!("bad Hamiltonian: {e}")))?;
    HamiltonianSystem::new(chart, h)
}
