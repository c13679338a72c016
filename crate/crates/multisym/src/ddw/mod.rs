//! Covariant (De Donder-Weyl) field theory on charts.
//!
//! A first-order Lagrangian `L(x, y, v)` Legendre-transforms to a
//! [`DDWSystem`] on the chart `(x^mu, y^i, p^mu_i, e)`, with Hamiltonian
//! `H = p v - L` and covariant Hamiltonian `e + H`. The system carries the
//! canonical n-form `theta = e dvol + p^mu_i dy^i ^ dvol_mu` and the
//! multisymplectic (n+1)-form `Omega = d theta`.
//!
//! Field equations are verified two ways on grid samples: the coordinate
//! first-order system, and the contraction of the tangent n-vector with
//! `Omega` reduced modulo the horizontal ideal. The two residuals agree
//! identically up to sign bookkeeping; the agreement is checked to 1e-12.

mod grid;
mod legendre;
mod residual;
mod solve;
mod universal;

pub use grid::{DiscreteGamma, GridSpec};
pub use legendre::{legendre_eval_numeric, legendre_field, legendre_mechanics, LegendreMechanics};
pub use residual::{
    EQUIVALENCE_TOLERANCE,
    ddw_residual, euler_lagrange_residual, geometric_residual, DdwResiduals, GeometricResidual,
    ResidualField,
};
pub use solve::{energy_series, is_wave_family, solve_field, CFL_LIMIT};
pub use universal::{restrict_to_ddw, universal_chart_for, universal_forms};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::Expression;
use crate::exterior::{
    interior_product, Chart, ChartRef, DifferentialForm, ExteriorError, MultiVector,
};
use crate::probe;

#[derive(Debug, Error)]
pub enum DdwError {
    #[error("Legendre transform is degenerate: {0}")]
    DegenerateLegendre(String),
    #[error("Lagrangian is not quadratic in the velocities; only numeric inversion is available")]
    NonQuadraticLagrangian,
    #[error("chart/shape error: {0}")]
    ChartShape(String),
    #[error("Hamiltonian is outside the wave-equation family handled by the solver: {0}")]
    NotWaveFamily(String),
    #[error("CFL violation: ht/hx = {ratio} exceeds 0.9")]
    CflViolation { ratio: f64 },
    #[error("grid too small: need at least {need} interior rows, got {got}")]
    GridTooSmall { need: usize, got: usize },
    #[error("sample arrays do not match the grid")]
    BadSamples,
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("expression error: {0}")]
    Expr(#[from] crate::expr::ExprError),
    #[error("evaluation error: {0}")]
    Eval(#[from] crate::expr::EvalError),
}

/// A first-order Lagrangian field theory `L(x^mu, y^i, v^i_mu)`.
#[derive(Debug, Clone)]
pub struct LagrangianField {
    pub n: usize,
    pub k: usize,
    pub spacetime: Vec<String>,
    pub fields: Vec<String>,
    /// Velocity names, `velocities[i][mu]` for `v^i_mu`.
    pub velocities: Vec<Vec<String>>,
    pub lagrangian: Expression,
}

impl LagrangianField {
    /// Validates the non-degeneracy invariant: the velocity Hessian has full
    /// rank at seeded probe points.
    pub fn new(
        spacetime: &[&str],
        fields: &[&str],
        velocities: &[&[&str]],
        lagrangian: Expression,
    ) -> Result<Self, DdwError> {
        let n = spacetime.len();
        let k = fields.len();
        if k == 0 || n == 0 || velocities.len() != k || velocities.iter().any(|v| v.len() != n) {
            return Err(DdwError::ChartShape(
                "need n spacetime names, k field names, and a k x n velocity table".into(),
            ));
        }
        let lf = LagrangianField {
            n,
            k,
            spacetime: spacetime.iter().map(|s| s.to_string()).collect(),
            fields: fields.iter().map(|s| s.to_string()).collect(),
            velocities: velocities
                .iter()
                .map(|row| row.iter().map(|s| s.to_string()).collect())
                .collect(),
            lagrangian,
        };
        lf.check_hessian()?;
        Ok(lf)
    }

    fn velocity_list(&self) -> Vec<String> {
        self.velocities.iter().flatten().cloned().collect()
    }

    fn check_hessian(&self) -> Result<(), DdwError> {
        let vels = self.velocity_list();
        let m = vels.len();
        let mut hessian = Vec::with_capacity(m * m);
        for a in &vels {
            let da = self.lagrangian.diff(a);
            for b in &vels {
                hessian.push(da.diff(b));
            }
        }
        let mut names: Vec<String> = self.spacetime.clone();
        names.extend(self.fields.iter().cloned());
        names.extend(vels.iter().cloned());
        for pt in probe::probe_points(probe::DEFAULT_SEED, probe::DEFAULT_PROBES, names.len()) {
            let bind: BTreeMap<String, f64> =
                names.iter().cloned().zip(pt.iter().copied()).collect();
            let mat = nalgebra::DMatrix::from_fn(m, m, |r, c| {
                hessian[r * m + c].evaluate(&bind).unwrap_or(f64::NAN)
            });
            if mat.iter().any(|v| !v.is_finite()) || mat.rank(1e-9) < m {
                return Err(DdwError::DegenerateLegendre(format!(
                    "velocity Hessian rank-deficient at probe {pt:?}"
                )));
            }
        }
        Ok(())
    }
}

/// The De Donder-Weyl system on `(x, y, p, e)`.
#[derive(Debug, Clone)]
pub struct DDWSystem {
    chart: ChartRef,
    n: usize,
    k: usize,
    hamiltonian: Expression,
    covariant: Expression,
    theta: DifferentialForm,
    omega: DifferentialForm,
}

impl DDWSystem {
    /// Builds the system from the DDW Hamiltonian `H(x, y, p)`. The
    /// covariant Hamiltonian is `e + H` (affine in `e` with unit
    /// coefficient by construction; `H` must not mention `e`).
    pub fn new(
        spacetime: &[&str],
        fields: &[&str],
        hamiltonian: Expression,
    ) -> Result<Self, DdwError> {
        let chart = Chart::ddw(spacetime, fields)
            .map_err(|e| DdwError::ChartShape(e.to_string()))?;
        let n = spacetime.len();
        let k = fields.len();
        let energy = chart.energy_index().expect("ddw chart has energy");
        if hamiltonian.depends_on(chart.name(energy)) {
            return Err(DdwError::ChartShape(
                "DDW Hamiltonian must not depend on the energy coordinate".into(),
            ));
        }
        let covariant = Expression::var(chart.name(energy)) + hamiltonian.clone();

        // theta = e dvol + sum p^mu_i dy^i ^ dvol_mu
        let vol_idx: Vec<usize> = (0..n).collect();
        let vol = DifferentialForm::from_terms(
            chart.clone(),
            n,
            [(vol_idx, Expression::one())],
        )?;
        let mut theta = vol.scale(&Expression::var(chart.name(energy)));
        for mu in 0..n {
            let dvol_mu = interior_product(&MultiVector::basis(chart.clone(), mu), &vol)?;
            for i in 0..k {
                let p_idx = chart.momentum_index(mu, i).expect("ddw momenta");
                let dy = DifferentialForm::basis(chart.clone(), chart.field_index(i).unwrap());
                let term = dy.wedge(&dvol_mu)?.scale(&Expression::var(chart.name(p_idx)));
                theta = theta.add(&term)?;
            }
        }
        let omega = theta.exterior_derivative();
        debug_assert!(omega.exterior_derivative().is_zero());
        Ok(DDWSystem { chart, n, k, hamiltonian, covariant, theta, omega })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hamiltonian(&self) -> &Expression {
        &self.hamiltonian
    }

    /// `e + H`.
    pub fn covariant_hamiltonian(&self) -> &Expression {
        &self.covariant
    }

    pub fn theta(&self) -> &DifferentialForm {
        &self.theta
    }

    pub fn omega(&self) -> &DifferentialForm {
        &self.omega
    }

    /// The volume form `dvol = dx^0 ^ ... ^ dx^{n-1}`.
    pub fn volume_form(&self) -> DifferentialForm {
        DifferentialForm::from_terms(
            self.chart.clone(),
            self.n,
            [((0..self.n).collect::<Vec<_>>(), Expression::one())],
        )
        .expect("volume form")
    }
}

#[cfg(test)]
mod tests;
