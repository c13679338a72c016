//! Field-equation residuals on grid samplings.
//!
//! Three residuals, all with centered second-order stencils:
//! - `euler_lagrange_residual`: `d_mu (dL/dv^i_mu) - dL/dy^i` on field
//!   samples alone;
//! - `ddw_residual`: the first-order system
//!   `d_mu u^i - dH/dp^mu_i` and `sum_mu d_mu p^mu_i + dH/dy^i`;
//! - `geometric_residual`: the 1-form `X . Omega - (-1)^n dH_cov` reduced
//!   modulo the ideal generated by the horizontal differentials `dx^mu`,
//!   with `X` the discrete tangent n-vector normalized by `dvol(X) = 1`.
//!
//! The geometric coefficients reproduce the coordinate residuals up to a
//! parity sign: `dp^mu_i |-> (-1)^n family1`, `dy^i |-> (-1)^(n+1) family2`;
//! the agreement is measured and must stay below 1e-12 relative.

use crate::expr::CompiledExpr;
use crate::exterior::CompiledForm;
use crate::parallel;

use super::{DDWSystem, DdwError, DiscreteGamma, LagrangianField};

/// Relative agreement required between the geometric and coordinate
/// residual routes.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

/// Residual values on the interior rows `[t0, t1]` of a grid.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub t0: usize,
    pub t1: usize,
    pub nx: usize,
    pub values: Vec<f64>,
}

impl ResidualField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct DdwResiduals {
    /// `d_mu u^i - dH/dp^mu_i`, indexed `mu * k + i`.
    pub family1: Vec<ResidualField>,
    /// `sum_mu d_mu p^mu_i + dH/dy^i`, indexed `i`.
    pub family2: Vec<ResidualField>,
}

impl DdwResiduals {
    pub fn max_abs(&self) -> f64 {
        self.family1
            .iter()
            .chain(self.family2.iter())
            .fold(0.0, |m, f| m.max(f.max_abs()))
    }
}

#[derive(Debug, Clone)]
pub struct GeometricResidual {
    /// Max |coefficient| of the reduced 1-form over interior nodes.
    pub max_deviation: f64,
    /// Max relative disagreement against the coordinate residuals.
    pub route_disagreement: f64,
}

fn interior_rows(gamma: &DiscreteGamma, margin: usize) -> Result<(usize, usize), DdwError> {
    if gamma.nt < 2 * margin {
        return Err(DdwError::GridTooSmall { need: 2 * margin + 1, got: gamma.nt });
    }
    Ok((margin, gamma.nt - margin))
}

/// Euler-Lagrange residual `d_mu (dL/dv^i_mu) - dL/dy^i` at interior nodes,
/// from field samples alone (velocities by centered differences).
pub fn euler_lagrange_residual(
    lf: &LagrangianField,
    gamma: &DiscreteGamma,
) -> Result<Vec<ResidualField>, DdwError> {
    if gamma.k != lf.k || gamma.n != lf.n {
        return Err(DdwError::BadSamples);
    }
    let (t0, t1) = interior_rows(gamma, 2)?;
    // layout: x^mu, y^i, v^i_mu
    let mut layout: Vec<String> = lf.spacetime.clone();
    layout.extend(lf.fields.iter().cloned());
    for i in 0..lf.k {
        for mu in 0..lf.n {
            layout.push(lf.velocities[i][mu].clone());
        }
    }
    let dl_dv: Vec<CompiledExpr> = (0..lf.k)
        .flat_map(|i| (0..lf.n).map(move |mu| (i, mu)))
        .map(|(i, mu)| lf.lagrangian.diff(&lf.velocities[i][mu]).compile(&layout))
        .collect::<Result<_, _>>()?;
    let dl_dy: Vec<CompiledExpr> = lf
        .fields
        .iter()
        .map(|y| lf.lagrangian.diff(y).compile(&layout))
        .collect::<Result<_, _>>()?;

    // g^i_mu on every node where velocities have stencils (rows 1..nt-1)
    let eval_g = |it: usize, ix: usize, i: usize, mu: usize| -> f64 {
        let mut point = vec![0.0; layout.len()];
        point[0] = gamma.t(it);
        if lf.n == 2 {
            point[1] = gamma.x(ix);
        }
        for j in 0..lf.k {
            point[lf.n + j] = gamma.y[j][gamma.idx(it, ix)];
        }
        for j in 0..lf.k {
            for nu in 0..lf.n {
                point[lf.n + lf.k + j * lf.n + nu] = gamma.d_mu(&gamma.y[j], nu, it, ix);
            }
        }
        dl_dv[i * lf.n + mu].eval(&point)
    };

    let rows = t1 - t0 + 1;
    let mut out = Vec::with_capacity(lf.k);
    for i in 0..lf.k {
        let values: Vec<Vec<f64>> = parallel::map_indexed(rows, |r| {
            let it = t0 + r;
            (0..gamma.nx)
                .map(|ix| {
                    // d/dt of g^i_0
                    let mut acc =
                        (eval_g(it + 1, ix, i, 0) - eval_g(it - 1, ix, i, 0)) / (2.0 * gamma.ht);
                    if lf.n == 2 {
                        let left = (ix + gamma.nx - 1) % gamma.nx;
                        let right = (ix + 1) % gamma.nx;
                        acc += (eval_g(it, right, i, 1) - eval_g(it, left, i, 1))
                            / (2.0 * gamma.hx);
                    }
                    // - dL/dy at the node
                    let mut point = vec![0.0; layout.len()];
                    point[0] = gamma.t(it);
                    if lf.n == 2 {
                        point[1] = gamma.x(ix);
                    }
                    for j in 0..lf.k {
                        point[lf.n + j] = gamma.y[j][gamma.idx(it, ix)];
                        for nu in 0..lf.n {
                            point[lf.n + lf.k + j * lf.n + nu] =
                                gamma.d_mu(&gamma.y[j], nu, it, ix);
                        }
                    }
                    acc - dl_dy[i].eval(&point)
                })
                .collect()
        });
        out.push(ResidualField {
            t0,
            t1,
            nx: gamma.nx,
            values: values.into_iter().flatten().collect(),
        });
    }
    Ok(out)
}

/// First-order De Donder-Weyl residuals at interior nodes.
pub fn ddw_residual(sys: &DDWSystem, gamma: &DiscreteGamma) -> Result<DdwResiduals, DdwError> {
    let (n, k) = (sys.n(), sys.k());
    if gamma.n != n || gamma.k != k {
        return Err(DdwError::BadSamples);
    }
    let (t0, t1) = interior_rows(gamma, 1)?;
    let layout = sys.chart().names();
    let dh_dp: Vec<CompiledExpr> = (0..n)
        .flat_map(|mu| (0..k).map(move |i| (mu, i)))
        .map(|(mu, i)| {
            let name = layout[sys.chart().momentum_index(mu, i).unwrap()].clone();
            sys.hamiltonian().diff(&name).compile(&layout)
        })
        .collect::<Result<_, _>>()?;
    let dh_dy: Vec<CompiledExpr> = (0..k)
        .map(|i| {
            let name = layout[sys.chart().field_index(i).unwrap()].clone();
            sys.hamiltonian().diff(&name).compile(&layout)
        })
        .collect::<Result<_, _>>()?;

    let rows = t1 - t0 + 1;
    let dim = sys.chart().dim();
    let mut family1 = Vec::with_capacity(n * k);
    for mu in 0..n {
        for i in 0..k {
            let values: Vec<Vec<f64>> = parallel::map_indexed(rows, |r| {
                let it = t0 + r;
                let mut point = vec![0.0; dim];
                (0..gamma.nx)
                    .map(|ix| {
                        gamma.load_point(sys, it, ix, &mut point);
                        gamma.d_mu(&gamma.y[i], mu, it, ix) - dh_dp[mu * k + i].eval(&point)
                    })
                    .collect()
            });
            family1.push(ResidualField {
                t0,
                t1,
                nx: gamma.nx,
                values: values.into_iter().flatten().collect(),
            });
        }
    }
    let mut family2 = Vec::with_capacity(k);
    for i in 0..k {
        let values: Vec<Vec<f64>> = parallel::map_indexed(rows, |r| {
            let it = t0 + r;
            let mut point = vec![0.0; dim];
            (0..gamma.nx)
                .map(|ix| {
                    gamma.load_point(sys, it, ix, &mut point);
                    let mut acc = dh_dy[i].eval(&point);
                    for mu in 0..n {
                        acc += gamma.d_mu(&gamma.p[mu * k + i], mu, it, ix);
                    }
                    acc
                })
                .collect()
        });
        family2.push(ResidualField {
            t0,
            t1,
            nx: gamma.nx,
            values: values.into_iter().flatten().collect(),
        });
    }
    Ok(DdwResiduals { family1, family2 })
}

/// Geometric residual: contracts the discrete tangent n-vector with `Omega`,
/// subtracts `(-1)^n dH_cov`, reduces modulo the `dx^mu` ideal, and reports
/// the max coefficient along with the disagreement against [`ddw_residual`].
pub fn geometric_residual(
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
) -> Result<GeometricResidual, DdwError> {
    let (n, k) = (sys.n(), sys.k());
    if gamma.n != n || gamma.k != k {
        return Err(DdwError::BadSamples);
    }
    let (t0, t1) = interior_rows(gamma, 1)?;
    let coordinate = ddw_residual(sys, gamma)?;

    let chart = sys.chart();
    let layout = chart.names();
    let dim = chart.dim();
    let omega = CompiledForm::compile(sys.omega(), &layout)?;
    let dh = CompiledForm::compile(
        &crate::exterior::DifferentialForm::scalar(chart.clone(), sys.covariant_hamiltonian().clone())
            .exterior_derivative(),
        &layout,
    )?;
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };

    let energy_slot = chart.energy_index().expect("ddw chart");
    let field_slots: Vec<usize> = (0..k).map(|i| chart.field_index(i).unwrap()).collect();
    let momentum_slots: Vec<usize> = (0..n)
        .flat_map(|mu| (0..k).map(move |i| chart.momentum_index(mu, i).unwrap()))
        .collect();

    let rows = t1 - t0 + 1;
    let per_row: Vec<(f64, f64)> = parallel::map_indexed(rows, |r| {
        let it = t0 + r;
        let mut point = vec![0.0; dim];
        let mut max_dev = 0.0_f64;
        let mut max_disagreement = 0.0_f64;
        for ix in 0..gamma.nx {
            gamma.load_point(sys, it, ix, &mut point);
            // tangent vectors X_mu = d(graph)/dx^mu by centered differences
            let mut tangents: Vec<Vec<f64>> = Vec::with_capacity(n);
            for mu in 0..n {
                let mut x_mu = vec![0.0; dim];
                x_mu[mu] = 1.0;
                for i in 0..k {
                    x_mu[field_slots[i]] = gamma.d_mu(&gamma.y[i], mu, it, ix);
                }
                for (a, slot) in momentum_slots.iter().enumerate() {
                    x_mu[*slot] = gamma.d_mu(&gamma.p[a], mu, it, ix);
                }
                x_mu[energy_slot] = gamma.d_mu(&gamma.e, mu, it, ix);
                tangents.push(x_mu);
            }
            let omega_val = omega.eval(&point);
            let refs: Vec<&[f64]> = tangents.iter().map(|t| t.as_slice()).collect();
            let contracted = omega_val.contract(&refs);
            let dh_val = dh.eval(&point);

            let node = (it - t0) * gamma.nx + ix;
            for slot in 0..dim {
                let coeff = contracted.coefficient(&[slot]) - parity * dh_val.coefficient(&[slot]);
                if slot < n {
                    // horizontal components: dropped modulo the ideal
                    continue;
                }
                max_dev = max_dev.max(coeff.abs());
                // match against the coordinate families
                let expected = if slot == energy_slot {
                    0.0
                } else if let Some(i) = field_slots.iter().position(|s| *s == slot) {
                    -parity * coordinate.family2[i].values[node]
                } else if let Some(a) = momentum_slots.iter().position(|s| *s == slot) {
                    parity * coordinate.family1[a].values[node]
                } else {
                    0.0
                };
                let scale = 1.0_f64.max(coeff.abs()).max(expected.abs());
                max_disagreement = max_disagreement.max((coeff - expected).abs() / scale);
            }
        }
        (max_dev, max_disagreement)
    });

    let mut max_deviation = 0.0_f64;
    let mut route_disagreement = 0.0_f64;
    for (d, a) in per_row {
        max_deviation = max_deviation.max(d);
        route_disagreement = route_disagreement.max(a);
    }
    Ok(GeometricResidual { max_deviation, route_disagreement })
}
