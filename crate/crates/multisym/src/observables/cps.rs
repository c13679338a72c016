//! The covariant-phase-space variational identity.
//!
//! For a one-parameter family of curves with variation field `xi` and a
//! slab `D` between two slices, the identity reads
//!
//! ```text
//! dS(xi) - Theta^{Sigma1}(xi) + Theta^{Sigma0}(xi)  =  int_{Gamma ∩ D} xi . Omega
//! ```
//!
//! with `Theta^Sigma(xi) = int_{Gamma ∩ Sigma} xi . theta` and `S` the
//! action `int theta` over the slab. Both sides vanish on Hamiltonian
//! curves (to discretization plus variation order); the right side is
//! bounded away from zero on corrupted curves, which is the negative
//! control. The flux difference `Theta^{Sigma1} - Theta^{Sigma0}` equals
//! `dS` within the same tolerance, which is the slice-independence of the
//! induced 2-form on solution space.

use crate::ddw::{DDWSystem, DiscreteGamma};
use crate::exterior::CompiledForm;
use crate::mechanics::Trajectory;

use super::slice::{spatial_tangent, Slice};
use super::ObsError;

#[derive(Debug, Clone)]
pub struct CpsInput<'a> {
    pub minus: &'a DiscreteGamma,
    pub base: &'a DiscreteGamma,
    pub plus: &'a DiscreteGamma,
    pub epsilon: f64,
    pub slice_start: Slice,
    pub slice_end: Slice,
}

#[derive(Debug, Clone)]
pub struct CpsReport {
    /// `dS - Theta^{Sigma1} + Theta^{Sigma0}`.
    pub term_i: f64,
    /// `int_{Gamma ∩ D} xi . Omega`.
    pub term_ii: f64,
    pub delta_s: f64,
    pub theta_flux_start: f64,
    pub theta_flux_end: f64,
    /// `|Theta^{Sigma1} - Theta^{Sigma0} - dS|`.
    pub presymplectic_gap: f64,
}

fn grids_match(a: &DiscreteGamma, b: &DiscreteGamma) -> bool {
    a.n == b.n
        && a.k == b.k
        && a.nt == b.nt
        && a.nx == b.nx
        && (a.ht - b.ht).abs() < 1e-15
        && (a.hx - b.hx).abs() < 1e-15
}

/// Variation components at a node, in chart layout (zero on the spacetime
/// slots: the family varies fields, momenta, and energy at fixed base
/// points).
fn variation_at(
    sys: &DDWSystem,
    input: &CpsInput<'_>,
    it: usize,
    ix: usize,
    out: &mut [f64],
) {
    let chart = sys.chart();
    let id = input.base.idx(it, ix);
    let scale = 1.0 / (2.0 * input.epsilon);
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..input.base.k {
        out[chart.field_index(i).unwrap()] =
            (input.plus.y[i][id] - input.minus.y[i][id]) * scale;
    }
    for a in 0..(input.base.n * input.base.k) {
        let slot = chart.momentum_index(a / input.base.k, a % input.base.k).unwrap();
        out[slot] = (input.plus.p[a][id] - input.minus.p[a][id]) * scale;
    }
    out[chart.energy_index().unwrap()] = (input.plus.e[id] - input.minus.e[id]) * scale;
}

/// Graph tangents with one-sided time stencils allowed at the first/last
/// rows (slab boundaries may sit on the grid boundary).
fn tangents_any(
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
    it: usize,
    ix: usize,
) -> Vec<Vec<f64>> {
    let chart = sys.chart();
    let dim = chart.dim();
    let mut out = Vec::with_capacity(gamma.n);
    for mu in 0..gamma.n {
        let mut x_mu = vec![0.0; dim];
        x_mu[mu] = 1.0;
        for i in 0..gamma.k {
            x_mu[chart.field_index(i).unwrap()] = gamma.d_mu_any(&gamma.y[i], mu, it, ix);
        }
        for a in 0..(gamma.n * gamma.k) {
            let slot = chart.momentum_index(a / gamma.k, a % gamma.k).unwrap();
            x_mu[slot] = gamma.d_mu_any(&gamma.p[a], mu, it, ix);
        }
        x_mu[chart.energy_index().unwrap()] = gamma.d_mu_any(&gamma.e, mu, it, ix);
        out.push(x_mu);
    }
    out
}

/// Action of a curve over the slab: `int theta` pulled back through the
/// graph (trapezoid in time, rectangle in periodic space).
fn slab_action(
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
    theta: &CompiledForm,
    row0: usize,
    row1: usize,
) -> f64 {
    let dim = sys.chart().dim();
    let mut total = 0.0;
    for it in row0..=row1 {
        let mut row_sum = 0.0;
        let mut point = vec![0.0; dim];
        for ix in 0..gamma.nx {
            gamma.load_point(sys, it, ix, &mut point);
            let tg = tangents_any(sys, gamma, it, ix);
            let refs: Vec<&[f64]> = tg.iter().map(|v| v.as_slice()).collect();
            row_sum += theta.eval(&point).contract(&refs).scalar();
        }
        let weight = if it == row0 || it == row1 { 0.5 } else { 1.0 };
        total += weight * row_sum;
    }
    let dx = if gamma.n == 1 { 1.0 } else { gamma.hx };
    total * gamma.ht * dx
}

/// Runs the variational-identity check on a centered family of curves.
pub fn cps_variation_check(
    sys: &DDWSystem,
    input: &CpsInput<'_>,
) -> Result<CpsReport, ObsError> {
    if input.epsilon <= 0.0 {
        return Err(ObsError::BadEpsilon(input.epsilon));
    }
    if !grids_match(input.minus, input.base) || !grids_match(input.plus, input.base) {
        return Err(ObsError::GridMismatch);
    }
    let row0 = input.slice_start.row.min(input.slice_end.row);
    let row1 = input.slice_start.row.max(input.slice_end.row);
    if row0 == row1 {
        return Err(ObsError::GridMismatch);
    }
    let chart = sys.chart();
    let layout = chart.names();
    let dim = chart.dim();
    let theta = CompiledForm::compile(sys.theta(), &layout)?;
    let omega = CompiledForm::compile(sys.omega(), &layout)?;

    // dS by the centered difference of slab actions
    let s_plus = slab_action(sys, input.plus, &theta, row0, row1);
    let s_minus = slab_action(sys, input.minus, &theta, row0, row1);
    let delta_s = (s_plus - s_minus) / (2.0 * input.epsilon);

    // Theta^Sigma(xi) = int (xi . theta) over the slice
    let flux = |row: usize| -> f64 {
        let gamma = input.base;
        let mut total = 0.0;
        let mut point = vec![0.0; dim];
        let mut xi = vec![0.0; dim];
        if gamma.n == 1 {
            gamma.load_point(sys, row, 0, &mut point);
            variation_at(sys, input, row, 0, &mut xi);
            return theta.eval(&point).contract(&[&xi]).scalar();
        }
        let mut tangent = vec![0.0; dim];
        for ix in 0..gamma.nx {
            gamma.load_point(sys, row, ix, &mut point);
            variation_at(sys, input, row, ix, &mut xi);
            spatial_tangent(sys, gamma, row, ix, &mut tangent);
            total += theta.eval(&point).contract(&[&xi, &tangent]).scalar();
        }
        total * gamma.hx
    };
    let theta_flux_start = flux(row0);
    let theta_flux_end = flux(row1);

    // term II: int over the slab of (xi . Omega)(X_0 [, X_1])
    let gamma = input.base;
    let mut term_ii = 0.0;
    {
        let mut point = vec![0.0; dim];
        let mut xi = vec![0.0; dim];
        for it in row0..=row1 {
            let mut row_sum = 0.0;
            for ix in 0..gamma.nx {
                gamma.load_point(sys, it, ix, &mut point);
                variation_at(sys, input, it, ix, &mut xi);
                let tg = tangents_any(sys, gamma, it, ix);
                let mut vectors: Vec<&[f64]> = vec![&xi];
                for t in &tg {
                    vectors.push(t.as_slice());
                }
                row_sum += omega.eval(&point).contract(&vectors).scalar();
            }
            let weight = if it == row0 || it == row1 { 0.5 } else { 1.0 };
            term_ii += weight * row_sum;
        }
        let dx = if gamma.n == 1 { 1.0 } else { gamma.hx };
        term_ii *= gamma.ht * dx;
    }

    let term_i = delta_s - theta_flux_end + theta_flux_start;
    let presymplectic_gap = (theta_flux_end - theta_flux_start - delta_s).abs();
    Ok(CpsReport {
        term_i,
        term_ii,
        delta_s,
        theta_flux_start,
        theta_flux_end,
        presymplectic_gap,
    })
}

/// Wraps a mechanics trajectory as a grid curve on the n = 1 chart
/// `(t, y_i, p_t_i, e)` of `sys`, with `e = -H` filled in.
pub fn gamma_from_trajectory(
    sys: &DDWSystem,
    traj: &Trajectory,
) -> Result<DiscreteGamma, ObsError> {
    if sys.n() != 1 || traj.dim() != 2 * sys.k() {
        return Err(ObsError::GridMismatch);
    }
    let k = sys.k();
    let nt = traj.len() - 1;
    let nodes = nt + 1;
    let mut gamma = DiscreteGamma {
        n: 1,
        k,
        ht: traj.step(),
        hx: 0.0,
        nt,
        nx: 1,
        periodic_x: false,
        y: vec![vec![0.0; nodes]; k],
        p: vec![vec![0.0; nodes]; k],
        e: vec![0.0; nodes],
        graph_independent: true,
    };
    for it in 0..nodes {
        let state = traj.state(it);
        for i in 0..k {
            gamma.y[i][it] = state[i];
            gamma.p[i][it] = state[k + i];
        }
    }
    gamma.fill_energy(sys)?;
    Ok(gamma)
}
