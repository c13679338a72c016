//! Leapfrog solver for 1+1-dimensional wave-family systems.
//!
//! Handles Hamiltonians of the form
//! `H = (p^t)^2/2 - (p^x)^2/2 + V(x, y)` (k = 1), i.e. the nonlinear wave
//! equation `u_tt = u_xx - V'(u)` with periodic space. The scheme is the
//! staggered leapfrog on the first-order variables: `p^t` advances on half
//! steps, `y` on whole steps; nodal `p^t` is reported as the centered time
//! difference and `p^x = -u_x`, so the output residuals close at second
//! order. The energy samples are filled with `e = -H`.

use crate::expr::Expression;
use crate::parallel;

use super::{DDWSystem, DdwError, DiscreteGamma, GridSpec};

/// Largest admitted Courant ratio `ht/hx`.
pub const CFL_LIMIT: f64 = 0.9;

/// Checks the wave-family shape and returns `V = H - ((p^t)^2 - (p^x)^2)/2`.
fn wave_family_potential(sys: &DDWSystem) -> Result<Expression, DdwError> {
    if sys.n() != 2 || sys.k() != 1 {
        return Err(DdwError::NotWaveFamily("need n = 2, k = 1".into()));
    }
    let chart = sys.chart();
    let pt = chart.name(chart.momentum_index(0, 0).unwrap()).to_string();
    let px = chart.name(chart.momentum_index(1, 0).unwrap()).to_string();
    let h = sys.hamiltonian();
    let pt_expr = Expression::var(&pt);
    let px_expr = Expression::var(&px);
    if !h.diff(&pt).equivalent(&pt_expr) {
        return Err(DdwError::NotWaveFamily(format!("dH/d{pt} != {pt}")));
    }
    if !h.diff(&px).equivalent(&(-px_expr.clone())) {
        return Err(DdwError::NotWaveFamily(format!("dH/d{px} != -{px}")));
    }
    let v = h.clone()
        - (pt_expr.clone() * pt_expr - px_expr.clone() * px_expr)
            .checked_div(&Expression::integer(2))?;
    if v.depends_on(&pt) || v.depends_on(&px) {
        return Err(DdwError::NotWaveFamily(
            "potential part still depends on the momenta".into(),
        ));
    }
    Ok(v)
}

/// Integrates the wave-family system from initial data `u0(x)`, `du0(x)`
/// (time derivative at t = 0) on a periodic grid.
pub fn solve_field(
    sys: &DDWSystem,
    u0: &(dyn Fn(f64) -> f64 + Sync),
    du0: &(dyn Fn(f64) -> f64 + Sync),
    spec: GridSpec,
) -> Result<DiscreteGamma, DdwError> {
    let potential = wave_family_potential(sys)?;
    let chart = sys.chart();
    let y_name = chart.name(chart.field_index(0).unwrap()).to_string();
    let x_name = chart.name(chart.spacetime_index(1).unwrap()).to_string();
    let t_name = chart.name(chart.spacetime_index(0).unwrap()).to_string();
    let layout = vec![t_name, x_name, y_name];
    let dv = potential.diff(&layout[2]).compile(&layout)?;

    let ht = spec.t_max / spec.nt as f64;
    let hx = spec.x_max / spec.nx as f64;
    let ratio = ht / hx;
    if ratio > CFL_LIMIT {
        return Err(DdwError::CflViolation { ratio });
    }
    if spec.nt < 2 || spec.nx < 3 {
        return Err(DdwError::GridTooSmall { need: 3, got: spec.nt.min(spec.nx) });
    }

    let nt = spec.nt;
    let nx = spec.nx;
    let nodes = (nt + 1) * nx;
    let mut u = vec![0.0; nodes];
    let lap = |row: &[f64], ix: usize| -> f64 {
        let left = row[(ix + nx - 1) % nx];
        let right = row[(ix + 1) % nx];
        (right - 2.0 * row[ix] + left) / (hx * hx)
    };

    for ix in 0..nx {
        u[ix] = u0(ix as f64 * hx);
    }
    // second-order Taylor start
    {
        let (row0, rest) = u.split_at_mut(nx);
        let row1 = &mut rest[..nx];
        let new_row: Vec<f64> = parallel::map_indexed(nx, |ix| {
            let x = ix as f64 * hx;
            let force = lap(row0, ix) - dv.eval(&[0.0, x, row0[ix]]);
            row0[ix] + ht * du0(x) + 0.5 * ht * ht * force
        });
        row1.copy_from_slice(&new_row);
    }
    for it in 1..nt {
        let t = it as f64 * ht;
        let (prev_rows, next_rows) = u.split_at_mut((it + 1) * nx);
        let prev = &prev_rows[(it - 1) * nx..it * nx];
        let curr = &prev_rows[it * nx..(it + 1) * nx];
        let next = &mut next_rows[..nx];
        let new_row: Vec<f64> = parallel::map_indexed(nx, |ix| {
            let x = ix as f64 * hx;
            let force = lap(curr, ix) - dv.eval(&[t, x, curr[ix]]);
            2.0 * curr[ix] - prev[ix] + ht * ht * force
        });
        next.copy_from_slice(&new_row);
    }

    // nodal momenta: p^t by centered/one-sided 2nd-order time differences,
    // p^x = -u_x (centered periodic)
    let mut gamma = DiscreteGamma {
        n: 2,
        k: 1,
        ht,
        hx,
        nt,
        nx,
        periodic_x: true,
        y: vec![u.clone()],
        p: vec![vec![0.0; nodes]; 2],
        e: vec![0.0; nodes],
        graph_independent: true,
    };
    // scheme-generated ghost rows: the leapfrog recursion run once past each
    // end, so the nodal p^t is the centered difference at every row and the
    // residual stencils stay uniformly second order
    let ghost_pre: Vec<f64> = (0..nx)
        .map(|ix| {
            let force = lap(&u[..nx], ix) - dv.eval(&[0.0, ix as f64 * hx, u[ix]]);
            2.0 * u[ix] - u[nx + ix] + ht * ht * force
        })
        .collect();
    let ghost_post: Vec<f64> = (0..nx)
        .map(|ix| {
            let last = &u[nt * nx..];
            let force =
                lap(last, ix) - dv.eval(&[nt as f64 * ht, ix as f64 * hx, last[ix]]);
            2.0 * last[ix] - u[(nt - 1) * nx + ix] + ht * ht * force
        })
        .collect();
    for it in 0..=nt {
        for ix in 0..nx {
            let id = it * nx + ix;
            gamma.p[0][id] = if it == 0 {
                (u[nx + ix] - ghost_pre[ix]) / (2.0 * ht)
            } else if it == nt {
                (ghost_post[ix] - u[id - nx]) / (2.0 * ht)
            } else {
                (u[id + nx] - u[id - nx]) / (2.0 * ht)
            };
            let left = it * nx + (ix + nx - 1) % nx;
            let right = it * nx + (ix + 1) % nx;
            gamma.p[1][id] = -(u[right] - u[left]) / (2.0 * hx);
        }
    }
    gamma.fill_energy(sys)?;
    Ok(gamma)
}

/// Spatial energy functional per time row:
/// `E(t) = sum_x [ (p^t)^2/2 + (p^x)^2/2 + V(x, y) ] hx`.
pub fn energy_series(sys: &DDWSystem, gamma: &DiscreteGamma) -> Result<Vec<f64>, DdwError> {
    let potential = wave_family_potential(sys)?;
    let chart = sys.chart();
    let layout = vec![
        chart.name(chart.spacetime_index(0).unwrap()).to_string(),
        chart.name(chart.spacetime_index(1).unwrap()).to_string(),
        chart.name(chart.field_index(0).unwrap()).to_string(),
    ];
    let v = potential.compile(&layout)?;
    let mut out = Vec::with_capacity(gamma.rows());
    for it in 0..gamma.rows() {
        let t = gamma.t(it);
        let mut acc = 0.0;
        for ix in 0..gamma.nx {
            let id = gamma.idx(it, ix);
            let pt = gamma.p[0][id];
            let px = gamma.p[1][id];
            acc += 0.5 * (pt * pt + px * px) + v.eval(&[t, gamma.x(ix), gamma.y[0][id]]);
        }
        out.push(acc * gamma.hx);
    }
    Ok(out)
}

/// Checks the wave-family shape; used by scenario validation to produce
/// early diagnostics.
pub fn is_wave_family(sys: &DDWSystem) -> bool {
    wave_family_potential(sys).is_ok()
}
