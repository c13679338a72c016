//! Legendre transforms: mechanics and field versions.
//!
//! For Lagrangians quadratic in the velocities the momentum relations
//! `p = dL/dv` are linear in `v` and are inverted symbolically by Gaussian
//! elimination over expressions. Anything else is inverted numerically by
//! Newton at evaluation points (`legendre_eval_numeric`).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::expr::Expression;

use super::{DDWSystem, DdwError, LagrangianField};

/// Result of a symbolic mechanics-style Legendre transform.
#[derive(Debug, Clone)]
pub struct LegendreMechanics {
    /// `H(q, p) = p Z(q, p) - L(q, Z(q, p))`.
    pub hamiltonian: Expression,
    /// The inverse map `Z^i(q, p)`, ordered like the velocity names.
    pub velocity_map: Vec<Expression>,
}

/// Solves the linear system `A v = rhs` over expressions; `A` must be
/// velocity-free. Returns `None` when `A` is singular as a symbolic matrix.
fn solve_linear_symbolic(
    a: &[Vec<Expression>],
    rhs: &[Expression],
) -> Option<Vec<Expression>> {
    let m = rhs.len();
    let mut mat: Vec<Vec<Expression>> = a.to_vec();
    let mut b: Vec<Expression> = rhs.to_vec();
    let mut perm: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    for col in 0..m {
        // pivot: lowest total degree nonzero in this column
        let pivot = (0..m)
            .filter(|r| !used[*r] && !mat[*r][col].is_zero())
            .min_by_key(|r| (mat[*r][col].total_degree(), *r))?;
        used[pivot] = true;
        perm.push(pivot);
        let pv = mat[pivot][col].clone();
        for r in 0..m {
            if r == pivot || mat[r][col].is_zero() {
                continue;
            }
            let f = mat[r][col].checked_div(&pv).ok()?;
            for c in 0..m {
                let delta = &f * &mat[pivot][c];
                mat[r][c] = &mat[r][c] - &delta;
            }
            let delta = &f * &b[pivot];
            b[r] = &b[r] - &delta;
        }
    }
    let mut out = vec![Expression::zero(); m];
    for (col, r) in perm.iter().enumerate() {
        out[col] = b[*r].checked_div(&mat[*r][col]).ok()?;
    }
    Some(out)
}

/// Shared core: invert `p_a = dL/dv_a` for quadratic-in-`v` Lagrangians and
/// assemble `H = p v - L`.
fn legendre_symbolic(
    lagrangian: &Expression,
    velocity_names: &[String],
    momentum_names: &[String],
) -> Result<(Expression, Vec<Expression>), DdwError> {
    let m = velocity_names.len();
    // p_a = dL/dv_a = sum_b A_ab v_b + c_a with A velocity-free
    let mut a = vec![vec![Expression::zero(); m]; m];
    let mut quadratic = true;
    for (r, va) in velocity_names.iter().enumerate() {
        let da = lagrangian.diff(va);
        for (c, vb) in velocity_names.iter().enumerate() {
            let h = da.diff(vb);
            if velocity_names.iter().any(|v| h.depends_on(v)) {
                quadratic = false;
            }
            a[r][c] = h;
        }
    }
    if !quadratic {
        return Err(DdwError::NonQuadraticLagrangian);
    }
    let zero_vel: BTreeMap<String, Expression> = velocity_names
        .iter()
        .map(|v| (v.clone(), Expression::zero()))
        .collect();
    // rhs_a = p_a - dL/dv_a|_{v=0}
    let rhs: Vec<Expression> = velocity_names
        .iter()
        .enumerate()
        .map(|(i, va)| {
            let base = lagrangian.diff(va).substitute(&zero_vel)?;
            Ok(Expression::var(&momentum_names[i]) - base)
        })
        .collect::<Result<_, crate::expr::ExprError>>()?;
    let vmap = solve_linear_symbolic(&a, &rhs).ok_or_else(|| {
        DdwError::DegenerateLegendre("velocity Hessian is symbolically singular".into())
    })?;

    let subs: BTreeMap<String, Expression> = velocity_names
        .iter()
        .cloned()
        .zip(vmap.iter().cloned())
        .collect();
    let mut h = Expression::zero();
    for (i, _) in velocity_names.iter().enumerate() {
        h = h + Expression::var(&momentum_names[i]) * vmap[i].clone();
    }
    h = h - lagrangian.substitute(&subs)?;
    Ok((h, vmap))
}

/// Mechanics Legendre transform `L(q, z) -> H(q, p)` for Lagrangians
/// quadratic in the velocities.
pub fn legendre_mechanics(
    lagrangian: &Expression,
    velocities: &[&str],
    momenta: &[&str],
) -> Result<LegendreMechanics, DdwError> {
    assert_eq!(velocities.len(), momenta.len());
    let vels: Vec<String> = velocities.iter().map(|s| s.to_string()).collect();
    let moms: Vec<String> = momenta.iter().map(|s| s.to_string()).collect();
    let (hamiltonian, velocity_map) = legendre_symbolic(lagrangian, &vels, &moms)?;
    Ok(LegendreMechanics { hamiltonian, velocity_map })
}

/// Numeric Legendre data at one evaluation point: inverts `p = dL/dv` by
/// Newton and returns `(H, v)`. Works for non-quadratic Lagrangians with an
/// invertible Hessian near the solution.
pub fn legendre_eval_numeric(
    lagrangian: &Expression,
    coords: &BTreeMap<String, f64>,
    velocities: &[&str],
    momentum_values: &[f64],
) -> Result<(f64, Vec<f64>), DdwError> {
    let m = velocities.len();
    assert_eq!(momentum_values.len(), m);
    let grads: Vec<Expression> = velocities.iter().map(|v| lagrangian.diff(v)).collect();
    let hess: Vec<Vec<Expression>> = grads
        .iter()
        .map(|g| velocities.iter().map(|v| g.diff(v)).collect())
        .collect();
    let mut bind = coords.clone();
    // Newton with a few restarts; v = 0 can sit on a Hessian singularity
    'restart: for start in [0.0, 1.0, -1.0, 0.37] {
        let mut v = vec![start; m];
        for _ in 0..100 {
            for (name, val) in velocities.iter().zip(&v) {
                bind.insert(name.to_string(), *val);
            }
            let g = DVector::from_fn(m, |i, _| {
                grads[i].evaluate(&bind).unwrap_or(f64::NAN) - momentum_values[i]
            });
            if g.amax() < 1e-12 {
                let l = lagrangian.evaluate(&bind)?;
                let h =
                    momentum_values.iter().zip(&v).map(|(p, z)| p * z).sum::<f64>() - l;
                return Ok((h, v));
            }
            let j =
                DMatrix::from_fn(m, m, |r, c| hess[r][c].evaluate(&bind).unwrap_or(f64::NAN));
            let Some(delta) = j.lu().solve(&g) else { continue 'restart };
            if delta.iter().any(|d| !d.is_finite()) {
                continue 'restart;
            }
            for i in 0..m {
                v[i] -= delta[i];
            }
        }
    }
    Err(DdwError::DegenerateLegendre(
        "Newton inversion did not converge from any starting point".into(),
    ))
}

/// Field Legendre transform: builds the [`DDWSystem`] with
/// `H(x, y, p) = p^mu_i v^i_mu - L` at the inverted velocities.
pub fn legendre_field(lf: &LagrangianField) -> Result<DDWSystem, DdwError> {
    // flatten velocities in (mu, i) order matching the DDW chart momenta
    let mut vels = Vec::with_capacity(lf.n * lf.k);
    let mut moms = Vec::with_capacity(lf.n * lf.k);
    for mu in 0..lf.n {
        for i in 0..lf.k {
            vels.push(lf.velocities[i][mu].clone());
            moms.push(format!("p_{}_{}", lf.spacetime[mu], lf.fields[i]));
        }
    }
    let (h, _vmap) = legendre_symbolic(&lf.lagrangian, &vels, &moms)?;
    let spacetime: Vec<&str> = lf.spacetime.iter().map(|s| s.as_str()).collect();
    let fields: Vec<&str> = lf.fields.iter().map(|s| s.as_str()).collect();
    DDWSystem::new(&spacetime, &fields, h)
}
