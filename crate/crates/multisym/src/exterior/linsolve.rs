//! Symbolic linear solve for contraction equations `xi . Omega = rhs`.
//!
//! The unknown is a vector field; each multi-index of the target degree
//! contributes one linear equation over the rational-function field.
//! Elimination pivots on the lowest-total-degree nonzero entry
//! (deterministic tie-break by equation multi-index, then column), so runs
//! are reproducible.
//!
//! Coefficients containing analytic primitives have only semi-decidable
//! zero tests, so such systems are resolved numerically at seeded probe
//! points instead and reported as a numeric-only certificate.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::expr::Expression;
use crate::probe;

use super::form::{interior_product, DifferentialForm, ExteriorError, MultiVector};

/// Residual scale below which a numeric probe counts as consistent.
const NUMERIC_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    /// Unique symbolic solution.
    Unique(MultiVector),
    /// Solvable but with free directions (degenerate pairing); the returned
    /// field sets free components to zero.
    Underdetermined { solution: MultiVector, free_columns: Vec<usize> },
    /// No solution; the certificate names an equation that reduced to
    /// `0 = residual` with a nonzero residual.
    Inconsistent { equation: Vec<usize>, residual: Expression },
    /// Coefficients outside the rational fragment: decided by seeded probes
    /// only.
    NumericOnly { consistent: bool, max_residual: f64 },
}

/// Solves `xi . omega = rhs` for a degree-1 `xi` with expression components.
pub fn solve_contraction(
    omega: &DifferentialForm,
    rhs: &DifferentialForm,
) -> Result<SolveOutcome, ExteriorError> {
    if rhs.degree() + 1 != omega.degree() {
        return Err(ExteriorError::DegreeUnderflow { vector: 1, form: omega.degree() });
    }
    let chart = omega.chart().clone();
    let dim = chart.dim();

    // columns: coordinates; rows: multi-indices of degree omega.degree()-1
    let mut rows: BTreeMap<Vec<usize>, Vec<Expression>> = BTreeMap::new();
    let mut add_row = |idx: &Vec<usize>| {
        rows.entry(idx.clone())
            .or_insert_with(|| vec![Expression::zero(); dim]);
    };
    let mut columns: Vec<DifferentialForm> = Vec::with_capacity(dim);
    for i in 0..dim {
        let basis = MultiVector::basis(chart.clone(), i);
        let contracted = interior_product(&basis, omega)?;
        for (idx, _) in contracted.terms() {
            add_row(idx);
        }
        columns.push(contracted);
    }
    for (idx, _) in rhs.terms() {
        add_row(idx);
    }
    for (i, col) in columns.iter().enumerate() {
        for (idx, c) in col.terms() {
            rows.get_mut(idx).expect("row registered")[i] = c.clone();
        }
    }
    let row_keys: Vec<Vec<usize>> = rows.keys().cloned().collect();
    let mut matrix: Vec<Vec<Expression>> = row_keys.iter().map(|k| rows[k].clone()).collect();
    let mut rhs_vec: Vec<Expression> = row_keys.iter().map(|k| rhs.coefficient(k)).collect();

    let analytic = matrix
        .iter()
        .flatten()
        .chain(rhs_vec.iter())
        .any(|e| !e.is_rational_fragment());
    if analytic {
        return Ok(numeric_solve(&chart.names(), &matrix, &rhs_vec, &row_keys, chart, dim));
    }

    // Gaussian elimination with degree-minimal pivoting.
    let nrows = matrix.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; dim];
    let mut used_rows = vec![false; nrows];
    loop {
        let mut best: Option<(u32, usize, usize)> = None;
        for (r, row) in matrix.iter().enumerate() {
            if used_rows[r] {
                continue;
            }
            for (c, e) in row.iter().enumerate() {
                if pivot_of_col[c].is_some() || e.is_zero() {
                    continue;
                }
                let deg = e.total_degree();
                let better = match &best {
                    None => true,
                    Some((bd, br, bc)) => {
                        (deg, &row_keys[r], c) < (*bd, &row_keys[*br], *bc)
                    }
                };
                if better {
                    best = Some((deg, r, c));
                }
            }
        }
        let Some((_, pr, pc)) = best else { break };
        used_rows[pr] = true;
        pivot_of_col[pc] = Some(pr);
        let pivot = matrix[pr][pc].clone();
        for r in 0..nrows {
            if r == pr || matrix[r][pc].is_zero() {
                continue;
            }
            let factor = matrix[r][pc].checked_div(&pivot).expect("nonzero pivot");
            for c in 0..dim {
                let delta = &factor * &matrix[pr][c];
                matrix[r][c] = &matrix[r][c] - &delta;
            }
            let delta = &factor * &rhs_vec[pr];
            rhs_vec[r] = &rhs_vec[r] - &delta;
        }
    }

    // inconsistency: an unused row with zero coefficients but nonzero rhs
    for r in 0..nrows {
        if used_rows[r] {
            continue;
        }
        if matrix[r].iter().all(|e| e.is_zero()) && !rhs_vec[r].is_zero() {
            return Ok(SolveOutcome::Inconsistent {
                equation: row_keys[r].clone(),
                residual: rhs_vec[r].clone(),
            });
        }
    }

    let mut components = vec![Expression::zero(); dim];
    let mut free = Vec::new();
    for c in 0..dim {
        match pivot_of_col[c] {
            Some(r) => {
                components[c] = rhs_vec[r]
                    .checked_div(&matrix[r][c])
                    .expect("nonzero pivot");
            }
            None => free.push(c),
        }
    }
    let solution = MultiVector::from_terms(
        chart,
        1,
        components.into_iter().enumerate().map(|(i, c)| (vec![i], c)),
    )?;
    if free.is_empty() {
        Ok(SolveOutcome::Unique(solution))
    } else {
        // a free column only matters if its basis contraction is nonzero
        let genuinely_free: Vec<usize> = free
            .into_iter()
            .filter(|c| !columns_is_zero_column(&columns[*c]))
            .collect();
        if genuinely_free.is_empty() {
            Ok(SolveOutcome::Unique(solution))
        } else {
            Ok(SolveOutcome::Underdetermined { solution, free_columns: genuinely_free })
        }
    }
}

fn columns_is_zero_column(col: &DifferentialForm) -> bool {
    col.is_zero()
}

fn numeric_solve(
    names: &[String],
    matrix: &[Vec<Expression>],
    rhs: &[Expression],
    _row_keys: &[Vec<usize>],
    chart: super::chart::ChartRef,
    dim: usize,
) -> SolveOutcome {
    let points = probe::probe_points(probe::DEFAULT_SEED, 8, dim);
    let mut max_residual: f64 = 0.0;
    let mut consistent = true;
    for pt in &points {
        let bind: BTreeMap<String, f64> =
            names.iter().cloned().zip(pt.iter().copied()).collect();
        let eval = |e: &Expression| e.evaluate(&bind).unwrap_or(f64::NAN);
        let a = DMatrix::from_fn(matrix.len(), dim, |r, c| eval(&matrix[r][c]));
        let b = DVector::from_fn(matrix.len(), |r, _| eval(&rhs[r]));
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let svd = a.clone().svd(true, true);
        match svd.solve(&b, 1e-12) {
            Ok(x) => {
                let res = (&a * &x - &b).amax();
                max_residual = max_residual.max(res);
                if res > NUMERIC_TOLERANCE {
                    consistent = false;
                }
            }
            Err(_) => {
                consistent = false;
            }
        }
    }
    let _ = chart;
    SolveOutcome::NumericOnly { consistent, max_residual }
}
