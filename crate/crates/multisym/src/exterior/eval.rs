//! Numeric snapshots of forms and their contraction with numeric vectors.
//!
//! Grid-level checks (geometric residuals, slice integrals, the variational
//! identity) evaluate a form's coefficients at a phase-space point once and
//! then contract with finite-difference tangent vectors. The contraction
//! convention matches the symbolic one: first vector innermost.

use std::collections::BTreeMap;

use crate::expr::{CompiledExpr, EvalError};

use super::form::DifferentialForm;

/// A form evaluated at a point: sparse multi-index -> f64.
#[derive(Clone, Debug)]
pub struct FormValue {
    pub degree: usize,
    pub terms: BTreeMap<Vec<usize>, f64>,
}

impl FormValue {
    pub fn coefficient(&self, idx: &[usize]) -> f64 {
        self.terms.get(idx).copied().unwrap_or(0.0)
    }

    pub fn scalar(&self) -> f64 {
        self.coefficient(&[])
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Contracts the vectors in order (first innermost), one degree each.
    pub fn contract(&self, vectors: &[&[f64]]) -> FormValue {
        let mut out = FormValue { degree: self.degree, terms: self.terms.clone() };
        for v in vectors {
            out = out.contract_one(v);
        }
        out
    }

    fn contract_one(&self, v: &[f64]) -> FormValue {
        assert!(self.degree >= 1, "contraction degree underflow");
        let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (idx, c) in &self.terms {
            for (pos, i) in idx.iter().enumerate() {
                let vi = v[*i];
                if vi == 0.0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = idx.clone();
                rest.remove(pos);
                *terms.entry(rest).or_insert(0.0) += sign * vi * c;
            }
        }
        FormValue { degree: self.degree - 1, terms }
    }
}

/// A form whose coefficients are compiled against a coordinate layout, for
/// repeated evaluation on grids.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    pub degree: usize,
    terms: Vec<(Vec<usize>, CompiledExpr)>,
}

impl CompiledForm {
    /// The layout must be the chart's own coordinate order.
    pub fn compile(form: &DifferentialForm, layout: &[String]) -> Result<Self, EvalError> {
        let terms = form
            .terms()
            .map(|(idx, c)| Ok((idx.clone(), c.compile(layout)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(CompiledForm { degree: form.degree(), terms })
    }

    pub fn eval(&self, point: &[f64]) -> FormValue {
        let mut terms = BTreeMap::new();
        for (idx, c) in &self.terms {
            let v = c.eval(point);
            if v != 0.0 {
                terms.insert(idx.clone(), v);
            }
        }
        FormValue { degree: self.degree, terms }
    }
}
