//! Sparse differential forms and multivectors over expression coefficients.
//!
//! Both kinds store a sparse map from strictly increasing coordinate
//! multi-indices to [`Expression`] coefficients; zero coefficients are never
//! stored, so `is_zero` is structural. All operations return canonical
//! sparse values.
//!
//! Sign conventions (fixed once, validated globally by the mechanics bracket
//! chain, see the crate tests):
//! - single contraction is the alternating sum
//!   `v . (dx_{j1} ^ ... ^ dx_{jp}) = sum_a (-1)^(a-1) v^{ja} dx_{J \ ja}`;
//! - contraction by a decomposable multivector contracts the *first* wedge
//!   factor innermost: `(X1 ^ ... ^ Xk) . w = w(X1, ..., Xk, ...)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::expr::Expression;

use super::chart::{Chart, ChartMap, ChartRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("contraction degree {vector} exceeds form degree {form}")]
    DegreeUnderflow { vector: usize, form: usize },
    #[error("multi-index {0:?} is invalid for a degree-{1} object on this chart")]
    BadIndex(Vec<usize>, usize),
    #[error("Lie derivative requires a degree-1 vector field, got degree {0}")]
    NotAVectorField(usize),
    #[error("pullback map lacks a component for coordinate '{0}'")]
    MissingComponent(String),
    #[error("expression error: {0}")]
    Expr(#[from] crate::expr::ExprError),
    #[error("chart error: {0}")]
    Chart(#[from] super::chart::ChartError),
}

/// Sorts `indices`, returning the permutation sign, or `None` when an index
/// repeats (the term vanishes).
pub fn sort_with_sign(indices: &mut Vec<usize>) -> Option<i32> {
    let mut sign = 1;
    // insertion sort, counting inversions
    for i in 1..indices.len() {
        let mut j = i;
        while j > 0 && indices[j - 1] > indices[j] {
            indices.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if indices.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Shared sparse storage for alternating tensors.
#[derive(Clone, PartialEq, Debug, Default)]
pub(crate) struct AltTable {
    pub degree: usize,
    pub terms: BTreeMap<Vec<usize>, Expression>,
}

impl AltTable {
    fn new(degree: usize) -> Self {
        AltTable { degree, terms: BTreeMap::new() }
    }

    fn add_term(&mut self, mut indices: Vec<usize>, coeff: Expression) {
        if coeff.is_zero() {
            return;
        }
        let Some(sign) = sort_with_sign(&mut indices) else {
            return;
        };
        let coeff = if sign < 0 { -coeff } else { coeff };
        use std::collections::btree_map::Entry;
        match self.terms.entry(indices) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn add(&self, other: &AltTable) -> AltTable {
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), c.clone());
        }
        out
    }

    fn scale(&self, s: &Expression) -> AltTable {
        let mut out = AltTable::new(self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), c * s);
        }
        out
    }

    fn neg(&self) -> AltTable {
        AltTable {
            degree: self.degree,
            terms: self.terms.iter().map(|(i, c)| (i.clone(), -c)).collect(),
        }
    }

    fn wedge(&self, other: &AltTable) -> AltTable {
        let mut out = AltTable::new(self.degree + other.degree);
        for (i1, c1) in &self.terms {
            for (i2, c2) in &other.terms {
                let mut idx = i1.clone();
                idx.extend_from_slice(i2);
                out.add_term(idx, c1 * c2);
            }
        }
        out
    }

    fn validate(&self, dim: usize) -> Result<(), ExteriorError> {
        for (idx, _) in &self.terms {
            let ok = idx.len() == self.degree
                && idx.windows(2).all(|w| w[0] < w[1])
                && idx.iter().all(|i| *i < dim);
            if !ok {
                return Err(ExteriorError::BadIndex(idx.clone(), self.degree));
            }
        }
        Ok(())
    }
}

/// A differential form of fixed degree on a chart.
#[derive(Clone, PartialEq, Debug)]
pub struct DifferentialForm {
    chart: ChartRef,
    table: AltTable,
}

/// A multivector (contravariant alternating tensor) on a chart, with an
/// optional decomposability witness.
#[derive(Clone, PartialEq, Debug)]
pub struct MultiVector {
    chart: ChartRef,
    table: AltTable,
    witness: Option<Vec<MultiVector>>,
}

fn same_chart(a: &ChartRef, b: &ChartRef) -> Result<(), ExteriorError> {
    if std::sync::Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(ExteriorError::ChartMismatch)
    }
}

impl DifferentialForm {
    pub fn zero(chart: ChartRef, degree: usize) -> Self {
        DifferentialForm { chart, table: AltTable::new(degree) }
    }

    /// Builds a form from (indices, coefficient) terms; indices are sorted
    /// with sign and like terms are collected.
    pub fn from_terms(
        chart: ChartRef,
        degree: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, Expression)>,
    ) -> Result<Self, ExteriorError> {
        let mut table = AltTable::new(degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(ExteriorError::BadIndex(idx, degree));
            }
            table.add_term(idx, c);
        }
        table.validate(chart.dim())?;
        Ok(DifferentialForm { chart, table })
    }

    /// The 0-form with the given coefficient.
    pub fn scalar(chart: ChartRef, value: Expression) -> Self {
        let mut table = AltTable::new(0);
        table.add_term(Vec::new(), value);
        DifferentialForm { chart, table }
    }

    /// Basis 1-form `dx_i`.
    pub fn basis(chart: ChartRef, i: usize) -> Self {
        let mut table = AltTable::new(1);
        table.add_term(vec![i], Expression::one());
        DifferentialForm { chart, table }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.table.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expression)> {
        self.table.terms.iter()
    }

    pub fn coefficient(&self, indices: &[usize]) -> Expression {
        self.table
            .terms
            .get(indices)
            .cloned()
            .unwrap_or_else(Expression::zero)
    }

    /// True iff every coefficient normalizes to zero.
    pub fn is_zero(&self) -> bool {
        self.table.terms.is_empty()
    }

    /// The coefficient of a 0-form (zero for empty tables).
    pub fn scalar_part(&self) -> Expression {
        self.coefficient(&[])
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        same_chart(&self.chart, &other.chart)?;
        Ok(DifferentialForm { chart: self.chart.clone(), table: self.table.add(&other.table) })
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        DifferentialForm { chart: self.chart.clone(), table: self.table.neg() }
    }

    pub fn scale(&self, s: &Expression) -> DifferentialForm {
        DifferentialForm { chart: self.chart.clone(), table: self.table.scale(s) }
    }

    /// Wedge product. Degree overflow (deg a + deg b > dim) yields the empty
    /// form of that degree: any such form is identically zero on the chart.
    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        same_chart(&self.chart, &other.chart)?;
        Ok(DifferentialForm { chart: self.chart.clone(), table: self.table.wedge(&other.table) })
    }

    /// Exterior derivative: coefficient-wise formal differentiation with
    /// antisymmetrization. Top-degree input returns the zero (deg+1)-form.
    pub fn exterior_derivative(&self) -> DifferentialForm {
        let mut table = AltTable::new(self.table.degree + 1);
        for (idx, c) in &self.table.terms {
            for (v, coord) in self.chart.coords().iter().enumerate() {
                let dc = c.diff(&coord.name);
                if dc.is_zero() {
                    continue;
                }
                let mut nidx = Vec::with_capacity(idx.len() + 1);
                nidx.push(v);
                nidx.extend_from_slice(idx);
                table.add_term(nidx, dc);
            }
        }
        DifferentialForm { chart: self.chart.clone(), table }
    }

    /// Pullback along the componentwise map `phi` (result lives on the
    /// source chart): coefficients are substituted, differentials become
    /// total differentials of the components.
    pub fn pullback(&self, phi: &ChartMap) -> Result<DifferentialForm, ExteriorError> {
        same_chart(&self.chart, &phi.target)?;
        // total differentials of each used target coordinate, as source forms
        let mut differentials: BTreeMap<usize, DifferentialForm> = BTreeMap::new();
        let mut used: Vec<usize> = self.table.terms.keys().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        for t in used {
            let name = self.chart.name(t);
            let comp = phi
                .components
                .get(name)
                .ok_or_else(|| ExteriorError::MissingComponent(name.to_string()))?;
            let mut d = DifferentialForm::zero(phi.source.clone(), 1);
            for (s, sc) in phi.source.coords().iter().enumerate() {
                let dc = comp.diff(&sc.name);
                if !dc.is_zero() {
                    d.table.add_term(vec![s], dc);
                }
            }
            differentials.insert(t, d);
        }
        // substitution map for coefficients
        let mut subs: BTreeMap<String, Expression> = BTreeMap::new();
        for c in self.chart.coords() {
            if let Some(comp) = phi.components.get(&c.name) {
                subs.insert(c.name.clone(), comp.clone());
            }
        }
        let mut out = DifferentialForm::zero(phi.source.clone(), self.table.degree);
        for (idx, c) in &self.table.terms {
            for name in c.free_variables() {
                if self.chart.index_of(&name).is_ok() && !subs.contains_key(&name) {
                    return Err(ExteriorError::MissingComponent(name));
                }
            }
            let coeff = c.substitute(&subs)?;
            if coeff.is_zero() {
                continue;
            }
            let mut acc = DifferentialForm::scalar(phi.source.clone(), coeff);
            for t in idx {
                acc = acc.wedge(&differentials[t])?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }
}

impl MultiVector {
    pub fn zero(chart: ChartRef, degree: usize) -> Self {
        MultiVector { chart, table: AltTable::new(degree), witness: None }
    }

    pub fn from_terms(
        chart: ChartRef,
        degree: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, Expression)>,
    ) -> Result<Self, ExteriorError> {
        let mut table = AltTable::new(degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(ExteriorError::BadIndex(idx, degree));
            }
            table.add_term(idx, c);
        }
        table.validate(chart.dim())?;
        Ok(MultiVector { chart, table, witness: None })
    }

    /// A vector field from per-coordinate components (zero components may be
    /// omitted).
    pub fn vector_field(
        chart: ChartRef,
        components: impl IntoIterator<Item = (usize, Expression)>,
    ) -> Result<Self, ExteriorError> {
        MultiVector::from_terms(
            chart,
            1,
            components.into_iter().map(|(i, c)| (vec![i], c)),
        )
    }

    /// Basis vector `d/dx_i`.
    pub fn basis(chart: ChartRef, i: usize) -> Self {
        MultiVector::from_terms(chart, 1, [(vec![i], Expression::one())]).expect("valid basis")
    }

    /// Wedge of degree-1 factors, storing them as the decomposability
    /// witness.
    pub fn decomposable(factors: Vec<MultiVector>) -> Result<Self, ExteriorError> {
        assert!(!factors.is_empty(), "decomposable multivector needs factors");
        let mut acc = factors[0].clone();
        for f in &factors[1..] {
            acc = acc.wedge(f)?;
        }
        acc.witness = Some(factors);
        Ok(acc)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.table.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expression)> {
        self.table.terms.iter()
    }

    pub fn coefficient(&self, indices: &[usize]) -> Expression {
        self.table
            .terms
            .get(indices)
            .cloned()
            .unwrap_or_else(Expression::zero)
    }

    /// Components of a degree-1 field, indexed by coordinate.
    pub fn components(&self) -> Vec<Expression> {
        assert_eq!(self.table.degree, 1, "components() is for vector fields");
        (0..self.chart.dim())
            .map(|i| self.coefficient(&[i]))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.table.terms.is_empty()
    }

    pub fn witness(&self) -> Option<&[MultiVector]> {
        self.witness.as_deref()
    }

    /// Checks that the stored witness re-expands to the stored components.
    pub fn witness_consistent(&self) -> bool {
        match &self.witness {
            None => true,
            Some(factors) => {
                let mut acc = factors[0].clone();
                for f in &factors[1..] {
                    acc = match acc.wedge(f) {
                        Ok(w) => w,
                        Err(_) => return false,
                    };
                }
                acc.table.terms == self.table.terms
            }
        }
    }

    pub fn add(&self, other: &MultiVector) -> Result<MultiVector, ExteriorError> {
        same_chart(&self.chart, &other.chart)?;
        Ok(MultiVector {
            chart: self.chart.clone(),
            table: self.table.add(&other.table),
            witness: None,
        })
    }

    pub fn neg(&self) -> MultiVector {
        MultiVector { chart: self.chart.clone(), table: self.table.neg(), witness: None }
    }

    pub fn scale(&self, s: &Expression) -> MultiVector {
        MultiVector { chart: self.chart.clone(), table: self.table.scale(s), witness: None }
    }

    pub fn wedge(&self, other: &MultiVector) -> Result<MultiVector, ExteriorError> {
        same_chart(&self.chart, &other.chart)?;
        Ok(MultiVector {
            chart: self.chart.clone(),
            table: self.table.wedge(&other.table),
            witness: None,
        })
    }

    /// Applies the vector field to a function: `xi(f) = sum_i xi^i df/dx_i`.
    pub fn apply(&self, f: &Expression) -> Expression {
        assert_eq!(self.table.degree, 1, "apply() is for vector fields");
        let mut out = Expression::zero();
        for (idx, c) in &self.table.terms {
            out = out + c * &f.diff(self.chart.name(idx[0]));
        }
        out
    }
}

/// Interior product of a multivector into a form.
///
/// For decomposable `X = X1 ^ ... ^ Xk` this is iterated single
/// contraction with the first factor innermost, so the result pairs the
/// factors with the form's leading slots: `(X . w)(...) = w(X1, ..., Xk, ...)`.
pub fn interior_product(
    x: &MultiVector,
    omega: &DifferentialForm,
) -> Result<DifferentialForm, ExteriorError> {
    same_chart(x.chart(), omega.chart())?;
    if x.degree() > omega.degree() {
        return Err(ExteriorError::DegreeUnderflow { vector: x.degree(), form: omega.degree() });
    }
    let mut out = AltTable::new(omega.degree() - x.degree());
    for (vi, vc) in &x.table.terms {
        for (fi, fc) in &omega.table.terms {
            // contract basis vector indices vi (in increasing order, first
            // factor innermost) into the basis form indices fi
            let mut remaining = fi.clone();
            let mut sign = 1;
            let mut ok = true;
            for v in vi {
                match remaining.iter().position(|j| j == v) {
                    Some(pos) => {
                        if pos % 2 == 1 {
                            sign = -sign;
                        }
                        remaining.remove(pos);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let coeff = vc * fc;
            out.add_term(remaining, if sign < 0 { -coeff } else { coeff });
        }
    }
    Ok(DifferentialForm { chart: omega.chart().clone(), table: out })
}

/// Lie derivative of a form along a vector field, via the Cartan formula
/// `L_xi w = d(xi . w) + xi . dw`.
pub fn lie_derivative(
    xi: &MultiVector,
    omega: &DifferentialForm,
) -> Result<DifferentialForm, ExteriorError> {
    if xi.degree() != 1 {
        return Err(ExteriorError::NotAVectorField(xi.degree()));
    }
    same_chart(xi.chart(), omega.chart())?;
    // on 0-forms the first Cartan term is vacuous
    let term1 = if omega.degree() == 0 {
        DifferentialForm::zero(omega.chart().clone(), 0)
    } else {
        interior_product(xi, omega)?.exterior_derivative()
    };
    let term2 = interior_product(xi, &omega.exterior_derivative())?;
    term1.add(&term2)
}

// ---------------------------------------------------------------------------
// Serialization: {chart, degree, terms: [{indices, coeff}]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermDoc {
    indices: Vec<usize>,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct FormDoc {
    chart: Chart,
    degree: usize,
    terms: Vec<TermDoc>,
}

impl Serialize for DifferentialForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let doc = FormDoc {
            chart: (*self.chart).clone(),
            degree: self.table.degree,
            terms: self
                .table
                .terms
                .iter()
                .map(|(idx, c)| TermDoc { indices: idx.clone(), coeff: c.to_string() })
                .collect(),
        };
        doc.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DifferentialForm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = FormDoc::deserialize(deserializer)?;
        let chart = Chart::new(doc.chart.coords().to_vec()).map_err(D::Error::custom)?;
        let terms: Result<Vec<_>, D::Error> = doc
            .terms
            .into_iter()
            .map(|t| {
                let coeff = Expression::parse(&t.coeff).map_err(D::Error::custom)?;
                Ok((t.indices, coeff))
            })
            .collect();
        DifferentialForm::from_terms(chart, doc.degree, terms?).map_err(D::Error::custom)
    }
}

fn fmt_terms(
    f: &mut fmt::Formatter<'_>,
    chart: &Chart,
    table: &AltTable,
    basis: &str,
    joiner: &str,
) -> fmt::Result {
    if table.terms.is_empty() {
        return write!(f, "0");
    }
    let mut first = true;
    for (idx, c) in &table.terms {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        if idx.is_empty() {
            write!(f, "({c})")?;
            continue;
        }
        write!(f, "({c}) ")?;
        for (pos, i) in idx.iter().enumerate() {
            if pos > 0 {
                write!(f, "{joiner}")?;
            }
            write!(f, "{basis}{}", chart.name(*i))?;
        }
    }
    Ok(())
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.chart, &self.table, "d", "^")
    }
}

impl fmt::Display for MultiVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.chart, &self.table, "@", "^")
    }
}
