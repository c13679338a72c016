//! Exact symbolic scalars: the coefficient field for charts, forms, and
//! Hamiltonians.
//!
//! An [`Expression`] is a multivariate rational function with exact rational
//! coefficients, extended by the analytic primitives `sin`, `cos`, `exp`.
//! Values are immutable and kept in canonical normal form, so equality on
//! the polynomial/rational fragment is structural and exact. Equality in the
//! presence of analytic primitives is semi-decidable: structural equality
//! after normalization, then seeded numeric probing (see
//! [`Expression::equivalent`]).
//!
//! There is deliberately no general simplifier beyond expand/collect over
//! the term order: differentiation, substitution, and arithmetic always
//! land back in normal form.

mod atom;
mod compiled;
mod parse;
mod poly;
mod ratfunc;

pub use atom::Atom;
pub use compiled::CompiledExpr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use ratfunc::RatFunc;

/// Agreement threshold for numeric equality probing.
pub const PROBE_TOLERANCE: f64 = 1e-12;
/// Number of sample points used when probing analytic expressions.
pub const PROBE_POINTS: usize = 8;
const PROBE_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("division by zero in expression arithmetic")]
    ZeroDenominator,
    #[error("'{0}' is not a declared coordinate")]
    UnknownCoordinate(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("division by zero: denominator '{denominator}' vanishes at the point")]
    DivisionByZero { denominator: String },
    #[error("coefficient does not fit in an IEEE double")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError { position, message: message.into() }
    }
}

/// An immutable symbolic scalar in canonical normal form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expression {
    nf: RatFunc,
}

impl Expression {
    pub fn zero() -> Self {
        Expression { nf: RatFunc::zero() }
    }

    pub fn one() -> Self {
        Expression { nf: RatFunc::one() }
    }

    pub fn integer(i: i64) -> Self {
        Expression { nf: RatFunc::constant(BigRational::from_integer(BigInt::from(i))) }
    }

    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational constant with zero denominator");
        Expression {
            nf: RatFunc::constant(BigRational::new(BigInt::from(num), BigInt::from(den))),
        }
    }

    pub(crate) fn rational_big(r: BigRational) -> Self {
        Expression { nf: RatFunc::constant(r) }
    }

    pub fn var(name: &str) -> Self {
        Expression { nf: RatFunc::var(name) }
    }

    pub fn parse(input: &str) -> Result<Self, ParseError> {
        parse::parse(input)
    }

    pub fn sin(self) -> Self {
        Expression { nf: ratfunc::sin_of(self.nf) }
    }

    pub fn cos(self) -> Self {
        Expression { nf: ratfunc::cos_of(self.nf) }
    }

    pub fn exp(self) -> Self {
        Expression { nf: ratfunc::exp_of(self.nf) }
    }

    pub fn is_zero(&self) -> bool {
        self.nf.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.nf.as_constant().is_some()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        self.nf.as_constant()
    }

    /// True when no analytic primitive occurs (pure rational function).
    pub fn is_rational_fragment(&self) -> bool {
        !self.nf.has_analytic()
    }

    pub fn is_polynomial(&self) -> bool {
        self.nf.is_polynomial() && !self.nf.has_analytic()
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.nf.collect_vars(&mut out);
        out
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.nf.depends_on(name)
    }

    pub fn total_degree(&self) -> u32 {
        self.nf.total_degree()
    }

    /// Exact partial derivative with respect to `var`.
    pub fn diff(&self, var: &str) -> Expression {
        Expression { nf: self.nf.derivative(var) }
    }

    /// Partial derivative that rejects names outside the declared
    /// coordinate list.
    pub fn diff_checked(&self, var: &str, declared: &[String]) -> Result<Expression, ExprError> {
        if !declared.iter().any(|c| c == var) {
            return Err(ExprError::UnknownCoordinate(var.to_string()));
        }
        Ok(self.diff(var))
    }

    /// IEEE-double value at the point; every free variable must be bound.
    pub fn evaluate(&self, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        self.nf.evaluate(point)
    }

    /// Simultaneous substitution followed by normalization.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<String, Expression>,
    ) -> Result<Expression, ExprError> {
        let subs: BTreeMap<String, RatFunc> =
            bindings.iter().map(|(k, v)| (k.clone(), v.nf.clone())).collect();
        Ok(Expression { nf: self.nf.substitute(&subs)? })
    }

    pub fn checked_div(&self, other: &Expression) -> Result<Expression, ExprError> {
        Ok(Expression { nf: self.nf.div(&other.nf)? })
    }

    pub fn checked_powi(&self, e: i64) -> Result<Expression, ExprError> {
        Ok(Expression { nf: self.nf.powi(e)? })
    }

    pub fn powi(&self, e: i64) -> Expression {
        self.checked_powi(e).expect("negative power of zero")
    }

    /// Semantic equality: exact on the rational fragment; with analytic
    /// primitives, structural equality of normal forms first, then seeded
    /// numeric probing at [`PROBE_POINTS`] points to [`PROBE_TOLERANCE`].
    pub fn equivalent(&self, other: &Expression) -> bool {
        // Exact path: cross-multiplied difference of normal forms.
        let diff = self.nf.sub(&other.nf);
        if diff.is_zero() {
            return true;
        }
        if !diff.has_analytic() {
            return false;
        }
        let mut vars = BTreeSet::new();
        diff.collect_vars(&mut vars);
        let vars: Vec<String> = vars.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < PROBE_POINTS && attempts < PROBE_POINTS * 16 {
            attempts += 1;
            let point: BTreeMap<String, f64> = vars
                .iter()
                .map(|v| (v.clone(), rng.gen_range(-1.0..1.0)))
                .collect();
            let (a, b) = match (self.nf.evaluate(&point), other.nf.evaluate(&point)) {
                (Ok(a), Ok(b)) => (a, b),
                // singular point (e.g. a pole): resample
                _ => continue,
            };
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            if (a - b).abs() > PROBE_TOLERANCE * scale {
                return false;
            }
            checked += 1;
        }
        checked == PROBE_POINTS
    }
}

/// `true` iff `a - b` normalizes to zero (exact on the rational fragment,
/// probed on the analytic fragment).
pub fn normalize_equal(a: &Expression, b: &Expression) -> bool {
    a.equivalent(b)
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl $trait for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression { nf: self.nf.$impl(&rhs.nf) }
            }
        }
        impl $trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression { nf: self.nf.$impl(&rhs.nf) }
            }
        }
        impl $trait<&Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression { nf: self.nf.$impl(&rhs.nf) }
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        self.checked_div(&rhs).expect("division by zero expression")
    }
}

impl Div<&Expression> for &Expression {
    type Output = Expression;
    fn div(self, rhs: &Expression) -> Expression {
        self.checked_div(rhs).expect("division by zero expression")
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression { nf: self.nf.neg() }
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression { nf: self.nf.neg() }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nf)
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({})", self.nf)
    }
}

impl Expression {
    /// Compiles to a closed evaluation tree over a fixed variable layout,
    /// for tight numeric loops (integration, grid residuals).
    pub fn compile(&self, layout: &[String]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::compile(&self.nf, layout)
    }

    /// Monomial view `(variable -> exponent, coefficient)` of a pure
    /// polynomial; `None` when the expression has a denominator or analytic
    /// primitives.
    pub fn monomials(&self) -> Option<Vec<(BTreeMap<String, u32>, BigRational)>> {
        if !self.is_polynomial() {
            return None;
        }
        let mut out = Vec::with_capacity(self.nf.num.terms.len());
        for (m, c) in &self.nf.num.terms {
            let mut vars = BTreeMap::new();
            for (a, e) in &m.0 {
                match a {
                    Atom::Var(v) => {
                        vars.insert(v.clone(), *e);
                    }
                    _ => return None,
                }
            }
            out.push((vars, c.clone()));
        }
        Some(out)
    }

    /// Rebuilds an expression from monomial data.
    pub fn from_monomials(
        terms: impl IntoIterator<Item = (BTreeMap<String, u32>, BigRational)>,
    ) -> Expression {
        let mut acc = Expression::zero();
        for (vars, c) in terms {
            let mut t = Expression::rational_big(c);
            for (v, e) in vars {
                t = t * Expression::var(&v).powi(e as i64);
            }
            acc = acc + t;
        }
        acc
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn power_rule() {
        assert!(e("q^2").diff("q").equivalent(&e("2*q")));
        assert!(e("p*q").diff("p").equivalent(&e("q")));
        assert!(e("sin(q)").diff("q").equivalent(&e("cos(q)")));
    }

    #[test]
    fn evaluate_basics() {
        let pt: BTreeMap<String, f64> =
            [("q".to_string(), 3.0), ("p".to_string(), 2.0)].into_iter().collect();
        assert_eq!(e("p*q").evaluate(&pt).unwrap(), 6.0);
        let pt2: BTreeMap<String, f64> =
            [("q".to_string(), 1.0), ("p".to_string(), 0.0)].into_iter().collect();
        assert_eq!(e("(q^2+p^2)/2").evaluate(&pt2).unwrap(), 0.5);
        let origin: BTreeMap<String, f64> = [("q".to_string(), 0.0)].into_iter().collect();
        match e("1/q").evaluate(&origin) {
            Err(EvalError::DivisionByZero { denominator }) => assert_eq!(denominator, "q"),
            other => panic!("expected division by zero, got {other:?}"),
        }
        match e("p*q").evaluate(&origin) {
            Err(EvalError::UnboundVariable(v)) => assert_eq!(v, "p"),
            other => panic!("expected unbound variable, got {other:?}"),
        }
    }

    #[test]
    fn normalization_equalities() {
        assert!(e("(q+p)^2").equivalent(&e("q^2 + 2*q*p + p^2")));
        assert!(e("q*p").equivalent(&e("p*q")));
        assert!(!e("q").equivalent(&e("p")));
        // identical representation on the rational fragment
        assert_eq!(e("(q+p)^2"), e("q^2 + 2*q*p + p^2"));
    }

    #[test]
    fn substitution() {
        let h = e("(q^2+p^2)/2");
        let constraint = e("p0") + h.clone();
        let bound: BTreeMap<String, Expression> =
            [("p0".to_string(), -h.clone())].into_iter().collect();
        assert!(constraint.substitute(&bound).unwrap().is_zero());

        let subs: BTreeMap<String, Expression> =
            [("q".to_string(), e("p"))].into_iter().collect();
        assert!(e("q^2").substitute(&subs).unwrap().equivalent(&e("p^2")));

        let untouched = e("q^2+1");
        assert_eq!(untouched.substitute(&BTreeMap::new()).unwrap(), untouched);
    }

    #[test]
    fn display_round_trip() {
        for src in [
            "q^2 + 2*q*p + p^2",
            "(p)/(q)",
            "sin(q)^2*cos(p)",
            "1/2*q - 3*p^4",
            "exp(2*t)*q",
            "(q^2 - 1/3)/(p + 1)",
        ] {
            let parsed = e(src);
            let printed = parsed.to_string();
            let reparsed = e(&printed);
            assert_eq!(parsed, reparsed, "round trip failed for {src} -> {printed}");
            assert_eq!(printed, reparsed.to_string());
        }
    }

    #[test]
    fn analytic_probing() {
        // differs from zero structurally, equal numerically
        let lhs = e("sin(q)*cos(q)");
        let rhs = e("cos(q)*sin(q)");
        assert!(lhs.equivalent(&rhs));
        assert!(!e("sin(q)").equivalent(&e("cos(q)")));
        // sin(0) folds exactly
        assert!(e("sin(0)").is_zero());
        assert!(e("cos(0)").equivalent(&e("1")));
    }

    #[test]
    fn rational_canonical_form() {
        // (q^2 - p^2)/(q - p) reduces to q + p
        let a = e("(q^2 - p^2)/(q - p)");
        assert_eq!(a, e("q + p"));
    }
}
