//! Rational functions: reduced quotients of [`Poly`] values.
//!
//! The pair (num, den) is kept canonical: gcd(num, den) = 1 and the
//! denominator is monic in the term order. Equality of canonical forms is
//! therefore structural on the polynomial/rational fragment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::atom::Atom;
use super::poly::{gcd, Monomial, Poly};
use super::{EvalError, ExprError};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

/// Reduction is skipped above this size to keep worst cases bounded; the
/// representation stays exact, only non-canonical. Equality tests never rely
/// on reduction (they cross-multiply).
const GCD_TERM_BUDGET: usize = 4096;

impl RatFunc {
    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(Poly::one())
    }

    pub fn var(name: &str) -> Self {
        Self::from_poly(Poly::var(name))
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match (self.num.as_constant(), self.den.as_constant()) {
            (Some(n), Some(d)) if !d.is_zero() => Some(n / d),
            _ => None,
        }
    }

    /// Canonicalize: reduce by the gcd and make the denominator monic.
    pub fn normalized(num: Poly, den: Poly) -> Result<Self, ExprError> {
        if den.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RatFunc::zero());
        }
        let (mut num, mut den) = (num, den);
        if !den.is_one() && num.terms.len() + den.terms.len() <= GCD_TERM_BUDGET {
            let g = gcd(&num, &den);
            if !g.is_one() {
                num = num.exact_div(&g).expect("gcd divides numerator");
                den = den.exact_div(&g).expect("gcd divides denominator");
            }
        }
        let lc = den.leading_coefficient();
        if !lc.is_one() {
            let inv = BigRational::one() / lc;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(RatFunc { num, den })
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFunc::normalized(num, den).expect("nonzero denominators")
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominators")
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc, ExprError> {
        if other.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        RatFunc::normalized(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn powi(&self, e: i64) -> Result<RatFunc, ExprError> {
        if e >= 0 {
            Ok(RatFunc::normalized(self.num.pow(e as u32), self.den.pow(e as u32))
                .expect("nonzero denominator"))
        } else {
            if self.is_zero() {
                return Err(ExprError::ZeroDenominator);
            }
            let m = (-e) as u32;
            RatFunc::normalized(self.den.pow(m), self.num.pow(m))
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.num.collect_vars(out);
        self.den.collect_vars(out);
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.num.depends_on(name) || self.den.depends_on(name)
    }

    pub fn has_analytic(&self) -> bool {
        self.num.has_analytic() || self.den.has_analytic()
    }

    /// Degree heuristic used for pivot selection in symbolic elimination.
    pub fn total_degree(&self) -> u32 {
        self.num.total_degree() + self.den.total_degree()
    }

    pub fn derivative(&self, var: &str) -> RatFunc {
        let dn = poly_derivative(&self.num, var);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_derivative(&self.den, var);
        // (n/d)' = (n' d - n d') / d^2
        let num = dn
            .mul(&RatFunc::from_poly(self.den.clone()))
            .sub(&RatFunc::from_poly(self.num.clone()).mul(&dd));
        num.div(&RatFunc::from_poly(self.den.mul(&self.den)))
            .expect("nonzero denominator")
    }

    pub fn evaluate(&self, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        let n = eval_poly(&self.num, point)?;
        let d = eval_poly(&self.den, point)?;
        if d == 0.0 {
            return Err(EvalError::DivisionByZero { denominator: self.den.to_string() });
        }
        Ok(n / d)
    }

    pub fn substitute(
        &self,
        subs: &BTreeMap<String, RatFunc>,
    ) -> Result<RatFunc, ExprError> {
        let n = substitute_poly(&self.num, subs)?;
        let d = substitute_poly(&self.den, subs)?;
        n.div(&d)
    }
}

/// sin of a rational-function argument, with the exact zero-argument case.
pub fn sin_of(arg: RatFunc) -> RatFunc {
    if arg.is_zero() {
        return RatFunc::zero();
    }
    RatFunc::from_poly(Poly::atom(Atom::Sin(Box::new(arg))))
}

pub fn cos_of(arg: RatFunc) -> RatFunc {
    if arg.is_zero() {
        return RatFunc::one();
    }
    RatFunc::from_poly(Poly::atom(Atom::Cos(Box::new(arg))))
}

pub fn exp_of(arg: RatFunc) -> RatFunc {
    if arg.is_zero() {
        return RatFunc::one();
    }
    RatFunc::from_poly(Poly::atom(Atom::Exp(Box::new(arg))))
}

/// d(atom)/d(var) by the chain rule.
fn atom_derivative(atom: &Atom, var: &str) -> RatFunc {
    match atom {
        Atom::Var(v) => {
            if v == var {
                RatFunc::one()
            } else {
                RatFunc::zero()
            }
        }
        Atom::Sin(a) => cos_of((**a).clone()).mul(&a.derivative(var)),
        Atom::Cos(a) => sin_of((**a).clone()).neg().mul(&a.derivative(var)),
        Atom::Exp(a) => exp_of((**a).clone()).mul(&a.derivative(var)),
    }
}

pub(super) fn poly_derivative(p: &Poly, var: &str) -> RatFunc {
    let mut out = RatFunc::zero();
    for (m, c) in &p.terms {
        for (idx, (atom, exp)) in m.0.iter().enumerate() {
            if !atom.depends_on(var) {
                continue;
            }
            let da = atom_derivative(atom, var);
            if da.is_zero() {
                continue;
            }
            // c * exp * atom^(exp-1) * (rest of monomial) * da
            let mut reduced = Monomial::one();
            for (j, (a, e)) in m.0.iter().enumerate() {
                let e = if j == idx { *e - 1 } else { *e };
                if e > 0 {
                    reduced.0.push((a.clone(), e));
                }
            }
            let mut term = Poly::zero();
            term.add_term(reduced, c * BigRational::from_integer((*exp).into()));
            out = out.add(&RatFunc::from_poly(term).mul(&da));
        }
    }
    out
}

fn eval_atom(atom: &Atom, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    match atom {
        Atom::Var(v) => point
            .get(v)
            .copied()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Atom::Sin(a) => Ok(a.evaluate(point)?.sin()),
        Atom::Cos(a) => Ok(a.evaluate(point)?.cos()),
        Atom::Exp(a) => Ok(a.evaluate(point)?.exp()),
    }
}

fn eval_poly(p: &Poly, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (m, c) in &p.terms {
        let mut t = c.to_f64().ok_or_else(|| EvalError::NonFinite)?;
        for (a, e) in &m.0 {
            t *= eval_atom(a, point)?.powi(*e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

fn substitute_atom(
    atom: &Atom,
    subs: &BTreeMap<String, RatFunc>,
) -> Result<RatFunc, ExprError> {
    match atom {
        Atom::Var(v) => Ok(subs
            .get(v)
            .cloned()
            .unwrap_or_else(|| RatFunc::var(v))),
        Atom::Sin(a) => Ok(sin_of(a.substitute(subs)?)),
        Atom::Cos(a) => Ok(cos_of(a.substitute(subs)?)),
        Atom::Exp(a) => Ok(exp_of(a.substitute(subs)?)),
    }
}

fn substitute_poly(
    p: &Poly,
    subs: &BTreeMap<String, RatFunc>,
) -> Result<RatFunc, ExprError> {
    let mut out = RatFunc::zero();
    for (m, c) in &p.terms {
        let mut t = RatFunc::constant(c.clone());
        for (a, e) in &m.0 {
            let sub = substitute_atom(a, subs)?;
            t = t.mul(&sub.powi(*e as i64)?);
        }
        out = out.add(&t);
    }
    Ok(out)
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
