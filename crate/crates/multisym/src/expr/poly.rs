//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are keyed by [`Monomial`] (a sorted list of `(Atom, exponent)`
//! pairs), so the map representation is itself the canonical form: two
//! polynomials are equal as rational-coefficient polynomials iff their term
//! maps are identical. No floating point enters until evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::atom::Atom;

/// A power product of atoms, sorted by atom with strictly positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(pub Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut map: BTreeMap<&Atom, u32> = BTreeMap::new();
        for (a, e) in self.0.iter().chain(other.0.iter()) {
            *map.entry(a).or_insert(0) += *e;
        }
        Monomial(map.into_iter().map(|(a, e)| (a.clone(), e)).collect())
    }

    /// Exact division; `None` when some exponent of `other` exceeds ours.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut map: BTreeMap<&Atom, i64> = BTreeMap::new();
        for (a, e) in &self.0 {
            map.insert(a, *e as i64);
        }
        for (a, e) in &other.0 {
            let slot = map.entry(a).or_insert(0);
            *slot -= *e as i64;
            if *slot < 0 {
                return None;
            }
        }
        Some(Monomial(
            map.into_iter()
                .filter(|(_, e)| *e > 0)
                .map(|(a, e)| (a.clone(), e as u32))
                .collect(),
        ))
    }
}

/// Sparse polynomial: canonical term map, zero coefficients never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn from_integer(i: i64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn atom(a: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::atom(a), BigRational::one());
        Poly { terms }
    }

    pub fn var(name: &str) -> Self {
        Poly::atom(Atom::var(name))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    /// The constant value when the polynomial has no atoms at all.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                a.collect_vars(out);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                out.insert(a.clone());
            }
        }
        out
    }

    pub fn has_analytic(&self) -> bool {
        self.atoms().iter().any(|a| a.is_analytic())
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.iter().any(|(a, _)| a.depends_on(name)))
    }

    /// Leading term under the map order (largest key).
    fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::zero)
    }

    /// Exact multivariate division: `Some(q)` iff `self == q * div` exactly.
    ///
    /// Uses a graded order over the atom universe of both operands so that
    /// leading terms are multiplicative.
    pub fn exact_div(&self, div: &Poly) -> Option<Poly> {
        if div.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = div.as_constant() {
            return Some(self.scale(&(BigRational::one() / c)));
        }
        let universe: Vec<Atom> = {
            let mut s = self.atoms();
            s.extend(div.atoms());
            s.into_iter().collect()
        };
        let key = |m: &Monomial| -> (u32, Vec<u32>) {
            let mut v = vec![0u32; universe.len()];
            for (a, e) in &m.0 {
                let idx = universe.binary_search(a).expect("atom in universe");
                v[idx] = *e;
            }
            (m.total_degree(), v)
        };
        let div_lead = div
            .terms
            .keys()
            .max_by_key(|m| key(m))
            .cloned()
            .expect("nonzero divisor");
        let div_lead_c = div.terms[&div_lead].clone();

        let mut rem = self.clone();
        let mut quo = Poly::zero();
        while !rem.is_zero() {
            let lead = rem.terms.keys().max_by_key(|m| key(m)).cloned().unwrap();
            let lead_c = rem.terms[&lead].clone();
            let qm = lead.div(&div_lead)?;
            let qc = lead_c / &div_lead_c;
            let mut t = Poly::zero();
            t.add_term(qm, qc);
            rem = rem.sub(&t.mul(div));
            quo = quo.add(&t);
        }
        Some(quo)
    }

    pub fn derivative(&self, var: &str) -> super::ratfunc::RatFunc {
        super::ratfunc::poly_derivative(self, var)
    }
}

// ---------------------------------------------------------------------------
// GCD over the rationals, by recursion on the atom universe.
// ---------------------------------------------------------------------------

/// View of a polynomial as univariate in `main` with `Poly` coefficients.
fn as_univariate(p: &Poly, main: &Atom) -> BTreeMap<u32, Poly> {
    let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        let mut deg = 0;
        let mut rest = Vec::new();
        for (a, e) in &m.0 {
            if a == main {
                deg = *e;
            } else {
                rest.push((a.clone(), *e));
            }
        }
        out.entry(deg)
            .or_insert_with(Poly::zero)
            .add_term(Monomial(rest), c.clone());
        out.retain(|_, v| !v.is_zero());
    }
    out
}

fn from_univariate(u: &BTreeMap<u32, Poly>, main: &Atom) -> Poly {
    let mut out = Poly::zero();
    for (deg, coeff) in u {
        let mut pw = Poly::one();
        if *deg > 0 {
            pw = Poly::atom(main.clone()).pow(*deg);
        }
        out = out.add(&coeff.mul(&pw));
    }
    out
}

fn uni_degree(u: &BTreeMap<u32, Poly>) -> u32 {
    u.keys().next_back().copied().unwrap_or(0)
}

fn uni_leading(u: &BTreeMap<u32, Poly>) -> Poly {
    u.values().next_back().cloned().unwrap_or_else(Poly::zero)
}

/// Content of `p` viewed as univariate in `main`: gcd of its coefficients.
fn content(u: &BTreeMap<u32, Poly>) -> Poly {
    let mut g = Poly::zero();
    for c in u.values() {
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

/// Pseudo-remainder of `f` by `g` in the main atom (both nonzero, deg f >= deg g).
fn pseudo_rem(
    f: &BTreeMap<u32, Poly>,
    g: &BTreeMap<u32, Poly>,
    main: &Atom,
) -> BTreeMap<u32, Poly> {
    let mut r = from_univariate(f, main);
    let gp = from_univariate(g, main);
    let dg = uni_degree(g);
    let lg = uni_leading(g);
    loop {
        let ru = as_univariate(&r, main);
        if r.is_zero() || uni_degree(&ru) < dg {
            return ru;
        }
        let dr = uni_degree(&ru);
        let lr = uni_leading(&ru);
        // r <- lg * r - lr * x^(dr-dg) * g
        let shift = Poly::atom(main.clone()).pow(dr - dg);
        r = lg.mul(&r).sub(&lr.mul(&shift).mul(&gp));
    }
}

/// Polynomial GCD over Q, normalized monic in the map order.
///
/// gcd(0, p) = monic(p); gcd of two constants is 1.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    fn monic(p: &Poly) -> Poly {
        if p.is_zero() {
            return Poly::zero();
        }
        let lc = p.leading_coefficient();
        p.scale(&(BigRational::one() / lc))
    }
    if a.is_zero() {
        return monic(b);
    }
    if b.is_zero() {
        return monic(a);
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let mut universe: Vec<Atom> = a.atoms().into_iter().collect();
    for at in b.atoms() {
        if !universe.contains(&at) {
            universe.push(at);
        }
    }
    universe.sort();
    let main = universe.last().cloned().expect("nonconstant operands");

    let au = as_univariate(a, &main);
    let bu = as_univariate(b, &main);
    let ca = content(&au);
    let cb = content(&bu);
    let cg = gcd(&ca, &cb);

    // primitive parts
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");

    let (mut f, mut g) = if uni_degree(&as_univariate(&pa, &main)) >= uni_degree(&as_univariate(&pb, &main))
    {
        (pa, pb)
    } else {
        (pb, pa)
    };

    loop {
        if g.is_zero() {
            break;
        }
        let fu = as_univariate(&f, &main);
        let gu = as_univariate(&g, &main);
        if uni_degree(&gu) == 0 {
            // nontrivial common factor only through contents, already handled
            f = Poly::one();
            break;
        }
        let r = pseudo_rem(&fu, &gu, &main);
        let rp = from_univariate(&r, &main);
        let rprim = if rp.is_zero() {
            rp
        } else {
            let rc = content(&r);
            rp.exact_div(&rc).expect("content divides")
        };
        f = g;
        g = rprim;
    }
    monic(&cg.mul(&f))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                let mut first_atom = true;
                for (a, e) in &m.0 {
                    if !first_atom {
                        write!(f, "*")?;
                    }
                    first_atom = false;
                    if *e == 1 {
                        write!(f, "{a}")?;
                    } else {
                        write!(f, "{a}^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Poly {
        Poly::var(name)
    }

    #[test]
    fn arithmetic_canonical() {
        let q = v("q");
        let p = v("p");
        let a = q.add(&p).pow(2);
        let b = q.pow(2).add(&q.mul(&p).scale(&BigRational::from_integer(2.into()))).add(&p.pow(2));
        assert_eq!(a, b);
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn exact_division() {
        let q = v("q");
        let p = v("p");
        let prod = q.add(&p).mul(&q.sub(&p));
        let quot = prod.exact_div(&q.add(&p)).unwrap();
        assert_eq!(quot, q.sub(&p));
        assert!(prod.exact_div(&q.pow(3)).is_none());
    }

    #[test]
    fn gcd_simple() {
        let q = v("q");
        let p = v("p");
        let f = q.add(&p).mul(&q); // q(q+p)
        let g = q.add(&p).mul(&p); // p(q+p)
        let d = gcd(&f, &g);
        assert_eq!(d, q.add(&p));
    }

    #[test]
    fn gcd_multivariate() {
        let x = v("x");
        let y = v("y");
        let z = v("z");
        let common = x.mul(&y).add(&z.pow(2)); // xy + z^2
        let f = common.mul(&x.add(&y));
        let g = common.mul(&y.add(&z)).mul(&common);
        let d = gcd(&f, &g);
        assert_eq!(d, common);
    }
}
