//! Multiplicative generators of the expression algebra.
//!
//! An [`Atom`] is either a named coordinate or an analytic primitive
//! (`sin`, `cos`, `exp`) applied to a rational-function argument. Atoms are
//! treated as algebraically independent generators; identities like
//! sin^2 + cos^2 = 1 are *not* rewritten, which keeps normalization
//! terminating and predictable (equality on the analytic fragment falls back
//! to numeric probing, see [`Expression::equivalent`](crate::expr::Expression::equivalent)).

use std::fmt;

use super::ratfunc::RatFunc;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    /// A named coordinate.
    Var(String),
    Sin(Box<RatFunc>),
    Cos(Box<RatFunc>),
    Exp(Box<RatFunc>),
}

impl Atom {
    pub fn var(name: &str) -> Self {
        Atom::Var(name.to_string())
    }

    /// Collects coordinate names appearing in this atom (recursing into
    /// analytic arguments) into `out`.
    pub fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Atom::Var(v) => {
                out.insert(v.clone());
            }
            Atom::Sin(a) | Atom::Cos(a) | Atom::Exp(a) => a.collect_vars(out),
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, Atom::Var(_))
    }

    /// True if the atom is `Var(name)` or mentions `name` inside an
    /// analytic argument.
    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Atom::Var(v) => v == name,
            Atom::Sin(a) | Atom::Cos(a) | Atom::Exp(a) => a.depends_on(name),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Sin(a) => write!(f, "sin({a})"),
            Atom::Cos(a) => write!(f, "cos({a})"),
            Atom::Exp(a) => write!(f, "exp({a})"),
        }
    }
}
