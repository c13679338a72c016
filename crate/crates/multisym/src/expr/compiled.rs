//! Compiled expression evaluation for tight numeric loops.
//!
//! [`CompiledExpr`] flattens a normal form into an evaluation tree with f64
//! coefficients and slot indices into a fixed variable layout, avoiding
//! per-call name lookups and big-rational conversions.

use num_traits::ToPrimitive;

use super::atom::Atom;
use super::poly::Poly;
use super::ratfunc::RatFunc;
use super::EvalError;

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    /// coefficient * product of powers of factor nodes
    Term(f64, Vec<(Factor, i32)>),
    Sum(Vec<Node>),
    Div(Box<Node>, Box<Node>),
}

#[derive(Clone, Debug)]
enum Factor {
    Slot(usize),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
}

#[derive(Clone, Debug)]
pub struct CompiledExpr {
    root: Node,
    arity: usize,
}

impl CompiledExpr {
    pub(super) fn compile(nf: &RatFunc, layout: &[String]) -> Result<Self, EvalError> {
        let num = compile_poly(&nf.num, layout)?;
        let root = if nf.den.is_one() {
            num
        } else {
            Node::Div(Box::new(num), Box::new(compile_poly(&nf.den, layout)?))
        };
        Ok(CompiledExpr { root, arity: layout.len() })
    }

    /// Evaluates at `values`, laid out as at compile time.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert!(values.len() >= self.arity);
        eval_node(&self.root, values)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

fn compile_poly(p: &Poly, layout: &[String]) -> Result<Node, EvalError> {
    if p.is_zero() {
        return Ok(Node::Const(0.0));
    }
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let coeff = c.to_f64().ok_or(EvalError::NonFinite)?;
        let mut factors = Vec::with_capacity(m.0.len());
        for (a, e) in &m.0 {
            factors.push((compile_atom(a, layout)?, *e as i32));
        }
        if factors.is_empty() {
            terms.push(Node::Const(coeff));
        } else {
            terms.push(Node::Term(coeff, factors));
        }
    }
    Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Node::Sum(terms) })
}

fn compile_atom(a: &Atom, layout: &[String]) -> Result<Factor, EvalError> {
    Ok(match a {
        Atom::Var(v) => {
            let slot = layout
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
            Factor::Slot(slot)
        }
        Atom::Sin(arg) => Factor::Sin(Box::new(compile_ratfunc(arg, layout)?)),
        Atom::Cos(arg) => Factor::Cos(Box::new(compile_ratfunc(arg, layout)?)),
        Atom::Exp(arg) => Factor::Exp(Box::new(compile_ratfunc(arg, layout)?)),
    })
}

fn compile_ratfunc(nf: &RatFunc, layout: &[String]) -> Result<Node, EvalError> {
    let num = compile_poly(&nf.num, layout)?;
    if nf.den.is_one() {
        Ok(num)
    } else {
        Ok(Node::Div(Box::new(num), Box::new(compile_poly(&nf.den, layout)?)))
    }
}

fn eval_node(n: &Node, values: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Term(c, factors) => {
            let mut acc = *c;
            for (f, e) in factors {
                let base = match f {
                    Factor::Slot(i) => values[*i],
                    Factor::Sin(a) => eval_node(a, values).sin(),
                    Factor::Cos(a) => eval_node(a, values).cos(),
                    Factor::Exp(a) => eval_node(a, values).exp(),
                };
                acc *= base.powi(*e);
            }
            acc
        }
        Node::Sum(ts) => ts.iter().map(|t| eval_node(t, values)).sum(),
        Node::Div(a, b) => eval_node(a, values) / eval_node(b, values),
    }
}
