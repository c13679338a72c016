//! Symmetry classification and Noether witnesses.
//!
//! A vector field is symplectic iff `d(xi . Omega) = 0`. On a coordinate
//! box every closed polynomial 1-form is exact, and the primitive can be
//! written down by radial path integration from the origin
//! (term by term: the monomial `c * m dx^i` integrates to `c/(deg m + 1) * x^i m`).
//! The witness sign follows the uniform convention `xi . Omega = -df`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;

use crate::expr::Expression;
use crate::exterior::{interior_product, DifferentialForm, MultiVector};

use super::HamiltonianSystem;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactnessWitness {
    /// `f` with `xi . Omega = -df`, recovered symbolically.
    Hamiltonian(Expression),
    /// Not symplectic, so no witness can exist.
    NotSymplectic,
    /// Coefficients outside the polynomial fragment; exactness is not
    /// decided (never guessed).
    Undecided(String),
}

#[derive(Debug, Clone)]
pub struct SymmetryClassification {
    /// `d(xi . Omega) = 0`, equivalently `L_xi Omega = 0` (exact test).
    pub symplectic: bool,
    pub witness: ExactnessWitness,
    /// Symplectic, exact, and `L_xi H = 0`.
    pub noether_conserved: bool,
}

/// Primitive of a closed polynomial 1-form by radial path integration from
/// the origin; the caller checks closedness.
pub(crate) fn radial_primitive(alpha: &DifferentialForm) -> Option<Expression> {
    let chart = alpha.chart();
    let mut acc = Expression::zero();
    for (idx, coeff) in alpha.terms() {
        let var = chart.name(idx[0]);
        let monos = coeff.monomials()?;
        for (vars, c) in monos {
            let deg: u32 = vars.values().sum();
            let scaled = c / BigRational::from_integer((deg + 1).into());
            let mut term_vars = vars;
            *term_vars.entry(var.to_string()).or_insert(0) += 1;
            acc = acc
                + Expression::from_monomials([(term_vars, scaled * BigRational::one())]);
        }
    }
    Some(acc)
}

pub(super) fn classify(sys: &HamiltonianSystem, xi: &MultiVector) -> SymmetryClassification {
    let alpha = interior_product(xi, sys.omega()).expect("degree-1 contraction");
    let symplectic = alpha.exterior_derivative().is_zero();
    if !symplectic {
        return SymmetryClassification {
            symplectic: false,
            witness: ExactnessWitness::NotSymplectic,
            noether_conserved: false,
        };
    }
    let polynomial = alpha.terms().all(|(_, c)| c.is_polynomial());
    let witness = if polynomial {
        match radial_primitive(&alpha) {
            Some(primitive) => {
                // alpha = d(primitive), we report f with alpha = -df
                let f = -primitive;
                let check = DifferentialForm::scalar(sys.chart().clone(), f.clone())
                    .exterior_derivative()
                    .add(&alpha)
                    .expect("same chart");
                debug_assert!(check.is_zero(), "radial primitive must invert d");
                if check.is_zero() {
                    ExactnessWitness::Hamiltonian(f)
                } else {
                    ExactnessWitness::Undecided("radial integration failed".into())
                }
            }
            None => ExactnessWitness::Undecided(
                "coefficients are not polynomial; exactness undecided".into(),
            ),
        }
    } else {
        ExactnessWitness::Undecided(
            "coefficients are not polynomial; exactness undecided".into(),
        )
    };

    let lie_h = xi.apply(sys.hamiltonian());
    let noether_conserved = matches!(witness, ExactnessWitness::Hamiltonian(_))
        && lie_h.equivalent(&Expression::zero());

    SymmetryClassification { symplectic, witness, noether_conserved }
}

impl HamiltonianSystem {
    /// Weak-bracket check on a constrained extended system: true iff
    /// `{O, chi_i}` vanishes after substituting the constraint bindings,
    /// for every constraint `chi_i`.
    ///
    /// Bindings must be explicitly solvable: each bound coordinate's
    /// expression may not mention any bound coordinate.
    pub fn dirac_weak_check(
        &self,
        observable: &Expression,
        constraints: &[Expression],
        bindings: &BTreeMap<String, Expression>,
    ) -> Result<bool, super::MechanicsError> {
        for (name, rhs) in bindings {
            self.chart()
                .index_of(name)
                .map_err(|_| super::MechanicsError::UnsolvableBindings(name.clone()))?;
            for bound in bindings.keys() {
                if rhs.depends_on(bound) {
                    return Err(super::MechanicsError::UnsolvableBindings(format!(
                        "binding for '{name}' depends on bound coordinate '{bound}'"
                    )));
                }
            }
        }
        for chi in constraints {
            let bracket = self.poisson_bracket(observable, chi)?;
            let restricted = bracket.substitute(bindings)?;
            if !restricted.equivalent(&Expression::zero()) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
