//! Coordinate charts with role-tagged coordinates.
//!
//! Everything in this crate is chart-based: a [`Chart`] is an ordered list
//! of named coordinates, each tagged with its role (spacetime, field,
//! multimomentum, energy, or generic position/momentum). Role tags drive the
//! De Donder-Weyl constructions (which momenta survive the restriction,
//! which coordinate is conjugate to the volume form).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChartError {
    #[error("duplicate coordinate name '{0}'")]
    DuplicateName(String),
    #[error("chart declares {0} energy coordinates; exactly one is allowed")]
    EnergyCount(usize),
    #[error("momentum coordinate '{name}' has indices outside the declared ranges")]
    MomentumIndex { name: String },
    #[error("coordinate '{0}' is not on the chart")]
    UnknownCoordinate(String),
}

/// Role of a coordinate on a chart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Role {
    /// Spacetime coordinate x^mu.
    Spacetime { mu: usize },
    /// Field component y^i.
    Field { i: usize },
    /// De Donder-Weyl multimomentum p^mu_i.
    Momentum { mu: usize, i: usize },
    /// Multimomentum of the full n-form bundle, keyed by the strictly
    /// increasing positions (into the base-coordinate prefix) it pairs with.
    MultiMomentum { base: Vec<usize> },
    /// The coordinate conjugate to the volume form.
    Energy,
    /// Generic position (mechanics).
    GenericQ { i: usize },
    /// Generic momentum (mechanics).
    GenericP { i: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    coords: Vec<Coordinate>,
}

pub type ChartRef = Arc<Chart>;

impl Chart {
    pub fn new(coords: Vec<Coordinate>) -> Result<ChartRef, ChartError> {
        let chart = Chart { coords };
        chart.validate()?;
        Ok(Arc::new(chart))
    }

    fn validate(&self) -> Result<(), ChartError> {
        for (i, c) in self.coords.iter().enumerate() {
            if self.coords[..i].iter().any(|d| d.name == c.name) {
                return Err(ChartError::DuplicateName(c.name.clone()));
            }
        }
        let energies = self
            .coords
            .iter()
            .filter(|c| matches!(c.role, Role::Energy))
            .count();
        // A DDW chart names the energy coordinate explicitly; on the
        // universal chart it is the all-spacetime multimomentum instead.
        let has_ddw_momenta = self
            .coords
            .iter()
            .any(|c| matches!(c.role, Role::Momentum { .. }));
        if has_ddw_momenta && energies != 1 {
            return Err(ChartError::EnergyCount(energies));
        }
        let n = self.spacetime_dim();
        let k = self.field_dim();
        let base = n + k;
        for c in &self.coords {
            match &c.role {
                Role::Momentum { mu, i } => {
                    if *mu >= n || *i >= k {
                        return Err(ChartError::MomentumIndex { name: c.name.clone() });
                    }
                }
                Role::MultiMomentum { base: idx } => {
                    let increasing = idx.windows(2).all(|w| w[0] < w[1]);
                    if !increasing || idx.iter().any(|j| *j >= base) {
                        return Err(ChartError::MomentumIndex { name: c.name.clone() });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Mechanics chart (q^1..q^n, p_1..p_n).
    pub fn mechanics(positions: &[&str], momenta: &[&str]) -> Result<ChartRef, ChartError> {
        assert_eq!(positions.len(), momenta.len(), "positions and momenta must pair up");
        let mut coords = Vec::new();
        for (i, q) in positions.iter().enumerate() {
            coords.push(Coordinate { name: q.to_string(), role: Role::GenericQ { i } });
        }
        for (i, p) in momenta.iter().enumerate() {
            coords.push(Coordinate { name: p.to_string(), role: Role::GenericP { i } });
        }
        Chart::new(coords)
    }

    /// De Donder-Weyl chart (x^mu, y^i, p^mu_i, e) with momenta named
    /// `p_<x>_<y>` and the energy coordinate named `e`.
    pub fn ddw(spacetime: &[&str], fields: &[&str]) -> Result<ChartRef, ChartError> {
        let mut coords = Vec::new();
        for (mu, x) in spacetime.iter().enumerate() {
            coords.push(Coordinate { name: x.to_string(), role: Role::Spacetime { mu } });
        }
        for (i, y) in fields.iter().enumerate() {
            coords.push(Coordinate { name: y.to_string(), role: Role::Field { i } });
        }
        for (mu, x) in spacetime.iter().enumerate() {
            for (i, y) in fields.iter().enumerate() {
                coords.push(Coordinate {
                    name: format!("p_{x}_{y}"),
                    role: Role::Momentum { mu, i },
                });
            }
        }
        coords.push(Coordinate { name: "e".to_string(), role: Role::Energy });
        Chart::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.coords[idx].name
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ChartError> {
        self.coords
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| ChartError::UnknownCoordinate(name.to_string()))
    }

    pub fn role(&self, idx: usize) -> &Role {
        &self.coords[idx].role
    }

    /// Number of spacetime coordinates (n).
    pub fn spacetime_dim(&self) -> usize {
        self.coords
            .iter()
            .filter(|c| matches!(c.role, Role::Spacetime { .. }))
            .count()
    }

    /// Number of field coordinates (k).
    pub fn field_dim(&self) -> usize {
        self.coords
            .iter()
            .filter(|c| matches!(c.role, Role::Field { .. }))
            .count()
    }

    pub fn spacetime_index(&self, mu: usize) -> Option<usize> {
        self.coords
            .iter()
            .position(|c| c.role == Role::Spacetime { mu })
    }

    pub fn field_index(&self, i: usize) -> Option<usize> {
        self.coords.iter().position(|c| c.role == Role::Field { i })
    }

    pub fn momentum_index(&self, mu: usize, i: usize) -> Option<usize> {
        self.coords
            .iter()
            .position(|c| c.role == Role::Momentum { mu, i })
    }

    pub fn energy_index(&self) -> Option<usize> {
        self.coords.iter().position(|c| matches!(c.role, Role::Energy))
    }
}

/// A componentwise-expression map between charts, used for pullbacks.
///
/// Components give each (used) target coordinate as an expression in the
/// source coordinates.
#[derive(Debug, Clone)]
pub struct ChartMap {
    pub source: ChartRef,
    pub target: ChartRef,
    pub components: std::collections::BTreeMap<String, crate::expr::Expression>,
}

impl ChartMap {
    pub fn new(
        source: ChartRef,
        target: ChartRef,
        components: std::collections::BTreeMap<String, crate::expr::Expression>,
    ) -> Self {
        ChartMap { source, target, components }
    }

    /// Inclusion-style map: identity on shared names, explicit expressions
    /// for the rest.
    pub fn inclusion(
        source: ChartRef,
        target: ChartRef,
        bindings: std::collections::BTreeMap<String, crate::expr::Expression>,
    ) -> Self {
        let mut components = bindings;
        for c in target.coords() {
            if components.contains_key(&c.name) {
                continue;
            }
            if source.index_of(&c.name).is_ok() {
                components
                    .insert(c.name.clone(), crate::expr::Expression::var(&c.name));
            }
        }
        ChartMap { source, target, components }
    }
}
