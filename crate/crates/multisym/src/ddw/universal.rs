//! The universal multisymplectic model on the full n-form bundle.
//!
//! Over a base with coordinates `q^1..q^{n+k}` (spacetime first, then
//! fields), the bundle chart carries one multimomentum `P_M` per strictly
//! increasing n-index `M`, the canonical n-form `theta = sum P_M dq^M`, and
//! `Omega = d theta`. Restriction to the De Donder-Weyl submanifold sets
//! every multimomentum with two or more field indices to zero and renames
//! the survivors: the all-spacetime momentum is the energy `e`, and the
//! single-field momenta are `p^mu_i` up to the sorting sign
//! `(-1)^(n-1-mu)`.

use std::collections::BTreeMap;

use crate::expr::Expression;
use crate::exterior::{Chart, ChartMap, ChartRef, Coordinate, DifferentialForm, Role};

use super::{DDWSystem, DdwError};

fn increasing_subsets(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(len);
    fn rec(start: usize, base: usize, len: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == len {
            out.push(current.clone());
            return;
        }
        for i in start..base {
            current.push(i);
            rec(i + 1, base, len, current, out);
            current.pop();
        }
    }
    rec(0, base, len, &mut current, &mut out);
    out
}

/// Chart on the n-form bundle over the base of a DDW system: base
/// coordinates first, then one multimomentum per increasing n-index, named
/// `P_<q..>`.
pub fn universal_chart_for(sys: &DDWSystem) -> Result<ChartRef, DdwError> {
    let n = sys.n();
    let k = sys.k();
    let chart = sys.chart();
    let mut coords = Vec::new();
    let mut base_names = Vec::new();
    for mu in 0..n {
        let idx = chart.spacetime_index(mu).expect("spacetime coords");
        coords.push(Coordinate {
            name: chart.name(idx).to_string(),
            role: Role::Spacetime { mu },
        });
        base_names.push(chart.name(idx).to_string());
    }
    for i in 0..k {
        let idx = chart.field_index(i).expect("field coords");
        coords.push(Coordinate { name: chart.name(idx).to_string(), role: Role::Field { i } });
        base_names.push(chart.name(idx).to_string());
    }
    for m in increasing_subsets(n + k, n) {
        let name = format!(
            "P_{}",
            m.iter().map(|j| base_names[*j].clone()).collect::<Vec<_>>().join("_")
        );
        coords.push(Coordinate { name, role: Role::MultiMomentum { base: m } });
    }
    Chart::new(coords).map_err(|e| DdwError::ChartShape(e.to_string()))
}

/// The canonical n-form and the multisymplectic (n+1)-form on a universal
/// chart.
pub fn universal_forms(
    chart: &ChartRef,
) -> Result<(DifferentialForm, DifferentialForm), DdwError> {
    let mut theta = DifferentialForm::zero(chart.clone(), spacetime_count(chart));
    for (idx, c) in chart.coords().iter().enumerate() {
        if let Role::MultiMomentum { base } = &c.role {
            let term = DifferentialForm::from_terms(
                chart.clone(),
                base.len(),
                [(base.clone(), Expression::var(chart.name(idx)))],
            )?;
            theta = theta.add(&term)?;
        }
    }
    let omega = theta.exterior_derivative();
    Ok((theta, omega))
}

fn spacetime_count(chart: &ChartRef) -> usize {
    chart
        .coords()
        .iter()
        .filter_map(|c| match &c.role {
            Role::MultiMomentum { base } => Some(base.len()),
            _ => None,
        })
        .next()
        .unwrap_or(1)
}

/// The restriction map from the DDW chart into the universal chart:
/// identity on base coordinates, survivors renamed with the sorting sign,
/// higher multimomenta sent to zero. Pulling a universal form back along
/// this map restricts it to the DDW submanifold.
pub fn ddw_inclusion(
    sys: &DDWSystem,
    universal: &ChartRef,
) -> Result<ChartMap, DdwError> {
    let n = sys.n();
    let mut components: BTreeMap<String, Expression> = BTreeMap::new();
    for c in universal.coords() {
        match &c.role {
            Role::Spacetime { .. } | Role::Field { .. } => {
                components.insert(c.name.clone(), Expression::var(&c.name));
            }
            Role::MultiMomentum { base } => {
                let field_positions: Vec<usize> =
                    base.iter().filter(|j| **j >= n).copied().collect();
                let expr = match field_positions.len() {
                    0 => {
                        // all-spacetime: the energy coordinate
                        let e_idx = sys.chart().energy_index().expect("ddw energy");
                        Expression::var(sys.chart().name(e_idx))
                    }
                    1 => {
                        let i = field_positions[0] - n;
                        let missing_mu = (0..n)
                            .find(|mu| !base.contains(mu))
                            .expect("one spacetime index replaced");
                        let p_idx = sys
                            .chart()
                            .momentum_index(missing_mu, i)
                            .expect("ddw momentum");
                        let sign = if (n - 1 - missing_mu) % 2 == 0 { 1 } else { -1 };
                        Expression::integer(sign) * Expression::var(sys.chart().name(p_idx))
                    }
                    _ => Expression::zero(),
                };
                components.insert(c.name.clone(), expr);
            }
            _ => {}
        }
    }
    Ok(ChartMap::new(sys.chart().clone(), universal.clone(), components))
}

/// Restricts the universal multisymplectic form to the DDW submanifold of a
/// system; the result lives on the system's chart and must equal the
/// system's own `Omega` termwise.
pub fn restrict_to_ddw(sys: &DDWSystem) -> Result<DifferentialForm, DdwError> {
    let universal = universal_chart_for(sys)?;
    let (_, omega_u) = universal_forms(&universal)?;
    let incl = ddw_inclusion(sys, &universal)?;
    Ok(omega_u.pullback(&incl)?)
}
