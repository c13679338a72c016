//! Slices and slice functionals.
//!
//! A slice is a coordinate-time level set `{x^0 = c}` with an orientation
//! sign. Observable functionals integrate the pullback of an (n-1)-form
//! over the intersection of the slice with a grid curve: for n = 2 the
//! integrand is `F(X_1)` (the spatial tangent contraction) summed with the
//! periodic rectangle rule; for n = 1 the slice is a point and the integral
//! is the evaluated 0-form.

use crate::ddw::{DDWSystem, DiscreteGamma};
use crate::exterior::{CompiledForm, DifferentialForm};
use crate::parallel;

use super::{form_bracket, ObsError, ObservableForm};

#[derive(Debug, Clone, Copy)]
pub struct Slice {
    /// Grid row of the time level.
    pub row: usize,
    pub time: f64,
    pub orientation: f64,
}

impl Slice {
    /// Snaps `time` to a grid row; rejects off-grid values (no
    /// interpolation).
    pub fn at_time(gamma: &DiscreteGamma, time: f64, orientation: f64) -> Result<Self, ObsError> {
        let pos = time / gamma.ht;
        let row = pos.round();
        if (pos - row).abs() > 1e-9 || row < 0.0 || row as usize > gamma.nt {
            return Err(ObsError::OffGridSlice(time));
        }
        Ok(Slice { row: row as usize, time, orientation })
    }

    pub fn at_row(gamma: &DiscreteGamma, row: usize, orientation: f64) -> Result<Self, ObsError> {
        if row > gamma.nt {
            return Err(ObsError::OffGridSlice(row as f64));
        }
        Ok(Slice { row, time: gamma.t(row), orientation })
    }
}

/// Tangent of the graph along the space direction at a node (chart layout).
pub(crate) fn spatial_tangent(
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
    it: usize,
    ix: usize,
    out: &mut [f64],
) {
    let chart = sys.chart();
    out.iter_mut().for_each(|v| *v = 0.0);
    out[1] = 1.0;
    for i in 0..gamma.k {
        out[chart.field_index(i).unwrap()] = gamma.dx(&gamma.y[i], it, ix);
    }
    for mu in 0..gamma.n {
        for i in 0..gamma.k {
            out[chart.momentum_index(mu, i).unwrap()] =
                gamma.dx(&gamma.p[mu * gamma.k + i], it, ix);
        }
    }
    out[chart.energy_index().unwrap()] = gamma.dx(&gamma.e, it, ix);
}

/// `int_{Sigma ∩ Gamma} F` by the periodic rectangle rule (n = 2) or point
/// evaluation (n = 1).
pub fn slice_integral(
    slice: &Slice,
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
    f: &DifferentialForm,
) -> Result<f64, ObsError> {
    let chart = sys.chart();
    let layout = chart.names();
    let compiled = CompiledForm::compile(f, &layout)?;
    let dim = chart.dim();
    if gamma.n == 1 {
        let mut point = vec![0.0; dim];
        gamma.load_point(sys, slice.row, 0, &mut point);
        return Ok(slice.orientation * compiled.eval(&point).scalar());
    }
    let row = slice.row;
    let values = parallel::map_indexed(gamma.nx, |ix| {
        let mut point = vec![0.0; dim];
        let mut tangent = vec![0.0; dim];
        gamma.load_point(sys, row, ix, &mut point);
        spatial_tangent(sys, gamma, row, ix, &mut tangent);
        compiled.eval(&point).contract(&[&tangent]).scalar()
    });
    Ok(slice.orientation * values.iter().sum::<f64>() * gamma.hx)
}

/// The slice bracket `int_{Sigma ∩ Gamma} {F, G}`, evaluated at both slices;
/// for dynamical integrands the two values agree to discretization order.
pub fn slice_bracket(
    slice_a: &Slice,
    slice_b: &Slice,
    f: &ObservableForm,
    g: &ObservableForm,
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
) -> Result<(f64, f64), ObsError> {
    let bracket = form_bracket(f, g, sys.omega())?;
    let at_a = slice_integral(slice_a, sys, gamma, &bracket.form)?;
    let at_b = slice_integral(slice_b, sys, gamma, &bracket.form)?;
    Ok((at_a, at_b))
}

/// `|int_{Sigma0} F - int_{Sigma1} F|`: vanishes at the discretization
/// order for dynamical observables on solution curves.
pub fn homology_drift(
    f: &ObservableForm,
    sys: &DDWSystem,
    gamma: &DiscreteGamma,
    slice_a: &Slice,
    slice_b: &Slice,
) -> Result<f64, ObsError> {
    let a = slice_integral(slice_a, sys, gamma, &f.form)?;
    let b = slice_integral(slice_b, sys, gamma, &f.form)?;
    Ok((a - b).abs())
}
