//! Grid samplings of Hamiltonian n-curves.
//!
//! A [`DiscreteGamma`] samples the graph `x -> (x, u(x), p(x), e(x))` on a
//! uniform rectangular grid: `nt + 1` time rows and `nx` periodic space
//! columns (n = 2), or a pure time grid (n = 1, mechanics). The energy
//! samples are reconstructed as `e = -H` pointwise so the curve lies on the
//! zero level set of the covariant Hamiltonian; they never drive any update.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{DDWSystem, DdwError};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub t_max: f64,
    /// Number of time steps (nt + 1 rows).
    pub nt: usize,
    /// Spatial period (ignored for n = 1).
    pub x_max: f64,
    /// Number of periodic spatial nodes (1 for n = 1).
    pub nx: usize,
}

#[derive(Debug, Clone)]
pub struct DiscreteGamma {
    pub n: usize,
    pub k: usize,
    pub ht: f64,
    pub hx: f64,
    pub nt: usize,
    pub nx: usize,
    pub periodic_x: bool,
    /// Field samples, `y[i][it * nx + ix]`.
    pub y: Vec<Vec<f64>>,
    /// Momentum samples, `p[mu * k + i][it * nx + ix]`.
    pub p: Vec<Vec<f64>>,
    /// Energy samples (`e = -H`).
    pub e: Vec<f64>,
    /// Graphs always satisfy the independence condition `dvol|_Gamma != 0`.
    pub graph_independent: bool,
}

impl DiscreteGamma {
    pub fn rows(&self) -> usize {
        self.nt + 1
    }

    pub fn nodes(&self) -> usize {
        self.rows() * self.nx
    }

    pub fn idx(&self, it: usize, ix: usize) -> usize {
        it * self.nx + ix
    }

    pub fn t(&self, it: usize) -> f64 {
        it as f64 * self.ht
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.hx
    }

    /// Builds a sampling from field and momentum closures `(t, x) -> value`
    /// and fills the energy row from `-H`.
    pub fn from_fields(
        sys: &DDWSystem,
        spec: GridSpec,
        y_fns: &[&dyn Fn(f64, f64) -> f64],
        p_fns: &[&dyn Fn(f64, f64) -> f64],
    ) -> Result<Self, DdwError> {
        let n = sys.n();
        let k = sys.k();
        if y_fns.len() != k || p_fns.len() != n * k {
            return Err(DdwError::BadSamples);
        }
        let (nx, hx) = if n == 1 {
            (1, 0.0)
        } else {
            (spec.nx, spec.x_max / spec.nx as f64)
        };
        let ht = spec.t_max / spec.nt as f64;
        let mut gamma = DiscreteGamma {
            n,
            k,
            ht,
            hx,
            nt: spec.nt,
            nx,
            periodic_x: n > 1,
            y: vec![vec![0.0; (spec.nt + 1) * nx]; k],
            p: vec![vec![0.0; (spec.nt + 1) * nx]; n * k],
            e: vec![0.0; (spec.nt + 1) * nx],
            graph_independent: true,
        };
        for it in 0..=spec.nt {
            let t = gamma.t(it);
            for ix in 0..nx {
                let x = gamma.x(ix);
                let id = gamma.idx(it, ix);
                for (i, f) in y_fns.iter().enumerate() {
                    gamma.y[i][id] = f(t, x);
                }
                for (a, f) in p_fns.iter().enumerate() {
                    gamma.p[a][id] = f(t, x);
                }
            }
        }
        gamma.fill_energy(sys)?;
        Ok(gamma)
    }

    /// Recomputes `e = -H` at every node.
    pub fn fill_energy(&mut self, sys: &DDWSystem) -> Result<(), DdwError> {
        let layout = sys.chart().names();
        let ch = sys.hamiltonian().compile(&layout)?;
        let mut point = vec![0.0; layout.len()];
        for it in 0..self.rows() {
            for ix in 0..self.nx {
                self.load_point(sys, it, ix, &mut point);
                let id = self.idx(it, ix);
                self.e[id] = -ch.eval(&point);
            }
        }
        Ok(())
    }

    /// Writes the chart-ordered phase point at a node into `out`
    /// (layout: x^mu, y^i, p^mu_i, e).
    pub fn load_point(&self, sys: &DDWSystem, it: usize, ix: usize, out: &mut [f64]) {
        let id = self.idx(it, ix);
        let mut slot = 0;
        out[slot] = self.t(it);
        slot += 1;
        if self.n == 2 {
            out[slot] = self.x(ix);
            slot += 1;
        }
        for i in 0..self.k {
            out[slot] = self.y[i][id];
            slot += 1;
        }
        for a in 0..(self.n * self.k) {
            out[slot] = self.p[a][id];
            slot += 1;
        }
        out[slot] = self.e[id];
        debug_assert_eq!(slot + 1, sys.chart().dim());
    }

    /// Centered time derivative of a sample grid at an interior row.
    pub fn dt(&self, values: &[f64], it: usize, ix: usize) -> f64 {
        (values[self.idx(it + 1, ix)] - values[self.idx(it - 1, ix)]) / (2.0 * self.ht)
    }

    /// Centered periodic space derivative.
    pub fn dx(&self, values: &[f64], it: usize, ix: usize) -> f64 {
        let left = (ix + self.nx - 1) % self.nx;
        let right = (ix + 1) % self.nx;
        (values[self.idx(it, right)] - values[self.idx(it, left)]) / (2.0 * self.hx)
    }

    /// Centered derivative along spacetime direction `mu`.
    pub fn d_mu(&self, values: &[f64], mu: usize, it: usize, ix: usize) -> f64 {
        if mu == 0 {
            self.dt(values, it, ix)
        } else {
            self.dx(values, it, ix)
        }
    }

    /// Like [`d_mu`](Self::d_mu), but falls back to second-order one-sided
    /// time stencils on the first and last rows.
    pub fn d_mu_any(&self, values: &[f64], mu: usize, it: usize, ix: usize) -> f64 {
        if mu != 0 {
            return self.dx(values, it, ix);
        }
        if it == 0 {
            (-3.0 * values[self.idx(0, ix)] + 4.0 * values[self.idx(1, ix)]
                - values[self.idx(2, ix)])
                / (2.0 * self.ht)
        } else if it == self.nt {
            (3.0 * values[self.idx(it, ix)] - 4.0 * values[self.idx(it - 1, ix)]
                + values[self.idx(it - 2, ix)])
                / (2.0 * self.ht)
        } else {
            self.dt(values, it, ix)
        }
    }

    /// CSV export: header `t,x,<fields>,<momenta>,e`, one row per node.
    pub fn write_csv<W: Write>(&self, sys: &DDWSystem, mut w: W) -> std::io::Result<()> {
        let chart = sys.chart();
        write!(w, "{}", chart.name(0))?;
        for idx in 1..chart.dim() {
            write!(w, ",{}", chart.name(idx))?;
        }
        writeln!(w)?;
        let mut point = vec![0.0; chart.dim()];
        for it in 0..self.rows() {
            for ix in 0..self.nx {
                self.load_point(sys, it, ix, &mut point);
                let mut first = true;
                for v in &point {
                    if !first {
                        write!(w, ",")?;
                    }
                    first = false;
                    write!(w, "{v:.16e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// JSON export with grid metadata and per-variable arrays.
    pub fn to_json(&self, sys: &DDWSystem) -> serde_json::Value {
        let chart = sys.chart();
        let mut vars = BTreeMap::new();
        for i in 0..self.k {
            let name = chart.name(chart.field_index(i).unwrap()).to_string();
            vars.insert(name, self.y[i].clone());
        }
        for mu in 0..self.n {
            for i in 0..self.k {
                let name = chart.name(chart.momentum_index(mu, i).unwrap()).to_string();
                vars.insert(name, self.p[mu * self.k + i].clone());
            }
        }
        vars.insert("e".to_string(), self.e.clone());
        serde_json::json!({
            "n": self.n,
            "k": self.k,
            "ht": self.ht,
            "hx": self.hx,
            "nt": self.nt,
            "nx": self.nx,
            "periodic_x": self.periodic_x,
            "graph_independent": self.graph_independent,
            "variables": vars,
        })
    }
}
