//! Implicit-midpoint flow integration.
//!
//! The midpoint rule is symplectic and second order, and handles
//! non-separable Hamiltonians without special-casing. The requested step is
//! adjusted to divide the duration evenly so trajectories land exactly on
//! the final time.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::expr::{CompiledExpr, Expression};

use super::{HamiltonianSystem, MechanicsError, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE};

/// A uniform-grid phase-space trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    /// Flat rows of length `2n`, ordered (q_1..q_n, p_1..p_n).
    states: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.times.len() >= 2 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// CSV export with header `t,q1..qn,p1..pn`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim / 2;
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",q{i}")?;
        }
        for i in 1..=n {
            write!(w, ",p{i}")?;
        }
        writeln!(w)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t:.16e}")?;
            for v in self.state(i) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The compiled right-hand side dz/dt = xi_H(z) with its Jacobian.
struct CompiledField {
    components: Vec<CompiledExpr>,
    jacobian: Vec<Vec<CompiledExpr>>,
    dim: usize,
}

impl CompiledField {
    fn new(sys: &HamiltonianSystem) -> Result<Self, MechanicsError> {
        let xi = sys.hamiltonian_vector_field(sys.hamiltonian())?;
        let layout = sys.chart().names();
        let comps = xi.components();
        let components = comps
            .iter()
            .map(|c| c.compile(&layout))
            .collect::<Result<Vec<_>, _>>()?;
        let jacobian = comps
            .iter()
            .map(|c| {
                layout
                    .iter()
                    .map(|v| c.diff(v).compile(&layout))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledField { components, jacobian, dim: layout.len() })
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(z);
        }
    }

    fn jacobian_at(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.jacobian[r][c].eval(z))
    }
}

impl HamiltonianSystem {
    /// Integrates Hamilton's equations from `z0` for duration `t` with the
    /// implicit-midpoint rule; the step is adjusted to `t / round(t/h)`.
    pub fn integrate_flow(
        &self,
        z0: &[f64],
        t: f64,
        h: f64,
    ) -> Result<Trajectory, MechanicsError> {
        let dim = self.chart().dim();
        if z0.len() != dim {
            return Err(MechanicsError::BadPoint { expected: dim, got: z0.len() });
        }
        if !(h > 0.0) || !(t >= h) {
            return Err(MechanicsError::BadFlowParameters(format!(
                "need h > 0 and t >= h, got t = {t}, h = {h}"
            )));
        }
        let steps = (t / h).round().max(1.0) as usize;
        let h = t / steps as f64;

        let field = CompiledField::new(self)?;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity((steps + 1) * dim);
        times.push(0.0);
        states.extend_from_slice(z0);

        let mut z = z0.to_vec();
        let mut rhs = vec![0.0; dim];
        for step in 0..steps {
            // solve w = z + h * f((z + w)/2) by Newton iteration
            let mut w = z.clone();
            // explicit Euler predictor
            field.eval(&z, &mut rhs);
            for i in 0..dim {
                w[i] = z[i] + h * rhs[i];
            }
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITERATIONS {
                let mid: Vec<f64> =
                    (0..dim).map(|i| 0.5 * (z[i] + w[i])).collect();
                field.eval(&mid, &mut rhs);
                let g = DVector::from_fn(dim, |i, _| w[i] - z[i] - h * rhs[i]);
                if g.amax() <= NEWTON_TOLERANCE {
                    converged = true;
                    break;
                }
                let jac = field.jacobian_at(&mid);
                let newton = DMatrix::identity(dim, dim) - jac * (h / 2.0);
                let delta = newton
                    .lu()
                    .solve(&g)
                    .ok_or(MechanicsError::NewtonNonConvergence { step })?;
                for i in 0..dim {
                    w[i] -= delta[i];
                }
            }
            if !converged {
                return Err(MechanicsError::NewtonNonConvergence { step });
            }
            z = w;
            times.push((step + 1) as f64 * h);
            states.extend_from_slice(&z);
        }
        Ok(Trajectory { times, states, dim })
    }

    /// Max over interior grid points of
    /// `|centered d/dt f(gamma(t)) - {H, f}(gamma(t))|`.
    pub fn evolution_residual(
        &self,
        f: &Expression,
        traj: &Trajectory,
    ) -> Result<f64, MechanicsError> {
        let layout = self.chart().names();
        let cf = f.compile(&layout)?;
        let bracket = self.poisson_bracket(self.hamiltonian(), f)?;
        let cb = bracket.compile(&layout)?;
        let h = traj.step();
        let mut max = 0.0_f64;
        for i in 1..traj.len().saturating_sub(1) {
            let dfdt = (cf.eval(traj.state(i + 1)) - cf.eval(traj.state(i - 1))) / (2.0 * h);
            let res = (dfdt - cb.eval(traj.state(i))).abs();
            max = max.max(res);
        }
        Ok(max)
    }

    /// Energy values along a trajectory.
    pub fn energy_series(&self, traj: &Trajectory) -> Result<Vec<f64>, MechanicsError> {
        let layout = self.chart().names();
        let ch = self.hamiltonian().compile(&layout)?;
        Ok((0..traj.len()).map(|i| ch.eval(traj.state(i))).collect())
    }
}
