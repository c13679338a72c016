//! Extended phase space and the presymplectic constraint surface.
//!
//! Time-dependent-style dynamics on `(q^0, q, p_0, p)` with covariant
//! Hamiltonian `p_0 + H(q, p)`. Restricting the symplectic form to the
//! constraint surface `p_0 = -H` leaves a closed 2-form with a
//! 1-dimensional kernel; the kernel direction, normalized so `dq^0` pairs
//! to 1, integrates to the Hamilton flow of the base system in graph
//! parametrization.

use std::collections::BTreeMap;


use crate::expr::Expression;
use crate::exterior::{Chart, ChartMap, ChartRef, Coordinate, DifferentialForm, Role};
use crate::probe;

use super::{omega_matrix, HamiltonianSystem, MechanicsError};

/// Relative singular-value threshold for numeric rank decisions.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ExtendedPhaseSpace {
    base: HamiltonianSystem,
    /// The symplectic system on (q^0, q, p_0, p) with `H_cov = p_0 + H`.
    system: HamiltonianSystem,
    /// Chart of the constraint surface `Sigma_0`: (q^0, q, p).
    sigma_chart: ChartRef,
    /// Inclusion `Sigma_0 -> extended`, binding `p_0 = -H`.
    inclusion: ChartMap,
    /// Pullback of the extended symplectic form to `Sigma_0`.
    omega_restricted: DifferentialForm,
    time_name: String,
}

#[derive(Debug, Clone)]
pub struct PresymplecticReport {
    /// Kernel dimension of the restricted form at each probe point.
    pub kernel_dimensions: Vec<usize>,
    /// Smallest |dq^0(kernel)| over probes, on sup-normalized kernel vectors.
    pub min_dq0_component: f64,
    /// Max |(q,p)| deviation between the kernel flow and the Hamilton flow.
    pub flow_deviation: f64,
}

impl ExtendedPhaseSpace {
    pub fn new(base: &HamiltonianSystem) -> Result<Self, MechanicsError> {
        let chart = base.chart();
        let n = base.degrees_of_freedom();
        let taken: Vec<String> = chart.names();
        let pick = |cands: &[&str]| -> Result<String, MechanicsError> {
            cands
                .iter()
                .find(|c| !taken.iter().any(|t| t == *c))
                .map(|c| c.to_string())
                .ok_or_else(|| {
                    MechanicsError::ChartShape(
                        "cannot name extended coordinates (q0/p0 and fallbacks taken)".into(),
                    )
                })
        };
        let time_name = pick(&["q0", "tau", "q_time"])?;
        let p0_name = pick(&["p0", "pi0", "p_time"])?;

        let mut coords = Vec::with_capacity(2 * n + 2);
        coords.push(Coordinate { name: time_name.clone(), role: Role::GenericQ { i: 0 } });
        for k in 0..n {
            coords.push(Coordinate {
                name: chart.name(base.q_index(k)).to_string(),
                role: Role::GenericQ { i: k + 1 },
            });
        }
        coords.push(Coordinate { name: p0_name.clone(), role: Role::GenericP { i: 0 } });
        for k in 0..n {
            coords.push(Coordinate {
                name: chart.name(base.p_index(k)).to_string(),
                role: Role::GenericP { i: k + 1 },
            });
        }
        let ext_chart =
            Chart::new(coords).map_err(|e| MechanicsError::ChartShape(e.to_string()))?;
        let covariant_h = Expression::var(&p0_name) + base.hamiltonian().clone();
        let system = HamiltonianSystem::new(ext_chart.clone(), covariant_h)?;

        // Sigma_0 chart: (q^0, q, p)
        let mut sigma_coords = Vec::with_capacity(2 * n + 1);
        sigma_coords.push(Coordinate { name: time_name.clone(), role: Role::Spacetime { mu: 0 } });
        for k in 0..n {
            sigma_coords.push(Coordinate {
                name: chart.name(base.q_index(k)).to_string(),
                role: Role::GenericQ { i: k },
            });
        }
        for k in 0..n {
            sigma_coords.push(Coordinate {
                name: chart.name(base.p_index(k)).to_string(),
                role: Role::GenericP { i: k },
            });
        }
        let sigma_chart =
            Chart::new(sigma_coords).map_err(|e| MechanicsError::ChartShape(e.to_string()))?;

        let inclusion = ChartMap::inclusion(
            sigma_chart.clone(),
            ext_chart,
            BTreeMap::from([(p0_name, -base.hamiltonian().clone())]),
        );
        let omega_restricted = system.omega().pullback(&inclusion)?;

        Ok(ExtendedPhaseSpace {
            base: base.clone(),
            system,
            sigma_chart,
            inclusion,
            omega_restricted,
            time_name,
        })
    }

    /// The extended symplectic system (for brackets on (q^0, q, p_0, p)).
    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }

    pub fn covariant_hamiltonian(&self) -> &Expression {
        self.system.hamiltonian()
    }

    pub fn sigma_chart(&self) -> &ChartRef {
        &self.sigma_chart
    }

    pub fn inclusion(&self) -> &ChartMap {
        &self.inclusion
    }

    /// The presymplectic form `Omega|_{Sigma_0}`.
    pub fn omega_restricted(&self) -> &DifferentialForm {
        &self.omega_restricted
    }

    pub fn time_coordinate(&self) -> &str {
        &self.time_name
    }

    /// Kernel of the restricted form at a `Sigma_0` point, normalized so the
    /// `q^0` component is 1. Errors when the kernel is not 1-dimensional or
    /// is transverse to `dq^0`.
    pub fn kernel_at(&self, point: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        let (dim_kernel, v) = self.kernel_raw(point)?;
        if dim_kernel != 1 {
            return Err(MechanicsError::KernelExtraction(point.to_vec()));
        }
        let v0 = v[0];
        let sup = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if v0.abs() < RANK_TOLERANCE * sup {
            return Err(MechanicsError::KernelExtraction(point.to_vec()));
        }
        Ok(v.iter().map(|x| x / v0).collect())
    }

    fn kernel_raw(&self, point: &[f64]) -> Result<(usize, Vec<f64>), MechanicsError> {
        let dim = self.sigma_chart.dim();
        if point.len() != dim {
            return Err(MechanicsError::BadPoint { expected: dim, got: point.len() });
        }
        let bind: BTreeMap<String, f64> = self
            .sigma_chart
            .names()
            .into_iter()
            .zip(point.iter().copied())
            .collect();
        let m = omega_matrix(&self.omega_restricted, &bind)?;
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0_f64, |a, b| a.max(*b));
        let kernel_dim = svd
            .singular_values
            .iter()
            .filter(|s| **s <= RANK_TOLERANCE * smax.max(1.0))
            .count();
        // right-singular vector of the smallest singular value
        let vt = svd.v_t.as_ref().expect("svd with vectors");
        let (min_idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("nonempty");
        let v: Vec<f64> = (0..dim).map(|j| vt[(min_idx, j)]).collect();
        Ok((kernel_dim, v))
    }

    /// Runs the presymplectic verification:
    /// (a) kernel dimension at seeded probes, (b) kernel-flow agreement with
    /// the Hamilton flow from `z0` over duration `t` at step `h`, (c)
    /// non-vanishing of `dq^0` on the kernel.
    pub fn presymplectic_check(
        &self,
        probes: usize,
        seed: u64,
        z0: &[f64],
        t: f64,
        h: f64,
    ) -> Result<PresymplecticReport, MechanicsError> {
        let dim = self.sigma_chart.dim();
        let points = probe::probe_points(seed, probes, dim);
        let mut kernel_dimensions = Vec::with_capacity(probes);
        let mut min_dq0 = f64::INFINITY;
        for pt in &points {
            let (kd, v) = self.kernel_raw(pt)?;
            kernel_dimensions.push(kd);
            let sup = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if sup > 0.0 {
                min_dq0 = min_dq0.min(v[0].abs() / sup);
            }
        }

        // kernel flow: explicit midpoint on Sigma_0, q^0 starting at 0
        let base_traj = self.base.integrate_flow(z0, t, h)?;
        let steps = base_traj.len() - 1;
        let hh = base_traj.step();
        let mut state = Vec::with_capacity(dim);
        state.push(0.0);
        state.extend_from_slice(z0);
        let mut deviation = 0.0_f64;
        for i in 0..steps {
            let k1 = self.kernel_at(&state)?;
            let mid: Vec<f64> = state
                .iter()
                .zip(&k1)
                .map(|(x, k)| x + 0.5 * hh * k)
                .collect();
            let k2 = self.kernel_at(&mid)?;
            for (x, k) in state.iter_mut().zip(&k2) {
                *x += hh * k;
            }
            let reference = base_traj.state(i + 1);
            for j in 0..(dim - 1) {
                deviation = deviation.max((state[j + 1] - reference[j]).abs());
            }
        }

        Ok(PresymplecticReport {
            kernel_dimensions,
            min_dq0_component: if min_dq0.is_finite() { min_dq0 } else { 0.0 },
            flow_deviation: deviation,
        })
    }
}
