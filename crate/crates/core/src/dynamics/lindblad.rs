//! Amplitude damping and pure dephasing on every site, restricted to the
//! vacuum-plus-single-excitation subspace.
//!
//! With `sigma_n^-` taking `|n> -> |vac>` at rate `g1 = 1/T1` and
//! `sigma_n^z` dephasing at rate `gphi = 1/(2 Tphi)`, the dissipator acts
//! elementwise: populations and coherences of excited states decay with
//! `g1 (p_a + p_b) / 2`, every off-diagonal element loses
//! `2 gphi (p_a + p_b)` where `p_a` marks an excited index, and the lost
//! population feeds `rho_vac,vac`.

use nalgebra::DMatrix;

use super::ode::{integrate, IntegratorOptions};
use super::{check_times, DensityMatrix, OpenDiagnostics, Snapshots, Trajectory};
use crate::{Error, Result, C64};

/// Uniform per-site coherence times in seconds; `None` switches the channel
/// off.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct DecoherenceConfig {
    pub t1: Option<f64>,
    pub t_phi: Option<f64>,
}

impl DecoherenceConfig {
    pub fn new(t1: Option<f64>, t_phi: Option<f64>) -> Result<Self> {
        for (name, v) in [("T1", t1), ("Tphi", t_phi)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(Self { t1, t_phi })
    }

    pub fn closed() -> Self {
        Self::default()
    }

    pub fn is_closed(&self) -> bool {
        self.t1.is_none() && self.t_phi.is_none()
    }

    /// Rates in units of `rate_j` (rad/s).
    pub fn rates(&self, rate_j: f64) -> Result<LindbladRates> {
        if !(rate_j.is_finite() && rate_j > 0.0) {
            return Err(Error::invalid("rate_j must be positive"));
        }
        LindbladRates::new(
            self.t1.map_or(0.0, |t1| 1.0 / (t1 * rate_j)),
            self.t_phi.map_or(0.0, |tp| 1.0 / (2.0 * tp * rate_j)),
        )
    }
}

/// Dimensionless jump rates (units of `J`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LindbladRates {
    pub relaxation: f64,
    pub dephasing: f64,
}

impl LindbladRates {
    pub fn new(relaxation: f64, dephasing: f64) -> Result<Self> {
        if !(relaxation.is_finite() && relaxation >= 0.0 && dephasing.is_finite() && dephasing >= 0.0) {
            return Err(Error::invalid("rates must be non-negative"));
        }
        Ok(Self { relaxation, dephasing })
    }
}

/// Right-hand side of the master equation for one Hamiltonian and rate pair.
#[derive(Debug, Clone)]
pub struct LindbladSolver {
    dim: usize,
    h: Vec<f64>,
    decay: Vec<f64>,
    relaxation: f64,
}

impl LindbladSolver {
    pub fn new(h_block: &DMatrix<f64>, rates: LindbladRates) -> Result<Self> {
        let d = h_block.nrows();
        if d == 0 || h_block.ncols() != d {
            return Err(Error::invalid("Hamiltonian block must be square and non-empty"));
        }
        let asym = super::max_abs(&(h_block - h_block.transpose()));
        if asym > 1e-12 * super::max_abs(h_block).max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let dim = d + 1;
        let mut h = vec![0.0; dim * dim];
        for a in 0..d {
            for b in 0..d {
                h[(a + 1) * dim + b + 1] = h_block[(a, b)];
            }
        }
        let excited = |a: usize| if a == 0 { 0.0 } else { 1.0 };
        let mut decay = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let p = excited(a) + excited(b);
                let mut k = 0.5 * rates.relaxation * p;
                if a != b {
                    k += 2.0 * rates.dephasing * p;
                }
                decay[a * dim + b] = k;
            }
        }
        Ok(Self { dim, h, decay, relaxation: rates.relaxation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `d rho / dt` for a row-major flattened `rho`.
    pub fn rhs(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let minus_i = C64::new(0.0, -1.0);
        for a in 0..d {
            for b in 0..d {
                let mut comm = C64::new(0.0, 0.0);
                for k in 0..d {
                    let hak = self.h[a * d + k];
                    let hkb = self.h[k * d + b];
                    if hak != 0.0 {
                        comm += rho[k * d + b] * hak;
                    }
                    if hkb != 0.0 {
                        comm -= rho[a * d + k] * hkb;
                    }
                }
                out[a * d + b] = minus_i * comm - rho[a * d + b] * self.decay[a * d + b];
            }
        }
        if self.relaxation > 0.0 {
            let excited: f64 = (1..d).map(|n| rho[n * d + n].re).sum();
            out[0] += C64::new(self.relaxation * excited, 0.0);
        }
    }
}

/// Integrates the master equation and stores `rho` at each requested time.
/// The trace is never renormalised; drift and the smallest eigenvalue seen at
/// the output times are reported in the diagnostics.
pub fn evolve_lindblad(
    h_block: &DMatrix<f64>,
    rho0: &DensityMatrix,
    times: &[f64],
    rates: LindbladRates,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if h_block.nrows() != rho0.sites() {
        return Err(Error::DimensionMismatch { expected: h_block.nrows() + 1, got: rho0.sites() + 1 });
    }
    check_times(times)?;
    let solver = LindbladSolver::new(h_block, rates)?;
    let d = solver.dim();
    let y0: Vec<C64> = rho0.matrix().transpose().iter().copied().collect();

    let mut states = Vec::with_capacity(times.len());
    let mut diag = OpenDiagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() };
    let stats = integrate(
        |_t, y, dy| solver.rhs(y, dy),
        0.0,
        &y0,
        times,
        opts,
        |_, y| {
            let rho = DensityMatrix::from_matrix_unchecked(DMatrix::from_row_slice(d, d, y));
            diag.max_trace_drift = diag.max_trace_drift.max((rho.trace() - 1.0).norm());
            diag.min_eigenvalue = diag.min_eigenvalue.min(rho.min_eigenvalue());
            states.push(rho);
        },
    )?;
    diag.accepted_steps = stats.accepted;
    diag.rejected_steps = stats.rejected;
    Ok(Trajectory { times: times.to_vec(), snapshots: Snapshots::Mixed(states), diagnostics: Some(diag) })
}
