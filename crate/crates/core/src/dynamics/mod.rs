//! Single-excitation dynamics.
//!
//! All states live in `span{|vac>, |site 0>, ..., |site D-1>}` (index 0 is the
//! vacuum). Hamiltonians are passed as the real symmetric `D x D`
//! single-excitation block in units of `J`; the vacuum has energy zero and is
//! decoupled, so the excitation number is conserved by the unitary part.

mod lindblad;
mod ode;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

pub use lindblad::{evolve_lindblad, DecoherenceConfig, LindbladRates, LindbladSolver};
pub use ode::IntegratorOptions;

/// Norm tolerance for [`QuantumState`].
pub const STATE_NORM_TOL: f64 = 1e-10;
/// Trace tolerance for [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-9;
/// Hermiticity tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a [`DensityMatrix`].
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `max_s |H v_s - lambda_s v_s|`.
    pub fn residual(&self, h: &DMatrix<f64>) -> f64 {
        let hv = h * &self.vectors;
        let mut worst = 0.0f64;
        for (s, lambda) in self.values.iter().enumerate() {
            let r = (hv.column(s) - self.vectors.column(s) * *lambda).norm();
            worst = worst.max(r);
        }
        worst
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Symmetric eigendecomposition with a deterministic ordering and sign choice:
/// eigenvalues ascending, and the largest-magnitude component of every
/// eigenvector positive.
pub fn eigendecompose(h: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = h.nrows();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = max_abs(h).max(1.0);
    let asymmetry = max_abs(&(h - h.transpose()));
    if asymmetry > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = (h + h.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Normalised amplitudes over `{|vac>, |site 0>, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: DVector<C64>,
}

impl QuantumState {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::invalid("state needs the vacuum and at least one site"));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amps })
    }

    pub fn vacuum(sites: usize) -> Self {
        let mut amps = DVector::zeros(sites + 1);
        amps[0] = C64::new(1.0, 0.0);
        Self { amps }
    }

    /// A single excitation on `site`.
    pub fn site(sites: usize, site: usize) -> Result<Self> {
        if site >= sites {
            return Err(Error::invalid(format!("site {site} out of range for {sites} sites")));
        }
        let mut amps = DVector::zeros(sites + 1);
        amps[site + 1] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// `down |vac> + up |site>` (normalised by the caller).
    pub fn qubit_on_site(sites: usize, site: usize, down: C64, up: C64) -> Result<Self> {
        if site >= sites {
            return Err(Error::invalid(format!("site {site} out of range for {sites} sites")));
        }
        let mut amps = DVector::zeros(sites + 1);
        amps[0] = down;
        amps[site + 1] = up;
        Self::new(amps)
    }

    pub fn sites(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn vacuum_amplitude(&self) -> C64 {
        self.amps[0]
    }

    pub fn site_amplitude(&self, site: usize) -> C64 {
        self.amps[site + 1]
    }

    pub fn population(&self, site: usize) -> f64 {
        self.amps[site + 1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }
}

/// Density operator on the vacuum-plus-single-excitation subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        let d = rho.nrows();
        if d < 2 || rho.ncols() != d {
            return Err(Error::invalid("density matrix must be square with dimension >= 2"));
        }
        let out = Self { rho };
        let tr = out.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invalid(format!("trace {tr} is not 1")));
        }
        let herm = out.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::invalid(format!("not Hermitian (defect {herm:e})")));
        }
        let min = out.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::invalid(format!("negative eigenvalue {min:e}")));
        }
        Ok(out)
    }

    pub(crate) fn from_matrix_unchecked(rho: DMatrix<C64>) -> Self {
        Self { rho }
    }

    pub fn from_pure(psi: &QuantumState) -> Self {
        let a = psi.amplitudes();
        Self { rho: a * a.adjoint() }
    }

    pub fn sites(&self) -> usize {
        self.rho.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn vacuum_population(&self) -> f64 {
        self.rho[(0, 0)].re
    }

    pub fn population(&self, site: usize) -> f64 {
        self.rho[(site + 1, site + 1)].re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        nalgebra::SymmetricEigen::new(h).eigenvalues.min()
    }
}

/// Exact propagator `exp(-i H t)` on the single-excitation block, built once
/// from an eigendecomposition and reused for any number of times and states.
#[derive(Debug, Clone)]
pub struct Propagator {
    eig: EigenDecomposition,
}

impl Propagator {
    pub fn new(h_block: &DMatrix<f64>) -> Result<Self> {
        Ok(Self { eig: eigendecompose(h_block)? })
    }

    pub fn sites(&self) -> usize {
        self.eig.values.len()
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    /// `exp(-i H t)` restricted to the excitation block.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let v = self.eig.vectors.map(|x| C64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&self.eig.values.map(|l| C64::from_polar(1.0, -l * t)));
        &v * phases * v.transpose()
    }

    /// `<to| exp(-i H t) |from>`.
    pub fn amplitude(&self, from: usize, to: usize, t: f64) -> C64 {
        let v = &self.eig.vectors;
        (0..self.sites()).map(|k| C64::from_polar(v[(to, k)] * v[(from, k)], -self.eig.values[k] * t)).sum()
    }

    pub fn evolve(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        if psi.sites() != self.sites() {
            return Err(Error::DimensionMismatch { expected: self.sites() + 1, got: psi.sites() + 1 });
        }
        let v = &self.eig.vectors;
        let block = psi.amps.rows(1, self.sites());
        let mut amps = DVector::zeros(self.sites() + 1);
        amps[0] = psi.amps[0];
        for k in 0..self.sites() {
            let coeff: C64 = v.column(k).iter().zip(block.iter()).map(|(a, b)| b * *a).sum();
            let coeff = coeff * C64::from_polar(1.0, -self.eig.values[k] * t);
            for i in 0..self.sites() {
                amps[i + 1] += coeff * v[(i, k)];
            }
        }
        Ok(QuantumState { amps })
    }

    /// `U rho U^dagger` with `U = 1 (+) exp(-i H t)`.
    pub fn evolve_density(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho.sites() != self.sites() {
            return Err(Error::DimensionMismatch { expected: self.sites() + 1, got: rho.sites() + 1 });
        }
        let d = self.sites() + 1;
        let mut u = DMatrix::zeros(d, d);
        u[(0, 0)] = C64::new(1.0, 0.0);
        u.view_mut((1, 1), (d - 1, d - 1)).copy_from(&self.unitary(t));
        Ok(DensityMatrix { rho: &u * &rho.rho * u.adjoint() })
    }
}

/// Stored states of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    Pure(Vec<QuantumState>),
    Mixed(Vec<DensityMatrix>),
}

/// Integration statistics of an open-system run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpenDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Snapshots,
    pub diagnostics: Option<OpenDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sites(&self) -> usize {
        match &self.snapshots {
            Snapshots::Pure(v) => v.first().map_or(0, QuantumState::sites),
            Snapshots::Mixed(v) => v.first().map_or(0, DensityMatrix::sites),
        }
    }

    /// Density matrix at output index `i` (pure states are promoted).
    pub fn density(&self, i: usize) -> DensityMatrix {
        match &self.snapshots {
            Snapshots::Pure(v) => DensityMatrix::from_pure(&v[i]),
            Snapshots::Mixed(v) => v[i].clone(),
        }
    }
}

/// Per-site population time series, plus the vacuum weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub times: Vec<f64>,
    pub vacuum: Vec<f64>,
    /// `sites[n][i]` is the population of site `n` at `times[i]`.
    pub sites: Vec<Vec<f64>>,
}

pub fn populations(traj: &Trajectory) -> Populations {
    let d = traj.sites();
    let mut sites = vec![Vec::with_capacity(traj.len()); d];
    let mut vacuum = Vec::with_capacity(traj.len());
    match &traj.snapshots {
        Snapshots::Pure(states) => {
            for psi in states {
                vacuum.push(psi.vacuum_amplitude().norm_sqr());
                for (n, series) in sites.iter_mut().enumerate() {
                    series.push(psi.population(n));
                }
            }
        }
        Snapshots::Mixed(rhos) => {
            for rho in rhos {
                vacuum.push(rho.vacuum_population());
                for (n, series) in sites.iter_mut().enumerate() {
                    series.push(rho.population(n));
                }
            }
        }
    }
    Populations { times: traj.times.clone(), vacuum, sites }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times must be non-decreasing"));
    }
    Ok(())
}

/// `psi(t) = V exp(-i Lambda t) V^T psi0` on the excitation block for every
/// requested time.
pub fn evolve_closed(h_block: &DMatrix<f64>, psi0: &QuantumState, times: &[f64]) -> Result<Trajectory> {
    if h_block.nrows() != psi0.sites() {
        return Err(Error::DimensionMismatch { expected: h_block.nrows() + 1, got: psi0.sites() + 1 });
    }
    check_times(times)?;
    let prop = Propagator::new(h_block)?;
    let states = times.iter().map(|&t| prop.evolve(psi0, t)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: times.to_vec(), snapshots: Snapshots::Pure(states), diagnostics: None })
}
