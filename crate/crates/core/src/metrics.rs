//! Reduced states of selected qubits, state fidelities and single-qubit
//! process tomography.
//!
//! Qubit bases are `{down, up}` with `up` the excited state; multi-qubit
//! indices put the lowest site in the most significant bit, so for a pair
//! `(a, b)` the basis is `|dd>, |du>, |ud>, |uu>`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{DensityMatrix, POSITIVITY_TOL, TRACE_TOL};
use crate::spectrum::FstPhase;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Density matrix of `k` selected qubits (`2^k x 2^k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    sites: Vec<usize>,
    rho: DMatrix<C64>,
}

impl ReducedState {
    pub fn new(sites: Vec<usize>, rho: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << sites.len();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: rho.nrows() });
        }
        Ok(Self { sites, rho })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Trace, Hermiticity and positivity within the density-matrix tolerances.
    pub fn is_physical(&self) -> bool {
        let herm = (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let min = nalgebra::SymmetricEigen::new(h).eigenvalues.min();
        (self.trace() - 1.0).norm() <= TRACE_TOL && herm <= 1e-10 && min >= -POSITIVITY_TOL
    }

    /// `<psi| rho |psi>` for a normalised target.
    pub fn fidelity(&self, target: &DVector<C64>) -> Result<f64> {
        if target.len() != self.rho.nrows() {
            return Err(Error::DimensionMismatch { expected: self.rho.nrows(), got: target.len() });
        }
        Ok((target.adjoint() * &self.rho * target)[(0, 0)].re)
    }
}

/// Exact partial trace onto `sites` (strictly increasing).
pub fn reduce_to_sites(rho: &DensityMatrix, sites: &[usize]) -> Result<ReducedState> {
    let d = rho.sites();
    if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sites must be non-empty and strictly increasing"));
    }
    if let Some(bad) = sites.iter().find(|&&s| s >= d) {
        return Err(Error::invalid(format!("site {bad} out of range for {d} sites")));
    }
    let k = sites.len();
    let full = rho.matrix();
    // Row/column of the full matrix feeding each reduced basis index when the
    // rest of the system is in its ground state.
    let mut members: Vec<(usize, usize)> = vec![(0, 0)];
    for (pos, s) in sites.iter().enumerate() {
        members.push((s + 1, 1 << (k - 1 - pos)));
    }
    let mut out = DMatrix::zeros(1 << k, 1 << k);
    for &(x, ix) in &members {
        for &(y, iy) in &members {
            out[(ix, iy)] += full[(x, y)];
        }
    }
    for n in 0..d {
        if !sites.contains(&n) {
            out[(0, 0)] += full[(n + 1, n + 1)];
        }
    }
    ReducedState::new(sites.to_vec(), out)
}

/// Two-qubit reduction ordered by site index.
pub fn reduce_to_pair(rho: &DensityMatrix, a: usize, b: usize) -> Result<ReducedState> {
    if a == b {
        return Err(Error::invalid("pair sites must differ"));
    }
    reduce_to_sites(rho, &[a.min(b), a.max(b)])
}

/// `sin(theta)|ud> + e^{i psi} cos(theta)|du>`: the pair state reached by a
/// fractional transfer started on the lower site.
pub fn pair_target(phase: &FstPhase) -> DVector<C64> {
    let mut v = DVector::zeros(4);
    v[2] = C64::new(phase.theta.sin(), 0.0);
    v[1] = C64::from_polar(phase.theta.cos(), phase.psi);
    v
}

/// `(|ud> + i|du>) / sqrt(2)`, the equal split with a quarter-turn relative
/// phase produced by the dome chains that support fractional transfer.
pub fn bell_target() -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(4);
    v[2] = C64::new(s, 0.0);
    v[1] = C64::new(0.0, s);
    v
}

/// Corner state of a separable grid started on corner `(1,1)`, built from the
/// row-chain and column-chain transfer phases. Corners are ordered
/// `(1,1), (1,C), (R,1), (R,C)`.
pub fn corner_target(row: &FstPhase, col: &FstPhase) -> DVector<C64> {
    let (sx, cx) = (row.theta.sin(), row.theta.cos());
    let (sy, cy) = (col.theta.sin(), col.theta.cos());
    let mut v = DVector::zeros(16);
    v[8] = C64::new(sx * sy, 0.0);
    v[4] = C64::from_polar(cx * sy, row.psi);
    v[2] = C64::from_polar(sx * cy, col.psi);
    v[1] = C64::from_polar(cx * cy, row.psi + col.psi);
    v
}

/// `(|uddd> + i|dudd> + i|ddud> + |dddu>) / 2` with all four phases taken
/// literally; not reachable from a single corner excitation.
pub fn symmetric_w_target() -> DVector<C64> {
    let mut v = DVector::zeros(16);
    v[8] = C64::new(0.5, 0.0);
    v[4] = C64::new(0.0, 0.5);
    v[2] = C64::new(0.0, 0.5);
    v[1] = C64::new(0.5, 0.0);
    v
}

pub fn bell_fidelity(pair: &ReducedState) -> Result<f64> {
    pair.fidelity(&bell_target())
}

pub fn w_fidelity(corners: &ReducedState, target: &DVector<C64>) -> Result<f64> {
    if corners.sites().len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: corners.sites().len() });
    }
    corners.fidelity(target)
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        _ => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

fn mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn adjoint2(a: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Single-qubit process matrix in the Pauli basis `I, X, Y, Z`:
/// `E(rho) = sum_mn chi[m][n] P_m rho P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: DMatrix<C64>,
}

impl ProcessMatrix {
    pub fn identity() -> Self {
        let mut chi = DMatrix::zeros(4, 4);
        chi[(0, 0)] = ONE;
        Self { chi }
    }

    /// Process matrix of `diag(1, e^{i phi})` (global phase dropped).
    pub fn phase_gate(phi: f64) -> Self {
        let a = [C64::new((phi / 2.0).cos(), 0.0), ZERO, ZERO, C64::new(0.0, -(phi / 2.0).sin())];
        Self { chi: DMatrix::from_fn(4, 4, |m, n| a[m] * a[n].conj()) }
    }

    /// `Tr(chi chi_ideal)` for a pure ideal process.
    pub fn fidelity(&self, ideal: &ProcessMatrix) -> f64 {
        (&self.chi * &ideal.chi).trace().re
    }

    /// `|| sum_mn chi_mn P_n P_m - 1 ||_max`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut acc = [[ZERO; 2]; 2];
        for m in 0..4 {
            for n in 0..4 {
                let p = mul2(&pauli(n), &pauli(m));
                for i in 0..2 {
                    for j in 0..2 {
                        acc[i][j] += self.chi[(m, n)] * p[i][j];
                    }
                }
            }
        }
        let id = pauli(0);
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).fold(0.0f64, |a, (i, j)| a.max((acc[i][j] - id[i][j]).norm()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.chi - self.chi.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QptResult {
    pub process: ProcessMatrix,
    pub fidelity: f64,
    /// Residual of the linear inversion.
    pub residual: f64,
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
}

/// Qubit density matrix from exact `<Z>` readouts after the pre-rotations
/// `I`, `X_{pi/2}`, `Y_{pi/2}`.
fn tomograph_qubit(rho: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rx = [[C64::new(s, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(s, 0.0)]];
    let ry = [[C64::new(s, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(s, 0.0)]];
    let z_after = |u: &[[C64; 2]; 2]| {
        let r = mul2(&mul2(u, rho), &adjoint2(u));
        (r[0][0] - r[1][1]).re
    };
    let z = z_after(&pauli(0));
    let y = z_after(&rx);
    let x = -z_after(&ry);
    let half = C64::new(0.5, 0.0);
    [[half * (1.0 + z), half * C64::new(x, -y)], [half * C64::new(x, y), half * (1.0 - z)]]
}

/// Tomography of the channel from `source` to `target` realised by `evolve`,
/// which maps an initial density matrix on the full subspace to the final
/// one. The four probes are `|d>`, `|u>`, `(|d>+|u>)/sqrt(2)` and
/// `(|d>+i|u>)/sqrt(2)` on the source qubit, with the rest of the chain in
/// its ground state.
pub fn simulate_qpt<F>(sites: usize, source: usize, target: usize, evolve: F) -> Result<QptResult>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    if source >= sites || target >= sites {
        return Err(Error::invalid("source and target must be valid sites"));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let probes = [(ONE, ZERO), (ZERO, ONE), (C64::new(s, 0.0), C64::new(s, 0.0)), (C64::new(s, 0.0), C64::new(0.0, s))];
    let mut outputs = Vec::with_capacity(4);
    for (down, up) in probes {
        let psi = crate::dynamics::QuantumState::qubit_on_site(sites, source, down, up)?;
        let out = evolve(&DensityMatrix::from_pure(&psi))?;
        if out.sites() != sites {
            return Err(Error::DimensionMismatch { expected: sites + 1, got: out.sites() + 1 });
        }
        let q = reduce_to_sites(&out, &[target])?;
        let m = q.matrix();
        outputs.push(tomograph_qubit(&[[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]));
    }
    let (r0, r1, rp, ry) = (&outputs[0], &outputs[1], &outputs[2], &outputs[3]);
    let lin = |f: &dyn Fn(usize, usize) -> C64| [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]];
    let images = [
        lin(&|i, j| r0[i][j] + r1[i][j]),
        lin(&|i, j| 2.0 * rp[i][j] - r0[i][j] - r1[i][j]),
        lin(&|i, j| 2.0 * ry[i][j] - r0[i][j] - r1[i][j]),
        lin(&|i, j| r0[i][j] - r1[i][j]),
    ];

    let mut beta = DMatrix::zeros(16, 16);
    let mut lambda = DVector::zeros(16);
    for j in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let p = mul2(&mul2(&pauli(m), &pauli(j)), &pauli(n));
                for a in 0..2 {
                    for b in 0..2 {
                        beta[(4 * j + 2 * a + b, 4 * m + n)] = p[a][b];
                    }
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                lambda[4 * j + 2 * a + b] = images[j][a][b];
            }
        }
    }
    let solution = beta.clone().lu().solve(&lambda).ok_or_else(|| Error::invalid("singular tomography system"))?;
    let residual = (&beta * &solution - &lambda).norm();
    let chi = DMatrix::from_fn(4, 4, |m, n| solution[4 * m + n]);
    let process = ProcessMatrix { chi };
    Ok(QptResult {
        fidelity: process.fidelity(&ProcessMatrix::identity()),
        residual,
        trace_defect: process.trace_preservation_defect(),
        hermiticity_defect: process.hermiticity_defect(),
        process,
    })
}
