//! Mirror-symmetric tridiagonal Hamiltonians from a prescribed spectrum.
//!
//! The weights `alpha_s ~ 1 / |prod_{k != s} (lambda_s - lambda_k)|` define a
//! discrete measure whose orthonormal polynomials `q_0, q_1, ...` obey the
//! three-term recurrence of the chain. A Stieltjes sweep with full
//! reorthogonalisation produces `omega_n` and `J_n`; mirror symmetry means
//! only the first half has to be computed.

use nalgebra::DMatrix;

use crate::dynamics::eigendecompose;
use crate::spectrum::Spectrum;
use crate::{Error, Result};

/// Relative agreement required between the target spectrum and the spectrum
/// of the reconstructed Hamiltonian.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Relative residual `|H w - lambda w|` allowed for eigenvectors.
pub const EIGENVECTOR_TOL: f64 = 1e-8;

/// A spectrum together with its normalised weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpectrum {
    pub spectrum: Spectrum,
    pub weights: Vec<f64>,
}

/// Nearest-neighbour Hamiltonian in units of `J`: on-site energies
/// `omegas[n]` and positive couplings `couplings[n]` between sites `n` and
/// `n + 1`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TridiagonalHamiltonian {
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    rate_j: f64,
}

impl TridiagonalHamiltonian {
    pub fn new(omegas: Vec<f64>, couplings: Vec<f64>, rate_j: f64) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::invalid("chain needs at least one site"));
        }
        if couplings.len() + 1 != omegas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len() - 1, got: couplings.len() });
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("on-site energies must be finite"));
        }
        if couplings.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
            return Err(Error::invalid("couplings must be positive and finite"));
        }
        if !(rate_j.is_finite() && rate_j > 0.0) {
            return Err(Error::invalid("rate_j must be positive"));
        }
        Ok(Self { omegas, couplings, rate_j })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn rate_j(&self) -> f64 {
        self.rate_j
    }

    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().copied().fold(0.0, f64::max)
    }

    /// Largest deviation from `omega_n = omega_{N+1-n}`, `J_n = J_{N-n}`,
    /// relative to the largest parameter.
    pub fn mirror_residual(&self) -> f64 {
        let n = self.len();
        let scale = self.omegas.iter().chain(&self.couplings).fold(1.0f64, |acc, x| acc.max(x.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((self.omegas[i] - self.omegas[n - 1 - i]).abs());
        }
        for i in 0..n - 1 {
            worst = worst.max((self.couplings[i] - self.couplings[n - 2 - i]).abs());
        }
        worst / scale
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut h = DMatrix::zeros(n, n);
        for (i, w) in self.omegas.iter().enumerate() {
            h[(i, i)] = *w;
        }
        for (i, j) in self.couplings.iter().enumerate() {
            h[(i, i + 1)] = *j;
            h[(i + 1, i)] = *j;
        }
        h
    }
}

/// Orthonormal polynomials evaluated on the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTable {
    /// `values[(s, n)] = q_n(lambda_s)`.
    pub values: DMatrix<f64>,
    /// `ln ||P_n||` of the monic polynomials, `ln prod_{k<=n} J_k`.
    pub log_norms: Vec<f64>,
}

/// Eigenvalues with matching eigenvectors (columns) of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub residual: f64,
}

/// Normalised weights, computed in the log domain.
pub fn compute_weights(spec: &Spectrum) -> WeightedSpectrum {
    let lam = spec.values();
    let logs: Vec<f64> = (0..lam.len())
        .map(|s| -(0..lam.len()).filter(|&k| k != s).map(|k| (lam[s] - lam[k]).abs().ln()).sum::<f64>())
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    WeightedSpectrum { spectrum: spec.clone(), weights: raw.iter().map(|w| w / total).collect() }
}

struct Sweep {
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    table: Vec<Vec<f64>>,
}

/// Stieltjes recurrence for `omega_1..omega_steps`; `J_n` is produced only
/// when `n < limit`.
fn stieltjes(ws: &WeightedSpectrum, steps: usize, limit: usize) -> Result<Sweep> {
    let lam = ws.spectrum.values();
    let a = &ws.weights;
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(a).map(|((p, q), w)| w * p * q).sum() };
    let scale = lam.iter().fold(1.0f64, |acc, l| acc.max(l.abs()));

    let mut table: Vec<Vec<f64>> = vec![vec![1.0; lam.len()]];
    let mut omegas = Vec::with_capacity(steps);
    let mut couplings = Vec::with_capacity(steps);
    for n in 1..=steps {
        let prev = &table[n - 1];
        let lq: Vec<f64> = lam.iter().zip(prev).map(|(l, q)| l * q).collect();
        let omega = dot(&lq, prev);
        omegas.push(omega);
        if n >= limit {
            break;
        }
        let mut r: Vec<f64> = lq.iter().zip(prev).map(|(x, q)| x - omega * q).collect();
        if n >= 2 {
            let jm = couplings[n - 2];
            for (ri, q) in r.iter_mut().zip(&table[n - 2]) {
                *ri -= jm * q;
            }
        }
        // Two passes of Gram-Schmidt against every earlier polynomial.
        for _ in 0..2 {
            for q in &table {
                let c = dot(&r, q);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let j = dot(&r, &r).sqrt();
        if !(j.is_finite() && j > 1e-13 * scale) {
            return Err(Error::Breakdown { degree: n, reason: format!("vanishing norm {j:e}") });
        }
        couplings.push(j);
        table.push(r.iter().map(|x| x / j).collect());
    }
    Ok(Sweep { omegas, couplings, table })
}

fn verify(h: &TridiagonalHamiltonian, spec: &Spectrum) -> Result<()> {
    let eig = eigendecompose(&h.to_matrix())?;
    let scale = spec.values().iter().fold(1.0f64, |acc, l| acc.max(l.abs()));
    for (k, (got, want)) in eig.values.iter().zip(spec.values()).enumerate() {
        let err = (got - want).abs() / scale;
        if err.is_nan() || err > RECONSTRUCTION_TOL {
            return Err(Error::Breakdown { degree: k, reason: format!("eigenvalue {k} off by {err:e} (relative)") });
        }
    }
    Ok(())
}

/// Mirror-symmetric chain with the given spectrum. Only the first half of the
/// recurrence runs; the rest is reflected, and the result is checked against
/// the target spectrum.
pub fn reconstruct(spec: &Spectrum) -> Result<TridiagonalHamiltonian> {
    let n = spec.len();
    let ws = compute_weights(spec);
    let half = n.div_ceil(2);
    let sweep = stieltjes(&ws, half, n / 2 + 1)?;
    let omegas: Vec<f64> = (0..n).map(|i| sweep.omegas[i.min(n - 1 - i)]).collect();
    let couplings: Vec<f64> = (0..n - 1).map(|i| sweep.couplings[i.min(n - 2 - i)]).collect();
    let h = TridiagonalHamiltonian::new(omegas, couplings, spec.rate_j())?;
    verify(&h, spec)?;
    Ok(h)
}

/// The full recurrence without reflection, with the polynomial table. Used to
/// check mirror symmetry independently.
pub fn reconstruct_full(spec: &Spectrum) -> Result<(TridiagonalHamiltonian, PolynomialTable)> {
    let n = spec.len();
    let ws = compute_weights(spec);
    let sweep = stieltjes(&ws, n, n)?;
    let h = TridiagonalHamiltonian::new(sweep.omegas, sweep.couplings.clone(), spec.rate_j())?;
    verify(&h, spec)?;
    let mut values = DMatrix::zeros(n, n);
    for (deg, col) in sweep.table.iter().enumerate() {
        for (s, v) in col.iter().enumerate() {
            values[(s, deg)] = *v;
        }
    }
    let mut log_norms = vec![0.0];
    for j in &sweep.couplings {
        log_norms.push(log_norms.last().unwrap() + j.ln());
    }
    Ok((h, PolynomialTable { values, log_norms }))
}

/// `W[(n, s)] = sqrt(alpha_s) chi_n(lambda_s)` with `chi` from the forward
/// recurrence of the chain. Rows are sites, columns eigenstates.
pub fn eigenvectors(h: &TridiagonalHamiltonian, spec: &Spectrum) -> Result<EigenBasis> {
    let n = h.len();
    if spec.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spec.len() });
    }
    let ws = compute_weights(spec);
    let (w, j) = (h.omegas(), h.couplings());
    let mut vectors = DMatrix::zeros(n, n);
    for (s, &lam) in spec.values().iter().enumerate() {
        let mut chi = vec![0.0; n];
        chi[0] = 1.0;
        for k in 0..n - 1 {
            let back = if k > 0 { j[k - 1] * chi[k - 1] } else { 0.0 };
            chi[k + 1] = ((lam - w[k]) * chi[k] - back) / j[k];
        }
        let a = ws.weights[s].sqrt();
        for k in 0..n {
            vectors[(k, s)] = a * chi[k];
        }
    }
    let mat = h.to_matrix();
    let scale = spec.values().iter().fold(1.0f64, |acc, l| acc.max(l.abs()));
    let mut residual = 0.0f64;
    for (s, &lam) in spec.values().iter().enumerate() {
        let col = vectors.column(s);
        let r = (&mat * col - col * lam).norm();
        let unit = (col.norm() - 1.0).abs();
        residual = residual.max(r / scale).max(unit);
    }
    if residual.is_nan() || residual > EIGENVECTOR_TOL {
        return Err(Error::EigenResidual { residual, tolerance: EIGENVECTOR_TOL });
    }
    Ok(EigenBasis { values: spec.values().to_vec(), vectors, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{dome_hamiltonian, DomeParams};
    use crate::spectrum::dome_spectrum;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(vals: &[f64]) -> Spectrum {
        Spectrum::new(vals.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn three_level_weights() {
        let w = compute_weights(&spec(&[-1.0, 0.0, 1.0])).weights;
        assert_abs_diff_eq!(w[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn three_level_chain() {
        let h = reconstruct(&spec(&[-1.0, 0.0, 1.0])).unwrap();
        for w in h.omegas() {
            assert_abs_diff_eq!(*w, 0.0, epsilon = 1e-14);
        }
        for j in h.couplings() {
            assert_abs_diff_eq!(*j, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        }
    }

    #[test]
    fn dome_n5_m2_closed_form() {
        let h = reconstruct(&dome_spectrum(5, 2, 1.0).unwrap()).unwrap();
        let want_w = [0.0, 6.0, 8.0, 6.0, 0.0];
        let want_j = [7f64.sqrt(), 1.5 * 10f64.sqrt(), 1.5 * 10f64.sqrt(), 7f64.sqrt()];
        for (g, w) in h.omegas().iter().zip(want_w) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-11);
        }
        for (g, w) in h.couplings().iter().zip(want_j) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-11);
        }
    }

    #[test]
    fn line_couplings() {
        // m = 0: omega = 0, J_n = sqrt(n (N - n)) / 2.
        let h = reconstruct(&dome_spectrum(7, 0, 1.0).unwrap()).unwrap();
        for (i, j) in h.couplings().iter().enumerate() {
            let n = (i + 1) as f64;
            assert_abs_diff_eq!(*j, (n * (7.0 - n)).sqrt() / 2.0, epsilon = 1e-11);
        }
        assert!(h.omegas().iter().all(|w| w.abs() < 1e-11));
    }

    #[test]
    fn matches_closed_form_over_grid() {
        for n in 2..=16usize {
            for m in [0u32, 1, 2, 3, 4, 6, 10] {
                let s = dome_spectrum(n, m, 1.0).unwrap();
                let h = reconstruct(&s).unwrap();
                let closed = dome_hamiltonian(&DomeParams::new(n, m, 1.0).unwrap()).unwrap();
                let scale = s.values().iter().fold(1.0f64, |a, l| a.max(l.abs()));
                for (g, w) in h.omegas().iter().zip(closed.omegas()) {
                    assert!((g - w).abs() <= 1e-9 * scale, "N={n} m={m}: omega {g} vs {w}");
                }
                for (g, w) in h.couplings().iter().zip(closed.couplings()) {
                    assert!((g - w).abs() <= 1e-9 * scale, "N={n} m={m}: J {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn full_recurrence_is_mirror_symmetric() {
        for n in 2..=24usize {
            for m in [0u32, 2, 4, 6, 10, 102] {
                let (h, table) = reconstruct_full(&dome_spectrum(n, m, 1.0).unwrap()).unwrap();
                assert!(h.mirror_residual() < 1e-8, "N={n} m={m}: {}", h.mirror_residual());
                assert_eq!(table.log_norms.len(), n);
            }
        }
    }

    #[test]
    fn round_trip_to_n24() {
        for n in 2..=24usize {
            for m in [0u32, 2, 4, 6, 10, 102] {
                let s = dome_spectrum(n, m, 1.0).unwrap();
                let h = reconstruct(&s).unwrap();
                let eig = eigendecompose(&h.to_matrix()).unwrap();
                let scale = s.values().iter().fold(1.0f64, |a, l| a.max(l.abs()));
                for (g, w) in eig.values.iter().zip(s.values()) {
                    assert!((g - w).abs() <= 1e-8 * scale, "N={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn polynomial_table_is_orthonormal() {
        let s = dome_spectrum(9, 6, 1.0).unwrap();
        let (_, table) = reconstruct_full(&s).unwrap();
        let w = compute_weights(&s).weights;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w));
        let gram = table.values.transpose() * a * &table.values;
        assert!((gram - DMatrix::identity(9, 9)).amax() < 1e-10);
    }

    #[test]
    fn eigenvectors_alternate_on_first_site_partner() {
        // W_{N,s} = (-1)^{N+s} W_{1,s} (1-based s).
        for (n, m) in [(5usize, 2u32), (6, 0), (8, 6), (11, 10)] {
            let s = dome_spectrum(n, m, 1.0).unwrap();
            let h = reconstruct(&s).unwrap();
            let basis = eigenvectors(&h, &s).unwrap();
            for k in 0..n {
                let sign = if (n + k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                let (first, last) = (basis.vectors[(0, k)], basis.vectors[(n - 1, k)]);
                assert!(first > 0.0);
                assert_abs_diff_eq!(last, sign * first, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn odd_line_has_zero_mode_silent_on_center() {
        // N = 3 line: the middle eigenvector has no weight on the centre site.
        let s = dome_spectrum(3, 0, 1.0).unwrap();
        let h = reconstruct(&s).unwrap();
        let basis = eigenvectors(&h, &s).unwrap();
        assert_abs_diff_eq!(basis.values[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(basis.vectors[(1, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn non_mirror_spectrum_still_reconstructs() {
        // Any simple spectrum admits a persymmetric Jacobi matrix.
        let s = spec(&[-3.0, -0.2, 0.5, 4.0]);
        let h = reconstruct(&s).unwrap();
        assert!(h.mirror_residual() < 1e-12);
    }

    #[test]
    fn tridiagonal_validation() {
        assert!(TridiagonalHamiltonian::new(vec![], vec![], 1.0).is_err());
        assert!(TridiagonalHamiltonian::new(vec![0.0, 0.0], vec![], 1.0).is_err());
        assert!(TridiagonalHamiltonian::new(vec![0.0, 0.0], vec![-1.0], 1.0).is_err());
        assert!(TridiagonalHamiltonian::new(vec![0.0, 0.0], vec![1.0], 0.0).is_err());
        assert!(TridiagonalHamiltonian::new(vec![0.0], vec![], 1.0).is_ok());
    }

    #[test]
    fn eigenvector_length_mismatch() {
        let h = reconstruct(&dome_spectrum(4, 2, 1.0).unwrap()).unwrap();
        let res = eigenvectors(&h, &dome_spectrum(5, 2, 1.0).unwrap());
        assert!(matches!(res, Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn weights_are_a_distribution(n in 2usize..20, m in 0u32..40) {
            let w = compute_weights(&dome_spectrum(n, m, 1.0).unwrap()).weights;
            prop_assert!(w.iter().all(|x| *x > 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reconstruction_preserves_trace(n in 2usize..20, m in 0u32..40) {
            let s = dome_spectrum(n, m, 1.0).unwrap();
            let h = reconstruct(&s).unwrap();
            let tr: f64 = h.omegas().iter().sum();
            prop_assert!((tr - s.sum()).abs() <= 1e-9 * s.sum().abs().max(1.0));
            prop_assert!(h.couplings().iter().all(|j| *j > 0.0));
        }
    }
}
