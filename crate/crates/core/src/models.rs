//! Closed-form dome chains, separable 2D grids, generic coupling networks and
//! the large-`m` reduction to an effective two-site exchange.

use nalgebra::DMatrix;

use crate::dynamics::eigendecompose;
use crate::inverse_eigen::TridiagonalHamiltonian;
use crate::spectrum::{classify_m, TransferCapability};
use crate::{Error, Result, PERIOD};

/// Breakdown is declared when the edge/middle gap is below this multiple of
/// the largest edge-to-middle coupling.
pub const SW_GAP_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DomeParams {
    pub n: usize,
    pub m: u32,
    /// `J` in rad/s.
    pub rate_j: f64,
}

impl DomeParams {
    pub fn new(n: usize, m: u32, rate_j: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("a chain needs at least 2 sites, got {n}")));
        }
        if !(rate_j.is_finite() && rate_j > 0.0) {
            return Err(Error::invalid("rate_j must be positive"));
        }
        Ok(Self { n, m, rate_j })
    }

    /// `T = 2 pi / J` in seconds.
    pub fn period(&self) -> f64 {
        PERIOD / self.rate_j
    }

    pub fn capability(&self) -> TransferCapability {
        classify_m(self.m)
    }
}

/// On-site energy of site `n` (1-based) in units of `J`.
pub fn dome_omega(len: usize, m: u32, n: usize) -> f64 {
    ((n - 1) * (len - n)) as f64 * m as f64
}

/// Coupling between sites `n` and `n + 1` (1-based) in units of `J`.
pub fn dome_coupling(len: usize, m: u32, n: usize) -> f64 {
    let m = m as f64;
    let a = (n * (len - n - 1)) as f64 * m + n as f64;
    let b = ((n - 1) * (len - n)) as f64 * m + (len - n) as f64;
    0.5 * a.sqrt() * b.sqrt()
}

pub fn dome_hamiltonian(p: &DomeParams) -> Result<TridiagonalHamiltonian> {
    let p = DomeParams::new(p.n, p.m, p.rate_j)?;
    let omegas = (1..=p.n).map(|n| dome_omega(p.n, p.m, n)).collect();
    let couplings = (1..p.n).map(|n| dome_coupling(p.n, p.m, n)).collect();
    TridiagonalHamiltonian::new(omegas, couplings, p.rate_j)
}

/// Rectangular grid whose rows are copies of the chain `x` (length `cols`)
/// and whose columns are copies of `y` (length `rows`). Sites are flattened
/// row-major: `(r, c) -> r * cols + c`, all 0-based.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Grid2D {
    rows: usize,
    cols: usize,
    m_x: Option<u32>,
    m_y: Option<u32>,
    x: TridiagonalHamiltonian,
    y: TridiagonalHamiltonian,
}

pub fn grid_2d(rows: usize, cols: usize, m_x: u32, m_y: u32, rate_j: f64) -> Result<Grid2D> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("grid must be at least 2x2, got {rows}x{cols}")));
    }
    let x = dome_hamiltonian(&DomeParams::new(cols, m_x, rate_j)?)?;
    let y = dome_hamiltonian(&DomeParams::new(rows, m_y, rate_j)?)?;
    let mut g = Grid2D::from_chains(x, y)?;
    g.m_x = Some(m_x);
    g.m_y = Some(m_y);
    Ok(g)
}

impl Grid2D {
    /// Composes arbitrary row and column chains; either may be a single site.
    pub fn from_chains(x: TridiagonalHamiltonian, y: TridiagonalHamiltonian) -> Result<Self> {
        if x.rate_j() != y.rate_j() {
            return Err(Error::invalid("row and column chains must share rate_j"));
        }
        Ok(Self { rows: y.len(), cols: x.len(), m_x: None, m_y: None, x, y })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn m_x(&self) -> Option<u32> {
        self.m_x
    }

    pub fn m_y(&self) -> Option<u32> {
        self.m_y
    }

    pub fn rate_j(&self) -> f64 {
        self.x.rate_j()
    }

    pub fn row_chain(&self) -> &TridiagonalHamiltonian {
        &self.x
    }

    pub fn column_chain(&self) -> &TridiagonalHamiltonian {
        &self.y
    }

    pub fn site_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn omega(&self, r: usize, c: usize) -> f64 {
        self.x.omegas()[c] + self.y.omegas()[r]
    }

    /// `(1,1), (1,C), (R,1), (R,C)` as flat indices.
    pub fn corners(&self) -> [usize; 4] {
        let (r, c) = (self.rows - 1, self.cols - 1);
        [self.index(0, 0), self.index(0, c), self.index(r, 0), self.index(r, c)]
    }

    /// Whether every row equals the row chain and every column the column
    /// chain up to a constant frequency shift.
    pub fn is_separable(&self, tol: f64) -> bool {
        let rows_ok = (0..self.rows).all(|r| {
            let shift = self.omega(r, 0) - self.x.omegas()[0];
            (0..self.cols).all(|c| (self.omega(r, c) - shift - self.x.omegas()[c]).abs() <= tol)
        });
        let cols_ok = (0..self.cols).all(|c| {
            let shift = self.omega(0, c) - self.y.omegas()[0];
            (0..self.rows).all(|r| (self.omega(r, c) - shift - self.y.omegas()[r]).abs() <= tol)
        });
        rows_ok && cols_ok
    }
}

pub fn single_excitation_matrix(g: &Grid2D) -> DMatrix<f64> {
    Network::from_grid(g).to_matrix()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub j: f64,
}

/// Any single-excitation coupling graph: on-site energies, bonds and the set
/// of edge (end or corner) sites. Disorder is applied at this level.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Network {
    pub onsite: Vec<f64>,
    pub bonds: Vec<Bond>,
    pub edges: Vec<usize>,
    pub rate_j: f64,
}

impl Network {
    pub fn from_chain(h: &TridiagonalHamiltonian) -> Self {
        let bonds = h.couplings().iter().enumerate().map(|(i, &j)| Bond { a: i, b: i + 1, j }).collect();
        let mut edges = vec![0, h.len() - 1];
        edges.dedup();
        Self { onsite: h.omegas().to_vec(), bonds, edges, rate_j: h.rate_j() }
    }

    pub fn from_grid(g: &Grid2D) -> Self {
        let mut onsite = Vec::with_capacity(g.site_count());
        for r in 0..g.rows {
            for c in 0..g.cols {
                onsite.push(g.omega(r, c));
            }
        }
        let mut bonds = Vec::new();
        for r in 0..g.rows {
            for c in 0..g.cols {
                if c + 1 < g.cols {
                    bonds.push(Bond { a: g.index(r, c), b: g.index(r, c + 1), j: g.x.couplings()[c] });
                }
                if r + 1 < g.rows {
                    bonds.push(Bond { a: g.index(r, c), b: g.index(r + 1, c), j: g.y.couplings()[r] });
                }
            }
        }
        let mut edges = g.corners().to_vec();
        edges.sort_unstable();
        edges.dedup();
        Self { onsite, bonds, edges, rate_j: g.rate_j() }
    }

    pub fn len(&self) -> usize {
        self.onsite.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onsite.is_empty()
    }

    pub fn is_edge(&self, site: usize) -> bool {
        self.edges.contains(&site)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.onsite));
        for bond in &self.bonds {
            h[(bond.a, bond.b)] += bond.j;
            h[(bond.b, bond.a)] += bond.j;
        }
        debug_assert_eq!(h.nrows(), n);
        h
    }
}

/// The two-site exchange between the chain ends after eliminating the middle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EffectiveTwoSite {
    pub omega1_eff: f64,
    pub omega_n_eff: f64,
    pub j_eff: f64,
    /// Smallest edge/middle energy gap and the largest edge coupling it was
    /// compared with.
    pub gap: f64,
    pub max_edge_coupling: f64,
}

impl EffectiveTwoSite {
    /// Ascending eigenvalues of the 2x2 block.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.omega1_eff + self.omega_n_eff);
        let half = 0.5 * (self.omega1_eff - self.omega_n_eff);
        let r = half.hypot(self.j_eff);
        [mean - r, mean + r]
    }
}

/// Second-order block diagonalisation onto sites `1` and `N`, with the
/// symmetric energy denominator `(1/(E_a - e_k) + 1/(E_b - e_k)) / 2`.
pub fn schrieffer_wolff_reduce(h: &TridiagonalHamiltonian) -> Result<EffectiveTwoSite> {
    let n = h.len();
    if n < 3 {
        return Err(Error::invalid(format!("reduction needs at least 3 sites, got {n}")));
    }
    let w = h.omegas();
    let j = h.couplings();
    let middle = h.to_matrix().view((1, 1), (n - 2, n - 2)).into_owned();
    let eig = eigendecompose(&middle)?;
    let edge_e = [w[0], w[n - 1]];
    let v: Vec<[f64; 2]> =
        (0..n - 2).map(|k| [j[0] * eig.vectors[(0, k)], j[n - 2] * eig.vectors[(n - 3, k)]]).collect();

    let gap = eig.values.iter().flat_map(|e| edge_e.iter().map(move |ea| (ea - e).abs())).fold(f64::INFINITY, f64::min);
    let max_edge_coupling = v.iter().flat_map(|p| p.iter()).fold(0.0f64, |a, x| a.max(x.abs()));
    let threshold = SW_GAP_FACTOR * max_edge_coupling;
    if gap.is_nan() || gap < threshold {
        return Err(Error::PerturbativeBreakdown { gap, threshold });
    }

    let mut block = [[0.0f64; 2]; 2];
    for (k, e) in eig.values.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                let denom = 0.5 * (1.0 / (edge_e[a] - e) + 1.0 / (edge_e[b] - e));
                block[a][b] += v[k][a] * v[k][b] * denom;
            }
        }
    }
    Ok(EffectiveTwoSite {
        omega1_eff: edge_e[0] + block[0][0],
        omega_n_eff: edge_e[1] + block[1][1],
        j_eff: block[0][1],
        gap,
        max_edge_coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dome(n: usize, m: u32) -> TridiagonalHamiltonian {
        dome_hamiltonian(&DomeParams::new(n, m, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn dome_examples() {
        let h = dome(5, 0);
        assert!(h.omegas().iter().all(|w| *w == 0.0));
        let s6 = 6f64.sqrt() / 2.0;
        for (g, w) in h.couplings().iter().zip([1.0, s6, s6, 1.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
        }

        let h = dome(5, 2);
        assert_eq!(h.omegas(), &[0.0, 6.0, 8.0, 6.0, 0.0]);
        let (a, b) = (7f64.sqrt(), 1.5 * 10f64.sqrt());
        for (g, w) in h.couplings().iter().zip([a, b, b, a]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-14);
        }

        for m in [0, 1, 7, 1000] {
            let h = dome(2, m);
            assert_eq!(h.omegas(), &[0.0, 0.0]);
            assert_eq!(h.couplings(), &[0.5]);
        }
        assert!(DomeParams::new(1, 2, 1.0).is_err());
        assert!(DomeParams::new(3, 2, 0.0).is_err());
    }

    #[test]
    fn period_times_rate_is_two_pi() {
        let p = DomeParams::new(5, 2, 2.0 * std::f64::consts::PI * 5e6).unwrap();
        assert_abs_diff_eq!(p.period() * p.rate_j, PERIOD, epsilon = 1e-12);
        assert_abs_diff_eq!(p.period(), 200e-9, epsilon = 1e-18);
        assert_eq!(p.capability(), TransferCapability::PstAndFst);
    }

    #[test]
    fn mirror_symmetry_is_exact() {
        for n in 2..40usize {
            for m in [0u32, 1, 2, 5, 102] {
                let h = dome(n, m);
                assert_eq!(h.mirror_residual(), 0.0, "N={n} m={m}");
            }
        }
    }

    #[test]
    fn grid_paper_lists() {
        let g = grid_2d(3, 4, 2, 2, 1.0).unwrap();
        let jx = g.row_chain().couplings();
        let jy = g.column_chain().couplings();
        for (a, b) in jx.iter().zip([15f64.sqrt() / 2.0, 3.0, 15f64.sqrt() / 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        for a in jy {
            assert_abs_diff_eq!(*a, 6f64.sqrt() / 2.0, epsilon = 1e-14);
        }
        assert_eq!(g.row_chain().omegas(), &[0.0, 4.0, 4.0, 0.0]);
        assert_eq!(g.column_chain().omegas(), &[0.0, 2.0, 0.0]);
        assert_eq!(g.omega(1, 2), 6.0);
        assert_eq!(g.corners(), [0, 3, 8, 11]);
        assert!(g.is_separable(0.0));

        let flat = grid_2d(3, 4, 0, 0, 1.0).unwrap();
        assert!(single_excitation_matrix(&flat).diagonal().iter().all(|w| *w == 0.0));

        assert!(grid_2d(1, 4, 2, 2, 1.0).is_err());
    }

    #[test]
    fn small_grid_neighbour_sums() {
        let g = grid_2d(2, 2, 2, 2, 1.0).unwrap();
        let h = single_excitation_matrix(&g);
        for i in 0..4 {
            let off: f64 = (0..4).filter(|&k| k != i).map(|k| h[(i, k)]).sum();
            assert_abs_diff_eq!(off, 1.0, epsilon = 1e-15);
            assert_eq!(h[(i, i)], 0.0);
        }
    }

    #[test]
    fn grid_spectrum_is_additive() {
        for (r, c, mx, my) in [(3usize, 4usize, 2u32, 2u32), (2, 2, 2, 2), (4, 3, 6, 2), (3, 5, 0, 4)] {
            let g = grid_2d(r, c, mx, my, 1.0).unwrap();
            let got = eigendecompose(&single_excitation_matrix(&g)).unwrap().values;
            let ex = eigendecompose(&g.row_chain().to_matrix()).unwrap().values;
            let ey = eigendecompose(&g.column_chain().to_matrix()).unwrap().values;
            let mut want: Vec<f64> = ex.iter().flat_map(|a| ey.iter().map(move |b| a + b)).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9, "{r}x{c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn degenerate_grid_is_a_chain() {
        let x = dome(6, 2);
        let y = TridiagonalHamiltonian::new(vec![0.0], vec![], 1.0).unwrap();
        let g = Grid2D::from_chains(x.clone(), y).unwrap();
        assert_eq!(single_excitation_matrix(&g), x.to_matrix());
        assert_eq!(g.corners(), [0, 5, 0, 5]);
    }

    #[test]
    fn row_restriction_is_the_chain() {
        let g = grid_2d(3, 4, 2, 6, 1.0).unwrap();
        let h = single_excitation_matrix(&g);
        for r in 0..3 {
            let idx: Vec<usize> = (0..4).map(|c| g.index(r, c)).collect();
            let sub = h.select_rows(&idx).select_columns(&idx);
            let mut want = g.row_chain().to_matrix();
            for c in 0..4 {
                want[(c, c)] += g.column_chain().omegas()[r];
            }
            assert_eq!(sub, want);
        }
    }

    #[test]
    fn network_from_chain() {
        let h = dome(4, 2);
        let net = Network::from_chain(&h);
        assert_eq!(net.edges, vec![0, 3]);
        assert_eq!(net.to_matrix(), h.to_matrix());
    }

    #[test]
    fn large_m_limits() {
        for (n, j, shift) in [(3usize, -0.5, -0.5), (4, 0.5, -1.0), (5, -0.5, -1.5)] {
            let eff = schrieffer_wolff_reduce(&dome(n, 1000)).unwrap();
            assert!((eff.j_eff - j).abs() < 2e-2, "N={n}: J_eff={}", eff.j_eff);
            assert!((eff.omega1_eff - shift).abs() < 2e-2, "N={n}: shift={}", eff.omega1_eff);
            assert_abs_diff_eq!(eff.omega1_eff, eff.omega_n_eff, epsilon = 1e-9);
        }
    }

    #[test]
    fn sign_alternates_with_length() {
        for n in 3..=8usize {
            for m in [100u32, 300, 1000] {
                let eff = schrieffer_wolff_reduce(&dome(n, m)).unwrap();
                let want = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(eff.j_eff.signum(), want, "N={n} m={m}");
                assert!(eff.j_eff.abs() <= dome(n, m).max_coupling());
            }
        }
    }

    #[test]
    fn reduction_breaks_down_at_small_m() {
        assert!(matches!(schrieffer_wolff_reduce(&dome(5, 0)), Err(Error::PerturbativeBreakdown { .. })));
        assert!(schrieffer_wolff_reduce(&dome(2, 1000)).is_err());
    }

    #[test]
    fn effective_model_error_falls_as_one_over_m() {
        for n in [3usize, 4, 5] {
            let err = |m: u32| {
                let h = dome(n, m);
                let full = eigendecompose(&h.to_matrix()).unwrap().values;
                let eff = schrieffer_wolff_reduce(&h).unwrap().eigenvalues();
                (full[0] - eff[0]).abs().max((full[1] - eff[1]).abs())
            };
            let (e2, e4) = (err(100), err(10_000));
            let slope = (e4.ln() - e2.ln()) / (2.0 * 10f64.ln());
            assert!((slope + 1.0).abs() < 0.2, "N={n}: slope {slope}");
        }
    }

    proptest! {
        #[test]
        fn closed_forms_are_positive(n in 2usize..60, m in 0u32..500) {
            let h = dome(n, m);
            prop_assert!(h.couplings().iter().all(|j| *j > 0.0));
            prop_assert!(h.omegas().iter().all(|w| *w >= 0.0));
        }
    }
}
