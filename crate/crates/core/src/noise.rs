//! Seeded quasi-static disorder, Monte-Carlo fidelity sweeps and decoherence
//! scans.
//!
//! Draw `i` of a configuration uses a ChaCha8 generator seeded with `seed` on
//! stream `i`. Every on-site energy and then every bond receives one standard
//! normal variate in a fixed order, whether or not it is targeted, so the
//! value applied to a parameter depends only on `(seed, i, parameter)`.
//! Sweeps over `sigma`, `m` or the target therefore share random numbers, and
//! parallel and serial runs agree bit for bit.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_lindblad, DecoherenceConfig, DensityMatrix, IntegratorOptions, LindbladRates, Propagator, QuantumState,
};
use crate::metrics::{corner_target, pair_target, reduce_to_sites, simulate_qpt, ProcessMatrix};
use crate::models::{dome_hamiltonian, grid_2d, DomeParams, Network};
use crate::spectrum::{classify_m, dome_spectrum, solve_fst_phase, TransferCapability, HALF_PERIOD, QUARTER_PERIOD};
use crate::{Error, Result, C64};

pub const DEFAULT_BELL_SAMPLES: usize = 100;
pub const DEFAULT_QPT_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    MiddleFrequencies,
    EdgeFrequencies,
    Couplings,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    pub target: NoiseTarget,
    /// Standard deviation in units of `J`.
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DisorderConfig {
    pub fn new(target: NoiseTarget, sigma: f64, samples: usize, seed: u64) -> Result<Self> {
        let cfg = Self { target, sigma, samples, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        Ok(())
    }
}

/// Additive Gaussian disorder for draw `draw_index`, applied to the targeted
/// parameters only.
pub fn perturb(net: &Network, cfg: &DisorderConfig, draw_index: usize) -> Result<Network> {
    cfg.validate()?;
    if draw_index >= cfg.samples {
        return Err(Error::invalid(format!("draw {draw_index} out of range for {} samples", cfg.samples)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(draw_index as u64);
    let mut out = net.clone();
    let (edge_w, middle_w, bonds) = match cfg.target {
        NoiseTarget::MiddleFrequencies => (false, true, false),
        NoiseTarget::EdgeFrequencies => (true, false, false),
        NoiseTarget::Couplings => (false, false, true),
        NoiseTarget::All => (true, true, true),
    };
    for (site, w) in out.onsite.iter_mut().enumerate() {
        let xi: f64 = rng.sample(StandardNormal);
        let hit = if net.is_edge(site) { edge_w } else { middle_w };
        if hit {
            *w += cfg.sigma * xi;
        }
    }
    for bond in &mut out.bonds {
        let xi: f64 = rng.sample(StandardNormal);
        if bonds {
            bond.j += cfg.sigma * xi;
        }
    }
    Ok(out)
}

/// Noise-free dome chain or separable dome grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Chain { n: usize, m: u32 },
    Grid { rows: usize, cols: usize, m_x: u32, m_y: u32 },
}

impl ModelSpec {
    pub fn network(&self, rate_j: f64) -> Result<Network> {
        match *self {
            ModelSpec::Chain { n, m } => Ok(Network::from_chain(&dome_hamiltonian(&DomeParams::new(n, m, rate_j)?)?)),
            ModelSpec::Grid { rows, cols, m_x, m_y } => Ok(Network::from_grid(&grid_2d(rows, cols, m_x, m_y, rate_j)?)),
        }
    }

    pub fn sites(&self) -> usize {
        match *self {
            ModelSpec::Chain { n, .. } => n,
            ModelSpec::Grid { rows, cols, .. } => rows * cols,
        }
    }

    /// The same geometry with `m` replaced (both directions for a grid).
    pub fn with_m(&self, m: u32) -> Self {
        match *self {
            ModelSpec::Chain { n, .. } => ModelSpec::Chain { n, m },
            ModelSpec::Grid { rows, cols, .. } => ModelSpec::Grid { rows, cols, m_x: m, m_y: m },
        }
    }

    /// `m` of the chain, or `m_x` of a grid.
    pub fn m(&self) -> u32 {
        match *self {
            ModelSpec::Chain { m, .. } => m,
            ModelSpec::Grid { m_x, .. } => m_x,
        }
    }

    fn capabilities(&self) -> Vec<TransferCapability> {
        match *self {
            ModelSpec::Chain { m, .. } => vec![classify_m(m)],
            ModelSpec::Grid { m_x, m_y, .. } => vec![classify_m(m_x), classify_m(m_y)],
        }
    }

    /// Sites read out for the entanglement metric: both ends, or the four
    /// corners in ascending order.
    pub fn entangled_sites(&self) -> Vec<usize> {
        match *self {
            ModelSpec::Chain { n, .. } => vec![0, n - 1],
            ModelSpec::Grid { rows, cols, .. } => vec![0, cols - 1, (rows - 1) * cols, rows * cols - 1],
        }
    }

    /// Mirror image of site 0.
    pub fn transfer_target(&self) -> usize {
        self.sites() - 1
    }

    /// State reached at `T/4` by the noise-free model from site 0, restricted
    /// to [`Self::entangled_sites`].
    pub fn entanglement_target(&self) -> Result<DVector<C64>> {
        let phase = |n: usize, m: u32| {
            solve_fst_phase(&dome_spectrum(n, m, 1.0)?, QUARTER_PERIOD)
                .ok_or_else(|| Error::invalid(format!("N={n}, m={m} has no fractional transfer at T/4")))
        };
        match *self {
            ModelSpec::Chain { n, m } => Ok(pair_target(&phase(n, m)?)),
            ModelSpec::Grid { rows, cols, m_x, m_y } => Ok(corner_target(&phase(cols, m_x)?, &phase(rows, m_y)?)),
        }
    }
}

/// Fidelity observed in a sweep. The entanglement metric uses the end pair of
/// a chain and the four corners of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMetric {
    BellAtQuarterT,
    QptAtHalfT,
}

impl FidelityMetric {
    pub fn default_samples(&self) -> usize {
        match self {
            FidelityMetric::BellAtQuarterT => DEFAULT_BELL_SAMPLES,
            FidelityMetric::QptAtHalfT => DEFAULT_QPT_SAMPLES,
        }
    }
}

/// Everything needed to turn a (possibly perturbed) network into one
/// fidelity value.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub model: ModelSpec,
    pub metric: FidelityMetric,
    pub rates: LindbladRates,
    pub options: IntegratorOptions,
    target: Option<DVector<C64>>,
    ideal: ProcessMatrix,
}

impl Evaluation {
    pub fn new(model: ModelSpec, metric: FidelityMetric, deco: DecoherenceConfig, rate_j: f64) -> Result<Self> {
        let caps = model.capabilities();
        let mut ideal = ProcessMatrix::identity();
        let target = match metric {
            FidelityMetric::BellAtQuarterT => {
                if caps.iter().any(|c| *c != TransferCapability::PstAndFst) {
                    return Err(Error::invalid(format!("{model:?} does not support fractional transfer")));
                }
                Some(model.entanglement_target()?)
            }
            FidelityMetric::QptAtHalfT => {
                let pst =
                    |c: &TransferCapability| matches!(c, TransferCapability::PstAndFst | TransferCapability::PstOnly);
                if !caps.iter().all(pst) {
                    return Err(Error::invalid(format!("{model:?} does not support perfect transfer")));
                }
                // Even chains and grids pick up a fixed phase on the transferred
                // excitation; the reference channel includes it.
                let prop = Propagator::new(&model.network(rate_j)?.to_matrix())?;
                ideal = ProcessMatrix::phase_gate(prop.amplitude(0, model.transfer_target(), HALF_PERIOD).arg());
                None
            }
        };
        Ok(Self { model, metric, rates: deco.rates(rate_j)?, options: IntegratorOptions::default(), target, ideal })
    }

    fn is_closed(&self) -> bool {
        self.rates.relaxation == 0.0 && self.rates.dephasing == 0.0
    }

    pub fn fidelity(&self, net: &Network) -> Result<f64> {
        let h = net.to_matrix();
        let d = net.len();
        let closed = self.is_closed();
        let prop = if closed { Some(Propagator::new(&h)?) } else { None };
        let evolve = |rho: &DensityMatrix, t: f64| -> Result<DensityMatrix> {
            match &prop {
                Some(p) => p.evolve_density(rho, t),
                None => Ok(evolve_lindblad(&h, rho, &[t], self.rates, &self.options)?.density(0)),
            }
        };
        match self.metric {
            FidelityMetric::BellAtQuarterT => {
                let rho0 = DensityMatrix::from_pure(&QuantumState::site(d, 0)?);
                let rho = evolve(&rho0, QUARTER_PERIOD)?;
                let reduced = reduce_to_sites(&rho, &self.model.entangled_sites())?;
                reduced.fidelity(self.target.as_ref().expect("target set for entanglement"))
            }
            FidelityMetric::QptAtHalfT => {
                let res = simulate_qpt(d, 0, self.model.transfer_target(), |rho| evolve(rho, HALF_PERIOD))?;
                Ok(res.process.fidelity(&self.ideal))
            }
        }
    }
}

/// Summary statistics of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub model: ModelSpec,
    pub target: Option<NoiseTarget>,
    pub sigma: f64,
    pub t1: Option<f64>,
    pub t_phi: Option<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one sample).
    pub std: f64,
    pub samples: usize,
    pub failures: usize,
}

impl SweepPoint {
    pub fn standard_error(&self) -> f64 {
        self.std / (self.samples as f64).sqrt()
    }
}

/// `sqrt(se_a^2 + se_b^2)`.
pub fn pooled_standard_error(a: &SweepPoint, b: &SweepPoint) -> f64 {
    a.standard_error().hypot(b.standard_error())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub metric: FidelityMetric,
    pub points: Vec<SweepPoint>,
}

/// Sum whose rounding does not depend on how the input was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0)).sqrt())
}

fn collect_point(
    results: Vec<Result<f64>>,
    model: ModelSpec,
    target: Option<NoiseTarget>,
    sigma: f64,
    deco: DecoherenceConfig,
) -> Result<SweepPoint> {
    let mut values = Vec::with_capacity(results.len());
    let mut first_err = None;
    let mut failures = 0;
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                failures += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    if values.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::invalid("no samples")));
    }
    let (mean, std) = summarize(&values);
    Ok(SweepPoint { model, target, sigma, t1: deco.t1, t_phi: deco.t_phi, mean, std, samples: values.len(), failures })
}

/// Monte-Carlo mean and spread of `metric` over `cfg.samples` disorder draws.
/// Samples whose propagation fails are counted in `failures`.
pub fn sweep_coherent(
    model: ModelSpec,
    cfg: &DisorderConfig,
    metric: FidelityMetric,
    deco: DecoherenceConfig,
    rate_j: f64,
) -> Result<SweepPoint> {
    cfg.validate()?;
    let eval = Evaluation::new(model, metric, deco, rate_j)?;
    let base = model.network(rate_j)?;
    let results: Vec<Result<f64>> =
        (0..cfg.samples).into_par_iter().map(|i| eval.fidelity(&perturb(&base, cfg, i)?)).collect();
    collect_point(results, model, Some(cfg.target), cfg.sigma, deco)
}

/// `sweep_coherent` over every combination of model and `sigma`, with the same
/// seed (hence the same underlying draws) at every point.
pub fn sweep_sigma(
    models: &[ModelSpec],
    target: NoiseTarget,
    sigmas: &[f64],
    samples: usize,
    seed: u64,
    metric: FidelityMetric,
    rate_j: f64,
) -> Result<SweepResult> {
    let mut points = Vec::with_capacity(models.len() * sigmas.len());
    for model in models {
        for &sigma in sigmas {
            let cfg = DisorderConfig::new(target, sigma, samples, seed)?;
            points.push(sweep_coherent(*model, &cfg, metric, DecoherenceConfig::closed(), rate_j)?);
        }
    }
    Ok(SweepResult { metric, points })
}

/// Scan definition for relaxation and dephasing sweeps. Times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceScan {
    pub model: ModelSpec,
    pub ms: Vec<u32>,
    pub period: f64,
    pub t1_values: Vec<f64>,
    pub t_phi_fixed: f64,
    pub t_phi_values: Vec<f64>,
    pub t1_fixed: f64,
    pub metric: FidelityMetric,
}

impl DecoherenceScan {
    /// Five-site chain, `m = 2, 6, ..., 102`, `T = 200 ns`, the
    /// `T1 = 3..300 us` (at `Tphi = 5 us`) and `Tphi = 0.5..50 us`
    /// (at `T1 = 30 us`) grids.
    pub fn standard(metric: FidelityMetric) -> Self {
        let us = 1e-6;
        Self {
            model: ModelSpec::Chain { n: 5, m: 2 },
            ms: (0..=25).map(|k| 4 * k + 2).collect(),
            period: 200e-9,
            t1_values: [3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 300.0].iter().map(|t| t * us).collect(),
            t_phi_fixed: 5.0 * us,
            t_phi_values: [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0].iter().map(|t| t * us).collect(),
            t1_fixed: 30.0 * us,
            metric,
        }
    }

    pub fn rate_j(&self) -> f64 {
        crate::PERIOD / self.period
    }
}

/// Fidelity difference to the first `m` of the scan at equal coherence times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainPoint {
    pub m: u32,
    pub reference_m: u32,
    pub t1: Option<f64>,
    pub t_phi: Option<f64>,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceGrid {
    pub t1_scan: SweepResult,
    pub t_phi_scan: SweepResult,
    pub t1_gain: Vec<GainPoint>,
    pub t_phi_gain: Vec<GainPoint>,
}

fn gains(points: &[SweepPoint], per_m: usize) -> Vec<GainPoint> {
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let reference = &points[i % per_m];
        out.push(GainPoint {
            m: p.model.m(),
            reference_m: reference.model.m(),
            t1: p.t1,
            t_phi: p.t_phi,
            gain: p.mean - reference.mean,
        });
    }
    out
}

/// Noise-free fidelity on the `(m, T1)` grid at fixed `Tphi` and the
/// `(m, Tphi)` grid at fixed `T1`. Points are ordered by `m`, then by the
/// scanned time.
pub fn sweep_decoherence(scan: &DecoherenceScan) -> Result<DecoherenceGrid> {
    if scan.ms.is_empty() {
        return Err(Error::invalid("m list is empty"));
    }
    if !(scan.period.is_finite() && scan.period > 0.0) {
        return Err(Error::invalid("period must be positive"));
    }
    let rate_j = scan.rate_j();
    let mut t1_jobs = Vec::new();
    for &m in &scan.ms {
        for &t1 in &scan.t1_values {
            t1_jobs.push((scan.model.with_m(m), DecoherenceConfig::new(Some(t1), Some(scan.t_phi_fixed))?));
        }
    }
    let mut tp_jobs = Vec::new();
    for &m in &scan.ms {
        for &tp in &scan.t_phi_values {
            tp_jobs.push((scan.model.with_m(m), DecoherenceConfig::new(Some(scan.t1_fixed), Some(tp))?));
        }
    }
    let run = |jobs: &[(ModelSpec, DecoherenceConfig)]| -> Result<Vec<SweepPoint>> {
        jobs.par_iter()
            .map(|(model, deco)| {
                let eval = Evaluation::new(*model, scan.metric, *deco, rate_j)?;
                let f = eval.fidelity(&model.network(rate_j)?);
                collect_point(vec![f], *model, None, 0.0, *deco)
            })
            .collect()
    };
    let t1_points = run(&t1_jobs)?;
    let tp_points = run(&tp_jobs)?;
    Ok(DecoherenceGrid {
        t1_gain: gains(&t1_points, scan.t1_values.len()),
        t_phi_gain: gains(&tp_points, scan.t_phi_values.len()),
        t1_scan: SweepResult { metric: scan.metric, points: t1_points },
        t_phi_scan: SweepResult { metric: scan.metric, points: tp_points },
    })
}
