//! JSON run configurations. Every key carries its unit; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use dome_core::cascade::{CascadeMode, ChainModel};
use dome_core::dynamics::DecoherenceConfig;
use dome_core::noise::{FidelityMetric, ModelSpec, NoiseTarget};
use serde::{Deserialize, Serialize};

use crate::CliError;

const MHZ: f64 = 2.0 * std::f64::consts::PI * 1e6;
const DEFAULT_PERIOD_NS: f64 = 200.0;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Evolution rate, given either as the period or as `J / 2 pi`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub period_ns: Option<f64>,
    pub rate_mhz: Option<f64>,
}

impl Timing {
    pub fn new(period_ns: Option<f64>, rate_mhz: Option<f64>) -> Self {
        Self { period_ns, rate_mhz }
    }

    /// Period in nanoseconds.
    pub fn period_ns(&self) -> Result<f64, CliError> {
        let t = match (self.period_ns, self.rate_mhz) {
            (Some(_), Some(_)) => return Err(invalid("give period_ns or rate_mhz, not both")),
            (Some(t), None) => t,
            (None, Some(f)) => 1e3 / f,
            (None, None) => DEFAULT_PERIOD_NS,
        };
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("period must be positive"));
        }
        Ok(t)
    }

    /// `J` in rad/s.
    pub fn rate_j(&self) -> Result<f64, CliError> {
        Ok(dome_core::PERIOD / (self.period_ns()? * 1e-9))
    }
}

pub fn decoherence(t1_us: Option<f64>, tphi_us: Option<f64>) -> Result<DecoherenceConfig, CliError> {
    Ok(DecoherenceConfig::new(t1_us.map(|t| t * 1e-6), tphi_us.map(|t| t * 1e-6))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Chain {
        n: usize,
        m: u32,
    },
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_x: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_y: Option<u32>,
    },
}

impl ModelConfig {
    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        match *self {
            ModelConfig::Chain { n, m } => {
                if n < 2 {
                    return Err(invalid(format!("a chain needs at least 2 sites, got {n}")));
                }
                Ok(ModelSpec::Chain { n, m })
            }
            ModelConfig::Grid { rows, cols, m, m_x, m_y } => {
                let (m_x, m_y) = match (m, m_x, m_y) {
                    (Some(m), None, None) => (m, m),
                    (None, Some(x), Some(y)) => (x, y),
                    _ => return Err(invalid("a grid needs either m or both m_x and m_y")),
                };
                Ok(ModelSpec::Grid { rows, cols, m_x, m_y })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// Eigenvalues in units of `J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<f64>,
    #[serde(default = "one")]
    pub periods: f64,
    #[serde(default = "four_hundred")]
    pub points_per_period: usize,
}

fn one() -> f64 {
    1.0
}

fn four_hundred() -> usize {
    400
}

/// Exactly one of `disorder` and `decoherence` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub metric: FidelityMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<DecoherenceSweep>,
}

/// Coherent disorder over a `sigma` grid (units of `J`) for each model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSweep {
    pub models: Vec<ModelConfig>,
    pub target: NoiseTarget,
    pub sigmas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<f64>,
}

/// Noise-free fidelity on the `(m, T1)` and `(m, Tphi)` grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceSweep {
    pub model: ModelConfig,
    pub ms: Vec<u32>,
    pub t1_us: Vec<f64>,
    pub tphi_fixed_us: f64,
    pub tphi_us: Vec<f64>,
    pub t1_fixed_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub model: ChainModel,
    pub n: usize,
    #[serde(default)]
    pub m: u32,
    /// Absent: the smallest feasible number of segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "pst")]
    pub mode: CascadeMode,
    pub j_max_mhz: f64,
    pub j_min_mhz: f64,
    #[serde(default)]
    pub boundary_overhead_ns: f64,
}

fn pst() -> CascadeMode {
    CascadeMode::Pst
}

pub fn mhz_to_rad(f: f64) -> f64 {
    f * MHZ
}

pub fn rad_to_mhz(w: f64) -> f64 {
    w / MHZ
}
