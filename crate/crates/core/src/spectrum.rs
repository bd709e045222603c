//! Candidate spectra and the transfer conditions they must satisfy.
//!
//! Eigenvalues are stored in units of the rate `J`, so a transfer time `tau`
//! passed to the predicates here is the dimensionless product `J * t`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Tolerance on `(gap * tau / pi) mod 2` being 1.
pub const ODD_MULTIPLE_TOL: f64 = 1e-9;

/// Tolerance used when checking that every spectral point obeys the same
/// fractional-transfer relation.
pub const FST_PHASE_TOL: f64 = 1e-9;

/// Strictly increasing list of eigenvalues (units of `J`) plus the physical
/// rate `J` in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    rate_j: f64,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, rate_j: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("spectrum must contain at least one eigenvalue"));
        }
        if !(rate_j.is_finite() && rate_j > 0.0) {
            return Err(Error::invalid(format!("rate J must be positive, got {rate_j}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("eigenvalue {i} is not finite")));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::RepeatedEigenvalue { first: i, second: i + 1 });
            }
            if w[1] < w[0] {
                return Err(Error::invalid(format!(
                    "eigenvalues must be strictly increasing (positions {i}, {})",
                    i + 1
                )));
            }
        }
        Ok(Self { values, rate_j })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rate_j(&self) -> f64 {
        self.rate_j
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Phases of a fractional transfer `|1> -> e^{i phi}(sin(theta)|1> + e^{i psi} cos(theta)|N>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FstPhase {
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
}

impl FstPhase {
    /// Pure transfer to the far end (`theta = 0`).
    pub fn is_pst(&self, tol: f64) -> bool {
        self.theta.abs() < tol
    }

    /// Equal-weight superposition of both ends.
    pub fn is_maximally_entangling(&self, tol: f64) -> bool {
        (self.theta - std::f64::consts::FRAC_PI_4).abs() < tol
    }
}

/// What a dome chain with a given `m` can do within one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferCapability {
    PstAndFst,
    PstOnly,
    PeriodicOnly,
    Invalid,
}

/// Eigenvalue `s` (1-based) of the dome spectrum, in units of `J`.
pub fn dome_eigenvalue(n: usize, m: u32, s: usize) -> f64 {
    let s = s as f64;
    let n = n as f64;
    s - (n + 1.0) / 2.0 + (s - 2.0) * (s - 1.0) * f64::from(m) / 2.0
}

/// `lambda_s = s - (N+1)/2 + (s-2)(s-1) m/2`, `s = 1..N`.
pub fn dome_spectrum(n: usize, m: u32, rate_j: f64) -> Result<Spectrum> {
    if n < 2 {
        return Err(Error::invalid(format!("dome spectrum needs N >= 2, got {n}")));
    }
    let values = (1..=n).map(|s| dome_eigenvalue(n, m, s)).collect();
    Spectrum::new(values, rate_j)
}

/// True iff every adjacent gap times `tau` is an odd multiple of pi.
pub fn check_pst_spacing(spec: &Spectrum, tau: f64) -> bool {
    if !(tau > 0.0 && tau.is_finite()) {
        return false;
    }
    spec.values().windows(2).all(|w| {
        let k = ((w[1] - w[0]) * tau / PI).rem_euclid(2.0);
        (k - 1.0).abs() < ODD_MULTIPLE_TOL
    })
}

/// Solves `e^{-i lambda_s tau} = e^{i phi}(sin(theta) + e^{i psi} cos(theta) chi_s)`
/// for a mirror-symmetric chain, where `chi_s = (-1)^{N+s}`.
///
/// The spectral points split into the two classes `chi_s = +1` and `chi_s = -1`;
/// each class must share a single phase factor. Half-sum and half-difference of
/// the two factors give `e^{i phi} sin(theta)` and `e^{i phi} e^{i psi} cos(theta)`.
/// Returns `None` when either class is not phase-coherent.
///
/// `theta` is reported in `[0, pi/2]`. When one of the two components vanishes
/// the corresponding relative phase is meaningless and `psi` is set to 0.
pub fn solve_fst_phase(spec: &Spectrum, tau: f64) -> Option<FstPhase> {
    let n = spec.len();
    if n < 2 || !(tau > 0.0 && tau.is_finite()) {
        return None;
    }
    let mut plus: Option<C64> = None;
    let mut minus: Option<C64> = None;
    for (idx, &lambda) in spec.values().iter().enumerate() {
        let s = idx + 1;
        let z = C64::from_polar(1.0, -lambda * tau);
        let slot = if (n + s).is_multiple_of(2) { &mut plus } else { &mut minus };
        match slot {
            None => *slot = Some(z),
            Some(first) => {
                if (*first - z).norm() > FST_PHASE_TOL {
                    return None;
                }
            }
        }
    }
    let (a, b) = (plus?, minus?);
    let sin_part = (a + b) * 0.5;
    let cos_part = (a - b) * 0.5;
    let theta = sin_part.norm().atan2(cos_part.norm());

    let (phi, psi) = if cos_part.norm() < FST_PHASE_TOL {
        (sin_part.arg(), 0.0)
    } else if sin_part.norm() < FST_PHASE_TOL {
        (cos_part.arg(), 0.0)
    } else {
        let phi = sin_part.arg();
        let psi = wrap_phase(cos_part.arg() - phi);
        (phi, psi)
    };
    Some(FstPhase { theta, psi, phi })
}

/// Maps an angle into `(-pi, pi]`.
pub(crate) fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Capability of the dome chain as a function of `m` alone.
pub fn classify_m(m: u32) -> TransferCapability {
    match m {
        0 => TransferCapability::PstOnly,
        m if m % 2 == 1 => TransferCapability::PeriodicOnly,
        m if m % 4 == 2 => TransferCapability::PstAndFst,
        _ => TransferCapability::PstOnly,
    }
}

/// Dimensionless half-period and quarter-period times.
pub const HALF_PERIOD: f64 = PI;
pub const QUARTER_PERIOD: f64 = FRAC_PI_2;
