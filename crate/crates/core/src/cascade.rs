//! Coupling budgets and cascaded long-distance transfer.
//!
//! A chain of `N` sites is cut into `k` segments that share their boundary
//! sites. Each segment runs at the largest rate `J_sub` its own peak coupling
//! allows and performs one half-period transfer `pi / J_sub`; in fractional
//! mode the first segment runs for a quarter period instead and the remaining
//! segments carry the transferred half onward.

use serde::{Deserialize, Serialize};

use crate::models::dome_coupling;
use crate::{Error, Result};

/// Relative slack on budget comparisons, absorbing rounding in the closed-form
/// couplings.
const BUDGET_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainModel {
    Line,
    Dome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeMode {
    Pst,
    Fst,
}

/// Hardware coupling ceiling and the slowest acceptable rate, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingBudget {
    pub j_max: f64,
    pub j_min: f64,
}

impl CouplingBudget {
    pub fn new(j_max: f64, j_min: f64) -> Result<Self> {
        if !(j_min.is_finite() && j_min > 0.0 && j_max.is_finite() && j_max >= j_min) {
            return Err(Error::invalid(format!("need j_max >= j_min > 0, got {j_max} and {j_min}")));
        }
        Ok(Self { j_max, j_min })
    }

    pub fn ratio(&self) -> f64 {
        self.j_max / self.j_min
    }
}

/// Peak coupling of a chain, exactly and from the large-`N` formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxCoupling {
    pub exact: f64,
    pub asymptotic: f64,
}

fn effective_m(model: ChainModel, m: u32) -> Result<u32> {
    match model {
        ChainModel::Line => Ok(0),
        ChainModel::Dome if m == 0 => Err(Error::invalid("the dome model needs m >= 1")),
        ChainModel::Dome => Ok(m),
    }
}

fn exact_peak(n: usize, m: u32) -> f64 {
    (1..n).map(|k| dome_coupling(n, m, k)).fold(0.0, f64::max)
}

/// `m` is ignored for the line model.
pub fn max_coupling(model: ChainModel, n: usize, m: u32, rate_j: f64) -> Result<MaxCoupling> {
    if n < 2 {
        return Err(Error::invalid(format!("a chain needs at least 2 sites, got {n}")));
    }
    if !(rate_j.is_finite() && rate_j > 0.0) {
        return Err(Error::invalid("rate_j must be positive"));
    }
    let m = effective_m(model, m)?;
    let nf = n as f64;
    let asymptotic = match model {
        ChainModel::Line => nf / 4.0,
        ChainModel::Dome => m as f64 * nf * nf / 8.0,
    };
    Ok(MaxCoupling { exact: exact_peak(n, m) * rate_j, asymptotic: asymptotic * rate_j })
}

/// Largest `N` whose exact peak coupling at `J = j_min` stays within `j_max`.
pub fn feasible_n(budget: &CouplingBudget, model: ChainModel, m: u32) -> Result<usize> {
    let m = effective_m(model, m)?;
    let fits = |n: usize| exact_peak(n, m) * budget.j_min <= budget.j_max * (1.0 + BUDGET_RTOL);
    let mut hi = 2usize;
    while fits(hi) {
        if hi > 1 << 40 {
            return Err(Error::invalid("budget ratio too large to search"));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    // fits(lo) holds, fits(hi) does not.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `4 r` for the line and `sqrt(8 r / m)` for the dome, `r = j_max / j_min`.
pub fn feasible_n_asymptotic(budget: &CouplingBudget, model: ChainModel, m: u32) -> Result<f64> {
    let m = effective_m(model, m)?;
    Ok(match model {
        ChainModel::Line => 4.0 * budget.ratio(),
        ChainModel::Dome => (8.0 * budget.ratio() / m as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    /// First site (0-based); the segment covers `start..start + sites`.
    pub start: usize,
    pub sites: usize,
    /// Rate in rad/s.
    pub j_sub: f64,
    /// Seconds.
    pub duration: f64,
    pub kind: CascadeMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadePlan {
    pub n: usize,
    pub k: usize,
    pub model: ChainModel,
    pub m: u32,
    pub mode: CascadeMode,
    pub segments: Vec<Segment>,
    /// Sum of segment durations plus `(k - 1)` boundary overheads.
    pub total_duration: f64,
    /// Large-`N` estimate without overheads.
    pub asymptotic_duration: f64,
    pub boundary_overhead: f64,
}

/// Splits `n - 1` links into `k` runs, giving the remainder to the earliest.
pub fn segment_lengths(n: usize, k: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::invalid(format!("a chain needs at least 2 sites, got {n}")));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::invalid(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    let links = n - 1;
    let (base, rem) = (links / k, links % k);
    Ok((0..k).map(|i| base + usize::from(i < rem) + 1).collect())
}

pub fn plan_cascade(
    n: usize,
    k: usize,
    budget: &CouplingBudget,
    model: ChainModel,
    m: u32,
    mode: CascadeMode,
    boundary_overhead: f64,
) -> Result<CascadePlan> {
    if !(boundary_overhead.is_finite() && boundary_overhead >= 0.0) {
        return Err(Error::invalid("boundary overhead must be non-negative"));
    }
    let em = effective_m(model, m)?;
    let lengths = segment_lengths(n, k)?;
    let pi = std::f64::consts::PI;
    let mut segments = Vec::with_capacity(k);
    let mut start = 0;
    for (i, &sites) in lengths.iter().enumerate() {
        let j_sub = budget.j_max / exact_peak(sites, em);
        if j_sub < budget.j_min * (1.0 - BUDGET_RTOL) {
            return Err(Error::Infeasible { segment: i, j_sub, j_min: budget.j_min });
        }
        let kind = if i == 0 { mode } else { CascadeMode::Pst };
        let duration = match kind {
            CascadeMode::Pst => pi / j_sub,
            CascadeMode::Fst => pi / (2.0 * j_sub),
        };
        segments.push(Segment { start, sites, j_sub, duration, kind });
        start += sites - 1;
    }
    let total_duration = segments.iter().map(|s| s.duration).sum::<f64>() + (k - 1) as f64 * boundary_overhead;

    let (nf, kf) = (n as f64, k as f64);
    let per_segment = match model {
        ChainModel::Line => pi * nf / (4.0 * kf * budget.j_max),
        ChainModel::Dome => pi * em as f64 * nf * nf / (8.0 * kf * kf * budget.j_max),
    };
    let asymptotic_duration = match mode {
        CascadeMode::Pst => kf * per_segment,
        CascadeMode::Fst => (kf - 0.5) * per_segment,
    };
    Ok(CascadePlan { n, k, model, m: em, mode, segments, total_duration, asymptotic_duration, boundary_overhead })
}

/// Plan with the fewest segments that fits the budget.
pub fn smallest_feasible_plan(
    n: usize,
    budget: &CouplingBudget,
    model: ChainModel,
    m: u32,
    mode: CascadeMode,
    boundary_overhead: f64,
) -> Result<CascadePlan> {
    if n < 2 {
        return Err(Error::invalid(format!("a chain needs at least 2 sites, got {n}")));
    }
    let mut last = None;
    for k in 1..n {
        match plan_cascade(n, k, budget, model, m, mode, boundary_overhead) {
            Ok(plan) => return Ok(plan),
            Err(e @ Error::Infeasible { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one k was tried"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn mhz(f: f64) -> f64 {
        2.0 * PI * f * 1e6
    }

    fn budget() -> CouplingBudget {
        CouplingBudget::new(mhz(50.0), mhz(0.5)).unwrap()
    }

    #[test]
    fn max_coupling_examples() {
        let c = max_coupling(ChainModel::Line, 5, 0, 1.0).unwrap();
        assert_relative_eq!(c.exact, 6f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.asymptotic, 1.25);
        let c = max_coupling(ChainModel::Dome, 5, 2, 1.0).unwrap();
        assert_relative_eq!(c.exact, 1.5 * 10f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(c.asymptotic, 6.25);
        assert_relative_eq!(max_coupling(ChainModel::Line, 400, 0, 1.0).unwrap().asymptotic, 100.0);
        assert!(max_coupling(ChainModel::Dome, 5, 0, 1.0).is_err());
        assert!(max_coupling(ChainModel::Line, 1, 0, 1.0).is_err());
    }

    #[test]
    fn feasible_sizes() {
        assert_eq!(feasible_n(&budget(), ChainModel::Line, 0).unwrap(), 400);
        assert_eq!(feasible_n(&budget(), ChainModel::Dome, 10).unwrap(), 9);
        let flat = CouplingBudget::new(1.0, 1.0).unwrap();
        assert_eq!(feasible_n(&flat, ChainModel::Line, 0).unwrap(), 4);
        assert_relative_eq!(feasible_n_asymptotic(&budget(), ChainModel::Line, 0).unwrap(), 400.0, epsilon = 1e-9);
        assert_relative_eq!(
            feasible_n_asymptotic(&budget(), ChainModel::Dome, 10).unwrap(),
            80f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(CouplingBudget::new(1.0, 2.0).is_err());
        assert!(CouplingBudget::new(1.0, 0.0).is_err());
    }

    #[test]
    fn segment_split() {
        assert_eq!(segment_lengths(10, 1).unwrap(), vec![10]);
        assert_eq!(segment_lengths(10, 4).unwrap(), vec![4, 3, 3, 3]);
        assert_eq!(segment_lengths(5, 4).unwrap(), vec![2, 2, 2, 2]);
        assert!(segment_lengths(5, 5).is_err());
        assert!(segment_lengths(5, 0).is_err());
        for (n, k) in [(40usize, 4usize), (64, 8), (101, 7)] {
            let l = segment_lengths(n, k).unwrap();
            assert_eq!(l.iter().sum::<usize>() - (k - 1), n);
        }
    }

    #[test]
    fn line_cascade_gains_nothing() {
        let b = budget();
        let one = plan_cascade(100, 1, &b, ChainModel::Line, 0, CascadeMode::Pst, 0.0).unwrap();
        let four = plan_cascade(100, 4, &b, ChainModel::Line, 0, CascadeMode::Pst, 0.0).unwrap();
        let want = PI * 100.0 / (4.0 * b.j_max);
        assert_relative_eq!(one.asymptotic_duration, want, epsilon = 1e-15);
        assert_relative_eq!(four.asymptotic_duration, want, epsilon = 1e-15);
    }

    #[test]
    fn dome_cascade_scales_as_one_over_k() {
        let b = budget();
        let one = plan_cascade(40, 1, &b, ChainModel::Dome, 10, CascadeMode::Pst, 0.0);
        // A single 40-site dome needs J far below the floor.
        assert!(matches!(one, Err(Error::Infeasible { segment: 0, .. })));
        let relaxed = CouplingBudget::new(b.j_max, b.j_min / 1e3).unwrap();
        let t1 = plan_cascade(64, 1, &relaxed, ChainModel::Dome, 10, CascadeMode::Pst, 0.0).unwrap();
        for k in [2usize, 4, 8] {
            let tk = plan_cascade(64, k, &relaxed, ChainModel::Dome, 10, CascadeMode::Pst, 0.0).unwrap();
            assert_relative_eq!(tk.asymptotic_duration / t1.asymptotic_duration, 1.0 / k as f64, epsilon = 1e-12);
            assert!(tk.total_duration < t1.total_duration);
        }
    }

    #[test]
    fn swap_limit_doubles_line_time() {
        let b = budget();
        let n = 50;
        let plan = plan_cascade(n, n - 1, &b, ChainModel::Line, 0, CascadeMode::Pst, 0.0).unwrap();
        assert_relative_eq!(plan.total_duration, PI * (n - 1) as f64 / (2.0 * b.j_max), epsilon = 1e-12);
        assert!(plan.segments.iter().all(|s| s.sites == 2));
    }

    #[test]
    fn plan_invariants() {
        let b = budget();
        let plan = plan_cascade(37, 5, &b, ChainModel::Dome, 6, CascadeMode::Fst, 1e-9).unwrap();
        let sum: f64 = plan.segments.iter().map(|s| s.duration).sum();
        assert_relative_eq!(plan.total_duration, sum + 4e-9, epsilon = 1e-15);
        assert_eq!(plan.segments[0].kind, CascadeMode::Fst);
        assert!(plan.segments[1..].iter().all(|s| s.kind == CascadeMode::Pst));
        for s in &plan.segments {
            let peak = max_coupling(ChainModel::Dome, s.sites, 6, s.j_sub).unwrap().exact;
            assert!(peak <= b.j_max * (1.0 + 1e-12));
        }
        let last = plan.segments.last().unwrap();
        assert_eq!(last.start + last.sites, 37);
    }

    #[test]
    fn smallest_k_is_found() {
        let b = budget();
        let plan = smallest_feasible_plan(400, &b, ChainModel::Line, 0, CascadeMode::Pst, 0.0).unwrap();
        assert_eq!(plan.k, 1);
        let plan = smallest_feasible_plan(40, &b, ChainModel::Dome, 10, CascadeMode::Pst, 0.0).unwrap();
        assert!(plan.segments.iter().all(|s| s.sites <= 9));
        assert!(plan_cascade(40, plan.k - 1, &b, ChainModel::Dome, 10, CascadeMode::Pst, 0.0).is_err());
    }
}
