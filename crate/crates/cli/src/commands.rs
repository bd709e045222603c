//! The four subcommands. Each returns the primary output bytes and, for
//! sweeps, a provenance sidecar.

use dome_core::cascade::{feasible_n, plan_cascade, smallest_feasible_plan, CouplingBudget};
use dome_core::dynamics::{evolve_closed, evolve_lindblad, populations, DensityMatrix, QuantumState, Trajectory};
use dome_core::inverse_eigen::{compute_weights, eigenvectors, reconstruct};
use dome_core::metrics::reduce_to_sites;
use dome_core::models::{dome_hamiltonian, DomeParams};
use dome_core::noise::{
    sweep_coherent, sweep_decoherence, DecoherenceGrid, DecoherenceScan, DisorderConfig, Evaluation, FidelityMetric,
    ModelSpec, SweepPoint,
};
use dome_core::spectrum::{dome_spectrum, Spectrum};
use dome_core::PERIOD;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    decoherence, mhz_to_rad, rad_to_mhz, CascadeConfig, EvolveConfig, Format, SweepConfig, SynthConfig, Timing,
};
use crate::output::{csv_writer, finish_csv, json_bytes, num, opt_num};
use crate::CliError;

pub const DEFAULT_SEED: u64 = 1;

pub struct Artifact {
    pub primary: Vec<u8>,
    pub sidecar: Option<Vec<u8>>,
}

impl Artifact {
    fn plain(primary: Vec<u8>) -> Self {
        Self { primary, sidecar: None }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Serialize)]
struct SynthOutput {
    source: &'static str,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    period_ns: f64,
    rate_mhz: f64,
    /// All remaining quantities are in units of `J`.
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    spectrum: Vec<f64>,
    weights: Vec<f64>,
    /// `eigenvectors[site][state]`.
    eigenvectors: Vec<Vec<f64>>,
    eigen_residual: f64,
    mirror_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_deviation: Option<f64>,
}

pub fn synth(cfg: &SynthConfig, format: Format) -> Result<Artifact, CliError> {
    let timing = Timing::new(cfg.period_ns, cfg.rate_mhz);
    let rate_j = timing.rate_j()?;
    let (source, spec, m) = match (&cfg.spectrum, cfg.n) {
        (Some(values), None) => {
            if cfg.m.is_some() {
                return Err(invalid("m applies only to the dome spectrum"));
            }
            ("spectrum", Spectrum::new(values.clone(), rate_j)?, None)
        }
        (None, Some(n)) => {
            let m = cfg.m.ok_or_else(|| invalid("dome synthesis needs m"))?;
            DomeParams::new(n, m, rate_j)?;
            ("dome", dome_spectrum(n, m, rate_j)?, Some(m))
        }
        _ => return Err(invalid("give either spectrum or n and m")),
    };
    if spec.len() < 2 {
        return Err(invalid("a chain needs at least 2 sites"));
    }
    let h = reconstruct(&spec)?;
    let basis = eigenvectors(&h, &spec)?;
    let closed_form_deviation = match m {
        Some(m) => {
            let closed = dome_hamiltonian(&DomeParams::new(spec.len(), m, rate_j)?)?;
            let pairs = h.omegas().iter().zip(closed.omegas()).chain(h.couplings().iter().zip(closed.couplings()));
            Some(pairs.map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max))
        }
        None => None,
    };
    let n = spec.len();
    let out = SynthOutput {
        source,
        n,
        m,
        period_ns: timing.period_ns()?,
        rate_mhz: rad_to_mhz(rate_j),
        omegas: h.omegas().to_vec(),
        couplings: h.couplings().to_vec(),
        spectrum: spec.values().to_vec(),
        weights: compute_weights(&spec).weights,
        eigenvectors: (0..n).map(|r| basis.vectors.row(r).iter().copied().collect()).collect(),
        eigen_residual: basis.residual,
        mirror_residual: h.mirror_residual(),
        closed_form_deviation,
    };
    let bytes = match format {
        Format::Json => json_bytes(&out)?,
        Format::Csv => {
            let mut w = csv_writer();
            let mut header = vec!["site".to_string(), "omega_J".into(), "coupling_J".into(), "eigenvalue_J".into()];
            header.push("weight".into());
            header.extend((1..=n).map(|s| format!("v_{s}")));
            w.write_record(&header)?;
            for i in 0..n {
                let mut row = vec![(i + 1).to_string(), num(out.omegas[i])];
                row.push(out.couplings.get(i).map(|j| num(*j)).unwrap_or_default());
                row.push(num(out.spectrum[i]));
                row.push(num(out.weights[i]));
                row.extend(out.eigenvectors[i].iter().map(|v| num(*v)));
                w.write_record(&row)?;
            }
            finish_csv(w)?
        }
    };
    Ok(Artifact::plain(bytes))
}

/// `k / per_period` for the whole run, plus `1/4` and `1/2` when the grid
/// misses them.
pub fn time_grid(periods: f64, per_period: usize) -> Result<Vec<f64>, CliError> {
    if !(periods.is_finite() && periods > 0.0) {
        return Err(invalid("periods must be positive"));
    }
    if per_period == 0 {
        return Err(invalid("points_per_period must be positive"));
    }
    let steps = (periods * per_period as f64).round() as usize;
    if steps > 10_000_000 {
        return Err(invalid("time grid too large"));
    }
    let mut grid: Vec<f64> = (0..=steps).map(|k| k as f64 / per_period as f64).collect();
    for mark in [0.25, 0.5] {
        if mark <= periods && !grid.contains(&mark) {
            grid.push(mark);
        }
    }
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

pub fn evolve(cfg: &EvolveConfig, format: Format) -> Result<Artifact, CliError> {
    let model = cfg.model.spec()?;
    let timing = Timing::new(cfg.period_ns, cfg.rate_mhz);
    let (rate_j, period_ns) = (timing.rate_j()?, timing.period_ns()?);
    let deco = decoherence(cfg.t1_us, cfg.tphi_us)?;
    let net = model.network(rate_j)?;
    let h = net.to_matrix();
    let d = net.len();
    let grid = time_grid(cfg.periods, cfg.points_per_period)?;
    let times: Vec<f64> = grid.iter().map(|x| x * PERIOD).collect();
    let psi0 = QuantumState::site(d, 0)?;
    let traj: Trajectory = if deco.is_closed() {
        evolve_closed(&h, &psi0, &times)?
    } else {
        evolve_lindblad(&h, &DensityMatrix::from_pure(&psi0), &times, deco.rates(rate_j)?, &Default::default())?
    };
    let pops = populations(&traj);

    let target = Evaluation::new(model, FidelityMetric::BellAtQuarterT, deco, rate_j)
        .ok()
        .map(|_| model.entanglement_target())
        .transpose()?;
    let sites = model.entangled_sites();
    let f_ent: Vec<Option<f64>> = match &target {
        Some(t) => (0..traj.len())
            .map(|i| reduce_to_sites(&traj.density(i), &sites)?.fidelity(t).map(Some))
            .collect::<dome_core::Result<_>>()?,
        None => vec![None; traj.len()],
    };
    let f_qpt = match Evaluation::new(model, FidelityMetric::QptAtHalfT, deco, rate_j) {
        Ok(eval) if cfg.periods >= 0.5 => Some(eval.fidelity(&net)?),
        _ => None,
    };

    let bytes = match format {
        Format::Csv => {
            let mut w = csv_writer();
            let mut header = vec!["t_over_T".to_string(), "t_ns".into(), "P_vac".into()];
            header.extend((1..=d).map(|n| format!("P_{n}")));
            header.extend(["F_ent".into(), "F_qpt".into()]);
            w.write_record(&header)?;
            for (i, x) in grid.iter().enumerate() {
                let mut row = vec![num(*x), num(x * period_ns), num(pops.vacuum[i])];
                row.extend(pops.sites.iter().map(|s| num(s[i])));
                row.push(opt_num(f_ent[i]));
                row.push(if *x == 0.5 { opt_num(f_qpt) } else { String::new() });
                w.write_record(&row)?;
            }
            finish_csv(w)?
        }
        Format::Json => {
            let diagnostics = traj.diagnostics.map(|g| {
                json!({
                    "accepted_steps": g.accepted_steps,
                    "rejected_steps": g.rejected_steps,
                    "max_trace_drift": g.max_trace_drift,
                    "min_eigenvalue": g.min_eigenvalue,
                })
            });
            json_bytes(&json!({
                "model": model,
                "period_ns": period_ns,
                "t1_us": cfg.t1_us,
                "tphi_us": cfg.tphi_us,
                "t_over_T": grid,
                "t_ns": grid.iter().map(|x| x * period_ns).collect::<Vec<_>>(),
                "P_vac": pops.vacuum,
                "P": pops.sites,
                "F_ent": f_ent,
                "F_qpt_half_period": f_qpt,
                "diagnostics": diagnostics,
            }))?
        }
    };
    Ok(Artifact::plain(bytes))
}

const SWEEP_HEADER: [&str; 16] = [
    "scan", "model", "rows", "cols", "m_x", "m_y", "target", "sigma", "t1_us", "tphi_us", "mean", "std", "stderr",
    "samples", "failures", "gain",
];

/// Seconds to microseconds, dropping the round-trip noise of the unit change.
fn to_us(t: f64) -> f64 {
    (t * 1e15).round() / 1e9
}

fn sweep_row(scan: &str, p: &SweepPoint, gain: Option<f64>) -> Vec<String> {
    let (kind, rows, cols, m_x, m_y) = match p.model {
        ModelSpec::Chain { n, m } => ("chain", 1, n, m.to_string(), String::new()),
        ModelSpec::Grid { rows, cols, m_x, m_y } => ("grid", rows, cols, m_x.to_string(), m_y.to_string()),
    };
    let target = p
        .target
        .map(|t| serde_json::to_value(t).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default())
        .unwrap_or_default();
    vec![
        scan.into(),
        kind.into(),
        rows.to_string(),
        cols.to_string(),
        m_x,
        m_y,
        target,
        num(p.sigma),
        opt_num(p.t1.map(to_us)),
        opt_num(p.t_phi.map(to_us)),
        num(p.mean),
        num(p.std),
        num(p.standard_error()),
        p.samples.to_string(),
        p.failures.to_string(),
        opt_num(gain),
    ]
}

pub fn sweep(cfg: &SweepConfig, seed: u64, format: Format) -> Result<Artifact, CliError> {
    let timing = Timing::new(cfg.period_ns, cfg.rate_mhz);
    let rate_j = timing.rate_j()?;
    let rows: Vec<(&'static str, SweepPoint, Option<f64>)>;
    let body = match (&cfg.disorder, &cfg.decoherence) {
        (Some(dis), None) => {
            if dis.models.is_empty() || dis.sigmas.is_empty() {
                return Err(invalid("disorder sweep needs at least one model and one sigma"));
            }
            let deco = decoherence(dis.t1_us, dis.tphi_us)?;
            let samples = dis.samples.unwrap_or(cfg.metric.default_samples());
            let mut points = Vec::new();
            for model in &dis.models {
                let spec = model.spec()?;
                for &sigma in &dis.sigmas {
                    let dc = DisorderConfig::new(dis.target, sigma, samples, seed)?;
                    points.push(sweep_coherent(spec, &dc, cfg.metric, deco, rate_j)?);
                }
            }
            rows = points.iter().map(|p| ("disorder", *p, None)).collect();
            json!({ "metric": cfg.metric, "points": points })
        }
        (None, Some(dec)) => {
            let us = |v: &[f64]| v.iter().map(|t| t * 1e-6).collect::<Vec<_>>();
            let scan = DecoherenceScan {
                model: dec.model.spec()?,
                ms: dec.ms.clone(),
                period: timing.period_ns()? * 1e-9,
                t1_values: us(&dec.t1_us),
                t_phi_fixed: dec.tphi_fixed_us * 1e-6,
                t_phi_values: us(&dec.tphi_us),
                t1_fixed: dec.t1_fixed_us * 1e-6,
                metric: cfg.metric,
            };
            if scan.t1_values.is_empty() || scan.t_phi_values.is_empty() {
                return Err(invalid("decoherence sweep needs non-empty t1_us and tphi_us"));
            }
            let grid: DecoherenceGrid = sweep_decoherence(&scan)?;
            let mut r = Vec::new();
            for (p, g) in grid.t1_scan.points.iter().zip(&grid.t1_gain) {
                r.push(("t1", *p, Some(g.gain)));
            }
            for (p, g) in grid.t_phi_scan.points.iter().zip(&grid.t_phi_gain) {
                r.push(("tphi", *p, Some(g.gain)));
            }
            rows = r;
            serde_json::to_value(&grid).map_err(std::io::Error::from)?
        }
        _ => return Err(invalid("set exactly one of disorder and decoherence")),
    };

    let primary = match format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(SWEEP_HEADER)?;
            for (scan, p, gain) in &rows {
                w.write_record(sweep_row(scan, p, *gain))?;
            }
            finish_csv(w)?
        }
        Format::Json => json_bytes(&body)?,
    };
    let mut echo = cfg.clone();
    echo.seed = Some(seed);
    echo.out = None;
    let sidecar = json_bytes(&json!({
        "command": "sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": echo,
    }))?;
    Ok(Artifact { primary, sidecar: Some(sidecar) })
}

pub fn cascade(cfg: &CascadeConfig, format: Format) -> Result<Artifact, CliError> {
    let budget = CouplingBudget::new(mhz_to_rad(cfg.j_max_mhz), mhz_to_rad(cfg.j_min_mhz))?;
    if !(cfg.boundary_overhead_ns.is_finite() && cfg.boundary_overhead_ns >= 0.0) {
        return Err(invalid("boundary_overhead_ns must be non-negative"));
    }
    let overhead = cfg.boundary_overhead_ns * 1e-9;
    let plan = match cfg.k {
        Some(k) => plan_cascade(cfg.n, k, &budget, cfg.model, cfg.m, cfg.mode, overhead)?,
        None => smallest_feasible_plan(cfg.n, &budget, cfg.model, cfg.m, cfg.mode, overhead)?,
    };
    let single_segment_limit = feasible_n(&budget, cfg.model, cfg.m)?;
    let ns = |s: f64| s * 1e9;
    let bytes = match format {
        Format::Json => {
            let segments: Vec<_> = plan
                .segments
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    json!({
                        "index": i,
                        "start": s.start,
                        "sites": s.sites,
                        "kind": s.kind,
                        "j_sub_mhz": rad_to_mhz(s.j_sub),
                        "duration_ns": ns(s.duration),
                    })
                })
                .collect();
            json_bytes(&json!({
                "model": plan.model,
                "n": plan.n,
                "m": plan.m,
                "k": plan.k,
                "mode": plan.mode,
                "j_max_mhz": cfg.j_max_mhz,
                "j_min_mhz": cfg.j_min_mhz,
                "single_segment_limit": single_segment_limit,
                "segments": segments,
                "total_duration_ns": ns(plan.total_duration),
                "asymptotic_duration_ns": ns(plan.asymptotic_duration),
                "boundary_overhead_ns": cfg.boundary_overhead_ns,
            }))?
        }
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["segment", "start", "sites", "kind", "j_sub_mhz", "duration_ns"])?;
            for (i, s) in plan.segments.iter().enumerate() {
                let kind = serde_json::to_value(s.kind).map_err(std::io::Error::from)?;
                w.write_record([
                    i.to_string(),
                    s.start.to_string(),
                    s.sites.to_string(),
                    kind.as_str().unwrap_or_default().to_string(),
                    num(rad_to_mhz(s.j_sub)),
                    num(ns(s.duration)),
                ])?;
            }
            finish_csv(w)?
        }
    };
    Ok(Artifact::plain(bytes))
}
