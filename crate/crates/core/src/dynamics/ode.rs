//! Adaptive Dormand-Prince 5(4) integrator over flat complex state vectors.

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Steps below this size abort the run.
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 5_000_000, min_step: 1e-14 }
    }
}

impl IntegratorOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.max_steps > 0
            && self.min_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("integrator tolerances must be positive"))
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0`, calling `observe(i, y)` at every
/// `outputs[i]` (non-decreasing, all `>= t0`). Steps land exactly on output
/// times; no interpolation is used.
pub(crate) fn integrate<F, O>(
    f: F,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<Stats>
where
    F: Fn(f64, &[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    opts.validate()?;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let zero = C64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];

    f(t, &y, &mut k1);
    let scale0 = y.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(opts.atol);
    let slope = k1.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let mut h = if slope > 0.0 { 0.01 * scale0 / slope } else { 1e-3 };
    let mut stats = Stats { accepted: 0, rejected: 0 };

    for (i, &target) in outputs.iter().enumerate() {
        if target < t {
            return Err(Error::invalid("output times must be non-decreasing"));
        }
        while target - t > 1e-13 * target.abs().max(1.0) {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Integrator { t, reason: "maximum number of steps exceeded".into() });
            }
            let remaining = target - t;
            let hit = h >= remaining;
            let step = if hit { remaining } else { h };

            combine(&mut tmp, &y, step, &[(A21, &k1)]);
            f(t + C2 * step, &tmp, &mut k2);
            combine(&mut tmp, &y, step, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * step, &tmp, &mut k3);
            combine(&mut tmp, &y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * step, &tmp, &mut k4);
            combine(&mut tmp, &y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * step, &tmp, &mut k5);
            combine(&mut tmp, &y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + step, &tmp, &mut k6);
            combine(&mut y_new, &y, step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            f(t + step, &y_new, &mut k7);

            let mut err_sq = 0.0;
            for j in 0..n {
                let e = (k1[j] * E1 + k3[j] * E3 + k4[j] * E4 + k5[j] * E5 + k6[j] * E6 + k7[j] * E7) * step;
                let sc = opts.atol + opts.rtol * y[j].norm().max(y_new[j].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integrator { t, reason: "non-finite error estimate".into() });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.accepted += 1;
                t = if hit { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                // Landing on an output may have shortened the step; keep the
                // controller's proposal instead of the clipped size.
                h = if hit { h.max(step * factor) } else { step * factor };
            } else {
                stats.rejected += 1;
                h = step * factor;
                if h < opts.min_step {
                    return Err(Error::Integrator { t, reason: format!("step size {h:e} below minimum") });
                }
            }
        }
        observe(i, &y);
    }
    Ok(stats)
}
