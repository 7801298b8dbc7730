//! Log-log decay fitting of an energy trace against the ln⁴(t)/t² law.

use super::sim::EnergyTrace;
use crate::error::{Error, Result};

/// Decay diagnosis over one time window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub window: (f64, f64),
    /// Least-squares slope of log E against log t.
    pub slope: f64,
    pub intercept: f64,
    /// Running maximum of E(t) t² / ln⁴(t) at the window samples.
    pub c_hat_running_max: Vec<(f64, f64)>,
    /// Final value of the running maximum: the empirical constant.
    pub c_hat: f64,
    /// Relative increase of the running maximum over the last dyadic
    /// subwindow [hi/2, hi].
    pub last_window_increase: f64,
    /// True when the running maximum stabilized (last-window increase < 5%).
    pub bounded: bool,
    pub samples_used: usize,
}

/// Threshold on the last-dyadic-window growth of the running maximum below
/// which the empirical constant counts as stabilized.
pub const BOUNDED_INCREASE_LIMIT: f64 = 0.05;

/// Fits (t, E) samples inside `window`, which must start past t = 1 so the
/// ln⁴ weight is meaningful.
pub fn fit_decay_samples(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 1.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "fit window must satisfy 1 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let t_first = samples.first().map_or(f64::INFINITY, |s| s.0);
    let t_last = samples.last().map_or(0.0, |s| s.0);
    let in_window: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .collect();
    if t_first > lo || t_last < hi * (1.0 - 1e-9) || in_window.len() < 8 {
        return Err(Error::WindowOutOfRange { lo, hi });
    }
    for &(t, e) in &in_window {
        if !(e > 0.0) {
            return Err(Error::NonpositiveEnergy { t });
        }
    }

    // Thin to geometric spacing so late-time samples do not dominate the
    // least-squares weighting.
    let targets = 256.min(in_window.len());
    let mut picked: Vec<(f64, f64)> = Vec::with_capacity(targets);
    let mut idx = 0;
    for k in 0..targets {
        let t_goal = lo * (hi / lo).powf(k as f64 / (targets - 1).max(1) as f64);
        while idx + 1 < in_window.len() && in_window[idx + 1].0 <= t_goal {
            idx += 1;
        }
        picked.push(in_window[idx]);
    }
    picked.dedup_by(|a, b| a.0 == b.0);

    let n = picked.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in &picked {
        let x = t.ln();
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::Domain("degenerate fit window".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;

    let mut running = 0.0f64;
    let mut c_hat_running_max = Vec::with_capacity(in_window.len());
    for &(t, e) in &in_window {
        let c = e * t * t / t.ln().powi(4);
        running = running.max(c);
        c_hat_running_max.push((t, running));
    }
    let c_hat = running;
    let half = hi / 2.0;
    let at_half = c_hat_running_max
        .iter()
        .take_while(|(t, _)| *t <= half)
        .last()
        .map_or(c_hat_running_max[0].1, |(_, c)| *c);
    let last_window_increase = if at_half > 0.0 {
        (c_hat - at_half) / at_half
    } else {
        f64::INFINITY
    };

    Ok(DecayFit {
        window,
        slope,
        intercept,
        c_hat_running_max,
        c_hat,
        last_window_increase,
        bounded: last_window_increase < BOUNDED_INCREASE_LIMIT,
        samples_used: picked.len(),
    })
}

/// Fits an [`EnergyTrace`] over `window`.
pub fn fit_polynomial_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    fit_decay_samples(&trace.time_energy(), window)
}
