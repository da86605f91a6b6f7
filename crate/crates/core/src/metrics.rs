//! Settling, steady-state and Lyapunov diagnostics computed from a trace.

use crate::error::{Error, Result};
use crate::sim::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    /// Relative voltage band, e.g. 0.02 for +/-2 % of Vref.
    pub band: f64,
    /// Absolute threshold on the per-unit sharing error.
    pub share_threshold: f64,
    /// Increase of V1 or V2 between samples tolerated as numerical noise.
    pub lyap_tol: f64,
    /// Sample pairs before this time are not checked for Lyapunov decrease.
    pub lyap_start: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            band: 0.02,
            share_threshold: 1e-3,
            lyap_tol: 1e-9,
            lyap_start: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Time after which `|Vo - Vref| / Vref < band` holds to the end; `None` if it never does.
    pub settle_time_v: Option<f64>,
    /// Same for `|e2| < share_threshold`.
    pub settle_time_share: Option<f64>,
    /// Mean `|Vref - Vo|` over the final 10 % of the run (V).
    pub ss_voltage_error: f64,
    /// Mean `|e2|` over the final 10 % of the run.
    pub ss_sharing_error: f64,
    /// Time from the last load event until both bands hold for good.
    pub recovery_time: Option<f64>,
    pub lyap_violation_fraction: f64,
    /// Number of sample pairs the Lyapunov fraction was computed over.
    pub lyap_pairs: usize,
    /// Longest contiguous stretch with either duty saturated (s).
    pub max_duty_saturation_time: f64,
}

/// First time from which `inside` holds for every remaining sample.
fn settle_time(trace: &[TraceRecord], inside: impl Fn(&TraceRecord) -> bool) -> Option<f64> {
    match trace.iter().rposition(|r| !inside(r)) {
        None => Some(trace[0].t),
        Some(i) => trace.get(i + 1).map(|r| r.t),
    }
}

fn check_sorted(trace: &[TraceRecord]) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if let Some(i) = trace.windows(2).position(|w| !(w[1].t >= w[0].t)) {
        return Err(Error::UnsortedTrace { index: i + 1 });
    }
    Ok(())
}

pub fn compute_metrics(trace: &[TraceRecord], vref: f64, cfg: &MetricsConfig) -> Result<RunMetrics> {
    check_sorted(trace)?;
    let in_band = |r: &TraceRecord| ((r.vo - vref) / vref).abs() < cfg.band;
    let shared = |r: &TraceRecord| r.e2.abs() < cfg.share_threshold;

    let t0 = trace[0].t;
    let t_end = trace[trace.len() - 1].t;
    let window_start = t_end - 0.1 * (t_end - t0);
    let tail: Vec<&TraceRecord> = trace.iter().filter(|r| r.t >= window_start).collect();
    let mean = |f: fn(&TraceRecord) -> f64| tail.iter().map(|r| f(r)).sum::<f64>() / tail.len() as f64;

    let recovery_time = trace
        .windows(2)
        .rposition(|w| w[0].r_active != w[1].r_active)
        .and_then(|i| {
            let after = &trace[i + 1..];
            let t_event = after[0].t;
            let v = settle_time(after, in_band)?;
            let s = settle_time(after, shared)?;
            Some(v.max(s) - t_event)
        });

    let (violations, pairs) = trace
        .windows(2)
        .filter(|w| {
            w[0].t >= cfg.lyap_start
                && w[1].t > w[0].t
                && w[0].r_active == w[1].r_active
                && !w[0].saturated()
                && !w[1].saturated()
        })
        .fold((0usize, 0usize), |(v, n), w| {
            let up = w[1].v1_lyap - w[0].v1_lyap > cfg.lyap_tol
                || w[1].v2_lyap - w[0].v2_lyap > cfg.lyap_tol;
            (v + up as usize, n + 1)
        });

    let mut max_sat = 0.0f64;
    let mut sat_since: Option<f64> = None;
    for r in trace {
        match (r.saturated(), sat_since) {
            (true, None) => sat_since = Some(r.t),
            (false, Some(s)) => {
                max_sat = max_sat.max(r.t - s);
                sat_since = None;
            }
            _ => {}
        }
    }
    if let Some(s) = sat_since {
        max_sat = max_sat.max(t_end - s);
    }

    Ok(RunMetrics {
        settle_time_v: settle_time(trace, in_band),
        settle_time_share: settle_time(trace, shared),
        ss_voltage_error: mean(|r| r.e.abs()),
        ss_sharing_error: mean(|r| r.e2.abs()),
        recovery_time,
        lyap_violation_fraction: if pairs == 0 {
            0.0
        } else {
            violations as f64 / pairs as f64
        },
        lyap_pairs: pairs,
        max_duty_saturation_time: max_sat,
    })
}
