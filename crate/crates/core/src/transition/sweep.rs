//! ε-sweeps of the transition against the slow divergence integral.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{estimate_transition, TransitionEstimate, TransitionSetup};
use crate::cusp::A3System;
use crate::error::{Error, Result};
use crate::sdi::transition_sdi;

/// CSV header of sweep reports.
pub const CSV_HEADER: &str = "b,eps,rate_num,shift_num,target_I,deviation,wall_time";

/// One row of a sweep; failed rows keep the error message.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub estimate: Option<TransitionEstimate>,
    pub deviation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepReport {
    pub b: f64,
    pub system: String,
    pub a_minus: f64,
    pub a_plus: f64,
    pub target_i: f64,
    /// Sorted by decreasing ε.
    pub rows: Vec<SweepRow>,
    /// Slope of `ln(deviation)` against `ln(ε ln(1/ε))`.
    pub order_eps_log: Option<f64>,
    /// Slope of `ln(deviation)` against `ln ε`.
    pub order_eps: Option<f64>,
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two
/// points or no spread in `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..n {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::Sweep("empty ε list".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Sweep(format!("ε values must be positive, got {e}")));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Sweep("ε list must be strictly descending".into()));
    }
    Ok(())
}

/// Runs [`estimate_transition`] at each ε in parallel. Row failures are
/// recorded and do not stop the sweep.
pub fn sweep_eps(
    system: &A3System,
    b0: f64,
    z0: f64,
    eps_list: &[f64],
    setup: &TransitionSetup,
) -> Result<SweepReport> {
    check_eps_list(eps_list)?;
    setup.validate()?;
    let target_i = transition_sdi(setup.a_minus, setup.a_plus, b0)?;
    let rows: Vec<SweepRow> = eps_list
        .par_iter()
        .map(
            |&eps| match estimate_transition(system, b0, z0, eps, setup) {
                Ok(est) => SweepRow {
                    eps,
                    estimate: Some(est),
                    deviation: None,
                    error: None,
                },
                Err(e) => SweepRow {
                    eps,
                    estimate: None,
                    deviation: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    if rows.iter().all(|r| r.estimate.is_none()) {
        let first = rows[0].error.clone().unwrap_or_default();
        return Err(Error::Sweep(format!(
            "every row failed; first error: {first}"
        )));
    }
    let mut report = SweepReport {
        b: b0,
        system: system.label().to_string(),
        a_minus: setup.a_minus,
        a_plus: setup.a_plus,
        target_i,
        rows,
        order_eps_log: None,
        order_eps: None,
    };
    report.retarget(target_i);
    Ok(report)
}

impl SweepReport {
    /// Recomputes deviations and fits against a new target `I`.
    pub fn retarget(&mut self, target_i: f64) {
        self.target_i = target_i;
        for row in &mut self.rows {
            row.deviation = row.estimate.as_ref().map(|e| (e.rate_num + target_i).abs());
        }
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.deviation.filter(|d| *d > 0.0).map(|d| (r.eps, d.ln())))
            .collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let log_eps: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let log_eps_log: Vec<f64> = pts
            .iter()
            .filter(|p| p.0 < 1.0)
            .map(|p| (p.0 * (1.0 / p.0).ln()).ln())
            .collect();
        self.order_eps = fit_slope(&log_eps, &ys);
        self.order_eps_log = if log_eps_log.len() == ys.len() {
            fit_slope(&log_eps_log, &ys)
        } else {
            None
        };
    }

    pub fn deviations(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.deviation).collect()
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.estimate.is_none()).count()
    }

    /// Deviations of the successful rows strictly decrease with ε.
    pub fn is_monotone(&self) -> bool {
        let d: Vec<f64> = self.rows.iter().filter_map(|r| r.deviation).collect();
        d.windows(2).all(|w| w[1] < w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match (&row.estimate, row.deviation) {
                (Some(e), Some(d)) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        self.b, row.eps, e.rate_num, e.shift_num, self.target_i, d, e.wall_time
                    );
                }
                _ => {
                    let _ = writeln!(out, "{},{},,,{},,", self.b, row.eps, self.target_i);
                }
            }
        }
        out
    }

    /// JSON mirror of the CSV with a caller-supplied `meta` object.
    pub fn to_json(&self, meta: serde_json::Value) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let e = r.estimate.as_ref();
                serde_json::json!({
                    "b": self.b,
                    "eps": r.eps,
                    "rate_num": e.map(|e| e.rate_num),
                    "shift_num": e.map(|e| e.shift_num),
                    "target_I": self.target_i,
                    "deviation": r.deviation,
                    "wall_time": e.map(|e| e.wall_time),
                    "z_exit": e.map(|e| e.z_exit),
                    "base_offset": e.map(|e| e.base_offset),
                    "hit_residuals": e.map(|e| e.hit_residuals.clone()),
                    "error": r.error,
                })
            })
            .collect();
        serde_json::json!({
            "meta": meta,
            "system": self.system,
            "b": self.b,
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "target_I": self.target_i,
            "order_eps_log": self.order_eps_log,
            "order_eps": self.order_eps,
            "monotone": self.is_monotone(),
            "rows": rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.4 * x).collect();
        assert!((fit_slope(&xs, &ys).unwrap() + 0.4).abs() < 1e-14);
        assert_eq!(fit_slope(&[1.0], &[1.0]), None);
        assert_eq!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn eps_list_checks() {
        let sys = A3System::principal();
        let setup = TransitionSetup::default();
        for bad in [&[][..], &[1e-2, 1e-2][..], &[1e-3, 1e-2][..], &[-1e-2][..]] {
            assert!(matches!(
                sweep_eps(&sys, 0.0, 2.0, bad, &setup),
                Err(Error::Sweep(_))
            ));
        }
    }

    #[test]
    fn principal_sweep_is_monotone() {
        let sys = A3System::principal();
        let r = sweep_eps(
            &sys,
            0.0,
            2.0,
            &[1e-2, 5e-3, 2e-3],
            &TransitionSetup::default(),
        )
        .unwrap();
        assert!((r.target_i + 3.6).abs() < 1e-12);
        assert!(r.is_monotone() && r.failed_rows() == 0);
        let csv = r.to_csv();
        assert!(csv.starts_with(CSV_HEADER) && csv.lines().count() == 4);
        let order = r.order_eps.unwrap();
        assert!(order > 0.8 && order < 1.2, "{order}");
    }

    #[test]
    fn failed_rows_leave_fields_empty() {
        let sys = A3System::principal();
        let mut setup = TransitionSetup::default();
        setup.opts.max_steps = 600;
        let r = sweep_eps(&sys, 0.0, 2.0, &[1e-1, 1e-3], &setup).unwrap();
        assert_eq!(r.failed_rows(), 1);
        assert!(r.to_csv().lines().nth(2).unwrap().ends_with(",,"));
    }
}
