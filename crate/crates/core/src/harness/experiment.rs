//! Closed simulation loop: plant, input, observer and truth-aware
//! diagnostics, producing a [`TrajectoryLog`].

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, RunConfig};
use crate::error::{Error, Result};
use crate::estimator::Variant;
use crate::excitation::{excitation_trend, ExcitationTrend, GramAccumulator};
use crate::observer::ObserverState;

/// Slack on the per-step and cumulative error bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// Components of `p` smaller than this are logged as raw errors instead of
/// ratios.
pub const NORMALIZE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Index of the step that could not be completed.
    pub at_step: usize,
    pub reason: String,
}

/// One logged step. Every quantity is at index `t` except `u`, which is the
/// input applied at `t` (it only reaches the filters on the next step).
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: usize,
    pub u: DVector<f64>,
    pub y: DVector<f64>,
    pub y_hat: DVector<f64>,
    pub p_hat: DVector<f64>,
    /// `p̂_i / p_i`, or `p̂_i - p_i` where `|p_i|` is below the floor.
    pub normalized: Vec<f64>,
    pub p_err: f64,
    pub x_err: f64,
    pub y_err: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub reset: bool,
    pub pe_metric: f64,
    /// `‖Γ_{t-1} φ_t W_t C F^t x̃_0‖`.
    pub step_term: f64,
    /// `‖p̃_0‖` plus the running sum of `step_term`.
    pub cumulative_bound: f64,
    pub step_bound_ok: bool,
    pub cumulative_bound_ok: bool,
    /// Relative residual of `x̃_t = S_t p̃_t + F^t x̃_0`.
    pub state_residual: f64,
    /// Relative residual of `ỹ_t = φ_t^T p̃_t + C F^t x̃_0`.
    pub output_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub variant: String,
    pub horizon: usize,
    pub steps: usize,
    pub reset_count: usize,
    pub truncation: Option<Truncation>,
    pub initial_p_err: f64,
    pub initial_x_err: f64,
    pub final_p_err: f64,
    pub final_x_err: f64,
    pub max_p_hat_norm: f64,
    pub max_gamma_max: f64,
    pub min_gamma_min: f64,
    pub final_pe_metric: f64,
    pub pe_trend: Option<ExcitationTrendSummary>,
    pub step_bound_violations: usize,
    /// Largest `‖p̃_{t}‖ - ‖p̃_{t-1}‖ - step_term` seen.
    pub max_step_bound_excess: f64,
    pub cumulative_bound_violations: usize,
    pub max_state_residual: f64,
    pub max_output_residual: f64,
    pub all_finite: bool,
    pub drift_flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationTrendSummary {
    pub slope: f64,
    pub relative_growth: f64,
    pub label: crate::excitation::ExcitationLabel,
}

impl From<ExcitationTrend> for ExcitationTrendSummary {
    fn from(t: ExcitationTrend) -> Self {
        Self {
            slope: t.slope,
            relative_growth: t.relative_growth,
            label: t.label,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub q: usize,
    pub m: usize,
    pub d: usize,
    /// Per-component flag: `true` where the normalized column holds a raw
    /// error because the true component is (near) zero.
    pub raw_error_columns: Vec<bool>,
    pub normalize: bool,
    pub rows: Vec<LogRow>,
    pub summary: RunSummary,
}

fn rel_residual(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// Validates `cfg` and runs it.
pub fn run_experiment(cfg: &RunConfig) -> Result<TrajectoryLog> {
    let exp = cfg.validate()?;
    run_validated(&exp)
}

/// Runs an already-validated experiment. Deterministic in its inputs.
pub fn run_validated(exp: &Experiment) -> Result<TrajectoryLog> {
    let dims = exp.dims();
    let (q, m, d) = (dims.q(), dims.m(), dims.d());
    let plant = &exp.plant;
    let c = plant.c().clone();
    let p = exp.truth.p.clone();
    let variant = exp.estimator.variant();

    let mut obs =
        ObserverState::new(dims, &exp.f_vec, c.clone(), exp.estimator.clone(), exp.x_hat0.clone())?.with_overflow_cap(exp.overflow_cap);
    let f = obs.f().clone();

    let raw_error_columns: Vec<bool> = p.iter().map(|v| v.abs() < NORMALIZE_FLOOR).collect();
    let mut gram = GramAccumulator::new(d);
    let mut pe_series = Vec::with_capacity(exp.horizon);
    let mut rows = Vec::with_capacity(exp.horizon);

    let initial_p_err = (&p - exp.estimator.p_hat0()).norm();
    let initial_x_err = (&exp.x0 - &exp.x_hat0).norm();
    // F^t x̃_0, carried alongside the observer's own ζ
    let mut xi = &exp.x0 - &exp.x_hat0;
    let mut prev_p_err = initial_p_err;
    let mut cumulative_bound = initial_p_err;

    let mut x = exp.x0.clone();
    let mut y = &c * &x;
    let mut u = exp.input.generate(0);
    let mut truncation = None;

    for t in 0..exp.horizon {
        let (x_next, _) = plant.simulate_step(&x, &u)?;
        let x_norm = x_next.norm();
        if !x_norm.is_finite() || x_norm > exp.overflow_cap {
            truncation = Some(Truncation {
                at_step: t + 1,
                reason: format!("plant state norm {x_norm:e} exceeds cap {:e}", exp.overflow_cap),
            });
            break;
        }
        let y_next = &c * &x_next;

        let rec = match obs.step(&y, &u, &y_next) {
            Ok(rec) => rec,
            Err(e @ (Error::Overflow { .. } | Error::Solve(_) | Error::NonFinite(_))) => {
                truncation = Some(Truncation {
                    at_step: t + 1,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };

        xi = &f * xi;
        let p_err_vec = &p - &rec.p_hat;
        let p_err = p_err_vec.norm();
        let x_err_vec = &x_next - &rec.x_hat;
        let y_err_vec = &y_next - &rec.y_hat;

        let step_term = (&rec.gain * (&c * &xi)).norm();
        cumulative_bound += step_term;
        let step_bound_ok = p_err <= prev_p_err + step_term + BOUND_SLACK;
        let cumulative_bound_ok = p_err <= cumulative_bound + BOUND_SLACK;

        let p_scale = p.norm().max(rec.p_hat.norm());
        let state_residual = rel_residual((&x_err_vec - &rec.s * &p_err_vec - &xi).norm(), x_norm.max(rec.s.norm() * p_scale));
        let output_residual = rel_residual(
            (&y_err_vec - rec.phi.transpose() * &p_err_vec - &c * &xi).norm(),
            y_next.norm().max(rec.phi.norm() * p_scale),
        );

        gram.add(&rec.phi);
        let pe_metric = gram.pe_metric();
        pe_series.push((rec.t, pe_metric));

        let normalized = if exp.normalize {
            rec.p_hat
                .iter()
                .zip(p.iter())
                .zip(&raw_error_columns)
                .map(|((ph, pt), raw)| if *raw { ph - pt } else { ph / pt })
                .collect()
        } else {
            Vec::new()
        };

        let u_next = exp.input.generate(t + 1);
        rows.push(LogRow {
            t: rec.t,
            u: u_next.clone(),
            y: y_next.clone(),
            y_hat: rec.y_hat.clone(),
            p_hat: rec.p_hat.clone(),
            normalized,
            p_err,
            x_err: x_err_vec.norm(),
            y_err: y_err_vec.norm(),
            gamma_min: rec.gamma_min,
            gamma_max: rec.gamma_max,
            reset: rec.reset,
            pe_metric,
            step_term,
            cumulative_bound,
            step_bound_ok,
            cumulative_bound_ok,
            state_residual,
            output_residual,
        });

        prev_p_err = p_err;
        x = x_next;
        y = y_next;
        u = u_next;
    }

    let summary = summarize(exp, variant, &obs, &rows, &pe_series, truncation, initial_p_err, initial_x_err);
    Ok(TrajectoryLog {
        q,
        m,
        d,
        raw_error_columns,
        normalize: exp.normalize,
        rows,
        summary,
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    exp: &Experiment,
    variant: Variant,
    obs: &ObserverState,
    rows: &[LogRow],
    pe_series: &[(usize, f64)],
    truncation: Option<Truncation>,
    initial_p_err: f64,
    initial_x_err: f64,
) -> RunSummary {
    let fold_max = |f: &dyn Fn(&LogRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let max_p_hat_norm = fold_max(&|r| r.p_hat.norm()).max(exp.estimator.p_hat0().norm());
    let max_gamma_max = fold_max(&|r| r.gamma_max).max(exp.estimator.k0());
    let min_gamma_min = rows.iter().map(|r| r.gamma_min).fold(exp.estimator.k0(), f64::min);
    let max_step_bound_excess = {
        let mut prev = initial_p_err;
        let mut worst = f64::NEG_INFINITY;
        for r in rows {
            worst = worst.max(r.p_err - prev - r.step_term);
            prev = r.p_err;
        }
        worst
    };
    let all_finite = rows.iter().all(|r| {
        r.u.iter()
            .chain(r.y.iter())
            .chain(r.y_hat.iter())
            .chain(r.p_hat.iter())
            .chain(r.normalized.iter())
            .chain(
                [
                    r.p_err,
                    r.x_err,
                    r.y_err,
                    r.gamma_min,
                    r.gamma_max,
                    r.pe_metric,
                    r.step_term,
                    r.cumulative_bound,
                ]
                .iter(),
            )
            .all(|v| v.is_finite())
    });
    let drift = exp.drift;
    let drift_flagged = truncation.is_some()
        || max_gamma_max > drift.covariance_factor * exp.estimator.k0()
        || max_p_hat_norm > drift.estimate_factor * (1.0 + exp.estimator.p_hat0().norm());

    RunSummary {
        name: exp.name.clone(),
        variant: variant.to_string(),
        horizon: exp.horizon,
        steps: rows.len(),
        reset_count: obs.estimator().reset_count(),
        truncation,
        initial_p_err,
        initial_x_err,
        final_p_err: rows.last().map_or(initial_p_err, |r| r.p_err),
        final_x_err: rows.last().map_or(initial_x_err, |r| r.x_err),
        max_p_hat_norm,
        max_gamma_max,
        min_gamma_min,
        final_pe_metric: rows.last().map_or(0.0, |r| r.pe_metric),
        pe_trend: excitation_trend(pe_series).map(Into::into),
        step_bound_violations: rows.iter().filter(|r| !r.step_bound_ok).count(),
        max_step_bound_excess,
        cumulative_bound_violations: rows.iter().filter(|r| !r.cumulative_bound_ok).count(),
        max_state_residual: fold_max(&|r| r.state_residual).max(0.0),
        max_output_residual: fold_max(&|r| r.output_residual).max(0.0),
        all_finite,
        drift_flagged,
    }
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits
    format!("{v:.16e}")
}

impl TrajectoryLog {
    /// Column names, in output order.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((0..self.m).map(|i| format!("u_{i}")));
        h.extend((0..self.q).map(|i| format!("y_{i}")));
        h.extend((0..self.q).map(|i| format!("y_hat_{i}")));
        h.extend((0..self.d).map(|i| format!("p_hat_{i}")));
        if self.normalize {
            h.extend(self.raw_error_columns.iter().enumerate().map(
                |(i, raw)| {
                    if *raw {
                        format!("p_raw_err_{i}")
                    } else {
                        format!("p_norm_{i}")
                    }
                },
            ));
        }
        h.extend(
            [
                "p_err_norm",
                "x_err_norm",
                "y_err_norm",
                "gamma_min",
                "gamma_max",
                "reset",
                "pe_metric",
                "step_term",
                "cumulative_bound",
                "step_bound_ok",
                "cumulative_bound_ok",
                "state_residual",
                "output_residual",
            ]
            .map(String::from),
        );
        h
    }

    fn record(row: &LogRow) -> Vec<String> {
        let mut rec = vec![row.t.to_string()];
        let floats = row
            .u
            .iter()
            .chain(row.y.iter())
            .chain(row.y_hat.iter())
            .chain(row.p_hat.iter())
            .chain(row.normalized.iter());
        rec.extend(floats.map(|v| fmt_f64(*v)));
        rec.extend([row.p_err, row.x_err, row.y_err, row.gamma_min, row.gamma_max].map(fmt_f64));
        rec.push(u8::from(row.reset).to_string());
        rec.extend([row.pe_metric, row.step_term, row.cumulative_bound].map(fmt_f64));
        rec.push(u8::from(row.step_bound_ok).to_string());
        rec.push(u8::from(row.cumulative_bound_ok).to_string());
        rec.extend([row.state_residual, row.output_residual].map(fmt_f64));
        rec
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(Self::record(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Plain-text `key: value` report.
    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "run: {}", s.name);
        let _ = writeln!(out, "variant: {}", s.variant);
        let _ = writeln!(out, "steps: {} / {}", s.steps, s.horizon);
        match &s.truncation {
            Some(tr) => {
                let _ = writeln!(out, "truncated: step {} ({})", tr.at_step, tr.reason);
            }
            None => {
                let _ = writeln!(out, "truncated: no");
            }
        }
        let _ = writeln!(out, "reset_count: {}", s.reset_count);
        let _ = writeln!(out, "param_error: {:.6e} -> {:.6e}", s.initial_p_err, s.final_p_err);
        let _ = writeln!(out, "state_error: {:.6e} -> {:.6e}", s.initial_x_err, s.final_x_err);
        let _ = writeln!(out, "max_p_hat_norm: {:.6e}", s.max_p_hat_norm);
        let _ = writeln!(out, "covariance_range: [{:.6e}, {:.6e}]", s.min_gamma_min, s.max_gamma_max);
        let _ = writeln!(out, "pe_metric_final: {:.6e}", s.final_pe_metric);
        if let Some(tr) = s.pe_trend {
            let _ = writeln!(
                out,
                "pe_trend: {} (slope {:.3e}, growth {:.3})",
                tr.label, tr.slope, tr.relative_growth
            );
        }
        let _ = writeln!(
            out,
            "step_bound_violations: {} (max excess {:.3e})",
            s.step_bound_violations, s.max_step_bound_excess
        );
        let _ = writeln!(out, "cumulative_bound_violations: {}", s.cumulative_bound_violations);
        let _ = writeln!(
            out,
            "max_identity_residuals: state {:.3e}, output {:.3e}",
            s.max_state_residual, s.max_output_residual
        );
        let _ = writeln!(out, "all_finite: {}", s.all_finite);
        let _ = writeln!(out, "drift_flagged: {}", s.drift_flagged);
        out
    }

    /// Writes `<stem>.csv` and `<stem>.summary.txt` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let summary_path = dir.join(format!("{stem}.summary.txt"));
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
        std::fs::write(&summary_path, self.summary_text())?;
        Ok((csv_path, summary_path))
    }

    /// Largest `|p̂_i / p_i - 1|` over ratio columns at row `idx`.
    pub fn max_normalized_deviation(&self, idx: usize) -> Option<f64> {
        let row = self.rows.get(idx)?;
        if row.normalized.is_empty() {
            return None;
        }
        Some(
            row.normalized
                .iter()
                .zip(&self.raw_error_columns)
                .map(|(v, raw)| if *raw { v.abs() } else { (v - 1.0).abs() })
                .fold(0.0, f64::max),
        )
    }

    /// Covariance extremes over the run, including the initial `k0 I`.
    pub fn gamma_range(&self) -> (f64, f64) {
        (self.summary.min_gamma_min, self.summary.max_gamma_max)
    }
}

/// Post-run audit: rebuilds the filters from the logged `u`, `y` columns and
/// checks `y_t - ŷ_t = φ_t^T (p - p̂_t) + C F^t x̃_0` on every row. Returns the
/// worst relative residual.
pub fn audit_log(exp: &Experiment, log: &TrajectoryLog) -> Result<f64> {
    let dims = exp.dims();
    let c = exp.plant.c();
    let f = crate::filter_bank::build_f(&exp.f_vec, dims.q());
    let mut bank = crate::filter_bank::FilterBankState::new(f.clone(), dims)?;
    let mut xi = &exp.x0 - &exp.x_hat0;
    let mut y = c * &exp.x0;
    let mut u = exp.input.generate(0);
    let mut worst: f64 = 0.0;
    for row in &log.rows {
        bank.advance(&y, &u)?;
        xi = &f * xi;
        let snap = bank.snapshot(c);
        let p_err = &exp.truth.p - &row.p_hat;
        let lhs = &row.y - &row.y_hat;
        let rhs = snap.phi.transpose() * &p_err + c * &xi;
        let scale = row.y.norm().max(snap.phi.norm() * exp.truth.p.norm().max(row.p_hat.norm()));
        worst = worst.max(rel_residual((lhs - rhs).norm(), scale));
        y = row.y.clone();
        u = row.u.clone();
    }
    Ok(worst)
}
