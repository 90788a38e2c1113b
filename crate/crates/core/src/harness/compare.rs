//! Covariance-reset vs forgetting-factor comparison on one configuration.

use std::fmt::Write as _;

use super::config::RunConfig;
use super::experiment::{run_experiment, TrajectoryLog};
use crate::error::Result;
use crate::estimator::Variant;

pub struct Comparison {
    pub reset: TrajectoryLog,
    pub forgetting: TrajectoryLog,
}

/// Runs the config twice, once per estimator variant. The forgetting run uses
/// `cfg.baseline_lambda`.
pub fn compare_estimators(cfg: &RunConfig) -> Result<Comparison> {
    let reset = run_experiment(&cfg.clone().with_variant(Variant::CovarianceReset))?;
    let forgetting = run_experiment(&cfg.clone().with_variant(Variant::Forgetting {
        lambda: cfg.baseline_lambda,
    }))?;
    Ok(Comparison { reset, forgetting })
}

impl Comparison {
    /// Ratio of the forgetting run's maxima to the reset run's, for
    /// `(‖p̂‖, λ_max[Γ])`.
    pub fn growth_ratios(&self) -> (f64, f64) {
        let (r, f) = (&self.reset.summary, &self.forgetting.summary);
        (f.max_p_hat_norm / r.max_p_hat_norm, f.max_gamma_max / r.max_gamma_max)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<26} {:>6} {:>14} {:>14} {:>14} {:>14} {:>7} {:>6}",
            "variant", "steps", "max|p_hat|", "max lmax[G]", "final|x_err|", "final|p_err|", "resets", "drift"
        );
        for log in [&self.reset, &self.forgetting] {
            let s = &log.summary;
            let _ = writeln!(
                out,
                "{:<26} {:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>7} {:>6}",
                s.variant,
                s.steps,
                s.max_p_hat_norm,
                s.max_gamma_max,
                s.final_x_err,
                s.final_p_err,
                s.reset_count,
                if s.drift_flagged { "yes" } else { "no" }
            );
        }
        out
    }
}
