//! Input generators and the regressor excitation metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ConfigIssue;
use crate::linalg;

/// Deterministic input sequences. Frequencies are in radians per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputProfile {
    /// `u_t = values` for all `t`.
    Constant { values: Vec<f64> },
    /// `u_t^(i) = amplitudes[i] * sin(frequencies[i] t + phases[i])`.
    SingleSine {
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        #[serde(default)]
        phases: Vec<f64>,
    },
    /// `u_t^(i) = amplitudes[i] * Σ_k sin(frequencies[i][k] t + phases[i][k])`.
    Multisine {
        amplitudes: Vec<f64>,
        frequencies: Vec<Vec<f64>>,
        #[serde(default)]
        phases: Vec<Vec<f64>>,
    },
    /// Row `t mod len` of the table, one column per input channel.
    CustomTable { rows: Vec<Vec<f64>> },
}

impl InputProfile {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        InputProfile::SingleSine {
            amplitudes: vec![amplitude],
            frequencies: vec![frequency],
            phases: vec![0.0],
        }
    }

    /// Number of channels the profile describes.
    pub fn channels(&self) -> usize {
        match self {
            InputProfile::Constant { values } => values.len(),
            InputProfile::SingleSine { amplitudes, .. } | InputProfile::Multisine { amplitudes, .. } => amplitudes.len(),
            InputProfile::CustomTable { rows } => rows.first().map_or(0, Vec::len),
        }
    }

    /// Structural checks; `m` is the plant input count.
    pub fn validate(&self, m: usize, path: &str) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut push = |p: String, msg: String| issues.push(ConfigIssue { path: p, message: msg });
        if self.channels() != m {
            push(
                path.to_string(),
                format!("profile has {} channels, plant has {m} inputs", self.channels()),
            );
        }
        let in_band = |w: f64| w > 0.0 && w < std::f64::consts::PI;
        match self {
            InputProfile::Constant { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    push(format!("{path}.values"), "non-finite value".into());
                }
            }
            InputProfile::SingleSine {
                amplitudes,
                frequencies,
                phases,
            } => {
                if frequencies.len() != amplitudes.len() {
                    push(
                        format!("{path}.frequencies"),
                        format!("expected {} entries, found {}", amplitudes.len(), frequencies.len()),
                    );
                }
                if !phases.is_empty() && phases.len() != amplitudes.len() {
                    push(
                        format!("{path}.phases"),
                        format!("expected {} entries, found {}", amplitudes.len(), phases.len()),
                    );
                }
                for (i, &w) in frequencies.iter().enumerate() {
                    if !in_band(w) {
                        push(format!("{path}.frequencies[{i}]"), format!("{w} outside (0, pi)"));
                    }
                }
            }
            InputProfile::Multisine {
                amplitudes,
                frequencies,
                phases,
            } => {
                if frequencies.len() != amplitudes.len() {
                    push(
                        format!("{path}.frequencies"),
                        format!("expected {} channels, found {}", amplitudes.len(), frequencies.len()),
                    );
                }
                if !phases.is_empty() && phases.len() != frequencies.len() {
                    push(
                        format!("{path}.phases"),
                        format!("expected {} channels, found {}", frequencies.len(), phases.len()),
                    );
                }
                for (i, ws) in frequencies.iter().enumerate() {
                    if ws.is_empty() {
                        push(format!("{path}.frequencies[{i}]"), "no frequencies".into());
                    }
                    for (k, &w) in ws.iter().enumerate() {
                        if !in_band(w) {
                            push(format!("{path}.frequencies[{i}][{k}]"), format!("{w} outside (0, pi)"));
                        }
                        if ws[..k].contains(&w) {
                            push(format!("{path}.frequencies[{i}][{k}]"), format!("duplicate frequency {w}"));
                        }
                    }
                    if let Some(ph) = phases.get(i) {
                        if !ph.is_empty() && ph.len() != ws.len() {
                            push(
                                format!("{path}.phases[{i}]"),
                                format!("expected {} entries, found {}", ws.len(), ph.len()),
                            );
                        }
                    }
                }
            }
            InputProfile::CustomTable { rows } => {
                if rows.is_empty() {
                    push(format!("{path}.rows"), "table is empty".into());
                }
                let width = rows.first().map_or(0, Vec::len);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != width {
                        push(
                            format!("{path}.rows[{i}]"),
                            format!("expected {width} columns, found {}", row.len()),
                        );
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        push(format!("{path}.rows[{i}]"), "non-finite value".into());
                    }
                }
            }
        }
        issues
    }

    /// Input vector at step `t`.
    pub fn generate(&self, t: usize) -> DVector<f64> {
        let tf = t as f64;
        match self {
            InputProfile::Constant { values } => DVector::from_column_slice(values),
            InputProfile::SingleSine {
                amplitudes,
                frequencies,
                phases,
            } => DVector::from_iterator(
                amplitudes.len(),
                amplitudes.iter().enumerate().map(|(i, a)| {
                    let phase = phases.get(i).copied().unwrap_or(0.0);
                    a * (frequencies[i] * tf + phase).sin()
                }),
            ),
            InputProfile::Multisine {
                amplitudes,
                frequencies,
                phases,
            } => DVector::from_iterator(
                amplitudes.len(),
                amplitudes.iter().enumerate().map(|(i, a)| {
                    let ph = phases.get(i);
                    let sum: f64 = frequencies[i]
                        .iter()
                        .enumerate()
                        .map(|(k, w)| (w * tf + ph.and_then(|p| p.get(k)).copied().unwrap_or(0.0)).sin())
                        .sum();
                    a * sum
                }),
            ),
            InputProfile::CustomTable { rows } => DVector::from_column_slice(&rows[t % rows.len()]),
        }
    }

    /// Distinct frequencies in the poorest channel, or 0 for constant and
    /// tabulated inputs.
    pub fn min_distinct_frequencies(&self) -> usize {
        match self {
            InputProfile::SingleSine { .. } => 1,
            InputProfile::Multisine { frequencies, .. } => frequencies
                .iter()
                .map(|ws| {
                    let mut v = ws.clone();
                    v.sort_by(f64::total_cmp);
                    v.dedup();
                    v.len()
                })
                .min()
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Heuristic richness rule: at least `ceil(d / 2)` distinct frequencies
    /// per channel.
    pub fn is_heuristically_rich(&self, d: usize) -> bool {
        self.min_distinct_frequencies() >= d.div_ceil(2)
    }
}

/// Running `Σ φ_i φ_i^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    g: DMatrix<f64>,
    t: usize,
}

impl GramAccumulator {
    pub fn new(d: usize) -> Self {
        Self {
            g: DMatrix::zeros(d, d),
            t: 0,
        }
    }

    pub fn add(&mut self, phi: &DMatrix<f64>) {
        self.g += phi * phi.transpose();
        self.t += 1;
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `λ_min` of the accumulated Gram matrix.
    pub fn pe_metric(&self) -> f64 {
        let mut g = self.g.clone();
        linalg::symmetrize(&mut g);
        linalg::sym_extreme_eigenvalues(&g).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationLabel {
    PeConsistent,
    NonPe,
}

impl std::fmt::Display for ExcitationLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExcitationLabel::PeConsistent => "PE-consistent",
            ExcitationLabel::NonPe => "non-PE",
        })
    }
}

/// Least-squares line through the last half of a `λ_min` trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationTrend {
    pub slope: f64,
    /// Growth predicted by the fit across the fitted window, relative to the
    /// fitted value at its start.
    pub relative_growth: f64,
    pub label: ExcitationLabel,
}

/// Relative growth over the last half above which a run counts as
/// PE-consistent. A linearly growing metric doubles over that window.
pub const PE_GROWTH_THRESHOLD: f64 = 0.05;

/// Fits `metric ~ a + b t` over the second half of `series` (pairs of step
/// index and metric). Returns `None` with fewer than four points.
pub fn excitation_trend(series: &[(usize, f64)]) -> Option<ExcitationTrend> {
    if series.len() < 4 {
        return None;
    }
    let tail = &series[series.len() / 2..];
    let n = tail.len() as f64;
    let mean_t = tail.iter().map(|(t, _)| *t as f64).sum::<f64>() / n;
    let mean_v = tail.iter().map(|(_, v)| *v).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in tail {
        let dt = t as f64 - mean_t;
        sxy += dt * (v - mean_v);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let t0 = tail[0].0 as f64;
    let t1 = tail[tail.len() - 1].0 as f64;
    let start = mean_v + slope * (t0 - mean_t);
    let rise = slope * (t1 - t0);
    let relative_growth = if start.abs() > f64::MIN_POSITIVE {
        rise / start.abs()
    } else if rise > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let label = if slope > 0.0 && relative_growth > PE_GROWTH_THRESHOLD {
        ExcitationLabel::PeConsistent
    } else {
        ExcitationLabel::NonPe
    };
    Some(ExcitationTrend {
        slope,
        relative_growth,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_starts_at_zero() {
        assert_eq!(InputProfile::sine(1.0, 0.2).generate(0)[0], 0.0);
        assert!((InputProfile::sine(1.0, 0.2).generate(5)[0] - 1.0f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn constant_profile() {
        let p = InputProfile::Constant { values: vec![2.5, -1.0] };
        for t in [0, 1, 17, 10_000] {
            assert_eq!(p.generate(t).as_slice(), &[2.5, -1.0]);
        }
    }

    #[test]
    fn multisine_spot_check() {
        let p = InputProfile::Multisine {
            amplitudes: vec![2.0],
            frequencies: vec![vec![0.1, 0.5, 1.3]],
            phases: vec![vec![0.0, 0.25, -1.0]],
        };
        let t = 7.0_f64;
        let want = 2.0 * ((0.1 * t).sin() + (0.5 * t + 0.25).sin() + (1.3 * t - 1.0).sin());
        assert!((p.generate(7)[0] - want).abs() < 1e-14);
        assert_eq!(p.min_distinct_frequencies(), 3);
        assert!(p.is_heuristically_rich(6));
        assert!(!p.is_heuristically_rich(7));
    }

    #[test]
    fn table_wraps() {
        let p = InputProfile::CustomTable {
            rows: vec![vec![1.0], vec![2.0], vec![3.0]],
        };
        assert_eq!(p.generate(4)[0], 2.0);
    }

    #[test]
    fn validation_catches_bad_profiles() {
        let p = InputProfile::Multisine {
            amplitudes: vec![1.0],
            frequencies: vec![vec![0.3, 0.3, 4.0]],
            phases: vec![],
        };
        let issues = p.validate(2, "input");
        assert_eq!(issues.len(), 3, "{issues:?}");
        assert!(issues.iter().any(|i| i.path == "input.frequencies[0][1]"));
        assert!(InputProfile::sine(1.0, 0.2).validate(1, "input").is_empty());
    }

    #[test]
    fn zero_regressor_metric() {
        let mut acc = GramAccumulator::new(3);
        for _ in 0..10 {
            acc.add(&DMatrix::zeros(3, 1));
            assert_eq!(acc.pe_metric(), 0.0);
        }
    }

    #[test]
    fn alternating_unit_regressors() {
        let mut acc = GramAccumulator::new(2);
        let e = [
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        ];
        for k in 1..=20 {
            acc.add(&e[0]);
            acc.add(&e[1]);
            assert!((acc.pe_metric() - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn trend_labels() {
        let growing: Vec<_> = (1..=100).map(|t| (t, 0.5 * t as f64)).collect();
        assert_eq!(excitation_trend(&growing).unwrap().label, ExcitationLabel::PeConsistent);
        let flat: Vec<_> = (1..=100).map(|t| (t, 3.0 - 1.0 / t as f64)).collect();
        assert_eq!(excitation_trend(&flat).unwrap().label, ExcitationLabel::NonPe);
        assert!(excitation_trend(&growing[..3]).is_none());
    }
}
