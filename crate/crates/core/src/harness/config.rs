//! JSON run configuration and its validation into ready-to-run objects.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::estimator::{EstimatorConfig, Variant};
use crate::excitation::InputProfile;
use crate::filter_bank::build_f;
use crate::linalg::{self, matrix_from_rows};
use crate::lti::{self, canonical_coefficients, Dimensions, ParameterVector, SystemRealization, TransferFunctionSpec};
use crate::observer::DEFAULT_OVERFLOW_CAP;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantConfig {
    /// Denominator `a_1 ... a_r` of `s^r + a_1 s^{r-1} + ... + a_r` and the
    /// numerator matrices `N_1 ... N_r`, each given row-major.
    TransferFunction {
        a_coeffs: Vec<f64>,
        numerators: Vec<Vec<Vec<f64>>>,
    },
    /// Explicit observable-canonical `A` and `B`, row-major.
    Canonical { q: usize, a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

/// Either `a_vec` directly or a full canonical matrix to read it from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientsOrMatrix {
    Coefficients(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSection {
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    /// Output weight, row-major; identity when omitted.
    #[serde(default)]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub variant: Variant,
}

fn default_k0() -> f64 {
    EstimatorConfig::DEFAULT_K0
}

fn default_k_min() -> f64 {
    EstimatorConfig::DEFAULT_K_MIN
}

fn default_cap() -> f64 {
    DEFAULT_OVERFLOW_CAP
}

fn default_true() -> bool {
    true
}

fn default_baseline_lambda() -> f64 {
    0.5
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            k0: default_k0(),
            k_min: default_k_min(),
            r: None,
            variant: Variant::CovarianceReset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverSection {
    pub f_vec: Vec<f64>,
    pub x_hat0: Vec<f64>,
    /// Initial `a_vec` estimate, or the initial canonical `Â_0`.
    pub a_hat0: CoefficientsOrMatrix,
    /// Initial `B̂_0`, row-major n x m.
    pub b_hat0: Vec<Vec<f64>>,
    #[serde(default)]
    pub estimator: EstimatorSection,
}

/// Thresholds for the drift/windup diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftThresholds {
    /// Flag when `λ_max[Γ]` exceeds this multiple of `k0`.
    pub covariance_factor: f64,
    /// Flag when `‖p̂‖` exceeds this multiple of `1 + ‖p̂_0‖`.
    pub estimate_factor: f64,
}

impl Default for DriftThresholds {
    fn default() -> Self {
        Self {
            covariance_factor: 1e3,
            estimate_factor: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// File stem; the config name when omitted.
    #[serde(default)]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub plant: PlantConfig,
    pub x0: Vec<f64>,
    pub observer: ObserverSection,
    pub input: InputProfile,
    pub horizon: usize,
    #[serde(default = "default_cap")]
    pub overflow_cap: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Forgetting factor used for the baseline in comparisons.
    #[serde(default = "default_baseline_lambda")]
    pub baseline_lambda: f64,
    /// Reject the config unless the plant is Schur stable.
    #[serde(default)]
    pub require_stable_plant: bool,
    #[serde(default)]
    pub drift: DriftThresholds,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

/// A validated configuration with every matrix built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub plant: SystemRealization,
    pub x0: DVector<f64>,
    pub f_vec: Vec<f64>,
    pub x_hat0: DVector<f64>,
    pub estimator: EstimatorConfig,
    pub input: InputProfile,
    pub horizon: usize,
    pub overflow_cap: f64,
    pub normalize: bool,
    pub drift: DriftThresholds,
    /// True parameter vector of the simulated plant.
    pub truth: ParameterVector,
}

impl Experiment {
    pub fn dims(&self) -> Dimensions {
        self.plant.dims()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.observer.estimator.variant = variant;
        self
    }

    /// Checks every field and builds the run objects. All problems found are
    /// reported together, each with its field path.
    pub fn validate(&self) -> Result<Experiment> {
        let mut issues = Vec::new();

        if self.horizon == 0 {
            push(&mut issues, "horizon", "must be at least 1".into());
        }
        if !(self.overflow_cap.is_finite() && self.overflow_cap > 0.0) {
            push(
                &mut issues,
                "overflow_cap",
                format!("must be positive and finite, got {}", self.overflow_cap),
            );
        }
        if !(self.baseline_lambda > 0.0 && self.baseline_lambda <= 1.0) {
            push(
                &mut issues,
                "baseline_lambda",
                format!("must lie in (0, 1], got {}", self.baseline_lambda),
            );
        }

        let plant = match build_plant(&self.plant) {
            Ok(p) => Some(p),
            Err(msg) => {
                push(&mut issues, "plant", msg);
                None
            }
        };

        let Some(plant) = plant else {
            return Err(Error::Config(issues));
        };
        let dims = plant.dims();
        let (n, m, q, r) = (dims.n(), dims.m(), dims.q(), dims.r());

        if self.require_stable_plant {
            match lti::is_schur_stable(plant.a(), lti::SCHUR_TOL) {
                Ok(true) => {}
                Ok(false) => push(&mut issues, "plant", "plant is required to be Schur stable but is not".into()),
                Err(e) => push(&mut issues, "plant", e.to_string()),
            }
        }

        if self.x0.len() != n {
            push(&mut issues, "x0", format!("expected {n} entries, found {}", self.x0.len()));
        }
        let obs = &self.observer;
        if obs.x_hat0.len() != n {
            push(
                &mut issues,
                "observer.x_hat0",
                format!("expected {n} entries, found {}", obs.x_hat0.len()),
            );
        }
        if obs.f_vec.len() != r {
            push(
                &mut issues,
                "observer.f_vec",
                format!("expected {r} entries, found {}", obs.f_vec.len()),
            );
        } else if obs.f_vec.iter().any(|v| !v.is_finite()) {
            push(&mut issues, "observer.f_vec", "non-finite value".into());
        } else {
            match lti::is_schur_stable(&build_f(&obs.f_vec, q), lti::SCHUR_TOL) {
                Ok(true) => {}
                Ok(false) => push(&mut issues, "observer.f_vec", "filter matrix F is not Schur stable".into()),
                Err(e) => push(&mut issues, "observer.f_vec", e.to_string()),
            }
        }

        let a_hat0 = match &obs.a_hat0 {
            CoefficientsOrMatrix::Coefficients(v) => Some(v.clone()),
            CoefficientsOrMatrix::Matrix(rows) => matrix_from_rows(rows).and_then(|a| canonical_coefficients(&a, q)),
        };
        match &a_hat0 {
            Some(v) if v.len() == r => {}
            Some(v) => push(
                &mut issues,
                "observer.a_hat0",
                format!("expected {r} coefficients, found {}", v.len()),
            ),
            None => push(
                &mut issues,
                "observer.a_hat0",
                format!("not an {n}x{n} canonical matrix for q = {q}"),
            ),
        }
        let b_hat0 = matrix_from_rows(&obs.b_hat0);
        match &b_hat0 {
            Some(b) if b.shape() == (n, m) => {}
            Some(b) => push(
                &mut issues,
                "observer.b_hat0",
                format!("expected {n}x{m}, found {}x{}", b.nrows(), b.ncols()),
            ),
            None => push(&mut issues, "observer.b_hat0", "ragged rows".into()),
        }
        let r_mat = match &obs.estimator.r {
            None => Some(DMatrix::identity(q, q)),
            Some(rows) => matrix_from_rows(rows),
        };
        match &r_mat {
            Some(rm) if rm.shape() == (q, q) => {}
            Some(rm) => push(
                &mut issues,
                "observer.estimator.r",
                format!("expected {q}x{q}, found {}x{}", rm.nrows(), rm.ncols()),
            ),
            None => push(&mut issues, "observer.estimator.r", "ragged rows".into()),
        }
        for (path, v) in [("x0", &self.x0), ("observer.x_hat0", &obs.x_hat0)] {
            if v.iter().any(|x| !x.is_finite()) {
                push(&mut issues, path, "non-finite value".into());
            }
        }

        for i in self.input.validate(m, "input") {
            issues.push(i);
        }

        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }

        let a_hat0 = a_hat0.expect("checked");
        let b_hat0 = b_hat0.expect("checked");
        let r_mat = r_mat.expect("checked");
        let mut issues = Vec::new();
        let p_hat0 = ParameterVector::pack(&a_hat0, &obs.f_vec, &b_hat0).map(|pv| pv.p);
        let truth = ParameterVector::pack(&plant.a_vec(), &obs.f_vec, plant.b());
        let estimator = p_hat0.and_then(|p| EstimatorConfig::new(obs.estimator.k0, obs.estimator.k_min, r_mat, p, obs.estimator.variant));
        let estimator = match estimator {
            Ok(e) => Some(e),
            Err(e) => {
                issues.push(ConfigIssue {
                    path: "observer.estimator".into(),
                    message: e.to_string(),
                });
                None
            }
        };
        let truth = match truth {
            Ok(t) => Some(t),
            Err(e) => {
                issues.push(ConfigIssue {
                    path: "plant".into(),
                    message: e.to_string(),
                });
                None
            }
        };
        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }

        Ok(Experiment {
            name: self.name.clone(),
            plant,
            x0: DVector::from_column_slice(&self.x0),
            f_vec: obs.f_vec.clone(),
            x_hat0: DVector::from_column_slice(&obs.x_hat0),
            estimator: estimator.expect("checked"),
            input: self.input.clone(),
            horizon: self.horizon,
            overflow_cap: self.overflow_cap,
            normalize: self.normalize,
            drift: self.drift,
            truth: truth.expect("checked"),
        })
    }
}

fn push(issues: &mut Vec<ConfigIssue>, path: &str, message: String) {
    issues.push(ConfigIssue {
        path: path.to_string(),
        message,
    });
}

fn build_plant(cfg: &PlantConfig) -> std::result::Result<SystemRealization, String> {
    match cfg {
        PlantConfig::TransferFunction { a_coeffs, numerators } => {
            let nums = numerators
                .iter()
                .enumerate()
                .map(|(i, rows)| matrix_from_rows(rows).ok_or_else(|| format!("numerators[{i}] has ragged rows")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let tf = TransferFunctionSpec::new(a_coeffs.clone(), nums).map_err(|e| e.to_string())?;
            Ok(lti::realize_observable_canonical(&tf))
        }
        PlantConfig::Canonical { q, a, b } => {
            let a = matrix_from_rows(a).ok_or("a has ragged rows")?;
            let b = matrix_from_rows(b).ok_or("b has ragged rows")?;
            if !linalg::is_finite_matrix(&a) || !linalg::is_finite_matrix(&b) {
                return Err("non-finite plant matrix entry".into());
            }
            SystemRealization::from_matrices(a, b, *q).map_err(|e| e.to_string())
        }
    }
}
