//! Recursive least squares for the stacked parameter vector.
//!
//! Three variants share one update:
//!
//! * [`Variant::CovarianceReset`]: the default estimator. After the
//!   ordinary covariance update, if the smallest eigenvalue of the updated
//!   covariance is at or below `k_min`, the covariance is reset to `k0 I`.
//!   This pins `k_min < λ_min[Γ] ≤ λ_max[Γ] ≤ k0` for the whole run.
//! * [`Variant::Forgetting`]: exponential forgetting, kept as the
//!   comparison baseline. Without excitation its covariance winds up.
//! * [`Variant::Ordinary`]: plain RLS, equivalent step for step to the
//!   batch solution returned by [`batch_ls_oracle`].
//!
//! The reset test compares the raw eigen-solve result against `k_min` with
//! no extra slack; equality triggers a reset.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    #[default]
    CovarianceReset,
    Forgetting {
        lambda: f64,
    },
    Ordinary,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::CovarianceReset => write!(f, "covariance_reset"),
            Variant::Forgetting { lambda } => write!(f, "forgetting(lambda={lambda})"),
            Variant::Ordinary => write!(f, "ordinary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    k0: f64,
    k_min: f64,
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    p_hat0: DVector<f64>,
    variant: Variant,
}

impl EstimatorConfig {
    pub const DEFAULT_K0: f64 = 1000.0;
    pub const DEFAULT_K_MIN: f64 = 1e-4;

    /// `k_min = 0` is accepted and disables resetting in practice.
    pub fn new(k0: f64, k_min: f64, r: DMatrix<f64>, p_hat0: DVector<f64>, variant: Variant) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidArgument(format!("k0 must be positive and finite, got {k0}")));
        }
        if !(k_min.is_finite() && k_min >= 0.0 && k_min < k0) {
            return Err(Error::InvalidArgument(format!(
                "k_min must satisfy 0 <= k_min < k0, got k_min = {k_min}, k0 = {k0}"
            )));
        }
        if !r.is_square() || r.nrows() == 0 {
            return Err(mismatch("R shape", "non-empty square", format!("{}x{}", r.nrows(), r.ncols())));
        }
        if !linalg::is_finite_matrix(&r) || !linalg::is_finite_vector(&p_hat0) {
            return Err(Error::NonFinite("estimator configuration"));
        }
        let scale = r.amax().max(1.0);
        if (&r - r.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("R must be symmetric".into()));
        }
        let (r_min, _) = linalg::sym_extreme_eigenvalues(&r);
        if r_min <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "R must be positive definite (smallest eigenvalue {r_min:e})"
            )));
        }
        if let Variant::Forgetting { lambda } = variant {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "forgetting factor must lie in (0, 1], got {lambda}"
                )));
            }
        }
        let r_inv = r.clone().cholesky().ok_or(Error::Solve("R"))?.inverse();
        Ok(Self {
            k0,
            k_min,
            r,
            r_inv,
            p_hat0,
            variant,
        })
    }

    /// `k0 = 1000`, `k_min = 1e-4`, `R = I_q`, covariance resetting.
    pub fn with_defaults(q: usize, p_hat0: DVector<f64>) -> Result<Self> {
        Self::new(
            Self::DEFAULT_K0,
            Self::DEFAULT_K_MIN,
            DMatrix::identity(q, q),
            p_hat0,
            Variant::CovarianceReset,
        )
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn p_hat0(&self) -> &DVector<f64> {
        &self.p_hat0
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn with_variant(mut self, variant: Variant) -> Result<Self> {
        if let Variant::Forgetting { lambda } = variant {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "forgetting factor must lie in (0, 1], got {lambda}"
                )));
            }
        }
        self.variant = variant;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.p_hat0.len()
    }

    pub fn q(&self) -> usize {
        self.r.nrows()
    }

    /// `R^{-1} M`.
    fn r_solve(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.r_inv * m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    p_hat: DVector<f64>,
    gamma: DMatrix<f64>,
    t: usize,
    reset_count: usize,
    last_w: DMatrix<f64>,
}

/// Intermediate quantities of one [`EstimatorState::rls_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateInfo {
    /// `Γ_{t} φ_{t+1} W_{t+1}`, computed with the pre-update covariance.
    pub gain: DMatrix<f64>,
    /// `z - φ^T p̂` with the pre-update estimate.
    pub innovation: DVector<f64>,
    pub reset: bool,
    /// `λ_min` of the covariance before the reset decision.
    pub gamma_bar_min: f64,
    /// Extreme eigenvalues of the committed covariance.
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl EstimatorState {
    /// `p̂ = p̂_0`, `Γ = k0 I`.
    pub fn new(cfg: &EstimatorConfig) -> Self {
        let d = cfg.d();
        Self {
            p_hat: cfg.p_hat0.clone(),
            gamma: DMatrix::identity(d, d) * cfg.k0,
            t: 0,
            reset_count: 0,
            last_w: cfg.r_inv.clone(),
        }
    }

    pub fn p_hat(&self) -> &DVector<f64> {
        &self.p_hat
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn reset_count(&self) -> usize {
        self.reset_count
    }

    pub fn last_w(&self) -> &DMatrix<f64> {
        &self.last_w
    }

    /// `(λ_min, λ_max)` of the covariance.
    pub fn covariance_spectrum(&self) -> (f64, f64) {
        linalg::sym_extreme_eigenvalues(&self.gamma)
    }

    /// One RLS update with regressor `phi` (d x q) and target `z` (length q).
    /// The state is left untouched on error.
    pub fn rls_step(&mut self, phi: &DMatrix<f64>, z: &DVector<f64>, cfg: &EstimatorConfig) -> Result<UpdateInfo> {
        let d = cfg.d();
        let q = cfg.q();
        if phi.shape() != (d, q) {
            return Err(mismatch(
                "regressor shape",
                format!("{d}x{q}"),
                format!("{}x{}", phi.nrows(), phi.ncols()),
            ));
        }
        if z.len() != q {
            return Err(mismatch("target length", q, z.len()));
        }
        if !linalg::is_finite_matrix(phi) {
            return Err(Error::NonFinite("regressor"));
        }
        if !linalg::is_finite_vector(z) {
            return Err(Error::NonFinite("target"));
        }

        let lambda = match cfg.variant {
            Variant::Forgetting { lambda } => lambda,
            _ => 1.0,
        };

        let gamma_phi = &self.gamma * phi;
        let mut info_mat = phi.transpose() * &gamma_phi + &cfg.r * lambda;
        linalg::symmetrize(&mut info_mat);
        if !linalg::is_finite_matrix(&info_mat) {
            return Err(Error::NonFinite("R + phi^T Gamma phi"));
        }
        let chol = info_mat.cholesky().ok_or(Error::Solve("R + phi^T Gamma phi"))?;
        let w = chol.inverse();
        // Γ φ W, via the solve rather than the explicit inverse
        let gain = chol.solve(&gamma_phi.transpose()).transpose();

        let innovation = z - phi.transpose() * &self.p_hat;
        let p_next = &self.p_hat + &gain * &innovation;

        let mut gamma_bar = &self.gamma - &gain * gamma_phi.transpose();
        linalg::symmetrize(&mut gamma_bar);
        if lambda != 1.0 {
            gamma_bar /= lambda;
        }
        if !linalg::is_finite_vector(&p_next) {
            return Err(Error::NonFinite("parameter estimate"));
        }
        if !linalg::is_finite_matrix(&gamma_bar) {
            return Err(Error::NonFinite("covariance"));
        }

        let (gamma_bar_min, gamma_bar_max) = linalg::sym_extreme_eigenvalues(&gamma_bar);
        let reset = matches!(cfg.variant, Variant::CovarianceReset) && gamma_bar_min <= cfg.k_min;
        let (gamma_next, gamma_min, gamma_max) = if reset {
            (DMatrix::identity(d, d) * cfg.k0, cfg.k0, cfg.k0)
        } else {
            (gamma_bar, gamma_bar_min, gamma_bar_max)
        };

        self.p_hat = p_next;
        self.gamma = gamma_next;
        self.last_w = w;
        self.t += 1;
        if reset {
            self.reset_count += 1;
        }
        Ok(UpdateInfo {
            gain,
            innovation,
            reset,
            gamma_bar_min,
            gamma_min,
            gamma_max,
        })
    }
}

/// Batch weighted least-squares minimiser over a whole history:
/// `Γ_t (Γ_0^{-1} p̂_0 + Σ φ_i R^{-1} z_i)` with
/// `Γ_t^{-1} = Γ_0^{-1} + Σ φ_i R^{-1} φ_i^T`, from one symmetric solve.
/// Only meaningful for the ordinary variant.
pub fn batch_ls_oracle(history: &[(DMatrix<f64>, DVector<f64>)], cfg: &EstimatorConfig) -> Result<DVector<f64>> {
    if cfg.variant != Variant::Ordinary {
        return Err(Error::InvalidArgument(format!(
            "batch oracle applies to the ordinary variant only, got {}",
            cfg.variant
        )));
    }
    if history.is_empty() {
        return Err(Error::InvalidArgument("batch oracle needs a non-empty history".into()));
    }
    let d = cfg.d();
    let q = cfg.q();
    let mut info = DMatrix::identity(d, d) / cfg.k0;
    let mut rhs = &cfg.p_hat0 / cfg.k0;
    for (i, (phi, z)) in history.iter().enumerate() {
        if phi.shape() != (d, q) || z.len() != q {
            return Err(mismatch(
                format!("history entry {i}"),
                format!("{d}x{q} / {q}"),
                format!("{}x{} / {}", phi.nrows(), phi.ncols(), z.len()),
            ));
        }
        let r_inv_phi_t = cfg.r_solve(&phi.transpose());
        info += phi * &r_inv_phi_t;
        rhs += phi * cfg.r_solve(&DMatrix::from_column_slice(q, 1, z.as_slice())).column(0);
    }
    linalg::symmetrize(&mut info);
    let (lo, hi) = linalg::sym_extreme_eigenvalues(&info);
    if lo > 0.0 && hi / lo > 1e12 {
        log::warn!("batch information matrix is poorly conditioned (cond ~ {:.3e})", hi / lo);
    }
    let chol = info.cholesky().ok_or(Error::Solve("accumulated information matrix"))?;
    Ok(chol.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cfg(k0: f64, k_min: f64, variant: Variant) -> EstimatorConfig {
        EstimatorConfig::new(k0, k_min, DMatrix::identity(1, 1), DVector::zeros(1), variant).unwrap()
    }

    #[test]
    fn zero_regressor_leaves_estimate_alone() {
        let cfg = EstimatorConfig::new(
            10.0,
            1e-4,
            DMatrix::identity(2, 2) * 2.0,
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            Variant::CovarianceReset,
        )
        .unwrap();
        let mut st = EstimatorState::new(&cfg);
        let info = st
            .rls_step(&DMatrix::zeros(3, 2), &DVector::from_vec(vec![4.0, 5.0]), &cfg)
            .unwrap();
        assert_eq!(st.p_hat(), cfg.p_hat0());
        assert_eq!(st.gamma(), &(DMatrix::identity(3, 3) * 10.0));
        assert!(!info.reset);
        assert!((st.last_w() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn scalar_hand_computation() {
        let cfg = scalar_cfg(1.0, 1e-4, Variant::CovarianceReset);
        let mut st = EstimatorState::new(&cfg);
        st.rls_step(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0), &cfg)
            .unwrap();
        assert!((st.last_w()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((st.p_hat()[0] - 0.5).abs() < 1e-15);
        assert!((st.gamma()[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(st.reset_count(), 0);
    }

    #[test]
    fn reset_threshold_is_inclusive() {
        // Γ = 1, φ = 1, R = 1 gives Γ̄ = 0.5 exactly
        let cfg = scalar_cfg(1.0, 0.5, Variant::CovarianceReset);
        let mut st = EstimatorState::new(&cfg);
        let info = st
            .rls_step(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0), &cfg)
            .unwrap();
        assert_eq!(info.gamma_bar_min, 0.5);
        assert!(info.reset);
        assert_eq!(st.gamma()[(0, 0)], 1.0);
        assert_eq!(st.reset_count(), 1);
        assert_eq!(st.covariance_spectrum(), (1.0, 1.0));
        // the estimate still moved
        assert!((st.p_hat()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forgetting_divides_by_lambda() {
        let cfg = scalar_cfg(1.0, 1e-4, Variant::Forgetting { lambda: 0.5 });
        let mut st = EstimatorState::new(&cfg);
        st.rls_step(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0), &cfg)
            .unwrap();
        // W = 1 / (0.5 + 1), Γ+ = (1 - 1/1.5) / 0.5
        assert!((st.last_w()[(0, 0)] - 1.0 / 1.5).abs() < 1e-15);
        assert!((st.p_hat()[0] - 1.0 / 1.5).abs() < 1e-15);
        assert!((st.gamma()[(0, 0)] - (1.0 - 1.0 / 1.5) / 0.5).abs() < 1e-15);
    }

    #[test]
    fn forgetting_with_zero_regressor_winds_up() {
        let cfg = scalar_cfg(1.0, 1e-4, Variant::Forgetting { lambda: 0.5 });
        let mut st = EstimatorState::new(&cfg);
        for _ in 0..10 {
            st.rls_step(&DMatrix::zeros(1, 1), &DVector::zeros(1), &cfg).unwrap();
        }
        assert_eq!(st.gamma()[(0, 0)], 1024.0);
    }

    #[test]
    fn spectrum_of_diagonal() {
        let cfg = EstimatorConfig::new(5.0, 1e-4, DMatrix::identity(1, 1), DVector::zeros(2), Variant::Ordinary).unwrap();
        let mut st = EstimatorState::new(&cfg);
        assert_eq!(st.covariance_spectrum(), (5.0, 5.0));
        st.gamma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        assert_eq!(st.covariance_spectrum(), (1.0, 4.0));
    }

    #[test]
    fn config_validation() {
        let r = DMatrix::identity(1, 1);
        let p = DVector::zeros(1);
        assert!(EstimatorConfig::new(1.0, 1.0, r.clone(), p.clone(), Variant::CovarianceReset).is_err());
        assert!(EstimatorConfig::new(-1.0, 0.0, r.clone(), p.clone(), Variant::CovarianceReset).is_err());
        assert!(EstimatorConfig::new(1.0, 0.0, r.clone(), p.clone(), Variant::Forgetting { lambda: 1.5 }).is_err());
        assert!(EstimatorConfig::new(1.0, 0.0, r.clone(), p.clone(), Variant::Forgetting { lambda: 0.0 }).is_err());
        assert!(EstimatorConfig::new(1.0, 0.0, -r.clone(), p.clone(), Variant::Ordinary).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(EstimatorConfig::new(1.0, 0.0, asym, p.clone(), Variant::Ordinary).is_err());
        assert!(EstimatorConfig::new(1.0, 0.0, r, p, Variant::Ordinary).is_ok());
    }

    #[test]
    fn shape_and_finiteness_errors_leave_state() {
        let cfg = scalar_cfg(1.0, 1e-4, Variant::CovarianceReset);
        let mut st = EstimatorState::new(&cfg);
        let before = st.clone();
        assert!(st.rls_step(&DMatrix::zeros(2, 1), &DVector::zeros(1), &cfg).is_err());
        assert!(st
            .rls_step(&DMatrix::from_element(1, 1, f64::NAN), &DVector::zeros(1), &cfg)
            .is_err());
        assert!(st
            .rls_step(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, f64::INFINITY), &cfg)
            .is_err());
        assert_eq!(st, before);
    }

    #[test]
    fn overflowing_regressor_is_a_solve_or_finiteness_error() {
        let cfg = scalar_cfg(1.0, 1e-4, Variant::CovarianceReset);
        let mut st = EstimatorState::new(&cfg);
        let err = st
            .rls_step(&DMatrix::from_element(1, 1, 1e300), &DVector::zeros(1), &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::Solve(_) | Error::NonFinite(_)), "{err}");
    }

    #[test]
    fn batch_prior_only() {
        let cfg = EstimatorConfig::new(
            3.0,
            0.0,
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![1.0, 2.0]),
            Variant::Ordinary,
        )
        .unwrap();
        let hist = vec![(DMatrix::zeros(2, 1), DVector::from_element(1, 7.0)); 5];
        let p = batch_ls_oracle(&hist, &cfg).unwrap();
        assert!((p - cfg.p_hat0()).amax() < 1e-15);
    }

    #[test]
    fn batch_scalar_closed_form() {
        for k0 in [0.5, 1.0, 10.0, 1000.0] {
            let cfg = scalar_cfg(k0, 0.0, Variant::Ordinary);
            let hist = vec![(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0))];
            let p = batch_ls_oracle(&hist, &cfg).unwrap();
            assert!((p[0] - k0 / (1.0 + k0)).abs() < 1e-14);
            let mut st = EstimatorState::new(&cfg);
            st.rls_step(&hist[0].0, &hist[0].1, &cfg).unwrap();
            assert!((st.p_hat()[0] - p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn batch_rejects_other_variants_and_empty() {
        let cfg = scalar_cfg(1.0, 0.0, Variant::CovarianceReset);
        let hist = vec![(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0))];
        assert!(batch_ls_oracle(&hist, &cfg).is_err());
        let cfg = scalar_cfg(1.0, 0.0, Variant::Ordinary);
        assert!(batch_ls_oracle(&[], &cfg).is_err());
    }
}
