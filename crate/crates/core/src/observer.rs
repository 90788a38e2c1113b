//! The adaptive observer: filters, parameter update, then state estimate.
//!
//! One call to [`ObserverState::step`] moves every component from index `t`
//! to `t + 1`:
//!
//! 1. the filters consume the previous samples `(y_t, u_t)` giving `S_{t+1}`
//!    and `φ_{t+1}`;
//! 2. `ζ_{t+1} = F ζ_t`, so that `ζ_t = F^t x̂_0` without a matrix power;
//! 3. `z_{t+1} = y_{t+1} - C ζ_{t+1}`;
//! 4. RLS with `(φ_{t+1}, z_{t+1})`;
//! 5. `x̂_{t+1} = S_{t+1} p̂_{t+1} + ζ_{t+1}` and
//!    `ŷ_{t+1} = φ_{t+1}^T p̂_{t+1} + C ζ_{t+1}`.
//!
//! Parameters are always updated before the state estimate is formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorState};
use crate::filter_bank::{build_f, FilterBankState};
use crate::linalg;
use crate::lti::{self, Dimensions};

/// Default magnitude cap applied to every guarded norm.
pub const DEFAULT_OVERFLOW_CAP: f64 = 1e150;

#[derive(Debug, Clone)]
pub struct ObserverState {
    filter: FilterBankState,
    est: EstimatorState,
    cfg: EstimatorConfig,
    c: DMatrix<f64>,
    zeta: DVector<f64>,
    x_hat: DVector<f64>,
    y_hat: DVector<f64>,
    t: usize,
    overflow_cap: f64,
}

/// Everything produced by one observer step, indexed at the new time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the new estimates; the filters consumed samples at `t - 1`.
    pub t: usize,
    pub data_index: usize,
    pub s: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    /// `F^t x̂_0`.
    pub zeta: DVector<f64>,
    pub z: DVector<f64>,
    /// `z - φ^T p̂` with the estimate from before this step.
    pub innovation: DVector<f64>,
    /// `Γ_{t-1} φ_t W_t`.
    pub gain: DMatrix<f64>,
    pub p_hat: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub y_hat: DVector<f64>,
    pub reset: bool,
    pub reset_count: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl ObserverState {
    /// Zeroed filters, `p̂ = p̂_0`, `Γ = k0 I`, `ζ = x̂ = x̂_0`.
    pub fn new(dims: Dimensions, f_vec: &[f64], c: DMatrix<f64>, cfg: EstimatorConfig, x_hat0: DVector<f64>) -> Result<Self> {
        let n = dims.n();
        if f_vec.len() != dims.r() {
            return Err(mismatch("f_vec length", dims.r(), f_vec.len()));
        }
        if c.shape() != (dims.q(), n) {
            return Err(mismatch(
                "C shape",
                format!("{}x{n}", dims.q()),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        if x_hat0.len() != n {
            return Err(mismatch("x_hat0 length", n, x_hat0.len()));
        }
        if cfg.d() != dims.d() {
            return Err(mismatch("p_hat0 length", dims.d(), cfg.d()));
        }
        if cfg.q() != dims.q() {
            return Err(mismatch("R size", dims.q(), cfg.q()));
        }
        if !linalg::is_finite_vector(&x_hat0) || f_vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observer initial condition"));
        }
        let f = build_f(f_vec, dims.q());
        if !lti::is_schur_stable(&f, lti::SCHUR_TOL)? {
            return Err(Error::UnstableFilter {
                spectral_radius: linalg::spectral_radius(&f)?,
            });
        }
        let y_hat = &c * &x_hat0;
        Ok(Self {
            filter: FilterBankState::new(f, dims)?,
            est: EstimatorState::new(&cfg),
            cfg,
            c,
            zeta: x_hat0.clone(),
            x_hat: x_hat0,
            y_hat,
            t: 0,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
        })
    }

    pub fn with_overflow_cap(mut self, cap: f64) -> Self {
        self.overflow_cap = cap;
        self
    }

    pub fn overflow_cap(&self) -> f64 {
        self.overflow_cap
    }

    pub fn filter(&self) -> &FilterBankState {
        &self.filter
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.est
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn f(&self) -> &DMatrix<f64> {
        self.filter.f()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn zeta(&self) -> &DVector<f64> {
        &self.zeta
    }

    pub fn x_hat(&self) -> &DVector<f64> {
        &self.x_hat
    }

    pub fn y_hat(&self) -> &DVector<f64> {
        &self.y_hat
    }

    pub fn p_hat(&self) -> &DVector<f64> {
        self.est.p_hat()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    fn guard(&self, quantity: &'static str, value: f64) -> Result<()> {
        if !value.is_finite() || value > self.overflow_cap {
            return Err(Error::Overflow {
                quantity,
                value,
                cap: self.overflow_cap,
            });
        }
        Ok(())
    }

    /// Advances from `t` to `t + 1`. `y_prev`, `u_prev` are the samples at
    /// `t` (they drive the filters); `y_new` is the measurement at `t + 1`.
    /// Nothing is committed if any stage fails or trips the overflow guard.
    pub fn step(&mut self, y_prev: &DVector<f64>, u_prev: &DVector<f64>, y_new: &DVector<f64>) -> Result<StepRecord> {
        let q = self.c.nrows();
        if y_new.len() != q {
            return Err(mismatch("output length", q, y_new.len()));
        }
        if !linalg::is_finite_vector(y_new) {
            return Err(Error::NonFinite("measurement"));
        }

        let mut filter = self.filter.clone();
        filter.advance(y_prev, u_prev)?;
        let snap = filter.snapshot(&self.c);
        self.guard("regressor norm", snap.phi.norm())?;

        let zeta = filter.f() * &self.zeta;
        let c_zeta = &self.c * &zeta;
        let z = y_new - &c_zeta;

        let mut est = self.est.clone();
        let info = est.rls_step(&snap.phi, &z, &self.cfg)?;
        self.guard("parameter estimate norm", est.p_hat().norm())?;
        self.guard("covariance max eigenvalue", info.gamma_max)?;

        let x_hat = &snap.s * est.p_hat() + &zeta;
        let y_hat = snap.phi.transpose() * est.p_hat() + &c_zeta;
        self.guard("state estimate norm", x_hat.norm())?;

        self.filter = filter;
        self.est = est;
        self.zeta = zeta;
        self.x_hat = x_hat;
        self.y_hat = y_hat;
        self.t += 1;

        Ok(StepRecord {
            t: self.t,
            data_index: self.t - 1,
            s: snap.s,
            phi: snap.phi,
            zeta: self.zeta.clone(),
            z,
            innovation: info.innovation,
            gain: info.gain,
            p_hat: self.est.p_hat().clone(),
            x_hat: self.x_hat.clone(),
            y_hat: self.y_hat.clone(),
            reset: info.reset,
            reset_count: self.est.reset_count(),
            gamma_min: info.gamma_min,
            gamma_max: info.gamma_max,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Variant;
    use crate::lti::{output_matrix, ParameterVector, SystemRealization};

    const A_VEC: [f64; 2] = [1.52, -0.6];
    const F_VEC: [f64; 2] = [1.49, -0.55];

    fn siso_plant() -> SystemRealization {
        SystemRealization::from_canonical(&A_VEC, DMatrix::from_column_slice(2, 1, &[0.43, -0.35]), 1).unwrap()
    }

    fn observer_with(p_hat0: DVector<f64>, x_hat0: DVector<f64>) -> ObserverState {
        let dims = Dimensions::new(1, 1, 2).unwrap();
        let cfg = EstimatorConfig::new(1e4, 1e-4, DMatrix::identity(1, 1), p_hat0, Variant::CovarianceReset).unwrap();
        ObserverState::new(dims, &F_VEC, output_matrix(dims), cfg, x_hat0).unwrap()
    }

    fn true_p() -> DVector<f64> {
        ParameterVector::pack(&A_VEC, &F_VEC, siso_plant().b()).unwrap().p
    }

    #[test]
    fn init_estimate_is_initial_guess() {
        let x0 = DVector::from_vec(vec![0.3, -2.0]);
        let obs = observer_with(DVector::zeros(4), x0.clone());
        assert_eq!(obs.x_hat(), &x0);
        assert_eq!(obs.zeta(), &x0);
        assert_eq!(obs.y_hat()[0], 0.3);
    }

    #[test]
    fn unstable_filter_rejected() {
        let dims = Dimensions::new(1, 1, 2).unwrap();
        let cfg = EstimatorConfig::with_defaults(1, DVector::zeros(4)).unwrap();
        let err = ObserverState::new(dims, &[1.0, 0.0], output_matrix(dims), cfg, DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::UnstableFilter { .. }), "{err}");
    }

    fn drive(obs: &mut ObserverState, x0: DVector<f64>, steps: usize) -> Vec<(DVector<f64>, StepRecord)> {
        let plant = siso_plant();
        let mut x = x0;
        let mut out = Vec::new();
        for t in 0..steps {
            let u = DVector::from_element(1, (0.2 * t as f64).sin());
            let (x_next, y) = plant.simulate_step(&x, &u).unwrap();
            let y_next = plant.c() * &x_next;
            let rec = obs.step(&y, &u, &y_next).unwrap();
            out.push((x_next.clone(), rec));
            x = x_next;
        }
        out
    }

    #[test]
    fn exact_knowledge_is_a_fixed_point() {
        let x0 = DVector::from_vec(vec![0.5, -0.25]);
        let mut obs = observer_with(true_p(), x0.clone());
        for (x, rec) in drive(&mut obs, x0, 200) {
            assert!((&x - &rec.x_hat).norm() <= 1e-10 * (1.0 + x.norm()));
            assert!(rec.innovation.amax() < 1e-10);
            assert!((&rec.p_hat - true_p()).amax() < 1e-12);
        }
    }

    #[test]
    fn state_error_splits_into_parameter_and_initial_parts() {
        // p̂ starts exact but x̃_0 perturbs z, so p̂ moves; the split still holds
        let x0 = DVector::from_vec(vec![0.5, -0.25]);
        let x_hat0 = DVector::from_vec(vec![-1.0, 2.0]);
        let mut obs = observer_with(true_p(), x_hat0.clone());
        let f = obs.f().clone();
        let mut xi = &x0 - &x_hat0;
        for (x, rec) in drive(&mut obs, x0, 120) {
            xi = &f * xi;
            let err = &x - &rec.x_hat;
            let want = &rec.s * (true_p() - &rec.p_hat) + &xi;
            assert!(
                (&err - &want).norm() <= 1e-9 * (1.0 + x.norm()),
                "t={} err={} want={}",
                rec.t,
                err,
                want
            );
        }
        assert!(xi.norm() < 1e-6);
    }

    #[test]
    fn siso_output_error_identity_replay() {
        let x0 = DVector::from_vec(vec![0.2, 0.1]);
        let x_hat0 = DVector::zeros(2);
        let mut obs = observer_with(DVector::zeros(4), x_hat0.clone());
        let f = obs.f().clone();
        let c = obs.c().clone();
        let p = true_p();
        let mut xi = &x0 - &x_hat0;
        for (x, rec) in drive(&mut obs, x0, 50) {
            xi = &f * xi;
            let y_err = &c * &x - &rec.y_hat;
            let p_err = &p - &rec.p_hat;
            let replay = rec.phi.transpose() * &p_err + &c * &xi;
            assert!((y_err - replay).amax() <= 1e-10, "t={}", rec.t);
        }
    }

    #[test]
    fn overflow_guard_leaves_state_untouched() {
        let mut obs = observer_with(DVector::zeros(4), DVector::zeros(2)).with_overflow_cap(10.0);
        let before_t = obs.t();
        let err = obs
            .step(&DVector::from_element(1, 100.0), &DVector::zeros(1), &DVector::zeros(1))
            .unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }), "{err}");
        assert_eq!(obs.t(), before_t);
        assert_eq!(obs.filter().t(), 0);
    }

    #[test]
    fn non_finite_measurement_rejected() {
        let mut obs = observer_with(DVector::zeros(4), DVector::zeros(2));
        assert!(obs
            .step(&DVector::zeros(1), &DVector::zeros(1), &DVector::from_element(1, f64::NAN))
            .is_err());
        assert!(obs
            .step(&DVector::from_element(1, f64::NAN), &DVector::zeros(1), &DVector::zeros(1))
            .is_err());
    }
}
