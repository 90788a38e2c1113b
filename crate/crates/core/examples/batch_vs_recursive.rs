//! Ordinary recursive least squares against the one-shot batch solution on
//! a random regression problem.

use adaptive_observer::estimator::{batch_ls_oracle, EstimatorConfig, EstimatorState, Variant};
use nalgebra::{DMatrix, DVector};

fn main() -> adaptive_observer::Result<()> {
    let (d, q) = (5, 2);
    let truth = DVector::from_vec(vec![0.3, -1.2, 2.0, 0.05, -0.7]);
    let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let cfg = EstimatorConfig::new(100.0, 1e-4, r, DVector::zeros(d), Variant::Ordinary)?;
    let mut st = EstimatorState::new(&cfg);
    let mut history = Vec::new();

    // deterministic pseudo-random regressors
    let mut seed = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    for t in 1..=100 {
        let phi = DMatrix::from_fn(d, q, |_, _| next());
        let z = phi.transpose() * &truth;
        st.rls_step(&phi, &z, &cfg)?;
        history.push((phi, z));
        if t % 20 == 0 {
            let batch = batch_ls_oracle(&history, &cfg)?;
            println!(
                "t={t:3}  |p_rls - p_batch| = {:.2e}  |p_rls - p| = {:.2e}",
                (st.p_hat() - &batch).norm(),
                (st.p_hat() - &truth).norm()
            );
        }
    }
    Ok(())
}
