//! Covariance resetting against a forgetting-factor estimator on the SISO
//! example with a non-rich input. The forgetting covariance winds up.

use adaptive_observer::harness::{compare_estimators, presets};

fn main() -> adaptive_observer::Result<()> {
    let horizon = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let cfg = presets::get("siso_example")?.with_horizon(horizon);
    let cmp = compare_estimators(&cfg)?;
    print!("{}", cmp.table());
    let (p_ratio, g_ratio) = cmp.growth_ratios();
    println!("forgetting / reset: max |p_hat| x{p_ratio:.3e}, max lambda_max[Gamma] x{g_ratio:.3e}");
    if let Some(tr) = &cmp.forgetting.summary.truncation {
        println!("forgetting run stopped at step {}: {}", tr.at_step, tr.reason);
    }
    Ok(())
}
