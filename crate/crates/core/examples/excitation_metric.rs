//! Excitation metric on the SISO example: one sinusoid cannot excite four
//! parameters, two can.

use adaptive_observer::harness::{presets, run_experiment};
use adaptive_observer::InputProfile;

fn main() -> adaptive_observer::Result<()> {
    let single = presets::get("siso_example")?.with_horizon(4000);
    let mut two = single.clone();
    two.input = InputProfile::Multisine {
        amplitudes: vec![1.0],
        frequencies: vec![vec![0.2, 1.1]],
        phases: vec![vec![0.0, 0.0]],
    };
    for (label, cfg) in [("sin(0.2t)", single), ("sin(0.2t) + sin(1.1t)", two)] {
        let d = cfg.validate()?.dims().d();
        let rich = cfg.input.is_heuristically_rich(d);
        let log = run_experiment(&cfg)?;
        let checkpoints: Vec<String> = [500, 1000, 2000, 4000]
            .iter()
            .map(|&t| format!("t={t}: {:.3e}", log.rows[t - 1].pe_metric))
            .collect();
        println!("{label:<24} rich by frequency count: {rich}");
        println!("    lambda_min(sum phi phi^T)  {}", checkpoints.join("  "));
        if let Some(trend) = log.summary.pe_trend {
            println!("    trend: {} (relative growth {:.3})", trend.label, trend.relative_growth);
        }
    }
    Ok(())
}
