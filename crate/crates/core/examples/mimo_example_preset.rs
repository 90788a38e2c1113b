//! The open-loop unstable 2x2 example. Runs stop when the plant or the
//! estimator leaves floating-point range.

use adaptive_observer::harness::{presets, run_experiment};

fn main() -> adaptive_observer::Result<()> {
    for name in ["mimo_example_nonrich", "mimo_example_rich"] {
        let log = run_experiment(&presets::get(name)?)?;
        println!("== {name}");
        for row in log.rows.iter().step_by(3) {
            let norm: Vec<String> = row.normalized.iter().take(5).map(|v| format!("{v:+.3}")).collect();
            println!("t={:3} |x_err|={:.3e} p_hat/p[0..5]=[{}]", row.t, row.x_err, norm.join(" "));
        }
        print!("{}", log.summary_text());
    }
    Ok(())
}
