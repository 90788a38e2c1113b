//! Long-horizon run on the stable 2x2 variant with a multisine input, written
//! out as CSV plus summary.

use std::path::PathBuf;

use adaptive_observer::harness::{presets, run_experiment};

fn main() -> adaptive_observer::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("adaptive-observer"));
    for name in ["mimo_stable_rich", "mimo_stable_nonrich"] {
        let log = run_experiment(&presets::get(name)?)?;
        let (csv, _) = log.write_files(&out_dir, name)?;
        let s = &log.summary;
        println!(
            "{name:<20} |p_err| {:.3e} -> {:.3e}  |x_err| {:.3e} -> {:.3e}  resets {}  ({})",
            s.initial_p_err,
            s.final_p_err,
            s.initial_x_err,
            s.final_x_err,
            s.reset_count,
            csv.display()
        );
    }
    Ok(())
}
