//! Build a run config from JSON, validate it, and run it.

use adaptive_observer::harness::{run_experiment, RunConfig};
use adaptive_observer::Error;

const CONFIG: &str = r#"{
  "name": "first_order_pair",
  "plant": {
    "kind": "transfer_function",
    "a_coeffs": [-0.9],
    "numerators": [[[1.0, 0.5], [0.0, 2.0]]]
  },
  "x0": [1.0, -1.0],
  "observer": {
    "f_vec": [0.3],
    "x_hat0": [0.0, 0.0],
    "a_hat0": [0.0],
    "b_hat0": [[0.0, 0.0], [0.0, 0.0]],
    "estimator": {"k0": 100.0, "k_min": 0.001}
  },
  "input": {"kind": "multisine", "amplitudes": [1.0, 0.5], "frequencies": [[0.3, 1.7], [0.9, 2.4]]},
  "horizon": 500
}"#;

fn main() -> adaptive_observer::Result<()> {
    let cfg = RunConfig::from_json(CONFIG)?;
    let log = run_experiment(&cfg)?;
    print!("{}", log.summary_text());

    let mut broken = cfg.clone();
    broken.horizon = 0;
    broken.observer.f_vec = vec![1.2];
    match broken.validate() {
        Err(Error::Config(issues)) => issues.iter().for_each(|i| println!("rejected: {i}")),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
