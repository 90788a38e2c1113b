//! Adaptive observer for MIMO discrete-time LTI systems.
//!
//! The plant is taken in observable canonical form. A bank of stable filters
//! turns the measured inputs and outputs into a regressor `φ_t`, so that the
//! output is linear in an unknown parameter vector `p`. A recursive
//! least-squares estimator with covariance resetting tracks `p`, and the
//! state estimate is rebuilt from the filter states.
//!
//! ```
//! use adaptive_observer::harness::presets;
//! use adaptive_observer::harness::run_experiment;
//!
//! let cfg = presets::get("siso_multisine").unwrap().with_horizon(200);
//! let log = run_experiment(&cfg).unwrap();
//! assert_eq!(log.rows.len(), 200);
//! ```

pub mod error;
pub mod estimator;
pub mod excitation;
pub mod filter_bank;
pub mod harness;
pub mod linalg;
pub mod lti;
pub mod observer;

pub use error::{ConfigIssue, Error, Result};
pub use estimator::{batch_ls_oracle, EstimatorConfig, EstimatorState, UpdateInfo, Variant};
pub use excitation::{excitation_trend, ExcitationLabel, ExcitationTrend, GramAccumulator, InputProfile};
pub use filter_bank::{build_f, FilterBankState, RegressorSnapshot};
pub use lti::{Dimensions, ParameterVector, SystemRealization, TransferFunctionSpec};
pub use observer::{ObserverState, StepRecord, DEFAULT_OVERFLOW_CAP};
