//! Simulation and estimation toolkit for frequentist inference on adaptively
//! collected bandit data.
//!
//! The crate runs adaptive experiments (modified Thompson sampling with
//! probability floors, a two-stage design, fixed randomization), computes
//! adaptively-weighted AIPW estimators with variance-stabilizing evaluation
//! weights, plus the sample-mean, weighted-average, W-decorrelation and
//! time-uniform confidence-sequence baselines, and verifies their
//! bias/coverage/normality behavior through a deterministic, parallel
//! replication harness.
//!
//! Module map:
//! * [`env`] — reward distributions and settings
//! * [`design`] — assignment designs producing logged propensities
//! * [`history`] — the experiment log and its JSONL interchange format
//! * [`scores`] — per-step unbiased scoring rules (IPW/AIPW, contrasts)
//! * [`weights`] — variance-stabilizing stick-breaking weight schedules
//! * [`estimators`] — point/variance estimates, intervals, studentization
//! * [`confseq`] — empirical-Bernstein time-uniform confidence sequences
//! * [`harness`] — replication engine, aggregation, figure data, config

pub mod confseq;
pub mod design;
pub mod env;
pub mod estimators;
pub mod harness;
pub mod history;
pub mod numeric;
pub mod rng;
pub mod scores;
pub mod weights;

pub use env::{make_setting, ArmOutcomeModel, Noise, Setting};
pub use estimators::EstimateReport;
pub use history::{read_log, write_log, BanditHistory, StepRecord};
pub use scores::Target;
