//! Majority-vote transmit antenna selection (TAS-maj) with maximal ratio
//! combining for a downlink NOMA network over Nakagami-m fading.
//!
//! The crate has two independent routes to the outage probability of each
//! user:
//!
//! * [`analytic`]: closed-form mixture CDFs of the ordered selected gains,
//!   exact outage, its high-SNR bound, and the error floor caused by channel
//!   estimation error and feedback delay.
//! * [`mc`]: a reproducible Monte Carlo engine that draws channels, runs the
//!   selection scheme and tests the SIC decoding chain directly.
//!
//! [`experiment`] ties both together into CSV sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod mc;
pub mod rng;
pub mod selection;
pub mod special_math;
pub mod stats;

pub use analytic::{theta_star, AnalyticModel, ErrorFloor, MixtureCdf, OutagePoint, ThetaStar, UserOutage, ZetaSet};
pub use channel::{
    beta_of_snr, derive_impairments, sample_gain_matrix, sample_gamma, GainMatrix, ImpairmentState, SystemConfig,
};
pub use error::{MathError, ModelError, SpecError};
pub use experiment::{load_spec, parse_spec, ExperimentSpec, OutputKind};
pub use mc::{
    empirical_majority_cdf, run_outage_mc, sinr, trial_outage, EmpiricalMajorityCdf, McPoint, McRun, McSettings,
};
pub use selection::{a3_select, aia_select, majority_select, order_users, per_user_vote, Scheme, SelectionResult};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10 log10(linear)`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
