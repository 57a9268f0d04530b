//! Uplink multi-user MIMO with pilot-based channel estimation: closed-form
//! achievable rates, training-energy optimization and a Monte Carlo lab.
//!
//! ```
//! use uplink_core::{joint_optimize, ReceiverKind, SystemParams};
//!
//! let params = SystemParams::new(50, 10, 196, 1.0)?.with_peak_ratio(1.2)?;
//! let best = joint_optimize(&params, ReceiverKind::Zf)?;
//! assert!(best.rate.sum_rate > 0.0);
//! # Ok::<(), uplink_core::Error>(())
//! ```

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod link;
pub mod montecarlo;
pub mod optimize;
pub mod rates;
pub mod special;

pub use error::{Error, Result};
pub use link::{
    effective_snr, effective_snr_faded, equal_power_split, estimator_stats, make_split, EnergySplit,
    EstimatorStats, FadingProfile, SystemParams,
};
pub use montecarlo::{mmse_combiner, run_campaign, simulate_block, BlockSample, EmpiricalReport, TrialConfig};
pub use optimize::{
    feasible_alpha_interval, golden_section_max, joint_optimize, joint_optimize_asymptotic, optimal_alpha,
    optimal_alpha_clipped, optimal_alpha_mrc, optimal_alpha_zf, CaseLabel, FeasibleInterval, IntegerSchedule,
    OptimizationOutcome,
};
pub use rates::{
    dof, power_for_rate, rate, rate_asymptotic, rate_gain_vs_equal_power, rate_mmse, rate_mrc, rate_mrc_faded,
    rate_zf, rate_zf_faded, snr_mrc, snr_zf, RateReport, ReceiverKind,
};
pub use special::{exp_integral, f_mmse, log_gamma_multi};
