//! Shared fixtures for the benchmarks.

use uplink_core::{make_split, optimal_alpha, EnergySplit, ReceiverKind, SystemParams};

/// The 20-antenna, 4-user, 196-symbol reference link at `rho_db`, with the
/// optimal split for `receiver`.
pub fn reference_link(rho_db: f64, receiver: ReceiverKind) -> (SystemParams, EnergySplit) {
    let params = SystemParams::new(20, 4, 196, 10f64.powf(rho_db / 10.0)).expect("valid reference link");
    let alpha = optimal_alpha(&params, 192, receiver).expect("optimal split exists");
    (params, make_split(&params, alpha, 192).expect("alpha in range"))
}
