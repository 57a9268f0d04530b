//! Built-in experiment specs.

pub const FIG1: &str = "\
# Sum rate against SNR with and without the optimized split.
kind = rate-sweep
M = 20
K = 4
T = 196
units = db
sweep.var = rho
sweep.range = -10:20:2
receivers = mrc, zf, mmse
schemes = equal-power, avg-only
";

pub const FIG_IMAGE1: &str = "\
# Growing arrays with rho = rho_u / sqrt(M).
kind = asymptotic
K = 10
T = 196
rho_db = 3
rho_max_ratio = 1.2
sweep.var = M
sweep.values = 20, 30, 50, 100, 200, 500, 1000, 2000
receivers = mrc, zf
schemes = equal-power, avg-only, avg-and-peak
";

pub const FIG_IMAGE2: &str = "\
# Energy efficiency against SNR.
kind = energy-efficiency
M = 30
K = 10
T = 196
rho_max_ratio = 1.2
units = db
sweep.var = rho
sweep.range = -20:20:2
receivers = mrc, zf
schemes = equal-power, avg-only, avg-and-peak
";

pub const FIG_IMAGE3: &str = "\
# Energy efficiency against sum rate; plot energy_efficiency over sum_rate.
kind = energy-efficiency
M = 20
K = 10
T = 196
rho_max_ratio = 1.2
units = db
sweep.var = rho
sweep.range = -20:20:1
receivers = mrc, zf
schemes = equal-power, avg-only, avg-and-peak
";

pub const FIG_IMAGE4: &str = "\
# Effect of the peak-to-average power ratio.
kind = energy-efficiency
M = 50
K = 10
T = 196
rho_db = -10
sweep.var = rho_max_ratio
sweep.values = 1, 1.1, 1.2, 1.5, 2, 3, 5, 10, 20, 50, 100
receivers = mrc, zf
schemes = equal-power, avg-only, avg-and-peak
";

pub const NAMES: [&str; 5] = ["fig1", "fig-image1", "fig-image2", "fig-image3", "fig-image4"];

/// Spec text of a named preset.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => FIG1,
        "fig-image1" => FIG_IMAGE1,
        "fig-image2" => FIG_IMAGE2,
        "fig-image3" => FIG_IMAGE3,
        "fig-image4" => FIG_IMAGE4,
        _ => return None,
    })
}
