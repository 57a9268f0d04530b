//! System parameters, the training/data energy split, and the effective SNR
//! seen by a receiver that treats channel-estimation error as noise.

use crate::error::{Error, Result};

/// Single-cell uplink configuration.
///
/// Powers are linear-scale SNRs (transmit power over unit noise variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Base-station antennas `M`.
    pub antennas: usize,
    /// Single-antenna users `K`.
    pub users: usize,
    /// Coherence interval `T` in channel uses.
    pub coherence: usize,
    /// Average power per user per symbol.
    pub rho: f64,
    /// Peak power per symbol, if constrained.
    pub rho_max: Option<f64>,
}

impl SystemParams {
    pub fn new(antennas: usize, users: usize, coherence: usize, rho: f64) -> Result<Self> {
        let params = Self {
            antennas,
            users,
            coherence,
            rho,
            rho_max: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Adds a peak-power limit.
    pub fn with_peak(mut self, rho_max: f64) -> Result<Self> {
        self.rho_max = Some(rho_max);
        self.validate()?;
        Ok(self)
    }

    /// Adds a peak-power limit `ratio * rho`.
    pub fn with_peak_ratio(self, ratio: f64) -> Result<Self> {
        let rho = self.rho;
        self.with_peak(ratio * rho)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.users == 0 {
            return Err(Error::InvalidParams("M and K must be positive".into()));
        }
        if self.users >= self.coherence {
            return Err(Error::InvalidParams(format!(
                "need K < T (K = {}, T = {})",
                self.users, self.coherence
            )));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParams(format!("rho must be finite and >= 0, got {}", self.rho)));
        }
        if let Some(peak) = self.rho_max {
            if !peak.is_finite() || peak < self.rho {
                return Err(Error::InvalidParams(format!(
                    "rho_max must be finite and >= rho (rho = {}, rho_max = {peak})",
                    self.rho
                )));
            }
        }
        Ok(())
    }

    /// Largest admissible data duration, `T - K`.
    pub fn max_data_duration(&self) -> usize {
        self.coherence - self.users
    }

    /// Per-interval energy budget `rho * T`.
    pub fn energy_budget(&self) -> f64 {
        self.rho * self.coherence as f64
    }
}

/// A training/data schedule within one coherence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplit {
    /// Fraction of `rho * T` spent on pilots.
    pub alpha: f64,
    /// Training duration `T_tau = T - T_d`.
    pub t_tau: f64,
    /// Data duration `T_d`; integral except on the peak-power slab line.
    pub t_d: f64,
    /// Training power `alpha rho T / T_tau`.
    pub rho_tau: f64,
    /// Data power `(1 - alpha) rho T / T_d`.
    pub rho_d: f64,
    /// Training energy `rho_tau T_tau = alpha rho T`.
    pub energy: f64,
}

impl EnergySplit {
    /// Split with a continuous data duration in `(0, T - K]`.
    pub fn continuous(params: &SystemParams, alpha: f64, t_d: f64) -> Result<Self> {
        params.validate()?;
        let max = params.max_data_duration();
        if !(t_d > 0.0) || t_d > max as f64 {
            return Err(Error::InfeasibleDuration { t_d, max });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let budget = params.energy_budget();
        let t_tau = params.coherence as f64 - t_d;
        let energy = alpha * budget;
        let data_energy = budget - energy;
        Ok(Self {
            alpha,
            t_tau,
            t_d,
            rho_tau: energy / t_tau,
            rho_d: data_energy / t_d,
            energy,
        })
    }

    /// Fraction of the interval carrying data, `T_d / T`.
    pub fn prelog(&self) -> f64 {
        self.t_d / (self.t_d + self.t_tau)
    }
}

/// Builds the split for an integral data duration `1 <= T_d <= T - K`.
pub fn make_split(params: &SystemParams, alpha: f64, t_d: usize) -> Result<EnergySplit> {
    let max = params.max_data_duration();
    if t_d < 1 || t_d > max {
        return Err(Error::InfeasibleDuration { t_d: t_d as f64, max });
    }
    EnergySplit::continuous(params, alpha, t_d as f64)
}

/// Equal power in both phases with `T_tau = K`.
pub fn equal_power_split(params: &SystemParams) -> Result<EnergySplit> {
    let alpha = params.users as f64 / params.coherence as f64;
    make_split(params, alpha, params.max_data_duration())
}

/// Per-user large-scale gains `p_k` (power gains of the channel columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    gains: Vec<f64>,
}

impl FadingProfile {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidParams("fading profile is empty".into()));
        }
        if let Some(bad) = gains.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParams(format!("fading gains must be positive, got {bad}")));
        }
        Ok(Self { gains })
    }

    pub fn uniform(users: usize) -> Self {
        Self { gains: vec![1.0; users] }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub(crate) fn check_users(&self, users: usize) -> Result<()> {
        if self.gains.len() != users {
            return Err(Error::InvalidParams(format!(
                "fading profile has {} gains for {users} users",
                self.gains.len()
            )));
        }
        Ok(())
    }
}

/// Entry variances of the channel estimate, its error, and the equivalent noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStats {
    pub var_hat: f64,
    pub var_err: f64,
    pub var_noise: f64,
}

pub fn estimator_stats(split: &EnergySplit, users: usize) -> EstimatorStats {
    let e = split.energy;
    if e.is_infinite() {
        return EstimatorStats {
            var_hat: 1.0,
            var_err: 0.0,
            var_noise: 1.0,
        };
    }
    // The larger variance is taken as the complement of the smaller one, so
    // both stay accurate and their sum rounds to exactly one.
    let (var_hat, var_err) = if e >= 1.0 {
        let err = 1.0 / (e + 1.0);
        (1.0 - err, err)
    } else {
        let hat = e / (e + 1.0);
        (hat, 1.0 - hat)
    };
    EstimatorStats {
        var_hat,
        var_err,
        var_noise: users as f64 * split.rho_d / (e + 1.0) + 1.0,
    }
}

/// `rho_eff = rho_d E / (K rho_d + E + 1)`.
pub fn effective_snr(split: &EnergySplit, users: usize) -> f64 {
    let (e, rho_d) = (split.energy, split.rho_d);
    if e == 0.0 || rho_d == 0.0 {
        return 0.0;
    }
    rho_d * e / (users as f64 * rho_d + e + 1.0)
}

/// Effective SNR of user `k` (1-based) under large-scale fading.
pub fn effective_snr_faded(split: &EnergySplit, fading: &FadingProfile, k: usize) -> Result<f64> {
    if k < 1 || k > fading.len() {
        return Err(Error::Domain(format!("user index {k} outside 1..={}", fading.len())));
    }
    Ok(faded_snrs(split, fading)[k - 1])
}

/// Effective SNRs of all users under large-scale fading.
pub fn faded_snrs(split: &EnergySplit, fading: &FadingProfile) -> Vec<f64> {
    let (e, rho_d) = (split.energy, split.rho_d);
    if e == 0.0 || rho_d == 0.0 {
        return vec![0.0; fading.len()];
    }
    let noise: f64 = fading.gains().iter().map(|&p| rho_d * p / (p * e + 1.0)).sum::<f64>() + 1.0;
    fading
        .gains()
        .iter()
        .map(|&p| rho_d * p * p * e / ((p * e + 1.0) * noise))
        .collect()
}
