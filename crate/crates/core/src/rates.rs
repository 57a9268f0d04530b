//! Closed-form achievable rates for MRC, ZF and MMSE receivers, plus the
//! DoF, power-scaling and large-antenna expressions built on them.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::link::{effective_snr, faded_snrs, EnergySplit, FadingProfile, SystemParams};
use crate::special::f_mmse_scaled;

/// Linear receiver applied to the data phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverKind {
    Mrc,
    Zf,
    Mmse,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::Mrc, ReceiverKind::Zf, ReceiverKind::Mmse];

    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::Mrc => "MRC",
            ReceiverKind::Zf => "ZF",
            ReceiverKind::Mmse => "MMSE",
        }
    }

    /// Checks the antenna/user relation the receiver needs.
    pub fn check_dimensions(self, params: &SystemParams) -> Result<()> {
        let (m, k) = (params.antennas, params.users);
        let (ok, relation) = match self {
            ReceiverKind::Mrc => (true, ">="),
            ReceiverKind::Zf => (m > k, ">"),
            ReceiverKind::Mmse => (m >= k, ">="),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension {
                receiver: self,
                relation,
                antennas: m,
                users: k,
            })
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrc" => Ok(ReceiverKind::Mrc),
            "zf" => Ok(ReceiverKind::Zf),
            "mmse" => Ok(ReceiverKind::Mmse),
            other => Err(Error::Domain(format!("unknown receiver '{other}'"))),
        }
    }
}

/// Rate of one configuration, in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sum_rate: f64,
    pub per_user_rate: Vec<f64>,
    /// Post-combining SNR per user. For MMSE this is the SNR of an AWGN
    /// link with the same per-user rate.
    pub snr_received: Vec<f64>,
    /// `sum_rate / rho`, zero when `rho = 0`.
    pub energy_efficiency: f64,
    /// `T_d / T`.
    pub prelog: f64,
    /// Set for MMSE with `K = M`, where linear MMSE cannot reach full DoF.
    pub dof_limited: bool,
}

impl RateReport {
    fn from_snrs(prelog: f64, snrs: Vec<f64>, rho: f64) -> Self {
        let per_user_rate: Vec<f64> = snrs.iter().map(|s| prelog * s.ln_1p() * std::f64::consts::LOG2_E).collect();
        let sum_rate = per_user_rate.iter().sum();
        Self {
            sum_rate,
            per_user_rate,
            snr_received: snrs,
            energy_efficiency: efficiency(sum_rate, rho),
            prelog,
            dof_limited: false,
        }
    }

    fn zero(prelog: f64, users: usize) -> Self {
        Self::from_snrs(prelog, vec![0.0; users], 0.0)
    }
}

fn efficiency(sum_rate: f64, rho: f64) -> f64 {
    if rho > 0.0 {
        sum_rate / rho
    } else {
        0.0
    }
}

/// Received SNR of each user under MRC.
pub fn snr_mrc(split: &EnergySplit, params: &SystemParams) -> f64 {
    let (e, rho_d) = (split.energy, split.rho_d);
    let (m, k) = (params.antennas as f64, params.users as f64);
    let signal = e * rho_d;
    if signal == 0.0 {
        return 0.0;
    }
    signal * (m - 1.0) / (signal * (k - 1.0) + k * rho_d + e + 1.0)
}

/// Received SNR of each user under ZF, `(M - K) rho_eff`.
pub fn snr_zf(split: &EnergySplit, params: &SystemParams) -> Result<f64> {
    ReceiverKind::Zf.check_dimensions(params)?;
    let (e, rho_d) = (split.energy, split.rho_d);
    let (m, k) = (params.antennas as f64, params.users as f64);
    if e * rho_d == 0.0 {
        return Ok(0.0);
    }
    Ok(e * rho_d * (m - k) / (k * rho_d + e + 1.0))
}

pub fn rate_mrc(split: &EnergySplit, params: &SystemParams) -> Result<RateReport> {
    params.validate()?;
    let snr = snr_mrc(split, params);
    Ok(RateReport::from_snrs(split.prelog(), vec![snr; params.users], params.rho))
}

pub fn rate_zf(split: &EnergySplit, params: &SystemParams) -> Result<RateReport> {
    params.validate()?;
    let snr = snr_zf(split, params)?;
    Ok(RateReport::from_snrs(split.prelog(), vec![snr; params.users], params.rho))
}

/// Sum rate with MMSE combining, from the ergodic log-det expression.
pub fn rate_mmse(split: &EnergySplit, params: &SystemParams) -> Result<RateReport> {
    params.validate()?;
    ReceiverKind::Mmse.check_dimensions(params)?;
    let (m, k) = (params.antennas, params.users);
    let prelog = split.prelog();
    let rho_eff = effective_snr(split, k);
    let mut report = if rho_eff == 0.0 {
        RateReport::zero(prelog, k)
    } else {
        // x = K / SNR with SNR = K rho_eff.
        let x = 1.0 / rho_eff;
        let full = f_mmse_scaled(m, k, x)?;
        let reduced = if k > 1 { f_mmse_scaled(m, k - 1, x)? } else { 0.0 };
        let nats = (full - reduced).max(0.0);
        let user_rate = prelog * nats * std::f64::consts::LOG2_E;
        let snr = nats.exp_m1();
        RateReport {
            sum_rate: k as f64 * user_rate,
            per_user_rate: vec![user_rate; k],
            snr_received: vec![snr; k],
            energy_efficiency: efficiency(k as f64 * user_rate, params.rho),
            prelog,
            dof_limited: false,
        }
    };
    report.dof_limited = k == m;
    Ok(report)
}

/// Dispatches on the receiver.
pub fn rate(split: &EnergySplit, params: &SystemParams, receiver: ReceiverKind) -> Result<RateReport> {
    match receiver {
        ReceiverKind::Mrc => rate_mrc(split, params),
        ReceiverKind::Zf => rate_zf(split, params),
        ReceiverKind::Mmse => rate_mmse(split, params),
    }
}

/// Per-user MRC rates under large-scale fading.
pub fn rate_mrc_faded(split: &EnergySplit, params: &SystemParams, fading: &FadingProfile) -> Result<RateReport> {
    params.validate()?;
    fading.check_users(params.users)?;
    let eff = faded_snrs(split, fading);
    let total: f64 = eff.iter().sum();
    let m = params.antennas as f64;
    let snrs = eff.iter().map(|&r| r * (m - 1.0) / (total - r + 1.0)).collect();
    Ok(RateReport::from_snrs(split.prelog(), snrs, params.rho))
}

/// Per-user ZF rates under large-scale fading.
pub fn rate_zf_faded(split: &EnergySplit, params: &SystemParams, fading: &FadingProfile) -> Result<RateReport> {
    params.validate()?;
    ReceiverKind::Zf.check_dimensions(params)?;
    fading.check_users(params.users)?;
    let gain = (params.antennas - params.users) as f64;
    let snrs = faded_snrs(split, fading).into_iter().map(|r| r * gain).collect();
    Ok(RateReport::from_snrs(split.prelog(), snrs, params.rho))
}

/// Total degrees of freedom `K'(1 - K'/T)` with `K' = min(M, K, floor(T/2))`.
pub fn dof(antennas: u64, users: u64, coherence: u64) -> Result<Ratio<u64>> {
    if antennas == 0 || users == 0 || coherence == 0 {
        return Err(Error::Domain("dof needs positive M, K and T".into()));
    }
    let k = antennas.min(users).min(coherence / 2);
    Ok(Ratio::new(k * (coherence - k), coherence))
}

/// Leading-order power giving the per-user SNR `rho0` with ZF or MRC as `M` grows.
pub fn power_for_rate(target_rho0: f64, antennas: usize, users: usize, coherence: usize) -> Result<f64> {
    if !(target_rho0 > 0.0) || antennas == 0 || users >= coherence {
        return Err(Error::Domain("power_for_rate needs rho0 > 0, M > 0 and K < T".into()));
    }
    let (m, k, t) = (antennas as f64, users as f64, coherence as f64);
    Ok((4.0 * target_rho0 * (t - k) / (m * t * t)).sqrt())
}

fn check_asymptotic(params: &SystemParams, t_d: f64, rho_u: f64) -> Result<()> {
    if !(t_d > 0.0) || t_d > params.coherence as f64 {
        return Err(Error::InfeasibleDuration {
            t_d,
            max: params.coherence,
        });
    }
    if !(rho_u >= 0.0) || !rho_u.is_finite() {
        return Err(Error::Domain(format!("rho_u must be finite and >= 0, got {rho_u}")));
    }
    Ok(())
}

/// Large-`M` rate with `rho = rho_u / sqrt(M)` and the optimal split.
///
/// `T_d` may range over `(0, T]` so the limiting prelog-one case is expressible.
pub fn rate_asymptotic(params: &SystemParams, t_d: f64, rho_u: f64) -> Result<f64> {
    check_asymptotic(params, t_d, rho_u)?;
    let (k, t) = (params.users as f64, params.coherence as f64);
    Ok(t_d / t * k * (rho_u * rho_u * t * t / (4.0 * t_d)).ln_1p() * std::f64::consts::LOG2_E)
}

/// Large-`M` rate gain of the optimal split over equal power at the same `T_d`.
pub fn rate_gain_vs_equal_power(params: &SystemParams, t_d: f64, rho_u: f64) -> Result<f64> {
    check_asymptotic(params, t_d, rho_u)?;
    let (k, t) = (params.users as f64, params.coherence as f64);
    let r2 = rho_u * rho_u;
    // num - den = r2 (T - 2 T_d)^2, written out to keep the ratio >= 1 in floating point.
    let den = 4.0 * t_d + 4.0 * t_d * (t - t_d) * r2;
    let excess = r2 * (t - 2.0 * t_d).powi(2);
    Ok(t_d / t * k * (excess / den).ln_1p() * std::f64::consts::LOG2_E)
}
