//! Training-energy optimization: the closed-form split for a fixed data
//! duration, clipping under a peak-power limit, and the joint `(alpha, T_d)`
//! problem.

use std::fmt;

use crate::error::{Error, Result};
use crate::link::{effective_snr, make_split, EnergySplit, SystemParams};
use crate::rates::{rate, snr_mrc, RateReport, ReceiverKind};

/// Absolute `alpha` tolerance of the slab search.
pub const SEARCH_TOLERANCE: f64 = 1e-10;
/// Iteration cap of the slab search.
pub const SEARCH_MAX_ITER: usize = 200;
/// Slack allowed when an empty peak-power interval is really a single point.
const COLLAPSE_SLACK: f64 = 1e-12;

/// Which constraint shapes the joint optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// Training power sits at the peak; the optimum lies on the slab line.
    PeakTraining,
    /// Data power sits at the peak with `T_d = T - K`.
    PeakData,
    /// Neither peak binds.
    Interior,
}

impl CaseLabel {
    pub fn number(self) -> u8 {
        match self {
            CaseLabel::PeakTraining => 1,
            CaseLabel::PeakData => 2,
            CaseLabel::Interior => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::PeakTraining => "Case1-peak-training",
            CaseLabel::PeakData => "Case2-peak-data",
            CaseLabel::Interior => "Case3-interior",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Admissible training fractions for a fixed `T_d` under the peak limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FeasibleInterval {
    pub fn contains(&self, alpha: f64) -> bool {
        (self.lo..=self.hi).contains(&alpha)
    }

    /// Nearest admissible point and whether it moved.
    pub fn project(&self, alpha: f64) -> (f64, bool) {
        if alpha < self.lo {
            (self.lo, true)
        } else if alpha > self.hi {
            (self.hi, true)
        } else {
            (alpha, false)
        }
    }
}

/// Integral-duration schedule derived from a continuous optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerSchedule {
    pub alpha: f64,
    pub t_d: usize,
    pub rate: RateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub alpha_star: f64,
    /// Continuous on the slab line, integral otherwise.
    pub t_d_star: f64,
    pub case_label: CaseLabel,
    /// Peak limit moved the fixed-`T_d` optimum.
    pub clipped: bool,
    pub rate: RateReport,
    /// Search iterations, zero for closed forms.
    pub iterations: usize,
    /// Best integral schedule next to the optimum; absent for large-`M` limits.
    pub schedule: Option<IntegerSchedule>,
}

impl OptimizationOutcome {
    /// `(training peak binds, data peak binds)`.
    pub fn binding_constraints(&self) -> (bool, bool) {
        match self.case_label {
            CaseLabel::PeakTraining => (true, false),
            CaseLabel::PeakData => (false, true),
            CaseLabel::Interior => (false, false),
        }
    }
}

fn check_duration(params: &SystemParams, t_d: usize) -> Result<()> {
    params.validate()?;
    let max = params.max_data_duration();
    if t_d < 1 || t_d > max {
        return Err(Error::InfeasibleDuration { t_d: t_d as f64, max });
    }
    Ok(())
}

/// Maximizer of `rho_eff` over `alpha` for a (possibly fractional) `T_d`.
///
/// Written as `1 / (1 + sqrt(B / A))` with `A = rho T K + T_d` and
/// `B = rho T T_d + T_d`, which has no cancellation and is exactly 1/2 at `T_d = K`.
fn unconstrained_alpha(params: &SystemParams, t_d: f64) -> f64 {
    let rt = params.energy_budget();
    let a = rt * params.users as f64 + t_d;
    let b = rt * t_d + t_d;
    1.0 / (1.0 + (b / a).sqrt())
}

/// Optimal split for ZF at fixed `T_d`, with the resulting `rho_eff`.
pub fn optimal_alpha_zf(params: &SystemParams, t_d: usize) -> Result<(f64, f64)> {
    check_duration(params, t_d)?;
    let alpha = unconstrained_alpha(params, t_d as f64);
    let rt = params.energy_budget();
    if rt == 0.0 {
        return Ok((alpha, 0.0));
    }
    let k = params.users as f64;
    let td = t_d as f64;
    let rho_eff = if t_d == params.users {
        rt * rt / (4.0 * k * (1.0 + rt))
    } else {
        let gamma = (k * rt + td) / (rt * (td - k));
        if t_d > params.users {
            let s = (gamma + 1.0).sqrt() + gamma.sqrt();
            rt / (td - k) / (s * s)
        } else {
            let g = -gamma;
            let s = g.sqrt() + (g - 1.0).sqrt();
            rt / (k - td) / (s * s)
        }
    };
    Ok((alpha, rho_eff))
}

/// `(a_1, b_1)` with `SNR_MRC = (M-1)/(K-1) * a(a-1)/(a^2 - a_1 a - b_1)`; needs `K >= 2`.
pub fn mrc_snr_coefficients(params: &SystemParams, t_d: f64) -> Result<(f64, f64)> {
    let rt = params.energy_budget();
    if params.users < 2 || rt == 0.0 {
        return Err(Error::Domain("MRC shape coefficients need K >= 2 and rho > 0".into()));
    }
    let k = params.users as f64;
    let a1 = 1.0 + (t_d - k) / (rt * (k - 1.0));
    let b1 = (rt * k + t_d) / (rt * rt * (k - 1.0));
    Ok((a1, b1))
}

/// Optimal split for MRC at fixed `T_d`, with the resulting received SNR.
pub fn optimal_alpha_mrc(params: &SystemParams, t_d: usize) -> Result<(f64, f64)> {
    check_duration(params, t_d)?;
    if let Ok((a1, b1)) = mrc_snr_coefficients(params, t_d as f64) {
        debug_assert!(1.0 - a1 - b1 <= 1e-12 * (a1.abs() + b1));
    }
    let alpha = unconstrained_alpha(params, t_d as f64);
    let split = make_split(params, alpha, t_d)?;
    Ok((alpha, snr_mrc(&split, params)))
}

/// Optimal split at fixed `T_d`; every receiver's rate is increasing in `rho_eff`.
pub fn optimal_alpha(params: &SystemParams, t_d: usize, receiver: ReceiverKind) -> Result<f64> {
    receiver.check_dimensions(params)?;
    check_duration(params, t_d)?;
    Ok(unconstrained_alpha(params, t_d as f64))
}

fn peak_of(params: &SystemParams) -> Result<f64> {
    params
        .rho_max
        .ok_or_else(|| Error::InvalidParams("peak power rho_max is not set".into()))
}

fn interval_for(params: &SystemParams, t_d: f64, peak: f64) -> Result<FeasibleInterval> {
    if params.rho == 0.0 {
        return Ok(FeasibleInterval { lo: 0.0, hi: 1.0 });
    }
    let t = params.coherence as f64;
    let ratio = peak / params.rho;
    let t_tau = t - t_d;
    let lo = (ratio * t_tau / t + 1.0 - ratio).max(0.0);
    let hi = (ratio * t_tau / t).min(1.0);
    if lo <= hi {
        Ok(FeasibleInterval { lo, hi })
    } else if lo - hi <= COLLAPSE_SLACK {
        Ok(FeasibleInterval { lo: hi, hi })
    } else {
        Err(Error::EmptyInterval { lo, hi })
    }
}

/// Range of `alpha` satisfying both peak constraints at fixed `T_d`.
pub fn feasible_alpha_interval(params: &SystemParams, t_d: usize) -> Result<FeasibleInterval> {
    check_duration(params, t_d)?;
    interval_for(params, t_d as f64, peak_of(params)?)
}

/// Fixed-`T_d` optimum projected onto the peak-power interval.
///
/// `rho_eff` is concave in `alpha`, so the projection is the constrained optimum.
pub fn optimal_alpha_clipped(params: &SystemParams, t_d: usize, receiver: ReceiverKind) -> Result<(f64, bool)> {
    let alpha = optimal_alpha(params, t_d, receiver)?;
    Ok(feasible_alpha_interval(params, t_d)?.project(alpha))
}

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section maximization of a quasiconcave function on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> LineSearch {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > tol && iterations < max_iter {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // Endpoints are admissible too; keep whichever sample is best.
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    LineSearch {
        x: best.0,
        value: best.1,
        iterations,
    }
}

/// Quadratic coefficients of the received SNR along the line
/// `T_d = T - rho T alpha / rho_max`:
/// `SNR = gain * a(a - 1) / (quad a^2 - lin a - constant)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabCoefficients {
    pub gain: f64,
    pub quad: f64,
    pub lin: f64,
    pub constant: f64,
}

pub fn slab_coefficients(params: &SystemParams, receiver: ReceiverKind) -> Result<SlabCoefficients> {
    receiver.check_dimensions(params)?;
    let peak = peak_of(params)?;
    let (m, k, t, rho) = (
        params.antennas as f64,
        params.users as f64,
        params.coherence as f64,
        params.rho,
    );
    let rt = rho * t;
    let rt2 = rt * rt;
    let (interference, gain) = match receiver {
        ReceiverKind::Mrc => (rt2 * (k - 1.0), rt2 * (m - 1.0)),
        ReceiverKind::Zf => (0.0, rt2 * (m - k)),
        ReceiverKind::Mmse => {
            return Err(Error::Unsupported {
                operation: "slab objective",
                receiver,
            })
        }
    };
    Ok(SlabCoefficients {
        gain,
        quad: interference + rt2 / peak,
        lin: interference + rho * t * t - rt * k - rt / peak,
        constant: k * rt + t,
    })
}

impl SlabCoefficients {
    pub fn snr(&self, alpha: f64) -> f64 {
        let num = self.gain * alpha * (alpha - 1.0);
        if num == 0.0 {
            return 0.0;
        }
        num / (self.quad * alpha * alpha - self.lin * alpha - self.constant)
    }
}

/// Sum rate along the slab line at training fraction `alpha`.
pub fn slab_rate(params: &SystemParams, coeffs: &SlabCoefficients, alpha: f64) -> Result<f64> {
    let peak = peak_of(params)?;
    let prelog = 1.0 - params.rho * alpha / peak;
    if prelog <= 0.0 {
        return Ok(0.0);
    }
    Ok(params.users as f64 * prelog * coeffs.snr(alpha).ln_1p() * std::f64::consts::LOG2_E)
}

fn best_integer_schedule(params: &SystemParams, t_d: f64, receiver: ReceiverKind) -> Result<IntegerSchedule> {
    let max = params.max_data_duration();
    let mut best: Option<IntegerSchedule> = None;
    let floor = t_d.floor() as usize;
    for cand in [floor, floor + 1] {
        if cand < 1 || cand > max {
            continue;
        }
        let (alpha, _) = optimal_alpha_clipped(params, cand, receiver)?;
        let report = rate(&make_split(params, alpha, cand)?, params, receiver)?;
        if best.as_ref().is_none_or(|b| report.sum_rate > b.rate.sum_rate) {
            best = Some(IntegerSchedule {
                alpha,
                t_d: cand,
                rate: report,
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no integral data duration near {t_d}")))
}

/// Jointly optimal training fraction and data duration under average and
/// peak power, for MRC or ZF.
pub fn joint_optimize(params: &SystemParams, receiver: ReceiverKind) -> Result<OptimizationOutcome> {
    if receiver == ReceiverKind::Mmse {
        return Err(Error::Unsupported {
            operation: "joint optimization",
            receiver,
        });
    }
    if let Some(peak) = params.rho_max {
        if peak < params.rho {
            return Err(Error::Infeasible(format!(
                "rho_max = {peak} below rho = {} leaves no feasible schedule",
                params.rho
            )));
        }
    }
    params.validate()?;
    receiver.check_dimensions(params)?;

    let t = params.coherence as f64;
    let k = params.users as f64;
    let t_full = params.max_data_duration();
    let alpha_dag = unconstrained_alpha(params, t_full as f64);

    let interior = |alpha: f64, case_label: CaseLabel| -> Result<OptimizationOutcome> {
        let report = rate(&make_split(params, alpha, t_full)?, params, receiver)?;
        Ok(OptimizationOutcome {
            alpha_star: alpha,
            t_d_star: t_full as f64,
            case_label,
            clipped: case_label != CaseLabel::Interior,
            schedule: Some(IntegerSchedule {
                alpha,
                t_d: t_full,
                rate: report.clone(),
            }),
            rate: report,
            iterations: 0,
        })
    };

    let peak = match params.rho_max {
        Some(peak) if params.rho > 0.0 => peak,
        _ => return interior(alpha_dag, CaseLabel::Interior),
    };
    let rt = params.energy_budget();
    let alpha_1 = peak * k / rt;
    let alpha_2 = 1.0 - peak * (t - k) / rt;

    if alpha_1 < alpha_dag {
        let coeffs = slab_coefficients(params, receiver)?;
        let search = golden_section_max(
            |a| slab_rate(params, &coeffs, a).unwrap_or(f64::NEG_INFINITY),
            alpha_1,
            1.0,
            SEARCH_TOLERANCE,
            SEARCH_MAX_ITER,
        );
        let alpha = search.x;
        let t_d = (t - rt * alpha / peak).min(t_full as f64);
        let split = EnergySplit::continuous(params, alpha, t_d)?;
        Ok(OptimizationOutcome {
            alpha_star: alpha,
            t_d_star: t_d,
            case_label: CaseLabel::PeakTraining,
            clipped: true,
            rate: rate(&split, params, receiver)?,
            iterations: search.iterations,
            schedule: Some(best_integer_schedule(params, t_d, receiver)?),
        })
    } else if alpha_2 > alpha_dag {
        interior(alpha_2, CaseLabel::PeakData)
    } else {
        interior(alpha_dag, CaseLabel::Interior)
    }
}

/// Joint optimum as `M -> infinity` with `rho = rho_u / sqrt(M)` and
/// `rho_max = rho / xi`. MRC and ZF coincide in this limit.
///
/// The report's `energy_efficiency` is per unit of `rho_u`.
pub fn joint_optimize_asymptotic(xi: f64, rho_u: f64, users: usize, coherence: usize) -> Result<OptimizationOutcome> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::Domain(format!("xi must lie in (0, 1], got {xi}")));
    }
    if !(rho_u > 0.0) || !rho_u.is_finite() {
        return Err(Error::Domain(format!("rho_u must be positive, got {rho_u}")));
    }
    if users == 0 || users >= coherence {
        return Err(Error::InvalidParams(format!("need 0 < K < T (K = {users}, T = {coherence})")));
    }
    let (k, t) = (users as f64, coherence as f64);
    let r2 = rho_u * rho_u;
    let alpha_1 = k / (xi * t);
    let alpha_2 = 1.0 - (t - k) / (xi * t);

    let report = |prelog: f64, snr: f64| -> RateReport {
        let user_rate = prelog * snr.ln_1p() * std::f64::consts::LOG2_E;
        RateReport {
            sum_rate: k * user_rate,
            per_user_rate: vec![user_rate; users],
            snr_received: vec![snr; users],
            energy_efficiency: k * user_rate / rho_u,
            prelog,
            dof_limited: false,
        }
    };
    let fixed = |alpha: f64, snr: f64, case_label: CaseLabel| OptimizationOutcome {
        alpha_star: alpha,
        t_d_star: t - k,
        case_label,
        clipped: case_label != CaseLabel::Interior,
        rate: report((t - k) / t, snr),
        iterations: 0,
        schedule: None,
    };

    if alpha_1 < 0.5 {
        let snr_at = |a: f64| {
            if a >= 1.0 {
                0.0
            } else {
                a * (a - 1.0) * r2 * t / (xi * a - 1.0)
            }
        };
        let search = golden_section_max(
            |a| k * (1.0 - xi * a) * snr_at(a).ln_1p(),
            alpha_1,
            1.0,
            SEARCH_TOLERANCE,
            SEARCH_MAX_ITER,
        );
        let alpha = search.x;
        Ok(OptimizationOutcome {
            alpha_star: alpha,
            t_d_star: t * (1.0 - xi * alpha),
            case_label: CaseLabel::PeakTraining,
            clipped: true,
            rate: report(1.0 - xi * alpha, snr_at(alpha)),
            iterations: search.iterations,
            schedule: None,
        })
    } else if alpha_2 > 0.5 {
        Ok(fixed(alpha_2, alpha_2 * r2 * t / xi, CaseLabel::PeakData))
    } else {
        Ok(fixed(0.5, r2 * t * t / (4.0 * (t - k)), CaseLabel::Interior))
    }
}

/// `rho_eff` at the optimal split for every feasible `T_d`; used by sweeps.
pub fn optimal_effective_snr(params: &SystemParams, t_d: usize) -> Result<f64> {
    check_duration(params, t_d)?;
    let alpha = unconstrained_alpha(params, t_d as f64);
    Ok(effective_snr(&make_split(params, alpha, t_d)?, params.users))
}
