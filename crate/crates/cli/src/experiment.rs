//! Expands a spec into rows and evaluates them.

use std::fmt;

use rayon::prelude::*;
use uplink_core::montecarlo::TrialConfig;
use uplink_core::{
    equal_power_split, joint_optimize, make_split, optimal_alpha, optimal_alpha_clipped, rate, run_campaign,
    CaseLabel, ReceiverKind, SystemParams,
};

use crate::spec::{ExperimentKind, ExperimentSpec, Scheme, SweepVar};

/// Stride between per-row Monte Carlo seeds.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub swept_value: f64,
    pub receiver: ReceiverKind,
    pub scheme: Scheme,
    pub sum_rate: f64,
    pub energy_efficiency: f64,
    pub alpha_star: f64,
    pub t_d_star: f64,
    pub case_label: Option<CaseLabel>,
    pub mc_rate: Option<f64>,
    pub mc_ci: Option<f64>,
}

/// A row that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFailure {
    pub swept_value: f64,
    pub receiver: ReceiverKind,
    pub scheme: Scheme,
    pub message: String,
}

impl fmt::Display for RowFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} at swept value {}: {}",
            self.receiver, self.scheme, self.swept_value, self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    /// Successful rows, in sweep order.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RowFailure>,
}

impl ExperimentOutput {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Task {
    index: usize,
    written: f64,
    linear: f64,
    receiver: ReceiverKind,
    scheme: Scheme,
}

/// System parameters at one sweep point.
pub fn params_at(spec: &ExperimentSpec, linear: f64) -> SystemParams {
    let mut p = spec.base;
    let mut ratio = spec.rho_max_ratio;
    match spec.sweep.var {
        SweepVar::Rho => p.rho = linear,
        SweepVar::RhoMaxRatio => ratio = Some(linear),
        SweepVar::Antennas => p.antennas = linear as usize,
        SweepVar::Users => p.users = linear as usize,
        SweepVar::Coherence => p.coherence = linear as usize,
    }
    if spec.kind == ExperimentKind::Asymptotic {
        p.rho /= (p.antennas as f64).sqrt();
    }
    p.rho_max = ratio.map(|r| r * p.rho);
    p
}

/// Evaluates every (sweep point, receiver, scheme) combination.
pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentOutput {
    let mut tasks = Vec::new();
    for (&written, &linear) in spec.sweep.written.iter().zip(&spec.sweep.linear) {
        for &receiver in &spec.receivers {
            for &scheme in &spec.schemes {
                tasks.push(Task {
                    index: tasks.len(),
                    written,
                    linear,
                    receiver,
                    scheme,
                });
            }
        }
    }
    let results: Vec<_> = tasks.par_iter().map(|task| evaluate(spec, task)).collect();
    let mut out = ExperimentOutput::default();
    for (task, result) in tasks.iter().zip(results) {
        match result {
            Ok(row) => out.rows.push(row),
            Err(message) => out.failures.push(RowFailure {
                swept_value: task.written,
                receiver: task.receiver,
                scheme: task.scheme,
                message,
            }),
        }
    }
    out
}

fn evaluate(spec: &ExperimentSpec, task: &Task) -> Result<ResultRow, String> {
    let params = params_at(spec, task.linear);
    params.validate().map_err(|e| e.to_string())?;
    let rx = task.receiver;
    let t_full = params.max_data_duration();
    let monte_carlo = spec.kind == ExperimentKind::MonteCarlo;

    let (split, report, case_label) = match task.scheme {
        Scheme::EqualPower => {
            let split = equal_power_split(&params).map_err(|e| e.to_string())?;
            (split, rate(&split, &params, rx), None)
        }
        Scheme::AvgOnly => {
            let alpha = optimal_alpha(&params, t_full, rx).map_err(|e| e.to_string())?;
            let split = make_split(&params, alpha, t_full).map_err(|e| e.to_string())?;
            (split, rate(&split, &params, rx), None)
        }
        Scheme::AvgAndPeak if spec.kind == ExperimentKind::Optimize => {
            let (alpha, _) = optimal_alpha_clipped(&params, t_full, rx).map_err(|e| e.to_string())?;
            let split = make_split(&params, alpha, t_full).map_err(|e| e.to_string())?;
            (split, rate(&split, &params, rx), None)
        }
        Scheme::AvgAndPeak => {
            let out = joint_optimize(&params, rx).map_err(|e| e.to_string())?;
            let schedule = out.schedule.as_ref().filter(|_| monte_carlo);
            if let Some(s) = schedule {
                let split = make_split(&params, s.alpha, s.t_d).map_err(|e| e.to_string())?;
                (split, Ok(s.rate.clone()), Some(out.case_label))
            } else {
                let split = uplink_core::EnergySplit::continuous(&params, out.alpha_star, out.t_d_star)
                    .map_err(|e| e.to_string())?;
                (split, Ok(out.rate), Some(out.case_label))
            }
        }
    };
    let report = report.map_err(|e| e.to_string())?;

    let (mc_rate, mc_ci) = if monte_carlo {
        let seed = spec.seed.wrapping_add((task.index as u64).wrapping_mul(SEED_STRIDE));
        let cfg = TrialConfig::new(params, split, rx, spec.n_blocks, seed);
        let mc = run_campaign(&cfg).map_err(|e| e.to_string())?;
        (Some(mc.mean_rate), Some(mc.rate_ci_halfwidth))
    } else {
        (None, None)
    };

    Ok(ResultRow {
        swept_value: task.written,
        receiver: rx,
        scheme: task.scheme,
        sum_rate: report.sum_rate,
        energy_efficiency: report.energy_efficiency,
        alpha_star: split.alpha,
        t_d_star: split.t_d,
        case_label,
        mc_rate,
        mc_ci,
    })
}
