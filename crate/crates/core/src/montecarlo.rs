//! Block-fading simulation of the two-phase protocol: pilots, MMSE channel
//! estimation, linear combining, and per-user SINR.
//!
//! Every block draws from its own ChaCha substream keyed by the block index,
//! so a campaign's result depends only on the seed and never on scheduling.

use std::f64::consts::{FRAC_1_SQRT_2, LOG2_E};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::{EnergySplit, FadingProfile, SystemParams};
use crate::rates::ReceiverKind;

/// A Gram matrix whose singular-value ratio falls below this is resampled.
pub const SINGULARITY_RATIO: f64 = 1e-10;
/// Attempts per block before giving up on a singular estimate.
pub const MAX_ATTEMPTS: u32 = 16;
/// Blocks folded sequentially per parallel task.
const CHUNK: u64 = 512;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub params: SystemParams,
    pub split: EnergySplit,
    pub receiver: ReceiverKind,
    pub fading: Option<FadingProfile>,
    pub n_blocks: u64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(params: SystemParams, split: EnergySplit, receiver: ReceiverKind, n_blocks: u64, seed: u64) -> Self {
        Self {
            params,
            split,
            receiver,
            fading: None,
            n_blocks,
            seed,
        }
    }

    pub fn with_fading(mut self, fading: FadingProfile) -> Self {
        self.fading = Some(fading);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::InvalidTrial(e.to_string()))?;
        self.receiver.check_dimensions(&self.params)?;
        if self.n_blocks == 0 {
            return Err(Error::InvalidTrial("n_blocks must be at least 1".into()));
        }
        if !(self.split.energy > 0.0) || !self.split.energy.is_finite() {
            return Err(Error::InvalidTrial(format!(
                "training energy must be positive, got {}",
                self.split.energy
            )));
        }
        if !(self.split.rho_d > 0.0) || !self.split.rho_d.is_finite() {
            return Err(Error::InvalidTrial(format!("data power must be positive, got {}", self.split.rho_d)));
        }
        if let Some(fading) = &self.fading {
            if fading.len() != self.params.users {
                return Err(Error::InvalidTrial(format!(
                    "fading profile has {} gains for {} users",
                    fading.len(),
                    self.params.users
                )));
            }
        }
        Ok(())
    }

    fn gains(&self) -> Vec<f64> {
        match &self.fading {
            Some(f) => f.gains().to_vec(),
            None => vec![1.0; self.params.users],
        }
    }

    /// Variance of the equivalent noise, `rho_d sum_i var(err_i) + 1`.
    pub fn equivalent_noise_variance(&self) -> f64 {
        let e = self.split.energy;
        let err: f64 = self.gains().iter().map(|p| p / (p * e + 1.0)).sum();
        self.split.rho_d * err + 1.0
    }
}

/// Outcome of one simulated coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    pub sinr: Vec<f64>,
    /// `sum_k log2(1 + SINR_k)`, before the prelog.
    pub rate: f64,
    /// `sum |h_hat|^2` over all entries.
    pub hat_energy: f64,
    /// `sum |h_err|^2` over all entries.
    pub err_energy: f64,
    /// `sum h_hat * conj(h_err)` over all entries.
    pub cross: Complex64,
    pub cross_re_sq: f64,
    pub cross_im_sq: f64,
    /// `sum |v|^2` over the antennas of one data slot.
    pub noise_energy: f64,
    pub resamples: u32,
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // Column-major fill keeps the draw order fixed.
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Matched filter `A = H_hat^H`.
pub fn mrc_combiner(estimate: &CMatrix) -> CMatrix {
    estimate.adjoint()
}

/// Pseudo-inverse `A = (H_hat^H H_hat)^{-1} H_hat^H`.
pub fn zf_combiner(estimate: &CMatrix) -> Option<CMatrix> {
    let gram = estimate.adjoint() * estimate;
    gram.cholesky().map(|c| c.solve(&estimate.adjoint()))
}

/// Regularized inverse `A = (H_hat^H H_hat + (noise_var / data_power) I)^{-1} H_hat^H`.
pub fn mmse_combiner(estimate: &CMatrix, noise_var: f64, data_power: f64) -> Result<CMatrix> {
    if !(noise_var > 0.0) || !(data_power > 0.0) {
        return Err(Error::Domain(format!(
            "MMSE combiner needs positive noise and data power (got {noise_var}, {data_power})"
        )));
    }
    let k = estimate.ncols();
    let mut gram = estimate.adjoint() * estimate;
    let load = Complex64::new(noise_var / data_power, 0.0);
    for i in 0..k {
        gram[(i, i)] += load;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Domain("regularized Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&estimate.adjoint()))
}

/// Per-user SINR of combiner rows `A` against the estimated channel, with
/// estimation error and noise lumped into white noise of variance `noise_var`.
pub fn combiner_sinr(combiner: &CMatrix, estimate: &CMatrix, data_power: f64, noise_var: f64) -> Vec<f64> {
    let coupling = combiner * estimate;
    (0..estimate.ncols())
        .map(|k| {
            let row_norm: f64 = combiner.row(k).iter().map(|z| z.norm_sqr()).sum();
            let signal = data_power * coupling[(k, k)].norm_sqr();
            let interference: f64 = (0..estimate.ncols())
                .filter(|&i| i != k)
                .map(|i| coupling[(k, i)].norm_sqr())
                .sum::<f64>()
                * data_power;
            let denom = interference + noise_var * row_norm;
            if denom > 0.0 {
                signal / denom
            } else {
                0.0
            }
        })
        .collect()
}

fn is_well_conditioned(estimate: &CMatrix) -> bool {
    let sv = estimate.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min >= SINGULARITY_RATIO * max
}

fn block_rng(seed: u64, block: u64, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block | (u64::from(attempt) << 48));
    rng
}

/// Simulates block `block_index` of a campaign.
pub fn simulate_block(config: &TrialConfig, block_index: u64) -> Result<BlockSample> {
    config.validate()?;
    simulate_validated(config, block_index)
}

fn simulate_validated(config: &TrialConfig, block_index: u64) -> Result<BlockSample> {
    let (m, k) = (config.params.antennas, config.params.users);
    let (e, rho_d) = (config.split.energy, config.split.rho_d);
    let gains = config.gains();
    let noise_var = config.equivalent_noise_variance();
    let sqrt_e = e.sqrt();

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = block_rng(config.seed, block_index, attempt);
        let mut channel = gaussian_matrix(&mut rng, m, k);
        for (col, p) in gains.iter().enumerate() {
            channel.column_mut(col).scale_mut(p.sqrt());
        }
        let pilot_noise = gaussian_matrix(&mut rng, m, k);
        let observed = channel.scale(sqrt_e) + pilot_noise;
        let mut estimate = observed;
        for (col, p) in gains.iter().enumerate() {
            estimate.column_mut(col).scale_mut(p * sqrt_e / (p * e + 1.0));
        }

        let combiner = match config.receiver {
            ReceiverKind::Mrc => mrc_combiner(&estimate),
            ReceiverKind::Zf => {
                if !is_well_conditioned(&estimate) {
                    continue;
                }
                match zf_combiner(&estimate) {
                    Some(a) => a,
                    None => continue,
                }
            }
            ReceiverKind::Mmse => mmse_combiner(&estimate, noise_var, rho_d)?,
        };
        let sinr = combiner_sinr(&combiner, &estimate, rho_d, noise_var);
        let rate = sinr.iter().map(|s| s.ln_1p() * LOG2_E).sum();

        let error = &channel - &estimate;
        let mut cross = Complex64::new(0.0, 0.0);
        let (mut cross_re_sq, mut cross_im_sq) = (0.0, 0.0);
        for (h, d) in estimate.iter().zip(error.iter()) {
            let z = h * d.conj();
            cross += z;
            cross_re_sq += z.re * z.re;
            cross_im_sq += z.im * z.im;
        }

        // One data slot through the equivalent channel: v = sqrt(rho_d) H_err s + n.
        let symbols = gaussian_matrix(&mut rng, k, 1);
        let thermal = gaussian_matrix(&mut rng, m, 1);
        let equivalent = (&error * symbols).scale(rho_d.sqrt()) + thermal;

        return Ok(BlockSample {
            sinr,
            rate,
            hat_energy: estimate.iter().map(|z| z.norm_sqr()).sum(),
            err_energy: error.iter().map(|z| z.norm_sqr()).sum(),
            cross,
            cross_re_sq,
            cross_im_sq,
            noise_energy: equivalent.iter().map(|z| z.norm_sqr()).sum(),
            resamples: attempt,
        });
    }
    Err(Error::SingularGram {
        block: block_index,
        attempts: MAX_ATTEMPTS,
    })
}

/// Mean and variance of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    /// `prelog * mean_blocks sum_k log2(1 + SINR_k)`.
    pub mean_rate: f64,
    /// 95% normal-approximation half-width of `mean_rate`.
    pub rate_ci_halfwidth: f64,
    pub est_var_hat: f64,
    pub est_var_err: f64,
    /// Mean of `h_hat * conj(h_err)` over all entries.
    pub cross_mean: Complex64,
    /// Standard error of `cross_mean`, componentwise.
    pub cross_se: Complex64,
    /// Empirical per-antenna variance of the equivalent noise.
    pub noise_var: f64,
    /// Per-user post-combining SINR over all blocks and users.
    pub sinr: SampleSummary,
    pub blocks: u64,
    pub resamples: u64,
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    blocks: u64,
    rate: f64,
    rate_sq: f64,
    hat: f64,
    err: f64,
    cross: Complex64,
    cross_re_sq: f64,
    cross_im_sq: f64,
    noise: f64,
    sinr: f64,
    sinr_sq: f64,
    sinr_count: u64,
    resamples: u64,
}

impl Accumulator {
    fn push(&mut self, s: &BlockSample) {
        self.blocks += 1;
        self.rate += s.rate;
        self.rate_sq += s.rate * s.rate;
        self.hat += s.hat_energy;
        self.err += s.err_energy;
        self.cross += s.cross;
        self.cross_re_sq += s.cross_re_sq;
        self.cross_im_sq += s.cross_im_sq;
        self.noise += s.noise_energy;
        for &x in &s.sinr {
            self.sinr += x;
            self.sinr_sq += x * x;
        }
        self.sinr_count += s.sinr.len() as u64;
        self.resamples += u64::from(s.resamples);
    }

    fn merge(&mut self, o: &Accumulator) {
        self.blocks += o.blocks;
        self.rate += o.rate;
        self.rate_sq += o.rate_sq;
        self.hat += o.hat;
        self.err += o.err;
        self.cross += o.cross;
        self.cross_re_sq += o.cross_re_sq;
        self.cross_im_sq += o.cross_im_sq;
        self.noise += o.noise;
        self.sinr += o.sinr;
        self.sinr_sq += o.sinr_sq;
        self.sinr_count += o.sinr_count;
        self.resamples += o.resamples;
    }
}

fn sample_variance(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
}

/// Runs `n_blocks` independent blocks in parallel and aggregates them in
/// block order.
pub fn run_campaign(config: &TrialConfig) -> Result<EmpiricalReport> {
    config.validate()?;
    let n = config.n_blocks;
    let chunks: Vec<Accumulator> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::default();
            for b in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.push(&simulate_validated(config, b)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Accumulator::default();
    for c in &chunks {
        total.merge(c);
    }

    let nb = total.blocks as f64;
    let entries = nb * (config.params.antennas * config.params.users) as f64;
    let prelog = config.split.prelog();
    let rate_sd = sample_variance(total.rate, total.rate_sq, nb).sqrt();
    let sinr_n = total.sinr_count as f64;
    Ok(EmpiricalReport {
        mean_rate: prelog * total.rate / nb,
        rate_ci_halfwidth: 1.96 * rate_sd / nb.sqrt() * prelog,
        est_var_hat: total.hat / entries,
        est_var_err: total.err / entries,
        cross_mean: total.cross / entries,
        cross_se: Complex64::new(
            sample_variance(total.cross.re, total.cross_re_sq, entries).sqrt() / entries.sqrt(),
            sample_variance(total.cross.im, total.cross_im_sq, entries).sqrt() / entries.sqrt(),
        ),
        noise_var: total.noise / (nb * config.params.antennas as f64),
        sinr: SampleSummary {
            mean: total.sinr / sinr_n,
            variance: sample_variance(total.sinr, total.sinr_sq, sinr_n),
        },
        blocks: total.blocks,
        resamples: total.resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{estimator_stats, make_split};

    fn config(m: usize, k: usize, rho: f64, alpha: f64, rx: ReceiverKind, blocks: u64) -> TrialConfig {
        let p = SystemParams::new(m, k, 196, rho).unwrap();
        let s = make_split(&p, alpha, 196 - k).unwrap();
        TrialConfig::new(p, s, rx, blocks, 7)
    }

    fn random_estimate(m: usize, k: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gaussian_matrix(&mut rng, m, k)
    }

    #[test]
    fn rejects_degenerate_configs() {
        let c = config(20, 4, 1.0, 0.0, ReceiverKind::Mrc, 10);
        assert!(matches!(run_campaign(&c), Err(Error::InvalidTrial(_))));
        let c = config(20, 4, 1.0, 1.0, ReceiverKind::Mrc, 10);
        assert!(run_campaign(&c).is_err());
        let c = config(20, 4, 1.0, 0.3, ReceiverKind::Mrc, 0);
        assert!(run_campaign(&c).is_err());
        let c = config(4, 4, 1.0, 0.3, ReceiverKind::Zf, 10);
        assert!(matches!(run_campaign(&c), Err(Error::Dimension { .. })));
    }

    #[test]
    fn reruns_are_bit_identical() {
        for rx in ReceiverKind::ALL {
            let c = config(20, 4, 1.0, 0.3, rx, 1500);
            assert_eq!(run_campaign(&c).unwrap(), run_campaign(&c).unwrap());
            assert_eq!(simulate_block(&c, 3).unwrap(), simulate_block(&c, 3).unwrap());
        }
    }

    #[test]
    fn blocks_use_distinct_streams() {
        let c = config(8, 2, 1.0, 0.3, ReceiverKind::Mrc, 10);
        assert_ne!(simulate_block(&c, 0).unwrap(), simulate_block(&c, 1).unwrap());
        let other = TrialConfig { seed: 8, ..c.clone() };
        assert_ne!(simulate_block(&c, 0).unwrap(), simulate_block(&other, 0).unwrap());
    }

    #[test]
    fn perfect_csi_single_user() {
        // Huge pilot energy: SINR ~ rho_d |h|^2 with mean rho_d M.
        let p = SystemParams::new(16, 1, 196, 1.0).unwrap();
        let mut s = make_split(&p, 0.5, 195).unwrap();
        s.energy = 1e8;
        let c = TrialConfig::new(p, s, ReceiverKind::Mrc, 4000, 1);
        let r = run_campaign(&c).unwrap();
        let target = s.rho_d * 16.0;
        let se = (r.sinr.variance / 4000.0).sqrt();
        assert!((r.sinr.mean - target).abs() < 3.0 * se, "{} vs {target} (se {se})", r.sinr.mean);
    }

    #[test]
    fn estimator_variances_match() {
        let c = config(20, 4, 0.05, 0.5, ReceiverKind::Mrc, 4000);
        let r = run_campaign(&c).unwrap();
        let stats = estimator_stats(&c.split, 4);
        assert!((r.est_var_hat / stats.var_hat - 1.0).abs() < 0.02);
        assert!((r.est_var_err / stats.var_err - 1.0).abs() < 0.02);
        assert!((r.noise_var / stats.var_noise - 1.0).abs() < 0.05);
        assert!(r.cross_mean.re.abs() < 4.0 * r.cross_se.re);
        assert!(r.cross_mean.im.abs() < 4.0 * r.cross_se.im);
    }

    #[test]
    fn mmse_approaches_zf_without_regularization() {
        let h = random_estimate(8, 3, 11);
        let zf = zf_combiner(&h).unwrap();
        let mmse = mmse_combiner(&h, 1e-12, 1.0).unwrap();
        let dev = (&zf - &mmse).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-9);
        assert!(mmse_combiner(&h, 0.0, 1.0).is_err());
    }

    #[test]
    fn mmse_approaches_matched_filter_with_heavy_regularization() {
        let h = random_estimate(8, 3, 12);
        let lambda = 1e9;
        let mmse = mmse_combiner(&h, lambda, 1.0).unwrap().scale(lambda);
        let mf = mrc_combiner(&h);
        let dev = (&mf - &mmse).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = mf.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-6 * scale);
    }

    #[test]
    fn mmse_sinr_dominates_zf_per_draw() {
        for seed in 0..200 {
            let h = random_estimate(8, 2, seed);
            let (rho_d, noise) = (0.7, 1.3);
            let zf = combiner_sinr(&zf_combiner(&h).unwrap(), &h, rho_d, noise);
            let mmse = combiner_sinr(&mmse_combiner(&h, noise, rho_d).unwrap(), &h, rho_d, noise);
            for (a, b) in mmse.iter().zip(&zf) {
                assert!(*a >= *b * (1.0 - 1e-12), "seed {seed}: {a} < {b}");
            }
        }
    }

    #[test]
    fn zf_removes_interference() {
        let h = random_estimate(6, 3, 5);
        let a = zf_combiner(&h).unwrap();
        let c = &a * &h;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_estimates_are_detected() {
        let mut h = random_estimate(6, 2, 3);
        let first = h.column(0).into_owned();
        h.set_column(1, &first);
        assert!(!is_well_conditioned(&h));
        assert!(is_well_conditioned(&random_estimate(6, 2, 3)));
    }

    #[test]
    fn ci_shrinks_with_blocks() {
        let small = run_campaign(&config(20, 4, 1.0, 0.3, ReceiverKind::Zf, 400)).unwrap();
        let large = run_campaign(&config(20, 4, 1.0, 0.3, ReceiverKind::Zf, 6400)).unwrap();
        let ratio = small.rate_ci_halfwidth / large.rate_ci_halfwidth;
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn faded_campaign_runs() {
        let c = config(20, 2, 1.0, 0.3, ReceiverKind::Zf, 2000).with_fading(FadingProfile::new(vec![1.0, 0.1]).unwrap());
        let r = run_campaign(&c).unwrap();
        // Mean of |g_hat|^2 averages p_k^2 E / (p_k E + 1) over users.
        let e = c.split.energy;
        let want = [1.0, 0.1].iter().map(|p: &f64| p * p * e / (p * e + 1.0)).sum::<f64>() / 2.0;
        assert!((r.est_var_hat / want - 1.0).abs() < 0.03);
        let bad = config(20, 2, 1.0, 0.3, ReceiverKind::Zf, 10).with_fading(FadingProfile::uniform(3));
        assert!(run_campaign(&bad).is_err());
    }
}
