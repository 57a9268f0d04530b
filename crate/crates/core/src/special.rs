//! Scalar special functions behind the MMSE sum-rate expression.
//!
//! The central quantity is
//!
//! ```text
//! f(m, n, x) = sum_{k=1..n} det Psi_{n,m}(k, x) / (Gamma_n(m) Gamma_n(n))
//! ```
//!
//! where `Psi_{n,m}(k, x)` is the `n x n` matrix with entries `(n+m-s-t)!`,
//! except column `k`, whose entries carry the extra factor
//! `sum_{h=1}^{n+m-s-t+1} E_h(x)`. The product `e^x f(m, n, x)` equals the
//! mean log-determinant `E[ln det(I_n + W / x)]` of a complex Wishart matrix
//! `W` with `m` degrees of freedom. Two evaluation routes are provided:
//!
//! * the determinant route, which follows the definition with log-scaled
//!   factorials and an LU factorization with partial pivoting;
//! * the eigenvalue-density route, which integrates `ln(1 + snr * lambda)`
//!   against the one-point density of the Laguerre ensemble.
//!
//! The determinant route loses roughly `(m+n)^(n-1)` ulps to cancellation,
//! so [`f_mmse`] switches to the density route once that bound exceeds
//! [`DETERMINANT_AMPLIFICATION_LIMIT`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Largest `(m+n)^(n-1)` for which [`f_mmse`] uses the determinant route.
pub const DETERMINANT_AMPLIFICATION_LIMIT: f64 = 1e5;

fn check_order_and_arg(h: u32, x: f64) -> Result<()> {
    if h < 1 {
        return Err(Error::Domain(format!("exponential integral order must be >= 1, got {h}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("exponential integral argument must be positive and finite, got {x}")));
    }
    Ok(())
}

/// Generalized exponential integral `E_h(x) = int_1^inf e^{-xt} / t^h dt`.
///
/// Uses the power series for `x < 1` and the Lentz continued fraction for
/// `x >= 1`; both are evaluated directly for every order.
pub fn exp_integral(h: u32, x: f64) -> Result<f64> {
    check_order_and_arg(h, x)?;
    if x >= 1.0 {
        Ok(continued_fraction_scaled(h, x) * (-x).exp())
    } else {
        Ok(series(h, x))
    }
}

/// `e^x E_h(x)`, finite for arguments where `E_h(x)` itself underflows.
pub fn exp_integral_scaled(h: u32, x: f64) -> Result<f64> {
    check_order_and_arg(h, x)?;
    if x >= 1.0 {
        Ok(continued_fraction_scaled(h, x))
    } else {
        Ok(series(h, x) * x.exp())
    }
}

// Returns e^x E_n(x).
fn continued_fraction_scaled(n: u32, x: f64) -> f64 {
    let nm1 = f64::from(n - 1);
    let tiny = 1e-300;
    let mut b = x + f64::from(n);
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let a = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn series(n: u32, x: f64) -> f64 {
    let nm1 = n - 1;
    let mut ans = if nm1 != 0 {
        1.0 / f64::from(nm1)
    } else {
        -x.ln() - EULER_GAMMA
    };
    let mut fact = 1.0;
    for i in 1..MAX_ITER as u32 {
        fact *= -x / f64::from(i);
        let del = if i != nm1 {
            -fact / (f64::from(i) - f64::from(nm1))
        } else {
            let psi = -EULER_GAMMA + (1..=nm1).map(|ii| 1.0 / f64::from(ii)).sum::<f64>();
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            break;
        }
    }
    ans
}

/// `ln(j!)` for a nonnegative integer.
pub fn ln_factorial(j: usize) -> f64 {
    (2..=j).map(|i| (i as f64).ln()).sum()
}

/// Natural log of the multivariate gamma product
/// `Gamma_n(m) = prod_{i=1..n} Gamma(m - i + 1)`.
pub fn log_gamma_multi(n: usize, m: usize) -> Result<f64> {
    if n < 1 || m < n {
        return Err(Error::Domain(format!("log_gamma_multi needs m >= n >= 1, got n = {n}, m = {m}")));
    }
    // Gamma(m - i + 1) = (m - i)!
    let mut total = 0.0;
    let mut running = ln_factorial(m - n);
    total += running;
    for j in (m - n + 1)..m {
        running += (j as f64).ln();
        total += running;
    }
    Ok(total)
}

/// The `n x n` matrix `Psi_{n,m}(k, x)` in log-scaled form.
///
/// Entry `(s, t)` is `exp(log_entry[s][t])` times the sign, which is always
/// positive here. Rows and columns are rescaled before factorization so the
/// largest entry of every column is one.
#[derive(Debug, Clone)]
pub struct PsiMatrix {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub x: f64,
    /// Natural log of each (unscaled, `e^x`-multiplied) entry, row major.
    log_entries: Vec<f64>,
}

impl PsiMatrix {
    /// Builds `Psi_{n,m}(k, x)` with column `k` multiplied by `e^x`.
    /// `prefix` holds `S_j = sum_{h<=j} e^x E_h(x)` for `j = 0..=n+m-1`.
    fn scaled(n: usize, m: usize, k: usize, x: f64, prefix: &[f64], log_fact: &[f64]) -> Self {
        let total = n + m;
        let mut log_entries = Vec::with_capacity(n * n);
        for s in 1..=n {
            for t in 1..=n {
                let j = total - s - t;
                let mut v = log_fact[j];
                if t == k {
                    v += prefix[j + 1].ln();
                }
                log_entries.push(v);
            }
        }
        Self { n, m, k, x, log_entries }
    }

    /// Dense entries of `Psi_{n,m}(k, x)` with column `k` scaled by `e^x`.
    /// Overflows for large `m`; intended for small cross-checks.
    pub fn dense_scaled(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n, self.n, self.log_entries.iter().map(|v| v.exp()))
    }

    /// Sign and natural log of the absolute determinant.
    pub fn log_det(&self) -> (f64, f64) {
        let n = self.n;
        let mut log_scale = 0.0;
        let mut scaled = self.log_entries.clone();
        for s in 0..n {
            let r = ln_factorial(self.m - (s + 1));
            for t in 0..n {
                scaled[s * n + t] -= r;
            }
            log_scale += r;
        }
        for t in 0..n {
            let c = (0..n).map(|s| scaled[s * n + t]).fold(f64::NEG_INFINITY, f64::max);
            for s in 0..n {
                scaled[s * n + t] -= c;
            }
            log_scale += c;
        }
        let mat = DMatrix::from_row_iterator(n, n, scaled.iter().map(|v| v.exp()));
        let det = mat.lu().determinant();
        (det.signum(), det.abs().ln() + log_scale)
    }
}

fn log_factorial_table(len: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for i in 1..=len {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

fn check_f_args(m: usize, n: usize, x: f64) -> Result<()> {
    if m < 1 || n > m {
        return Err(Error::Domain(format!("f(m, n, x) needs m >= n and m >= 1, got m = {m}, n = {n}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("f(m, n, x) needs finite x > 0, got {x}")));
    }
    Ok(())
}

/// `e^x f(m, n, x)` evaluated through the determinant definition.
pub fn f_mmse_determinant_scaled(m: usize, n: usize, x: f64) -> Result<f64> {
    check_f_args(m, n, x)?;
    if n == 0 {
        return Ok(0.0);
    }
    let total = n + m;
    let log_fact = log_factorial_table(total);
    let mut prefix = Vec::with_capacity(total + 1);
    prefix.push(0.0);
    for h in 1..total as u32 {
        let last = *prefix.last().unwrap();
        prefix.push(last + exp_integral_scaled(h, x)?);
    }
    let log_norm = log_gamma_multi(n, m)? + log_gamma_multi(n, n)?;
    let mut sum = 0.0;
    for k in 1..=n {
        let (sign, log_abs) = PsiMatrix::scaled(n, m, k, x, &prefix, &log_fact).log_det();
        sum += sign * (log_abs - log_norm).exp();
    }
    Ok(sum)
}

/// `E[ln det(I_n + snr W)]` for `W = H^H H`, `H` an `m x n` matrix of
/// i.i.d. CN(0, 1) entries, by quadrature of the Laguerre eigenvalue density.
pub fn wishart_log_det_mean(m: usize, n: usize, snr: f64) -> Result<f64> {
    if m < 1 || n > m {
        return Err(Error::Domain(format!("wishart_log_det_mean needs m >= n, got m = {m}, n = {n}")));
    }
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::Domain(format!("snr must be finite and nonnegative, got {snr}")));
    }
    if n == 0 || snr == 0.0 {
        return Ok(0.0);
    }
    let d = m - n;
    let root_sum = (m as f64).sqrt() + (n as f64).sqrt();
    let root_diff = (m as f64).sqrt() - (n as f64).sqrt();
    let lo = (root_diff * root_diff - 30.0 * root_sum).max(0.0);
    let hi = root_sum * root_sum + 30.0 * root_sum + 50.0;
    let log_norm0 = 0.5 * ln_factorial(d);
    let integrand = |lambda: f64| (snr * lambda).ln_1p() * laguerre_density(lambda, n, d, log_norm0);

    Ok(integrate_panels(&integrand, lo, hi, 40, 1e-14))
}

/// `sum_{i<n} phi_i(lambda)^2` for orthonormal Laguerre functions of order `d`.
fn laguerre_density(lambda: f64, n: usize, d: usize, log_norm0: f64) -> f64 {
    if lambda <= 0.0 {
        // Only the d = 0 ensemble has mass at the origin: phi_i(0) = 1.
        return if d == 0 { n as f64 } else { 0.0 };
    }
    let df = d as f64;
    let log_phi0 = 0.5 * df * lambda.ln() - 0.5 * lambda - log_norm0;
    // Recurrence on a rescaled pair; the true value is p * exp(log_scale).
    let mut log_scale = log_phi0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut total = (2.0 * log_scale).exp();
    for i in 0..n.saturating_sub(1) {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 + df - lambda) * cur - (fi * (fi + df)).sqrt() * prev)
            / ((fi + 1.0) * (fi + 1.0 + df)).sqrt();
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
            let shift = mag.ln();
            cur /= mag;
            prev /= mag;
            log_scale += shift;
        }
        total += cur * cur * (2.0 * log_scale).exp();
    }
    total
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Globally adaptive GK15: repeatedly bisects the panel with the largest
/// error estimate until the summed estimate drops below `rel_tol * |total|`.
fn integrate_panels<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize, rel_tol: f64) -> f64 {
    const MAX_PANELS: usize = 4000;
    let width = (hi - lo) / panels as f64;
    let mut parts: Vec<(f64, f64, f64, f64)> = (0..panels)
        .map(|p| {
            let a = lo + width * p as f64;
            let b = if p + 1 == panels { hi } else { a + width };
            let (v, e) = gauss_kronrod_15(f, a, b);
            (a, b, v, e)
        })
        .collect();
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || parts.len() >= MAX_PANELS {
            return total;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (a, b, _, _) = parts[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return total;
        }
        let (lv, le) = gauss_kronrod_15(f, a, mid);
        let (rv, re) = gauss_kronrod_15(f, mid, b);
        parts[worst] = (a, mid, lv, le);
        parts.push((mid, b, rv, re));
    }
}

/// Error amplification bound of the determinant route.
fn determinant_amplification(m: usize, n: usize) -> f64 {
    if n <= 1 {
        1.0
    } else {
        ((m + n) as f64).powi(n as i32 - 1)
    }
}

/// `e^x f(m, n, x)`, the quantity consumed by the MMSE rate.
pub fn f_mmse_scaled(m: usize, n: usize, x: f64) -> Result<f64> {
    check_f_args(m, n, x)?;
    if n == 0 {
        return Ok(0.0);
    }
    if determinant_amplification(m, n) <= DETERMINANT_AMPLIFICATION_LIMIT {
        f_mmse_determinant_scaled(m, n, x)
    } else {
        wishart_log_det_mean(m, n, 1.0 / x)
    }
}

/// `f(m, n, x)`; `f(m, 0, x) = 0` by convention.
pub fn f_mmse(m: usize, n: usize, x: f64) -> Result<f64> {
    Ok(f_mmse_scaled(m, n, x)? * (-x).exp())
}
