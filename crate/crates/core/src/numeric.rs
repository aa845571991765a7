//! Log-space helpers shared by the weight computations.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}` with max subtraction. Empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into probabilities. Returns `None` when every
/// weight is zero.
pub fn normalize_log_weights(log_w: &[f64]) -> Option<Vec<f64>> {
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return None;
    }
    Some(log_w.iter().map(|&w| (w - lse).exp()).collect())
}

/// Draws an index with probability proportional to `exp(log_w[i])`.
///
/// Consumes exactly one uniform variate. A vector with a single entry, or
/// one where every entry is `-inf`, still consumes the variate so that the
/// random stream advances identically regardless of the weights.
pub fn sample_log_categorical<R: Rng + ?Sized>(rng: &mut R, log_w: &[f64]) -> usize {
    let u: f64 = rng.random();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if log_w.len() <= 1 || max == f64::NEG_INFINITY {
        return 0;
    }
    let total: f64 = log_w.iter().map(|&w| (w - max).exp()).sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in log_w.iter().enumerate() {
        acc += (w - max).exp();
        if target < acc {
            return i;
        }
    }
    // rounding: fall back to the last index with positive weight
    log_w.iter().rposition(|&w| w > f64::NEG_INFINITY).unwrap_or(0)
}

/// `ln(expm1(x) / x)`, continuous at `x = 0` where it is 0.
pub fn ln_expm1_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // expm1(x)/x = 1 + x/2 + x²/6 + ...
        return x / 2.0;
    }
    if x > 30.0 {
        return x - x.ln() + (-(-x).exp()).ln_1p();
    }
    if x > 0.0 {
        (x.exp_m1() / x).ln()
    } else {
        // both negative
        (-x.exp_m1()).ln() - (-x).ln()
    }
}

/// `ln(ln1p(x) / x)` for `x ≥ 0`, continuous at 0.
pub fn ln_ln1p_over(x: f64) -> f64 {
    if x < 1e-8 {
        return -x / 2.0;
    }
    (x.ln_1p() / x).ln()
}

/// Table of `ln k!` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        // exact products while k! fits a double's mantissa, so ln 0! = ln 1! = 0
        let mut exact = 1.0f64;
        Self(
            (0..=max)
                .map(|k| {
                    if k <= 18 {
                        exact *= k.max(1) as f64;
                        exact.ln()
                    } else {
                        ln_gamma(k as f64 + 1.0)
                    }
                })
                .collect(),
        )
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    #[inline]
    pub fn ln_binom(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.0[n] - self.0[k] - self.0[n - k]
    }
}
