//! Small numerical helpers shared by the betting and e-value code.

/// `ln(sum(exp(x)))` without overflow. Returns `-inf` for an empty slice or
/// when every term is `-inf`.
///
/// A single finite term is returned unchanged (bit for bit).
#[inline]
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Natural log of the wealth factor `1 - bet * (q - alpha)`.
///
/// Returns `None` when the factor is negative. A factor of exactly zero maps
/// to `-inf`.
#[inline]
pub fn log_wealth_factor(bet: f64, q: f64, alpha: f64) -> Option<f64> {
    let y = bet * (q - alpha);
    if y > 1.0 || y.is_nan() {
        None
    } else {
        Some((-y).ln_1p())
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
