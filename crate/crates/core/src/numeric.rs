//! Log-domain helpers for α-norms.
//!
//! `ln ‖v‖_α = (1/α) · LSE(α · ln v_i)`, with the maximum factored out of the
//! log-sum-exp and the remaining sum accumulated with Neumaier compensation.
//! Zero components contribute `ln 0 = -∞` and are dropped.

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Natural-log sum of exponentials. Returns `-∞` when every term is `-∞`
/// (or the slice is empty).
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s = neumaier_sum(
        logs.iter()
            .filter(|l| l.is_finite())
            .map(|&l| (l - max).exp()),
    );
    max + s.ln()
}

/// `ln ‖v‖_α` for non-negative `v` and finite `α > 0`.
pub fn ln_alpha_norm(v: &[f64], alpha: f64) -> f64 {
    let logs: Vec<f64> = v
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| alpha * x.ln())
        .collect();
    log_sum_exp(&logs) / alpha
}

pub fn alpha_norm(v: &[f64], alpha: f64) -> f64 {
    ln_alpha_norm(v, alpha).exp()
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Entropies within this distance below zero are rounding noise and reported as 0.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Maps rounding-level negative entropies to zero. Larger negative values are
/// genuine (non-unitary gains at finite orders can exceed vulnerability 1)
/// and are kept.
pub fn snap_entropy(h: f64) -> f64 {
    if h <= 0.0 && h > -ROUNDING_SLACK {
        0.0
    } else {
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_for_moderate_values() {
        let logs = [0.1f64, -2.0, 1.5];
        let naive: f64 = logs.iter().map(|l| l.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&logs) - naive).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn norm_survives_large_orders() {
        // 0.5^1000 underflows in a direct computation.
        let v = [0.5, 0.25, 0.0];
        let ln = ln_alpha_norm(&v, 1000.0);
        let expected = 0.5f64.ln() + (1.0 + 0.5f64.powi(1000)).ln() / 1000.0;
        assert!((ln - expected).abs() < 1e-15);
        assert_eq!(alpha_norm(&[0.0, 0.0], 2.0), 0.0);
    }

    #[test]
    fn euclidean_norm() {
        assert!((alpha_norm(&[3.0, 4.0], 2.0) - 5.0).abs() < 1e-14);
        assert!((alpha_norm(&[0.5, 0.5], 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = neumaier_sum(values.iter().cloned());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
