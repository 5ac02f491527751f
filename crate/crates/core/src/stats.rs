//! Small statistics helpers shared by the Monte Carlo suites.

/// Kahan compensated sum; order-independent aggregation uses it so that the
/// reported means do not depend on chunking.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Sample mean and standard error of the mean.
///
/// Returns `(mean, std_err)`; `std_err` is 0 for fewer than two samples.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Normal-approximation standard error of a binomial rate `p_hat` over `n` trials.
pub fn binomial_std_err(p_hat: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Median of a sample (average of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_small_increments() {
        let n = 1_000_000;
        let s = kahan_sum(std::iter::repeat_n(1e-8, n));
        assert!((s - 1e-8 * n as f64).abs() < 1e-12);
    }

    #[test]
    fn mean_and_std_err_of_constant_sample() {
        let (m, se) = mean_and_std_err(&[2.5; 100]);
        assert_eq!(m, 2.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn binomial_std_err_matches_formula() {
        let se = binomial_std_err(0.5, 100);
        assert!((se - 0.05).abs() < 1e-15);
    }
}
