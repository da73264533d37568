//! Small statistics toolbox: Kolmogorov-Smirnov tests, descriptive
//! statistics, and least-squares slopes.
//!
//! The KS p-values use the asymptotic Kolmogorov distribution.  Sample
//! sizes in this crate are either in the thousands (two-sample checks,
//! where the plain asymptotic form is accurate) or around fifty (one-sample
//! checks, where the Stephens small-sample correction keeps the p-value
//! honest).

/// Empirical mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Median; averages the middle pair for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope and intercept of y on x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Survival function of the Kolmogorov distribution,
/// `P(sup|B(t)| > lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS statistic: sup distance between the two empirical CDFs.
pub fn ks_statistic_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Two-sample KS test with asymptotic p-value.
pub fn ks_test_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let d = ks_statistic_two_sample(xs, ys);
    let ne = (xs.len() * ys.len()) as f64 / (xs.len() + ys.len()) as f64;
    (d, kolmogorov_sf(ne.sqrt() * d))
}

/// One-sample KS statistic against a reference CDF.
pub fn ks_statistic_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(((i as f64 + 1.0) / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// One-sample KS test with the Stephens-corrected asymptotic p-value,
/// accurate down to a few dozen samples.
pub fn ks_test_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let d = ks_statistic_one_sample(xs, &cdf);
    let n = (xs.len() as f64).sqrt();
    let lambda = (n + 0.12 + 0.11 / n) * d;
    (d, kolmogorov_sf(lambda))
}

/// CDF of `|N(0, 1)|`.
pub fn half_normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf(x / std::f64::consts::SQRT_2)
    }
}

/// CDF of `scale * |N(0, 1)|` for positive `scale`.
pub fn scaled_half_normal_cdf(scale: f64, x: f64) -> f64 {
    half_normal_cdf(x / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn descriptive_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        assert!((slope + 0.5).abs() < 1e-12);
        assert!((intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_critical_values() {
        // Classical critical points of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.36) - 0.05).abs() < 0.002);
        assert!((kolmogorov_sf(1.63) - 0.01).abs() < 0.001);
        assert_eq!(kolmogorov_sf(0.1), 1.0);
        assert!(kolmogorov_sf(5.0) < 1e-10);
    }

    #[test]
    fn two_sample_ks_accepts_same_distribution() {
        let mut rng = RngStream::new(21);
        let xs: Vec<f64> = (0..5000).map(|_| rng.normal()).collect();
        let ys: Vec<f64> = (0..5000).map(|_| rng.normal()).collect();
        let (_, p) = ks_test_two_sample(&xs, &ys);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn two_sample_ks_rejects_shifted_distribution() {
        let mut rng = RngStream::new(22);
        let xs: Vec<f64> = (0..5000).map(|_| rng.normal()).collect();
        let ys: Vec<f64> = (0..5000).map(|_| rng.normal() + 0.2).collect();
        let (_, p) = ks_test_two_sample(&xs, &ys);
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn one_sample_ks_against_half_normal() {
        let mut rng = RngStream::new(23);
        let xs: Vec<f64> = (0..2000).map(|_| rng.normal().abs()).collect();
        let (_, p) = ks_test_one_sample(&xs, half_normal_cdf);
        assert!(p > 0.01, "p = {p}");

        let scaled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let (_, p_scaled) = ks_test_one_sample(&scaled, |x| scaled_half_normal_cdf(2.0, x));
        assert!(p_scaled > 0.01, "p = {p_scaled}");
        let (_, p_wrong) = ks_test_one_sample(&scaled, half_normal_cdf);
        assert!(p_wrong < 1e-6, "p = {p_wrong}");
    }

    #[test]
    fn ks_statistic_hand_example() {
        // ECDFs of {1,2} vs {1.5, 2.5}: largest gap is 0.5.
        let d = ks_statistic_two_sample(&[1.0, 2.0], &[1.5, 2.5]);
        assert!((d - 0.5).abs() < 1e-12);
    }
}
