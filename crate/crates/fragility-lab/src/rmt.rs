//! Random-matrix primitives: Gaussian ensembles, chi-family sampling, the
//! upper-triangular product law for deep linear networks, and the
//! chi-squared lower-tail bound.
//!
//! The product sampler rests on a classical fact: the R factor of a
//! Gaussian matrix has independent entries, strict upper triangle standard
//! normal and diagonal entry `j` (1-based) distributed as
//! `sqrt(chi^2(n - j + 1))` for an `n`-row input.  Multiplying a Gaussian
//! matrix by an orthonormal-column matrix yields another Gaussian matrix,
//! so the R of a product of independent Gaussian layers is distributed as a
//! product of such triangular draws, one per layer.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::RngStream;
use rand_distr::ChiSquared;

/// Matrix with i.i.d. `N(0, stddev^2)` entries.
pub fn sample_gaussian_matrix(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
    stddev: f64,
) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("gaussian matrix needs nonzero shape".into()));
    }
    if !(stddev > 0.0) {
        return Err(Error::Domain(format!("stddev must be positive, got {stddev}")));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |_, _| stddev * rng.normal()))
}

/// One draw of the chi distribution: `sqrt(chi^2(degrees))`.
pub fn sample_chi(rng: &mut RngStream, degrees: usize) -> Result<f64> {
    if degrees == 0 {
        return Err(Error::Domain("chi needs at least one degree of freedom".into()));
    }
    let dist = ChiSquared::new(degrees as f64)
        .map_err(|e| Error::Domain(format!("chi-squared setup: {e}")))?;
    Ok(rng.sample::<_, f64>(&dist).sqrt())
}

/// One draw of the triangular R factor for a Gaussian matrix with `rows`
/// rows and `cols` columns, sampled entrywise from the known law instead of
/// factoring an actual matrix.
fn sample_bartlett_r(rng: &mut RngStream, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let mut r = DenseMatrix::zeros(cols, cols);
    for j in 0..cols {
        r[(j, j)] = sample_chi(rng, rows - j)?;
        for c in j + 1..cols {
            r[(j, c)] = rng.normal();
        }
    }
    Ok(r)
}

/// Sample the R factor of a deep linear network's weight product directly.
///
/// `layer_widths = [n_1, ..., n_l]` describes matrices `H_i` of shape
/// `n_{i+1} x n_i`; the result is one draw of the `n_1 x n_1`
/// upper-triangular matrix distributed as the R factor of
/// `H_{l-1} ... H_1`, synthesized as a product of per-layer triangular
/// draws.  Widths must be nondecreasing; the decreasing case has no such
/// factorization and is rejected.
pub fn sample_product_r(rng: &mut RngStream, layer_widths: &[usize]) -> Result<DenseMatrix> {
    if layer_widths.len() < 2 {
        return Err(Error::Precondition(format!(
            "need at least two layer widths, got {}",
            layer_widths.len()
        )));
    }
    if layer_widths.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition(format!(
            "layer widths must be nondecreasing, got {layer_widths:?}"
        )));
    }
    let d = layer_widths[0];
    if d == 0 {
        return Err(Error::Dimension("zero layer width".into()));
    }
    // Factor i eliminates a Gaussian block with n_{i+1} rows and d columns,
    // so its diagonal entry j draws chi(n_{i+1} - j + 1).
    let mut product = sample_bartlett_r(rng, layer_widths[1], d)?;
    for &rows in &layer_widths[2..] {
        let factor = sample_bartlett_r(rng, rows, d)?;
        product = factor.matmul(&product)?;
    }
    Ok(product)
}

/// Upper bound on `P(sum of d squared standard normals <= alpha * d)`:
/// `(alpha * e^(1 - alpha))^(d/2)`.
pub fn chernoff_tail_bound(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    Ok((alpha * (1.0 - alpha).exp()).powf(d as f64 / 2.0))
}

/// Minimal pairwise Euclidean distance and the achieving index pair.
///
/// Ties resolve to the lexicographically smallest `(i, j)` with `i < j`.
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> Result<(f64, (usize, usize))> {
    if points.len() < 2 {
        return Err(Error::Precondition("need at least two points".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Dimension("points of unequal dimension".into()));
    }
    let mut best = f64::INFINITY;
    let mut pair = (0, 1);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dist2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2 < best {
                best = dist2;
                pair = (i, j);
            }
        }
    }
    Ok((best.sqrt(), pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::qr_decompose;

    #[test]
    fn gaussian_matrix_is_deterministic() {
        let a = sample_gaussian_matrix(&mut RngStream::new(7), 3, 3, 1.0).unwrap();
        let b = sample_gaussian_matrix(&mut RngStream::new(7), 3, 3, 1.0).unwrap();
        assert_eq!(a, b);
        let c = sample_gaussian_matrix(&mut RngStream::new(8), 3, 3, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_matrix_moments() {
        let d: f64 = 16.0;
        let m = sample_gaussian_matrix(&mut RngStream::new(1), 1000, 1000, 1.0 / d.sqrt()).unwrap();
        let n = 1_000_000.0;
        let mean: f64 = (0..1000).flat_map(|i| m.row(i)).sum::<f64>() / n;
        let var: f64 = (0..1000)
            .flat_map(|i| m.row(i))
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0 / 16.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn gaussian_matrix_rejects_bad_args() {
        assert!(sample_gaussian_matrix(&mut RngStream::new(0), 0, 3, 1.0).is_err());
        assert!(sample_gaussian_matrix(&mut RngStream::new(0), 3, 3, 0.0).is_err());
    }

    #[test]
    fn chi_draws_are_nonnegative_with_known_mean() {
        let mut rng = RngStream::new(5);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = sample_chi(&mut rng, 2).unwrap();
            assert!(x >= 0.0);
            sum += x;
        }
        // E[chi_2] = sqrt(pi/2)
        let expected = (std::f64::consts::PI / 2.0).sqrt();
        assert!((sum / n as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn chi_zero_degrees_is_domain_error() {
        assert!(matches!(
            sample_chi(&mut RngStream::new(0), 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn product_r_is_upper_triangular_with_nonnegative_diagonal() {
        let mut rng = RngStream::new(9);
        for _ in 0..50 {
            let r = sample_product_r(&mut rng, &[4, 6, 8]).unwrap();
            assert_eq!(r.rows(), 4);
            for i in 0..4 {
                assert!(r[(i, i)] >= 0.0);
                for j in 0..i {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn product_r_rejects_decreasing_widths() {
        assert!(matches!(
            sample_product_r(&mut RngStream::new(0), &[4, 3]),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            sample_product_r(&mut RngStream::new(0), &[4]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn chernoff_bound_closed_form() {
        // (0.5 e^{0.5})^5, evaluated by hand.
        let b = chernoff_tail_bound(0.5, 10).unwrap();
        assert!((b - 0.3807).abs() < 2e-4, "bound {b}");
        assert!(chernoff_tail_bound(0.999, 3).unwrap() < 1.0);
        assert!(chernoff_tail_bound(1.0, 3).is_err());
        assert!(chernoff_tail_bound(0.0, 3).is_err());
    }

    #[test]
    fn chernoff_bound_decreases_in_d() {
        let mut prev = 1.0;
        for d in [1, 2, 5, 10, 50, 200] {
            let b = chernoff_tail_bound(0.3, d).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn min_distance_hand_cases() {
        let pts = vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 1.0]];
        assert_eq!(min_pairwise_distance(&pts).unwrap(), (1.0, (0, 2)));

        let dup = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 1.0]];
        assert_eq!(min_pairwise_distance(&dup).unwrap(), (0.0, (0, 2)));

        let tie = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(min_pairwise_distance(&tie).unwrap(), (1.0, (0, 1)));

        let ragged = vec![vec![0.0], vec![1.0, 2.0]];
        assert!(min_pairwise_distance(&ragged).is_err());
    }

    #[test]
    fn gaussian_points_are_well_separated() {
        // Each pair distance^2 is 2 * chi^2_d, so even the smallest of the
        // d(d-1)/2 pairwise distances stays at the sqrt(2d) scale: the
        // chi-square tail bound puts a single trial below half that scale
        // with probability under 3e-6 at d = 64.
        let d = 64;
        let scale = (2.0 * d as f64).sqrt();
        let pair_bound = chernoff_tail_bound(0.25, d).unwrap();
        let trial_bound = pair_bound * (d * (d - 1) / 2) as f64;
        assert!(trial_bound < 1e-5, "floor is not conservative: {trial_bound:.2e}");

        let root = RngStream::new(42);
        for trial in 0..500 {
            let mut rng = root.child(trial);
            let pts: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..d).map(|_| rng.normal()).collect())
                .collect();
            let (min, _) = min_pairwise_distance(&pts).unwrap();
            assert!(
                min >= 0.5 * scale && min <= 1.1 * scale,
                "trial {trial}: min distance {min:.3} outside [{:.3}, {:.3}]",
                0.5 * scale,
                1.1 * scale
            );
        }
    }

    #[test]
    fn single_factor_product_matches_qr_shape() {
        // With two widths the product law has one factor; its diagonal in
        // the square case is chi(1), i.e. an absolute normal, and the draw
        // must be reproducible.
        let a = sample_product_r(&mut RngStream::new(3), &[5, 5]).unwrap();
        let b = sample_product_r(&mut RngStream::new(3), &[5, 5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn qr_of_gaussian_has_positive_diagonal_chi_scale() {
        // Smoke-level check that the factored route lands in the right
        // range: E[R_11] for a d x d Gaussian is E[chi_d] ~ sqrt(d).
        let d = 30;
        let mut rng = RngStream::new(17);
        let mut sum = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let m = sample_gaussian_matrix(&mut rng, d, d, 1.0).unwrap();
            sum += qr_decompose(&m).unwrap().r[(0, 0)];
        }
        let mean = sum / trials as f64;
        let expected = (d as f64).sqrt();
        assert!((mean - expected).abs() < 0.4, "mean {mean} vs {expected}");
    }
}
