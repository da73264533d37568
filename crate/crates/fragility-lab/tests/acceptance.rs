//! End-to-end acceptance gate: every check in this file exercises one
//! headline claim of the library at its stated tolerance and time budget.
//! Checks are numbered so the suite reads as a single ordered report.

use std::time::Instant;

use fragility_lab::analysis::{d_change, path_integral_m, path_profile};
use fragility_lab::attacks::{iterative_gradient_attack, thm1_attack, thm5_attack};
use fragility_lab::datagen::{gen_hypercube, gen_orthogonal_label, make_path};
use fragility_lab::harness::{canned_config, run_experiment};
use fragility_lab::matrix::{self, qr_decompose};
use fragility_lab::models::{argmax, ideal_hypercube_net, ideal_two_layer, Activation, MlpModel};
use fragility_lab::oracle::oracle_flip_radius;
use fragility_lab::rmt::{chernoff_tail_bound, sample_gaussian_matrix, sample_product_r};
use fragility_lab::rng::RngStream;
use fragility_lab::stats::{
    ks_test_one_sample, ks_test_two_sample, linear_fit, mean, scaled_half_normal_cdf,
    standard_error,
};

fn budget(start: Instant, seconds: f64, what: &str) {
    let took = start.elapsed().as_secs_f64();
    assert!(
        took < seconds,
        "{what} took {took:.1}s, budget {seconds:.0}s"
    );
}

#[test]
fn c01_two_layer_qr_entries_match_the_product_law() {
    let start = Instant::now();
    let widths = [4usize, 6, 8];
    let entries = [(0, 0), (3, 3), (0, 3)];
    let samples = 5000;

    let mut seeds_passed = 0;
    for seed in [41u64, 42, 43] {
        let root = RngStream::new(seed);
        let mut direct = vec![Vec::with_capacity(samples); entries.len()];
        let mut composed = vec![Vec::with_capacity(samples); entries.len()];

        let mut rng = root.child(0);
        for _ in 0..samples {
            let h1 = sample_gaussian_matrix(&mut rng, widths[1], widths[0], 1.0).unwrap();
            let h2 = sample_gaussian_matrix(&mut rng, widths[2], widths[1], 1.0).unwrap();
            let r = qr_decompose(&h2.matmul(&h1).unwrap()).unwrap().r;
            for (k, &(i, j)) in entries.iter().enumerate() {
                direct[k].push(r[(i, j)]);
            }
        }
        let mut rng = root.child(1);
        for _ in 0..samples {
            let r = sample_product_r(&mut rng, &widths).unwrap();
            for (k, &(i, j)) in entries.iter().enumerate() {
                composed[k].push(r[(i, j)]);
            }
        }

        let all_pass = entries.iter().enumerate().all(|(k, _)| {
            let (_, p) = ks_test_two_sample(&direct[k], &composed[k]);
            p > 0.01
        });
        if all_pass {
            seeds_passed += 1;
        }
    }

    assert!(
        seeds_passed >= 2,
        "product law matched in only {seeds_passed}/3 seeds"
    );
    budget(start, 60.0, "QR product-law comparison");
    println!("c01 pass: {seeds_passed}/3 seeds matched on all three R entries");
}

#[test]
fn c02_chi_squared_tail_bound_dominates_monte_carlo() {
    let start = Instant::now();
    let trials = 20_000;
    let mut rng = RngStream::new(271828);
    for d in [5usize, 20, 100] {
        let sums: Vec<f64> = (0..trials)
            .map(|_| (0..d).map(|_| rng.normal().powi(2)).sum())
            .collect();
        for alpha in [0.1, 0.3, 0.5, 0.9] {
            let hits: Vec<f64> = sums
                .iter()
                .map(|&s| if s <= alpha * d as f64 { 1.0 } else { 0.0 })
                .collect();
            let p_hat = mean(&hits);
            let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
            let bound = chernoff_tail_bound(alpha, d).unwrap();
            assert!(
                p_hat <= bound + 3.0 * se,
                "alpha={alpha} d={d}: estimate {p_hat:.5} above bound {bound:.5} + 3se"
            );
        }
    }
    budget(start, 60.0, "tail-bound Monte Carlo");
    println!("c02 pass: empirical tails under the bound on the full alpha/d grid");
}

#[test]
fn c03_closed_form_attack_always_succeeds_within_its_norm_bound() {
    let start = Instant::now();

    let norms_at = |d: usize, root: u64| -> Vec<f64> {
        let root = RngStream::new(root);
        (0..200)
            .map(|s| {
                let mut rng = root.child(s);
                let dataset = gen_orthogonal_label(&mut rng, d).unwrap();
                let model = ideal_two_layer(&mut rng, &dataset, d).unwrap();
                let out = thm1_attack(&dataset, &model).unwrap();
                assert!(out.success, "d={d} seed {s}: attack missed");
                assert!(
                    out.norm <= out.bound,
                    "d={d} seed {s}: norm {} above bound {}",
                    out.norm,
                    out.bound
                );
                out.norm
            })
            .collect()
    };

    norms_at(32, 9000);
    let med16 = fragility_lab::stats::median(&norms_at(16, 9001));
    let med64 = fragility_lab::stats::median(&norms_at(64, 9002));
    let ratio = med64 / med16;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "median norm ratio d=64/d=16 is {ratio:.3}"
    );
    budget(start, 120.0, "closed-form attack sweep");
    println!("c03 pass: 200/200 at d=32, median-norm ratio {ratio:.3}");
}

#[test]
fn c04_sign_code_attack_flips_logits_exactly() {
    let start = Instant::now();
    let d = 10;
    let points = 1 << d;
    let root = RngStream::new(9004);
    let mut norms = Vec::with_capacity(50);

    for s in 0..50 {
        let mut rng = root.child(s);
        let dataset = gen_hypercube(&mut rng, d, points, 5.0).unwrap();
        let model = ideal_hypercube_net(&dataset).unwrap();
        for p in 0..points {
            let out = thm5_attack(&dataset, &model, p).unwrap();
            assert!(out.success, "seed {s} point {p}: label did not flip");
            for c in 0..2 {
                let flip = (out.logits_after[c] + out.logits_before[c]).abs();
                assert!(
                    flip <= 1e-8,
                    "seed {s} point {p} logit {c}: |after + before| = {flip:.2e}"
                );
            }
            if p == 0 {
                norms.push(out.norm);
            }
        }
    }

    let (stat, p_value) = ks_test_one_sample(&norms, |x| scaled_half_normal_cdf(2.0, x));
    assert!(
        p_value > 0.01,
        "attack norms reject 2|N(0,1)|: D={stat:.3}, p={p_value:.4}"
    );
    budget(start, 120.0, "sign-code attack sweep");
    println!("c04 pass: 50 x {points} exact flips, norm KS p = {p_value:.3}");
}

#[test]
fn c05_attack_to_oracle_ratio_shrinks_as_inverse_sqrt_d() {
    let start = Instant::now();
    let mut log_d = Vec::new();
    let mut log_ratio = Vec::new();

    for (di, d) in [8usize, 16, 32, 64].into_iter().enumerate() {
        let root = RngStream::new(9005).child(di as u64);
        for s in 0..100 {
            let mut rng = root.child(s);
            let dataset = gen_orthogonal_label(&mut rng, d).unwrap();
            let model = ideal_two_layer(&mut rng, &dataset, d).unwrap();
            let out = thm1_attack(&dataset, &model).unwrap();
            let (radius, _) = oracle_flip_radius(&dataset, d - 1).unwrap();
            log_d.push((d as f64).ln());
            log_ratio.push((out.norm / radius).ln());
        }
    }

    let (slope, _) = linear_fit(&log_d, &log_ratio);
    assert!(
        (slope + 0.5).abs() <= 0.15,
        "log-log slope {slope:.3} not within 0.15 of -0.5"
    );
    budget(start, 180.0, "robustness-gap regression");
    println!("c05 pass: slope {slope:.3}");
}

#[test]
fn c06_trained_angles_track_the_compression_ratio_at_width_256() {
    let start = Instant::now();
    let out = run_experiment(&canned_config("table2").unwrap()).unwrap();
    assert!(!out.shortfall, "fewer valid runs than requested");
    assert_eq!(out.table.aggregate("runs_valid"), Some(20.0));

    let gap = out.table.aggregate("gap_of_averages").unwrap();
    assert!(gap <= 0.10, "|avg|cos t1| - avg phi| = {gap:.4} above 0.10");

    let filtered_cos2: Vec<f64> = out
        .records
        .iter()
        .filter(|r| r.is_valid())
        .filter_map(|r| r.report.as_ref())
        .map(|rep| rep.cos_theta2.abs())
        .filter(|c| *c > 0.9)
        .collect();
    assert!(!filtered_cos2.is_empty());
    let avg_cos2 = mean(&filtered_cos2);
    assert!(avg_cos2 > 0.9, "filtered avg |cos t2| = {avg_cos2:.4}");
    budget(start, 900.0, "width-256 angle study");
    println!("c06 pass: gap {gap:.4}, filtered avg |cos t2| {avg_cos2:.4}");
}

#[test]
fn c07_angle_gap_stays_small_across_dimensions() {
    let start = Instant::now();
    let out = run_experiment(&canned_config("fig2").unwrap()).unwrap();
    assert!(!out.shortfall, "fewer valid runs than requested");

    for d in [8, 10, 12, 14, 16] {
        let valid = out.table.aggregate(&format!("d={d} runs_valid")).unwrap();
        assert_eq!(valid, 10.0, "d={d}: {valid} valid runs");
        let gap = out
            .table
            .aggregate(&format!("d={d} gap_of_averages"))
            .unwrap();
        assert!(gap <= 0.1, "d={d}: gap {gap:.4} above 0.1");
    }
    budget(start, 1800.0, "per-dimension angle trend");
    println!("c07 pass: per-d gaps all within 0.1");
}

#[test]
fn c08_random_subspace_projection_carries_k_over_d_energy() {
    let start = Instant::now();
    let d = 100;
    let trials = 10_000;
    let mut rng = RngStream::new(9008);

    for k in [2usize, 1] {
        let rho2: Vec<f64> = (0..trials)
            .map(|_| {
                let dirs: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..d).map(|_| rng.normal()).collect())
                    .collect();
                let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let refs: Vec<&[f64]> = dirs.iter().map(|v| v.as_slice()).collect();
                let proj = matrix::project_onto_span(&x, &refs);
                let nx = matrix::norm(&x);
                (matrix::norm(&proj) / nx).powi(2)
            })
            .collect();
        let m = mean(&rho2);
        let se = standard_error(&rho2);
        let expected = k as f64 / d as f64;
        assert!(
            (m - expected).abs() <= 3.0 * se,
            "k={k}: mean rho^2 {m:.5} vs {expected:.5} (3se = {:.5})",
            3.0 * se
        );
    }
    budget(start, 60.0, "projection statistics");
    println!("c08 pass: mean rho^2 matches k/d for k = 1 and 2");
}

#[test]
fn c09_trained_relu_local_ratio_is_flat_in_alpha() {
    let start = Instant::now();
    let out = run_experiment(&canned_config("table3").unwrap()).unwrap();
    assert!(!out.shortfall, "fewer valid runs than requested");
    assert_eq!(out.table.aggregate("runs_valid"), Some(20.0));

    let overall = out.table.aggregate("mean_rho_overall").unwrap();
    assert!(
        (0.15..=0.5).contains(&overall),
        "mean rho {overall:.4} outside [0.15, 0.5]"
    );
    let spread = out.table.aggregate("spread_of_alpha_means").unwrap();
    assert!(spread <= 0.1, "per-alpha mean spread {spread:.4} above 0.1");
    budget(start, 900.0, "trained local-ratio study");
    println!("c09 pass: mean rho {overall:.4}, alpha spread {spread:.4}");
}

#[test]
fn c10_gradient_attack_ratio_matches_the_target_cosine() {
    let start = Instant::now();
    let out = run_experiment(&canned_config("table4").unwrap()).unwrap();

    let total = out.table.aggregate("attacks_total").unwrap();
    let succeeded = out.table.aggregate("attacks_succeeded").unwrap();
    assert_eq!(total, succeeded, "{succeeded}/{total} attacks succeeded");
    assert!(total >= 20.0);

    let worst = out.table.aggregate("max_abs_ratio_gap").unwrap();
    assert!(
        worst <= 0.03,
        "| |cos t_t| - delta/m | reaches {worst:.4}, above 0.03"
    );
    budget(start, 120.0, "attack-ratio consistency");
    println!("c10 pass: {total} attacks, worst ratio gap {worst:.2e}");
}

#[test]
fn c11_path_integral_reproduces_the_logit_gap_change() {
    let start = Instant::now();

    // Kinked nets: the 1000-point grid must capture the true change in
    // g = f_0 - f_1 along a random segment to 1% relative error.
    let root = RngStream::new(9011);
    let mut checked = 0;
    for s in 0..20 {
        let mut rng = root.child(s);
        let model = MlpModel::random(&mut rng, &[12, 64, 2], Activation::Relu).unwrap();
        let a: Vec<f64> = (0..12).map(|_| 2.0 * rng.normal()).collect();
        let b: Vec<f64> = (0..12).map(|_| 2.0 * rng.normal()).collect();
        let exact = d_change(&model, &a, &b, (0, 1)).unwrap();
        if exact.abs() < 0.05 {
            continue;
        }
        let path = make_path(&a, &b, 1000).unwrap();
        let profile = path_profile(&model, &path, (0, 1)).unwrap();
        let g0 = profile[0].grad_norm;
        let m = path_integral_m(&profile, g0, path.length()).unwrap();
        let rel = (m * g0 - exact).abs() / exact.abs();
        assert!(
            rel <= 0.01,
            "seed {s}: integral off by {:.3}% of D = {exact:.4}",
            100.0 * rel
        );
        checked += 1;
    }
    assert!(checked >= 15, "only {checked} segments had a usable gap");

    // Linear nets: |M| must equal the measured attack norm.
    let root = RngStream::new(9012);
    let mut worst_rel: f64 = 0.0;
    for s in 0..20 {
        let mut rng = root.child(s);
        let model = MlpModel::random(&mut rng, &[12, 32, 2], Activation::Identity).unwrap();
        let x: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let source = argmax(&model.forward(&x).unwrap());
        let out = iterative_gradient_attack(&model, &x, source, 1 - source, 0.01, 200_000).unwrap();
        assert!(out.success);
        let adv = matrix::add(&x, &out.perturbation);
        let path = make_path(&x, &adv, 11).unwrap();
        let profile = path_profile(&model, &path, (source, 1 - source)).unwrap();
        let m = path_integral_m(&profile, profile[0].grad_norm, path.length()).unwrap();
        let rel = (m.abs() - out.norm).abs() / out.norm;
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 1e-4,
            "seed {s}: |M| = {:.6} vs attack norm {:.6}",
            m.abs(),
            out.norm
        );
    }
    budget(start, 300.0, "path-integral consistency");
    println!("c11 pass: {checked} kinked segments within 1%, linear worst rel {worst_rel:.2e}");
}

#[test]
fn c12_analytic_gradients_match_finite_differences() {
    let start = Instant::now();
    let h = 1e-5;
    let dims = [8usize, 32, 6];
    let mut rng = RngStream::new(9012);
    let mut checked = 0;

    for hidden in [Activation::Identity, Activation::Relu] {
        let model = MlpModel::random(&mut rng, &dims, hidden).unwrap();
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 50 && attempts < 1000 {
            attempts += 1;
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.normal()).collect();
            // Keep a margin around every hidden kink so the finite
            // difference stays inside one linear region.
            let first = &model.layers[0];
            let pre = first.weights.matvec(&x).unwrap();
            let margin = pre
                .iter()
                .zip(&first.bias)
                .map(|(p, b)| (p + b).abs())
                .fold(f64::INFINITY, f64::min);
            if hidden == Activation::Relu && margin < 1e-3 {
                continue;
            }
            accepted += 1;
            checked += 1;

            let pairs = [(0usize, Some(3usize)), (4, Some(1)), (2, None)];
            for (i, j) in pairs {
                let analytic = model.input_gradient(&x, i, j).unwrap();
                for k in 0..dims[0] {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let g = |v: &[f64]| {
                        let l = model.forward(v).unwrap();
                        match j {
                            Some(j) => l[i] - l[j],
                            None => l[i],
                        }
                    };
                    let numeric = (g(&xp) - g(&xm)) / (2.0 * h);
                    let diff = (analytic[k] - numeric).abs();
                    assert!(
                        diff <= 1e-6,
                        "coordinate {k} of grad({i},{j:?}): analytic {:.9} vs numeric {numeric:.9}",
                        analytic[k]
                    );
                }
            }
        }
        assert_eq!(accepted, 50, "could not find 50 safe points");
    }

    assert_eq!(checked, 100);
    budget(start, 120.0, "gradient check");
    println!("c12 pass: 100 points, all coordinates within 1e-6");
}
