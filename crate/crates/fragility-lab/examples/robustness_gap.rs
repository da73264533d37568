//! The attack-to-oracle norm ratio shrinks like 1/sqrt(d): sweep dimensions,
//! fit the log-log slope, and write an SVG chart of the medians.

use fragility_lab::attacks::thm1_attack;
use fragility_lab::datagen::gen_orthogonal_label;
use fragility_lab::models::ideal_two_layer;
use fragility_lab::oracle::oracle_flip_radius;
use fragility_lab::rng::RngStream;
use fragility_lab::stats::{linear_fit, median};
use fragility_lab::svg::LineChart;
use fragility_lab::Result;

fn main() -> Result<()> {
    let dims = [8usize, 16, 32, 64];
    let seeds = 100;
    let mut log_pts = (Vec::new(), Vec::new());
    let mut medians = Vec::new();

    println!("  d   median attack/oracle ratio");
    for (di, d) in dims.into_iter().enumerate() {
        let root = RngStream::new(60).child(di as u64);
        let ratios: Vec<f64> = (0..seeds)
            .map(|s| {
                let mut rng = root.child(s);
                let data = gen_orthogonal_label(&mut rng, d)?;
                let model = ideal_two_layer(&mut rng, &data, d)?;
                let norm = thm1_attack(&data, &model)?.norm;
                let (radius, _) = oracle_flip_radius(&data, d - 1)?;
                Ok(norm / radius)
            })
            .collect::<Result<_>>()?;
        for r in &ratios {
            log_pts.0.push((d as f64).ln());
            log_pts.1.push(r.ln());
        }
        let med = median(&ratios);
        medians.push((d as f64, med));
        println!("{d:>3}   {med:.4}");
    }

    let (slope, _) = linear_fit(&log_pts.0, &log_pts.1);
    println!("\nlog-log slope over {} runs: {slope:.3} (1/sqrt(d) would be -0.5)", 4 * seeds);

    let mut chart = LineChart::new(
        "Attack norm relative to oracle radius",
        "dimension d",
        "median ratio",
    );
    chart.add_series("median", medians);
    std::fs::write("robustness_gap.svg", chart.render())?;
    println!("wrote robustness_gap.svg");
    Ok(())
}
