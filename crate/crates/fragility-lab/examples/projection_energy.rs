//! Why a random direction cannot see most of the input: the energy a
//! k-dimensional gradient span captures from a random displacement follows
//! Beta(k/2, (d-k)/2), so its expectation is exactly k/d.

use fragility_lab::matrix;
use fragility_lab::rng::RngStream;
use fragility_lab::stats::{mean, standard_error};
use fragility_lab::Result;

fn main() -> Result<()> {
    let d = 100;
    let trials = 10_000;
    let mut rng = RngStream::new(55);

    println!("dimension {d}, {trials} trials\n");
    println!("  k   mean rho^2   k/d       3 SE");
    for k in [1usize, 2, 5, 10] {
        let rho2: Vec<f64> = (0..trials)
            .map(|_| {
                let dirs: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..d).map(|_| rng.normal()).collect())
                    .collect();
                let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let refs: Vec<&[f64]> = dirs.iter().map(|v| v.as_slice()).collect();
                let proj = matrix::project_onto_span(&x, &refs);
                (matrix::norm(&proj) / matrix::norm(&x)).powi(2)
            })
            .collect();
        println!(
            "{k:>3}   {:>10.5}   {:.5}   {:.5}",
            mean(&rho2),
            k as f64 / d as f64,
            3.0 * standard_error(&rho2)
        );
    }
    println!("\nA two-class decision reads at most a two-dimensional slice of");
    println!("the gap between classes: 2% of it, in dimension 100.");
    Ok(())
}
