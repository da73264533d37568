//! How often is a chi-squared sum unusually small?  Monte Carlo lower-tail
//! frequencies next to the closed-form bound (alpha e^(1-alpha))^(d/2).

use fragility_lab::rmt::chernoff_tail_bound;
use fragility_lab::rng::RngStream;
use fragility_lab::Result;

fn main() -> Result<()> {
    let trials = 100_000;
    let mut rng = RngStream::new(8);

    println!("P(sum of d squared normals <= alpha d), {trials} trials per cell\n");
    println!("  d   alpha   empirical      bound");
    for d in [5usize, 20, 100] {
        let sums: Vec<f64> = (0..trials)
            .map(|_| (0..d).map(|_| rng.normal().powi(2)).sum())
            .collect();
        for alpha in [0.1, 0.3, 0.5, 0.9] {
            let hits = sums.iter().filter(|&&s| s <= alpha * d as f64).count();
            let empirical = hits as f64 / trials as f64;
            let bound = chernoff_tail_bound(alpha, d)?;
            println!("{d:>3}   {alpha:>5.1}   {empirical:>9.5}  {bound:>9.5}");
        }
        println!();
    }
    println!("The bound decays geometrically in d; at alpha = 0.5, d = 100 the");
    println!("event is already rarer than one in ten thousand.");
    Ok(())
}
