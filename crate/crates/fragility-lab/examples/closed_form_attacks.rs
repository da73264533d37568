//! Exact-fit networks fall to closed-form perturbations whose size does not
//! grow with dimension, while the minimum-distance oracle needs sqrt(2d)/2.

use fragility_lab::attacks::{thm1_attack, thm5_attack};
use fragility_lab::datagen::{gen_hypercube, gen_orthogonal_label};
use fragility_lab::models::{ideal_hypercube_net, ideal_two_layer};
use fragility_lab::oracle::oracle_flip_radius;
use fragility_lab::rng::RngStream;
use fragility_lab::Result;

fn main() -> Result<()> {
    println!("one-class-per-point data, exact-fit two-layer net");
    println!("  d   attack norm   norm bound   oracle radius");
    for (i, d) in [8usize, 16, 32, 64].into_iter().enumerate() {
        let mut rng = RngStream::new(30).child(i as u64);
        let data = gen_orthogonal_label(&mut rng, d)?;
        let model = ideal_two_layer(&mut rng, &data, d)?;
        let out = thm1_attack(&data, &model)?;
        let (radius, _) = oracle_flip_radius(&data, d - 1)?;
        assert!(out.success);
        println!(
            "{d:>3}   {:>11.4}   {:>10.4}   {radius:>13.4}",
            out.norm, out.bound
        );
    }

    println!("\nsign-code data, exact linear classifier");
    println!("  d   attack norm   logits before        logits after");
    for (i, d) in [8usize, 12, 16].into_iter().enumerate() {
        let mut rng = RngStream::new(31).child(i as u64);
        let data = gen_hypercube(&mut rng, d, 64, 5.0)?;
        let model = ideal_hypercube_net(&data)?;
        let out = thm5_attack(&data, &model, 0)?;
        assert!(out.success);
        println!(
            "{d:>3}   {:>11.4}   ({:+.3}, {:+.3})      ({:+.3}, {:+.3})",
            out.norm,
            out.logits_before[0],
            out.logits_before[1],
            out.logits_after[0],
            out.logits_after[1]
        );
    }

    println!("\nBoth attack norms stay flat in d: the oracle radius does not.");
    Ok(())
}
