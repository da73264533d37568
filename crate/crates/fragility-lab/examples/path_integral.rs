//! Walk the straight line between two classes and integrate the gradient-
//! aligned change of the logit gap.  The discretized integral converges to
//! the exact change, and its normalized form |M| prices the attack.

use fragility_lab::analysis::{d_change, path_integral_m, path_profile};
use fragility_lab::attacks::iterative_gradient_attack;
use fragility_lab::datagen::make_path;
use fragility_lab::matrix;
use fragility_lab::models::{argmax, Activation, MlpModel};
use fragility_lab::rng::RngStream;
use fragility_lab::Result;

fn main() -> Result<()> {
    let d = 12;
    let mut rng = RngStream::new(90);

    // Kinked net: watch the discretization error fall with the grid.
    let model = MlpModel::random(&mut rng, &[d, 64, 2], Activation::Relu)?;
    let a: Vec<f64> = (0..d).map(|_| 2.0 * rng.normal()).collect();
    let b: Vec<f64> = (0..d).map(|_| 2.0 * rng.normal()).collect();
    let exact = d_change(&model, &a, &b, (0, 1))?;

    println!("ReLU net, exact logit-gap change D = {exact:.6}\n");
    println!("grid points   integral     relative error");
    for n in [10usize, 30, 100, 300, 1000] {
        let path = make_path(&a, &b, n)?;
        let profile = path_profile(&model, &path, (0, 1))?;
        let g0 = profile[0].grad_norm;
        let m = path_integral_m(&profile, g0, path.length())?;
        let rel = (m * g0 - exact).abs() / exact.abs();
        println!("{n:>11}   {:>9.6}   {rel:>10.2e}", m * g0);
    }

    // Linear net: |M| is exactly the minimal attack norm.
    let model = MlpModel::random(&mut rng, &[d, 32, 2], Activation::Identity)?;
    let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let source = argmax(&model.forward(&x)?);
    let attack = iterative_gradient_attack(&model, &x, source, 1 - source, 0.01, 200_000)?;
    let adv = matrix::add(&x, &attack.perturbation);
    let path = make_path(&x, &adv, 11)?;
    let profile = path_profile(&model, &path, (source, 1 - source))?;
    let m = path_integral_m(&profile, profile[0].grad_norm, path.length())?;

    println!("\nlinear net:");
    println!("  measured attack norm  {:.6}", attack.norm);
    println!("  |M| along the path    {:.6}", m.abs());
    println!("  first-order estimate  {:.6}", attack.bound);
    Ok(())
}
