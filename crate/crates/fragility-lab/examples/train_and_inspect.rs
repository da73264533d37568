//! Train a small linear net on sign-code data, then read off the three
//! angle diagnostics: did the net learn the compressed decision rule, and
//! does its measured fragility match the predicted ratio?

use fragility_lab::analysis::linear_compression_angles;
use fragility_lab::attacks::iterative_gradient_attack;
use fragility_lab::datagen::gen_hypercube;
use fragility_lab::matrix;
use fragility_lab::models::{train, Activation, MlpModel, TrainConfig};
use fragility_lab::rng::RngStream;
use fragility_lab::Result;

fn main() -> Result<()> {
    let d = 12;
    let root = RngStream::new(77);
    let mut data_rng = root.child(0);
    let data = gen_hypercube(&mut data_rng, d, 1 << d, 5.0)?;

    let mut init_rng = root.child(1);
    let mut model = MlpModel::random(&mut init_rng, &[d, 256, 2], Activation::Identity)?;
    let config = TrainConfig {
        epochs: 20,
        learning_rate: 1e-2,
        batch_size: Some(128),
        ..TrainConfig::new(root.child(2).seed())
    };
    let report = train(&mut model, &data, &config)?;
    println!(
        "trained: accuracy {:.4}, valid = {}",
        report.final_train_accuracy, report.valid
    );

    let angles = linear_compression_angles(&model, &data)?;
    println!("\ncos theta1 (decision vs critical column)  {:+.4}", angles.cos_theta1);
    println!("cos theta2 (weights vs idealized net)     {:+.4}", angles.cos_theta2);
    println!("phi        (predicted relative fragility) {:+.4}", angles.phi);

    // Measured fragility: minimal gradient-attack norm over a few inputs,
    // compared with phi times the critical feature's length.
    let m = matrix::norm(&angles.critical_column);
    let predicted = angles.phi.abs() * m;
    let mut best = f64::INFINITY;
    for p in 0..8 {
        let source = data.labels[p];
        let out = iterative_gradient_attack(
            &model,
            &data.inputs[p],
            source,
            1 - source,
            0.01,
            200_000,
        )?;
        if out.success {
            best = best.min(out.norm);
        }
    }
    println!("\nsmallest attack norm over 8 points        {best:.4}");
    println!("phi * ||critical column||                 {predicted:.4}");
    println!("\nA well-aligned net (|cos theta2| near 1) is exactly as fragile");
    println!("as the compression ratio says it must be.");
    Ok(())
}
