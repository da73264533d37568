//! Local compression ratio of a trained ReLU net along the segment between
//! two fresh class representatives: rho stays flat and well below 1, so the
//! decision only ever depends on a thin slice of the input.

use fragility_lab::analysis::local_ratio_rho;
use fragility_lab::datagen::gen_hypercube;
use fragility_lab::matrix;
use fragility_lab::models::{train, Activation, MlpModel, TrainConfig};
use fragility_lab::rng::RngStream;
use fragility_lab::Result;

fn main() -> Result<()> {
    let d = 12;
    let root = RngStream::new(78);
    let mut data_rng = root.child(0);
    let data = gen_hypercube(&mut data_rng, d, 1 << d, 5.0)?;

    let mut init_rng = root.child(1);
    let mut model = MlpModel::random(&mut init_rng, &[d, 256, 2], Activation::Relu)?;
    let config = TrainConfig {
        epochs: 20,
        learning_rate: 1e-2,
        batch_size: Some(128),
        ..TrainConfig::new(root.child(2).seed())
    };
    let report = train(&mut model, &data, &config)?;
    println!(
        "trained ReLU net: accuracy {:.4}, valid = {}",
        report.final_train_accuracy, report.valid
    );

    // A fresh code pair agreeing everywhere but the labeling bit gives one
    // representative per class; slide between their images.
    let a = data.a_matrix.as_ref().unwrap();
    let mut pair_rng = root.child(3);
    let mut z: Vec<f64> = (0..d)
        .map(|_| if pair_rng.below(2) == 0 { -1.0 } else { 1.0 })
        .collect();
    z[d - 1] = 1.0;
    let b1 = a.matvec(&z)?;
    z[d - 1] = -1.0;
    let b2 = a.matvec(&z)?;

    println!("\nalpha   rho");
    let n = 10;
    let mut values = Vec::new();
    for j in 0..n {
        let alpha = j as f64 / (n - 1) as f64;
        let x: Vec<f64> = b1
            .iter()
            .zip(&b2)
            .map(|(p, q)| alpha * p + (1.0 - alpha) * q)
            .collect();
        let x1 = matrix::sub(&b1, &x);
        let x2 = matrix::sub(&b2, &x);
        let rho = local_ratio_rho(&model, &x, &x1, &x2)?;
        values.push(rho);
        println!("{alpha:.3}   {rho:.4}");
    }

    let spread = values.iter().cloned().fold(f64::MIN, f64::max)
        - values.iter().cloned().fold(f64::MAX, f64::min);
    let avg = values.iter().sum::<f64>() / values.len() as f64;
    println!("\nspread across alpha: {spread:.4}");
    println!(
        "A ratio of 1 would mean the displacement lines up with the gradient;\n\
         at rho = {avg:.2} the decision sees only {:.0}% of the gap's energy.",
        100.0 * avg * avg
    );
    Ok(())
}
