//! Multilayer perceptrons built from scratch: forward passes, reverse-mode
//! input gradients, Adam training on cross-entropy loss, and the two
//! closed-form weight constructions whose robustness the attacks probe.
//!
//! Classification decisions always read raw logits (argmax, ties to the
//! lowest class id); softmax only ever appears inside the loss, which keeps
//! decisions and probabilities trivially consistent.

use crate::datagen::{Dataset, DatasetKind};
use crate::error::{Error, Result};
use crate::matrix::{qr_decompose, DenseMatrix};
use crate::rmt::sample_gaussian_matrix;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative at a preactivation value; the ReLU subgradient at 0 is 0.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A feed-forward network; layer `i` maps width `dims[i]` to `dims[i+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ModelFile {
    layers: Vec<Layer>,
    dims: Vec<usize>,
}

impl From<MlpModel> for ModelFile {
    fn from(m: MlpModel) -> ModelFile {
        let dims = m.dims();
        ModelFile { layers: m.layers, dims }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = String;

    fn try_from(f: ModelFile) -> std::result::Result<Self, String> {
        let m = MlpModel { layers: f.layers };
        m.check_chain().map_err(|e| e.to_string())?;
        if m.dims() != f.dims {
            return Err("dims field disagrees with layer shapes".into());
        }
        Ok(m)
    }
}

impl MlpModel {
    /// Fresh network with Gaussian `N(0, 1/fan_in)` weights and zero biases.
    /// Hidden layers use `hidden` activation; the output layer emits raw
    /// logits through an identity activation.
    pub fn random(rng: &mut RngStream, dims: &[usize], hidden: Activation) -> Result<MlpModel> {
        if dims.len() < 2 {
            return Err(Error::Precondition("need input and output dims".into()));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = sample_gaussian_matrix(rng, fan_out, fan_in, 1.0 / (fan_in as f64).sqrt())?;
            let activation = if layers.len() + 2 == dims.len() {
                Activation::Identity
            } else {
                hidden
            };
            layers.push(Layer {
                weights,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        Ok(MlpModel { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.rows()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.weights.rows()));
        dims
    }

    pub fn is_linear(&self) -> bool {
        self.layers.iter().all(|l| l.activation == Activation::Identity)
    }

    fn check_chain(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Precondition("model needs at least one layer".into()));
        }
        for (a, b) in self.layers.iter().zip(&self.layers[1..]) {
            if a.weights.rows() != b.weights.cols() {
                return Err(Error::Dimension(format!(
                    "layer widths do not chain: {} then {}",
                    a.weights.rows(),
                    b.weights.cols()
                )));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.weights.rows() {
                return Err(Error::Dimension("bias length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Logits for a single input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input of length {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&h)?;
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi = layer.activation.apply(*zi + b);
            }
            h = z;
        }
        Ok(h)
    }

    /// Logits for a batch stored as rows of `x`.
    pub fn forward_batch(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut h = x.clone();
        for layer in &self.layers {
            let mut z = h.matmul_nt(&layer.weights)?;
            for i in 0..z.rows() {
                let row = z.row_mut(i);
                for (zi, b) in row.iter_mut().zip(&layer.bias) {
                    *zi = layer.activation.apply(*zi + b);
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Gradient of logit `i` (or of `f_i - f_j` when `j` is given) with
    /// respect to the input, by reverse accumulation.
    pub fn input_gradient(&self, x: &[f64], i: usize, j: Option<usize>) -> Result<Vec<f64>> {
        let k = self.output_dim();
        if i >= k || j.map_or(false, |j| j >= k) {
            return Err(Error::Precondition(format!(
                "class out of range for {k} outputs"
            )));
        }
        if x.len() != self.input_dim() {
            return Err(Error::Dimension("input dimension mismatch".into()));
        }

        // Forward pass keeping preactivations.
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&h)?;
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi += b;
            }
            h = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pres.push(z);
        }

        let mut up = vec![0.0; k];
        up[i] = 1.0;
        if let Some(j) = j {
            up[j] -= 1.0;
        }
        for (layer, pre) in self.layers.iter().zip(&pres).rev() {
            for (u, p) in up.iter_mut().zip(pre) {
                *u *= layer.activation.derivative(*p);
            }
            up = layer.weights.matvec_t(&up)?;
        }
        Ok(up)
    }

    /// Predicted class: argmax of logits, ties to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MlpModel> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Argmax with ties resolved to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy on logits.
    CrossEntropy,
    /// Negative log likelihood of the softmax; identical to cross-entropy
    /// for hard labels, kept as a separate name for config clarity.
    Nll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Examples per optimizer step; absent means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub optimizer: OptimizerKind,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(0)
    }
}

impl TrainConfig {
    pub fn new(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: None,
            optimizer: OptimizerKind::Adam,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            loss: LossKind::CrossEntropy,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Precondition("epochs must be at least 1".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::Precondition("learning rate must be nonnegative".into()));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::Precondition("Adam betas must lie in [0, 1)".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Precondition("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    pub loss_curve: Vec<f64>,
    /// Exact training accuracy 1 under the documented tie-break.
    pub valid: bool,
}

struct AdamTensor {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamTensor {
    fn new(len: usize) -> AdamTensor {
        AdamTensor {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
        (b1, b2): (f64, f64),
        eps: f64,
        t: i32,
    ) {
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Train in place with Adam over shuffled mini-batches.
///
/// The shuffle order is drawn from `config.seed` alone, so a run is fully
/// determined by `(initial model, dataset, config)`.  A non-finite loss
/// aborts with the offending epoch.
pub fn train(model: &mut MlpModel, dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Precondition("empty dataset".into()));
    }
    if dataset.d != model.input_dim() || dataset.num_classes() != model.output_dim() {
        return Err(Error::Dimension(format!(
            "dataset {}d/{} classes vs model {}/{}",
            dataset.d,
            dataset.num_classes(),
            model.input_dim(),
            model.output_dim()
        )));
    }

    let n = dataset.len();
    let batch = config.batch_size.unwrap_or(n).min(n);
    let mut rng = RngStream::new(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam: Vec<(AdamTensor, AdamTensor)> = model
        .layers
        .iter()
        .map(|l| {
            (
                AdamTensor::new(l.weights.rows() * l.weights.cols()),
                AdamTensor::new(l.bias.len()),
            )
        })
        .collect();
    let mut t = 0;
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let x = DenseMatrix::from_fn(chunk.len(), dataset.d, |r, c| {
                dataset.inputs[chunk[r]][c]
            });
            let ys: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
            let (loss, grads) = backward_batch(model, &x, &ys)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;

            t += 1;
            for ((layer, (aw, ab)), (gw, gb)) in
                model.layers.iter_mut().zip(&mut adam).zip(grads)
            {
                aw.step(
                    layer.weights.data_mut(),
                    &gw,
                    config.learning_rate,
                    config.adam_betas,
                    config.adam_eps,
                    t,
                );
                ab.step(
                    &mut layer.bias,
                    &gb,
                    config.learning_rate,
                    config.adam_betas,
                    config.adam_eps,
                    t,
                );
            }
        }
        loss_curve.push(epoch_loss / n as f64);
    }

    let accuracy = training_accuracy(model, dataset)?;
    Ok(TrainReport {
        final_train_accuracy: accuracy,
        loss_curve,
        valid: accuracy == 1.0,
    })
}

/// Fraction of training points the model labels correctly.
pub fn training_accuracy(model: &MlpModel, dataset: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    let chunk_rows = 4096;
    let mut start = 0;
    while start < dataset.len() {
        let end = (start + chunk_rows).min(dataset.len());
        let x = DenseMatrix::from_fn(end - start, dataset.d, |r, c| {
            dataset.inputs[start + r][c]
        });
        let logits = model.forward_batch(&x)?;
        for r in 0..logits.rows() {
            if argmax(logits.row(r)) == dataset.labels[start + r] {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Mean loss over the batch and per-layer (weight, bias) gradients.
fn backward_batch(
    model: &MlpModel,
    x: &DenseMatrix,
    ys: &[usize],
) -> Result<(f64, Vec<(Vec<f64>, Vec<f64>)>)> {
    let b = x.rows();
    // Forward pass keeping preactivations and activations.
    let mut acts: Vec<DenseMatrix> = vec![x.clone()];
    let mut pres: Vec<DenseMatrix> = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let mut z = acts.last().unwrap().matmul_nt(&layer.weights)?;
        for i in 0..z.rows() {
            for (zi, bias) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                *zi += bias;
            }
        }
        let mut a = z.clone();
        for i in 0..a.rows() {
            for v in a.row_mut(i) {
                *v = layer.activation.apply(*v);
            }
        }
        pres.push(z);
        acts.push(a);
    }

    // Softmax cross-entropy: loss and dL/dlogits, averaged over the batch.
    let logits = acts.last().unwrap();
    let mut dz = logits.clone();
    let mut loss = 0.0;
    for i in 0..b {
        let row = dz.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        loss += -(row[ys[i]] / sum).ln();
        for v in row.iter_mut() {
            *v /= sum;
        }
        row[ys[i]] -= 1.0;
        for v in row.iter_mut() {
            *v /= b as f64;
        }
    }
    loss /= b as f64;

    // Reverse pass.
    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate().rev() {
        // Chain through this layer's activation.
        if layer.activation == Activation::Relu {
            for i in 0..b {
                for (g, p) in dz.row_mut(i).iter_mut().zip(pres[l].row(i)) {
                    *g *= layer.activation.derivative(*p);
                }
            }
        }
        let gw = dz.matmul_tn(&acts[l])?;
        let mut gb = vec![0.0; layer.bias.len()];
        for i in 0..b {
            for (s, g) in gb.iter_mut().zip(dz.row(i)) {
                *s += g;
            }
        }
        grads.push((gw.data().to_vec(), gb));
        if l > 0 {
            dz = dz.matmul(&layer.weights)?;
        }
    }
    grads.reverse();
    Ok((loss, grads))
}

/// Exact-fit two-layer linear network for the one-class-per-point problem.
///
/// With X = Q2 R and H1 = Q1 RH, the output weights
/// `H2 = R^-1 Q2^T RH^-1 Q1^T` give `H2 H1 = R^-1 Q2^T = X^-1` exactly,
/// so every training point maps to its own unit logit vector.
pub fn ideal_two_layer(
    rng: &mut RngStream,
    dataset: &Dataset,
    hidden_width: usize,
) -> Result<MlpModel> {
    if dataset.kind != DatasetKind::OrthogonalLabel {
        return Err(Error::Precondition(format!(
            "ideal two-layer net needs an orthogonal-label dataset, got {:?}",
            dataset.kind
        )));
    }
    let x = dataset
        .a_matrix
        .as_ref()
        .ok_or_else(|| Error::InvalidData("dataset lacks its data matrix".into()))?;
    let d = dataset.d;
    if hidden_width < d {
        return Err(Error::Precondition(format!(
            "hidden width {hidden_width} below data dimension {d}"
        )));
    }
    if x.condition_estimate()? >= 1e12 {
        return Err(Error::Singular { column: d - 1 });
    }

    let x_qr = qr_decompose(x)?;
    let h1 = sample_gaussian_matrix(rng, hidden_width, d, 1.0)?;
    let hq_qr = qr_decompose(&h1)?;

    let r_inv = crate::matrix::invert_upper_triangular(&x_qr.r)?;
    let rh_inv = crate::matrix::invert_upper_triangular(&hq_qr.r)?;
    let h2 = r_inv
        .matmul(&x_qr.q.transpose())?
        .matmul(&rh_inv)?
        .matmul(&hq_qr.q.transpose())?;

    Ok(MlpModel {
        layers: vec![
            Layer {
                weights: h1,
                bias: vec![0.0; hidden_width],
                activation: Activation::Identity,
            },
            Layer {
                weights: h2,
                bias: vec![0.0; d],
                activation: Activation::Identity,
            },
        ],
    })
}

/// Exact sign-code classifier for the hypercube problem: both logits are
/// `±(last row of A^-1) · x`, which evaluates to the last code bit.
pub fn ideal_hypercube_net(dataset: &Dataset) -> Result<MlpModel> {
    if dataset.kind != DatasetKind::Hypercube {
        return Err(Error::Precondition(format!(
            "ideal hypercube net needs a hypercube dataset, got {:?}",
            dataset.kind
        )));
    }
    let a = dataset
        .a_matrix
        .as_ref()
        .ok_or_else(|| Error::InvalidData("dataset lacks its mixing matrix".into()))?;
    let d = dataset.d;
    let qr = qr_decompose(a)?;
    let rdd = qr.r[(d - 1, d - 1)];
    if rdd <= 0.0 {
        return Err(Error::Singular { column: d - 1 });
    }
    // Last row of A^-1 = e_d^T R^-1 Q^T = Q[:, d]^T / R_dd.
    let w: Vec<f64> = (0..d).map(|i| qr.q[(i, d - 1)] / rdd).collect();
    let mut weights = DenseMatrix::zeros(2, d);
    for (j, &wj) in w.iter().enumerate() {
        weights[(0, j)] = wj;
        weights[(1, j)] = -wj;
    }
    Ok(MlpModel {
        layers: vec![Layer {
            weights,
            bias: vec![0.0; 2],
            activation: Activation::Identity,
        }],
    })
}

/// Effective input-space weight vectors of a linear network's logits: the
/// requested rows of the full weight product, biases excluded.
pub fn probing_vectors(model: &MlpModel, classes: &[usize]) -> Result<Vec<Vec<f64>>> {
    if !model.is_linear() {
        return Err(Error::Unsupported(
            "probing vectors are defined for linear networks only".into(),
        ));
    }
    let mut product = model.layers[0].weights.clone();
    for layer in &model.layers[1..] {
        product = layer.weights.matmul(&product)?;
    }
    classes
        .iter()
        .map(|&c| {
            if c >= product.rows() {
                Err(Error::Precondition(format!(
                    "class {c} out of range for {} outputs",
                    product.rows()
                )))
            } else {
                Ok(product.row(c).to_vec())
            }
        })
        .collect()
}
