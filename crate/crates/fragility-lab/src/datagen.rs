//! The three synthetic classification problems, plus straight-line paths
//! between inputs for the path-compression measurements.
//!
//! All generators are pure functions of `(seed, parameters)`: the same seed
//! reproduces the same dataset byte for byte, which the experiment harness
//! leans on for its determinism guarantees.

use crate::error::{Error, Result};
use crate::matrix::{self, DenseMatrix};
use crate::rmt::sample_gaussian_matrix;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// d Gaussian points, one class per point.
    OrthogonalLabel,
    /// d points pushed through a chain of Gaussian generator matrices.
    GenerativeChain,
    /// Sign-code points x = Az with the label carried by the last code bit.
    Hypercube,
}

/// A generated training set together with everything needed to rebuild or
/// analyze it: the mixing matrix, the generator chain, or the sign codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub d: usize,
    pub seed: u64,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<DenseMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_codes: Option<Vec<Vec<i32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_scales: Option<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        match self.kind {
            DatasetKind::OrthogonalLabel | DatasetKind::GenerativeChain => self.d,
            DatasetKind::Hypercube => 2,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        let ds: Dataset = serde_json::from_reader(std::io::BufReader::new(file))?;
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.labels.len() {
            return Err(Error::InvalidData("inputs and labels differ in length".into()));
        }
        if self.inputs.iter().any(|x| x.len() != self.d) {
            return Err(Error::InvalidData("input dimension mismatch".into()));
        }
        let classes = self.num_classes();
        if self.labels.iter().any(|&l| l >= classes) {
            return Err(Error::InvalidData("label out of class range".into()));
        }
        if let Some(z) = &self.z_codes {
            if z.iter().flatten().any(|&b| b != 1 && b != -1) {
                return Err(Error::InvalidData("z codes must be +1 or -1".into()));
            }
        }
        Ok(())
    }
}

/// d standard-Gaussian points in d dimensions, point i labeled i.
///
/// The points are stored column-wise in `a_matrix`, which later serves as
/// the X whose QR factorization drives the idealized construction.
pub fn gen_orthogonal_label(rng: &mut RngStream, d: usize) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::Precondition(format!("d must be at least 2, got {d}")));
    }
    let x = sample_gaussian_matrix(rng, d, d, 1.0)?;
    let inputs: Vec<Vec<f64>> = (0..d).map(|i| x.column(i)).collect();
    Ok(Dataset {
        kind: DatasetKind::OrthogonalLabel,
        d,
        seed: rng.seed(),
        inputs,
        labels: (0..d).collect(),
        a_matrix: Some(x),
        chain: None,
        z_codes: None,
        column_scales: None,
    })
}

/// d points produced by a depth-t generative chain: x_i = G_t ... G_1 v_i
/// with v_i standard Gaussian and each G entry N(0, 1/d).
///
/// The chain is stored innermost first (`chain[0]` = G_1).
pub fn gen_generative_chain(rng: &mut RngStream, d: usize, t: usize) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::Precondition(format!("d must be at least 2, got {d}")));
    }
    if t < 1 {
        return Err(Error::Precondition("chain depth must be at least 1".into()));
    }
    let stddev = 1.0 / (d as f64).sqrt();
    let chain: Vec<DenseMatrix> = (0..t)
        .map(|_| sample_gaussian_matrix(rng, d, d, stddev))
        .collect::<Result<_>>()?;
    let mut product = chain[0].clone();
    for g in &chain[1..] {
        product = g.matmul(&product)?;
    }
    let inputs: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            product.matvec(&v)
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        kind: DatasetKind::GenerativeChain,
        d,
        seed: rng.seed(),
        inputs,
        labels: (0..d).collect(),
        a_matrix: None,
        chain: Some(chain),
        z_codes: None,
        column_scales: None,
    })
}

/// Sign-code dataset x = Az over codes z drawn uniformly without
/// replacement from {-1, +1}^d; exhaustive when `sample_count = 2^d`.
///
/// Columns 1..d-1 of A are scaled by `column_scale` (the last column stays
/// untouched, so the QR quantities the theory reads off the last column are
/// unchanged).  Code bit +1 in the last coordinate maps to class 0, -1 to
/// class 1.  A is redrawn in the rare event its condition estimate exceeds
/// 1e12, so code recovery z = A^-1 x stays exact in floating point.
pub fn gen_hypercube(
    rng: &mut RngStream,
    d: usize,
    sample_count: usize,
    column_scale: f64,
) -> Result<Dataset> {
    if d < 2 || d > 63 {
        return Err(Error::Precondition(format!("d must lie in [2, 63], got {d}")));
    }
    if !(column_scale > 0.0) {
        return Err(Error::Domain("column scale must be positive".into()));
    }
    let total: u128 = 1u128 << d;
    if (sample_count as u128) > total {
        return Err(Error::Domain(format!(
            "sample_count {sample_count} exceeds 2^{d}"
        )));
    }
    if sample_count < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }

    let a = {
        let mut attempt = 0;
        loop {
            let mut m = sample_gaussian_matrix(rng, d, d, 1.0)?;
            for j in 0..d - 1 {
                m.scale_column(j, column_scale);
            }
            if m.condition_estimate().map(|c| c < 1e12).unwrap_or(false) {
                break m;
            }
            attempt += 1;
            if attempt > 100 {
                return Err(Error::InvalidData(
                    "could not draw a well-conditioned mixing matrix".into(),
                ));
            }
        }
    };

    let codes = sample_codes(rng, d, sample_count, total)?;
    let mut inputs = Vec::with_capacity(sample_count);
    let mut labels = Vec::with_capacity(sample_count);
    let mut z_codes = Vec::with_capacity(sample_count);
    for code in codes {
        let z: Vec<i32> = (0..d)
            .map(|j| if (code >> j) & 1 == 0 { 1 } else { -1 })
            .collect();
        let zf: Vec<f64> = z.iter().map(|&b| b as f64).collect();
        inputs.push(a.matvec(&zf)?);
        labels.push(if z[d - 1] == 1 { 0 } else { 1 });
        z_codes.push(z);
    }

    let mut column_scales = vec![column_scale; d - 1];
    column_scales.push(1.0);
    Ok(Dataset {
        kind: DatasetKind::Hypercube,
        d,
        seed: rng.seed(),
        inputs,
        labels,
        a_matrix: Some(a),
        chain: None,
        z_codes: Some(z_codes),
        column_scales: Some(column_scales),
    })
}

/// Uniform-without-replacement draw of `sample_count` code words.
///
/// Codes are visited in Gray-code order when exhaustive; otherwise a
/// partial shuffle of the full index range keeps the draw exactly uniform
/// for d small enough to materialize it, with hash-set rejection beyond.
fn sample_codes(
    rng: &mut RngStream,
    d: usize,
    sample_count: usize,
    total: u128,
) -> Result<Vec<u64>> {
    let gray = |i: u64| i ^ (i >> 1);
    if sample_count as u128 == total {
        return Ok((0..total as u64).map(gray).collect());
    }
    if d <= 20 {
        let mut indices: Vec<u64> = (0..total as u64).collect();
        for i in 0..sample_count {
            let j = i + rng.below(indices.len() as u64 - i as u64) as usize;
            indices.swap(i, j);
        }
        indices.truncate(sample_count);
        return Ok(indices.into_iter().map(gray).collect());
    }
    let mut seen = HashSet::with_capacity(sample_count);
    let mut out = Vec::with_capacity(sample_count);
    while out.len() < sample_count {
        let code = rng.below(total as u64);
        if seen.insert(code) {
            out.push(gray(code));
        }
    }
    Ok(out)
}

/// A straight line between two inputs, sampled on a uniform alpha grid.
/// `alpha = 1` lands on `endpoint_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub endpoint_a: Vec<f64>,
    pub endpoint_b: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl PathSpec {
    pub fn point_at(&self, alpha: f64) -> Vec<f64> {
        self.endpoint_a
            .iter()
            .zip(&self.endpoint_b)
            .map(|(a, b)| alpha * b + (1.0 - alpha) * a)
            .collect()
    }

    /// Euclidean length of the segment.
    pub fn length(&self) -> f64 {
        matrix::norm(&matrix::sub(&self.endpoint_b, &self.endpoint_a))
    }

    /// Direction `endpoint_b - endpoint_a` (not normalized).
    pub fn direction(&self) -> Vec<f64> {
        matrix::sub(&self.endpoint_b, &self.endpoint_a)
    }
}

pub fn make_path(a: &[f64], b: &[f64], n_alpha: usize) -> Result<PathSpec> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "path endpoints of dimension {} and {}",
            a.len(),
            b.len()
        )));
    }
    if n_alpha < 2 {
        return Err(Error::Precondition("need at least two grid points".into()));
    }
    let alphas = (0..n_alpha)
        .map(|i| i as f64 / (n_alpha - 1) as f64)
        .collect();
    Ok(PathSpec {
        endpoint_a: a.to_vec(),
        endpoint_b: b.to_vec(),
        alphas,
    })
}
