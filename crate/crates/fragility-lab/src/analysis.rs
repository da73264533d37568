//! Compression diagnostics: the angle statistics that compare trained
//! networks against the idealized construction, the local projection ratio,
//! and the discretized path integral of gradient-aligned change.

use crate::datagen::{Dataset, DatasetKind, PathSpec};
use crate::error::{Error, Result};
use crate::matrix::{self, qr_decompose};
use crate::models::{probing_vectors, MlpModel};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Cosine of the angle between two vectors, clamped into [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    let (nu, nv) = (matrix::norm(u), matrix::norm(v));
    if nu <= 1e-12 || nv <= 1e-12 {
        return Err(Error::DegenerateProbe(
            "cosine of a (near-)zero vector".into(),
        ));
    }
    Ok((matrix::dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// The three headline angles for a linear two-class model on a sign-code
/// dataset, together with the raw vectors they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    /// Angle between the decision direction W1 - W2 and the last column of A.
    pub cos_theta1: f64,
    /// Angle between W1 and the last row of A^-1.
    pub cos_theta2: f64,
    /// |R_dd| / ||A[:, d]||: the predicted compression ratio.
    pub phi: f64,
    pub w1: Vec<f64>,
    pub decision_direction: Vec<f64>,
    pub critical_column: Vec<f64>,
    pub inv_a_last_row: Vec<f64>,
}

pub fn linear_compression_angles(model: &MlpModel, dataset: &Dataset) -> Result<AngleReport> {
    if dataset.kind != DatasetKind::Hypercube {
        return Err(Error::Precondition(format!(
            "angle analysis needs a hypercube dataset, got {:?}",
            dataset.kind
        )));
    }
    if model.output_dim() != 2 {
        return Err(Error::Precondition("angle analysis needs two logits".into()));
    }
    let a = dataset
        .a_matrix
        .as_ref()
        .ok_or_else(|| Error::InvalidData("dataset lacks its mixing matrix".into()))?;
    let d = dataset.d;

    let probes = probing_vectors(model, &[0, 1])?;
    let w1 = probes[0].clone();
    let decision = matrix::sub(&probes[0], &probes[1]);

    let qr = qr_decompose(a)?;
    let rdd = qr.r[(d - 1, d - 1)];
    let critical = a.column(d - 1);
    let inv_last: Vec<f64> = (0..d).map(|i| qr.q[(i, d - 1)] / rdd).collect();

    Ok(AngleReport {
        cos_theta1: cosine(&decision, &critical)?,
        cos_theta2: cosine(&w1, &inv_last)?,
        phi: rdd / matrix::norm(&critical),
        w1,
        decision_direction: decision,
        critical_column: critical,
        inv_a_last_row: inv_last,
    })
}

/// Fraction of the displacement x1 - x2 that survives projection onto the
/// gradient-difference direction at x; equals |cos| of the angle between
/// grad(f1 - f2)(x) and x1 - x2.
pub fn local_ratio_rho(model: &MlpModel, x: &[f64], x1: &[f64], x2: &[f64]) -> Result<f64> {
    let grad = model.input_gradient(x, 0, Some(1))?;
    let diff = matrix::sub(x1, x2);
    if matrix::norm(&diff) <= 1e-12 {
        return Err(Error::DegenerateProbe("coincident endpoints".into()));
    }
    if matrix::norm(&grad) <= 1e-12 {
        return Err(Error::DegenerateProbe("vanishing gradient".into()));
    }
    Ok(cosine(&grad, &diff)?.abs())
}

/// One gradient measurement along a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub alpha: f64,
    /// Cosine between grad g at this point and the a-to-b direction.
    pub cos_theta: f64,
    pub grad_norm: f64,
    /// True where the gradient vanished; such points record zeros.
    pub degenerate: bool,
}

/// Evaluate grad(f_i - f_j) along the path grid.
pub fn path_profile(
    model: &MlpModel,
    path: &PathSpec,
    classes: (usize, usize),
) -> Result<Vec<PathPoint>> {
    let dir = path.direction();
    if matrix::norm(&dir) <= 1e-12 {
        return Err(Error::Precondition("path endpoints coincide".into()));
    }
    path.alphas
        .iter()
        .map(|&alpha| {
            let x = path.point_at(alpha);
            let grad = model.input_gradient(&x, classes.0, Some(classes.1))?;
            let gn = matrix::norm(&grad);
            if gn <= 1e-12 {
                return Ok(PathPoint {
                    alpha,
                    cos_theta: 0.0,
                    grad_norm: 0.0,
                    degenerate: true,
                });
            }
            Ok(PathPoint {
                alpha,
                cos_theta: cosine(&grad, &dir)?,
                grad_norm: gn,
                degenerate: false,
            })
        })
        .collect()
}

/// Discretized path integral of ||grad g|| cos(theta) along the grid,
/// normalized by the gradient norm at the attack's starting point.
///
/// Trapezoid weights make the constant-integrand case exact: a profile with
/// constant cosine c and constant norm equal to `grad_norm_at_start`
/// integrates to exactly c * L.
pub fn path_integral_m(
    profile: &[PathPoint],
    grad_norm_at_start: f64,
    path_length: f64,
) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::Precondition("profile needs at least two points".into()));
    }
    if !(grad_norm_at_start > 0.0) {
        return Err(Error::Domain("start gradient norm must be positive".into()));
    }
    let n = profile.len();
    let h = path_length / (n - 1) as f64;
    let mut sum = 0.0;
    for (k, p) in profile.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += w * p.cos_theta * p.grad_norm * h;
    }
    Ok(sum / grad_norm_at_start)
}

/// Change in g = f_i - f_j between two inputs: g(b) - g(a).
pub fn d_change(model: &MlpModel, a: &[f64], b: &[f64], classes: (usize, usize)) -> Result<f64> {
    let fa = model.forward(a)?;
    let fb = model.forward(b)?;
    Ok((fb[classes.0] - fb[classes.1]) - (fa[classes.0] - fa[classes.1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub d: usize,
    pub kind: DatasetKind,
    pub valid: bool,
}

/// Everything measured about one run, serialized with the raw vectors so
/// every cosine can be recomputed from the record alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub cos_theta1: f64,
    pub cos_theta2: f64,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_profile: Option<Vec<PathPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_signed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_change: Option<f64>,
    pub run_metadata: RunMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<ReportVectors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportVectors {
    pub w1: Vec<f64>,
    pub decision_direction: Vec<f64>,
    pub critical_column: Vec<f64>,
    pub inv_a_last_row: Vec<f64>,
}

impl CompressionReport {
    pub fn abs_gap(&self) -> f64 {
        (self.cos_theta1.abs() - self.phi).abs()
    }

    pub const CSV_HEADER: &'static str =
        "seed,d,valid,cos_theta1,cos_theta2,phi,abs_gap,rho,m_signed,d_change";

    /// One CSV row matching [`Self::CSV_HEADER`]; absent optionals leave
    /// empty cells.
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.run_metadata.seed,
            self.run_metadata.d,
            if self.run_metadata.valid { 1 } else { 0 },
            self.cos_theta1,
            self.cos_theta2,
            self.phi,
            self.abs_gap(),
        );
        for opt in [self.rho, self.m_signed, self.d_change] {
            match opt {
                Some(v) => {
                    let _ = write!(row, ",{v:.6}");
                }
                None => row.push(','),
            }
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_hypercube, make_path};
    use crate::models::{ideal_hypercube_net, Activation, MlpModel};
    use crate::rng::RngStream;

    #[test]
    fn cosine_basics() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(cosine(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cosine(&e1, &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(
            cosine(&e1, &[0.0, 0.0]),
            Err(Error::DegenerateProbe(_))
        ));
    }

    #[test]
    fn idealized_net_satisfies_the_angle_identity() {
        for seed in [80u64, 81, 82] {
            let mut rng = RngStream::new(seed);
            let ds = gen_hypercube(&mut rng, 10, 512, 5.0).unwrap();
            let model = ideal_hypercube_net(&ds).unwrap();
            let rep = linear_compression_angles(&model, &ds).unwrap();
            assert!((rep.cos_theta2.abs() - 1.0).abs() < 1e-9, "cos2 {}", rep.cos_theta2);
            assert!(
                (rep.cos_theta1.abs() - rep.phi).abs() < 1e-9,
                "cos1 {} vs phi {}",
                rep.cos_theta1,
                rep.phi
            );
            assert!(rep.phi >= 0.0 && rep.phi <= 1.0);
        }
    }

    #[test]
    fn orthonormal_mixing_gives_phi_one() {
        let mut rng = RngStream::new(83);
        let mut ds = gen_hypercube(&mut rng, 4, 16, 1.0).unwrap();
        let eye = crate::matrix::DenseMatrix::identity(4);
        ds.inputs = ds
            .z_codes
            .as_ref()
            .unwrap()
            .iter()
            .map(|z| z.iter().map(|&b| b as f64).collect())
            .collect();
        ds.a_matrix = Some(eye);
        let model = ideal_hypercube_net(&ds).unwrap();
        let rep = linear_compression_angles(&model, &ds).unwrap();
        assert!((rep.phi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_is_one_when_aligned() {
        let mut rng = RngStream::new(84);
        let model = MlpModel::random(&mut rng, &[5, 2], Activation::Identity).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        let grad = model.input_gradient(&x, 0, Some(1)).unwrap();
        let x2 = [0.0; 5];
        let rho = local_ratio_rho(&model, &x, &grad, &x2).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_profile_constant_for_linear_models() {
        let mut rng = RngStream::new(85);
        let model = MlpModel::random(&mut rng, &[4, 2], Activation::Identity).unwrap();
        let a: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let path = make_path(&a, &b, 7).unwrap();
        let profile = path_profile(&model, &path, (0, 1)).unwrap();
        for p in &profile {
            assert!((p.cos_theta - profile[0].cos_theta).abs() < 1e-12);
            assert!((p.grad_norm - profile[0].grad_norm).abs() < 1e-12);
            assert!(!p.degenerate);
        }

        // Reversing the endpoints negates every cosine.
        let back = make_path(&b, &a, 7).unwrap();
        let rev = path_profile(&model, &back, (0, 1)).unwrap();
        for (p, q) in profile.iter().zip(rev.iter().rev()) {
            assert!((p.cos_theta + q.cos_theta).abs() < 1e-12);
        }
    }

    #[test]
    fn path_integral_constant_profile_is_exact() {
        let profile: Vec<PathPoint> = (0..5)
            .map(|k| PathPoint {
                alpha: k as f64 / 4.0,
                cos_theta: 0.7,
                grad_norm: 2.0,
                degenerate: false,
            })
            .collect();
        let m = path_integral_m(&profile, 2.0, 3.0).unwrap();
        assert!((m - 0.7 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_integral_matches_d_change_for_linear_models() {
        let mut rng = RngStream::new(86);
        let model = MlpModel::random(&mut rng, &[6, 2], Activation::Identity).unwrap();
        let a: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let b: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let path = make_path(&a, &b, 9).unwrap();
        let profile = path_profile(&model, &path, (0, 1)).unwrap();
        let g0 = profile[0].grad_norm;
        let m = path_integral_m(&profile, g0, path.length()).unwrap();
        let d = d_change(&model, &a, &b, (0, 1)).unwrap();
        assert!((m * g0 - d).abs() < 1e-9, "{} vs {}", m * g0, d);
    }

    #[test]
    fn d_change_trivials() {
        let mut rng = RngStream::new(87);
        let model = MlpModel::random(&mut rng, &[3, 2], Activation::Identity).unwrap();
        let a = [0.5, -0.5, 1.0];
        assert_eq!(d_change(&model, &a, &a, (0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn scale_invariance_of_angles() {
        let mut rng = RngStream::new(88);
        let ds = gen_hypercube(&mut rng, 6, 64, 5.0).unwrap();
        let mut model = MlpModel::random(&mut rng, &[6, 16, 2], Activation::Identity).unwrap();
        let before = linear_compression_angles(&model, &ds).unwrap();
        let x = ds.inputs[0].clone();
        let x1 = ds.inputs[1].clone();
        let x2 = ds.inputs[2].clone();
        let rho_before = local_ratio_rho(&model, &x, &x1, &x2).unwrap();

        let last = model.layers.len() - 1;
        for v in model.layers[last].weights.data_mut() {
            *v *= 7.5;
        }
        let after = linear_compression_angles(&model, &ds).unwrap();
        assert!((before.cos_theta1 - after.cos_theta1).abs() < 1e-10);
        assert!((before.cos_theta2 - after.cos_theta2).abs() < 1e-10);
        assert!((before.phi - after.phi).abs() < 1e-15);
        let rho_after = local_ratio_rho(&model, &x, &x1, &x2).unwrap();
        assert!((rho_before - rho_after).abs() < 1e-10);
    }

    #[test]
    fn csv_row_shape() {
        let rep = CompressionReport {
            cos_theta1: -0.5,
            cos_theta2: 0.99,
            phi: 0.48,
            rho: Some(0.3),
            path_profile: None,
            m_signed: None,
            d_change: None,
            run_metadata: RunMetadata {
                seed: 11,
                d: 12,
                kind: DatasetKind::Hypercube,
                valid: true,
            },
            vectors: None,
        };
        let row = rep.csv_row();
        assert_eq!(row, "11,12,1,-0.500000,0.990000,0.480000,0.020000,0.300000,,");
        assert_eq!(
            row.split(',').count(),
            CompressionReport::CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn report_round_trips_with_recomputable_cosines() {
        let mut rng = RngStream::new(89);
        let ds = gen_hypercube(&mut rng, 8, 128, 5.0).unwrap();
        let model = ideal_hypercube_net(&ds).unwrap();
        let angles = linear_compression_angles(&model, &ds).unwrap();
        let rep = CompressionReport {
            cos_theta1: angles.cos_theta1,
            cos_theta2: angles.cos_theta2,
            phi: angles.phi,
            rho: None,
            path_profile: None,
            m_signed: None,
            d_change: None,
            run_metadata: RunMetadata {
                seed: 89,
                d: 8,
                kind: DatasetKind::Hypercube,
                valid: true,
            },
            vectors: Some(ReportVectors {
                w1: angles.w1.clone(),
                decision_direction: angles.decision_direction.clone(),
                critical_column: angles.critical_column.clone(),
                inv_a_last_row: angles.inv_a_last_row.clone(),
            }),
        };
        let js = serde_json::to_string(&rep).unwrap();
        let back: CompressionReport = serde_json::from_str(&js).unwrap();
        assert_eq!(rep, back);
        let v = back.vectors.unwrap();
        let c1 = cosine(&v.decision_direction, &v.critical_column).unwrap();
        let c2 = cosine(&v.w1, &v.inv_a_last_row).unwrap();
        assert_eq!(c1, back.cos_theta1);
        assert_eq!(c2, back.cos_theta2);
    }
}
