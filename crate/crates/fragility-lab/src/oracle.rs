//! The minimum-distance (1-nearest-neighbor) classifier and its exact flip
//! radius, used as the optimal-robustness baseline.

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDecision {
    pub predicted_class: usize,
    pub nearest_index: usize,
    pub distance: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Classify by the nearest training point; ties go to the lowest index.
pub fn min_distance_classify(dataset: &Dataset, x: &[f64]) -> Result<OracleDecision> {
    if dataset.is_empty() {
        return Err(Error::Precondition("empty dataset".into()));
    }
    if x.len() != dataset.d {
        return Err(Error::Dimension(format!(
            "query of dimension {}, dataset has {}",
            x.len(),
            dataset.d
        )));
    }
    let mut nearest = 0usize;
    let mut best = f64::INFINITY;
    for (i, p) in dataset.inputs.iter().enumerate() {
        let dist = euclidean(p, x);
        if dist < best {
            best = dist;
            nearest = i;
        }
    }
    Ok(OracleDecision {
        predicted_class: dataset.labels[nearest],
        nearest_index: nearest,
        distance: best,
    })
}

/// Exact minimal flip magnitude for the min-distance rule at point `index`:
/// half the distance to the nearest training point of a different class.
/// Also returns that point's index.
pub fn oracle_flip_radius(dataset: &Dataset, index: usize) -> Result<(f64, usize)> {
    if index >= dataset.len() {
        return Err(Error::Precondition(format!(
            "point index {index} out of range"
        )));
    }
    let own = dataset.labels[index];
    let x = &dataset.inputs[index];
    let mut best = f64::INFINITY;
    let mut cross = None;
    for (i, p) in dataset.inputs.iter().enumerate() {
        if dataset.labels[i] == own {
            continue;
        }
        let dist = euclidean(p, x);
        if dist < best {
            best = dist;
            cross = Some(i);
        }
    }
    match cross {
        Some(i) => Ok((0.5 * best, i)),
        None => Err(Error::Domain(
            "dataset has a single class; no flip exists".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_orthogonal_label, DatasetKind};
    use crate::rng::RngStream;

    fn toy(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        // Hand-built two-class sets ride on the hypercube kind, which fixes
        // the class count at two.
        Dataset {
            kind: DatasetKind::Hypercube,
            d: points[0].len(),
            seed: 0,
            inputs: points,
            labels,
            a_matrix: None,
            chain: None,
            z_codes: None,
            column_scales: None,
        }
    }

    #[test]
    fn classify_training_point_is_exact() {
        let ds = toy(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0, 1]);
        let dec = min_distance_classify(&ds, &[2.0, 0.0]).unwrap();
        assert_eq!(dec.predicted_class, 1);
        assert_eq!(dec.nearest_index, 1);
        assert_eq!(dec.distance, 0.0);
    }

    #[test]
    fn classify_interior_point_and_tie() {
        let ds = toy(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0, 1]);
        assert_eq!(
            min_distance_classify(&ds, &[0.9, 0.0]).unwrap().predicted_class,
            0
        );
        // Midpoint ties; the lower index wins.
        let mid = min_distance_classify(&ds, &[1.0, 0.0]).unwrap();
        assert_eq!(mid.predicted_class, 0);
        assert_eq!(mid.nearest_index, 0);
    }

    #[test]
    fn flip_radius_is_half_the_cross_distance() {
        let ds = toy(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0, 1]);
        let (r, idx) = oracle_flip_radius(&ds, 0).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(idx, 1);
    }

    #[test]
    fn single_class_has_no_flip() {
        let ds = toy(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        assert!(matches!(
            oracle_flip_radius(&ds, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn flip_radius_is_exact_for_the_classifier() {
        let mut rng = RngStream::new(60);
        let ds = gen_orthogonal_label(&mut rng, 8).unwrap();
        for index in 0..ds.len() {
            let (radius, cross) = oracle_flip_radius(&ds, index).unwrap();
            let x = &ds.inputs[index];
            let toward: Vec<f64> = ds.inputs[cross]
                .iter()
                .zip(x)
                .map(|(c, p)| c - p)
                .collect();
            let tnorm = crate::matrix::norm(&toward);

            // Just past the radius toward the cross point flips the label.
            let over: Vec<f64> = x
                .iter()
                .zip(&toward)
                .map(|(p, t)| p + t / tnorm * radius * (1.0 + 1e-9))
                .collect();
            let flipped = min_distance_classify(&ds, &over).unwrap();
            assert_ne!(flipped.predicted_class, ds.labels[index]);

            // Just under the radius never flips, in any direction.
            for dir_trial in 0..50 {
                let mut dir: Vec<f64> = (0..ds.d).map(|_| rng.normal()).collect();
                let dnorm = crate::matrix::norm(&dir);
                for v in dir.iter_mut() {
                    *v *= radius * (1.0 - 1e-6) / dnorm;
                }
                let probe: Vec<f64> = x.iter().zip(&dir).map(|(p, e)| p + e).collect();
                let dec = min_distance_classify(&ds, &probe).unwrap();
                assert_eq!(
                    dec.predicted_class, ds.labels[index],
                    "index {index}, direction trial {dir_trial}"
                );
            }
        }
    }

    #[test]
    fn brute_force_pair_scan_agrees() {
        let mut rng = RngStream::new(61);
        for _ in 0..20 {
            let ds = gen_orthogonal_label(&mut rng, 4).unwrap();
            for index in 0..ds.len() {
                let (radius, _) = oracle_flip_radius(&ds, index).unwrap();
                let mut brute = f64::INFINITY;
                for j in 0..ds.len() {
                    if ds.labels[j] != ds.labels[index] {
                        brute = brute.min(euclidean(&ds.inputs[j], &ds.inputs[index]));
                    }
                }
                assert_eq!(radius, 0.5 * brute);
            }
        }
    }
}
