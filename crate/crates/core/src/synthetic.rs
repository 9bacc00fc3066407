//! Synthetic feature benchmark: one isotropic Gaussian blob per class,
//! a fraction of inputs misclassified into a random other class, and
//! unknown-class test inputs.
//!
//! Useful for exercising the whole pipeline without a trained network.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::Vector;
use crate::monitor::{FeatureRecord, UNKNOWN_LABEL};

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub dim: usize,
    /// Class centers are drawn uniformly from `[0, center_range]^dim`.
    pub center_range: f64,
    pub sigma: f64,
    /// Probability that a known input is predicted as some other class.
    pub misclassification_rate: f64,
    /// Unknown test inputs per class: half scattered over the whole feature
    /// cube, half on a shell just outside the class blob.
    pub unknown_per_class: usize,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            classes: 10,
            train_per_class: 200,
            test_per_class: 100,
            dim: 10,
            center_range: 100.0,
            sigma: 1.0,
            misclassification_rate: 0.05,
            unknown_per_class: 50,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlobBenchmark {
    pub centers: Vec<Vec<f64>>,
    pub train: Vec<FeatureRecord>,
    pub test: Vec<FeatureRecord>,
}

impl BlobSpec {
    pub fn generate(&self) -> BlobBenchmark {
        assert!(self.classes >= 2 && self.dim >= 1, "need two classes and one dimension");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let centers: Vec<Vec<f64>> = (0..self.classes)
            .map(|_| (0..self.dim).map(|_| rng.gen::<f64>() * self.center_range).collect())
            .collect();
        let noise = Normal::new(0.0, self.sigma).expect("positive sigma");

        let known = |rng: &mut ChaCha8Rng, per_class: usize| {
            let mut out = Vec::with_capacity(per_class * self.classes);
            for (c, center) in centers.iter().enumerate() {
                for _ in 0..per_class {
                    let f: Vec<f64> = center.iter().map(|m| m + noise.sample(rng)).collect();
                    let predicted = if rng.gen::<f64>() < self.misclassification_rate {
                        let others: Vec<usize> = (0..self.classes).filter(|&o| o != c).collect();
                        *others.choose(rng).expect("at least two classes")
                    } else {
                        c
                    };
                    out.push(FeatureRecord::new(Vector::new(f).expect("finite"), c as i64, predicted));
                }
            }
            out
        };
        let train = known(&mut rng, self.train_per_class);
        let mut test = known(&mut rng, self.test_per_class);

        let nearest = |f: &[f64]| {
            centers
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
                .expect("classes")
        };
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let shell = self.sigma * (self.dim as f64).sqrt();
        for (c, center) in centers.iter().enumerate() {
            for i in 0..self.unknown_per_class {
                let f: Vec<f64> = if i % 2 == 0 {
                    (0..self.dim).map(|_| rng.gen::<f64>() * self.center_range).collect()
                } else {
                    let dir: Vec<f64> = (0..self.dim).map(|_| unit.sample(&mut rng)).collect();
                    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let radius = shell * rng.gen_range(1.0..1.6);
                    center.iter().zip(&dir).map(|(m, d)| m + radius * d / norm).collect()
                };
                let predicted = if i % 2 == 0 { nearest(&f) } else { c };
                test.push(FeatureRecord::new(Vector::new(f).expect("finite"), UNKNOWN_LABEL, predicted));
            }
        }
        BlobBenchmark { centers, train, test }
    }
}
