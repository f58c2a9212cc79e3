//! In-memory datasets and synthetic data generation.

use alloc::vec::Vec;

use crate::rngutil;

/// Row-major feature matrix plus integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<usize>,
    n: usize,
    d: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<usize>, d: usize, num_classes: usize) -> Self {
        assert!(d >= 1 && !y.is_empty(), "dataset must be non-empty");
        assert_eq!(x.len(), y.len() * d, "feature matrix shape mismatch");
        assert!(y.iter().all(|&l| l < num_classes), "label out of range");
        let n = y.len();
        Dataset { x, y, n, d, num_classes }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }
}

/// `k` Gaussian clusters with seeded means (N(0, 2^2 I)); point `i` belongs to
/// cluster `i % k`, so class counts are balanced up to one. Deterministic per
/// seed.
pub fn make_blobs(seed: u64, n: usize, d: usize, k_classes: usize, spread: f64) -> Dataset {
    assert!(n >= 1 && d >= 1 && k_classes >= 1);
    assert!(spread >= 0.0);
    let mut rng = rngutil::rng_from_seed(seed);
    let means: Vec<f64> =
        (0..k_classes * d).map(|_| 2.0 * rngutil::standard_normal(&mut rng)).collect();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k_classes;
        for j in 0..d {
            x.push(means[c * d + j] + spread * rngutil::standard_normal(&mut rng));
        }
        y.push(c);
    }
    Dataset::new(x, y, d, k_classes)
}
