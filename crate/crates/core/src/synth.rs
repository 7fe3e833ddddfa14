//! Synthetic class-conditional feature sets and class-mean configurations.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::embeddings::LabeledEmbeddings;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// Spherical Gaussian class-conditionals; class `c` gets label `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub p: usize,
    pub class_means: Vec<Vec<f64>>,
    /// Total variance `E||x - mu_c||^2` per class; each coordinate gets
    /// `total_variances[c] / p`.
    pub total_variances: Vec<f64>,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::param("p", "must be positive"));
        }
        if self.class_means.is_empty() {
            return Err(Error::param("class_means", "need at least one class"));
        }
        if self.class_means.len() != self.total_variances.len() {
            return Err(Error::param(
                "total_variances",
                "must have one entry per class mean",
            ));
        }
        if self.samples_per_class == 0 {
            return Err(Error::param("samples_per_class", "must be positive"));
        }
        for m in &self.class_means {
            if m.len() != self.p {
                return Err(Error::DimensionMismatch {
                    expected: self.p,
                    found: m.len(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("class_means", "must be finite"));
            }
        }
        if self.total_variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("total_variances", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Adds `N(0, sigma^2 I)` noise to `mean` in place of a fresh vector.
pub(crate) fn gaussian_point(rng: &mut StreamRng, mean: &[f64], sigma: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            m + sigma * z
        })
        .collect()
}

/// Class `c` is drawn from its own stream, so each draw is fixed by
/// `(seed, class, sample index)`.
pub fn gaussian_mixture(spec: &MixtureSpec) -> Result<LabeledEmbeddings> {
    spec.validate()?;
    let k = spec.class_means.len();
    let mut labels = Vec::with_capacity(k * spec.samples_per_class);
    let mut data = Vec::with_capacity(k * spec.samples_per_class * spec.p);
    for (c, (mean, var)) in spec.class_means.iter().zip(&spec.total_variances).enumerate() {
        let sigma = libm::sqrt(var / spec.p as f64);
        let mut rng = stream_rng(spec.seed, c as u64);
        for _ in 0..spec.samples_per_class {
            labels.push(c as u32);
            data.extend(gaussian_point(&mut rng, mean, sigma));
        }
    }
    LabeledEmbeddings::from_flat(spec.p, labels, data)
}

/// `k` class means forming a simplex equiangular tight frame: zero global
/// mean, every norm equal to `scale`, every pairwise distance equal to
/// `scale * sqrt(2k / (k - 1))`.
///
/// The vectors `e_c - 1/k` are written in the Helmert basis of the
/// sum-zero subspace, which occupies the first `k - 1` coordinates.
pub fn simplex_etf_means(k: usize, p: usize, scale: f64) -> Result<Vec<Vec<f64>>> {
    if k < 2 {
        return Err(Error::param("k", "need at least 2 classes"));
    }
    if p < k - 1 {
        return Err(Error::param("p", "simplex of k classes needs p >= k - 1"));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::param("scale", "must be positive and finite"));
    }
    let gain = scale * libm::sqrt(k as f64 / (k as f64 - 1.0));
    let mut means = alloc::vec![alloc::vec![0.0; p]; k];
    // Helmert vector j: ones on the first j entries, -j at entry j.
    for j in 1..k {
        let norm = libm::sqrt((j * (j + 1)) as f64);
        for (c, mean) in means.iter_mut().enumerate() {
            let h = if c < j {
                1.0
            } else if c == j {
                -(j as f64)
            } else {
                0.0
            };
            mean[j - 1] = gain * h / norm;
        }
    }
    Ok(means)
}

/// `k` i.i.d. uniform points in `[0, 1]^p`.
pub fn uniform_cube_means(k: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..k)
        .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// The exact-collapse limit: every sample of class `c` equals `means[c]`.
pub fn collapsed_set(means: &[Vec<f64>], samples_per_class: usize) -> Result<LabeledEmbeddings> {
    if samples_per_class == 0 {
        return Err(Error::param("samples_per_class", "must be positive"));
    }
    for (i, a) in means.iter().enumerate() {
        if means[..i].iter().any(|b| b == a) {
            return Err(Error::param("means", "class means must be pairwise distinct"));
        }
    }
    let rows = means
        .iter()
        .enumerate()
        .flat_map(|(c, m)| core::iter::repeat_n((c as u32, m), samples_per_class));
    LabeledEmbeddings::from_rows(rows)
}
