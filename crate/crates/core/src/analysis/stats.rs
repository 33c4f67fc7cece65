use rand::Rng;
use rayon::prelude::*;

use crate::cv_gaussian::QuadratureSample;
use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Sample mean and unbiased sample covariance of `(x₁, p₁, x₂, p₂)`.
pub fn sample_covariance<T: Real>(samples: &[QuadratureSample<T>]) -> Result<([T; 4], Mat4<T>)> {
    if samples.len() < 2 {
        return Err(Error::Estimation(format!(
            "need at least 2 samples for a covariance, got {}",
            samples.len()
        )));
    }
    let mut acc = Moments::<T>::default();
    for s in samples {
        acc.push(&s.vector());
    }
    Ok((acc.mean(), acc.covariance()))
}

/// Standard error of each entry of a Gaussian sample covariance,
/// `√((C_ii·C_jj + C_ij²)/(n − 1))`.
pub fn covariance_standard_errors<T: Real>(cov: &Mat4<T>, n: usize) -> Mat4<T> {
    let dof = T::lit((n.max(2) - 1) as f64);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / dof).sqrt())
    })
}

/// Running first and second moments of 4-vectors.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments<T> {
    n: usize,
    sum: [T; 4],
    prod: Mat4<T>,
}

impl<T: Real> Moments<T> {
    #[inline]
    pub(crate) fn push(&mut self, v: &[T; 4]) {
        self.n += 1;
        for i in 0..4 {
            self.sum[i] += v[i];
            for j in i..4 {
                self.prod[i][j] += v[i] * v[j];
            }
        }
    }

    pub(crate) fn mean(&self) -> [T; 4] {
        let n = T::lit(self.n as f64);
        self.sum.map(|s| s / n)
    }

    pub(crate) fn covariance(&self) -> Mat4<T> {
        let n = T::lit(self.n as f64);
        let dof = T::lit((self.n - 1) as f64);
        let mut cov = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let c = (self.prod[i][j] - self.sum[i] * self.sum[j] / n) / dof;
                cov[i][j] = c;
                cov[j][i] = c;
            }
        }
        cov
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 1000,
            seed: 0,
        }
    }
}

/// Covariances of `resamples` nonparametric bootstrap replicates, resampling
/// whole shots with replacement. Replicate `r` draws from its own RNG stream.
pub fn bootstrap_covariances<T: Real>(
    samples: &[QuadratureSample<T>],
    options: &BootstrapOptions,
) -> Result<Vec<Mat4<T>>> {
    if options.resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    if samples.len() < 2 {
        return Err(Error::Estimation("bootstrap needs at least 2 samples".into()));
    }
    let vectors: Vec<[T; 4]> = samples.iter().map(QuadratureSample::vector).collect();
    let n = vectors.len();
    Ok((0..options.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(options.seed, r as u64);
            let mut acc = Moments::<T>::default();
            for _ in 0..n {
                acc.push(&vectors[rng.random_range(0..n)]);
            }
            acc.covariance()
        })
        .collect())
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
