use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Convention, TwoModeGaussianState};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, lower_inverse, mat_mul, mat_vec, sqrt_psd};
use crate::scalar::Real;

/// Measured quadratures of one mode pair in one shot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSample<T> {
    pub x1: T,
    pub p1: T,
    pub x2: T,
    pub p2: T,
    pub shot_index: usize,
    pub mode_index: usize,
}

impl<T: Real> QuadratureSample<T> {
    pub fn from_vector(v: [T; 4], shot_index: usize, mode_index: usize) -> Self {
        Self {
            x1: v[0],
            p1: v[1],
            x2: v[2],
            p2: v[3],
            shot_index,
            mode_index,
        }
    }

    pub fn vector(&self) -> [T; 4] {
        [self.x1, self.p1, self.x2, self.p2]
    }

    pub fn is_finite(&self) -> bool {
        self.vector().iter().all(|v| v.is_finite())
    }
}

fn require_measured<T: Real>(state: &TwoModeGaussianState<T>, n_shots: usize) -> Result<()> {
    if state.convention() != Convention::Measured {
        return Err(Error::Convention {
            expected: Convention::Measured.name(),
            found: state.convention().name(),
        });
    }
    if n_shots == 0 {
        return Err(Error::Config("n_shots must be at least 1".into()));
    }
    Ok(())
}

/// I.i.d. heterodyne outcomes of a measured state.
pub fn sample_quadratures<T: Real>(
    state: &TwoModeGaussianState<T>,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample<T>>>
where
    StandardNormal: Distribution<T>,
{
    require_measured(state, n_shots)?;
    let root = sqrt_psd(state.cov())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_shots)
        .map(|shot| {
            let z: [T; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            QuadratureSample::from_vector(mat_vec(&root, &z), shot, 0)
        })
        .collect())
}

/// Draws like [`sample_quadratures`], then re-colors the batch so its sample
/// mean is zero and its unbiased sample covariance equals the state covariance
/// exactly.
///
/// Useful for synthesizing a data set whose point estimate is pinned while the
/// shot-to-shot fluctuations (and hence resampling spreads) stay Gaussian.
pub fn sample_quadratures_matched<T: Real>(
    state: &TwoModeGaussianState<T>,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample<T>>>
where
    StandardNormal: Distribution<T>,
{
    require_measured(state, n_shots)?;
    if n_shots < 5 {
        return Err(Error::Config(
            "moment matching needs at least 5 shots".into(),
        ));
    }
    let raw = sample_quadratures(state, n_shots, seed)?;
    let (mean, cov) = crate::analysis::sample_covariance(&raw)?;
    let target = cholesky(state.cov())?;
    let whiten = lower_inverse(&cholesky(&cov)?);
    let transform = mat_mul(&target, &whiten);
    Ok(raw
        .into_iter()
        .map(|s| {
            let v = s.vector();
            let centered = std::array::from_fn(|i| v[i] - mean[i]);
            QuadratureSample::from_vector(mat_vec(&transform, &centered), s.shot_index, 0)
        })
        .collect())
}
