use super::stats::{bootstrap_covariances, mean_std, quantile_sorted, sample_covariance, BootstrapOptions};
use crate::cv_gaussian::{epr_variance_sum, QuadratureSample, SEPARABLE_BOUND};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest sample count accepted by the inseparability estimators.
pub const MIN_SAMPLES: usize = 100;

/// Estimated `S(b)` on a grid of weights with bootstrap bands.
#[derive(Clone, Debug, PartialEq)]
pub struct InseparabilityCurve {
    pub b_grid: Vec<f64>,
    pub s_values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Bootstrap standard deviation of `Ŝ(b)`.
    pub sigma_band: Vec<f64>,
    pub n_shots: usize,
    pub confidence_level: f64,
}

impl InseparabilityCurve {
    /// Grid point with the smallest estimate; ties go to the smaller `b`.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.s_values.iter().enumerate() {
            if s < self.s_values[best] {
                best = i;
            }
        }
        best
    }
}

/// `0, step, 2·step, …, 1`.
pub fn uniform_b_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!("b step {step} must lie in (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    Ok((0..=n).map(|k| (k as f64 * step).min(1.0)).collect())
}

fn check_samples<T: Real>(samples: &[QuadratureSample<T>]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Estimation(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::Estimation(format!(
            "non-finite quadrature in shot {} mode {}",
            bad.shot_index, bad.mode_index
        )));
    }
    Ok(())
}

fn check_degenerate<T: Real>(cov: &crate::linalg::Mat4<T>) -> Result<()> {
    for i in 0..4 {
        if !(cov[i][i] > T::zero()) {
            return Err(Error::Estimation(format!("quadrature {i} has zero sample variance")));
        }
    }
    Ok(())
}

/// Plug-in `Ŝ(b)` with percentile-bootstrap confidence bands.
pub fn inseparability_curve<T: Real>(
    samples: &[QuadratureSample<T>],
    b_grid: &[f64],
    confidence_level: f64,
    bootstrap: &BootstrapOptions,
) -> Result<InseparabilityCurve> {
    check_samples(samples)?;
    if b_grid.is_empty()
        || b_grid.iter().any(|b| !(0.0..=1.0).contains(b))
        || b_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Config("b grid must be strictly ascending within [0, 1]".into()));
    }
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {confidence_level} must lie in (0, 1)"
        )));
    }
    let (_, cov) = sample_covariance(samples)?;
    check_degenerate(&cov)?;
    let replicas = bootstrap_covariances(samples, bootstrap)?;

    let tail = 0.5 * (1.0 - confidence_level);
    let mut curve = InseparabilityCurve {
        b_grid: b_grid.to_vec(),
        s_values: Vec::with_capacity(b_grid.len()),
        ci_low: Vec::with_capacity(b_grid.len()),
        ci_high: Vec::with_capacity(b_grid.len()),
        sigma_band: Vec::with_capacity(b_grid.len()),
        n_shots: samples.len(),
        confidence_level,
    };
    let mut column = vec![0.0; replicas.len()];
    for &b in b_grid {
        let s_hat = epr_variance_sum(&cov, T::lit(b)).as_f64();
        for (slot, rep) in column.iter_mut().zip(&replicas) {
            *slot = epr_variance_sum(rep, T::lit(b)).as_f64();
        }
        let (_, sigma) = mean_std(&column);
        column.sort_by(f64::total_cmp);
        // Percentile bands, widened if needed so they always bracket the estimate.
        curve.ci_low.push(quantile_sorted(&column, tail).min(s_hat));
        curve.ci_high.push(quantile_sorted(&column, 1.0 - tail).max(s_hat));
        curve.s_values.push(s_hat);
        curve.sigma_band.push(sigma);
    }
    Ok(curve)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipSignificance {
    pub b: f64,
    pub s_hat: f64,
    /// Bootstrap standard error of `Ŝ(b)`.
    pub sigma: f64,
    /// Bootstrap probability that `S(b)` lies below the separable bound.
    pub confidence_below_bound: f64,
}

/// One-sided bootstrap confidence that `S(b) < 2`.
pub fn dip_significance<T: Real>(
    samples: &[QuadratureSample<T>],
    b: f64,
    bootstrap: &BootstrapOptions,
) -> Result<DipSignificance> {
    check_samples(samples)?;
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain {
            what: "b",
            value: b,
            range: "[0, 1]",
        });
    }
    let (_, cov) = sample_covariance(samples)?;
    check_degenerate(&cov)?;
    let replicas = bootstrap_covariances(samples, bootstrap)?;
    let values: Vec<f64> = replicas
        .iter()
        .map(|c| epr_variance_sum(c, T::lit(b)).as_f64())
        .collect();
    let (_, sigma) = mean_std(&values);
    let below = values.iter().filter(|&&v| v < SEPARABLE_BOUND).count();
    Ok(DipSignificance {
        b,
        s_hat: epr_variance_sum(&cov, T::lit(b)).as_f64(),
        sigma,
        confidence_below_bound: below as f64 / values.len() as f64,
    })
}
