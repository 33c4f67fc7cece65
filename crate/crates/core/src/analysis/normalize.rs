use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sequence::HeterodyneRecord;

/// Fewest vacuum samples (pooled over shots) accepted for normalization.
pub const MIN_VACUUM_SAMPLES: usize = 1000;

/// Pooled first and second moments of the vacuum window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VacuumStats {
    pub count: usize,
    pub sum: Complex64,
    pub sum_sq: f64,
}

impl VacuumStats {
    pub fn push(&mut self, samples: &[Complex64]) {
        for s in samples {
            self.count += 1;
            self.sum += s;
            self.sum_sq += s.norm_sqr();
        }
    }

    pub fn merge(&mut self, other: &VacuumStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Pooled `Var(x) + Var(p)`.
    pub fn variance_sum(&self) -> f64 {
        let n = self.count as f64;
        (self.sum_sq - self.sum.norm_sqr() / n) / (n - 1.0)
    }

    /// Factor that brings the pooled vacuum variance sum to 2.
    pub fn scale(&self) -> Result<f64> {
        if self.count < MIN_VACUUM_SAMPLES {
            return Err(Error::Normalization(format!(
                "vacuum window holds {} samples across shots, need at least {MIN_VACUUM_SAMPLES}",
                self.count
            )));
        }
        let var = self.variance_sum();
        if !(var >= 1e-6) {
            return Err(Error::Normalization(format!(
                "vacuum variance {var:e} indicates a dead input"
            )));
        }
        Ok((2.0 / var).sqrt())
    }
}

/// Rescale every sample of every shot so the pooled vacuum variance sum is 2.
/// Returns the applied scale factor.
pub fn normalize_to_vacuum(shots: &mut [HeterodyneRecord], vacuum: Range<usize>) -> Result<f64> {
    let mut stats = VacuumStats::default();
    for shot in shots.iter() {
        stats.push(&shot.samples[vacuum.clone()]);
    }
    let scale = stats.scale()?;
    for shot in shots.iter_mut() {
        for s in &mut shot.samples {
            *s *= scale;
        }
    }
    Ok(scale)
}
