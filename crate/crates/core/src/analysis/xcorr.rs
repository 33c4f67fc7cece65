use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sequence::{HeterodyneRecord, Timeline};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrossCorrelationOptions {
    /// Largest |τ| reported, seconds; defaults to the ASE window length.
    pub max_lag: Option<f64>,
    /// Requested lag resolution, seconds. The grid is the sample grid, so a
    /// step coarser than one sample is rejected.
    pub tau_step: Option<f64>,
}

/// `C(τ) = ⟨∫ z_ASE(t) z*_RASE(τ − t) dt⟩` with τ measured from the center of π₂.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossCorrelation {
    /// Lags in seconds.
    pub tau: Vec<f64>,
    pub value: Vec<Complex64>,
    /// Standard error of the shot average at each lag.
    pub se: Vec<f64>,
    pub n_shots: usize,
}

impl CrossCorrelation {
    pub fn magnitude(&self) -> Vec<f64> {
        self.value.iter().map(|c| c.norm()).collect()
    }

    /// `|C|² − SE²`, an unbiased estimate of the correlation intensity.
    pub fn intensity(&self) -> Vec<f64> {
        self.value
            .iter()
            .zip(&self.se)
            .map(|(c, se)| c.norm_sqr() - se * se)
            .collect()
    }

    /// Index of the lag closest to τ = 0.
    pub fn zero_index(&self) -> usize {
        let mut best = 0;
        for (i, t) in self.tau.iter().enumerate() {
            if t.abs() < self.tau[best].abs() {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone)]
pub struct CrossCorrelationAccumulator {
    ase: Range<usize>,
    rase: Range<usize>,
    /// Lag (samples) of convolution index 0.
    lag_offset: i64,
    keep: Range<usize>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    sample_rate: f64,
    n_shots: usize,
    sum: Vec<Complex64>,
    sum_sq: Vec<f64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl std::fmt::Debug for CrossCorrelationAccumulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrossCorrelationAccumulator")
            .field("ase", &self.ase)
            .field("rase", &self.rase)
            .field("n_shots", &self.n_shots)
            .finish()
    }
}

impl CrossCorrelationAccumulator {
    pub fn new(
        timeline: &Timeline,
        ase: Range<usize>,
        rase: Range<usize>,
        options: &CrossCorrelationOptions,
    ) -> Result<Self> {
        let fs = timeline.sample_rate();
        if let Some(step) = options.tau_step {
            if !(step > 0.0) || step * fs > 1.0 + 1e-9 {
                return Err(Error::Config(format!(
                    "lag step {step:e} s is coarser than the sample spacing {:e} s",
                    1.0 / fs
                )));
            }
        }
        if ase.is_empty() || rase.is_empty() || ase.end > rase.start {
            return Err(Error::Config("ASE window must precede and not overlap the RASE window".into()));
        }
        if rase.end > timeline.n_samples() {
            return Err(Error::Config("RASE window runs past the record".into()));
        }
        if timeline.touches_sentinel(ase.clone()) || timeline.touches_sentinel(rase.clone()) {
            return Err(Error::SentinelContamination {
                window: "ase/rase".into(),
            });
        }
        let center2 = timeline.symmetry_center2()? as i64;
        let conv_len = ase.len() + rase.len() - 1;
        let lag_offset = ase.start as i64 + rase.start as i64 - center2;
        let max_lag = match options.max_lag {
            Some(t) => (t * fs).round() as i64,
            None => ase.len() as i64,
        };
        let lo = (-max_lag - lag_offset).clamp(0, conv_len as i64) as usize;
        let hi = (max_lag - lag_offset + 1).clamp(0, conv_len as i64) as usize;
        if lo >= hi {
            return Err(Error::Config("lag range does not overlap the correlation support".into()));
        }
        let size = conv_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            fft: planner.plan_fft_forward(size),
            ifft: planner.plan_fft_inverse(size),
            ase,
            rase,
            lag_offset,
            keep: lo..hi,
            sample_rate: fs,
            n_shots: 0,
            sum: vec![Complex64::default(); hi - lo],
            sum_sq: vec![0.0; hi - lo],
            a: vec![Complex64::default(); size],
            b: vec![Complex64::default(); size],
        })
    }

    /// Per-shot correlation on the kept lag range.
    pub fn correlate(&mut self, samples: &[Complex64]) -> Vec<Complex64> {
        let size = self.a.len();
        self.a.fill(Complex64::default());
        self.b.fill(Complex64::default());
        self.a[..self.ase.len()].copy_from_slice(&samples[self.ase.clone()]);
        for (dst, src) in self.b.iter_mut().zip(&samples[self.rase.clone()]) {
            *dst = src.conj();
        }
        self.fft.process(&mut self.a);
        self.fft.process(&mut self.b);
        for (x, y) in self.a.iter_mut().zip(&self.b) {
            *x *= y;
        }
        self.ifft.process(&mut self.a);
        let norm = 1.0 / size as f64;
        self.a[self.keep.clone()].iter().map(|c| c * norm).collect()
    }

    pub fn push(&mut self, samples: &[Complex64]) {
        let c = self.correlate(samples);
        for (k, v) in c.into_iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v.norm_sqr();
        }
        self.n_shots += 1;
    }

    pub fn merge(&mut self, other: &CrossCorrelationAccumulator) {
        self.n_shots += other.n_shots;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    pub fn finish(&self) -> Result<CrossCorrelation> {
        if self.n_shots < 2 {
            return Err(Error::Estimation("cross-correlation needs at least 2 shots".into()));
        }
        let n = self.n_shots as f64;
        let tau = self
            .keep
            .clone()
            .map(|idx| (idx as i64 + self.lag_offset) as f64 / self.sample_rate)
            .collect();
        let value: Vec<Complex64> = self.sum.iter().map(|s| s / n).collect();
        let se = value
            .iter()
            .zip(&self.sum_sq)
            .map(|(m, sq)| ((sq / n - m.norm_sqr()).max(0.0) / (n - 1.0)).sqrt())
            .collect();
        Ok(CrossCorrelation {
            tau,
            value,
            se,
            n_shots: self.n_shots,
        })
    }
}

/// Shot-averaged cross-correlation between the ASE and RASE windows.
pub fn cross_correlation(
    shots: &[HeterodyneRecord],
    ase: Range<usize>,
    rase: Range<usize>,
    options: &CrossCorrelationOptions,
) -> Result<CrossCorrelation> {
    let first = shots
        .first()
        .ok_or_else(|| Error::Estimation("no shots".into()))?;
    let mut acc = CrossCorrelationAccumulator::new(&first.timeline, ase, rase, options)?;
    for shot in shots {
        acc.push(&shot.samples);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{SequenceConfig, WindowKind};

    /// Direct O(N²) evaluation of the windowed correlation sum.
    fn brute_force(samples: &[Complex64], tl: &Timeline, tau: i64) -> Complex64 {
        let ase = tl.require(WindowKind::Ase).unwrap().range();
        let rase = tl.require(WindowKind::Rase).unwrap().range();
        let c2 = tl.symmetry_center2().unwrap() as i64;
        let mut acc = Complex64::default();
        for t in ase {
            // τ − t measured from the symmetry point: index = c2 + τ − t.
            let j = c2 + tau - t as i64;
            if j >= rase.start as i64 && j < rase.end as i64 {
                acc += samples[t] * samples[j as usize].conj();
            }
        }
        acc
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let cfg = SequenceConfig {
            n_modes: 2,
            n_shots: 1,
            ..SequenceConfig::default()
        };
        let shot = crate::sequence::synthesize_shot(&cfg, 0).unwrap();
        let tl = &shot.timeline;
        let opts = CrossCorrelationOptions {
            max_lag: Some(5e-6),
            tau_step: None,
        };
        let mut acc = CrossCorrelationAccumulator::new(
            tl,
            tl.require(WindowKind::Ase).unwrap().range(),
            tl.require(WindowKind::Rase).unwrap().range(),
            &opts,
        )
        .unwrap();
        acc.push(&shot.samples);
        acc.push(&shot.samples);
        let xc = acc.finish().unwrap();
        assert_eq!(xc.tau.len(), 101);
        for (t, v) in xc.tau.iter().zip(&xc.value) {
            let lag = (t * cfg.sample_rate).round() as i64;
            let want = brute_force(&shot.samples, tl, lag);
            assert!((v - want).norm() < 1e-9 * (1.0 + want.norm()), "lag {lag}");
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let cfg = SequenceConfig::default();
        let tl = cfg.timeline().unwrap();
        let opts = CrossCorrelationOptions {
            max_lag: None,
            tau_step: Some(2.0 / cfg.sample_rate),
        };
        let err = CrossCorrelationAccumulator::new(
            &tl,
            tl.require(WindowKind::Ase).unwrap().range(),
            tl.require(WindowKind::Rase).unwrap().range(),
            &opts,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
