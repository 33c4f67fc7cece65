use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sequence::{HeterodyneRecord, Timeline};

/// Shortest window accepted for a spectrum.
pub const MIN_SPECTRUM_SAMPLES: usize = 16;

/// Shot-averaged periodogram of the complex signal `z = x + ip` over one window.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Frequencies in Hz, ascending from −fs/2.
    pub frequencies: Vec<f64>,
    /// `|Z_k|² / N`, averaged over shots; the vacuum floor is 2.
    pub power: Vec<f64>,
    /// Standard error of each averaged bin.
    pub power_se: Vec<f64>,
    /// Mean `|z|²` over the window and shots (equals the mean of `power`).
    pub window_power: f64,
    pub n_shots: usize,
    pub taper: &'static str,
}

#[derive(Clone)]
pub struct SpectrumAccumulator {
    range: Range<usize>,
    fft: Arc<dyn Fft<f64>>,
    n_shots: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    mean_square: f64,
    buffer: Vec<Complex64>,
}

impl std::fmt::Debug for SpectrumAccumulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAccumulator")
            .field("range", &self.range)
            .field("n_shots", &self.n_shots)
            .finish()
    }
}

impl SpectrumAccumulator {
    pub fn new(timeline: &Timeline, label: &str, range: Range<usize>) -> Result<Self> {
        if range.len() < MIN_SPECTRUM_SAMPLES || range.end > timeline.n_samples() {
            return Err(Error::Config(format!(
                "spectrum window '{label}' needs at least {MIN_SPECTRUM_SAMPLES} samples inside the record"
            )));
        }
        if timeline.touches_sentinel(range.clone()) {
            return Err(Error::SentinelContamination {
                window: label.to_string(),
            });
        }
        let n = range.len();
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(n),
            range,
            n_shots: 0,
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            mean_square: 0.0,
            buffer: vec![Complex64::default(); n],
        })
    }

    pub fn push(&mut self, samples: &[Complex64]) {
        let n = self.range.len() as f64;
        self.buffer.copy_from_slice(&samples[self.range.clone()]);
        self.mean_square += self.buffer.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        self.fft.process(&mut self.buffer);
        for (k, z) in self.buffer.iter().enumerate() {
            let p = z.norm_sqr() / n;
            self.sum[k] += p;
            self.sum_sq[k] += p * p;
        }
        self.n_shots += 1;
    }

    pub fn merge(&mut self, other: &SpectrumAccumulator) {
        self.n_shots += other.n_shots;
        self.mean_square += other.mean_square;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    pub fn finish(&self, sample_rate: f64) -> Result<Spectrum> {
        if self.n_shots == 0 {
            return Err(Error::Estimation("spectrum has no shots".into()));
        }
        let n = self.sum.len();
        let shots = self.n_shots as f64;
        let positive = (n + 1) / 2;
        // fftshift: bins positive..n are the negative frequencies.
        let order: Vec<usize> = (positive..n).chain(0..positive).collect();
        let mut frequencies = Vec::with_capacity(n);
        let mut power = Vec::with_capacity(n);
        let mut power_se = Vec::with_capacity(n);
        for &k in &order {
            let signed = if k < positive { k as f64 } else { k as f64 - n as f64 };
            frequencies.push(signed * sample_rate / n as f64);
            let mean = self.sum[k] / shots;
            power.push(mean);
            let var = if self.n_shots > 1 {
                (self.sum_sq[k] / shots - mean * mean).max(0.0) / (shots - 1.0)
            } else {
                f64::NAN
            };
            power_se.push(var.sqrt());
        }
        Ok(Spectrum {
            frequencies,
            power,
            power_se,
            window_power: self.mean_square / shots,
            n_shots: self.n_shots,
            taper: "none",
        })
    }
}

/// Shot-averaged power spectrum over `window` (no taper, no zero padding).
pub fn spectral_power(shots: &[HeterodyneRecord], window: Range<usize>) -> Result<Spectrum> {
    let first = shots
        .first()
        .ok_or_else(|| Error::Estimation("no shots".into()))?;
    let mut acc = SpectrumAccumulator::new(&first.timeline, "custom", window)?;
    for shot in shots {
        acc.push(&shot.samples);
    }
    acc.finish(first.sample_rate)
}
