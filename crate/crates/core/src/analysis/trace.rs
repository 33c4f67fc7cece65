use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sequence::{HeterodyneRecord, Timeline};

/// Per-sample ensemble sums across shots.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleAccumulator {
    n_shots: usize,
    sum: Vec<Complex64>,
    sum_sq_re: Vec<f64>,
    sum_sq_im: Vec<f64>,
}

impl EnsembleAccumulator {
    pub fn new(n_samples: usize) -> Self {
        Self {
            n_shots: 0,
            sum: vec![Complex64::default(); n_samples],
            sum_sq_re: vec![0.0; n_samples],
            sum_sq_im: vec![0.0; n_samples],
        }
    }

    pub fn push(&mut self, samples: &[Complex64]) {
        self.n_shots += 1;
        for (i, s) in samples.iter().enumerate() {
            self.sum[i] += s;
            self.sum_sq_re[i] += s.re * s.re;
            self.sum_sq_im[i] += s.im * s.im;
        }
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        self.n_shots += other.n_shots;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq_re[i] += other.sum_sq_re[i];
            self.sum_sq_im[i] += other.sum_sq_im[i];
        }
    }

    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    /// Ensemble `Var(x) + Var(p)` at sample `i`.
    pub fn variance_sum(&self, i: usize) -> f64 {
        let n = self.n_shots as f64;
        let var_re = (self.sum_sq_re[i] - self.sum[i].re.powi(2) / n) / (n - 1.0);
        let var_im = (self.sum_sq_im[i] - self.sum[i].im.powi(2) / n) / (n - 1.0);
        var_re + var_im
    }

    /// Ensemble `(Var(x), Var(p))` averaged over a sample range.
    pub fn quadrature_variances(&self, range: std::ops::Range<usize>) -> (f64, f64) {
        let n = self.n_shots as f64;
        let len = range.len() as f64;
        let (mut vx, mut vp) = (0.0, 0.0);
        for i in range {
            vx += (self.sum_sq_re[i] - self.sum[i].re.powi(2) / n) / (n - 1.0);
            vp += (self.sum_sq_im[i] - self.sum[i].im.powi(2) / n) / (n - 1.0);
        }
        (vx / len, vp / len)
    }

    pub fn trace(&self, timeline: &Timeline, bin_width: f64) -> Result<VarianceTrace> {
        let fs = timeline.sample_rate();
        let bin = (bin_width * fs).round() as usize;
        if bin_width * fs < 2.0 - 1e-9 || bin < 2 {
            return Err(Error::Config(format!(
                "bin width {bin_width:e} s is below two samples at {fs:e} Hz"
            )));
        }
        if self.n_shots < 2 {
            return Err(Error::Estimation("variance trace needs at least 2 shots".into()));
        }
        let n = timeline.n_samples();
        let bins = (0..n)
            .step_by(bin)
            .map(|start| {
                let end = (start + bin).min(n);
                let sentinel = timeline.touches_sentinel(start..end);
                let value = if sentinel {
                    f64::NAN
                } else {
                    (start..end).map(|i| self.variance_sum(i)).sum::<f64>() / (end - start) as f64
                };
                TraceBin {
                    start,
                    end,
                    t_center: (start + end) as f64 / (2.0 * fs),
                    value,
                    sentinel,
                }
            })
            .collect();
        Ok(VarianceTrace {
            bins,
            bin_width: bin as f64 / fs,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceBin {
    pub start: usize,
    pub end: usize,
    /// Bin center, seconds from the start of the record.
    pub t_center: f64,
    /// Pooled `Var(x) + Var(p)`; NaN on sentinel bins.
    pub value: f64,
    pub sentinel: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceTrace {
    pub bins: Vec<TraceBin>,
    pub bin_width: f64,
}

impl VarianceTrace {
    /// `(t_center, value)` of non-sentinel bins lying fully inside `range`.
    pub fn points_within(&self, range: std::ops::Range<usize>) -> Vec<(f64, f64)> {
        self.bins
            .iter()
            .filter(|b| !b.sentinel && b.start >= range.start && b.end <= range.end)
            .map(|b| (b.t_center, b.value))
            .collect()
    }
}

/// Shot-pooled `Var(x) + Var(p)` in consecutive bins of `bin_width` seconds.
pub fn variance_trace(shots: &[HeterodyneRecord], bin_width: f64) -> Result<VarianceTrace> {
    let first = shots
        .first()
        .ok_or_else(|| Error::Estimation("no shots".into()))?;
    let mut acc = EnsembleAccumulator::new(first.samples.len());
    for shot in shots {
        acc.push(&shot.samples);
    }
    acc.trace(&first.timeline, bin_width)
}
