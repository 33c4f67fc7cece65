use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::cv_gaussian::RasePhysicsParams;
use crate::error::{Error, Result};

/// FWHM of `sinc²(f·D)` in units of `1/D`.
pub const SINC2_FWHM: f64 = 0.885_892_941_378_904;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowKind {
    Reference,
    Vacuum,
    Pi1,
    Ase,
    Pi2,
    Rase,
    Echo,
    Tail,
}

impl WindowKind {
    pub const ALL: [WindowKind; 8] = [
        WindowKind::Reference,
        WindowKind::Vacuum,
        WindowKind::Pi1,
        WindowKind::Ase,
        WindowKind::Pi2,
        WindowKind::Rase,
        WindowKind::Echo,
        WindowKind::Tail,
    ];

    pub fn label(self) -> &'static str {
        match self {
            WindowKind::Reference => "reference",
            WindowKind::Vacuum => "vacuum",
            WindowKind::Pi1 => "pi1",
            WindowKind::Ase => "ase",
            WindowKind::Pi2 => "pi2",
            WindowKind::Rase => "rase",
            WindowKind::Echo => "echo",
            WindowKind::Tail => "tail",
        }
    }

    /// π-pulse windows saturate the detector and never enter statistics.
    pub fn is_sentinel(self) -> bool {
        matches!(self, WindowKind::Pi1 | WindowKind::Pi2)
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WindowKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown window label '{s}'")))
    }
}

/// Half-open sample range `[start, end)` carrying a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub kind: WindowKind,
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Twice the center index, so half-sample centers stay integral.
    pub fn center2(&self) -> usize {
        self.start + self.end - 1
    }
}

/// Ordered, non-overlapping window table of one record.
#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    sample_rate: f64,
    n_samples: usize,
    windows: Vec<Window>,
}

impl Timeline {
    pub fn new(sample_rate: f64, n_samples: usize, windows: Vec<Window>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Config(format!("sample rate {sample_rate} must be positive")));
        }
        for (i, w) in windows.iter().enumerate() {
            if w.is_empty() || w.end > n_samples {
                return Err(Error::Config(format!(
                    "window '{}' [{}, {}) is empty or exceeds {} samples",
                    w.kind, w.start, w.end, n_samples
                )));
            }
            if windows[..i].iter().any(|o| o.kind == w.kind) {
                return Err(Error::Config(format!("duplicate window label '{}'", w.kind)));
            }
            if i > 0 && windows[i - 1].end > w.start {
                return Err(Error::Config(format!(
                    "windows '{}' and '{}' overlap or are out of order",
                    windows[i - 1].kind, w.kind
                )));
            }
        }
        Ok(Self {
            sample_rate,
            n_samples,
            windows,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn get(&self, kind: WindowKind) -> Option<&Window> {
        self.windows.iter().find(|w| w.kind == kind)
    }

    pub fn require(&self, kind: WindowKind) -> Result<&Window> {
        self.get(kind)
            .ok_or_else(|| Error::Config(format!("timeline has no '{kind}' window")))
    }

    /// Sample spacing in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// True if `range` touches any π-pulse window.
    pub fn touches_sentinel(&self, range: Range<usize>) -> bool {
        self.windows
            .iter()
            .filter(|w| w.kind.is_sentinel())
            .any(|w| w.start < range.end && range.start < w.end)
    }

    /// Twice the sample index of the rephasing symmetry point (center of π₂).
    pub fn symmetry_center2(&self) -> Result<usize> {
        Ok(self.require(WindowKind::Pi2)?.center2())
    }

    /// Replace one window's extent, keeping the table valid.
    pub fn with_override(&self, kind: WindowKind, start: usize, end: usize) -> Result<Self> {
        let mut windows = self.windows.clone();
        match windows.iter_mut().find(|w| w.kind == kind) {
            Some(w) => {
                w.start = start;
                w.end = end;
            }
            None => windows.push(Window { kind, start, end }),
        }
        windows.sort_by_key(|w| w.start);
        Timeline::new(self.sample_rate, self.n_samples, windows)
    }
}

/// Durations (seconds) of the fixed parts of the pulse sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct TimelineLayout {
    pub reference: f64,
    pub vacuum: f64,
    /// Dead time between a pulse edge and the neighboring analysis window.
    pub guard: f64,
    pub tail: f64,
}

impl Default for TimelineLayout {
    fn default() -> Self {
        Self {
            reference: 10e-6,
            vacuum: 40e-6,
            guard: 2e-6,
            tail: 30e-6,
        }
    }
}

/// Physics and timing of one simulated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceConfig {
    pub sample_rate: f64,
    pub layout: TimelineLayout,
    pub physics: RasePhysicsParams<f64>,
    /// 1/e time of the ASE signal variance.
    pub ase_decay_tau: f64,
    /// Spectral FWHM of the ASE light.
    pub signal_bandwidth: f64,
    pub t2: f64,
    pub pulse_width: f64,
    pub n_modes: usize,
    pub n_shots: usize,
    pub seed: u64,
    pub warm: bool,
    pub pi2_enabled: bool,
    /// Standard deviation of the per-shot interferometer phase (rad).
    pub lo_phase_drift: f64,
    /// Phase-reference tone amplitude in units of the vacuum quadrature σ.
    pub reference_amplitude: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            sample_rate: 10e6,
            layout: TimelineLayout::default(),
            physics: RasePhysicsParams {
                alpha_l: 0.78,
                eta: 1.0 - (-0.78f64).exp(),
                excess: 0.0,
            },
            ase_decay_tau: 378e-6,
            signal_bandwidth: 150e3,
            t2: 13e-6,
            pulse_width: 1.6e-6,
            n_modes: 4,
            n_shots: 100_000,
            seed: 1,
            warm: false,
            pi2_enabled: true,
            lo_phase_drift: 0.0,
            reference_amplitude: 20.0,
        }
    }
}

impl SequenceConfig {
    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate).round() as usize
    }

    /// Samples per boxcar mode, sized so its `sinc²` spectrum has FWHM equal
    /// to `signal_bandwidth`.
    pub fn mode_samples(&self) -> usize {
        (SINC2_FWHM / self.signal_bandwidth * self.sample_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate", self.sample_rate),
            ("ase_decay_tau", self.ase_decay_tau),
            ("signal_bandwidth", self.signal_bandwidth),
            ("t2", self.t2),
            ("pulse_width", self.pulse_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let layout = [
            ("reference", self.layout.reference),
            ("vacuum", self.layout.vacuum),
            ("guard", self.layout.guard),
            ("tail", self.layout.tail),
        ];
        for (name, v) in layout {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} duration must be >= 0, got {v}")));
            }
        }
        if self.samples(self.layout.vacuum) == 0 || self.samples(self.layout.reference) == 0 {
            return Err(Error::Config("reference and vacuum windows need at least one sample".into()));
        }
        if self.n_modes == 0 {
            return Err(Error::Config("n_modes must be at least 1".into()));
        }
        if self.mode_samples() < 2 {
            return Err(Error::Config(format!(
                "mode duration {} samples is below 2; raise sample_rate or lower signal_bandwidth",
                self.mode_samples()
            )));
        }
        if self.samples(self.pulse_width) == 0 {
            return Err(Error::Config("pulse_width is shorter than one sample".into()));
        }
        if self.n_shots == 0 {
            return Err(Error::Config("n_shots must be at least 1".into()));
        }
        if !(self.lo_phase_drift >= 0.0 && self.reference_amplitude >= 0.0) {
            return Err(Error::Config("lo_phase_drift and reference_amplitude must be >= 0".into()));
        }
        self.physics.validate()
    }

    /// Window table of the pulse sequence.
    ///
    /// The RASE window is the exact mirror image of the ASE window about the
    /// center of π₂; the unintended echo sits as far after π₂ as π₁ is before.
    pub fn timeline(&self) -> Result<Timeline> {
        self.validate()?;
        let reference = self.samples(self.layout.reference);
        let vacuum = self.samples(self.layout.vacuum);
        let guard = self.samples(self.layout.guard);
        let pulse = self.samples(self.pulse_width);
        let ase_len = self.n_modes * self.mode_samples();

        let pi1_start = reference + vacuum;
        let pi1_end = pi1_start + pulse;
        let ase_start = pi1_end + guard;
        let ase_end = ase_start + ase_len;
        let pi2_start = ase_end + guard;
        let pi2_end = pi2_start + pulse;
        let center2 = pi2_start + pi2_end - 1;
        let rase_start = center2 + 1 - ase_end;
        let rase_end = center2 + 1 - ase_start;

        let pi1_center2 = pi1_start + pi1_end - 1;
        let echo_center2 = 2 * center2 - pi1_center2;
        let echo_start = (echo_center2 + 1) / 2 - pulse;
        let echo_end = echo_start + 2 * pulse;
        let tail_start = echo_end + guard;
        let tail_end = tail_start + self.samples(self.layout.tail).max(1);

        let w = |kind, start, end| Window { kind, start, end };
        Timeline::new(
            self.sample_rate,
            tail_end,
            vec![
                w(WindowKind::Reference, 0, reference),
                w(WindowKind::Vacuum, reference, pi1_start),
                w(WindowKind::Pi1, pi1_start, pi1_end),
                w(WindowKind::Ase, ase_start, ase_end),
                w(WindowKind::Pi2, pi2_start, pi2_end),
                w(WindowKind::Rase, rase_start, rase_end),
                w(WindowKind::Echo, echo_start, echo_end),
                w(WindowKind::Tail, tail_start, tail_end),
            ],
        )
    }
}
