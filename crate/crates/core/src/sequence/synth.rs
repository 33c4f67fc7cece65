use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::basis::TemporalModeBasis;
use super::config::{SequenceConfig, Timeline, WindowKind};
use crate::cv_gaussian::{ase_rase_state, heterodyne_map, RasePhysicsParams, TwoModeGaussianState};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, sqrt_psd, Mat4};
use crate::rng::stream_rng;

/// Detector output level written into π-pulse windows.
pub const SATURATION_LEVEL: f64 = 1.0e3;

/// Peak amplitude of the unintended two-pulse echo, in vacuum σ.
pub const ECHO_AMPLITUDE: f64 = 30.0;

/// One shot of complex heterodyne samples, vacuum-normalized so every sample
/// is the outcome of a unit-norm bin mode.
#[derive(Clone, Debug, PartialEq)]
pub struct HeterodyneRecord {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub timeline: Arc<Timeline>,
    pub shot_index: usize,
}

impl HeterodyneRecord {
    pub fn window(&self, kind: WindowKind) -> Result<&[Complex64]> {
        let w = self.timeline.require(kind)?;
        Ok(&self.samples[w.range()])
    }
}

/// Designed statistics of one temporal mode pair.
#[derive(Clone, Debug)]
pub struct ModeDesign {
    pub params: RasePhysicsParams<f64>,
    pub measured: TwoModeGaussianState<f64>,
    root: Mat4<f64>,
}

/// Precomputed per-run state; `shot(i)` is a pure function of `(seed, i)`.
#[derive(Clone, Debug)]
pub struct Synthesizer {
    config: SequenceConfig,
    timeline: Arc<Timeline>,
    basis: TemporalModeBasis,
    modes: Vec<ModeDesign>,
    echo: Vec<f64>,
}

impl Synthesizer {
    pub fn new(config: &SequenceConfig) -> Result<Self> {
        let timeline = config.timeline()?;
        let basis = TemporalModeBasis::from_timeline(&timeline, config.n_modes)?;
        let pi1 = timeline.require(WindowKind::Pi1)?;
        let g = config.physics.alpha_l.exp();
        let modes = (0..config.n_modes)
            .map(|k| {
                let tile = basis.ase_tile(k);
                let since_pi1 =
                    (tile.start + tile.end - 1 - pi1.center2()) as f64 / (2.0 * config.sample_rate);
                let gain_k = 1.0 + (g - 1.0) * (-since_pi1 / config.ase_decay_tau).exp();
                let eta_k = if config.pi2_enabled {
                    config.physics.eta * (-4.0 * basis.delay_to_rephasing(k) / config.t2).exp()
                } else {
                    0.0
                };
                let params = RasePhysicsParams::new(gain_k.ln(), eta_k, config.physics.excess)?;
                let measured = heterodyne_map(&ase_rase_state(&params)?)?;
                let root = sqrt_psd(measured.cov()).map_err(|e| {
                    Error::Synthesis(format!("mode {k} covariance cannot be factored: {e}"))
                })?;
                Ok(ModeDesign {
                    params,
                    measured,
                    root,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let echo_window = timeline.require(WindowKind::Echo)?;
        let center = (echo_window.center2() as f64) / 2.0;
        let sigma = config.pulse_width * config.sample_rate / 4.0;
        let echo = echo_window
            .range()
            .map(|i| {
                let u = (i as f64 - center) / sigma;
                ECHO_AMPLITUDE * (-0.5 * u * u).exp()
            })
            .collect();

        Ok(Self {
            config: config.clone(),
            timeline: Arc::new(timeline),
            basis,
            modes,
            echo,
        })
    }

    pub fn config(&self) -> &SequenceConfig {
        &self.config
    }

    pub fn timeline(&self) -> &Arc<Timeline> {
        &self.timeline
    }

    pub fn basis(&self) -> &TemporalModeBasis {
        &self.basis
    }

    pub fn modes(&self) -> &[ModeDesign] {
        &self.modes
    }

    pub fn shot(&self, shot_index: usize) -> HeterodyneRecord {
        let cfg = &self.config;
        let tl = &*self.timeline;
        let mut rng = stream_rng(cfg.seed, shot_index as u64);

        let drift: f64 = if cfg.lo_phase_drift > 0.0 {
            Normal::new(0.0, cfg.lo_phase_drift)
                .expect("finite drift")
                .sample(&mut rng)
        } else {
            let _: f64 = StandardNormal.sample(&mut rng);
            0.0
        };

        let mut samples: Vec<Complex64> = (0..tl.n_samples())
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();

        if !cfg.warm {
            let norm = (self.basis.tile_len() as f64).sqrt();
            for (k, mode) in self.modes.iter().enumerate() {
                let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let q = mat_vec(&mode.root, &z);
                let ase = Complex64::new(q[0], q[1]);
                // The RASE raw coefficient is the conjugate; projection undoes it.
                let rase = Complex64::new(q[2], -q[3]);
                embed(&mut samples[self.basis.ase_tile(k)], ase, norm);
                embed(&mut samples[self.basis.rase_tile(k)], rase, norm);
            }
            if cfg.pi2_enabled {
                let echo = tl.require(WindowKind::Echo).expect("validated timeline");
                for (s, a) in samples[echo.range()].iter_mut().zip(&self.echo) {
                    *s += a;
                }
            }
        }

        let reference = tl.require(WindowKind::Reference).expect("validated timeline");
        for s in &mut samples[reference.range()] {
            *s += cfg.reference_amplitude;
        }

        if drift != 0.0 {
            let rot = Complex64::from_polar(1.0, drift);
            for s in &mut samples {
                *s *= rot;
            }
        }

        for w in tl.windows() {
            let fire = match w.kind {
                WindowKind::Pi1 => true,
                WindowKind::Pi2 => cfg.pi2_enabled,
                _ => false,
            };
            if fire {
                saturate(&mut samples[w.range()]);
            }
        }

        HeterodyneRecord {
            samples,
            sample_rate: cfg.sample_rate,
            timeline: Arc::clone(&self.timeline),
            shot_index,
        }
    }
}

/// Replace the tile's component along its boxcar mode with `coeff`.
fn embed(tile: &mut [Complex64], coeff: Complex64, norm: f64) {
    let projection: Complex64 = tile.iter().sum::<Complex64>() / norm;
    let shift = (coeff - projection) / norm;
    for s in tile {
        *s += shift;
    }
}

/// Detector pinned at saturation, relaxing linearly across the pulse.
fn saturate(window: &mut [Complex64]) {
    let n = window.len() as f64;
    let dir = Complex64::new(1.0, 1.0) / 2f64.sqrt();
    for (i, s) in window.iter_mut().enumerate() {
        *s = dir * SATURATION_LEVEL * (1.0 - 0.9 * i as f64 / n);
    }
}

/// Synthesize one shot of a configured run.
pub fn synthesize_shot(config: &SequenceConfig, shot_index: usize) -> Result<HeterodyneRecord> {
    Ok(Synthesizer::new(config)?.shot(shot_index))
}

/// All shots of a run, in shot order; identical for any thread count.
pub fn synthesize_run(config: &SequenceConfig) -> Result<Vec<HeterodyneRecord>> {
    config.validate()?;
    let synth = Synthesizer::new(config)?;
    Ok((0..config.n_shots)
        .into_par_iter()
        .map(|i| synth.shot(i))
        .collect())
}
