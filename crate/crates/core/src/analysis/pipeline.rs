use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

use super::fit::{correlation_width, fit_exponential_decay, fit_spectral_fwhm};
use super::inseparability::{dip_significance, inseparability_curve, uniform_b_grid};
use super::normalize::VacuumStats;
use super::phase::apply_phase_reference;
use super::projection::{check_basis, project_unchecked};
use super::spectrum::SpectrumAccumulator;
use super::stats::{covariance_standard_errors, sample_covariance, BootstrapOptions};
use super::trace::EnsembleAccumulator;
use super::xcorr::{CrossCorrelationAccumulator, CrossCorrelationOptions};
use super::{
    CorrelationWidth, CrossCorrelation, DecayFit, DipSignificance, InseparabilityCurve, SpectralWidth, Spectrum,
    VarianceTrace,
};
use crate::cv_gaussian::QuadratureSample;
use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::sequence::{HeterodyneRecord, Synthesizer, TemporalModeBasis, Timeline, Window, WindowKind};

/// Random access to the shots of a run.
pub trait ShotSource: Sync {
    fn timeline(&self) -> Arc<Timeline>;
    fn n_shots(&self) -> usize;
    fn shot(&self, index: usize) -> Result<HeterodyneRecord>;
}

impl ShotSource for Synthesizer {
    fn timeline(&self) -> Arc<Timeline> {
        Arc::clone(Synthesizer::timeline(self))
    }

    fn n_shots(&self) -> usize {
        self.config().n_shots
    }

    fn shot(&self, index: usize) -> Result<HeterodyneRecord> {
        Ok(Synthesizer::shot(self, index))
    }
}

impl ShotSource for [HeterodyneRecord] {
    fn timeline(&self) -> Arc<Timeline> {
        Arc::clone(&self[0].timeline)
    }

    fn n_shots(&self) -> usize {
        self.len()
    }

    fn shot(&self, index: usize) -> Result<HeterodyneRecord> {
        Ok(self[index].clone())
    }
}

impl ShotSource for Vec<HeterodyneRecord> {
    fn timeline(&self) -> Arc<Timeline> {
        self.as_slice().timeline()
    }

    fn n_shots(&self) -> usize {
        self.len()
    }

    fn shot(&self, index: usize) -> Result<HeterodyneRecord> {
        self.as_slice().shot(index)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub n_modes: usize,
    /// Variance-trace bin width, seconds.
    pub bin_width: f64,
    pub b_step: f64,
    pub bootstrap: BootstrapOptions,
    pub confidence_level: f64,
    /// Weight at which the dip significance is reported.
    pub dip_b: f64,
    pub xcorr: CrossCorrelationOptions,
    /// Replacement extents for windows of the recorded table.
    pub window_overrides: Vec<Window>,
    pub phase_reference: bool,
    /// Windows whose spectra are reported.
    pub spectrum_windows: Vec<WindowKind>,
    /// Shots per work unit; results do not depend on it.
    pub chunk_size: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n_modes: 4,
            bin_width: 1e-6,
            b_step: 0.01,
            bootstrap: BootstrapOptions::default(),
            confidence_level: 0.95,
            dip_b: 0.5,
            xcorr: CrossCorrelationOptions::default(),
            window_overrides: Vec::new(),
            phase_reference: true,
            spectrum_windows: vec![WindowKind::Vacuum, WindowKind::Ase, WindowKind::Rase, WindowKind::Tail],
            chunk_size: 256,
        }
    }
}

/// Plug-in moments of one mode pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeStatistics {
    pub mode: usize,
    pub n: usize,
    pub mean: [f64; 4],
    pub cov: Mat4<f64>,
    pub cov_se: Mat4<f64>,
}

#[derive(Debug)]
pub struct AnalysisReport {
    pub n_shots: usize,
    pub timeline: Timeline,
    pub scale: f64,
    /// Pooled `Var(x) + Var(p)` of the vacuum window after normalization.
    pub vacuum_variance_sum: f64,
    /// Shots whose reference tone was strong enough to rotate.
    pub phase_referenced: usize,
    pub trace: VarianceTrace,
    pub decay: Result<DecayFit>,
    pub spectra: Vec<(WindowKind, Spectrum)>,
    pub ase_width: Result<SpectralWidth>,
    pub xcorr: CrossCorrelation,
    pub xcorr_width: Result<CorrelationWidth>,
    pub modes: Vec<ModeStatistics>,
    /// Per-mode quadrature samples, indexed `[mode][shot]`.
    pub samples: Vec<Vec<QuadratureSample<f64>>>,
    /// Mode used for the inseparability results: the one nearest π₂.
    pub primary_mode: usize,
    pub inseparability: InseparabilityCurve,
    pub dip: DipSignificance,
}

impl AnalysisReport {
    pub fn spectrum(&self, kind: WindowKind) -> Option<&Spectrum> {
        self.spectra.iter().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }
}

#[derive(Clone)]
struct Partial {
    ensemble: EnsembleAccumulator,
    spectra: Vec<SpectrumAccumulator>,
    xcorr: CrossCorrelationAccumulator,
    samples: Vec<Vec<QuadratureSample<f64>>>,
    phase_referenced: usize,
}

impl Partial {
    fn merge(&mut self, other: Partial) {
        self.ensemble.merge(&other.ensemble);
        for (a, b) in self.spectra.iter_mut().zip(&other.spectra) {
            a.merge(b);
        }
        self.xcorr.merge(&other.xcorr);
        for (a, b) in self.samples.iter_mut().zip(other.samples) {
            a.extend(b);
        }
        self.phase_referenced += other.phase_referenced;
    }
}

fn chunks(n: usize, size: usize) -> Vec<Range<usize>> {
    (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
}

/// Run the full analysis chain over every shot of `source`.
///
/// Pass one pools the vacuum window for the global scale; pass two applies
/// the scale and the phase reference, then feeds every estimator. Work is
/// split into fixed shot chunks merged in shot order, so results do not
/// depend on the thread count.
pub fn analyze<S: ShotSource + ?Sized>(source: &S, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let n_shots = source.n_shots();
    if n_shots < 2 {
        return Err(Error::Estimation(format!("analysis needs at least 2 shots, got {n_shots}")));
    }
    if options.chunk_size == 0 {
        return Err(Error::Config("chunk_size must be at least 1".into()));
    }
    let mut timeline = (*source.timeline()).clone();
    for w in &options.window_overrides {
        timeline = timeline.with_override(w.kind, w.start, w.end)?;
    }
    let n_samples = timeline.n_samples();
    let basis = TemporalModeBasis::from_timeline(&timeline, options.n_modes)?;
    check_basis(&basis, &timeline)?;
    let vacuum = clean_window(&timeline, WindowKind::Vacuum)?;
    let reference = timeline.require(WindowKind::Reference)?.range();
    let ase = timeline.require(WindowKind::Ase)?.range();
    let rase = timeline.require(WindowKind::Rase)?.range();
    let b_grid = uniform_b_grid(options.b_step)?;
    let work = chunks(n_shots, options.chunk_size);

    let fetch = |i: usize| -> Result<HeterodyneRecord> {
        let shot = source.shot(i)?;
        if shot.samples.len() != n_samples {
            return Err(Error::Format {
                offset: 0,
                message: format!("shot {i} has {} samples, expected {n_samples}", shot.samples.len()),
            });
        }
        Ok(shot)
    };

    let vac_parts: Vec<VacuumStats> = work
        .par_iter()
        .map(|r| {
            let mut st = VacuumStats::default();
            for i in r.clone() {
                st.push(&fetch(i)?.samples[vacuum.clone()]);
            }
            Ok(st)
        })
        .collect::<Result<_>>()?;
    let mut vac = VacuumStats::default();
    for p in &vac_parts {
        vac.merge(p);
    }
    let scale = vac.scale()?;

    let template = Partial {
        ensemble: EnsembleAccumulator::new(n_samples),
        spectra: options
            .spectrum_windows
            .iter()
            .map(|&k| SpectrumAccumulator::new(&timeline, k.label(), clean_window(&timeline, k)?))
            .collect::<Result<_>>()?,
        xcorr: CrossCorrelationAccumulator::new(&timeline, ase.clone(), rase.clone(), &options.xcorr)?,
        samples: vec![Vec::new(); basis.n_modes()],
        phase_referenced: 0,
    };

    // Bounded batches keep at most a few partial accumulators alive at once.
    let batch = rayon::current_num_threads().max(1) * 2;
    let mut total: Option<Partial> = None;
    for group in work.chunks(batch) {
        let parts: Vec<Partial> = group
            .par_iter()
            .map(|r| {
                let mut part = template.clone();
                for i in r.clone() {
                    let mut shot = fetch(i)?;
                    for s in &mut shot.samples {
                        *s *= scale;
                    }
                    if options.phase_reference && apply_phase_reference(&mut shot, reference.clone()).applied {
                        part.phase_referenced += 1;
                    }
                    part.ensemble.push(&shot.samples);
                    for acc in &mut part.spectra {
                        acc.push(&shot.samples);
                    }
                    part.xcorr.push(&shot.samples);
                    for q in project_unchecked(&shot.samples, shot.shot_index, &basis) {
                        part.samples[q.mode_index].push(q);
                    }
                }
                Ok(part)
            })
            .collect::<Result<_>>()?;
        for p in parts {
            match total.as_mut() {
                Some(t) => t.merge(p),
                None => total = Some(p),
            }
        }
    }
    let total = total.expect("at least one chunk");

    let vacuum_variance_sum = vacuum
        .clone()
        .map(|i| total.ensemble.variance_sum(i))
        .sum::<f64>()
        / vacuum.len() as f64;
    let trace = total.ensemble.trace(&timeline, options.bin_width)?;
    let decay = fit_exponential_decay(&trace.points_within(ase.clone()), vacuum_variance_sum);
    let spectra: Vec<(WindowKind, Spectrum)> = options
        .spectrum_windows
        .iter()
        .zip(&total.spectra)
        .map(|(&k, acc)| Ok((k, acc.finish(timeline.sample_rate())?)))
        .collect::<Result<_>>()?;
    let ase_width = match spectra.iter().find(|(k, _)| *k == WindowKind::Ase) {
        Some((_, s)) => fit_spectral_fwhm(s, vacuum_variance_sum),
        None => Err(Error::Fit("ASE spectrum not requested".into())),
    };
    let xcorr = total.xcorr.finish()?;
    let xcorr_width = correlation_width(&xcorr);

    let modes = total
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (mean, cov) = sample_covariance(s)?;
            Ok(ModeStatistics {
                mode: k,
                n: s.len(),
                mean,
                cov_se: covariance_standard_errors(&cov, s.len()),
                cov,
            })
        })
        .collect::<Result<_>>()?;
    let primary_mode = basis.n_modes() - 1;
    let primary = &total.samples[primary_mode];
    let inseparability = inseparability_curve(primary, &b_grid, options.confidence_level, &options.bootstrap)?;
    let dip = dip_significance(primary, options.dip_b, &options.bootstrap)?;

    Ok(AnalysisReport {
        n_shots,
        timeline,
        scale,
        vacuum_variance_sum,
        phase_referenced: total.phase_referenced,
        trace,
        decay,
        spectra,
        ase_width,
        xcorr,
        xcorr_width,
        modes,
        samples: total.samples,
        primary_mode,
        inseparability,
        dip,
    })
}

fn clean_window(timeline: &Timeline, kind: WindowKind) -> Result<Range<usize>> {
    let range = timeline.require(kind)?.range();
    if timeline.touches_sentinel(range.clone()) {
        return Err(Error::SentinelContamination {
            window: kind.label().to_string(),
        });
    }
    Ok(range)
}
