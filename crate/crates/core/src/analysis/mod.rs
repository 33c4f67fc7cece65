//! Estimators applied to heterodyne records: vacuum normalization, phase
//! referencing, variance traces, spectra, ASE/RASE cross-correlation, mode
//! projection, inseparability and fits.

mod fit;
mod inseparability;
mod normalize;
mod phase;
mod pipeline;
mod projection;
mod spectrum;
mod stats;
mod trace;
mod xcorr;

pub use fit::{
    correlation_width, fit_exponential_decay, fit_spectral_fwhm, half_max_width, CorrelationWidth, DecayFit, HalfMax,
    SpectralWidth,
};
pub use inseparability::{
    dip_significance, inseparability_curve, uniform_b_grid, DipSignificance, InseparabilityCurve, MIN_SAMPLES,
};
pub use normalize::{normalize_to_vacuum, VacuumStats, MIN_VACUUM_SAMPLES};
pub use phase::{apply_phase_reference, PhaseReference, MIN_REFERENCE_AMPLITUDE};
pub use pipeline::{analyze, AnalysisOptions, AnalysisReport, ModeStatistics, ShotSource};
pub use projection::{check_basis, project_modes};
pub use spectrum::{spectral_power, Spectrum, SpectrumAccumulator, MIN_SPECTRUM_SAMPLES};
pub use stats::{bootstrap_covariances, covariance_standard_errors, sample_covariance, BootstrapOptions};
pub use trace::{variance_trace, EnsembleAccumulator, TraceBin, VarianceTrace};
pub use xcorr::{cross_correlation, CrossCorrelation, CrossCorrelationAccumulator, CrossCorrelationOptions};
