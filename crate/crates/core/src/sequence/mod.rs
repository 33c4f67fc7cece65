//! Synthetic heterodyne records for the two-π-pulse sequence.
//!
//! Each record is unit-variance complex white noise (the measured vacuum)
//! whose components along a set of boxcar temporal modes are replaced by
//! draws from the designed two-mode covariance. ASE tiles and their mirror
//! images about π₂ form the mode pairs; projection onto the basis recovers the
//! designed statistics exactly in distribution.

mod basis;
mod config;
mod synth;

pub use basis::{build_mode_basis, TemporalModeBasis};
pub use config::{SequenceConfig, Timeline, TimelineLayout, Window, WindowKind, SINC2_FWHM};
pub use synth::{
    synthesize_run, synthesize_shot, HeterodyneRecord, ModeDesign, Synthesizer, ECHO_AMPLITUDE,
    SATURATION_LEVEL,
};
