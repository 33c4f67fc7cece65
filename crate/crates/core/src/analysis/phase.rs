use std::ops::Range;

use num_complex::Complex64;

use crate::sequence::HeterodyneRecord;

/// Tone amplitude (in vacuum σ) below which the reference is not trusted.
pub const MIN_REFERENCE_AMPLITUDE: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseReference {
    /// Estimated interferometer phase (rad).
    pub phase: f64,
    /// Estimated tone amplitude, vacuum-normalized.
    pub amplitude: f64,
    /// False when the tone was too weak and the record was left untouched.
    pub applied: bool,
}

/// Estimate the interferometer phase from the mean of the reference tone and
/// rotate the whole record by its negative.
pub fn apply_phase_reference(shot: &mut HeterodyneRecord, reference: Range<usize>) -> PhaseReference {
    let window = &shot.samples[reference];
    let mean = window.iter().sum::<Complex64>() / window.len().max(1) as f64;
    let (amplitude, phase) = mean.to_polar();
    if amplitude < MIN_REFERENCE_AMPLITUDE {
        return PhaseReference {
            phase,
            amplitude,
            applied: false,
        };
    }
    let rot = Complex64::from_polar(1.0, -phase);
    for s in &mut shot.samples {
        *s *= rot;
    }
    PhaseReference {
        phase,
        amplitude,
        applied: true,
    }
}
