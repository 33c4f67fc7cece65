use num_complex::Complex64;

use crate::cv_gaussian::QuadratureSample;
use crate::error::{Error, Result};
use crate::sequence::{HeterodyneRecord, TemporalModeBasis, Timeline};

/// Confirm every mode tile avoids saturated pulse windows.
pub fn check_basis(basis: &TemporalModeBasis, timeline: &Timeline) -> Result<()> {
    for k in 0..basis.n_modes() {
        let (a, r) = (basis.ase_tile(k), basis.rase_tile(k));
        if a.end > timeline.n_samples() || r.end > timeline.n_samples() {
            return Err(Error::Config(format!("mode {k} extends past the record")));
        }
        if timeline.touches_sentinel(a) || timeline.touches_sentinel(r) {
            return Err(Error::SentinelContamination {
                window: format!("mode {k}"),
            });
        }
    }
    Ok(())
}

/// Quadratures of every mode pair in one shot.
///
/// `x₁ + ip₁ = ⟨f_k, z⟩` and `x₂ + ip₂ = conj⟨g_k, z⟩`; the conjugation undoes
/// the phase conjugation of the rephased field.
pub fn project_modes(shot: &HeterodyneRecord, basis: &TemporalModeBasis) -> Result<Vec<QuadratureSample<f64>>> {
    check_basis(basis, &shot.timeline)?;
    Ok(project_unchecked(&shot.samples, shot.shot_index, basis))
}

pub(crate) fn project_unchecked(
    samples: &[Complex64],
    shot_index: usize,
    basis: &TemporalModeBasis,
) -> Vec<QuadratureSample<f64>> {
    // ⟨f, z⟩ = √Δt Σ f(tᵢ) zᵢ with f = 1/√(M Δt) on the tile.
    let norm = 1.0 / (basis.tile_len() as f64).sqrt();
    (0..basis.n_modes())
        .map(|k| {
            let a = samples[basis.ase_tile(k)].iter().sum::<Complex64>() * norm;
            let r = samples[basis.rase_tile(k)].iter().sum::<Complex64>() * norm;
            QuadratureSample {
                x1: a.re,
                p1: a.im,
                x2: r.re,
                p2: -r.im,
                shot_index,
                mode_index: k,
            }
        })
        .collect()
}
