use std::ops::Range;

use super::config::{SequenceConfig, Timeline, WindowKind};
use crate::error::{Error, Result};

/// Boxcar temporal modes tiling the ASE window, each paired with its mirror
/// image about the rephasing point inside the RASE window.
///
/// Mode `k` runs in time order through the ASE window, so its partner runs
/// backwards through the RASE window: the first ASE tile pairs with the last
/// RASE tile.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalModeBasis {
    sample_rate: f64,
    tile_len: usize,
    ase_start: usize,
    n_modes: usize,
    center2: usize,
}

impl TemporalModeBasis {
    pub fn from_timeline(timeline: &Timeline, n_modes: usize) -> Result<Self> {
        let ase = timeline.require(WindowKind::Ase)?;
        let center2 = timeline.symmetry_center2()?;
        if n_modes == 0 || ase.len() % n_modes != 0 {
            return Err(Error::Config(format!(
                "ASE window of {} samples does not split into {} equal tiles",
                ase.len(),
                n_modes
            )));
        }
        let tile_len = ase.len() / n_modes;
        if tile_len < 2 {
            return Err(Error::Config(format!(
                "mode tiles of {tile_len} samples are shorter than 2 samples"
            )));
        }
        if center2 < 2 * ase.end {
            return Err(Error::Config("ASE window must end before the rephasing point".into()));
        }
        if center2 + 1 - ase.start > timeline.n_samples() {
            return Err(Error::Config("mirrored ASE window runs past the end of the record".into()));
        }
        Ok(Self {
            sample_rate: timeline.sample_rate(),
            tile_len,
            ase_start: ase.start,
            n_modes,
            center2,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn tile_len(&self) -> usize {
        self.tile_len
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Mode duration in seconds.
    pub fn duration(&self) -> f64 {
        self.tile_len as f64 / self.sample_rate
    }

    /// Boxcar amplitude `1/√duration`.
    pub fn amplitude(&self) -> f64 {
        1.0 / self.duration().sqrt()
    }

    pub fn ase_tile(&self, k: usize) -> Range<usize> {
        let start = self.ase_start + k * self.tile_len;
        start..start + self.tile_len
    }

    pub fn rase_tile(&self, k: usize) -> Range<usize> {
        let ase = self.ase_tile(k);
        (self.center2 + 1 - ase.end)..(self.center2 + 1 - ase.start)
    }

    /// Sample index that `i` maps to under reflection about the rephasing point.
    pub fn mirror(&self, i: usize) -> usize {
        self.center2 - i
    }

    /// `f_k(t_i)`.
    pub fn ase_mode(&self, k: usize, i: usize) -> f64 {
        if self.ase_tile(k).contains(&i) {
            self.amplitude()
        } else {
            0.0
        }
    }

    /// `g_k(t_j) = f_k(t_{mirror(j)})`.
    pub fn rase_mode(&self, k: usize, j: usize) -> f64 {
        if j > self.center2 {
            return 0.0;
        }
        self.ase_mode(k, self.mirror(j))
    }

    /// Discrete Gram matrix over `(f_0 … f_{n-1}, g_0 … g_{n-1})` on `[0, n_samples)`.
    pub fn gram(&self, n_samples: usize) -> Vec<Vec<f64>> {
        let dt = 1.0 / self.sample_rate;
        let n = self.n_modes;
        let eval = |m: usize, i: usize| {
            if m < n {
                self.ase_mode(m, i)
            } else {
                self.rase_mode(m - n, i)
            }
        };
        (0..2 * n)
            .map(|a| {
                (0..2 * n)
                    .map(|b| (0..n_samples).map(|i| eval(a, i) * eval(b, i) * dt).sum())
                    .collect()
            })
            .collect()
    }

    /// Time from the rephasing point back to the center of ASE tile `k`, seconds.
    pub fn delay_to_rephasing(&self, k: usize) -> f64 {
        let tile = self.ase_tile(k);
        let tile_center2 = tile.start + tile.end - 1;
        (self.center2 - tile_center2) as f64 / (2.0 * self.sample_rate)
    }
}

/// Mode basis of a configured sequence.
pub fn build_mode_basis(config: &SequenceConfig) -> Result<TemporalModeBasis> {
    TemporalModeBasis::from_timeline(&config.timeline()?, config.n_modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n_modes: usize) -> SequenceConfig {
        SequenceConfig {
            n_modes,
            ..SequenceConfig::default()
        }
    }

    #[test]
    fn single_mode_spans_ase_window() {
        let cfg = config(1);
        let tl = cfg.timeline().unwrap();
        let basis = build_mode_basis(&cfg).unwrap();
        assert_eq!(basis.ase_tile(0), tl.require(WindowKind::Ase).unwrap().range());
        assert_eq!(basis.rase_tile(0), tl.require(WindowKind::Rase).unwrap().range());
        let g = basis.gram(tl.n_samples());
        assert!((g[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_modes_are_orthonormal() {
        let cfg = config(4);
        let basis = build_mode_basis(&cfg).unwrap();
        let g = basis.gram(cfg.timeline().unwrap().n_samples());
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "gram[{a}][{b}] = {v}");
            }
        }
    }

    #[test]
    fn first_ase_tile_pairs_with_last_rase_tile() {
        let cfg = config(4);
        let basis = build_mode_basis(&cfg).unwrap();
        let rase = cfg.timeline().unwrap().require(WindowKind::Rase).unwrap().range();
        assert_eq!(basis.rase_tile(0).end, rase.end);
        assert_eq!(basis.rase_tile(3).start, rase.start);
        let first: Vec<usize> = basis.ase_tile(0).collect();
        let partner: Vec<usize> = basis.rase_tile(0).rev().map(|j| basis.mirror(j)).collect();
        assert_eq!(first, partner);
        for i in basis.ase_tile(2) {
            assert_eq!(basis.ase_mode(2, i), basis.rase_mode(2, basis.mirror(i)));
        }
    }

    #[test]
    fn indivisible_window_rejected() {
        let cfg = config(3);
        let tl = cfg.timeline().unwrap();
        assert!(TemporalModeBasis::from_timeline(&tl, 7).is_err());
    }
}
