//! Two-mode Gaussian model of the ASE field (mode 1) and its rephased echo
//! (mode 2).
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂)`. In the [`Convention::Intrinsic`]
//! convention the vacuum has unit covariance; ideal heterodyne detection adds
//! one vacuum unit and halves, which maps the vacuum onto the identity again
//! ([`Convention::Measured`]). In measured units every separable state obeys
//! `Var(û) + Var(v̂) ≥ 2` with
//!
//! ```text
//! û = √b·x₁ + √(1-b)·x₂,   v̂ = √b·p₁ − √(1-b)·p₂.
//! ```
//!
//! The joint ASE/RASE state is modelled as a two-mode squeezed pair (ASE light
//! and collective atomic excitation, intensity gain `G = e^{αl}`) whose atomic
//! half is read out through a loss channel of transmissivity `η`, plus excess
//! noise on the read-out arm. The cross terms carry the signs
//! `Cov(x₁,x₂) = −c`, `Cov(p₁,p₂) = +c`, which is the orientation in which the
//! EPR combinations above have reduced variance.

mod sampling;

pub use sampling::{sample_quadratures, sample_quadratures_matched, QuadratureSample};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Mat4};
use crate::scalar::Real;

/// Largest optical depth accepted; keeps `e^{αl}` comfortably finite.
pub const MAX_ALPHA_L: f64 = 10.0;

/// Grid spacing of the coarse scan in [`min_inseparability`].
const MIN_GRID_STEP: f64 = 1e-3;

/// Separable bound on `Var(û) + Var(v̂)` in measured units.
pub const SEPARABLE_BOUND: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    /// Vacuum quadrature variance 1, no detection noise.
    Intrinsic,
    /// Outcome statistics of ideal heterodyne detection, vacuum-normalized.
    Measured,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Intrinsic => "intrinsic",
            Convention::Measured => "measured",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeGaussianState<T: Real> {
    cov: Mat4<T>,
    mean: [T; 4],
    convention: Convention,
}

impl<T: Real> TwoModeGaussianState<T> {
    /// Two vacua in the intrinsic convention.
    pub fn vacuum() -> Self {
        Self {
            cov: crate::linalg::identity(),
            mean: [T::zero(); 4],
            convention: Convention::Intrinsic,
        }
    }

    /// Zero-mean intrinsic state from an explicit covariance.
    ///
    /// The matrix must be exactly symmetric. Physicality is not enforced here;
    /// use [`check_physicality`].
    pub fn intrinsic(cov: Mat4<T>) -> Result<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if cov[i][j] != cov[j][i] {
                    return Err(Error::Asymmetric {
                        i,
                        j,
                        asymmetry: (cov[i][j] - cov[j][i]).abs().as_f64(),
                    });
                }
            }
        }
        Ok(Self {
            cov,
            mean: [T::zero(); 4],
            convention: Convention::Intrinsic,
        })
    }

    pub fn cov(&self) -> &Mat4<T> {
        &self.cov
    }

    pub fn mean(&self) -> &[T; 4] {
        &self.mean
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// `Var(x₁) + Var(p₁)`.
    pub fn ase_variance_sum(&self) -> T {
        self.cov[0][0] + self.cov[1][1]
    }

    /// `Var(x₂) + Var(p₂)`.
    pub fn rase_variance_sum(&self) -> T {
        self.cov[2][2] + self.cov[3][3]
    }

    fn require(&self, expected: Convention) -> Result<()> {
        if self.convention == expected {
            Ok(())
        } else {
            Err(Error::Convention {
                expected: expected.name(),
                found: self.convention.name(),
            })
        }
    }
}

/// Physics knobs of the ASE/RASE pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RasePhysicsParams<T: Real> {
    /// Optical depth αl.
    pub alpha_l: T,
    /// Recall efficiency of the rephased emission.
    pub eta: T,
    /// Excess noise variance per RASE quadrature, in measured units.
    pub excess: T,
}

impl<T: Real> RasePhysicsParams<T> {
    pub fn new(alpha_l: T, eta: T, excess: T) -> Result<Self> {
        let params = Self {
            alpha_l,
            eta,
            excess,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_l(self.alpha_l)?;
        if !(self.eta >= T::zero() && self.eta <= T::one()) {
            return Err(Error::Domain {
                what: "eta",
                value: self.eta.as_f64(),
                range: "[0, 1]",
            });
        }
        if !(self.excess >= T::zero()) || !self.excess.is_finite() {
            return Err(Error::Domain {
                what: "excess",
                value: self.excess.as_f64(),
                range: "[0, inf)",
            });
        }
        Ok(())
    }
}

fn check_alpha_l<T: Real>(alpha_l: T) -> Result<()> {
    if alpha_l >= T::zero() && alpha_l <= T::lit(MAX_ALPHA_L) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha_l",
            value: alpha_l.as_f64(),
            range: "[0, 10]",
        })
    }
}

fn check_weight<T: Real>(b: T) -> Result<()> {
    if b >= T::zero() && b <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "b",
            value: b.as_f64(),
            range: "[0, 1]",
        })
    }
}

/// Intensity gain `e^{αl}` of the inverted medium.
pub fn amplifier_gain<T: Real>(alpha_l: T) -> Result<T> {
    check_alpha_l(alpha_l)?;
    Ok(alpha_l.exp())
}

/// Joint ASE/RASE covariance in intrinsic units.
pub fn ase_rase_state<T: Real>(params: &RasePhysicsParams<T>) -> Result<TwoModeGaussianState<T>> {
    params.validate()?;
    let one = T::one();
    let two = T::lit(2.0);
    let g = amplifier_gain(params.alpha_l)?;
    let ase = two * g - one;
    let rase = one + two * params.eta * (g - one) + two * params.excess;
    let c = two * (params.eta * g * (g - one)).sqrt();
    let z = T::zero();
    let cov = [
        [ase, z, -c, z],
        [z, ase, z, c],
        [-c, z, rase, z],
        [z, c, z, rase],
    ];
    let state = TwoModeGaussianState::intrinsic(cov)?;
    let phys = check_physicality(&state)?;
    if !phys.physical {
        return Err(Error::InvalidState {
            min_eigenvalue: phys.min_eigenvalue.as_f64(),
        });
    }
    Ok(state)
}

/// Heterodyne outcome statistics: `cov ↦ (cov + I)/2`.
pub fn heterodyne_map<T: Real>(state: &TwoModeGaussianState<T>) -> Result<TwoModeGaussianState<T>> {
    state.require(Convention::Intrinsic)?;
    let half = T::lit(0.5);
    let mut cov = state.cov;
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let id = if i == j { T::one() } else { T::zero() };
            *v = (*v + id) * half;
        }
    }
    Ok(TwoModeGaussianState {
        cov,
        mean: state.mean.map(|m| m * half),
        convention: Convention::Measured,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physicality<T> {
    pub physical: bool,
    /// Smallest eigenvalue of `cov + iΩ`.
    pub min_eigenvalue: T,
}

/// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
///
/// `H = A + iB` is diagonalized through its real embedding `[[A, −B], [B, A]]`,
/// which carries every eigenvalue of `H` twice.
pub fn uncertainty_min_eigenvalue<T: Real>(cov: &Mat4<T>) -> T {
    let omega = symplectic_form::<T>();
    let mut embed = [[T::zero(); 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            embed[i][j] = cov[i][j];
            embed[i + 4][j + 4] = cov[i][j];
            embed[i][j + 4] = -omega[i][j];
            embed[i + 4][j] = omega[i][j];
        }
    }
    symmetric_eigen(&embed).0[0]
}

/// Block-diagonal symplectic form with blocks `[[0, 1], [−1, 0]]`.
pub fn symplectic_form<T: Real>() -> Mat4<T> {
    let (z, o) = (T::zero(), T::one());
    [[z, o, z, z], [-o, z, z, z], [z, z, z, o], [z, z, -o, z]]
}

/// Robertson–Schrödinger check `cov + iΩ ⪰ 0` for an intrinsic state.
pub fn check_physicality<T: Real>(state: &TwoModeGaussianState<T>) -> Result<Physicality<T>> {
    state.require(Convention::Intrinsic)?;
    let min_eigenvalue = uncertainty_min_eigenvalue(&state.cov);
    Ok(Physicality {
        physical: min_eigenvalue.as_f64() >= -T::PHYSICALITY_TOL,
        min_eigenvalue,
    })
}

/// `Var(û) + Var(v̂)` for an arbitrary quadrature covariance.
pub fn epr_variance_sum<T: Real>(cov: &Mat4<T>, b: T) -> T {
    let w1 = b.sqrt();
    let w2 = (T::one() - b).max(T::zero()).sqrt();
    let two = T::lit(2.0);
    let var_u = b * cov[0][0] + (T::one() - b) * cov[2][2] + two * w1 * w2 * cov[0][2];
    let var_v = b * cov[1][1] + (T::one() - b) * cov[3][3] - two * w1 * w2 * cov[1][3];
    var_u + var_v
}

/// Separability witness `S(b) = Var(û) + Var(v̂)` of a measured state.
pub fn inseparability_sum<T: Real>(state: &TwoModeGaussianState<T>, b: T) -> Result<T> {
    state.require(Convention::Measured)?;
    check_weight(b)?;
    Ok(epr_variance_sum(&state.cov, b))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dip<T> {
    pub b: T,
    pub s: T,
}

/// Minimum of `S(b)` over `b ∈ [0, 1]` for a measured state.
pub fn min_inseparability<T: Real>(state: &TwoModeGaussianState<T>) -> Result<Dip<T>> {
    state.require(Convention::Measured)?;
    Ok(minimize_epr_sum(&state.cov))
}

/// Dense grid scan followed by golden-section refinement; ties go to the
/// smaller `b`.
pub fn minimize_epr_sum<T: Real>(cov: &Mat4<T>) -> Dip<T> {
    let eval = |b: T| epr_variance_sum(cov, b);
    let s0 = eval(T::zero());
    let s1 = eval(T::one());
    if cov[0][2] == T::zero() && cov[1][3] == T::zero() {
        // Linear in b: the minimum sits on an endpoint.
        return if s0 <= s1 {
            Dip { b: T::zero(), s: s0 }
        } else {
            Dip { b: T::one(), s: s1 }
        };
    }

    let steps = (1.0 / MIN_GRID_STEP).round() as usize;
    let step = T::lit(MIN_GRID_STEP);
    let mut best = Dip { b: T::zero(), s: s0 };
    for k in 1..=steps {
        let b = if k == steps { T::one() } else { T::lit(k as f64) * step };
        let s = eval(b);
        if s < best.s {
            best = Dip { b, s };
        }
    }

    let lo = (best.b - step).max(T::zero());
    let hi = (best.b + step).min(T::one());
    let refined = golden_section(eval, lo, hi, T::lit(1e-9));
    let s_ref = eval(refined);
    if s_ref < best.s {
        best = Dip { b: refined, s: s_ref };
    }
    best
}

fn golden_section<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) * T::lit(0.5)
}

/// Ideal-theory dip (excess = 0) at a given optical depth and recall efficiency.
pub fn ideal_dip<T: Real>(alpha_l: T, eta: T) -> Result<Dip<T>> {
    let params = RasePhysicsParams::new(alpha_l, eta, T::zero())?;
    let state = heterodyne_map(&ase_rase_state(&params)?)?;
    min_inseparability(&state)
}

/// Recall efficiency for which the ideal (excess-free) model has its minimum
/// `min_b S(b)` equal to `target_dip`.
///
/// The dip deepens monotonically with `η`, so the root is found by bisection.
pub fn calibrate_eta<T: Real>(alpha_l: T, target_dip: T) -> Result<T> {
    if !(alpha_l > T::zero()) {
        return Err(Error::Domain {
            what: "alpha_l",
            value: alpha_l.as_f64(),
            range: "(0, 10]",
        });
    }
    check_alpha_l(alpha_l)?;
    let deepest = ideal_dip(alpha_l, T::one())?.s;
    let bound = T::lit(SEPARABLE_BOUND);
    if !(target_dip >= deepest && target_dip < bound) {
        return Err(Error::Calibration {
            alpha_l: alpha_l.as_f64(),
            target: target_dip.as_f64(),
            attainable_min: deepest.as_f64(),
            attainable_max: SEPARABLE_BOUND,
        });
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    let tol = T::lit(1e-14).max(T::epsilon());
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if ideal_dip(alpha_l, mid)?.s > target_dip {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Analytic `S(b)` sampled on a grid, for the ideal-theory curve.
pub fn theory_curve<T: Real>(state: &TwoModeGaussianState<T>, b_grid: &[T]) -> Result<Vec<T>> {
    b_grid.iter().map(|&b| inseparability_sum(state, b)).collect()
}
