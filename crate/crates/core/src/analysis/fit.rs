use crate::error::{Error, Result};

use super::{CrossCorrelation, Spectrum};

/// `y(t) = floor + A·e^{−t/τ}` fitted in the log domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub tau: f64,
    pub tau_se: f64,
    /// Floor-subtracted amplitude at t = 0.
    pub amplitude: f64,
    pub floor: f64,
    pub n_points: usize,
}

/// Weighted least-squares line through `ln(y − floor)`.
///
/// Points at or below the floor are dropped. Weights are `(y − floor)²`, the
/// inverse variance of the log under additive noise of constant size.
pub fn fit_exponential_decay(points: &[(f64, f64)], floor: f64) -> Result<DecayFit> {
    let used: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(t, y)| t.is_finite() && y.is_finite() && *y > floor)
        .map(|&(t, y)| (t, (y - floor).ln(), (y - floor).powi(2)))
        .collect();
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "decay fit needs at least 3 points above the floor, found {}",
            used.len()
        )));
    }
    let w_sum: f64 = used.iter().map(|p| p.2).sum();
    let t_mean = used.iter().map(|p| p.2 * p.0).sum::<f64>() / w_sum;
    let l_mean = used.iter().map(|p| p.2 * p.1).sum::<f64>() / w_sum;
    let stt: f64 = used.iter().map(|p| p.2 * (p.0 - t_mean).powi(2)).sum();
    let stl: f64 = used.iter().map(|p| p.2 * (p.0 - t_mean) * (p.1 - l_mean)).sum();
    if !(stt > 0.0) {
        return Err(Error::Fit("decay fit points share a single time".into()));
    }
    let slope = stl / stt;
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("trace does not decay (log slope {slope:e} /s)")));
    }
    let intercept = l_mean - slope * t_mean;
    let dof = (used.len() - 2) as f64;
    let chi2: f64 = used
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    // Weights are only relative, so the slope variance is scaled by the residuals.
    let slope_se = (chi2 / dof / stt).sqrt();
    let tau = -1.0 / slope;
    Ok(DecayFit {
        tau,
        tau_se: tau * tau * slope_se,
        amplitude: intercept.exp(),
        floor,
        n_points: used.len(),
    })
}

/// Full width at half maximum of `y − floor` around its highest point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfMax {
    pub width: f64,
    pub left: f64,
    pub right: f64,
    pub peak_index: usize,
    pub peak_height: f64,
}

/// Half-max crossings by linear interpolation, walking outward from the peak.
pub fn half_max_width(x: &[f64], y: &[f64], floor: f64) -> Result<HalfMax> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit("half-max width needs at least 3 matching points".into()));
    }
    let peak_index = (0..y.len())
        .filter(|&i| y[i].is_finite())
        .max_by(|&a, &b| y[a].total_cmp(&y[b]))
        .ok_or_else(|| Error::Fit("no finite values".into()))?;
    let height = y[peak_index] - floor;
    if !(height > 0.0) {
        return Err(Error::Fit("no peak above the floor".into()));
    }
    let half = floor + 0.5 * height;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=peak_index)
        .rev()
        .find(|&i| y[i - 1] <= half)
        .map(|i| cross(i - 1, i))
        .ok_or_else(|| Error::Fit("peak has no left half-max crossing".into()))?;
    let right = (peak_index..y.len() - 1)
        .find(|&i| y[i + 1] <= half)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::Fit("peak has no right half-max crossing".into()))?;
    Ok(HalfMax {
        width: right - left,
        left,
        right,
        peak_index,
        peak_height: height,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralWidth {
    pub fwhm: f64,
    pub fwhm_se: f64,
    pub peak_frequency: f64,
    /// Peak power above the floor.
    pub peak_height: f64,
    pub floor: f64,
}

/// Spectral FWHM above `floor` by half-max interpolation.
///
/// The uncertainty propagates the bin standard errors through the local
/// slope at each crossing.
pub fn fit_spectral_fwhm(spectrum: &Spectrum, floor: f64) -> Result<SpectralWidth> {
    let f = &spectrum.frequencies;
    let p = &spectrum.power;
    let hm = half_max_width(f, p, floor)?;
    let se_peak = spectrum.power_se[hm.peak_index];
    if se_peak.is_finite() && hm.peak_height < 5.0 * se_peak {
        return Err(Error::Fit(format!(
            "spectral peak {:.3e} is within 5 standard errors of the floor",
            hm.peak_height
        )));
    }
    let df = f[1] - f[0];
    let edge_se = |x: f64| {
        let i = (((x - f[0]) / df).floor().max(0.0) as usize).min(f.len() - 2);
        let slope = (p[i + 1] - p[i]).abs() / df;
        let se = 0.5 * (spectrum.power_se[i] + spectrum.power_se[i + 1]);
        if slope > 0.0 {
            se / slope
        } else {
            f64::INFINITY
        }
    };
    let (l, r) = (edge_se(hm.left), edge_se(hm.right));
    Ok(SpectralWidth {
        fwhm: hm.width,
        fwhm_se: (l * l + r * r).sqrt(),
        peak_frequency: f[hm.peak_index],
        peak_height: hm.peak_height,
        floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationWidth {
    /// FWHM of the bias-corrected intensity `|C|² − SE²`, seconds.
    pub fwhm: f64,
    /// FWHM of `|C|` itself, seconds.
    pub fwhm_magnitude: f64,
    pub peak_tau: f64,
    pub peak_magnitude: f64,
}

/// Width of the correlation peak.
pub fn correlation_width(xc: &CrossCorrelation) -> Result<CorrelationWidth> {
    let intensity = xc.intensity();
    let hm = half_max_width(&xc.tau, &intensity, 0.0)?;
    let mag = xc.magnitude();
    let se = xc.se[hm.peak_index];
    if mag[hm.peak_index] < 5.0 * se {
        return Err(Error::Fit(format!(
            "correlation peak {:.3e} is within 5 standard errors of zero",
            mag[hm.peak_index]
        )));
    }
    let hm_mag = half_max_width(&xc.tau, &mag, 0.0)?;
    Ok(CorrelationWidth {
        fwhm: hm.width,
        fwhm_magnitude: hm_mag.width,
        peak_tau: xc.tau[hm.peak_index],
        peak_magnitude: mag[hm.peak_index],
    })
}
