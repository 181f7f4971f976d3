//! Fourier spectra of OTOC series, a spectral-support metric, and the
//! pulsed-field-gradient ratio calculator.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::otoc::OtocSeries;

/// One-sided magnitude spectrum on a uniform frequency grid in units of J.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub mags: Vec<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hann,
}

/// Transform options; the default applies no window and no padding.
#[derive(Copy, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SpectrumOptions {
    #[serde(default)]
    pub window: Option<WindowKind>,
    /// Pad the mean-subtracted series with zeros up to this length.
    #[serde(default)]
    pub zero_pad_to: Option<usize>,
}

/// One-sided discrete Fourier magnitudes of the mean-subtracted series,
/// scaled by 1/N so an on-bin unit cosine lands at magnitude 0.5. The
/// frequency axis is f_k = k / (N · ΔJt).
pub fn fourier_spectrum(series: &OtocSeries) -> Result<Spectrum> {
    fourier_spectrum_with(series, &SpectrumOptions::default())
}

pub fn fourier_spectrum_with(series: &OtocSeries, opts: &SpectrumOptions) -> Result<Spectrum> {
    let n = series.values.len();
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs at least 16 samples, got {n}"
        )));
    }
    let dt = series.jt[1] - series.jt[0];
    if dt <= 0.0 {
        return Err(Error::NonUniformGrid);
    }
    let scale = series.jt.last().unwrap().abs().max(1.0);
    for (k, &jt) in series.jt.iter().enumerate() {
        if (jt - k as f64 * dt).abs() > 1e-9 * scale {
            return Err(Error::NonUniformGrid);
        }
    }

    let mean = series.values.iter().sum::<f64>() / n as f64;
    let mut samples: Vec<f64> = series.values.iter().map(|v| v - mean).collect();

    if let Some(WindowKind::Hann) = opts.window {
        for (k, s) in samples.iter_mut().enumerate() {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos());
            *s *= w;
        }
    }

    let padded = opts.zero_pad_to.unwrap_or(n);
    if padded < n {
        return Err(Error::InvalidArgument(format!(
            "zero_pad_to {padded} is shorter than the series length {n}"
        )));
    }
    samples.resize(padded, 0.0);

    let bins = padded / 2 + 1;
    let mut freqs = Vec::with_capacity(bins);
    let mut mags = Vec::with_capacity(bins);
    for k in 0..bins {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &x) in samples.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / padded as f64;
            acc += C64::new(angle.cos(), angle.sin()) * x;
        }
        freqs.push(k as f64 / (padded as f64 * dt));
        mags.push(acc.norm() / padded as f64);
    }
    Ok(Spectrum { freqs, mags })
}

/// Number of bins whose magnitude exceeds `threshold_fraction` of the peak.
pub fn spectral_support(spec: &Spectrum, threshold_fraction: f64) -> Result<usize> {
    if spec.mags.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if !(0.0..1.0).contains(&threshold_fraction) || threshold_fraction == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let max = spec.mags.iter().cloned().fold(0.0f64, f64::max);
    Ok(spec.mags.iter().filter(|&&m| m > threshold_fraction * max).count())
}

/// Gyromagnetic ratio of ¹H in rad s⁻¹ T⁻¹.
pub const GAMMA_H_RAD_PER_S_T: f64 = 2.6752218744e8;
/// Gyromagnetic ratio of ³¹P in rad s⁻¹ T⁻¹.
pub const GAMMA_P_RAD_PER_S_T: f64 = 1.08394e8;

/// Pulsed-field-gradient ratio G1/G2 = -(γ_P + (q-1)·γ_H)/γ_P selecting the
/// coherence order q.
pub fn gradient_ratio(q: i64, gamma_p: f64, gamma_h: f64) -> Result<f64> {
    if gamma_p == 0.0 {
        return Err(Error::ZeroGyromagneticRatio);
    }
    Ok(-(gamma_p + (q - 1) as f64 * gamma_h) / gamma_p)
}
