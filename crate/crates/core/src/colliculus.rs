//! Inferior-colliculus model: gammatone subband envelopes analysed by a bank of
//! modulation resonance filters, and the derived ICER / RPHIC features.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::audio::FrameGrid;
use crate::error::{Result, VoxError};
use crate::modspec::{mel_edges, subband_envelopes};
use crate::spectral::{self, fft_in_place, fit_line, LOG_EPS};

pub const GAMMATONE_ORDER: i32 = 4;
pub const ICC_BANDS: usize = 20;
pub const RESONANCE_FILTERS: usize = 13;
pub const RESONANCE_LOW_HZ: f64 = 12.0;
pub const RESONANCE_HIGH_HZ: f64 = 107.0;

/// Bands `0..LOW_BANDS` form the ICER numerator, the rest the denominator.
const LOW_BANDS: usize = 12;

/// Equivalent rectangular bandwidth term `b` of a gammatone centred at `fc` Hz.
pub fn gammatone_bandwidth(fc: f64) -> f64 {
    24.7 * (4.37e-3 * fc + 1.0)
}

/// Envelope `(n/fs)^{o-1}·e^{-2πbn/fs}` of the gammatone impulse response.
pub fn gammatone_envelope(n: f64, fc: f64, rate: f64) -> f64 {
    let b = gammatone_bandwidth(fc);
    (n / rate).powi(GAMMATONE_ORDER - 1) * (-2.0 * PI * b * n / rate).exp()
}

/// Mel-spaced bank of truncated, L2-normalized gammatone impulse responses.
#[derive(Debug, Clone)]
pub struct GammatoneBank {
    pub impulses: Vec<Vec<f64>>,
    pub centers: Vec<f64>,
    pub rate: f64,
}

pub fn gammatone_bank(bands: usize, rate: f64, len: usize) -> Result<GammatoneBank> {
    if len == 0 {
        return Err(VoxError::InvalidParameter("gammatone length must be positive".into()));
    }
    if bands == 0 {
        return Err(VoxError::InvalidParameter("gammatone bank needs at least one band".into()));
    }
    let centers = mel_edges(bands, rate)[1..=bands].to_vec();
    let impulses = centers
        .iter()
        .map(|&fc| {
            let mut g: Vec<f64> = (0..len)
                .map(|n| {
                    let n = n as f64;
                    gammatone_envelope(n, fc, rate) * (2.0 * PI * fc * n / rate).cos()
                })
                .collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                g.iter_mut().for_each(|v| *v /= norm);
            }
            g
        })
        .collect();
    Ok(GammatoneBank { impulses, centers, rate })
}

impl GammatoneBank {
    pub fn bands(&self) -> usize {
        self.centers.len()
    }

    /// Squared magnitude responses `|G_p(f_k)|²` at the `n_fft/2 + 1` one-sided DFT bins.
    pub fn power_weights(&self, n_fft: usize) -> Vec<Vec<f64>> {
        let bins = n_fft / 2 + 1;
        self.impulses
            .iter()
            .map(|g| {
                (0..bins)
                    .map(|k| {
                        let w = -2.0 * PI * k as f64 / n_fft as f64;
                        let h: Complex64 = g
                            .iter()
                            .enumerate()
                            .map(|(n, &v)| Complex64::from_polar(v, w * n as f64))
                            .sum();
                        h.norm_sqr()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Second-order resonator `H(z) = (0.1z² − 0.09) / (z² − 1.8cos(2πfc/fs)z + 0.81)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceFilter {
    pub center: f64,
    pub rate: f64,
    a1: f64,
}

impl ResonanceFilter {
    const B0: f64 = 0.1;
    const B2: f64 = -0.09;
    const A2: f64 = 0.81;

    pub fn new(center: f64, rate: f64) -> Self {
        Self { center, rate, a1: -1.8 * (2.0 * PI * center / rate).cos() }
    }

    pub fn pole_radius(&self) -> f64 {
        Self::A2.sqrt()
    }

    pub fn response_at(&self, z: Complex64) -> Complex64 {
        (Self::B0 * z * z + Self::B2) / (z * z + self.a1 * z + Self::A2)
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = Self::B0 * v + Self::B2 * x2 - self.a1 * y1 - Self::A2 * y2;
                x2 = x1;
                x1 = v;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// Centers `12·(107/12)^{q/(Q-1)}` Hz, `q = 0..Q`.
pub fn resonance_centers(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![RESONANCE_LOW_HZ];
    }
    let ratio = RESONANCE_HIGH_HZ / RESONANCE_LOW_HZ;
    (0..count)
        .map(|q| match q {
            0 => RESONANCE_LOW_HZ,
            q if q == count - 1 => RESONANCE_HIGH_HZ,
            q => RESONANCE_LOW_HZ * ratio.powf(q as f64 / (count - 1) as f64),
        })
        .collect()
}

pub fn resonance_bank(count: usize, rate: f64) -> Vec<ResonanceFilter> {
    resonance_centers(count)
        .into_iter()
        .map(|fc| ResonanceFilter::new(fc, rate))
        .collect()
}

/// `Ξ[p, q]` and its log-sum profile `ξ[p]`.
#[derive(Debug, Clone)]
pub struct IccMatrix {
    pub xi_matrix: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IccFeatures {
    pub matrix: IccMatrix,
    /// Inferior Colliculus Energy Ratio.
    pub icer: Option<f64>,
    /// Relative Peak Height of Inferior Colliculus.
    pub rphic: Option<f64>,
}

/// ICER and RPHIC from a precomputed `ξ[p]` profile of 20 bands.
pub fn icc_scalars(xi: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
    if xi.len() != ICC_BANDS {
        return Err(VoxError::InvalidParameter(format!(
            "ICER and RPHIC are defined on {ICC_BANDS} bands, got {}",
            xi.len()
        )));
    }
    let low: f64 = xi[..LOW_BANDS].iter().sum();
    let high: f64 = xi[LOW_BANDS..].iter().sum();
    let icer = (high != 0.0).then(|| low / high).filter(|v| v.is_finite());
    let i = spectral::argmax(xi);
    let rphic = fit_line(xi, LOW_BANDS, ICC_BANDS - 1)
        .ok()
        .and_then(|r| spectral::relative_peak_height(xi[i], r.at(i as f64)));
    Ok((icer, rphic))
}

pub fn icc_features(grid: &FrameGrid, gb: &GammatoneBank) -> Result<IccFeatures> {
    if gb.bands() != ICC_BANDS {
        return Err(VoxError::InvalidParameter(format!(
            "colliculus features need {ICC_BANDS} gammatone bands, got {}",
            gb.bands()
        )));
    }
    if grid.len() < 2 {
        return Err(VoxError::InsufficientData("colliculus features need at least 2 frames".into()));
    }
    let weights = gb.power_weights(grid.frame_len);
    let envelopes = subband_envelopes(grid, &weights);
    let resonators = resonance_bank(RESONANCE_FILTERS, grid.frame_rate());

    let xi_matrix: Vec<Vec<f64>> = envelopes
        .iter()
        .map(|row| {
            let mut t: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_in_place(&mut t);
            let magnitude: Vec<f64> = t.iter().map(|c| c.norm()).collect();
            resonators
                .iter()
                .map(|h| {
                    let y = h.filter(&magnitude);
                    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
                })
                .collect()
        })
        .collect();
    let xi: Vec<f64> = xi_matrix
        .iter()
        .map(|row| row.iter().map(|&v| (v + LOG_EPS).ln()).sum())
        .collect();
    let (icer, rphic) = icc_scalars(&xi)?;
    Ok(IccFeatures { matrix: IccMatrix { xi_matrix, xi }, icer, rphic })
}
