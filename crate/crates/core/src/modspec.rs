//! Modulation spectrogram of mel subband envelopes and the MSER / MFP / RPHM features.

use rustfft::num_complex::Complex64;

use crate::audio::FrameGrid;
use crate::error::{Result, VoxError};
use crate::spectral::{self, fft_in_place, fit_line, LOG_EPS};

/// Default number of mel subbands.
pub const DEFAULT_BANDS: usize = 20;

/// Modulation frequency separating "low" from "high" modulation energy.
pub const MSER_SPLIT_HZ: f64 = 5.0;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Center frequencies of `bands` filters equidistant on the mel scale over `[0, rate/2]`.
///
/// Returns `bands + 2` edge frequencies; entries `1..=bands` are the centers.
pub fn mel_edges(bands: usize, rate: f64) -> Vec<f64> {
    let top = hz_to_mel(rate / 2.0);
    (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect()
}

/// Triangular filters equidistant on the mel scale.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `bands × (n_fft/2 + 1)` weights.
    pub triangles: Vec<Vec<f64>>,
    pub centers: Vec<f64>,
    edges: Vec<f64>,
    pub n_fft: usize,
    pub rate: f64,
}

impl MelFilterbank {
    pub fn new(bands: usize, n_fft: usize, rate: f64) -> Result<Self> {
        if bands < 2 {
            return Err(VoxError::InvalidParameter(format!("need at least 2 mel bands, got {bands}")));
        }
        if n_fft < 2 {
            return Err(VoxError::InvalidParameter("transform size must be at least 2".into()));
        }
        let edges = mel_edges(bands, rate);
        let centers = edges[1..=bands].to_vec();
        let mut fb = Self { triangles: Vec::new(), centers, edges, n_fft, rate };
        let bins = n_fft / 2 + 1;
        fb.triangles = (0..bands)
            .map(|p| (0..bins).map(|k| fb.response(p, k as f64 * rate / n_fft as f64)).collect())
            .collect();
        Ok(fb)
    }

    pub fn bands(&self) -> usize {
        self.centers.len()
    }

    /// Continuous triangular response of filter `p` at frequency `f` Hz.
    pub fn response(&self, p: usize, f: f64) -> f64 {
        let (lo, mid, hi) = (self.edges[p], self.edges[p + 1], self.edges[p + 2]);
        if f <= lo || f >= hi {
            0.0
        } else if f <= mid {
            (f - lo) / (mid - lo)
        } else {
            (hi - f) / (hi - mid)
        }
    }

    /// Applies the bank to a one-sided power spectrum of length `n_fft/2 + 1` or more.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn mel_filterbank(bands: usize, n_fft: usize, rate: f64) -> Result<MelFilterbank> {
    MelFilterbank::new(bands, n_fft, rate)
}

/// Normalized modulation spectrum `Ψ_n[p, l]` and its subband sum `ψ[l]`.
#[derive(Debug, Clone)]
pub struct ModulationSpectrum {
    pub psi_n: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
    /// Modulation frequency width of one bin in Hz.
    pub bin_hz: f64,
}

impl ModulationSpectrum {
    pub fn mod_freq(&self, l: usize) -> f64 {
        l as f64 * self.bin_hz
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// Per-frame subband energies `X[p, m]` as a `bands × M` matrix.
pub(crate) fn subband_envelopes(grid: &FrameGrid, weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let per_frame: Vec<Vec<f64>> = grid
        .frames
        .iter()
        .map(|f| {
            let power = spectral::power_spectrum(f);
            weights
                .iter()
                .map(|w| w.iter().zip(&power).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    (0..weights.len())
        .map(|p| per_frame.iter().map(|row| row[p]).collect())
        .collect()
}

pub fn modulation_spectrum(grid: &FrameGrid, fb: &MelFilterbank) -> Result<ModulationSpectrum> {
    let m = grid.len();
    if m < 4 {
        return Err(VoxError::InsufficientData(format!(
            "modulation spectrum needs at least 4 frames, got {m}"
        )));
    }
    if fb.n_fft != grid.frame_len {
        return Err(VoxError::InvalidParameter(format!(
            "filterbank built for {} points but frames have {}",
            fb.n_fft, grid.frame_len
        )));
    }
    let envelopes = subband_envelopes(grid, &fb.triangles);
    let psi_n: Vec<Vec<f64>> = envelopes
        .iter()
        .map(|row| {
            let logs: Vec<f64> = row.iter().map(|&v| (v + LOG_EPS).ln()).collect();
            let mean = logs.iter().sum::<f64>() / m as f64;
            let mut buf: Vec<Complex64> =
                logs.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
            fft_in_place(&mut buf);
            let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
            let total: f64 = power.iter().sum();
            if total > 0.0 {
                power.iter().map(|v| v / total).collect()
            } else {
                vec![0.0; m]
            }
        })
        .collect();
    let psi = (0..m).map(|l| psi_n.iter().map(|row| row[l]).sum()).collect();
    Ok(ModulationSpectrum { psi_n, psi, bin_hz: grid.frame_rate() / m as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationFeatures {
    /// Modulation Spectra Energy Ratio.
    pub mser: Option<f64>,
    /// Modulation Frequency of Peak, Hz.
    pub mfp: Option<f64>,
    /// Relative Peak Height of Modulation spectra.
    pub rphm: Option<f64>,
}

/// Index of the 5 Hz modulation bin.
pub fn split_bin(ms: &ModulationSpectrum) -> usize {
    (MSER_SPLIT_HZ / ms.bin_hz).round() as usize
}

/// Peak of `ψ` over `l = 1..=M/2`; the DC bin and the mirrored half are excluded.
pub fn peak_bin(ms: &ModulationSpectrum) -> usize {
    let upper = ms.len() / 2;
    1 + spectral::argmax(&ms.psi[1..=upper])
}

pub fn modulation_features(ms: &ModulationSpectrum) -> Result<ModulationFeatures> {
    let m = ms.len();
    if m < 8 {
        return Err(VoxError::InsufficientData(format!(
            "modulation features need at least 8 modulation bins, got {m}"
        )));
    }
    if ((m - 1) as f64) * ms.bin_hz < MSER_SPLIT_HZ {
        return Err(VoxError::InsufficientData(format!(
            "modulation axis only reaches {:.2} Hz",
            (m - 1) as f64 * ms.bin_hz
        )));
    }
    let l5 = split_bin(ms).min(m - 2);
    let low: f64 = ms.psi[..=l5].iter().sum();
    let high: f64 = ms.psi[l5 + 1..].iter().sum();
    let mser = (high > 0.0).then(|| low / high);

    let i = peak_bin(ms);
    let mfp = Some(ms.mod_freq(i));
    let rphm = fit_line(&ms.psi, l5, m - 1)
        .ok()
        .and_then(|r| spectral::relative_peak_height(ms.psi[i], r.at(i as f64)));
    Ok(ModulationFeatures { mser, mfp, rphm })
}
