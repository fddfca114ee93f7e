//! Empirical mode decomposition and the IMF-derived voice measures.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VoxError};
use crate::spectral::{
    self, cepstral_peak_prominence, fft_in_place, ifft_in_place, real_cepstrum, renyi2_entropy, seo,
    shannon_entropy, sign_changes, tkeo, zcr, LOG_EPS,
};

pub const SIFT_SD: f64 = 0.2;
pub const MAX_SIFTS: usize = 10;
pub const MAX_IMFS: usize = 12;
pub const CPP_F_MAX: f64 = 350.0;
pub const LPC_ORDER: usize = 13;
pub const GNE_BANDWIDTH: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

impl ImfSet {
    pub fn count(&self) -> usize {
        self.imfs.len()
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            out.iter_mut().zip(imf).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Strict interior extrema; a plateau counts once at its first sample.
fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] == x[i - 1] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        if x[i] > x[i - 1] && x[i] > x[j + 1] {
            maxima.push(i);
        } else if x[i] < x[i - 1] && x[i] < x[j + 1] {
            minima.push(i);
        }
        i = j + 1;
    }
    (maxima, minima)
}

pub fn extrema_count(x: &[f64]) -> usize {
    let (a, b) = extrema(x);
    a.len() + b.len()
}

/// Natural cubic spline through `(t, y)` sampled at `0..len`; `t` strictly increasing.
fn natural_spline(t: &[f64], y: &[f64], len: usize) -> Vec<f64> {
    let k = t.len();
    if k == 1 {
        return vec![y[0]; len];
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    // Second derivatives by the Thomas algorithm, M₀ = M_{k−1} = 0.
    let mut m = vec![0.0; k];
    if k > 2 {
        let size = k - 2;
        let mut diag = vec![0.0; size];
        let mut rhs = vec![0.0; size];
        for i in 0..size {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
        }
        for i in 1..size {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[size] = rhs[size - 1] / diag[size - 1];
        for i in (0..size - 1).rev() {
            m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
        }
    }
    let mut out = Vec::with_capacity(len);
    let mut seg = 0;
    for n in 0..len {
        let x = n as f64;
        while seg + 2 < k && x > t[seg + 1] {
            seg += 1;
        }
        let (a, b) = (t[seg + 1] - x, x - t[seg]);
        let hs = h[seg];
        out.push(
            (m[seg] * a * a * a + m[seg + 1] * b * b * b) / (6.0 * hs)
                + (y[seg] / hs - m[seg] * hs / 6.0) * a
                + (y[seg + 1] / hs - m[seg + 1] * hs / 6.0) * b,
        );
    }
    out
}

/// Envelope through the given extrema with two extrema mirrored about each endpoint.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let last = (x.len() - 1) as f64;
    let mirrored = idx.len().min(2);
    let mut t = Vec::with_capacity(idx.len() + 2 * mirrored);
    let mut y = Vec::with_capacity(t.capacity());
    for &i in idx[..mirrored].iter().rev() {
        t.push(-(i as f64));
        y.push(x[i]);
    }
    for &i in idx {
        t.push(i as f64);
        y.push(x[i]);
    }
    for &i in idx[idx.len() - mirrored..].iter().rev() {
        t.push(2.0 * last - i as f64);
        y.push(x[i]);
    }
    natural_spline(&t, &y, x.len())
}

/// Extracts one IMF candidate from `x`.
fn sift(x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for _ in 0..MAX_SIFTS {
        let (maxima, minima) = extrema(&h);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        let upper = envelope(&h, &maxima);
        let lower = envelope(&h, &minima);
        let next: Vec<f64> = h.iter().zip(upper.iter().zip(&lower)).map(|(v, (u, l))| v - 0.5 * (u + l)).collect();
        let energy: f64 = h.iter().map(|v| v * v).sum();
        let change: f64 = h.iter().zip(&next).map(|(a, b)| (a - b).powi(2)).sum();
        h = next;
        if energy == 0.0 || change / energy < SIFT_SD {
            break;
        }
    }
    h
}

pub fn emd(sig: &[f64]) -> Result<ImfSet> {
    if sig.len() < 16 {
        return Err(VoxError::InsufficientData(format!("EMD needs at least 16 samples, got {}", sig.len())));
    }
    let mut residual = sig.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < MAX_IMFS && extrema_count(&residual) >= 3 {
        let imf = sift(&residual);
        residual.iter_mut().zip(&imf).for_each(|(r, v)| *r -= v);
        imfs.push(imf);
    }
    Ok(ImfSet { imfs, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImfParam {
    Tkeo,
    Seo,
    She,
    Re,
    Zcr,
}

impl ImfParam {
    pub const SNR: [ImfParam; 5] = [ImfParam::Tkeo, ImfParam::Seo, ImfParam::She, ImfParam::Re, ImfParam::Zcr];
    pub const NSR: [ImfParam; 4] = [ImfParam::Tkeo, ImfParam::Seo, ImfParam::She, ImfParam::Re];

    pub fn name(self) -> &'static str {
        match self {
            ImfParam::Tkeo => "tkeo",
            ImfParam::Seo => "seo",
            ImfParam::She => "she",
            ImfParam::Re => "re",
            ImfParam::Zcr => "zcr",
        }
    }
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

pub fn imf_parameter(f: &[f64], param: ImfParam) -> Option<f64> {
    match param {
        ImfParam::Tkeo => mean(&tkeo(f)),
        ImfParam::Seo => mean(&seo(f)),
        ImfParam::She => (!f.is_empty()).then(|| shannon_entropy(f)),
        ImfParam::Re => (!f.is_empty()).then(|| renyi2_entropy(f)),
        ImfParam::Zcr => (!f.is_empty()).then(|| zcr(f)),
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den).filter(|v| v.is_finite())
}

fn split_ratio(mus: &[f64], split: usize) -> Option<f64> {
    let (a, b) = mus.split_at(split);
    ratio(a.iter().sum(), b.iter().sum())
}

/// `Σ_{i=4..I} μᵢ / Σ_{i=1..3} μᵢ`.
pub fn imf_snr(set: &ImfSet, param: ImfParam) -> Option<f64> {
    if set.count() < 4 {
        return None;
    }
    let mus = set.imfs.iter().map(|f| imf_parameter(f, param)).collect::<Option<Vec<_>>>()?;
    let (noise, signal) = mus.split_at(3);
    ratio(signal.iter().sum(), noise.iter().sum())
}

/// `Σ_{i=1..2} μ̂ᵢ / Σ_{i=3..I} μ̂ᵢ` on `ln(|fᵢ| + ε)`.
pub fn imf_nsr(set: &ImfSet, param: ImfParam) -> Option<f64> {
    if set.count() < 3 {
        return None;
    }
    let mus = set
        .imfs
        .iter()
        .map(|f| {
            let logged: Vec<f64> = f.iter().map(|v| (v.abs() + LOG_EPS).ln()).collect();
            imf_parameter(&logged, param)
        })
        .collect::<Option<Vec<_>>>()?;
    split_ratio(&mus, 2)
}

/// Petrosian-form fractal dimension of the first IMF.
pub fn imf_fd(set: &ImfSet) -> Option<f64> {
    let f1 = set.imfs.first()?;
    let n = f1.len() as f64;
    let nch = sign_changes(f1);
    ratio(n.log10(), n.log10() + (n / (n + 0.4 * nch)).log10())
}

pub fn imf_cpp(set: &ImfSet, rate: f64) -> Option<f64> {
    let f1 = set.imfs.first()?;
    let c = real_cepstrum(f1).ok()?;
    cepstral_peak_prominence(&c, rate, CPP_F_MAX)
}

/// Autocorrelation-method LPC coefficients `a₁..a_p` of `A(z) = 1 + Σ aₖ z⁻ᵏ`.
pub fn lpc(x: &[f64], order: usize) -> Option<Vec<f64>> {
    let r: Vec<f64> =
        (0..=order).map(|k| x.iter().zip(x.iter().skip(k)).map(|(a, b)| a * b).sum()).collect();
    if r[0] <= 0.0 {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    Some(a[1..].to_vec())
}

/// Prediction residual `e[n] = x[n] + Σ aₖ x[n−k]` with zero initial state.
pub fn inverse_filter(x: &[f64], a: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| x[n] + a.iter().enumerate().take(n).map(|(k, ak)| ak * x[n - k - 1]).sum::<f64>())
        .collect()
}

/// Hilbert envelopes of Hann-shaped bands of width `GNE_BANDWIDTH` centred at 500, 1500, … Hz.
pub fn band_envelopes(x: &[f64], rate: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let spectrum = spectral::dft(x);
    let half_bw = GNE_BANDWIDTH / 2.0;
    let mut out = Vec::new();
    let mut centre = half_bw;
    while centre <= rate / 2.0 - half_bw + 1e-9 {
        let mut band = vec![Complex64::new(0.0, 0.0); n];
        for (k, slot) in band.iter_mut().enumerate().take(n / 2 + 1) {
            let f = k as f64 * rate / n as f64;
            let off = f - centre;
            if off.abs() <= half_bw {
                let w = 0.5 * (1.0 + (std::f64::consts::PI * off / half_bw).cos());
                *slot = spectrum[k] * (2.0 * w);
            }
        }
        ifft_in_place(&mut band);
        out.push(band.iter().map(|c| c.norm()).collect());
        centre += GNE_BANDWIDTH;
    }
    out
}

/// Maximum over all lags of the mean-removed normalized cross-correlation.
pub fn max_normalized_xcorr(a: &[f64], b: &[f64]) -> Option<f64> {
    let center = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| v - m).collect::<Vec<f64>>()
    };
    let (a, b) = (center(a), center(b));
    let norm = (a.iter().map(|v| v * v).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let size = (a.len() + b.len()).next_power_of_two();
    let pad = |x: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        buf.iter_mut().zip(x).for_each(|(s, v)| *s = Complex64::new(*v, 0.0));
        fft_in_place(&mut buf);
        buf
    };
    let (fa, fb) = (pad(&a), pad(&b));
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    ifft_in_place(&mut prod);
    let best = prod.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    Some((best / norm).clamp(0.0, 1.0))
}

/// IMF-GNE of one frame; `None` for silence or fewer than two bands.
pub fn imf_gne(frame: &[f64], rate: f64) -> Option<f64> {
    let set = emd(frame).ok()?;
    let f1 = set.imfs.first()?;
    let a = lpc(f1, LPC_ORDER)?;
    let residual = inverse_filter(f1, &a);
    let envs = band_envelopes(&residual, rate);
    if envs.len() < 2 {
        return None;
    }
    let mut best: Option<f64> = None;
    for i in 0..envs.len() {
        for j in i + 1..envs.len() {
            if let Some(v) = max_normalized_xcorr(&envs[i], &envs[j]) {
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
    }
    best
}
