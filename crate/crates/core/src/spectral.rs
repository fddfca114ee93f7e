//! Shared transforms and scalar primitives used by every feature family.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, VoxError};

/// Guard added inside logarithms of magnitudes.
pub const LOG_EPS: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, `e^{-j2πkn/N}` kernel, no scaling.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse DFT including the `1/N` factor.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Transforms consecutive length-`len` chunks of `buf` with one plan and one scratch buffer.
/// The inverse includes the `1/len` factor.
pub fn fft_batch_in_place(buf: &mut [Complex64], len: usize, inverse: bool) {
    if buf.is_empty() || len == 0 {
        return;
    }
    assert_eq!(buf.len() % len, 0, "batch length must be a multiple of the transform size");
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    });
    fft.process(buf);
    if inverse {
        let scale = 1.0 / len as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}

pub fn idft(spec: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spec.to_vec();
    ifft_in_place(&mut buf);
    buf
}

pub fn power_spectrum(x: &[f64]) -> Vec<f64> {
    dft(x).iter().map(|c| c.norm_sqr()).collect()
}

/// Removes 2π jumps from a wrapped phase sequence.
pub fn unwrap_phase(phase: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let delta = raw - phase[i - 1];
        if delta > PI {
            offset -= 2.0 * PI * ((delta + PI) / (2.0 * PI)).floor();
        } else if delta < -PI {
            offset += 2.0 * PI * ((-delta + PI) / (2.0 * PI)).floor();
        }
        phase[i] += offset;
    }
}

fn check_cepstrum_input(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(VoxError::InsufficientData("cepstrum needs at least 2 samples".into()));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(VoxError::DegenerateInput("cepstrum of an all-zero sequence".into()));
    }
    Ok(())
}

/// `IDFT(ln(|DFT(x)| + ε))`, real part.
pub fn real_cepstrum(x: &[f64]) -> Result<Vec<f64>> {
    check_cepstrum_input(x)?;
    let mut spec = dft(x);
    spec.iter_mut().for_each(|c| *c = Complex64::new((c.norm() + LOG_EPS).ln(), 0.0));
    ifft_in_place(&mut spec);
    Ok(spec.into_iter().map(|c| c.re).collect())
}

/// Complex cepstrum: `IDFT(ln(|X| + ε) + j·unwrap(arg X))`.
pub fn complex_cepstrum(x: &[f64]) -> Result<Vec<Complex64>> {
    check_cepstrum_input(x)?;
    let mut spec = dft(x);
    spec.iter_mut().for_each(|c| *c = complex_log(*c));
    let mut phase: Vec<f64> = spec.iter().map(|c| c.im).collect();
    unwrap_phase(&mut phase);
    spec.iter_mut().zip(&phase).for_each(|(c, &p)| c.im = p);
    ifft_in_place(&mut spec);
    Ok(spec)
}

/// Guarded principal-branch logarithm.
pub fn complex_log(c: Complex64) -> Complex64 {
    Complex64::new((c.norm() + LOG_EPS).ln(), c.arg())
}

/// Ordinary least-squares line over integer abscissae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionLine {
    pub slope: f64,
    pub offset: f64,
    /// Residual sum of squares.
    pub rss_error: f64,
}

impl RegressionLine {
    pub fn at(&self, x: f64) -> f64 {
        self.offset + self.slope * x
    }
}

/// Fits `y[x]` for `x = x_start..=x_end` using the indices themselves as abscissae.
pub fn fit_line(y: &[f64], x_start: usize, x_end: usize) -> Result<RegressionLine> {
    if x_end >= y.len() || x_end <= x_start {
        return Err(VoxError::InsufficientData(format!(
            "regression over [{x_start}, {x_end}] needs at least 2 points within {} samples",
            y.len()
        )));
    }
    let pts = &y[x_start..=x_end];
    let n = pts.len() as f64;
    let mean_x = (x_start + x_end) as f64 / 2.0;
    let mean_y = pts.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &v) in pts.iter().enumerate() {
        let dx = (x_start + k) as f64 - mean_x;
        sxy += dx * (v - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let offset = mean_y - slope * mean_x;
    let rss_error = pts
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let e = v - (offset + slope * (x_start + k) as f64);
            e * e
        })
        .sum();
    Ok(RegressionLine { slope, offset, rss_error })
}

/// Relative height of the maximum of `c` above its regression line, both taken over
/// `n = round(rate / f_max) ..= len - 1`. `None` when undefined.
pub fn cepstral_peak_prominence(c: &[f64], rate: f64, f_max: f64) -> Option<f64> {
    let start = (rate / f_max).round() as usize;
    if c.len() < start + 2 {
        return None;
    }
    let end = c.len() - 1;
    let line = fit_line(c, start, end).ok()?;
    let i = argmax(&c[start..=end]) + start;
    relative_peak_height(c[i], line.at(i as f64))
}

/// `(peak - line) / peak`, missing when the peak is zero or the result is not finite.
pub(crate) fn relative_peak_height(peak: f64, line: f64) -> Option<f64> {
    if peak == 0.0 {
        return None;
    }
    let v = (peak - line) / peak;
    v.is_finite().then_some(v)
}

/// First index of the maximum value.
pub(crate) fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Teager-Kaiser energy operator over interior samples: `x[n]² − x[n−1]x[n+1]`, `n = 1..N−2`.
pub fn tkeo(x: &[f64]) -> Vec<f64> {
    x.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]).collect()
}

/// Squared energy operator.
pub fn seo(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

pub(crate) fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sum of `|sgn x[n] − sgn x[n−1]|`.
pub fn sign_changes(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (sgn(w[1]) - sgn(w[0])).abs()).sum()
}

/// Zero-crossing rate `(1/N)·Σ|sgn x[n] − sgn x[n−1]|`.
pub fn zcr(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    sign_changes(x) / x.len() as f64
}

/// Probabilities of a `ceil(sqrt(N))`-bin equal-width histogram over `[min, max]`.
///
/// Constant input yields a single bin of probability one.
pub fn histogram_probabilities(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = min_max(x);
    if hi <= lo {
        return vec![1.0];
    }
    let bins = (x.len() as f64).sqrt().ceil() as usize;
    let mut counts = vec![0usize; bins];
    for &v in x {
        counts[histogram_bin(v, lo, hi, bins)] += 1;
    }
    let n = x.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

pub(crate) fn histogram_bin(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    (((v - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1)
}

pub(crate) fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Shannon entropy in bits.
pub fn shannon_entropy(x: &[f64]) -> f64 {
    let h: f64 = histogram_probabilities(x)
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Second-order Rényi entropy in bits.
pub fn renyi2_entropy(x: &[f64]) -> f64 {
    let s: f64 = histogram_probabilities(x).into_iter().map(|p| p * p).sum();
    if s <= 0.0 {
        return 0.0;
    }
    (-s.log2()).max(0.0)
}
