//! Audio ingestion: WAV decoding, sample-rate conversion and framing.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VoxError};

/// Pipeline sampling rate in Hz.
pub const PIPELINE_RATE: f64 = 16_000.0;

const KAISER_BETA: f64 = 8.0;
const TAPS_PER_PHASE: usize = 32;

/// Mono discrete-time waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(VoxError::InsufficientData("signal has no samples".into()));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(VoxError::InvalidParameter(format!("sampling rate {rate} must be positive")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(VoxError::DegenerateInput("signal contains non-finite samples".into()));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hamming,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hamming if len == 1 => vec![1.0],
            Window::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Windowed segmentation of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub rate: f64,
    pub frames: Vec<Vec<f64>>,
}

impl FrameGrid {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames per second along the time axis.
    pub fn frame_rate(&self) -> f64 {
        self.rate / self.hop as f64
    }
}

/// Decodes a PCM (8/16/24/32-bit) or IEEE float32 WAV file to a mono signal in [-1, 1].
///
/// Multichannel files are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(VoxError::Format { path: path.into(), reason: "zero channels".into() });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        (format, bits) => {
            return Err(VoxError::Unsupported {
                path: path.into(),
                reason: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };

    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(VoxError::Format { path: path.into(), reason: "no audio frames".into() });
    }
    Signal::new(samples, f64::from(spec.sample_rate))
}

fn wav_error(path: &Path, err: hound::Error) -> VoxError {
    match err {
        hound::Error::Unsupported => {
            VoxError::Unsupported { path: path.into(), reason: "unsupported WAV codec".into() }
        }
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => VoxError::Io(e),
        other => VoxError::Format { path: path.into(), reason: other.to_string() },
    }
}

/// Writes a 16-bit PCM mono WAV file. Samples are clipped to [-1, 1].
pub fn write_wav_pcm16(path: impl AsRef<Path>, sig: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sig.rate().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let path = path.as_ref();
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in sig.samples() {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

/// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
///
/// The kernel spans `TAPS_PER_PHASE` samples at the lower of the two rates.
pub fn resample(sig: &Signal, target_rate: f64) -> Result<Signal> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(VoxError::InvalidParameter(format!("target rate {target_rate} must be positive")));
    }
    if target_rate == sig.rate() {
        return Ok(sig.clone());
    }
    let x = sig.samples();
    let ratio = target_rate / sig.rate();
    let out_len = ((x.len() as f64 * ratio).round() as usize).max(1);
    let cutoff = ratio.min(1.0);
    let half_width = (TAPS_PER_PHASE / 2) as f64 / cutoff;
    let i0_beta = bessel_i0(KAISER_BETA);

    let out = (0..out_len)
        .map(|i| {
            let t = i as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len() - 1);
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (j, &xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - j as f64;
                let u = d / half_width;
                if u.abs() > 1.0 {
                    continue;
                }
                let kaiser = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / i0_beta;
                let w = cutoff * sinc(cutoff * d) * kaiser;
                acc += w * xj;
                norm += w;
            }
            if norm.abs() > 1e-12 {
                acc / norm
            } else {
                0.0
            }
        })
        .collect();
    Signal::new(out, target_rate)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Segments `sig` into frames of `frame_ms` milliseconds every `hop_ms` milliseconds.
pub fn frame(sig: &Signal, frame_ms: f64, hop_ms: f64, window: Window) -> Result<FrameGrid> {
    let frame_len = (frame_ms * sig.rate() / 1000.0).round() as usize;
    let hop = (hop_ms * sig.rate() / 1000.0).round() as usize;
    frame_samples(sig, frame_len, hop, window)
}

/// Sample-count variant of [`frame`].
pub fn frame_samples(sig: &Signal, frame_len: usize, hop: usize, window: Window) -> Result<FrameGrid> {
    if frame_len == 0 || hop == 0 {
        return Err(VoxError::InvalidParameter("frame length and hop must be positive".into()));
    }
    if hop > frame_len {
        return Err(VoxError::InvalidParameter(format!(
            "hop {hop} exceeds frame length {frame_len}"
        )));
    }
    let x = sig.samples();
    if x.len() < frame_len {
        return Err(VoxError::InsufficientData(format!(
            "signal of {} samples is shorter than one frame of {frame_len}",
            x.len()
        )));
    }
    let coeffs = window.coefficients(frame_len);
    let count = (x.len() - frame_len) / hop + 1;
    let frames = (0..count)
        .map(|m| {
            x[m * hop..m * hop + frame_len]
                .iter()
                .zip(&coeffs)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect();
    Ok(FrameGrid { frame_len, hop, window, rate: sig.rate(), frames })
}
