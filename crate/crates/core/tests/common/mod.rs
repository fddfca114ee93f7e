//! Synthetic recordings shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use voxpath::audio::{write_wav_pcm16, Signal};
use voxpath::matrix::Label;

pub const RATE: f64 = 16000.0;

#[derive(Debug, Clone, Copy)]
pub struct VowelSpec {
    pub f0: f64,
    pub seconds: f64,
    /// Uniform period perturbation, as a fraction of the period.
    pub jitter: f64,
    pub am_depth: f64,
    pub am_hz: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl VowelSpec {
    pub fn healthy(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        VowelSpec {
            f0: rng.gen_range(100.0..220.0),
            seconds: 0.6,
            jitter: 0.0,
            am_depth: 0.0,
            am_hz: 0.0,
            snr_db: 20.0,
            seed,
        }
    }

    pub fn pathological(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbad);
        VowelSpec {
            am_depth: 0.3,
            am_hz: rng.gen_range(3.0..8.0),
            snr_db: 5.0,
            jitter: 0.02,
            ..VowelSpec::healthy(seed)
        }
    }
}

/// Two-pole resonator applied in place.
fn resonate(x: &mut [f64], freq: f64, bw: f64) {
    let r = (-PI * bw / RATE).exp();
    let a1 = 2.0 * r * (2.0 * PI * freq / RATE).cos();
    let a2 = -r * r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

/// Pulse-train source through a fixed three-formant filter, optional AM, jitter and noise.
pub fn vowel(spec: &VowelSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = (spec.seconds * RATE).round() as usize;
    let mut x = vec![0.0; n];
    let period = RATE / spec.f0;
    let mut t = 0.0f64;
    while (t.round() as usize) < n {
        x[t.round() as usize] = 1.0;
        t += period * (1.0 + spec.jitter * rng.gen_range(-1.0..1.0));
    }
    for (f, bw) in [(700.0, 130.0), (1220.0, 70.0), (2600.0, 160.0)] {
        resonate(&mut x, f, bw);
    }
    if spec.am_depth > 0.0 {
        let phase = rng.gen_range(0.0..2.0 * PI);
        for (i, v) in x.iter_mut().enumerate() {
            *v *= 1.0 + spec.am_depth * (2.0 * PI * spec.am_hz * i as f64 / RATE + phase).sin();
        }
    }
    let power = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let sigma = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).unwrap();
    x.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    let peak = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    x.iter_mut().for_each(|v| *v *= 0.5 / peak);
    x
}

/// Writes `healthy` + `pathological` synthetic recordings and a manifest into `dir`.
pub fn write_corpus(dir: &Path, per_class: usize, seconds: f64) -> PathBuf {
    let mut manifest = String::from("path,label,speaker,gender\n");
    for i in 0..per_class * 2 {
        let (label, mut spec) = if i % 2 == 0 {
            (Label::Healthy, VowelSpec::healthy(1000 + i as u64))
        } else {
            (Label::Pathological, VowelSpec::pathological(1000 + i as u64))
        };
        spec.seconds = seconds;
        let name = format!("rec{i:03}.wav");
        let sig = Signal::new(vowel(&spec), RATE).unwrap();
        write_wav_pcm16(dir.join(&name), &sig).unwrap();
        let gender = if i % 4 < 2 { "F" } else { "M" };
        manifest.push_str(&format!("{name},{label},spk{i:03},{gender}\n"));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}
