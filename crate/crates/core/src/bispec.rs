//! Higher-order spectra: circular triple correlation, bispectrum, real and complex
//! bicepstra, and the bicepstral feature family (BCII, LFEBC/HFEBC, LCBCER/HCBCER,
//! LSBER/HSBER, BCMII/BCPII, BCMD/BCPD/BMD/BPD).

use rustfft::num_complex::Complex64;

use crate::error::{Result, VoxError};
use crate::spectral::{
    self, complex_cepstrum, fft_batch_in_place, fft_in_place, ifft_in_place, real_cepstrum, unwrap_phase,
    LOG_EPS,
};

/// Upper bound on the bispectral frame size; longer frames are truncated.
pub const MAX_FRAME: usize = 512;

/// Maximum expected fundamental frequency for the cepstral low/high split.
pub const F0_MAX: f64 = 350.0;

/// Square `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Square<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Square<T> {
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.at(i, i)).collect()
    }
}

pub type Bispectrum = Square<Complex64>;

#[derive(Debug, Clone)]
pub struct Bicepstrum {
    /// `c[n₁, n₂]` from the log-magnitude bispectrum.
    pub real: Square<f64>,
    /// `c̃[n₁, n₂]` from the complex logarithm with unwrapped phase.
    pub complex: Square<Complex64>,
}

fn check_frame(x: &[f64]) -> Result<()> {
    if x.len() < 4 {
        return Err(VoxError::InsufficientData(format!(
            "bispectral analysis needs frames of at least 4 samples, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// `γ[n₁, n₂] = (1/N)·Σₙ x[n]·x[(n+n₁) mod N]·x[(n+n₂) mod N]`.
///
/// Each row is a circular cross-correlation evaluated with FFTs.
pub fn triple_correlation(x: &[f64]) -> Result<Square<f64>> {
    check_frame(x)?;
    let n = x.len();
    let spectrum = spectral::dft(x);
    let mut data = Vec::with_capacity(n * n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for n1 in 0..n {
        for (t, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(x[t] * x[(t + n1) % n], 0.0);
        }
        fft_in_place(&mut buf);
        for (slot, xk) in buf.iter_mut().zip(&spectrum) {
            *slot = slot.conj() * xk;
        }
        ifft_in_place(&mut buf);
        data.extend(buf.iter().map(|c| c.re / n as f64));
    }
    Ok(Square { n, data })
}

fn transpose<T: Copy>(data: &[T], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for c in 0..n {
        out.extend((0..n).map(|r| data[r * n + c]));
    }
    out
}

fn fft_2d(data: &mut Vec<Complex64>, n: usize, inverse: bool) {
    fft_batch_in_place(data, n, inverse);
    let mut t = transpose(data, n);
    fft_batch_in_place(&mut t, n, inverse);
    *data = transpose(&t, n);
}

/// Two-dimensional DFT of the circular triple correlation.
pub fn bispectrum(x: &[f64]) -> Result<Bispectrum> {
    let gamma = triple_correlation(x)?;
    let n = gamma.n;
    let mut data: Vec<Complex64> = gamma.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut data, n, false);
    Ok(Square { n, data })
}

/// `B[k₁, k₂] = (1/N)·X[k₁]·X[k₂]·X*[(k₁+k₂) mod N]`, equal to [`bispectrum`] in O(N²).
pub fn bispectrum_direct(x: &[f64]) -> Result<Bispectrum> {
    check_frame(x)?;
    let n = x.len();
    let spec = spectral::dft(x);
    let scale = 1.0 / n as f64;
    let mut data = Vec::with_capacity(n * n);
    for k1 in 0..n {
        for k2 in 0..n {
            data.push(spec[k1] * spec[k2] * spec[(k1 + k2) % n].conj() * scale);
        }
    }
    Ok(Square { n, data })
}

/// Sequential 2-D phase unwrapping: every row along `k₂`, then every column along `k₁`.
pub fn unwrap_phase_2d(phase: &mut [f64], n: usize) {
    for row in phase.chunks_exact_mut(n) {
        unwrap_phase(row);
    }
    let mut t = transpose(phase, n);
    for col in t.chunks_exact_mut(n) {
        unwrap_phase(col);
    }
    phase.copy_from_slice(&transpose(&t, n));
}

pub fn bicepstrum_from(b: &Bispectrum) -> Bicepstrum {
    bicepstrum_with_phase(b).0
}

/// Also returns the principal phase of `b`.
fn bicepstrum_with_phase(b: &Bispectrum) -> (Bicepstrum, Vec<f64>) {
    let n = b.n;
    let log_mag: Vec<f64> = b.data.iter().map(|c| (c.norm_sqr().sqrt() + LOG_EPS).ln()).collect();
    let mut real: Vec<Complex64> = log_mag.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    fft_2d(&mut real, n, true);

    let principal: Vec<f64> = b.data.iter().map(|c| c.arg()).collect();
    let mut phase = principal.clone();
    unwrap_phase_2d(&mut phase, n);
    let mut complex: Vec<Complex64> =
        log_mag.iter().zip(&phase).map(|(&l, &p)| Complex64::new(l, p)).collect();
    fft_2d(&mut complex, n, true);

    let bc = Bicepstrum {
        real: Square { n, data: real.into_iter().map(|c| c.re).collect() },
        complex: Square { n, data: complex },
    };
    (bc, principal)
}

pub fn bicepstrum(x: &[f64]) -> Result<Bicepstrum> {
    Ok(bicepstrum_from(&bispectrum(x)?))
}

/// Per-frame quantities the features are built from.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub bispectrum: Bispectrum,
    pub bicepstrum: Bicepstrum,
    /// One-dimensional bicepstral index `ρ[n] = c[n, n]`.
    pub rho: Vec<f64>,
    /// Diagonal of the complex bicepstrum.
    pub rho_complex: Vec<Complex64>,
    /// One-dimensional bispectral index `ϑ[k] = |B[k, k]|`.
    pub vartheta: Vec<f64>,
    pub cepstrum: Vec<f64>,
    pub complex_cepstrum: Vec<Complex64>,
    /// Magnitude spectrum `|S[k]|`.
    pub magnitude: Vec<f64>,
    /// Moduli and principal phases of the bispectrum and complex bicepstrum.
    pub(crate) polar: [Polar; 2],
}

#[derive(Debug, Clone)]
pub(crate) struct Polar {
    modulus: Vec<f64>,
    phase: Vec<f64>,
}

impl Polar {
    fn of(data: &[Complex64]) -> Polar {
        Polar::with_phase(data, data.iter().map(|c| c.arg()).collect())
    }

    fn with_phase(data: &[Complex64], phase: Vec<f64>) -> Polar {
        Polar { modulus: data.iter().map(|c| c.norm_sqr().sqrt()).collect(), phase }
    }
}

pub fn analyze_frame(frame: &[f64]) -> Result<FrameAnalysis> {
    let x = &frame[..frame.len().min(MAX_FRAME)];
    let b = bispectrum_direct(x)?;
    let (bc, b_phase) = bicepstrum_with_phase(&b);
    Ok(FrameAnalysis {
        rho: bc.real.diagonal(),
        rho_complex: bc.complex.diagonal(),
        vartheta: b.diagonal().iter().map(|c| c.norm()).collect(),
        cepstrum: real_cepstrum(x)?,
        complex_cepstrum: complex_cepstrum(x)?,
        magnitude: spectral::dft(x).iter().map(|c| c.norm()).collect(),
        polar: [Polar::with_phase(&b.data, b_phase), Polar::of(&bc.complex.data)],
        bispectrum: b,
        bicepstrum: bc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BicepstralFeatures {
    pub bcii: Option<f64>,
    pub hfebc: Option<f64>,
    pub lfebc: Option<f64>,
    pub lcbcer: Option<f64>,
    pub hcbcer: Option<f64>,
    pub lsber: Option<f64>,
    pub hsber: Option<f64>,
}

/// Consecutive-frame distance sequences, `M − 1` entries each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BicepstralDistances {
    pub bcmd: Vec<f64>,
    pub bcpd: Vec<f64>,
    pub bmd: Vec<f64>,
    pub bpd: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceIndices {
    pub bcmii: Option<f64>,
    pub bcpii: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BispectralReport {
    pub features: BicepstralFeatures,
    pub distances: BicepstralDistances,
    pub interference: InterferenceIndices,
    pub eta_modulus: Vec<f64>,
    pub eta_phase: Vec<f64>,
    /// Transform size actually analysed.
    pub n: usize,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den).filter(|v| v.is_finite())
}

/// `1/(N²−1) · 1/max(η) · Σ|η[m+1] − η[m]|`.
pub fn interference_index(eta: &[f64], n: usize) -> Option<f64> {
    let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if eta.is_empty() || max == 0.0 || !max.is_finite() {
        return None;
    }
    let tv: f64 = eta.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    ratio(tv, ((n * n - 1) as f64) * max)
}

/// BCII from the accumulated `Σₘ cₘ` and `Σₘ |cₘ|`.
fn bcii(sum: &[f64], sum_abs: &[f64], n: usize) -> Option<f64> {
    let b: Vec<f64> = sum
        .iter()
        .zip(sum_abs)
        .map(|(s, a)| if *a > 0.0 { s.abs() / a } else { 1.0 })
        .collect();
    let max = b.iter().cloned().fold(0.0f64, f64::max);
    let tv: f64 = b
        .chunks_exact(n)
        .map(|row| row.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>())
        .sum();
    ratio(tv, ((n * n - 1) as f64) * max)
}

fn modulus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x).abs()).sum()
}

/// Phase differences are taken on the circle, so a ±π branch flip costs nothing.
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

fn phase_distance(a: &[f64], b: &[f64]) -> f64 {
    use std::f64::consts::PI;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            // Principal phases lie in [-π, π], so |y - x| never exceeds 2π.
            let d = (y - x).abs();
            d.min(2.0 * PI - d)
        })
        .sum()
}

/// Runs every bicepstral feature over the frames of one recording.
pub fn analyze(frames: &[Vec<f64>], rate: f64) -> Result<BispectralReport> {
    let first = frames
        .first()
        .ok_or_else(|| VoxError::InsufficientData("bispectral analysis needs at least one frame".into()))?;
    let n = first.len().min(MAX_FRAME);
    let split = (rate / F0_MAX).round() as usize;
    let half = n / 2;

    let mut sum = vec![0.0; n * n];
    let mut sum_abs = vec![0.0; n * n];
    let (mut rho_low, mut rho_high) = (0.0, 0.0);
    let (mut cep_low, mut cep_high) = (0.0, 0.0);
    let (mut mag_low, mut mag_high, mut vt_low, mut vt_high) = (0.0, 0.0, 0.0, 0.0);
    let mut eta_modulus = Vec::with_capacity(frames.len());
    let mut eta_phase = Vec::with_capacity(frames.len());
    let mut distances = BicepstralDistances::default();
    let mut prev: Option<FrameAnalysis> = None;

    for frame in frames {
        let fa = analyze_frame(frame)?;
        if fa.rho.len() != n {
            return Err(VoxError::InvalidParameter("frames must share one length".into()));
        }
        for ((s, a), &c) in sum.iter_mut().zip(sum_abs.iter_mut()).zip(&fa.bicepstrum.real.data) {
            *s += c;
            *a += c.abs();
        }
        for k in 0..n {
            let (r, c) = (fa.rho[k].abs(), fa.cepstrum[k].abs());
            if k <= split {
                rho_low += r;
                cep_low += c;
            } else {
                rho_high += r;
                cep_high += c;
            }
            if k <= half {
                mag_low += fa.magnitude[k];
                vt_low += fa.vartheta[k];
            } else {
                mag_high += fa.magnitude[k];
                vt_high += fa.vartheta[k];
            }
        }
        eta_modulus.push(
            fa.cepstrum.iter().zip(&fa.rho).map(|(c, r)| (c.abs() - r.abs()).powi(2)).sum(),
        );
        eta_phase.push(
            fa.complex_cepstrum
                .iter()
                .zip(&fa.rho_complex)
                .map(|(c, r)| (c.arg() - r.arg()).powi(2))
                .sum(),
        );
        if let Some(p) = &prev {
            let [pb, pc] = &p.polar;
            let [cb, cc] = &fa.polar;
            distances.bcmd.push(modulus_distance(&pc.modulus, &cc.modulus));
            distances.bcpd.push(phase_distance(&pc.phase, &cc.phase));
            distances.bmd.push(modulus_distance(&pb.modulus, &cb.modulus));
            distances.bpd.push(phase_distance(&pb.phase, &cb.phase));
        }
        prev = Some(fa);
    }

    let rho_total = rho_low + rho_high;
    let high_range = split + 1 < n;
    let features = BicepstralFeatures {
        bcii: bcii(&sum, &sum_abs, n),
        lfebc: ratio(rho_low, rho_total),
        hfebc: if high_range { ratio(rho_high, rho_total) } else { None },
        lcbcer: ratio(cep_low, rho_low),
        hcbcer: if high_range { ratio(cep_high, rho_high) } else { None },
        lsber: ratio(mag_low, vt_low),
        hsber: ratio(mag_high, vt_high),
    };
    let interference = InterferenceIndices {
        bcmii: interference_index(&eta_modulus, n),
        bcpii: interference_index(&eta_phase, n),
    };
    Ok(BispectralReport { features, distances, interference, eta_modulus, eta_phase, n })
}

pub fn bicepstral_features(frames: &[Vec<f64>], rate: f64) -> Result<BicepstralFeatures> {
    Ok(analyze(frames, rate)?.features)
}

pub fn bicepstral_distances(frames: &[Vec<f64>], rate: f64) -> Result<BicepstralDistances> {
    if frames.len() < 2 {
        return Err(VoxError::InsufficientData("distances need at least 2 frames".into()));
    }
    Ok(analyze(frames, rate)?.distances)
}

pub fn bicepstrum_interference(frames: &[Vec<f64>], rate: f64) -> Result<InterferenceIndices> {
    if frames.len() < 2 {
        return Err(VoxError::InsufficientData("interference indices need at least 2 frames".into()));
    }
    Ok(analyze(frames, rate)?.interference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn naive_triple(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut out = vec![0.0; n * n];
        for n1 in 0..n {
            for n2 in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    acc += x[t] * x[(t + n1) % n] * x[(t + n2) % n];
                }
                out[n1 * n + n2] = acc / n as f64;
            }
        }
        out
    }

    /// `(1/N)·X[k₁]X[k₂]X*[(k₁+k₂) mod N]` from a directly summed DFT.
    fn direct_bispectrum(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        let xk: Vec<Complex64> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|t| Complex64::from_polar(x[t], -2.0 * PI * (k * t) as f64 / n as f64))
                    .sum()
            })
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for k1 in 0..n {
            for k2 in 0..n {
                out.push(xk[k1] * xk[k2] * xk[(k1 + k2) % n].conj() / n as f64);
            }
        }
        out
    }

    #[test]
    fn triple_correlation_of_constant() {
        let g = triple_correlation(&[0.5; 8]).unwrap();
        assert!(g.data.iter().all(|&v| (v - 0.125).abs() < 1e-14));
    }

    #[test]
    fn triple_correlation_origin_and_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_frame(&mut rng, 16);
        let g = triple_correlation(&x).unwrap();
        let cubes = x.iter().map(|v| v.powi(3)).sum::<f64>() / 16.0;
        assert!((g.at(0, 0) - cubes).abs() < 1e-12);
        for (a, b) in g.data.iter().zip(naive_triple(&x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short_frame() {
        assert!(triple_correlation(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn bispectrum_matches_frequency_identity_on_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..256).map(|_| normal.sample(&mut rng)).collect();
        let b = bispectrum(&x).unwrap();
        let spec = spectral::dft(&x);
        let n = 256;
        let mut err = 0.0;
        let mut norm = 0.0;
        for k1 in 0..n {
            for k2 in 0..n {
                let want = spec[k1] * spec[k2] * spec[(k1 + k2) % n].conj() / n as f64;
                err += (b.at(k1, k2) - want).norm_sqr();
                norm += want.norm_sqr();
            }
        }
        assert!((err / norm).sqrt() < 1e-6);
    }

    #[test]
    fn bispectrum_direct_oracle_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [4, 7, 16, 32] {
            let x = random_frame(&mut rng, n);
            let b = bispectrum(&x).unwrap();
            let want = direct_bispectrum(&x);
            let err: f64 = b.data.iter().zip(&want).map(|(a, w)| (a - w).norm_sqr()).sum();
            let norm: f64 = want.iter().map(|w| w.norm_sqr()).sum();
            assert!((err / norm).sqrt() < 1e-6);
        }
    }

    #[test]
    fn direct_route_matches_triple_correlation_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in [5, 16, 33, 100] {
            let x = random_frame(&mut rng, n);
            let (a, b) = (bispectrum(&x).unwrap(), bispectrum_direct(&x).unwrap());
            let err: f64 = a.data.iter().zip(&b.data).map(|(p, q)| (p - q).norm_sqr()).sum();
            let norm: f64 = b.data.iter().map(|q| q.norm_sqr()).sum();
            assert!((err / norm).sqrt() < 1e-9);
        }
    }

    #[test]
    fn bispectrum_and_bicepstrum_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_frame(&mut rng, 24);
        let b = bispectrum(&x).unwrap();
        let c = bicepstrum(&x).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert!((b.at(i, j) - b.at(j, i)).norm() < 1e-9);
                assert!((c.real.at(i, j) - c.real.at(j, i)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_phase_coupling_detected() {
        let n = 64;
        let (k1, k2) = (5usize, 9usize);
        const FRAMES: usize = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let avg = |coupled: bool, rng: &mut ChaCha8Rng| {
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..FRAMES {
                let p1 = rng.gen_range(0.0..2.0 * PI);
                let p2 = rng.gen_range(0.0..2.0 * PI);
                let p3 = if coupled { p1 + p2 } else { rng.gen_range(0.0..2.0 * PI) };
                let x: Vec<f64> = (0..n)
                    .map(|t| {
                        let w = 2.0 * PI * t as f64 / n as f64;
                        (w * k1 as f64 + p1).cos()
                            + (w * k2 as f64 + p2).cos()
                            + (w * (k1 + k2) as f64 + p3).cos()
                    })
                    .collect();
                acc += bispectrum(&x).unwrap().at(k1, k2);
            }
            acc.norm() / FRAMES as f64
        };
        let coupled = avg(true, &mut rng);
        let control = avg(false, &mut rng);
        assert!(coupled > 6.0 * control, "coupled {coupled} control {control}");
    }

    #[test]
    fn single_and_identical_frames_have_zero_bcii() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_frame(&mut rng, 32);
        let one = bicepstral_features(&[x.clone()], 16000.0).unwrap();
        assert!(one.bcii.unwrap().abs() < 1e-12);
        let many = analyze(&vec![x; 4], 16000.0).unwrap();
        assert!(many.features.bcii.unwrap().abs() < 1e-12);
        assert!(many.interference.bcmii.unwrap().abs() < 1e-12);
        assert!(many.interference.bcpii.unwrap().abs() < 1e-12);
        for seq in [&many.distances.bcmd, &many.distances.bcpd, &many.distances.bmd, &many.distances.bpd] {
            assert_eq!(seq.len(), 3);
            assert!(seq.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cepstral_energy_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let frames: Vec<Vec<f64>> = (0..3).map(|_| random_frame(&mut rng, 128)).collect();
        let f = bicepstral_features(&frames, 16000.0).unwrap();
        assert!((f.lfebc.unwrap() + f.hfebc.unwrap() - 1.0).abs() < 1e-12);
        for v in [f.bcii, f.lcbcer, f.hcbcer, f.lsber, f.hsber] {
            assert!(v.unwrap().is_finite() && v.unwrap() >= 0.0);
        }
    }

    #[test]
    fn gain_leaves_bispectral_phase_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_frame(&mut rng, 32);
        let gx: Vec<f64> = x.iter().map(|v| v * 1.7).collect();
        let d = bicepstral_distances(&[x, gx], 16000.0).unwrap();
        assert!(d.bpd[0] < 1e-9, "bpd {}", d.bpd[0]);
        assert!(d.bmd[0] > 0.0);
    }

    #[test]
    fn distances_match_naive_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (a, b) = (random_frame(&mut rng, 16), random_frame(&mut rng, 16));
        let d = bicepstral_distances(&[a.clone(), b.clone()], 16000.0).unwrap();
        let (ba, bb) = (direct_bispectrum(&a), direct_bispectrum(&b));
        let bmd: f64 = ba.iter().zip(&bb).map(|(x, y)| (y.norm() - x.norm()).abs()).sum();
        let bpd: f64 = ba
            .iter()
            .zip(&bb)
            .map(|(x, y)| {
                let d = (y.arg() - x.arg()).abs();
                d.min(2.0 * PI - d)
            })
            .sum();
        assert!((d.bmd[0] - bmd).abs() < 1e-9 * bmd.max(1.0));
        assert!((d.bpd[0] - bpd).abs() < 1e-6);

        let (ca, cb) = (bicepstrum(&a).unwrap(), bicepstrum(&b).unwrap());
        let bcmd: f64 = ca.complex.data.iter().zip(&cb.complex.data).map(|(x, y)| (y.norm() - x.norm()).abs()).sum();
        assert!((d.bcmd[0] - bcmd).abs() < 1e-9 * bcmd.max(1.0));
    }

    #[test]
    fn phase_difference_wraps() {
        assert!(phase_difference(PI, -PI).abs() < 1e-12);
        assert!((phase_difference(0.1, -0.1) - 0.2).abs() < 1e-12);
        assert!((phase_difference(-3.0, 3.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn interference_index_examples() {
        assert_eq!(interference_index(&[2.0, 2.0, 2.0], 8), Some(0.0));
        let v = interference_index(&[0.0, 5.0], 8).unwrap();
        assert!((v - 1.0 / 63.0).abs() < 1e-15);
        assert_eq!(interference_index(&[0.0, 0.0], 8), None);
    }

    fn vowel_frames(noise: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 400 * 8;
        let mut x = vec![0.0; n];
        for start in (0..n).step_by(100) {
            for k in 0..40.min(n - start) {
                let t = k as f64 / 16000.0;
                x[start + k] += (-t * 600.0).exp() * (2.0 * PI * 700.0 * t).sin();
            }
        }
        x.iter_mut().for_each(|v| *v += noise * normal.sample(&mut rng));
        x.chunks_exact(256).map(|c| c.to_vec()).collect()
    }

    #[test]
    fn noise_raises_modulus_interference() {
        let clean = bicepstrum_interference(&vowel_frames(1e-4, 1), 16000.0).unwrap();
        let noisy = bicepstrum_interference(&vowel_frames(0.2, 1), 16000.0).unwrap();
        assert!(noisy.bcmii.unwrap() > clean.bcmii.unwrap(), "{clean:?} {noisy:?}");
    }

    #[test]
    fn long_frames_are_truncated() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let frames = vec![random_frame(&mut rng, 600)];
        assert_eq!(analyze(&frames, 16000.0).unwrap().n, MAX_FRAME);
    }
}
