//! Delay embedding and kernelized approximate/sample entropy.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;

use crate::error::{Result, VoxError};

pub const EMBEDDING_DIM: usize = 2;
pub const RADIUS_FACTOR: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub vectors: Vec<Vec<f64>>,
    pub m: usize,
    pub tau: usize,
}

pub fn embed(sig: &[f64], m: usize, tau: usize) -> Result<Embedding> {
    if m == 0 || tau == 0 {
        return Err(VoxError::InvalidParameter("embedding needs m ≥ 1 and τ ≥ 1".into()));
    }
    let span = (m - 1) * tau;
    if sig.len() <= span {
        return Err(VoxError::InsufficientData(format!(
            "embedding m={m}, τ={tau} needs more than {span} samples, got {}",
            sig.len()
        )));
    }
    let vectors = (0..sig.len() - span).map(|n| (0..m).map(|k| sig[n + k * tau]).collect()).collect();
    Ok(Embedding { vectors, m, tau })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Heaviside,
    Gaussian,
    Exponential,
    Laplacian,
    Circular,
    Spherical,
    Cauchy,
    Triangular,
}

impl KernelKind {
    pub const ALL: [KernelKind; 8] = [
        KernelKind::Heaviside,
        KernelKind::Gaussian,
        KernelKind::Exponential,
        KernelKind::Laplacian,
        KernelKind::Circular,
        KernelKind::Spherical,
        KernelKind::Cauchy,
        KernelKind::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Heaviside => "heaviside",
            KernelKind::Gaussian => "gaussian",
            KernelKind::Exponential => "exponential",
            KernelKind::Laplacian => "laplacian",
            KernelKind::Circular => "circular",
            KernelKind::Spherical => "spherical",
            KernelKind::Cauchy => "cauchy",
            KernelKind::Triangular => "triangular",
        }
    }

    /// Heaviside compares vectors by Chebyshev distance, every other kernel by Euclidean.
    pub fn uses_chebyshev(self) -> bool {
        self == KernelKind::Heaviside
    }
}

fn eval(kind: KernelKind, d: f64, r: f64) -> f64 {
    let u = d / r;
    match kind {
        KernelKind::Heaviside => f64::from(d <= r),
        KernelKind::Gaussian => (-d * d / (10.0 * r * r)).exp(),
        KernelKind::Exponential => (-d / (2.0 * r * r)).exp(),
        KernelKind::Laplacian => (-u).exp(),
        // arccos(u) rather than arccos(−u): the latter would rise to 2 at the support edge.
        KernelKind::Circular if u < 1.0 => FRAC_2_PI * u.acos() - FRAC_2_PI * u * (1.0 - u * u).sqrt(),
        KernelKind::Spherical if u < 1.0 => 1.0 - 1.5 * u + 0.5 * u * u * u,
        KernelKind::Cauchy if d < r => 1.0 / (1.0 + d * d / r),
        KernelKind::Triangular if u < 1.0 => 1.0 - u,
        _ => 0.0,
    }
}

pub fn kernel(kind: KernelKind, d: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(VoxError::InvalidParameter(format!("kernel radius must be positive, got {r}")));
    }
    if !(d >= 0.0) {
        return Err(VoxError::InvalidParameter(format!("kernel distance must be non-negative, got {d}")));
    }
    Ok(eval(kind, d, r))
}

/// Sample standard deviation (N − 1).
pub(crate) fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn radius(sig: &[f64]) -> Result<f64> {
    let r = RADIUS_FACTOR * sample_std(sig);
    if !(r > 0.0) || !r.is_finite() {
        return Err(VoxError::DegenerateInput("radius 0.2·std is zero; signal is constant".into()));
    }
    Ok(r)
}

/// Per-kernel `Σ_{j≠i} κ(i, j, r)` for every embedding vector, τ = 1.
fn cross_sums(sig: &[f64], m: usize, r: f64, kinds: &[KernelKind]) -> Vec<Vec<f64>> {
    let count = sig.len() + 1 - m;
    let mut sums = vec![vec![0.0; count]; kinds.len()];
    for i in 0..count {
        for j in i + 1..count {
            let (mut cheb, mut sq) = (0.0f64, 0.0);
            for k in 0..m {
                let diff = (sig[i + k] - sig[j + k]).abs();
                cheb = cheb.max(diff);
                sq += diff * diff;
            }
            let euclid = sq.sqrt();
            for (slot, &kind) in sums.iter_mut().zip(kinds) {
                let d = if kind.uses_chebyshev() { cheb } else { euclid };
                let v = eval(kind, d, r);
                slot[i] += v;
                slot[j] += v;
            }
        }
    }
    sums
}

/// `(1/(N−m)) Σᵢ ln C[i]` with `C[i] = (self + Σ_{j≠i} κ)/(N−m)`; `None` when any `C` is zero.
fn phi(cross: &[f64], self_match: f64, n: usize, m: usize) -> Option<f64> {
    let norm = (n - m) as f64;
    let mut acc = 0.0;
    for &s in cross {
        let c = (s + self_match) / norm;
        if c <= 0.0 {
            return None;
        }
        acc += c.ln();
    }
    Some(acc / norm)
}

/// Approximate and sample entropy for one kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub kind: KernelKind,
    pub approximate: Option<f64>,
    pub sample: Option<f64>,
}

/// AE and SE for each requested kernel, sharing one pairwise pass per embedding dimension.
pub fn entropies(sig: &[f64], kinds: &[KernelKind]) -> Result<Vec<EntropyPair>> {
    let m = EMBEDDING_DIM;
    if sig.len() < m + 3 {
        return Err(VoxError::InsufficientData(format!(
            "entropy needs at least {} samples, got {}",
            m + 3,
            sig.len()
        )));
    }
    let r = radius(sig)?;
    let n = sig.len();
    let low = cross_sums(sig, m, r, kinds);
    let high = cross_sums(sig, m + 1, r, kinds);
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let diff = |selfm: f64| Some(phi(&low[k], selfm, n, m)? - phi(&high[k], selfm, n, m + 1)?);
            EntropyPair { kind, approximate: diff(1.0), sample: diff(0.0) }
        })
        .collect())
}

pub fn approx_entropy(sig: &[f64], kind: KernelKind) -> Result<f64> {
    entropies(sig, &[kind])?[0]
        .approximate
        .ok_or_else(|| VoxError::DegenerateInput("approximate entropy is undefined".into()))
}

/// `None` when some template has no match at all.
pub fn sample_entropy(sig: &[f64], kind: KernelKind) -> Result<Option<f64>> {
    Ok(entropies(sig, &[kind])?[0].sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct double loop over embedding vectors with independent normalization.
    fn naive(sig: &[f64], exclude_self: bool) -> Option<f64> {
        let n = sig.len();
        let sd = {
            let mean = sig.iter().sum::<f64>() / n as f64;
            (sig.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        };
        let r = 0.2 * sd;
        let stat = |m: usize| -> Option<f64> {
            let vecs = embed(sig, m, 1).unwrap().vectors;
            let mut total = 0.0;
            for i in 0..vecs.len() {
                let mut c = 0.0;
                for j in 0..vecs.len() {
                    if exclude_self && i == j {
                        continue;
                    }
                    let d = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if d <= r {
                        c += 1.0;
                    }
                }
                if c == 0.0 {
                    return None;
                }
                total += (c / (n - m) as f64).ln();
            }
            Some(total / (n - m) as f64)
        };
        Some(stat(2)? - stat(3)?)
    }

    #[test]
    fn embedding_examples() {
        let e = embed(&[1.0, 2.0, 3.0, 4.0], 2, 1).unwrap();
        assert_eq!(e.vectors, vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]);
        let id = embed(&[5.0, 6.0], 1, 1).unwrap();
        assert_eq!(id.vectors, vec![vec![5.0], vec![6.0]]);
        let s: Vec<f64> = (0..7).map(f64::from).collect();
        let e3 = embed(&s, 3, 2).unwrap();
        assert_eq!(e3.vectors.len(), 3);
        assert_eq!(e3.vectors[2], vec![2.0, 4.0, 6.0]);
        assert!(embed(&[1.0, 2.0], 3, 1).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(KernelKind::Laplacian, 0.0, 0.3).unwrap(), 1.0);
        assert!((kernel(KernelKind::Triangular, 0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((kernel(KernelKind::Circular, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let edge = kernel(KernelKind::Spherical, 1.0 - 1e-9, 1.0).unwrap();
        assert!(edge.abs() < 1e-8);
        assert_eq!(kernel(KernelKind::Cauchy, 2.0, 1.0).unwrap(), 0.0);
        assert!(kernel(KernelKind::Gaussian, 0.1, 0.0).is_err());
        assert!(kernel(KernelKind::Gaussian, -0.1, 1.0).is_err());
    }

    #[test]
    fn heaviside_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise: Vec<f64> = (0..500).map(|_| rng.gen()).collect();
        let smooth: Vec<f64> = (0..500)
            .map(|n| (n as f64 * 0.15).sin() + 0.05 * rng.gen_range(-1.0..1.0))
            .collect();
        for sig in [&noise, &smooth] {
            let ae = approx_entropy(sig, KernelKind::Heaviside).unwrap();
            assert!((ae - naive(sig, false).unwrap()).abs() < 1e-12);
            let se = sample_entropy(sig, KernelKind::Heaviside).unwrap();
            match (se, naive(sig, true)) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
        }
        assert!(sample_entropy(&smooth, KernelKind::Heaviside).unwrap().is_some());
    }

    #[test]
    fn periodic_is_more_regular_than_noise() {
        let sine: Vec<f64> = (0..1000).map(|n| (2.0 * std::f64::consts::PI * n as f64 / 50.0).sin()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let amp = 3f64.sqrt() / 2f64.sqrt();
        let noise: Vec<f64> = (0..1000).map(|_| rng.gen_range(-amp..amp)).collect();
        let s_sine = sample_entropy(&sine, KernelKind::Heaviside).unwrap().unwrap();
        // An unmatched template drives SE to +∞, reported as missing.
        match sample_entropy(&noise, KernelKind::Heaviside).unwrap() {
            Some(s_noise) => assert!(s_sine < s_noise, "{s_sine} vs {s_noise}"),
            None => assert!(s_sine.is_finite()),
        }
        let g_sine = sample_entropy(&sine, KernelKind::Gaussian).unwrap().unwrap();
        let g_noise = sample_entropy(&noise, KernelKind::Gaussian).unwrap().unwrap();
        assert!(g_sine < g_noise, "{g_sine} vs {g_noise}");
    }

    #[test]
    fn constant_signal_is_degenerate() {
        assert!(matches!(approx_entropy(&[1.0; 200], KernelKind::Gaussian), Err(VoxError::DegenerateInput(_))));
    }

    #[test]
    fn sample_entropy_without_matches_is_missing() {
        // A ramp has no repeated templates within 0.2·std.
        let ramp: Vec<f64> = (0..10).map(|n| (n * n * n) as f64).collect();
        assert_eq!(sample_entropy(&ramp, KernelKind::Triangular).unwrap(), None);
        assert!(approx_entropy(&ramp, KernelKind::Triangular).is_ok());
    }

    proptest! {
        #[test]
        fn kernels_start_at_one_and_decay(d1 in 0.0f64..5.0, d2 in 0.0f64..5.0, r in 0.01f64..3.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            for kind in KernelKind::ALL {
                let k0 = kernel(kind, 0.0, r).unwrap();
                prop_assert!((k0 - 1.0).abs() < 1e-12);
                let (a, b) = (kernel(kind, lo, r).unwrap(), kernel(kind, hi, r).unwrap());
                prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
                prop_assert!(b <= a + 1e-12, "{kind:?} {lo} {hi} {r}");
            }
        }

        #[test]
        fn homogeneous_kernels_are_scale_invariant(seed in 0u64..1000, g in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sig: Vec<f64> = (0..150).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = sig.iter().map(|v| v * g).collect();
            let kinds = [KernelKind::Heaviside, KernelKind::Gaussian, KernelKind::Laplacian,
                KernelKind::Circular, KernelKind::Spherical, KernelKind::Triangular];
            let a = entropies(&sig, &kinds).unwrap();
            let b = entropies(&scaled, &kinds).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.approximate.unwrap() - y.approximate.unwrap()).abs() < 1e-9);
                if let (Some(p), Some(q)) = (x.sample, y.sample) {
                    prop_assert!((p - q).abs() < 1e-9);
                }
            }
        }
    }
}
