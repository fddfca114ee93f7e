//! Per-recording feature extraction: every scalar feature plus the 60-statistic
//! summary of every per-frame sequence, in a fixed column order.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::aggregate::{aggregate_named, COUNT as STAT_COUNT};
use crate::audio::{frame, read_wav, resample, FrameGrid, Signal, Window, PIPELINE_RATE};
use crate::bispec;
use crate::colliculus::{gammatone_bank, icc_features, GammatoneBank, IccFeatures, ICC_BANDS};
use crate::emd::{self, ImfParam, ImfSet};
use crate::entropy::{entropies, KernelKind};
use crate::error::{Result, VoxError};
use crate::matrix::{FeatureMatrix, RowMeta};
use crate::modspec::{
    mel_filterbank, modulation_features, modulation_spectrum, MelFilterbank, ModulationSpectrum, DEFAULT_BANDS,
};
use crate::spectral::{cepstral_peak_prominence, real_cepstrum};

/// Gammatone impulse responses are truncated to this many seconds.
pub const GAMMATONE_SECONDS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub rate: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
    /// Recorded for provenance; extraction itself draws no random numbers.
    pub seed: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { rate: PIPELINE_RATE, frame_ms: 25.0, hop_ms: 10.0, window: Window::Hamming, seed: 0 }
    }
}

/// Fixed algorithm constants, echoed into the sidecar so outputs are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConstants {
    pub mel_bands: usize,
    pub gammatone_bands: usize,
    pub gammatone_seconds: f64,
    pub bispectral_max_frame: usize,
    pub bispectral_f0_max: f64,
    pub entropy_dimension: usize,
    pub entropy_radius_factor: f64,
    pub emd_sift_sd: f64,
    pub emd_max_sifts: usize,
    pub emd_max_imfs: usize,
    pub lpc_order: usize,
    pub cpp_f_max: f64,
}

impl Default for PipelineConstants {
    fn default() -> Self {
        PipelineConstants {
            mel_bands: DEFAULT_BANDS,
            gammatone_bands: ICC_BANDS,
            gammatone_seconds: GAMMATONE_SECONDS,
            bispectral_max_frame: bispec::MAX_FRAME,
            bispectral_f0_max: bispec::F0_MAX,
            entropy_dimension: crate::entropy::EMBEDDING_DIM,
            entropy_radius_factor: crate::entropy::RADIUS_FACTOR,
            emd_sift_sd: emd::SIFT_SD,
            emd_max_sifts: emd::MAX_SIFTS,
            emd_max_imfs: emd::MAX_IMFS,
            lpc_order: emd::LPC_ORDER,
            cpp_f_max: emd::CPP_F_MAX,
        }
    }
}

pub const SCALAR_FEATURES: [&str; 24] = [
    "mser", "mfp", "rphm", "icer", "rphic", "bcii", "hfebc", "lfebc", "lcbcer", "hcbcer", "lsber", "hsber",
    "bcmii", "bcpii", "imf_snr_tkeo", "imf_snr_seo", "imf_snr_she", "imf_snr_re", "imf_snr_zcr",
    "imf_nsr_tkeo", "imf_nsr_seo", "imf_nsr_she", "imf_nsr_re", "imf_fd",
];

/// Names of the per-frame sequences, in column order.
pub fn sequence_features() -> Vec<String> {
    let mut names: Vec<String> =
        ["ucpp", "imf_cpp", "imf_gne", "bcmd", "bcpd", "bmd", "bpd"].iter().map(|s| s.to_string()).collect();
    names.extend(KernelKind::ALL.iter().map(|k| format!("ae_{}", k.name())));
    names.extend(KernelKind::ALL.iter().map(|k| format!("se_{}", k.name())));
    names
}

/// Every output column: scalars first, then `<sequence>__<statistic>` blocks.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = SCALAR_FEATURES.iter().map(|s| s.to_string()).collect();
    for seq in sequence_features() {
        names.extend(aggregate_named(&seq, &[]).into_iter().map(|(n, _)| n));
    }
    names
}

/// Which feature family a column belongs to.
pub fn feature_family(name: &str) -> &'static str {
    let local = name.split("__").next().unwrap_or(name);
    match local {
        "mser" | "mfp" | "rphm" => "modspec",
        "icer" | "rphic" => "colliculus",
        "ucpp" => "cepstral",
        l if l.starts_with("imf_") => "emd",
        l if l.starts_with("ae_") || l.starts_with("se_") => "entropy",
        _ => "bispec",
    }
}

/// Precomputed filterbanks shared by every recording of one extraction run.
pub struct Extractor {
    pub config: ExtractConfig,
    mel: MelFilterbank,
    gammatone: GammatoneBank,
    frame_len: usize,
}

impl Extractor {
    pub fn new(config: ExtractConfig) -> Result<Self> {
        let frame_len = (config.frame_ms * config.rate / 1000.0).round() as usize;
        let hop = (config.hop_ms * config.rate / 1000.0).round() as usize;
        if frame_len < 16 || hop == 0 || hop > frame_len {
            return Err(VoxError::InvalidParameter(format!(
                "unusable framing: {frame_len} samples every {hop}"
            )));
        }
        let mel = mel_filterbank(DEFAULT_BANDS, frame_len, config.rate)?;
        let gt_len = (GAMMATONE_SECONDS * config.rate).round() as usize;
        let gammatone = gammatone_bank(ICC_BANDS, config.rate, gt_len)?;
        Ok(Extractor { config, mel, gammatone, frame_len })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Full feature row for a signal already at the pipeline rate.
    pub fn features(&self, sig: &Signal) -> Result<Vec<Option<f64>>> {
        let cfg = &self.config;
        if (sig.rate() - cfg.rate).abs() > 1e-9 {
            return Err(VoxError::InvalidParameter(format!(
                "signal at {} Hz, pipeline expects {} Hz",
                sig.rate(),
                cfg.rate
            )));
        }
        let windowed = frame(sig, cfg.frame_ms, cfg.hop_ms, cfg.window)?;
        let raw = frame(sig, cfg.frame_ms, cfg.hop_ms, Window::Rectangular)?;
        let rate = cfg.rate;

        let mut scalars: Vec<Option<f64>> = Vec::with_capacity(SCALAR_FEATURES.len());
        let ms = modulation_spectrum(&windowed, &self.mel).and_then(|ms| modulation_features(&ms));
        match ms {
            Ok(f) => scalars.extend([f.mser, f.mfp, f.rphm]),
            Err(e) => {
                warn!("modulation features unavailable: {e}");
                scalars.extend([None; 3]);
            }
        }
        match icc_features(&windowed, &self.gammatone) {
            Ok(f) => scalars.extend([f.icer, f.rphic]),
            Err(e) => {
                warn!("colliculus features unavailable: {e}");
                scalars.extend([None; 2]);
            }
        }

        let bis = bispectral(&windowed, rate);
        let (bf, bi, bd) = match &bis {
            Some(r) => (r.features, r.interference, Some(&r.distances)),
            None => (Default::default(), Default::default(), None),
        };
        scalars.extend([bf.bcii, bf.hfebc, bf.lfebc, bf.lcbcer, bf.hcbcer, bf.lsber, bf.hsber]);
        scalars.extend([bi.bcmii, bi.bcpii]);

        let whole = emd::emd(sig.samples()).unwrap_or(ImfSet { imfs: Vec::new(), residual: Vec::new() });
        scalars.extend(ImfParam::SNR.iter().map(|&p| emd::imf_snr(&whole, p)));
        scalars.extend(ImfParam::NSR.iter().map(|&p| emd::imf_nsr(&whole, p)));
        scalars.push(emd::imf_fd(&whole));

        let frames = per_frame(&windowed, &raw, rate);
        let some = |v: &[f64]| v.iter().map(|&x| Some(x)).collect::<Vec<_>>();
        let mut sequences: Vec<Vec<Option<f64>>> = vec![frames.ucpp, frames.imf_cpp, frames.imf_gne];
        match bd {
            Some(d) => sequences.extend([some(&d.bcmd), some(&d.bcpd), some(&d.bmd), some(&d.bpd)]),
            None => sequences.extend(std::iter::repeat_with(Vec::new).take(4)),
        }
        sequences.extend(frames.ae);
        sequences.extend(frames.se);

        let mut row = scalars;
        for (name, seq) in sequence_features().iter().zip(&sequences) {
            row.extend(aggregate_named(name, seq).into_iter().map(|(_, v)| v));
        }
        debug_assert_eq!(row.len(), SCALAR_FEATURES.len() + sequence_features().len() * STAT_COUNT);
        Ok(row)
    }

    /// Reads a recording and resamples it to the pipeline rate.
    pub fn load(&self, path: &Path) -> Result<Signal> {
        resample(&read_wav(path)?, self.config.rate)
    }

    /// Reads and resamples a recording, then extracts its feature row.
    pub fn features_from_path(&self, path: &Path) -> Result<Vec<Option<f64>>> {
        self.features(&self.load(path)?)
    }

    /// Band-averaged modulation spectrum on the analysis grid.
    pub fn modulation_profile(&self, sig: &Signal) -> Result<ModulationSpectrum> {
        let cfg = &self.config;
        modulation_spectrum(&frame(sig, cfg.frame_ms, cfg.hop_ms, cfg.window)?, &self.mel)
    }

    /// Auditory-model profile on the analysis grid.
    pub fn colliculus_profile(&self, sig: &Signal) -> Result<IccFeatures> {
        let cfg = &self.config;
        icc_features(&frame(sig, cfg.frame_ms, cfg.hop_ms, cfg.window)?, &self.gammatone)
    }
}

fn bispectral(grid: &FrameGrid, rate: f64) -> Option<bispec::BispectralReport> {
    match bispec::analyze(&grid.frames, rate) {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("bispectral features unavailable: {e}");
            None
        }
    }
}

struct FrameSequences {
    ucpp: Vec<Option<f64>>,
    imf_cpp: Vec<Option<f64>>,
    imf_gne: Vec<Option<f64>>,
    ae: Vec<Vec<Option<f64>>>,
    se: Vec<Vec<Option<f64>>>,
}

fn per_frame(windowed: &FrameGrid, raw: &FrameGrid, rate: f64) -> FrameSequences {
    let kernels = KernelKind::ALL.len();
    let mut out = FrameSequences {
        ucpp: Vec::with_capacity(windowed.len()),
        imf_cpp: Vec::with_capacity(raw.len()),
        imf_gne: Vec::with_capacity(raw.len()),
        ae: vec![Vec::with_capacity(raw.len()); kernels],
        se: vec![Vec::with_capacity(raw.len()); kernels],
    };
    for (w, r) in windowed.frames.iter().zip(&raw.frames) {
        out.ucpp.push(real_cepstrum(w).ok().and_then(|c| cepstral_peak_prominence(&c, rate, emd::CPP_F_MAX)));
        let set = emd::emd(r).ok();
        out.imf_cpp.push(set.as_ref().and_then(|s| emd::imf_cpp(s, rate)));
        out.imf_gne.push(emd::imf_gne(r, rate));
        match entropies(r, &KernelKind::ALL) {
            Ok(pairs) => {
                for (k, p) in pairs.iter().enumerate() {
                    out.ae[k].push(p.approximate);
                    out.se[k].push(p.sample);
                }
            }
            Err(_) => {
                for k in 0..kernels {
                    out.ae[k].push(None);
                    out.se[k].push(None);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub meta: RowMeta,
    /// Resolved location of the audio file.
    pub file: PathBuf,
}

/// Reads a `path,label,speaker,gender` CSV; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if header != ["path", "label", "speaker", "gender"] {
        return Err(VoxError::Manifest(format!("expected header path,label,speaker,gender, got {header:?}")));
    }
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let rel = rec[0].trim();
        let file = base.join(rel);
        if !file.exists() {
            return Err(VoxError::Manifest(format!("row {}: {} does not exist", i + 1, file.display())));
        }
        entries.push(ManifestEntry {
            meta: RowMeta {
                path: rel.to_string(),
                label: rec[1].parse()?,
                speaker: rec[2].trim().to_string(),
                gender: rec[3].parse()?,
            },
            file,
        });
    }
    if entries.is_empty() {
        return Err(VoxError::Manifest("manifest lists no recordings".into()));
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecording {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    pub skipped: Vec<SkippedRecording>,
}

/// Extracts every manifest entry in parallel; unreadable recordings are skipped and reported.
pub fn extract_all(entries: &[ManifestEntry], config: &ExtractConfig) -> Result<Extraction> {
    let extractor = Extractor::new(config.clone())?;
    let results: Vec<Result<Vec<Option<f64>>>> =
        entries.par_iter().map(|e| extractor.features_from_path(&e.file)).collect();
    let (mut rows, mut meta, mut skipped) = (Vec::new(), Vec::new(), Vec::new());
    for (entry, res) in entries.iter().zip(results) {
        match res {
            Ok(row) => {
                rows.push(row);
                meta.push(entry.meta.clone());
            }
            Err(e) => {
                warn!("skipping {}: {e}", entry.meta.path);
                skipped.push(SkippedRecording { path: entry.meta.path.clone(), reason: e.to_string() });
            }
        }
    }
    Ok(Extraction { matrix: FeatureMatrix::new(feature_names(), rows, meta)?, skipped })
}

/// JSON sidecar written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionInfo {
    pub config: ExtractConfig,
    pub constants: PipelineConstants,
    pub recordings: usize,
    pub features: usize,
    pub skipped: Vec<SkippedRecording>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_extraction(ex: &Extraction, config: &ExtractConfig, csv: &Path) -> Result<()> {
    ex.matrix.write_csv(csv)?;
    let info = ExtractionInfo {
        config: config.clone(),
        constants: PipelineConstants::default(),
        recordings: ex.matrix.n_rows(),
        features: ex.matrix.n_cols(),
        skipped: ex.skipped.clone(),
    };
    std::fs::write(sidecar_path(csv), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

pub fn read_extraction_info(csv: &Path) -> Option<ExtractionInfo> {
    let text = std::fs::read_to_string(sidecar_path(csv)).ok()?;
    serde_json::from_str(&text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_layout() {
        let names = feature_names();
        assert_eq!(names.len(), 24 + 23 * 60);
        assert_eq!(names[24], "ucpp__max");
        assert_eq!(names.last().unwrap(), "se_triangular__renyi2_entropy");
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn families() {
        assert_eq!(feature_family("mser"), "modspec");
        assert_eq!(feature_family("imf_cpp__median"), "emd");
        assert_eq!(feature_family("ae_cauchy__mean"), "entropy");
        assert_eq!(feature_family("bmd__max"), "bispec");
        assert_eq!(feature_family("rphic"), "colliculus");
    }

    #[test]
    fn rejects_wrong_rate_and_bad_framing() {
        let ex = Extractor::new(ExtractConfig::default()).unwrap();
        let sig = Signal::new(vec![0.1; 8000], 8000.0).unwrap();
        assert!(ex.features(&sig).is_err());
        let bad = ExtractConfig { hop_ms: 30.0, ..ExtractConfig::default() };
        assert!(Extractor::new(bad).is_err());
    }
}
