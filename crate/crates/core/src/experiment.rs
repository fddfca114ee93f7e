//! Repeated stratified 75/25 evaluation, detection metrics and the rule of 30.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{Classifier, Knn, RandomForest};
use crate::error::{Result, VoxError};
use crate::matrix::{FeatureMatrix, Gender, Label, RowMeta};
use crate::select::{select_features, zscore_apply, zscore_fit, FeaturePValue, DEFAULT_ALPHA, REPORT_TOP};

pub const DEFAULT_REPETITIONS: usize = 100;
pub const TEST_FRACTION: f64 = 0.25;
pub const MAX_REDRAWS: usize = 10;
pub const MIN_ROWS_PER_CLASS: usize = 4;

/// Minimum observed error rate, in percent, that `n` trials can support reliably.
pub fn rule_of_30(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(VoxError::InvalidParameter("rule of 30 needs a positive trial count".into()));
    }
    Ok(3000.0 / n as f64)
}

/// Binary confusion counts with pathological as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl Confusion {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Confusion {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> Option<f64> {
        percent(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    pub fn sensitivity(&self) -> Option<f64> {
        percent(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        percent(self.tn, self.tn + self.fp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub classifier: ClassifierKind,
    pub repetitions: usize,
    /// Repetition `i` draws its split and classifier seed from `seed + i`.
    pub seed: u64,
    pub test_fraction: f64,
    pub alpha: f64,
    pub knn: Knn,
    pub forest: RandomForest,
    /// Restricts the experiment to one gender; `None` uses every row.
    pub gender: Option<Gender>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classifier: ClassifierKind::Forest,
            repetitions: DEFAULT_REPETITIONS,
            seed: 0,
            test_fraction: TEST_FRACTION,
            alpha: DEFAULT_ALPHA,
            knn: Knn::default(),
            forest: RandomForest::default(),
            gender: None,
        }
    }
}

impl ExperimentConfig {
    pub fn scenario(&self) -> &'static str {
        match self.gender {
            Some(Gender::F) => "F",
            Some(Gender::M) => "M",
            None => "MF",
        }
    }
}

/// Row indices of one split, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Speaker groups in first-appearance order, keyed by the label of their first row.
fn speaker_groups(meta: &[RowMeta]) -> Vec<(Label, Vec<usize>)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<(Label, Vec<usize>)> = Vec::new();
    for (i, m) in meta.iter().enumerate() {
        let g = *index.entry(m.speaker.as_str()).or_insert_with(|| {
            groups.push((m.label, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }
    groups
}

/// Draws a speaker-disjoint split holding out `test_fraction` of each class's speakers,
/// at least one and never all of them.
pub fn stratified_split(meta: &[RowMeta], test_fraction: f64, rng: &mut ChaCha8Rng) -> Result<Split> {
    let groups = speaker_groups(meta);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for label in [Label::Healthy, Label::Pathological] {
        let mut ids: Vec<usize> = (0..groups.len()).filter(|&g| groups[g].0 == label).collect();
        if ids.len() < 2 {
            return Err(VoxError::Experiment(format!("class {label} needs at least two speakers")));
        }
        ids.shuffle(rng);
        let n_test = ((test_fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
        for (k, &g) in ids.iter().enumerate() {
            let side = if k < n_test { &mut test } else { &mut train };
            side.extend_from_slice(&groups[g].1);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

fn has_both(meta: &[RowMeta], idx: &[usize]) -> bool {
    let pos = idx.iter().filter(|&&i| meta[i].label.is_positive()).count();
    pos > 0 && pos < idx.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub n_selected: usize,
    /// No column passed the filter, so every non-constant column was used.
    pub selection_fallback: bool,
    pub redraws: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub oob_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: MeanStd,
    pub sensitivity: MeanStd,
    pub specificity: MeanStd,
    pub n_selected: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub scenario: String,
    pub classifier: String,
    pub rows: usize,
    pub healthy: usize,
    pub pathological: usize,
    pub features: usize,
    /// Where selection is fitted inside each repetition.
    pub selection_scope: String,
    pub repetitions: Vec<Repetition>,
    pub summary: Summary,
    /// Most significant columns over every row of the scenario; descriptive only.
    pub top_features: Vec<FeaturePValue>,
}

fn repetition(fm: &FeatureMatrix, cfg: &ExperimentConfig, clf: &dyn Classifier, index: usize) -> Result<Repetition> {
    let seed = cfg.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut redraws = 0;
    let split = loop {
        let s = stratified_split(&fm.meta, cfg.test_fraction, &mut rng)?;
        if has_both(&fm.meta, &s.train) && has_both(&fm.meta, &s.test) {
            break s;
        }
        redraws += 1;
        if redraws > MAX_REDRAWS {
            return Err(VoxError::Experiment(format!(
                "repetition {index}: no split with both classes on each side after {MAX_REDRAWS} redraws"
            )));
        }
    };
    let train = fm.select_rows(&split.train);
    let test = fm.select_rows(&split.test);
    let scaler = zscore_fit(&train)?;
    let selection = select_features(&train.select_columns(&scaler.kept), cfg.alpha)?;
    let selection_fallback = selection.selected.is_empty();
    let cols: Vec<usize> =
        if selection_fallback { (0..scaler.kept.len()).collect() } else { selection.selected };
    if cols.is_empty() {
        return Err(VoxError::Experiment(format!("repetition {index}: no non-constant training column")));
    }
    let x_train = zscore_apply(&scaler, &train).select_columns(&cols).dense(0.0);
    let x_test = zscore_apply(&scaler, &test).select_columns(&cols).dense(0.0);
    let truth = test.labels();
    let pred = clf.fit_predict(&x_train, &train.labels(), &x_test, rng.gen())?;
    let confusion = Confusion::from_predictions(&truth, &pred.labels);
    let rate = |r: Option<f64>| r.ok_or_else(|| VoxError::Experiment("test split lost a class".into()));
    Ok(Repetition {
        index,
        seed,
        accuracy: rate(confusion.accuracy())?,
        sensitivity: rate(confusion.sensitivity())?,
        specificity: rate(confusion.specificity())?,
        n_selected: cols.len(),
        selection_fallback,
        redraws,
        n_train: split.train.len(),
        n_test: split.test.len(),
        confusion,
        oob_accuracy: pred.oob_accuracy,
    })
}

/// Runs the configured built-in classifier.
pub fn run_experiment(fm: &FeatureMatrix, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.classifier {
        ClassifierKind::Knn => run_experiment_with(fm, cfg, &cfg.knn),
        ClassifierKind::Forest => run_experiment_with(fm, cfg, &cfg.forest),
    }
}

/// Runs `cfg.repetitions` independent repetitions in parallel; results keep repetition order.
pub fn run_experiment_with(fm: &FeatureMatrix, cfg: &ExperimentConfig, clf: &dyn Classifier) -> Result<ExperimentReport> {
    if cfg.repetitions == 0 {
        return Err(VoxError::InvalidParameter("at least one repetition is required".into()));
    }
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(VoxError::InvalidParameter("test fraction must lie in (0, 1)".into()));
    }
    let fm = fm.with_gender(cfg.gender);
    let pathological = fm.meta.iter().filter(|m| m.label.is_positive()).count();
    let healthy = fm.n_rows() - pathological;
    if healthy.min(pathological) < MIN_ROWS_PER_CLASS {
        return Err(VoxError::Experiment(format!(
            "need at least {MIN_ROWS_PER_CLASS} rows per class, found {healthy} healthy and {pathological} pathological"
        )));
    }
    let repetitions: Vec<Repetition> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|i| repetition(&fm, cfg, clf, i))
        .collect::<Result<_>>()?;
    let stat = |f: fn(&Repetition) -> f64| MeanStd::of(&repetitions.iter().map(f).collect::<Vec<_>>());
    let summary = Summary {
        accuracy: stat(|r| r.accuracy),
        sensitivity: stat(|r| r.sensitivity),
        specificity: stat(|r| r.specificity),
        n_selected: stat(|r| r.n_selected as f64),
    };
    let top_features = select_features(&fm, cfg.alpha)?.top(REPORT_TOP).to_vec();
    Ok(ExperimentReport {
        config: cfg.clone(),
        scenario: cfg.scenario().to_string(),
        classifier: clf.name(),
        rows: fm.n_rows(),
        healthy,
        pathological,
        features: fm.n_cols(),
        selection_scope: "training rows of each repetition".into(),
        repetitions,
        summary,
        top_features,
    })
}

/// Summary row in the layout of a results table, followed by the top-ranked features.
pub fn format_report(report: &ExperimentReport) -> String {
    let pm = |m: &MeanStd| format!("{:.1}±{:.1}", m.mean, m.std);
    let s = &report.summary;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<28} {:>20} {:>12} {:>12} {:>12}",
        "Scenario", "Classifier", "No. of sel. features", "Accuracy", "Sensitivity", "Specificity"
    );
    let _ = writeln!(
        out,
        "{:<8} {:<28} {:>20} {:>12} {:>12} {:>12}",
        report.scenario,
        report.classifier,
        format!("{:.0}±{:.0}", s.n_selected.mean, s.n_selected.std),
        pm(&s.accuracy),
        pm(&s.sensitivity),
        pm(&s.specificity)
    );
    if !report.top_features.is_empty() {
        let _ = writeln!(out, "\n{:<4} {:<48} {:>12}", "Rank", "Feature", "p-value");
        for (i, f) in report.top_features.iter().enumerate() {
            let _ = writeln!(out, "{:<4} {:<48} {:>12.3e}", i + 1, f.name, f.p_value);
        }
    }
    out
}
