//! Z-score normalization and Mann-Whitney U filter selection.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, VoxError};
use crate::matrix::{FeatureMatrix, Label};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// Columns missing in more than this fraction of training rows are never selected.
pub const MAX_MISSING_FRACTION: f64 = 0.10;
/// Largest pooled sample size that gets an exact p-value.
pub const EXACT_LIMIT: usize = 20;
pub const REPORT_TOP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ZScaler {
    /// Columns of the fitted matrix that survive, with their training mean and std.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns dropped because their training std is zero or undefined.
    pub constant: Vec<usize>,
}

fn present(col: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    col.flatten().filter(|v| v.is_finite()).collect()
}

pub fn zscore_fit(train: &FeatureMatrix) -> Result<ZScaler> {
    if train.n_rows() == 0 {
        return Err(VoxError::InsufficientData("z-score fit needs training rows".into()));
    }
    let mut scaler = ZScaler { kept: Vec::new(), mean: Vec::new(), std: Vec::new(), constant: Vec::new() };
    for j in 0..train.n_cols() {
        let v = present(train.rows.iter().map(|r| r[j]));
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if v.len() >= 2 && std > 0.0 && std.is_finite() {
            scaler.kept.push(j);
            scaler.mean.push(mean);
            scaler.std.push(std);
        } else {
            scaler.constant.push(j);
        }
    }
    Ok(scaler)
}

/// Keeps the fitted non-constant columns; missing entries are imputed with the
/// training mean, i.e. 0 after scaling.
pub fn zscore_apply(scaler: &ZScaler, fm: &FeatureMatrix) -> FeatureMatrix {
    let mut out = fm.select_columns(&scaler.kept);
    for row in &mut out.rows {
        for (k, v) in row.iter_mut().enumerate() {
            let z = v.filter(|x| x.is_finite()).map_or(0.0, |x| (x - scaler.mean[k]) / scaler.std[k]);
            *v = Some(z);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U` of the first sample: `R₁ − n(n+1)/2`.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled values, plus `Σ (t³ − t)` over tie groups.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Null counts of `U` for sizes `(n, m)`: entry `u` is the number of rank arrangements giving `U = u`.
pub fn exact_u_counts(n: usize, m: usize) -> Vec<f64> {
    // table[j][u] holds counts for (i, j) while iterating i upward.
    let max_u = n * m;
    let mut prev: Vec<Vec<f64>> = (0..=m).map(|_| {
        let mut v = vec![0.0; max_u + 1];
        v[0] = 1.0;
        v
    }).collect();
    for i in 1..=n {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; m + 1];
        cur[0][0] = 1.0;
        for j in 1..=m {
            for u in 0..=i * j {
                // Largest value from the first sample (contributes j) or from the second.
                let a = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev[m].clone()
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(VoxError::InsufficientData("Mann-Whitney needs two nonempty samples".into()));
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..n].iter().sum();
    let u = r1 - (n * (n + 1)) as f64 / 2.0;
    let total = (n + m) as f64;
    if ties == total * total * total - total {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    if n + m <= EXACT_LIMIT && ties == 0.0 {
        let counts = exact_u_counts(n, m);
        let all: f64 = counts.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = counts[..=k].iter().sum();
        let upper: f64 = counts[k..].iter().sum();
        let p = (2.0 * lower.min(upper) / all).min(1.0);
        return Ok(MannWhitney { u, p, exact: true });
    }
    let (nf, mf) = (n as f64, m as f64);
    let mu = nf * mf / 2.0;
    let var = nf * mf / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePValue {
    pub name: String,
    pub column: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Column indices with `p < α`, in column order.
    pub selected: Vec<usize>,
    /// Every tested column, ascending by p; equal p-values are ordered by name.
    pub ranked: Vec<FeaturePValue>,
    /// Columns skipped for exceeding the missing-value limit.
    pub too_sparse: Vec<usize>,
}

impl Selection {
    pub fn top(&self, k: usize) -> &[FeaturePValue] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

/// Univariate filter on the rows of `train`; callers pass training rows only.
pub fn select_features(train: &FeatureMatrix, alpha: f64) -> Result<Selection> {
    let labels = train.labels();
    if !labels.contains(&Label::Healthy) || !labels.contains(&Label::Pathological) {
        return Err(VoxError::InsufficientData("feature selection needs both classes".into()));
    }
    let rows = train.n_rows() as f64;
    let mut ranked = Vec::new();
    let mut too_sparse = Vec::new();
    for j in 0..train.n_cols() {
        let missing = train.rows.iter().filter(|r| !r[j].is_some_and(f64::is_finite)).count();
        if missing as f64 > MAX_MISSING_FRACTION * rows {
            too_sparse.push(j);
            continue;
        }
        let class = |l: Label| present(train.rows.iter().zip(&labels).filter(|(_, &x)| x == l).map(|(r, _)| r[j]));
        let (h, p) = (class(Label::Healthy), class(Label::Pathological));
        if h.is_empty() || p.is_empty() {
            too_sparse.push(j);
            continue;
        }
        let mw = mann_whitney_u(&h, &p)?;
        ranked.push(FeaturePValue { name: train.names[j].clone(), column: j, p_value: mw.p });
    }
    let mut selected: Vec<usize> = ranked.iter().filter(|f| f.p_value < alpha).map(|f| f.column).collect();
    selected.sort_unstable();
    ranked.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| a.name.cmp(&b.name)));
    Ok(Selection { selected, ranked, too_sparse })
}
