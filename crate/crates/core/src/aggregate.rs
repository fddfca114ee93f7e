//! High-level statistics that collapse a local-feature sequence into scalars.
//!
//! Every statistic is total: undefined values come back as `None` instead of errors so a
//! single degenerate sequence never aborts an extraction.

use crate::spectral::{fit_line, histogram_bin, min_max, renyi2_entropy, shannon_entropy};

macro_rules! statistics {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum StatisticId {
            $($variant),*
        }

        impl StatisticId {
            pub const ALL: [StatisticId; COUNT] = [$(StatisticId::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(StatisticId::$variant => $name),*
                }
            }
        }
    };
}

pub const COUNT: usize = 60;

statistics! {
    Max => "max", Min => "min", PosMax => "pos_max", PosMin => "pos_min",
    RelPosMax => "rel_pos_max", RelPosMin => "rel_pos_min",
    Range => "range", RelRange => "rel_range", Iqr => "iqr", RelIqr => "rel_iqr",
    Idr => "idr", RelIdr => "rel_idr", Ipr => "ipr", RelIpr => "rel_ipr",
    StudentizedRange => "studentized_range",
    Mean => "mean", GeoMean => "geo_mean", HarmMean => "harm_mean",
    TrimmedMean10 => "trimmed_mean_10", TrimmedMean20 => "trimmed_mean_20",
    TrimmedMean30 => "trimmed_mean_30", TrimmedMean40 => "trimmed_mean_40",
    TrimmedMean50 => "trimmed_mean_50", Median => "median", Mode => "mode",
    Var => "var", Std => "std", MadMean => "mad_mean", MadMedian => "mad_median",
    GeoStd => "geo_std", CoefVar => "coef_var", IndexDispersion => "index_dispersion",
    Moment3 => "moment_3", Moment4 => "moment_4", Moment5 => "moment_5", Moment6 => "moment_6",
    Kurtosis => "kurtosis", Skewness => "skewness",
    PearsonSkew1 => "pearson_skew_1", PearsonSkew2 => "pearson_skew_2",
    Percentile1 => "percentile_1", Percentile5 => "percentile_5", Percentile10 => "percentile_10",
    Percentile20 => "percentile_20", Percentile30 => "percentile_30", Percentile40 => "percentile_40",
    Percentile60 => "percentile_60", Percentile70 => "percentile_70", Percentile80 => "percentile_80",
    Percentile90 => "percentile_90", Percentile95 => "percentile_95", Percentile99 => "percentile_99",
    Quartile1 => "quartile_1", Quartile3 => "quartile_3",
    RegrSlope => "regr_slope", RegrOffset => "regr_offset", RegrError => "regr_error",
    Modulation => "modulation", ShannonEntropy => "shannon_entropy", Renyi2Entropy => "renyi2_entropy",
}

pub type Statistics = [Option<f64>; COUNT];

/// Column name for one statistic of a local feature.
pub fn feature_name(local: &str, stat: StatisticId) -> String {
    format!("{local}__{}", stat.name())
}

/// Linear interpolation at `h = (N − 1)·p` on sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn trimmed_mean(sorted: &[f64], k: usize) -> f64 {
    let cut = sorted.len() * k / 200;
    let kept = &sorted[cut..sorted.len() - cut];
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Midpoint of the first densest of `ceil(√N)` equal-width bins.
fn mode(x: &[f64]) -> f64 {
    let (lo, hi) = min_max(x);
    if hi <= lo {
        return lo;
    }
    let bins = (x.len() as f64).sqrt().ceil() as usize;
    let mut counts = vec![0usize; bins];
    for &v in x {
        counts[histogram_bin(v, lo, hi, bins)] += 1;
    }
    let best = counts.iter().enumerate().fold(0, |b, (i, &c)| if c > counts[b] { i } else { b });
    let width = (hi - lo) / bins as f64;
    lo + (best as f64 + 0.5) * width
}

fn div(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den).filter(|v| v.is_finite())
}

/// The 60 statistics in `StatisticId::ALL` order; non-finite entries are dropped first.
pub fn aggregate(seq: &[f64]) -> Statistics {
    let x: Vec<f64> = seq.iter().copied().filter(|v| v.is_finite()).collect();
    let mut out: Statistics = [None; COUNT];
    if x.is_empty() {
        return out;
    }
    let n = x.len();
    let nf = n as f64;
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);

    let pos_max = x.iter().enumerate().fold(0, |b, (i, &v)| if v > x[b] { i } else { b });
    let pos_min = x.iter().enumerate().fold(0, |b, (i, &v)| if v < x[b] { i } else { b });
    let (max, min) = (x[pos_max], x[pos_min]);
    let abs_max = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let pct = |p: f64| percentile(&sorted, p);
    let rel = |v: f64| div(v, abs_max);

    let mean = x.iter().sum::<f64>() / nf;
    let median = pct(0.5);
    let mode = mode(&x);
    let central = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / nf;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let var = (n >= 2).then(|| x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0));
    let std = var.map(f64::sqrt);
    let positive = x.iter().all(|&v| v > 0.0);
    let logs: Vec<f64> = if positive { x.iter().map(|v| v.ln()).collect() } else { Vec::new() };

    let range = max - min;
    let iqr = pct(0.75) - pct(0.25);
    let idr = pct(0.9) - pct(0.1);
    let ipr = pct(0.99) - pct(0.01);

    let mut set = |id: StatisticId, v: Option<f64>| out[id as usize] = v.filter(|v| v.is_finite());
    use StatisticId::*;
    set(Max, Some(max));
    set(Min, Some(min));
    set(PosMax, Some(pos_max as f64));
    set(PosMin, Some(pos_min as f64));
    set(RelPosMax, Some(pos_max as f64 / nf));
    set(RelPosMin, Some(pos_min as f64 / nf));
    set(Range, Some(range));
    set(RelRange, rel(range));
    set(Iqr, Some(iqr));
    set(RelIqr, rel(iqr));
    set(Idr, Some(idr));
    set(RelIdr, rel(idr));
    set(Ipr, Some(ipr));
    set(RelIpr, rel(ipr));
    set(StudentizedRange, std.and_then(|s| div(range, s)));
    set(Mean, Some(mean));
    set(GeoMean, positive.then(|| (logs.iter().sum::<f64>() / nf).exp()));
    set(HarmMean, positive.then(|| nf / x.iter().map(|v| 1.0 / v).sum::<f64>()));
    for (id, k) in [(TrimmedMean10, 10), (TrimmedMean20, 20), (TrimmedMean30, 30), (TrimmedMean40, 40), (TrimmedMean50, 50)] {
        set(id, Some(trimmed_mean(&sorted, k)));
    }
    set(Median, Some(median));
    set(Mode, Some(mode));
    set(Var, var);
    set(Std, std);
    set(MadMean, Some(x.iter().map(|v| (v - mean).abs()).sum::<f64>() / nf));
    let mut dev: Vec<f64> = x.iter().map(|v| (v - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    set(MadMedian, Some(percentile(&dev, 0.5)));
    set(
        GeoStd,
        (positive && n >= 2).then(|| {
            let lm = logs.iter().sum::<f64>() / nf;
            (logs.iter().map(|l| (l - lm).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt().exp()
        }),
    );
    set(CoefVar, std.and_then(|s| div(s, mean)));
    set(IndexDispersion, var.and_then(|v| div(v, mean)));
    set(Moment3, Some(m3));
    set(Moment4, Some(m4));
    set(Moment5, Some(central(5)));
    set(Moment6, Some(central(6)));
    set(Kurtosis, div(m4, m2 * m2));
    set(Skewness, div(m3, m2.powf(1.5)));
    set(PearsonSkew1, std.and_then(|s| div(mean - mode, s)));
    set(PearsonSkew2, std.and_then(|s| div(3.0 * (mean - median), s)));
    for (id, p) in [
        (Percentile1, 0.01), (Percentile5, 0.05), (Percentile10, 0.1), (Percentile20, 0.2),
        (Percentile30, 0.3), (Percentile40, 0.4), (Percentile60, 0.6), (Percentile70, 0.7),
        (Percentile80, 0.8), (Percentile90, 0.9), (Percentile95, 0.95), (Percentile99, 0.99),
        (Quartile1, 0.25), (Quartile3, 0.75),
    ] {
        set(id, Some(pct(p)));
    }
    if let Ok(line) = fit_line(&x, 0, n.saturating_sub(1)) {
        set(RegrSlope, Some(line.slope));
        set(RegrOffset, Some(line.offset));
        set(RegrError, Some(line.rss_error));
    }
    set(Modulation, div(max - min, max + min));
    set(ShannonEntropy, Some(shannon_entropy(&x)));
    set(Renyi2Entropy, Some(renyi2_entropy(&x)));
    out
}

/// Aggregates a sequence with missing entries, skipping the missing ones.
pub fn aggregate_optional(seq: &[Option<f64>]) -> Statistics {
    let present: Vec<f64> = seq.iter().flatten().copied().collect();
    aggregate(&present)
}

/// Named `(column, value)` pairs for one local feature.
pub fn aggregate_named(local: &str, seq: &[Option<f64>]) -> Vec<(String, Option<f64>)> {
    let stats = aggregate_optional(seq);
    StatisticId::ALL.iter().map(|&id| (feature_name(local, id), stats[id as usize])).collect()
}
