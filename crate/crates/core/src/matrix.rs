//! Labelled feature matrices and their CSV form.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, VoxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Healthy,
    Pathological,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Pathological
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Healthy => "healthy",
            Label::Pathological => "pathological",
        })
    }
}

impl FromStr for Label {
    type Err = VoxError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "healthy" => Ok(Label::Healthy),
            "pathological" => Ok(Label::Pathological),
            other => Err(VoxError::Manifest(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "M",
            Gender::F => "F",
        })
    }
}

impl FromStr for Gender {
    type Err = VoxError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(Gender::M),
            "f" | "female" => Ok(Gender::F),
            other => Err(VoxError::Manifest(format!("unknown gender {other:?}"))),
        }
    }
}

/// Per-recording metadata carried alongside the feature values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub path: String,
    pub label: Label,
    pub speaker: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub meta: Vec<RowMeta>,
}

const META_COLUMNS: [&str; 4] = ["path", "label", "speaker", "gender"];

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: Vec<Vec<Option<f64>>>, meta: Vec<RowMeta>) -> Result<Self> {
        if rows.len() != meta.len() {
            return Err(VoxError::InvalidParameter("row and metadata counts differ".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(VoxError::InvalidParameter(format!(
                "row has {} values for {} columns",
                r.len(),
                names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(VoxError::InvalidParameter(format!("duplicate column {dup:?}")));
        }
        Ok(FeatureMatrix { names, rows, meta })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.meta.iter().map(|m| m.label).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            rows: self.rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Rows of one gender; `None` keeps every row.
    pub fn with_gender(&self, gender: Option<Gender>) -> FeatureMatrix {
        match gender {
            None => self.clone(),
            Some(g) => {
                let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| self.meta[i].gender == g).collect();
                self.select_rows(&idx)
            }
        }
    }

    /// Missing entries become `fill`.
    pub fn dense(&self, fill: f64) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|v| v.unwrap_or(fill)).collect()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(META_COLUMNS.iter().copied().chain(self.names.iter().map(String::as_str)))?;
        for (meta, row) in self.meta.iter().zip(&self.rows) {
            let mut rec = vec![meta.path.clone(), meta.label.to_string(), meta.speaker.clone(), meta.gender.to_string()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.len() < 4 || header.iter().take(4).ne(META_COLUMNS.iter().copied()) {
            return Err(VoxError::Format {
                path: path.to_path_buf(),
                reason: format!("feature CSV must start with columns {META_COLUMNS:?}"),
            });
        }
        let names: Vec<String> = header.iter().skip(4).map(str::to_string).collect();
        let (mut rows, mut meta) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            meta.push(RowMeta {
                path: rec[0].to_string(),
                label: rec[1].parse()?,
                speaker: rec[2].to_string(),
                gender: rec[3].parse()?,
            });
            let row = rec
                .iter()
                .skip(4)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|e| VoxError::Format {
                            path: path.to_path_buf(),
                            reason: format!("bad number {cell:?}: {e}"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        FeatureMatrix::new(names, rows, meta)
    }
}
