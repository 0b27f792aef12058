//! EEG recording and cohort manifest ingestion.
//!
//! Two on-disk layouts are accepted, selected explicitly by [`Format`]:
//!
//! - `csv_matrix`: one row per sample, one column per channel, values separated
//!   by commas and/or whitespace.
//! - `column_concat`: a single column of `T * N` numbers, channel-major (the
//!   first `T` values are channel 1).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    CsvMatrix,
    ColumnConcat,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv_matrix" => Ok(Format::CsvMatrix),
            "column_concat" => Ok(Format::ColumnConcat),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (expected csv_matrix or column_concat)"
            ))),
        }
    }
}

/// Index of a class within [`ClassNames`]; 0 is the positive class.
pub type Label = usize;

/// Ordered class names; the first entry is the positive class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNames(pub [String; 2]);

impl Default for ClassNames {
    fn default() -> Self {
        ClassNames(["SZ".to_string(), "HC".to_string()])
    }
}

impl ClassNames {
    pub fn index_of(&self, name: &str) -> Option<Label> {
        self.0.iter().position(|c| c == name)
    }

    pub fn name(&self, label: Label) -> &str {
        &self.0[label]
    }
}

/// An N-channel, T-sample recording stored sample-major (`data[t * N + ch]`).
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    channels: usize,
    samples: usize,
    rate: f64,
    data: Vec<f64>,
    pub subject_id: String,
    pub label: Option<Label>,
}

impl EegRecording {
    /// Builds a recording from a sample-major `T x N` buffer.
    pub fn new(channels: usize, rate: f64, data: Vec<f64>, subject_id: impl Into<String>) -> Result<Self> {
        if channels < 2 {
            return Err(Error::validation(format!("need at least 2 channels, got {channels}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::validation(format!("sampling rate must be positive, got {rate}")));
        }
        if data.len() % channels != 0 {
            return Err(Error::shape(format!(
                "{} values do not divide into {channels} channels",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value at sample {}, channel {}",
                pos / channels,
                pos % channels
            )));
        }
        Ok(Self {
            channels,
            samples: data.len() / channels,
            rate,
            data,
            subject_id: subject_id.into(),
            label: None,
        })
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Channel values at time index `t`.
    pub fn sample(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn get(&self, t: usize, ch: usize) -> f64 {
        self.data[t * self.channels + ch]
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        (0..self.samples).map(|t| self.get(t, ch)).collect()
    }

    /// Serializes as a `csv_matrix` file. Values use the shortest exact
    /// decimal representation, so reloading is lossless.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 12);
        for t in 0..self.samples {
            for (ch, v) in self.sample(t).iter().enumerate() {
                if ch > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Serializes as a `column_concat` file.
    pub fn to_column_concat(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 12);
        for ch in 0..self.channels {
            for t in 0..self.samples {
                writeln!(out, "{}", self.get(t, ch)).unwrap();
            }
        }
        out
    }
}

fn parse_tokens(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed number {tok:?}"),
            })
        })
        .collect()
}

/// Parses recording text in the given layout.
pub fn parse_recording(
    text: &str,
    format: Format,
    channels: usize,
    rate: f64,
    subject_id: &str,
) -> Result<EegRecording> {
    if channels == 0 {
        return Err(Error::validation("channel count must be positive"));
    }
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = parse_tokens(trimmed, line_no)?;
        if format == Format::CsvMatrix && row.len() != channels {
            return Err(Error::shape(format!(
                "line {line_no}: expected {channels} columns, found {}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("line {line_no}: non-finite value {v}")));
        }
        values.extend(row);
    }
    let data = match format {
        Format::CsvMatrix => values,
        Format::ColumnConcat => {
            if values.len() % channels != 0 {
                return Err(Error::shape(format!(
                    "{} values are not divisible by {channels} channels",
                    values.len()
                )));
            }
            let samples = values.len() / channels;
            let mut data = vec![0.0; values.len()];
            for ch in 0..channels {
                for t in 0..samples {
                    data[t * channels + ch] = values[ch * samples + t];
                }
            }
            data
        }
    };
    EegRecording::new(channels, rate, data, subject_id)
}

/// Loads a recording; the subject id defaults to the file stem.
pub fn load_recording(path: &Path, format: Format, channels: usize, rate: f64) -> Result<EegRecording> {
    let text = fs::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_recording(&text, format, channels, rate, &id)
}

/// Per-channel z-score with population standard deviation. Constant channels
/// become all zeros and are logged.
pub fn standardize(rec: &EegRecording) -> EegRecording {
    let n = rec.channels;
    let t_len = rec.samples as f64;
    let mut data = rec.data.clone();
    for ch in 0..n {
        let mean = (0..rec.samples).map(|t| rec.get(t, ch)).sum::<f64>() / t_len;
        let var = (0..rec.samples)
            .map(|t| (rec.get(t, ch) - mean).powi(2))
            .sum::<f64>()
            / t_len;
        let sd = var.sqrt();
        // Treat spread at rounding level as constant.
        let constant = !(sd > 1e-12 * mean.abs().max(1.0));
        if constant {
            warn!("subject {}: channel {ch} is constant; mapped to zeros", rec.subject_id);
        }
        for t in 0..rec.samples {
            let v = &mut data[t * n + ch];
            *v = if constant { 0.0 } else { (*v - mean) / sd };
        }
    }
    EegRecording { data, ..rec.clone() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub subject_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortManifest {
    pub entries: Vec<ManifestEntry>,
    pub classes: ClassNames,
}

impl CohortManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

/// Parses manifest text (`path,subject_id,label` header). Relative paths are
/// resolved against `base`.
pub fn parse_manifest(text: &str, classes: &ClassNames, base: Option<&Path>) -> Result<CohortManifest> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::validation("empty manifest"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["path", "subject_id", "label"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `path,subject_id,label`, found {header:?}"),
        });
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [path, id, label] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        };
        let label = classes.index_of(label).ok_or_else(|| {
            Error::validation(format!(
                "row {line_no}: unknown label {label:?} (expected {} or {})",
                classes.0[0], classes.0[1]
            ))
        })?;
        if !seen.insert(id.to_string()) {
            return Err(Error::validation(format!("row {line_no}: duplicate subject_id {id:?}")));
        }
        let path = PathBuf::from(path);
        let path = match base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path,
        };
        entries.push(ManifestEntry { path, subject_id: id.to_string(), label });
    }
    if entries.is_empty() {
        return Err(Error::validation("empty manifest"));
    }
    Ok(CohortManifest { entries, classes: classes.clone() })
}

pub fn load_manifest(path: &Path, classes: &ClassNames) -> Result<CohortManifest> {
    let text = fs::read_to_string(path)?;
    parse_manifest(&text, classes, path.parent())
}
