//! Reading sample files and bench config files.

use std::path::Path;

use serde::Deserialize;

use crate::data::SampleSet;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

/// On-disk sample formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Comma separated, one sample per row, optional non-numeric header row.
    Csv,
    /// One JSON array of numbers per line.
    Jsonl,
}

impl DataFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn finish(rows: Vec<f64>, dim: Option<usize>, line: usize) -> Result<SampleSet> {
    let dim = dim.ok_or_else(|| parse_error(line, "no samples found"))?;
    SampleSet::from_flat(rows, dim).map_err(|e| parse_error(line, e.to_string()))
}

/// Parses CSV text. The first row is treated as a header when any of its
/// fields is not a number.
pub fn parse_csv(text: &str) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut last_line = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(index + 1);
        last_line = line;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if index == 0 => continue,
            Err(e) => return Err(parse_error(line, format!("non-numeric field: {e}"))),
        };
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(parse_error(line, format!("field {} is not finite", bad + 1)));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_error(
                    line,
                    format!("expected {d} fields, found {}", values.len()),
                ))
            }
            _ => {}
        }
        data.extend(values);
    }
    finish(data, dim, last_line)
}

/// Parses JSON lines, each a numeric array of the same length.
pub fn parse_jsonl(text: &str) -> Result<SampleSet> {
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut last_line = 0;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        last_line = line;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let values: Vec<f64> =
            serde_json::from_str(raw).map_err(|e| parse_error(line, format!("expected a numeric array: {e}")))?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_error(
                    line,
                    format!("expected {d} values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        data.extend(values);
    }
    finish(data, dim, last_line)
}

pub fn parse_samples(text: &str, format: DataFormat) -> Result<SampleSet> {
    match format {
        DataFormat::Csv => parse_csv(text),
        DataFormat::Jsonl => parse_jsonl(text),
    }
}

/// `[experiment]` table of a bench config file. Every key is optional; CLI
/// flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub delta: Option<f64>,
    pub k_rule: Option<String>,
    pub odd_k: Option<bool>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub multipliers: Option<Vec<f64>>,
    pub probes: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub threads: Option<usize>,
    pub shuffle: Option<bool>,
}

/// A bench config file: optional `[distribution]` and `[experiment]` tables.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub distribution: Option<DistributionSpec>,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl BenchFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: BenchFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            parse_error(line, e.message().to_string())
        })?;
        if let Some(spec) = &file.distribution {
            spec.validate()?;
        }
        Ok(file)
    }
}
