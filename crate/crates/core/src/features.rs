//! Per-window statistics and feature matrices.

use std::io::{Read, Write};

use crate::acquisition::Window;
use crate::element::ElementKind;
use crate::error::{Error, Result};

/// Statistic names in column order.
pub const STAT_NAMES: [&str; 7] = ["average", "variance", "sum", "median", "maximum", "minimum", "range"];

pub const STATS_PER_CHANNEL: usize = STAT_NAMES.len();

/// Mean, population variance, sum, median, max, min and range of a window.
pub fn window_stats(samples: &[u16]) -> Result<[f64; 7]> {
    if samples.is_empty() {
        return Err(Error::Empty("window samples"));
    }
    let n = samples.len() as f64;
    let sum: f64 = samples.iter().map(|&s| s as f64).sum();
    let mean = sum / n;
    // Summing in sorted order makes the variance independent of sample order.
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let variance = sorted
        .iter()
        .map(|&s| {
            let d = s as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] as f64 + sorted[mid] as f64) / 2.0
    };
    let max = sorted[sorted.len() - 1] as f64;
    let min = sorted[0] as f64;
    Ok([mean, variance, sum, median, max, min, max - min])
}

pub fn feature_names(selection: &[ElementKind]) -> Vec<String> {
    selection
        .iter()
        .flat_map(|k| STAT_NAMES.iter().map(move |s| format!("{k}_{s}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: String,
    pub case_id: String,
}

/// Rows of windowed features over a fixed channel selection. Columns are
/// channel-major in canonical element order, seven statistics per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub channel_selection: Vec<ElementKind>,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(channel_selection: Vec<ElementKind>) -> Self {
        let feature_names = feature_names(&channel_selection);
        FeatureMatrix {
            rows: Vec::new(),
            channel_selection,
            feature_names,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Case ids in order of first appearance.
    pub fn case_ids(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|c| *c == r.case_id) {
                out.push(r.case_id.clone());
            }
        }
        out
    }

    /// Distinct labels, sorted.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.rows.iter().map(|r| r.label.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.channel_selection.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.channel_selection {
            return Err(Error::Validation("channel selection must be canonical and unique".into()));
        }
        if self.feature_names != feature_names(&self.channel_selection) {
            return Err(Error::Validation("feature names do not match the channel selection".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.values.len() != self.n_features() {
                return Err(Error::Validation(format!(
                    "row {i} has {} values, expected {}",
                    r.values.len(),
                    self.n_features()
                )));
            }
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("row {i} has a non-finite value")));
            }
        }
        Ok(())
    }

    /// Keeps only the columns of `channels`, which must be present.
    pub fn select_channels(&self, channels: &[ElementKind]) -> Result<FeatureMatrix> {
        let mut wanted = channels.to_vec();
        wanted.sort();
        wanted.dedup();
        if wanted.is_empty() {
            return Err(Error::Validation("empty channel selection".into()));
        }
        let mut columns = Vec::with_capacity(wanted.len() * STATS_PER_CHANNEL);
        for k in &wanted {
            let pos = self
                .channel_selection
                .iter()
                .position(|c| c == k)
                .ok_or(Error::MissingChannel(*k))?;
            columns.extend(pos * STATS_PER_CHANNEL..(pos + 1) * STATS_PER_CHANNEL);
        }
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureVector {
                values: columns.iter().map(|&c| r.values[c]).collect(),
                label: r.label.clone(),
                case_id: r.case_id.clone(),
            })
            .collect();
        Ok(FeatureMatrix {
            rows,
            feature_names: feature_names(&wanted),
            channel_selection: wanted,
        })
    }

    /// Writes the matrix as CSV: one column per feature, then `label` and
    /// `case_id`. Values use the shortest representation that parses back
    /// to the same number.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        header.push("label".into());
        header.push("case_id".into());
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(header.len());
        for r in &self.rows {
            record.clear();
            record.extend(r.values.iter().map(|v| v.to_string()));
            record.push(r.label.clone());
            record.push(r.case_id.clone());
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
        let n = header.len();
        if n < 2 || &header[n - 2] != "label" || &header[n - 1] != "case_id" {
            return Err(Error::parse(1, "header must end with label,case_id"));
        }
        let names: Vec<String> = header.iter().take(n - 2).map(String::from).collect();
        if names.is_empty() || names.len() % STATS_PER_CHANNEL != 0 {
            return Err(Error::parse(1, format!("{} feature columns is not a multiple of 7", names.len())));
        }
        let mut selection = Vec::new();
        for chunk in names.chunks(STATS_PER_CHANNEL) {
            let channel = chunk[0]
                .split('_')
                .next()
                .unwrap_or_default()
                .parse::<ElementKind>()
                .map_err(|e| Error::parse(1, e.to_string()))?;
            selection.push(channel);
        }
        if feature_names(&selection) != names {
            return Err(Error::parse(1, "feature columns are not in canonical order"));
        }
        let mut matrix = FeatureMatrix::new(selection);
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            if rec.len() != n {
                return Err(Error::parse(line, format!("expected {n} fields, got {}", rec.len())));
            }
            let mut values = Vec::with_capacity(n - 2);
            for (j, cell) in rec.iter().take(n - 2).enumerate() {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, format!("column {}: '{cell}' is not a number", names[j])))?;
                if !v.is_finite() {
                    return Err(Error::parse(line, format!("column {}: non-finite value", names[j])));
                }
                values.push(v);
            }
            let label = rec[n - 2].to_string();
            if label.is_empty() {
                return Err(Error::parse(line, "empty label"));
            }
            matrix.rows.push(FeatureVector {
                values,
                label,
                case_id: rec[n - 1].to_string(),
            });
        }
        Ok(matrix)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Validation(format!("csv: {other:?}")),
    }
}

/// One feature row per window over the selected channels.
pub fn featurize(windows: &[Window], selection: &[ElementKind]) -> Result<FeatureMatrix> {
    let mut sel = selection.to_vec();
    sel.sort();
    sel.dedup();
    if sel.is_empty() {
        return Err(Error::Validation("empty channel selection".into()));
    }
    let mut matrix = FeatureMatrix::new(sel);
    matrix.rows.reserve(windows.len());
    for w in windows {
        let mut values = Vec::with_capacity(matrix.n_features());
        for k in &matrix.channel_selection {
            let digits = w.digits.get(k).ok_or(Error::MissingChannel(*k))?;
            values.extend_from_slice(&window_stats(digits)?);
        }
        matrix.rows.push(FeatureVector {
            values,
            label: w.label.clone(),
            case_id: w.case_id.clone(),
        });
    }
    Ok(matrix)
}

/// Quantizes, windows and featurizes each trace, concatenating rows in
/// trace order.
pub fn featurize_traces(
    traces: &[crate::signal::VoltageTrace],
    adc: &crate::acquisition::AdcConfig,
    window_seconds: f64,
    selection: &[ElementKind],
) -> Result<FeatureMatrix> {
    let digits = traces
        .iter()
        .map(|t| crate::acquisition::quantize(t, adc))
        .collect::<Result<Vec<_>>>()?;
    featurize_digit_traces(&digits, window_seconds, selection)
}

pub fn featurize_digit_traces(
    traces: &[crate::acquisition::DigitTrace],
    window_seconds: f64,
    selection: &[ElementKind],
) -> Result<FeatureMatrix> {
    let mut windows = Vec::new();
    for t in traces {
        windows.extend(crate::acquisition::windowize(t, window_seconds)?);
    }
    featurize(&windows, selection)
}
