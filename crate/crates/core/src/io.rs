//! File formats: recording CSVs, the dataset manifest, and the feature
//! matrix CSV that connects extraction to the classifier.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Recording, WindowFeatures, CHANNELS_14};
use crate::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Recording CSV, relative to the manifest's directory.
    pub file: PathBuf,
    pub subject: String,
    pub game: String,
    pub label: ClassId,
    #[serde(default)]
    pub sample_rate: Option<f64>,
}

/// Lists recordings in stream order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    /// Channels to read; defaults to the 14-channel montage.
    #[serde(default)]
    pub channels: Option<Vec<String>>,
    pub recordings: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_rate() -> f64 {
    128.0
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn channels(&self) -> Vec<String> {
        self.channels
            .clone()
            .unwrap_or_else(|| CHANNELS_14.iter().map(|s| s.to_string()).collect())
    }

    pub fn load_recording(&self, entry: &ManifestEntry, channels: &[String]) -> Result<Recording> {
        let path = self.base_dir.join(&entry.file);
        let channels_data = read_channels(&path, channels)?;
        Ok(Recording {
            subject: entry.subject.clone(),
            game: entry.game.clone(),
            label: entry.label,
            sample_rate: entry.sample_rate.unwrap_or(self.sample_rate),
            channel_names: channels.to_vec(),
            channels: channels_data,
        })
    }
}

/// Reads the named columns (case-insensitive) of a recording CSV with a
/// header row. Returns one series per requested channel.
pub fn read_channels(path: &Path, channels: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Invalid(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers()?.clone();
    let mut columns = Vec::with_capacity(channels.len());
    for name in channels {
        let idx = headers
            .iter()
            .position(|h| h.trim().trim_matches('"').eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingChannel(format!("{name} in {}", path.display())))?;
        columns.push(idx);
    }
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 2;
        for (k, &idx) in columns.iter().enumerate() {
            let field = record.get(idx).ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                row,
                column: channels[k].clone(),
                message: "missing field".into(),
            })?;
            let value: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                row,
                column: channels[k].clone(),
                message: format!("not a number: {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    row,
                    column: channels[k].clone(),
                    message: "non-finite sample".into(),
                });
            }
            data[k].push(value);
        }
    }
    Ok(data)
}

pub const META_COLUMNS: [&str; 4] = ["subject", "game", "window", "label"];

/// Feature matrix: one row per window, in stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<WindowFeatures>,
}

impl FeatureTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = META_COLUMNS.to_vec();
        header.extend(self.names.iter().map(String::as_str));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.subject.clone(), row.game.clone(), row.window.to_string(), row.label.to_string()];
            rec.extend(row.values.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, path)
    }

    pub fn read_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        for (i, name) in META_COLUMNS.iter().enumerate() {
            if headers.get(i) != Some(*name) {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    row: 1,
                    column: name.to_string(),
                    message: "expected header subject,game,window,label,<features...>".into(),
                });
            }
        }
        let names: Vec<String> = headers.iter().skip(META_COLUMNS.len()).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let row = r + 2;
            let bad = |column: &str, message: String| Error::Malformed {
                path: path.to_path_buf(),
                row,
                column: column.to_string(),
                message,
            };
            if record.len() != headers.len() {
                return Err(bad("*", format!("expected {} fields, got {}", headers.len(), record.len())));
            }
            let window = record[2].parse().map_err(|_| bad("window", format!("{:?}", &record[2])))?;
            let label = record[3].parse().map_err(|_| bad("label", format!("{:?}", &record[3])))?;
            let mut values = Vec::with_capacity(names.len());
            for (k, field) in record.iter().skip(META_COLUMNS.len()).enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| bad(&names[k], format!("not a number: {field:?}")))?;
                values.push(v);
            }
            rows.push(WindowFeatures {
                subject: record[0].to_string(),
                game: record[1].to_string(),
                window,
                label,
                values,
            });
        }
        Ok(FeatureTable { names, rows })
    }

    /// Keeps the given feature columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> Result<FeatureTable> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.names.len()) {
            return Err(Error::Invalid(format!("feature index {bad} out of range")));
        }
        Ok(FeatureTable {
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| WindowFeatures {
                    values: columns.iter().map(|&c| r.values[c]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    /// Column-major copy of the feature values.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.names.len())
            .map(|j| self.rows.iter().map(|r| r.values[j]).collect())
            .collect()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Column indices of the features measured on `channel`.
    pub fn channel_columns(&self, channel: &str) -> Vec<usize> {
        let prefix = format!("{}_", channel.to_ascii_lowercase());
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.to_ascii_lowercase().starts_with(&prefix))
            .map(|(i, _)| i)
            .collect()
    }

    /// Distinct channels in column order.
    pub fn channels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for name in &self.names {
            if let Some(ch) = crate::selection::FeatureMeta::parse(name).channel {
                if !out.contains(&ch) {
                    out.push(ch);
                }
            }
        }
        out
    }
}
