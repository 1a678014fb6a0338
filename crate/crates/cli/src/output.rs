//! CSV and JSON data files with a metadata header.
//!
//! CSV floats carry 12 significant digits. JSON carries the shortest
//! representation that parses back to the same `f64`.

use std::io::{self, Write};
use std::path::Path;

use quasient::analysis::{classify_quasiparticles, ScanRow};
use quasient::Parity;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Format;

/// Ordered `key: value` metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn to_json(&self) -> serde_json::Map<String, serde_json::Value> {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect()
    }
}

/// A row type with a fixed column order shared by both formats.
pub trait Record: Serialize {
    const COLUMNS: &'static [&'static str];
    fn csv_fields(&self) -> Vec<String>;
}

pub fn float(x: f64) -> String {
    format!("{x:.11e}")
}

fn label(p: Option<Parity>) -> Option<String> {
    p.map(|p| p.symbol().to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub model: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub cut: usize,
    pub boundary: String,
    pub modes: String,
    pub reflection: Option<String>,
    pub parity: Option<String>,
    pub momentum: Vec<f64>,
    #[serde(rename = "S_ground")]
    pub s_ground: f64,
    #[serde(rename = "S_excited")]
    pub s_excited: f64,
    #[serde(rename = "dS")]
    pub ds: f64,
    #[serde(rename = "dS_over_log2")]
    pub ds_over_log2: f64,
    pub k_class: u32,
    pub is_regular: bool,
}

impl OutputRow {
    pub fn from_scan(row: &ScanRow, threshold: f64) -> Self {
        let class = classify_quasiparticles(row.ds, threshold);
        Self {
            model: row.model.clone(),
            n: row.n,
            cut: row.cut,
            boundary: row.boundary.as_str().to_string(),
            modes: row.state.render(),
            reflection: label(row.reflection),
            parity: label(row.parity),
            momentum: row.momentum.clone(),
            s_ground: row.s_ground,
            s_excited: row.s_excited,
            ds: row.ds,
            ds_over_log2: row.ds_over_log2,
            k_class: class.k,
            is_regular: class.is_regular,
        }
    }
}

impl Record for OutputRow {
    const COLUMNS: &'static [&'static str] = &[
        "model",
        "n",
        "L",
        "boundary",
        "modes",
        "reflection",
        "parity",
        "momentum",
        "S_ground",
        "S_excited",
        "dS",
        "dS_over_log2",
        "k_class",
        "is_regular",
    ];

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.model.clone(),
            self.n.to_string(),
            self.cut.to_string(),
            self.boundary.clone(),
            self.modes.clone(),
            self.reflection.clone().unwrap_or_default(),
            self.parity.clone().unwrap_or_default(),
            self.momentum.iter().map(|&q| float(q)).collect::<Vec<_>>().join(";"),
            float(self.s_ground),
            float(self.s_excited),
            float(self.ds),
            float(self.ds_over_log2),
            self.k_class.to_string(),
            self.is_regular.to_string(),
        ]
    }
}

/// JSON layout: the metadata object and the rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonDocument<R> {
    pub meta: serde_json::Map<String, serde_json::Value>,
    pub rows: Vec<R>,
}

/// Serializes `rows` under `meta`.
pub fn render<R: Record>(meta: &Metadata, rows: &[R], format: Format) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            for (k, v) in meta.entries() {
                writeln!(buf, "# {k}: {v}")?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(R::COLUMNS)?;
            for row in rows {
                w.write_record(row.csv_fields())?;
            }
            w.flush()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Borrowed<'a, R> {
                meta: serde_json::Map<String, serde_json::Value>,
                rows: &'a [R],
            }
            let doc = Borrowed {
                meta: meta.to_json(),
                rows,
            };
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes `rows` to `path`, or to standard output when `path` is `None`.
/// Returns the number of bytes written.
pub fn emit<R: Record>(meta: &Metadata, rows: &[R], format: Format, path: Option<&Path>) -> io::Result<usize> {
    let bytes = render(meta, rows, format)?;
    match path {
        Some(p) => std::fs::write(p, &bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(bytes.len())
}

/// Parses a file written by [`emit`] in JSON format.
pub fn read_json<R: DeserializeOwned>(bytes: &[u8]) -> serde_json::Result<JsonDocument<R>> {
    serde_json::from_slice(bytes)
}
