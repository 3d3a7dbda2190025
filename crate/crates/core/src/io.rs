//! Run configuration files and record serialization.
//!
//! Tables are comma-separated with a header row; floats are written with 17
//! significant digits (`{:.16e}`), which round-trips every `f64` exactly, and
//! absent values are empty cells. JSON output is one object per line.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::harness::{default_lambda_grid, SweepConfig, SweepRow};
use crate::solver::SolverOptions;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Built-in configurations, selectable by name.
pub const PRESETS: &[(&str, &str)] = &[("fig1", include_str!("../presets/fig1.toml"))];

/// Flat run configuration; every key mirrors a command-line flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub sigma2: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub critical_multiples: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub check_every: Option<usize>,
    pub warm_start: Option<bool>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub format: Option<Format>,
    pub verbosity: Option<u8>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        Self::from_toml(text)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        overlay_fields!(self, other; n, m, k, sigma2, lambda, critical_multiples, trials, seed,
            tol, max_iters, check_every, warm_start, threads, out, format, verbosity);
        self
    }

    pub fn dims(&self) -> Result<Dims> {
        match (self.n, self.m, self.k) {
            (Some(n), Some(m), Some(k)) => Dims::new(n, m, k),
            _ => Err(Error::Config("n, m and k are required".into())),
        }
    }

    pub fn solver_opts(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol: self.tol.unwrap_or(d.tol),
            check_every: self.check_every.unwrap_or(d.check_every),
        }
    }

    /// Builds and validates the sweep. Without a λ list the default grid is
    /// used; trials default to 20, the seed to 0.
    pub fn to_sweep_config(&self) -> Result<SweepConfig> {
        let dims = self.dims()?;
        let lambda_list = match &self.lambda {
            Some(l) => l.clone(),
            None => default_lambda_grid(dims)?,
        };
        let cfg = SweepConfig {
            dims,
            sigma2_list: self
                .sigma2
                .clone()
                .ok_or_else(|| Error::Config("sigma2 is required".into()))?,
            lambda_list,
            critical_multiples: self.critical_multiples.clone().unwrap_or_default(),
            trials: self.trials.unwrap_or(20),
            base_seed: self.seed.unwrap_or(0),
            solver_opts: self.solver_opts(),
            warm_start: self.warm_start.unwrap_or(true),
            threads: self.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn flat_object<T: Serialize>(record: &T) -> Result<serde_json::Map<String, Value>> {
    match serde_json::to_value(record).map_err(|e| Error::Io(e.to_string()))? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Io("record does not serialize to an object".into())),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
        Value::Number(n) => format_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Incremental writer of records in either format.
pub struct RecordWriter<W: Write> {
    format: Format,
    csv: Option<csv::Writer<W>>,
    raw: Option<W>,
    wrote_header: bool,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W, format: Format) -> Self {
        match format {
            Format::Csv => RecordWriter {
                format,
                csv: Some(csv::Writer::from_writer(inner)),
                raw: None,
                wrote_header: false,
            },
            Format::Json => RecordWriter {
                format,
                csv: None,
                raw: Some(inner),
                wrote_header: false,
            },
        }
    }

    /// Appends records and flushes.
    pub fn write<T: Serialize>(&mut self, records: &[T]) -> Result<()> {
        let io_err = |e: csv::Error| Error::Io(e.to_string());
        for record in records {
            let map = flat_object(record)?;
            match self.format {
                Format::Csv => {
                    let w = self.csv.as_mut().expect("csv writer");
                    if !self.wrote_header {
                        w.write_record(map.keys()).map_err(io_err)?;
                        self.wrote_header = true;
                    }
                    w.write_record(map.values().map(cell)).map_err(io_err)?;
                }
                Format::Json => {
                    let w = self.raw.as_mut().expect("json writer");
                    serde_json::to_writer(&mut *w, &map).map_err(|e| Error::Io(e.to_string()))?;
                    w.write_all(b"\n")?;
                }
            }
        }
        match self.format {
            Format::Csv => self.csv.as_mut().expect("csv writer").flush()?,
            Format::Json => self.raw.as_mut().expect("json writer").flush()?,
        }
        Ok(())
    }
}

/// Reads a sweep table written in either format.
pub fn read_sweep_rows<R: Read>(reader: R, format: Format) -> Result<Vec<SweepRow>> {
    match format {
        Format::Csv => csv::Reader::from_reader(reader)
            .deserialize()
            .map(|r| r.map_err(|e| Error::Io(e.to_string())))
            .collect(),
        Format::Json => {
            let mut text = String::new();
            let mut reader = reader;
            reader.read_to_string(&mut text)?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).map_err(|e| Error::Io(e.to_string())))
                .collect()
        }
    }
}
