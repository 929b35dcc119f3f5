//! Long-format result tables: one row per (sweep value, level, metric).
//! Level 0 holds network-wide metrics.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: Option<f64>,
    pub level: u32,
    pub metric: String,
    pub model: Option<f64>,
    pub sim: Option<f64>,
    pub sim_halfwidth: Option<f64>,
}

impl ResultRow {
    /// `|model - sim|` when both columns are present.
    pub fn abs_diff(&self) -> Option<f64> {
        Some((self.model? - self.sim?).abs())
    }

    fn key(&self) -> (Option<u64>, u32, String) {
        (self.sweep_value.map(f64::to_bits), self.level, self.metric.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table, rejecting duplicate keys.
    pub fn from_rows(rows: Vec<ResultRow>) -> Result<Self, CliError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.key()) {
                return Err(CliError::Validation(vec![format!(
                    "duplicate result row: sweep {:?}, level {}, metric {}",
                    r.sweep_value, r.level, r.metric
                )]));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, sweep_value: Option<f64>, level: u32, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value.map(f64::to_bits) == sweep_value.map(f64::to_bits) && r.level == level && r.metric == metric)
    }

    /// Largest `|model - sim|` over rows of `metric`.
    pub fn max_abs_diff(&self, metric: &str) -> Option<f64> {
        self.rows.iter().filter(|r| r.metric == metric).filter_map(ResultRow::abs_diff).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(["sweep_value", "level", "metric", "model", "sim", "sim_halfwidth"]).map_err(io)?;
        }
        for r in &self.rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, CliError> {
        let mut rd = csv::Reader::from_reader(input);
        let rows = rd
            .deserialize()
            .collect::<Result<Vec<ResultRow>, _>>()
            .map_err(|e| CliError::Parse { origin: "csv".into(), message: e.to_string() })?;
        Self::from_rows(rows)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(out, self).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write<W: Write>(&self, format: OutputFormat, mut out: W) -> Result<(), CliError> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => {
                self.write_json(&mut out)?;
                writeln!(out).map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}
