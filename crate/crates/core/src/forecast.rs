//! Next-slot forecasters and the forecast CSV exchange format.
//!
//! Forecasters are open loop: to predict slot `k + 1` they receive the
//! measured series up to and including slot `k` and nothing later.
//!
//! Forecast CSV (UTF-8, `\n` line ends, `.` decimal point):
//!
//! ```text
//! node_id,slot_index,p_gen_hat_kw,p_load_hat_kw
//! home1,0,0,-0.31
//! ```
//!
//! Load forecasts are `<= 0` kW. Slot indices must increase strictly per node.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::SLOTS_PER_DAY;
use crate::error::{Error, Result};

pub const FORECAST_HEADER: [&str; 4] = ["node_id", "slot_index", "p_gen_hat_kw", "p_load_hat_kw"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastPair {
    pub p_gen_hat: f64,
    pub p_load_hat: f64,
}

impl ForecastPair {
    pub fn new(p_gen_hat: f64, p_load_hat: f64) -> Self {
        Self {
            p_gen_hat,
            p_load_hat,
        }
    }

    pub fn net(&self) -> f64 {
        self.p_gen_hat + self.p_load_hat
    }

    /// Clamps generation to `>= 0` and load to `<= 0`. The flag reports
    /// whether anything had to be clamped.
    pub fn sanitized(self) -> Result<(Self, bool)> {
        if !(self.p_gen_hat.is_finite() && self.p_load_hat.is_finite()) {
            return Err(Error::invalid("non-finite forecast"));
        }
        let clamped = self.p_gen_hat < 0.0 || self.p_load_hat > 0.0;
        Ok((
            Self {
                p_gen_hat: self.p_gen_hat.max(0.0),
                p_load_hat: self.p_load_hat.min(0.0),
            },
            clamped,
        ))
    }
}

/// Measurements of one node for slots `0..=k`, indexed by slot.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub gen: &'a [f64],
    pub load: &'a [f64],
}

impl<'a> History<'a> {
    pub fn new(gen: &'a [f64], load: &'a [f64]) -> Self {
        debug_assert_eq!(gen.len(), load.len());
        Self { gen, load }
    }

    /// The slot the next forecast is for.
    pub fn next_slot(&self) -> usize {
        self.gen.len()
    }
}

pub trait Forecaster: Sync {
    fn name(&self) -> &str;

    /// Forecast for slot `history.next_slot()` of `node`.
    fn forecast(&self, node: &str, history: &History<'_>) -> Result<ForecastPair>;
}

/// Repeats the last measurement.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn name(&self) -> &str {
        "persistence"
    }

    fn forecast(&self, node: &str, history: &History<'_>) -> Result<ForecastPair> {
        match (history.gen.last(), history.load.last()) {
            (Some(&g), Some(&l)) => Ok(ForecastPair::new(g, l)),
            _ => Err(Error::invalid(format!("{node}: persistence needs at least one sample"))),
        }
    }
}

/// Repeats the value observed one period (default: one day) earlier.
#[derive(Debug, Clone, Copy)]
pub struct SeasonalNaive {
    pub period: usize,
}

impl Default for SeasonalNaive {
    fn default() -> Self {
        Self {
            period: SLOTS_PER_DAY,
        }
    }
}

impl Forecaster for SeasonalNaive {
    fn name(&self) -> &str {
        "seasonal-naive"
    }

    fn forecast(&self, node: &str, history: &History<'_>) -> Result<ForecastPair> {
        let n = history.gen.len();
        if self.period == 0 || n < self.period {
            return Err(Error::invalid(format!(
                "{node}: seasonal-naive needs {} samples of history, got {n}",
                self.period
            )));
        }
        Ok(ForecastPair::new(
            history.gen[n - self.period],
            history.load[n - self.period],
        ))
    }
}

/// Serves precomputed forecasts keyed by `(node, slot)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileForecaster {
    table: HashMap<(String, usize), ForecastPair>,
}

impl FileForecaster {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, label: &str) -> Result<Self> {
        let rows = read_forecast_csv(reader, label)?;
        let table = rows
            .into_iter()
            .map(|r| ((r.node_id, r.slot), r.pair))
            .collect();
        Ok(Self { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, node: &str, slot: usize) -> Result<ForecastPair> {
        self.table
            .get(&(node.to_string(), slot))
            .copied()
            .ok_or_else(|| Error::MissingForecast {
                node: node.to_string(),
                slot,
            })
    }
}

impl Forecaster for FileForecaster {
    fn name(&self) -> &str {
        "file"
    }

    fn forecast(&self, node: &str, history: &History<'_>) -> Result<ForecastPair> {
        self.get(node, history.next_slot())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub node_id: String,
    pub slot: usize,
    pub pair: ForecastPair,
}

pub fn read_forecast_csv<R: Read>(reader: R, label: &str) -> Result<Vec<ForecastRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let err = |row: usize, message: String| Error::Csv {
        path: label.to_string(),
        row,
        message,
    };
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(FORECAST_HEADER.iter().copied()) {
        return Err(err(
            1,
            format!("expected header {}", FORECAST_HEADER.join(",")),
        ));
    }
    let mut last_slot: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != 4 {
            return Err(err(row, format!("expected 4 fields, found {}", record.len())));
        }
        let node_id = record[0].to_string();
        if node_id.is_empty() {
            return Err(err(row, "empty node_id".into()));
        }
        let slot: usize = record[1]
            .parse()
            .map_err(|_| err(row, format!("slot_index {:?} is not an integer", &record[1])))?;
        let parse = |s: &str, name: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| err(row, format!("{name} {s:?} is not a number")))?;
            if !v.is_finite() {
                return Err(err(row, format!("{name} is not finite")));
            }
            Ok(v)
        };
        let gen = parse(&record[2], "p_gen_hat_kw")?;
        let load = parse(&record[3], "p_load_hat_kw")?;
        if load > 0.0 {
            return Err(err(row, format!("p_load_hat_kw {load} must be <= 0")));
        }
        if let Some(&prev) = last_slot.get(&node_id) {
            if slot <= prev {
                return Err(err(
                    row,
                    format!("slot_index {slot} of node {node_id} does not follow {prev}"),
                ));
            }
        }
        last_slot.insert(node_id.clone(), slot);
        rows.push(ForecastRow {
            node_id,
            slot,
            pair: ForecastPair::new(gen, load),
        });
    }
    Ok(rows)
}

pub fn write_forecast_csv<W: Write>(mut writer: W, rows: &[ForecastRow]) -> std::io::Result<()> {
    writeln!(writer, "{}", FORECAST_HEADER.join(","))?;
    for r in rows {
        writeln!(
            writer,
            "{},{},{},{}",
            r.node_id, r.slot, r.pair.p_gen_hat, r.pair.p_load_hat
        )?;
    }
    Ok(())
}

/// Root mean squared error between two equal-length series.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() || predicted.is_empty() {
        return Err(Error::invalid(format!(
            "rmse needs equal non-empty series, got {} and {}",
            predicted.len(),
            actual.len()
        )));
    }
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / predicted.len() as f64).sqrt())
}
