//! Trace ingestion: carbon-intensity and power-sample CSV files, cadence
//! validation, and hourly energy integration.
//!
//! CI files use the header `timestamp,zone,carbon_intensity_gco2_per_kwh`, one
//! row per hour. Power files use `timestamp,node_id,power_watts` at a nominal
//! 20 s cadence. Timestamps are ISO-8601 UTC, e.g. `2022-01-01T00:00:00Z`.

pub mod config;

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{is_hour_aligned, CarbonIntensitySeries, ModelError, PowerSeries, Zone};
use crate::scalar::Scalar;

pub use config::{ClusterConfig, ConfigError, DemandConfig, ScenarioSelection, WorkloadConfig};

pub const CI_HEADER: [&str; 3] = ["timestamp", "zone", "carbon_intensity_gco2_per_kwh"];
pub const POWER_HEADER: [&str; 3] = ["timestamp", "node_id", "power_watts"];

/// Allowed deviation of a power sample from its nominal grid slot.
pub const JITTER_TOLERANCE_MS: i64 = 1000;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("no data rows")]
    Empty,
    #[error("gap in zone {zone}: missing hour {missing}")]
    Gap { zone: String, missing: String },
    #[error("duplicate timestamp {timestamp}")]
    DuplicateTimestamp { timestamp: String },
    #[error("cadence error at {timestamp}: expected a sample near {expected} ({cadence_s} s cadence)")]
    Cadence {
        timestamp: String,
        expected: String,
        cadence_s: u32,
    },
    #[error("negative power {value} W at {timestamp}")]
    NegativePower { timestamp: String, value: f64 },
    #[error("partial hour: {0}")]
    PartialHour(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{}: {error}", path.display())]
    File { path: PathBuf, error: Box<IngestError> },
}

impl IngestError {
    fn in_file(self, path: &Path) -> Self {
        IngestError::File {
            path: path.to_path_buf(),
            error: Box::new(self),
        }
    }
}

/// What to do when a carbon-intensity trace skips an hour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapPolicy {
    #[default]
    Fail,
    /// Fill missing hours by linear interpolation between the neighbors.
    Linear,
}

impl std::str::FromStr for GapPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fail" => Ok(Self::Fail),
            "linear" => Ok(Self::Linear),
            other => Err(format!("unknown gap policy `{other}` (fail|linear)")),
        }
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_timestamp(raw: &str, line: u64) -> Result<DateTime<Utc>, IngestError> {
    DateTime::parse_from_rfc3339(raw.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| IngestError::Parse {
            line,
            message: format!("bad timestamp `{raw}`: {e}"),
        })
}

fn parse_number<T: Scalar>(raw: &str, line: u64, what: &str) -> Result<T, IngestError> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .and_then(T::from_f64)
        .ok_or_else(|| IngestError::Parse {
            line,
            message: format!("bad {what} `{raw}`"),
        })
}

struct Row<T> {
    line: u64,
    at: DateTime<Utc>,
    key: String,
    value: T,
}

fn read_rows<T: Scalar, R: Read>(
    input: R,
    header: &[&str; 3],
    what: &str,
) -> Result<Vec<Row<T>>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let found = reader.headers().map_err(|e| IngestError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if found.len() != 3 || found.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(IngestError::Parse {
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(IngestError::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        rows.push(Row {
            line,
            at: parse_timestamp(&record[0], line)?,
            key: record[1].to_string(),
            value: parse_number(&record[2], line, what)?,
        });
    }
    if rows.is_empty() {
        return Err(IngestError::Empty);
    }
    // stable: equal timestamps keep file order for the duplicate check
    rows.sort_by_key(|r| r.at);
    let key = &rows[0].key;
    if let Some(r) = rows.iter().find(|r| &r.key != key) {
        return Err(IngestError::Parse {
            line: r.line,
            message: format!("mixed identifiers `{}` and `{}` in one file", key, r.key),
        });
    }
    Ok(rows)
}

/// Parses an hourly carbon-intensity CSV into a gap-free series.
///
/// Rows may appear in any order. Missing hours fail with [`IngestError::Gap`]
/// unless `gaps` is [`GapPolicy::Linear`].
pub fn parse_ci_csv<T: Scalar, R: Read>(
    input: R,
    gaps: GapPolicy,
) -> Result<CarbonIntensitySeries<T>, IngestError> {
    let rows: Vec<Row<T>> = read_rows(input, &CI_HEADER, "carbon intensity")?;
    let zone = Zone::new(rows[0].key.clone())?;
    for r in &rows {
        if !is_hour_aligned(r.at) {
            return Err(IngestError::Parse {
                line: r.line,
                message: format!("timestamp {} is not on an hour boundary", format_timestamp(r.at)),
            });
        }
        if r.value < T::zero() {
            return Err(IngestError::Parse {
                line: r.line,
                message: format!("negative carbon intensity {}", r.value),
            });
        }
    }
    let start = rows[0].at;
    let mut values: Vec<T> = Vec::with_capacity(rows.len());
    let mut prev_hour = 0i64;
    for (i, r) in rows.iter().enumerate() {
        let hour = (r.at - start).num_hours();
        if i > 0 && hour == prev_hour {
            return Err(IngestError::DuplicateTimestamp {
                timestamp: format_timestamp(r.at),
            });
        }
        if i > 0 && hour > prev_hour + 1 {
            match gaps {
                GapPolicy::Fail => {
                    return Err(IngestError::Gap {
                        zone: zone.to_string(),
                        missing: format_timestamp(start + Duration::hours(prev_hour + 1)),
                    })
                }
                GapPolicy::Linear => {
                    let left = *values.last().expect("gap follows a sample");
                    let span = T::from_i64(hour - prev_hour).expect("hour span fits scalar");
                    for k in 1..(hour - prev_hour) {
                        let frac = T::from_i64(k).expect("hour offset fits scalar") / span;
                        values.push(left + (r.value - left) * frac);
                    }
                }
            }
        }
        values.push(r.value);
        prev_hour = hour;
    }
    Ok(CarbonIntensitySeries::new(zone, start, values)?)
}

/// Writes a series in the CI CSV layout. Values use shortest round-trip formatting.
pub fn write_ci_csv<T: Scalar, W: Write>(
    series: &CarbonIntensitySeries<T>,
    out: W,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| IngestError::Io(e.into());
    w.write_record(CI_HEADER).map_err(csv_err)?;
    for (i, v) in series.values().iter().enumerate() {
        w.write_record([
            format_timestamp(series.timestamp(i)),
            series.zone().to_string(),
            v.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a power-sample CSV.
///
/// The cadence is inferred from the first two samples (rounded to whole
/// seconds, snapped to 20 s when within the jitter tolerance). Every sample
/// must fall within ±1 s of its nominal slot; timestamps are then snapped to
/// that grid.
pub fn parse_power_csv<T: Scalar, R: Read>(input: R) -> Result<PowerSeries<T>, IngestError> {
    let rows: Vec<Row<T>> = read_rows(input, &POWER_HEADER, "power")?;
    if let Some(r) = rows.iter().find(|r| r.value < T::zero()) {
        return Err(IngestError::NegativePower {
            timestamp: format_timestamp(r.at),
            value: r.value.to_f64_lossy(),
        });
    }
    let start = rows[0].at;
    let cadence_s = match rows.get(1) {
        None => PowerSeries::<T>::DEFAULT_CADENCE_S,
        Some(second) => {
            let ms = (second.at - start).num_milliseconds();
            let nominal = i64::from(PowerSeries::<T>::DEFAULT_CADENCE_S) * 1000;
            let secs = if (ms - nominal).abs() <= JITTER_TOLERANCE_MS {
                nominal / 1000
            } else {
                (ms + 500).div_euclid(1000)
            };
            if secs <= 0 {
                return Err(IngestError::Cadence {
                    timestamp: format_timestamp(second.at),
                    expected: format_timestamp(start),
                    cadence_s: 0,
                });
            }
            u32::try_from(secs).map_err(|_| IngestError::Parse {
                line: second.line,
                message: format!("cadence of {secs} s is too large"),
            })?
        }
    };
    for (i, r) in rows.iter().enumerate() {
        let expected = start + Duration::seconds(i64::from(cadence_s) * i as i64);
        if (r.at - expected).num_milliseconds().abs() > JITTER_TOLERANCE_MS {
            return Err(IngestError::Cadence {
                timestamp: format_timestamp(r.at),
                expected: format_timestamp(expected),
                cadence_s,
            });
        }
    }
    let node_id = rows[0].key.clone();
    let values = rows.into_iter().map(|r| r.value).collect();
    Ok(PowerSeries::new(node_id, start, cadence_s, values)?)
}

pub fn write_power_csv<T: Scalar, W: Write>(
    series: &PowerSeries<T>,
    out: W,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| IngestError::Io(e.into());
    w.write_record(POWER_HEADER).map_err(csv_err)?;
    for (i, v) in series.values().iter().enumerate() {
        w.write_record([
            format_timestamp(series.timestamp(i)),
            series.node_id().to_string(),
            v.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Energy per hour (kWh) by left-rectangle integration: each sample holds for
/// one cadence interval.
pub fn hourly_energy<T: Scalar>(series: &PowerSeries<T>) -> Result<Vec<T>, IngestError> {
    let cadence = series.cadence_s();
    if 3600 % cadence != 0 {
        return Err(IngestError::PartialHour(format!(
            "cadence {cadence} s does not divide an hour"
        )));
    }
    if !is_hour_aligned(series.start()) {
        return Err(IngestError::PartialHour(format!(
            "series starts at {}, not on an hour boundary",
            format_timestamp(series.start())
        )));
    }
    let per_hour = (3600 / cadence) as usize;
    let n = series.values().len();
    if !n.is_multiple_of(per_hour) {
        return Err(IngestError::PartialHour(format!(
            "{n} samples is not a whole number of hours at {per_hour} samples/hour"
        )));
    }
    let scale = T::from_u32(cadence).expect("cadence fits scalar") / T::lit(3_600_000.0);
    Ok(series
        .values()
        .chunks(per_hour)
        .map(|hour| hour.iter().copied().sum::<T>() * scale)
        .collect())
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| IngestError::from(e).in_file(path))
}

pub fn load_ci_file<T: Scalar>(
    path: &Path,
    gaps: GapPolicy,
) -> Result<CarbonIntensitySeries<T>, IngestError> {
    parse_ci_csv(open(path)?, gaps).map_err(|e| e.in_file(path))
}

pub fn load_power_file<T: Scalar>(path: &Path) -> Result<PowerSeries<T>, IngestError> {
    parse_power_csv(open(path)?).map_err(|e| e.in_file(path))
}

/// `*.csv` files of a directory in lexicographic order.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IngestError::from(e).in_file(dir))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IngestError::from(e).in_file(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every CI trace in `dir`; the zone comes from each file's contents.
pub fn load_ci_dir<T: Scalar>(
    dir: &Path,
    gaps: GapPolicy,
) -> Result<Vec<CarbonIntensitySeries<T>>, IngestError> {
    csv_files(dir)?
        .iter()
        .map(|p| load_ci_file(p, gaps))
        .collect()
}

pub fn load_power_dir<T: Scalar>(dir: &Path) -> Result<Vec<PowerSeries<T>>, IngestError> {
    csv_files(dir)?.iter().map(|p| load_power_file(p)).collect()
}
