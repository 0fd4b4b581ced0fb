//! Measurement post-processing: wattmeter power logs, kernel disk counters
//! and per-run summaries.
//!
//! Power logs are CSV with an optional `timestamp_s,power_w` header. Disk
//! counters are raw `/proc/diskstats` snapshots. Run records are CSV with
//! header `label,duration_min,energy_wh,writes_tib`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::params::{ParamField, PlotterKind, Provenance};
use crate::presets::Preset;
use crate::quantities::{DataSize, DataUnit, Energy, EnergyUnit, Power, HOURS_PER_YEAR};
use crate::scenario_file::ScenarioFile;

/// Bytes per sector counted by the block layer.
pub const SECTOR_BYTES: u64 = 512;

const MINUTES_PER_YEAR: f64 = HOURS_PER_YEAR * 60.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("{origin}: file not found")]
    NotFound { origin: String },
    #[error("{origin}: {message}")]
    Io { origin: String, message: String },
    #[error("{origin}:{line}: {message}")]
    Malformed { origin: String, line: u64, message: String },
    #[error("{origin}:{line}: timestamp {t} does not increase on {previous}")]
    NonMonotonic { origin: String, line: u64, previous: f64, t: f64 },
    #[error("{origin}: no samples")]
    Empty { origin: String },
    #[error("integration needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("device mismatch: `{before}` before, `{after}` after")]
    DeviceMismatch { before: String, after: String },
    #[error("device `{0}` not present in snapshot")]
    DeviceNotFound(String),
    #[error("sectors written on `{device}` went from {before} to {after}; counter reset or wrapped, capture both snapshots again")]
    CounterRegression { device: String, before: u64, after: u64 },
    #[error("duration must be positive, got {0} min")]
    NonPositiveDuration(f64),
    #[error("no runs to derive parameters from")]
    NoRuns,
}

fn read(path: &Path) -> Result<String, IngestError> {
    let origin = path.display().to_string();
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::NotFound { origin },
        _ => IngestError::Io { origin, message: e.to_string() },
    })
}

fn malformed(origin: &str, line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Malformed { origin: origin.to_string(), line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub t_s: f64,
    pub power: Power<f64>,
}

/// Samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSeries {
    samples: Vec<PowerSample>,
}

impl PowerSeries {
    pub fn new(samples: Vec<PowerSample>) -> Result<Self, IngestError> {
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].t_s > w[0].t_s) {
                return Err(IngestError::NonMonotonic {
                    origin: "<series>".into(),
                    line: i as u64 + 2,
                    previous: w[0].t_s,
                    t: w[1].t_s,
                });
            }
        }
        Ok(PowerSeries { samples })
    }

    /// `n` samples of constant `watts`, evenly spaced over `seconds`.
    pub fn constant(watts: f64, seconds: f64, n: usize) -> Result<Self, IngestError> {
        let power = Power::watts(watts).map_err(|e| malformed("<series>", 0, e.to_string()))?;
        let n = n.max(2);
        let step = seconds / (n - 1) as f64;
        Self::new((0..n).map(|i| PowerSample { t_s: i as f64 * step, power }).collect())
    }

    pub fn samples(&self) -> &[PowerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t_s - a.t_s,
            _ => 0.0,
        }
    }

    /// Splits at sample `k`, which ends the first part and starts the second.
    pub fn split_at(&self, k: usize) -> (PowerSeries, PowerSeries) {
        let k = k.min(self.samples.len().saturating_sub(1));
        (
            PowerSeries { samples: self.samples[..=k].to_vec() },
            PowerSeries { samples: self.samples[k..].to_vec() },
        )
    }
}

pub fn parse_power_log(path: impl AsRef<Path>) -> Result<PowerSeries, IngestError> {
    let path = path.as_ref();
    parse_power_log_str(&read(path)?, &path.display().to_string())
}

pub fn parse_power_log_str(text: &str, origin: &str) -> Result<PowerSeries, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples: Vec<PowerSample> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if samples.is_empty() && i == 0 && record == vec!["timestamp_s", "power_w"] {
            continue;
        }
        if record.len() != 2 {
            return Err(malformed(origin, line, format!("expected 2 fields, found {}", record.len())));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| malformed(origin, line, format!("bad timestamp `{}`", &record[0])))?;
        let w: f64 = record[1]
            .parse()
            .map_err(|_| malformed(origin, line, format!("bad power `{}`", &record[1])))?;
        if !t.is_finite() {
            return Err(malformed(origin, line, format!("bad timestamp `{}`", &record[0])));
        }
        let power = Power::watts(w).map_err(|e| malformed(origin, line, e.to_string()))?;
        if let Some(prev) = samples.last() {
            if !(t > prev.t_s) {
                return Err(IngestError::NonMonotonic { origin: origin.to_string(), line, previous: prev.t_s, t });
            }
        }
        samples.push(PowerSample { t_s: t, power });
    }
    if samples.is_empty() {
        return Err(IngestError::Empty { origin: origin.to_string() });
    }
    Ok(PowerSeries { samples })
}

/// Trapezoidal integral of the series, in Wh.
pub fn integrate_power(s: &PowerSeries) -> Result<Energy<f64>, IngestError> {
    if s.len() < 2 {
        return Err(IngestError::TooFewSamples(s.len()));
    }
    let joules: f64 = s
        .samples
        .windows(2)
        .map(|w| 0.5 * (w[0].power.value() + w[1].power.value()) * (w[1].t_s - w[0].t_s))
        .sum();
    Ok(Energy::wh(joules / 3600.0).expect("integral of non-negative power"))
}

/// Scales energy measured over `duration_minutes` to a full year.
pub fn annualize(e: Energy<f64>, duration_minutes: f64) -> Result<Energy<f64>, IngestError> {
    if !(duration_minutes > 0.0 && duration_minutes.is_finite()) {
        return Err(IngestError::NonPositiveDuration(duration_minutes));
    }
    Ok(e.scale(MINUTES_PER_YEAR / duration_minutes).expect("positive scale"))
}

/// One line of a diskstats snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskCounters {
    pub major: u64,
    pub minor: u64,
    pub device: String,
    pub sectors_written: u64,
    /// All numeric counters after the device name, in file order.
    pub counters: Vec<u64>,
}

pub fn parse_diskstats(path: impl AsRef<Path>) -> Result<Vec<DiskCounters>, IngestError> {
    let path = path.as_ref();
    parse_diskstats_str(&read(path)?, &path.display().to_string())
}

pub fn parse_diskstats_str(text: &str, origin: &str) -> Result<Vec<DiskCounters>, IngestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 11 {
            return Err(malformed(origin, line, format!("expected at least 11 fields, found {}", fields.len())));
        }
        let num = |idx: usize| -> Result<u64, IngestError> {
            fields[idx].parse().map_err(|_| {
                malformed(origin, line, format!("field {}: non-numeric counter `{}`", idx + 1, fields[idx]))
            })
        };
        let counters = (3..fields.len()).map(num).collect::<Result<Vec<_>, _>>()?;
        out.push(DiskCounters {
            major: num(0)?,
            minor: num(1)?,
            device: fields[2].to_string(),
            sectors_written: counters[6],
            counters,
        });
    }
    Ok(out)
}

pub fn find_device<'a>(snapshot: &'a [DiskCounters], device: &str) -> Result<&'a DiskCounters, IngestError> {
    snapshot
        .iter()
        .find(|d| d.device == device)
        .ok_or_else(|| IngestError::DeviceNotFound(device.to_string()))
}

/// Data written between two snapshots of the same device.
pub fn writes_delta(
    before: &DiskCounters,
    after: &DiskCounters,
    sector_bytes: u64,
) -> Result<DataSize<f64>, IngestError> {
    if before.device != after.device {
        return Err(IngestError::DeviceMismatch { before: before.device.clone(), after: after.device.clone() });
    }
    if after.sectors_written < before.sectors_written {
        return Err(IngestError::CounterRegression {
            device: after.device.clone(),
            before: before.sectors_written,
            after: after.sectors_written,
        });
    }
    let sectors = (after.sectors_written - before.sectors_written) as u128;
    Ok(DataSize::from_bytes(sectors * sector_bytes as u128))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RunLabel {
    Plotter(PlotterKind),
    Farming,
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunLabel::Plotter(k) => write!(f, "{}", k.key().replace('_', "-")),
            RunLabel::Farming => f.write_str("farming"),
        }
    }
}

impl FromStr for RunLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("farming") {
            return Ok(RunLabel::Farming);
        }
        s.parse().map(RunLabel::Plotter).map_err(|_| format!("unknown run label `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: RunLabel,
    pub duration_min: f64,
    pub energy: Energy<f64>,
    pub writes: DataSize<f64>,
}

#[derive(Debug, Deserialize)]
struct RawRun {
    label: String,
    duration_min: f64,
    energy_wh: f64,
    writes_tib: f64,
}

pub fn parse_run_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, IngestError> {
    let path = path.as_ref();
    parse_run_records_str(&read(path)?, &path.display().to_string())
}

pub fn parse_run_records_str(text: &str, origin: &str) -> Result<Vec<RunRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(origin, 1, e.to_string()))?.clone();
    let expected = ["label", "duration_min", "energy_wh", "writes_tib"];
    if headers.iter().ne(expected) {
        return Err(malformed(origin, 1, format!("expected header `{}`", expected.join(","))));
    }
    let mut runs = Vec::new();
    for result in reader.deserialize::<RawRun>() {
        let raw = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            let msg = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            malformed(origin, line, msg)
        })?;
        let line = runs.len() as u64 + 2;
        let label = raw.label.parse().map_err(|m: String| malformed(origin, line, m))?;
        if !(raw.duration_min > 0.0) {
            return Err(malformed(origin, line, format!("duration_min must be positive, got {}", raw.duration_min)));
        }
        let energy = Energy::wh(raw.energy_wh).map_err(|e| malformed(origin, line, e.to_string()))?;
        let writes = DataSize::tib(raw.writes_tib).map_err(|e| malformed(origin, line, e.to_string()))?;
        runs.push(RunRecord { label, duration_min: raw.duration_min, energy, writes });
    }
    Ok(runs)
}

/// A derived parameter: mean over `runs` records, in table units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParameter {
    pub field: ParamField,
    pub value: f64,
    pub runs: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per-label means mapped onto parameter-table fields.
///
/// Plot runs give per-plot energy and writes; farming runs are annualized
/// one by one and averaged. Bladebit writes come from the RAM-mode runs when
/// there are any, the GPU-mode runs otherwise.
pub fn derive_plotter_profile(runs: &[RunRecord]) -> Result<Vec<DerivedParameter>, IngestError> {
    if runs.is_empty() {
        return Err(IngestError::NoRuns);
    }
    let mut groups: BTreeMap<RunLabel, Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        groups.entry(r.label).or_default().push(r);
    }
    let mut out: BTreeMap<ParamField, DerivedParameter> = BTreeMap::new();
    let mut put = |field: ParamField, value: f64, runs: usize| {
        out.insert(field, DerivedParameter { field, value, runs });
    };
    for (label, group) in &groups {
        let n = group.len();
        match label {
            RunLabel::Farming => {
                let yearly = group
                    .iter()
                    .map(|r| annualize(r.energy, r.duration_min).map(|e| e.in_unit(EnergyUnit::KilowattHour)))
                    .collect::<Result<Vec<_>, _>>()?;
                put(ParamField::EFarmServer, mean(&yearly), n);
            }
            RunLabel::Plotter(kind) => {
                let field = kind.energy_field();
                let unit = if field == ParamField::EPlotStd { EnergyUnit::KilowattHour } else { EnergyUnit::WattHour };
                let energies: Vec<f64> = group.iter().map(|r| r.energy.in_unit(unit)).collect();
                put(field, mean(&energies), n);
                let writes_owner = match kind {
                    PlotterKind::BladebitGpu => !groups.contains_key(&RunLabel::Plotter(PlotterKind::BladebitRam)),
                    _ => true,
                };
                if writes_owner {
                    let writes: Vec<f64> = group.iter().map(|r| r.writes.in_unit(DataUnit::TiB)).collect();
                    put(kind.writes_field(), mean(&writes), n);
                }
            }
        }
    }
    Ok(out.into_values().collect())
}

/// A scenario file applying `derived` on top of `preset`, tagged empirical.
pub fn overrides_file(derived: &[DerivedParameter], preset: Preset) -> String {
    let file = ScenarioFile {
        preset: Some(preset.name().to_string()),
        name: None,
        global: derived.iter().map(|d| (d.field.key().to_string(), d.value)).collect(),
        provenance: derived
            .iter()
            .map(|d| (d.field.key().to_string(), Provenance::Empirical.to_string()))
            .collect(),
        cohort: Vec::new(),
    };
    toml::to_string(&file).expect("overrides serialize to TOML")
}
