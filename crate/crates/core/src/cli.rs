//! Command-line front end.
//!
//! Every failure prints one line `error[<kind>]: <message>` on stderr and
//! exits with 2 for bad input or 3 for an internal fault.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::compare::{
    self, car_equivalents, claim_to_emissions, emit_comparison, parse_chain_dataset, ChainRecord,
    DatasetSource, EquivalenceFactors,
};
use crate::engine::{total_emissions, CohortBreakdown, EmissionsBreakdown, ModelError};
use crate::ingest::{self, IngestError};
use crate::params::ParamField;
use crate::presets::Preset;
use crate::quantities::{CarbonIntensity, DataUnit, Energy, EnergyUnit};
use crate::scenario::Scenario;
use crate::scenario_file::load_scenario;
use crate::sensitivity::{sweep, sweep_csv, table3_report, SweepSpec};

/// Environment variable naming a directory that replaces the built-in data.
pub const DATA_DIR_ENV: &str = "POSTCARBON_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "postcarbon", version, about = "Annual carbon footprint of a proof-of-space-and-time network")]
pub struct Cli {
    /// Prefix outputs with the generation time.
    #[arg(long, global = true)]
    pub stamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scenario.
    Estimate {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// List the built-in scenarios.
    Scenarios {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also evaluate each preset, cheapest first.
        #[arg(long)]
        evaluate: bool,
    },
    /// Re-evaluate a scenario over values of one parameter.
    Sweep {
        #[command(flatten)]
        source: ScenarioSource,
        /// Dotted path such as `global.i_elec` or `cohort.desktop.pue`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Derive parameters from raw measurements.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Chart data comparing the network with other chains.
    Compare {
        /// Chain dataset CSV (`name,annual_mtco2`); defaults to the built-in set.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Presets or scenario files to add, comma-separated.
        #[arg(long, value_delimiter = ',')]
        include_estimates: Vec<String>,
        /// Published annual energy to convert, e.g. `0.13TWh`.
        #[arg(long)]
        claim: Option<String>,
        /// Grid intensity for the claim, kg CO2/kWh.
        #[arg(long, default_value_t = 0.384)]
        intensity: f64,
        /// Add the built-in country figures.
        #[arg(long)]
        with_countries: bool,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioSource {
    /// Built-in scenario name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Integrate a power log (`timestamp_s,power_w`).
    Power {
        #[arg(long)]
        file: PathBuf,
        /// Scale to a year from a capture of this many minutes.
        #[arg(long)]
        annualize: Option<f64>,
        /// Write the annualized energy as a farming override file.
        #[arg(long, requires = "annualize")]
        emit_overrides: Option<PathBuf>,
        #[arg(long, default_value = "method1")]
        preset: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Data written between two diskstats snapshots.
    Diskstats {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        device: String,
        #[arg(long, default_value_t = ingest::SECTOR_BYTES)]
        sector_bytes: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Mean per-run figures (`label,duration_min,energy_wh,writes_tib`).
    Runs {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        emit_overrides: Option<PathBuf>,
        /// Preset the override file builds on.
        #[arg(long, default_value = "method1")]
        preset: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Input,
    Internal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn input(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Input, message: message.to_string() }
    }

    fn internal(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Internal, message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage | ErrorKind::Input => 2,
            ErrorKind::Internal => 3,
        }
    }

    /// The single stderr line for this error.
    pub fn line(&self) -> String {
        let kind = match self.kind {
            ErrorKind::Usage => "usage",
            ErrorKind::Input => "input",
            ErrorKind::Internal => "internal",
        };
        let msg: Vec<&str> = self.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{kind}]: {}", msg.join("; "))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid(_) | ModelError::Quantity(_) => CliError::input(e),
            _ => CliError::internal(e),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::input(e)
    }
}

impl From<compare::CompareError> for CliError {
    fn from(e: compare::CompareError) -> Self {
        CliError::input(e)
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::internal(format!("write failed: {e}"))
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                kind => {
                    let text = e.render().to_string();
                    let first = match kind {
                        K::DisplayHelpOnMissingArgumentOrSubcommand => "a subcommand is required",
                        _ => text.lines().next().unwrap_or("invalid arguments"),
                    };
                    let first = first.trim_start_matches("error: ");
                    let e = CliError { kind: ErrorKind::Usage, message: first.to_string() };
                    let _ = writeln!(err, "{}", e.line());
                    e.exit_code()
                }
            };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let mut text = text;
            if cli.stamp {
                text = stamp(text);
            }
            match out.write_all(text.as_bytes()) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "{}", io_err(e).line());
                    3
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{}", e.line());
            e.exit_code()
        }
    }
}

fn stamp(text: String) -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    match serde_json::from_str::<Value>(&text) {
        Ok(value) if text.trim_start().starts_with(['{', '[']) => {
            let stamped = json!({ "generated_unix_s": secs, "data": value });
            format!("{}\n", serde_json::to_string_pretty(&stamped).expect("json renders"))
        }
        _ => format!("# generated_unix_s={secs}\n{text}"),
    }
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Estimate { source, format } => cmd_estimate(&resolve_source(source)?, *format),
        Command::Scenarios { format, evaluate } => cmd_scenarios(*format, *evaluate),
        Command::Sweep { source, param, values } => cmd_sweep(&resolve_source(source)?, param, values),
        Command::Ingest(cmd) => cmd_ingest(cmd),
        Command::Compare { against, include_estimates, claim, intensity, with_countries } => {
            cmd_compare(against.as_deref(), include_estimates, claim.as_deref(), *intensity, *with_countries)
        }
    }
}

fn resolve_source(source: &ScenarioSource) -> Result<Scenario<f64>, CliError> {
    match (&source.preset, &source.scenario) {
        (Some(name), _) => Ok(Preset::from_str(name).map_err(CliError::input)?.scenario()),
        (None, Some(path)) => load_scenario(path).map_err(CliError::input),
        (None, None) => Err(CliError::input("give --preset or --scenario")),
    }
}

/// Fixed three-decimal rendering with thousands separators.
pub fn fmt_table(x: f64) -> String {
    let s = format!("{:.3}", x.abs());
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let sign = if x < 0.0 && s.chars().any(|c| c != '0' && c != '.') { "-" } else { "" };
    format!("{sign}{grouped}.{frac}")
}

/// Breakdown quantities as `(key, unit, value)`.
fn quantities(c: &CohortBreakdown<f64>) -> Vec<(&'static str, &'static str, f64)> {
    let a = &c.allocation;
    let n = &c.counts;
    let k = &c.components;
    vec![
        ("s_c5", "TiB", a.s_c5.in_unit(DataUnit::TiB)),
        ("s_mm", "TiB", a.s_mm.in_unit(DataUnit::TiB)),
        ("s_std", "TiB", a.s_std.in_unit(DataUnit::TiB)),
        ("n_plot_c5", "plots", n.n_c5),
        ("n_plot_mm", "plots", n.n_mm),
        ("n_plot_std", "plots", n.n_std),
        ("n_node", "nodes", c.nodes),
        ("n_node_gpu", "nodes", c.gpu_nodes),
        ("e_plot_c5_ram", "kWh", k.plotting.bladebit_ram.in_unit(EnergyUnit::KilowattHour)),
        ("e_plot_c5_gpu", "kWh", k.plotting.bladebit_gpu.in_unit(EnergyUnit::KilowattHour)),
        ("e_plot_mm", "kWh", k.plotting.madmax.in_unit(EnergyUnit::KilowattHour)),
        ("e_plot_std", "kWh", k.plotting.standard.in_unit(EnergyUnit::KilowattHour)),
        ("e_farm", "kWh", k.e_farm.in_unit(EnergyUnit::KilowattHour)),
        ("e_op", "kWh", k.e_op.in_unit(EnergyUnit::KilowattHour)),
        ("c_elec", "t", k.c_elec.in_tonnes()),
        ("c_emb_ssd", "t", k.c_emb_ssd.in_tonnes()),
        ("c_emb_gpu", "t", k.c_emb_gpu_devices.in_tonnes()),
        ("c_emb_nogpu", "t", k.c_emb_nogpu_devices.in_tonnes()),
        ("c_emb_hdd", "t", k.c_emb_hdd.in_tonnes()),
        ("c_emb", "t", k.c_emb.in_tonnes()),
        ("c_total", "t", k.c_total.in_tonnes()),
    ]
}

fn network_quantities(b: &EmissionsBreakdown<f64>) -> Vec<(&'static str, &'static str, f64)> {
    let mut total: Vec<(&'static str, &'static str, f64)> = Vec::new();
    for c in &b.cohorts {
        let q = quantities(c);
        if total.is_empty() {
            total = q;
        } else {
            for (t, (_, _, v)) in total.iter_mut().zip(q) {
                t.2 += v;
            }
        }
    }
    total
}

fn cmd_estimate(s: &Scenario<f64>, format: Format) -> Result<String, CliError> {
    let b = total_emissions(s)?;
    let network = network_quantities(&b);
    let c_total = b.network.c_total;
    let cars = car_equivalents(c_total, EquivalenceFactors::default());
    let mut out = String::new();
    match format {
        Format::Table => {
            let mut headers: Vec<String> = vec!["quantity".into(), "unit".into()];
            headers.extend(b.cohorts.iter().map(|c| c.name.clone()));
            headers.push("network".into());
            let per_cohort: Vec<_> = b.cohorts.iter().map(quantities).collect();
            let mut rows: Vec<Vec<String>> = Vec::new();
            for (i, (key, unit, v)) in network.iter().enumerate() {
                let mut row = vec![key.to_string(), unit.to_string()];
                row.extend(per_cohort.iter().map(|q| fmt_table(q[i].2)));
                row.push(fmt_table(*v));
                rows.push(row);
            }
            let widths: Vec<usize> = (0..headers.len())
                .map(|i| rows.iter().map(|r| r[i].len()).chain([headers[i].len()]).max().unwrap_or(0))
                .collect();
            writeln!(out, "scenario: {}", b.scenario).ok();
            let render = |cells: &[String]| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if i < 2 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            writeln!(out, "{}", render(&headers)).ok();
            for r in &rows {
                writeln!(out, "{}", render(r)).ok();
            }
            writeln!(out, "C_total: {} Mt CO2/yr", fmt_table(c_total.in_megatonnes())).ok();
            writeln!(out, "embodied share: {} %", fmt_table(100.0 * b.embodied_share())).ok();
            writeln!(out, "passenger cars: {}", fmt_table(cars)).ok();
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["cohort", "quantity", "unit", "value"]).map_err(CliError::internal)?;
            for c in &b.cohorts {
                for (key, unit, v) in quantities(c) {
                    w.write_record([c.name.as_str(), key, unit, &v.to_string()]).map_err(CliError::internal)?;
                }
            }
            for (key, unit, v) in &network {
                w.write_record(["network", key, unit, &v.to_string()]).map_err(CliError::internal)?;
            }
            out = String::from_utf8(w.into_inner().map_err(CliError::internal)?).map_err(CliError::internal)?;
        }
        Format::Json => {
            let obj = |q: Vec<(&'static str, &'static str, f64)>| {
                let mut m = Map::new();
                for (key, unit, v) in q {
                    let key = match unit {
                        "TiB" | "kWh" | "t" => format!("{key}_{}", unit.to_ascii_lowercase()),
                        _ => key.to_string(),
                    };
                    m.insert(key, json!(v));
                }
                Value::Object(m)
            };
            let cohorts: Vec<Value> = b
                .cohorts
                .iter()
                .map(|c| {
                    let mut v = obj(quantities(c));
                    v["name"] = json!(c.name);
                    v
                })
                .collect();
            let doc = json!({
                "scenario": b.scenario,
                "c_total_mt": c_total.in_megatonnes(),
                "embodied_share": b.embodied_share(),
                "passenger_cars": cars,
                "network": obj(network),
                "cohorts": cohorts,
            });
            out = serde_json::to_string_pretty(&doc).map_err(CliError::internal)? + "\n";
        }
    }
    Ok(out)
}

fn cmd_scenarios(format: Format, evaluate: bool) -> Result<String, CliError> {
    let presets: Vec<(Preset, Option<(f64, f64)>)> = if evaluate {
        table3_report::<f64>()
            .into_iter()
            .map(|r| {
                let p = Preset::from_str(&r.scenario).expect("report names are presets");
                (p, Some((r.c_total.in_megatonnes(), r.embodied_share.value())))
            })
            .collect()
    } else {
        Preset::ALL.iter().map(|&p| (p, None)).collect()
    };
    let mut out = String::new();
    match format {
        Format::Table => {
            let w = presets.iter().map(|(p, _)| p.name().len()).max().unwrap_or(0);
            for (p, totals) in &presets {
                match totals {
                    Some((mt, share)) => writeln!(
                        out,
                        "{:<w$}  {:>9} Mt  {:>7} %  {}",
                        p.name(),
                        fmt_table(*mt),
                        fmt_table(100.0 * share),
                        p.key_variation()
                    ),
                    None => writeln!(out, "{:<w$}  {}", p.name(), p.key_variation()),
                }
                .ok();
            }
        }
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["name", "title", "key_variation"];
            if evaluate {
                header.extend(["c_total_mt", "embodied_share"]);
            }
            wr.write_record(&header).map_err(CliError::internal)?;
            for (p, totals) in &presets {
                let mut rec = vec![p.name().to_string(), p.title().to_string(), p.key_variation().to_string()];
                if let Some((mt, share)) = totals {
                    rec.extend([mt.to_string(), share.to_string()]);
                }
                wr.write_record(&rec).map_err(CliError::internal)?;
            }
            out = String::from_utf8(wr.into_inner().map_err(CliError::internal)?).map_err(CliError::internal)?;
        }
        Format::Json => {
            let items: Vec<Value> = presets
                .iter()
                .map(|(p, totals)| {
                    let mut v = json!({ "name": p.name(), "title": p.title(), "key_variation": p.key_variation() });
                    if let Some((mt, share)) = totals {
                        v["c_total_mt"] = json!(mt);
                        v["embodied_share"] = json!(share);
                    }
                    v
                })
                .collect();
            out = serde_json::to_string_pretty(&items).map_err(CliError::internal)? + "\n";
        }
    }
    Ok(out)
}

fn cmd_sweep(s: &Scenario<f64>, param: &str, values: &[f64]) -> Result<String, CliError> {
    let spec = SweepSpec::new(param, values.to_vec()).map_err(CliError::input)?;
    let rows = sweep(s, &spec).map_err(CliError::input)?;
    let failures: Vec<String> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.result.as_ref().err().map(|e| format!("row {} (value {}): {e}", i + 1, r.value)))
        .collect();
    if !failures.is_empty() {
        return Err(CliError::input(format!("sweep of `{param}` failed at {}", failures.join("; "))));
    }
    Ok(sweep_csv(&rows))
}

fn key_values(format: Format, items: &[(&str, &str, f64)]) -> Result<String, CliError> {
    Ok(match format {
        Format::Table => {
            let w = items.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
            items.iter().map(|(k, u, v)| format!("{k:<w$}  {} {u}\n", fmt_table(*v))).collect()
        }
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.write_record(["quantity", "unit", "value"]).map_err(CliError::internal)?;
            for (k, u, v) in items {
                wr.write_record([*k, *u, &v.to_string()]).map_err(CliError::internal)?;
            }
            String::from_utf8(wr.into_inner().map_err(CliError::internal)?).map_err(CliError::internal)?
        }
        Format::Json => {
            let mut m = Map::new();
            for (k, u, v) in items {
                m.insert((*k).to_string(), json!({ "unit": u, "value": v }));
            }
            serde_json::to_string_pretty(&Value::Object(m)).map_err(CliError::internal)? + "\n"
        }
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn cmd_ingest(cmd: &IngestCommand) -> Result<String, CliError> {
    match cmd {
        IngestCommand::Power { file, annualize, emit_overrides, preset, format } => {
            let series = ingest::parse_power_log(file)?;
            let energy = ingest::integrate_power(&series)?;
            let mut items = vec![
                ("samples", "", series.len() as f64),
                ("duration", "s", series.duration_s()),
                ("energy", "Wh", energy.in_unit(EnergyUnit::WattHour)),
            ];
            if let Some(minutes) = annualize {
                let yearly = ingest::annualize(energy, *minutes)?;
                let kwh = yearly.in_unit(EnergyUnit::KilowattHour);
                items.push(("annual_energy", "kWh/yr", kwh));
                if let Some(path) = emit_overrides {
                    let preset = Preset::from_str(preset).map_err(CliError::input)?;
                    let d = ingest::DerivedParameter { field: ParamField::EFarmServer, value: kwh, runs: 1 };
                    write_file(path, &ingest::overrides_file(&[d], preset))?;
                }
            }
            key_values(*format, &items)
        }
        IngestCommand::Diskstats { before, after, device, sector_bytes, format } => {
            if *sector_bytes == 0 {
                return Err(CliError::input("--sector-bytes must be positive"));
            }
            let b = ingest::parse_diskstats(before)?;
            let a = ingest::parse_diskstats(after)?;
            let delta = ingest::writes_delta(ingest::find_device(&b, device)?, ingest::find_device(&a, device)?, *sector_bytes)?;
            key_values(*format, &[("writes", "TiB", delta.in_unit(DataUnit::TiB))])
        }
        IngestCommand::Runs { file, emit_overrides, preset, format } => {
            let runs = ingest::parse_run_records(file)?;
            let derived = ingest::derive_plotter_profile(&runs)?;
            if let Some(path) = emit_overrides {
                let preset = Preset::from_str(preset).map_err(CliError::input)?;
                write_file(path, &ingest::overrides_file(&derived, preset))?;
            }
            let items: Vec<(&str, &str, f64)> = derived.iter().map(|d| (d.field.key(), d.field.unit(), d.value)).collect();
            key_values(*format, &items)
        }
    }
}

fn data_file(name: &str) -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(|dir| Path::new(&dir).join(name))
}

fn load_dataset(path: Option<&Path>, file: &str, builtin: &str) -> Result<Vec<ChainRecord>, CliError> {
    match path.map(Path::to_path_buf).or_else(|| data_file(file)) {
        Some(p) => Ok(compare::load_chain_dataset(DatasetSource::Path(&p))?),
        None => Ok(parse_chain_dataset(builtin, &format!("builtin:{file}"))?),
    }
}

fn estimate_source(spec: &str) -> Result<(String, Scenario<f64>), CliError> {
    if let Ok(p) = Preset::from_str(spec) {
        return Ok((p.name().to_string(), p.scenario()));
    }
    let path = Path::new(spec);
    if path.extension().is_some() || path.exists() {
        let s = load_scenario(path).map_err(CliError::input)?;
        return Ok((s.name.clone(), s));
    }
    Err(CliError::input(format!("`{spec}` is neither a preset nor a scenario file")))
}

fn cmd_compare(
    against: Option<&Path>,
    estimates: &[String],
    claim: Option<&str>,
    intensity: f64,
    with_countries: bool,
) -> Result<String, CliError> {
    let mut records = load_dataset(against, compare::CHAINS_FILE, compare::BUILTIN_CHAINS)?;
    if with_countries {
        records.extend(load_dataset(None, compare::COUNTRIES_FILE, compare::BUILTIN_COUNTRIES)?);
    }
    let mut chia = Vec::new();
    for spec in estimates.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let (label, s) = estimate_source(spec)?;
        chia.push((format!("Chia ({label})"), total_emissions(&s)?.network.c_total));
    }
    if let Some(text) = claim {
        let energy = Energy::<f64>::from_str(text).map_err(|e| CliError::input(format!("--claim: {e}")))?;
        let i = CarbonIntensity::new(intensity).map_err(|e| CliError::input(format!("--intensity: {e}")))?;
        let label = format!("Chia (claim {} {})", energy.value(), energy.unit());
        chia.push((label, claim_to_emissions(energy, i)));
    }
    Ok(emit_comparison(&records, &chia))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("postcarbon").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn table_numbers() {
        assert_eq!(fmt_table(1_096_467.224_2), "1,096,467.224");
        assert_eq!(fmt_table(0.0), "0.000");
        assert_eq!(fmt_table(999.9996), "1,000.000");
        assert_eq!(fmt_table(-12345.5), "-12,345.500");
        assert_eq!(fmt_table(-0.0001), "0.000");
    }

    #[test]
    fn estimate_method1() {
        let (code, out, _) = run(&["estimate", "--preset", "method1"]);
        assert_eq!(code, 0);
        assert!(out.contains("C_total: 1.327 Mt CO2/yr"), "{out}");
        assert!(out.contains("1,096,467.224"));
    }

    #[test]
    fn estimate_formats() {
        let (code, out, _) = run(&["estimate", "--preset", "method2", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("cohort,quantity,unit,value\n"));
        assert!(out.lines().any(|l| l.starts_with("network,c_total,t,")));
        let (code, out, _) = run(&["estimate", "--preset", "method1", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["network"]["c_elec_t"].as_f64().unwrap() - 1_096_467.224).abs() < 1e-2);
    }

    #[test]
    fn missing_scenario_file() {
        let (code, _, err) = run(&["estimate", "--scenario", "missing.toml"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error[input]: ") && err.contains("file not found"), "{err}");
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn scenarios_listing() {
        let (code, out, _) = run(&["scenarios"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 5);
        assert!(out.contains("All nodes = servers, no BladeBit"));
        let (_, out, _) = run(&["scenarios", "--format", "json"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 5);
    }

    #[test]
    fn sweep_rows() {
        let (code, out, _) = run(&["sweep", "--preset", "method1", "--param", "global.i_elec", "--values", "0,0.384"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        let c_elec: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert!((c_elec - 1_096_467.224).abs() < 1e-3);
        let (code, _, err) = run(&["sweep", "--preset", "method1", "--param", "global.nope", "--values", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("global.nope"));
        let (code, _, err) = run(&["sweep", "--preset", "method1", "--param", "i_elec", "--values", "-1"]);
        assert_eq!(code, 2, "{err}");
    }

    #[test]
    fn compare_counts() {
        let (code, out, _) = run(&["compare", "--include-estimates", "method1,method2"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 12);
        let (_, out, _) = run(&["compare", "--claim", "0.13TWh"]);
        let row = out.lines().find(|l| l.starts_with("Chia (claim")).unwrap();
        let mt: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mt - 0.04992).abs() < 1e-12);
    }

    #[test]
    fn usage_errors_are_single_line() {
        let (code, _, err) = run(&["estimate"]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 1);
        assert!(err.starts_with("error[usage]: "));
        let (code, _, _) = run(&["--help"]);
        assert_eq!(code, 0);
    }

    #[test]
    fn stamped_output() {
        let (_, out, _) = run(&["--stamp", "scenarios"]);
        assert!(out.starts_with("# generated_unix_s="));
        let (_, out, _) = run(&["scenarios", "--format", "json", "--stamp"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["generated_unix_s"].is_u64());
    }
}
