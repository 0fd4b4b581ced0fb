//! Scenario files in TOML or JSON.
//!
//! ```toml
//! preset = "method2"
//!
//! [global]
//! i_elec = 0.25
//!
//! [[cohort]]
//! name = "desktop"
//! pue = 1.3
//! ```
//!
//! A `preset` is loaded first; `[global]` keys override the parameter table
//! in the units of [`ParamField::unit`]. Each `[[cohort]]` block is merged
//! into the preset cohort of the same name, or appended as a new cohort.
//! New cohorts need `node_share` and `netspace_share`, default to a
//! Bladebit GPU split of 0.5 with the `gpu-split` rule, and use server
//! plot energies unless `plot_energy_kwh` is given, in which case only the
//! listed plotters are available to them.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ParamField, PlotterKind, Provenance};
use crate::presets::Preset;
use crate::quantities::{DataUnit, Energy, EnergyUnit};
use crate::scenario::{
    CohortField, GpuNodeRule, MixPart, ParamPath, PlotEnergies, Scenario, ValidationReport,
};
use crate::scenario::Cohort;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioFileError {
    #[error("{path}: file not found")]
    NotFound { path: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{location}: schema violation: {message}")]
    Schema { path: String, location: String, message: String },
    #[error("{path}: {location}: {message}")]
    Value { path: String, location: String, message: String },
    #[error("{path}: invalid scenario: {report}")]
    Invariant { path: String, report: ValidationReport },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON for a `.json` extension, TOML otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }

    fn sniff(text: &str) -> Format {
        if text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub global: BTreeMap<String, f64>,
    /// Provenance of overridden globals, e.g. `e_plot_mm = "empirical"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cohort: Vec<CohortSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_share: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netspace_share: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bb_gpu_split: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpu_nodes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm_energy_kwh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpu_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ram_gib: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ram_plotting_gib: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssd_tbw_tib: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_energy_kwh: Option<PlotEnergySection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bladebit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub madmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotEnergySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub madmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bladebit_ram: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bladebit_gpu: Option<f64>,
}

impl PlotEnergySection {
    fn entries(&self) -> impl Iterator<Item = (PlotterKind, f64)> + '_ {
        [
            (PlotterKind::Standard, self.standard),
            (PlotterKind::MadMax, self.madmax),
            (PlotterKind::BladebitRam, self.bladebit_ram),
            (PlotterKind::BladebitGpu, self.bladebit_gpu),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
    }

    fn slot(&mut self, kind: PlotterKind) -> &mut Option<f64> {
        match kind {
            PlotterKind::Standard => &mut self.standard,
            PlotterKind::MadMax => &mut self.madmax,
            PlotterKind::BladebitRam => &mut self.bladebit_ram,
            PlotterKind::BladebitGpu => &mut self.bladebit_gpu,
        }
    }
}

fn line_col(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    format!("{line}:{col}")
}

/// Parses scenario file text; `origin` names the source in errors.
pub fn parse_scenario_file(text: &str, format: Format, origin: &str) -> Result<ScenarioFile, ScenarioFileError> {
    let schema = |location: String, message: String| ScenarioFileError::Schema {
        path: origin.to_string(),
        location,
        message,
    };
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| {
            let loc = e.span().map(|s| line_col(text, s.start)).unwrap_or_default();
            schema(loc, e.message().trim().to_string())
        }),
        Format::Json => serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            schema(format!("{}:{}", e.line(), e.column()), msg)
        }),
    }
}

/// Builds a validated scenario from parsed file contents.
pub fn build_scenario(file: &ScenarioFile, origin: &str) -> Result<Scenario<f64>, ScenarioFileError> {
    let value_err = |location: String, message: String| ScenarioFileError::Value {
        path: origin.to_string(),
        location,
        message,
    };
    let mut s = match &file.preset {
        Some(name) => Preset::from_str(name)
            .map_err(|e| value_err("preset".into(), e.to_string()))?
            .scenario(),
        None => Scenario {
            name: String::new(),
            params: Default::default(),
            cohorts: Vec::new(),
        },
    };
    s.name = match (&file.name, &file.preset) {
        (Some(n), _) => n.clone(),
        (None, Some(p)) => Preset::from_str(p).map(|p| p.name().to_string()).unwrap_or_default(),
        (None, None) => Path::new(origin)
            .file_stem()
            .and_then(|x| x.to_str())
            .unwrap_or("scenario")
            .to_string(),
    };

    for (key, &value) in &file.global {
        let loc = format!("global.{key}");
        let field = ParamField::from_str(key).map_err(|e| value_err(loc.clone(), e.to_string()))?;
        s.params.set(field, value).map_err(|e| value_err(loc, e.to_string()))?;
    }
    for (key, prov) in &file.provenance {
        let loc = format!("provenance.{key}");
        let field = ParamField::from_str(key).map_err(|e| value_err(loc.clone(), e.to_string()))?;
        let prov = Provenance::from_str(prov).map_err(|e| value_err(loc.clone(), e))?;
        let value = s.params.get(field);
        s.params
            .set_with_provenance(field, value, prov)
            .map_err(|e| value_err(loc, e.to_string()))?;
    }

    for (i, section) in file.cohort.iter().enumerate() {
        apply_cohort(&mut s, section).map_err(|(field, msg)| {
            let loc = if field.is_empty() {
                format!("cohort[{i}]")
            } else {
                format!("cohort[{i}].{field}")
            };
            value_err(loc, msg)
        })?;
    }

    let report = s.validate();
    if !report.is_empty() {
        return Err(ScenarioFileError::Invariant { path: origin.to_string(), report });
    }
    Ok(s)
}

fn apply_cohort(s: &mut Scenario<f64>, c: &CohortSection) -> Result<(), (String, String)> {
    let name = c.name.clone();
    let is_new = s.cohort(&name).is_none();
    if is_new {
        if name.is_empty() || name.contains('.') {
            return Err(("name".into(), format!("invalid cohort name `{name}`")));
        }
        let (Some(node), Some(net)) = (c.node_share, c.netspace_share) else {
            return Err((String::new(), format!("new cohort `{name}` needs node_share and netspace_share")));
        };
        let mut cohort = Cohort::server_like(name.clone(), 0.0, 0.0);
        cohort.gpu_nodes = GpuNodeRule::GpuSplit;
        s.cohorts.push(cohort);
        set(s, &name, CohortField::NodeShare, "node_share", node)?;
        set(s, &name, CohortField::NetspaceShare, "netspace_share", net)?;
    } else {
        if let Some(v) = c.node_share {
            set(s, &name, CohortField::NodeShare, "node_share", v)?;
        }
        if let Some(v) = c.netspace_share {
            set(s, &name, CohortField::NetspaceShare, "netspace_share", v)?;
        }
    }

    let scalars = [
        (c.pue, CohortField::Pue, "pue"),
        (c.bb_gpu_split, CohortField::BbGpuSplit, "bb_gpu_split"),
        (c.farm_energy_kwh, CohortField::FarmEnergy, "farm_energy_kwh"),
        (c.chassis_kg, CohortField::ChassisKg, "chassis_kg"),
        (c.gpu_kg, CohortField::GpuKg, "gpu_kg"),
        (c.ram_gib, CohortField::RamGib, "ram_gib"),
        (c.ram_plotting_gib, CohortField::RamPlottingGib, "ram_plotting_gib"),
        (c.ssd_tbw_tib, CohortField::SsdTbw, "ssd_tbw_tib"),
    ];
    for (value, field, key) in scalars {
        if let Some(v) = value {
            set(s, &name, field, key, v)?;
        }
    }
    if let Some(mix) = &c.mix {
        let parts = [
            (mix.bladebit, MixPart::Bladebit, "mix.bladebit"),
            (mix.madmax, MixPart::MadMax, "mix.madmax"),
            (mix.standard, MixPart::Standard, "mix.standard"),
        ];
        for (value, part, key) in parts {
            if let Some(v) = value {
                set(s, &name, CohortField::Mix(part), key, v)?;
            }
        }
    }
    if let Some(rule) = &c.gpu_nodes {
        let rule = GpuNodeRule::from_str(rule).map_err(|e| ("gpu_nodes".to_string(), e))?;
        s.cohort_mut(&name).expect("cohort exists").gpu_nodes = rule;
    }
    if let Some(energies) = &c.plot_energy_kwh {
        if is_new {
            let mut map = BTreeMap::new();
            for (kind, v) in energies.entries() {
                let e = Energy::kwh(v).map_err(|e| (format!("plot_energy_kwh.{kind}"), e.to_string()))?;
                map.insert(kind, e);
            }
            s.cohort_mut(&name).expect("cohort exists").plot_energy = PlotEnergies::Custom(map);
        } else {
            for (kind, v) in energies.entries() {
                set(s, &name, CohortField::PlotEnergy(kind), &format!("plot_energy_kwh.{kind}"), v)?;
            }
        }
    }
    Ok(())
}

fn set(s: &mut Scenario<f64>, cohort: &str, field: CohortField, key: &str, v: f64) -> Result<(), (String, String)> {
    let path = ParamPath::Cohort { cohort: cohort.to_string(), field };
    s.set_path(&path, v).map_err(|e| (key.to_string(), e.to_string()))
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario<f64>, ScenarioFileError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ScenarioFileError::NotFound { path: origin.clone() },
        _ => ScenarioFileError::Io { path: origin.clone(), message: e.to_string() },
    })?;
    let format = match path.extension() {
        Some(_) => Format::from_path(path),
        None => Format::sniff(&text),
    };
    let file = parse_scenario_file(&text, format, &origin)?;
    build_scenario(&file, &origin)
}

/// Parses scenario text, detecting JSON by a leading `{`.
pub fn scenario_from_str(text: &str) -> Result<Scenario<f64>, ScenarioFileError> {
    let file = parse_scenario_file(text, Format::sniff(text), "<input>")?;
    build_scenario(&file, "<input>")
}

/// A self-contained description of `s`: no preset, every global written.
pub fn to_scenario_file(s: &Scenario<f64>) -> ScenarioFile {
    let global = ParamField::ALL.iter().map(|&f| (f.key().to_string(), s.params.get(f))).collect();
    let provenance = ParamField::ALL
        .iter()
        .filter(|&&f| s.params.provenance(f) != f.default_provenance())
        .map(|&f| (f.key().to_string(), s.params.provenance(f).to_string()))
        .collect();
    let cohort = s
        .cohorts
        .iter()
        .map(|c| CohortSection {
            name: c.name.clone(),
            node_share: Some(c.node_share.value()),
            netspace_share: Some(c.netspace_share.value()),
            pue: c.pue.map(|p| p.value()),
            mix: c.mix.map(|m| MixSection {
                bladebit: Some(m.bladebit.value()),
                madmax: Some(m.madmax.value()),
                standard: Some(m.standard.value()),
            }),
            bb_gpu_split: Some(c.bb_gpu_split.value()),
            gpu_nodes: Some(c.gpu_nodes.key().to_string()),
            farm_energy_kwh: c.farm_energy.map(|e| e.in_unit(EnergyUnit::KilowattHour)),
            chassis_kg: c.embodied_chassis.map(|m| m.canonical()),
            gpu_kg: c.embodied_gpu.map(|m| m.canonical()),
            ram_gib: Some(c.ram_gib),
            ram_plotting_gib: Some(c.ram_plotting_gib),
            ssd_tbw_tib: c.ssd_tbw.map(|d| d.in_unit(DataUnit::TiB)),
            plot_energy_kwh: match &c.plot_energy {
                PlotEnergies::Server => None,
                PlotEnergies::Custom(map) => {
                    let mut sec = PlotEnergySection::default();
                    for (kind, e) in map {
                        *sec.slot(*kind) = Some(e.in_unit(EnergyUnit::KilowattHour));
                    }
                    Some(sec)
                }
            },
        })
        .collect();
    ScenarioFile { preset: None, name: Some(s.name.clone()), global, provenance, cohort }
}

pub fn to_toml_string(s: &Scenario<f64>) -> String {
    toml::to_string(&to_scenario_file(s)).expect("scenario file serializes to TOML")
}

pub fn to_json_string(s: &Scenario<f64>) -> String {
    serde_json::to_string_pretty(&to_scenario_file(s)).expect("scenario file serializes to JSON")
}

/// Writes `s` in the format implied by the extension of `path`.
pub fn save_scenario(path: impl AsRef<Path>, s: &Scenario<f64>) -> Result<(), ScenarioFileError> {
    let path = path.as_ref();
    let text = match Format::from_path(path) {
        Format::Toml => to_toml_string(s),
        Format::Json => to_json_string(s),
    };
    std::fs::write(path, text).map_err(|e| ScenarioFileError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{farming_energy, total_emissions};
    use crate::presets::{method1_scenario, method2_scenario, table3_scenarios};
    use proptest::prelude::*;

    #[test]
    fn preset_passthrough() {
        let s = scenario_from_str("preset = \"method1\"\n").unwrap();
        assert_eq!(s, method1_scenario());
    }

    #[test]
    fn zero_intensity_override() {
        let s = scenario_from_str("preset = \"method1\"\n[global]\ni_elec = 0.0\n").unwrap();
        assert_eq!(total_emissions(&s).unwrap().network.c_elec.canonical(), 0.0);
    }

    #[test]
    fn node_count_override_doubles_farming() {
        let s = scenario_from_str("preset = \"method1\"\n[global]\nn_node = 500000\n").unwrap();
        let base = method1_scenario::<f64>();
        let e = farming_energy(&s.resolve(&s.cohorts[0]), s.params.n_node).canonical();
        let e0 = farming_energy(&base.resolve(&base.cohorts[0]), base.params.n_node).canonical();
        assert_eq!(e, 2.0 * e0);
    }

    #[test]
    fn json_input() {
        let s = scenario_from_str(r#"{"preset": "method2", "global": {"pue_server": 1.2}}"#).unwrap();
        assert_eq!(s.params.pue_server.value(), 1.2);
        assert_eq!(s.cohorts.len(), 3);
    }

    #[test]
    fn unknown_key_is_located() {
        let err = scenario_from_str("preset = \"method1\"\nbogus = 1\n").unwrap_err();
        match err {
            ScenarioFileError::Schema { location, message, .. } => {
                assert_eq!(location, "2:1");
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_is_schema_error() {
        let err = scenario_from_str("[global]\ni_elec = \"high\"\n").unwrap_err();
        assert!(matches!(err, ScenarioFileError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_global_is_located() {
        let err = scenario_from_str("preset = \"method1\"\n[global]\nfoo = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("global.foo"), "{err}");
    }

    #[test]
    fn bad_value_is_located() {
        let err = scenario_from_str("preset = \"method2\"\n[[cohort]]\nname = \"laptop\"\npue = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("cohort[0].pue"), "{err}");
    }

    #[test]
    fn share_violation_reported() {
        let err = scenario_from_str("preset = \"method2\"\n[[cohort]]\nname = \"laptop\"\nnode_share = 0.15\n").unwrap_err();
        match err {
            ScenarioFileError::Invariant { report, .. } => {
                assert!(report.to_string().contains("node_share sums to 0.9"), "{report}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        let err = load_scenario("/nonexistent/missing.toml").unwrap_err();
        assert!(err.to_string().ends_with("file not found"));
    }

    #[test]
    fn new_cohort_appended() {
        let text = r#"
preset = "method1"
[[cohort]]
name = "server"
node_share = 0.5
netspace_share = 0.9
[[cohort]]
name = "pi"
node_share = 0.5
netspace_share = 0.1
pue = 1.0
mix = { bladebit = 0.0, madmax = 1.0, standard = 0.0 }
plot_energy_kwh = { madmax = 0.05 }
"#;
        let s = scenario_from_str(text).unwrap();
        let pi = s.cohort("pi").unwrap();
        assert_eq!(pi.gpu_nodes, GpuNodeRule::GpuSplit);
        assert!(matches!(&pi.plot_energy, PlotEnergies::Custom(m) if m.len() == 1));
        assert!(total_emissions(&s).is_ok());
    }

    #[test]
    fn presets_round_trip() {
        for (_, s) in table3_scenarios::<f64>() {
            assert_eq!(scenario_from_str(&to_toml_string(&s)).unwrap(), s);
            assert_eq!(scenario_from_str(&to_json_string(&s)).unwrap(), s);
        }
    }

    #[test]
    fn provenance_round_trip() {
        let mut s = method1_scenario::<f64>();
        s.params.set_with_provenance(ParamField::EPlotMm, 900.0, Provenance::Assumed).unwrap();
        let back = scenario_from_str(&to_toml_string(&s)).unwrap();
        assert_eq!(back.params.provenance(ParamField::EPlotMm), Provenance::Assumed);
        assert_eq!(back, s);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let s = method2_scenario::<f64>();
        for file in ["m2.toml", "m2.json"] {
            let p = dir.path().join(file);
            save_scenario(&p, &s).unwrap();
            assert_eq!(load_scenario(&p).unwrap(), s);
        }
    }

    proptest! {
        #[test]
        fn round_trip_perturbed(
            i in 0.0..2.0f64,
            pue in 1.0..3.0f64,
            split in 0.0..1.0f64,
            desk_pue in 1.0..2.0f64,
            farm in 0.0..1e4f64,
            tbw in 1.0..1e4f64,
            json in any::<bool>(),
        ) {
            let mut s = method2_scenario::<f64>();
            s.params.set(ParamField::IElec, i).unwrap();
            s.params.set(ParamField::PueServer, pue).unwrap();
            let set = |s: &mut Scenario<f64>, p: &str, v: f64| s.set_path(&p.parse().unwrap(), v).unwrap();
            set(&mut s, "cohort.server.bb_gpu_split", split);
            set(&mut s, "cohort.desktop.pue", desk_pue);
            set(&mut s, "cohort.laptop.farm_energy_kwh", farm);
            set(&mut s, "cohort.server.ssd_tbw_tib", tbw);
            set(&mut s, "cohort.desktop.plot_energy_kwh.madmax", farm / 1000.0);
            let text = if json { to_json_string(&s) } else { to_toml_string(&s) };
            prop_assert_eq!(scenario_from_str(&text).unwrap(), s);
        }
    }
}
