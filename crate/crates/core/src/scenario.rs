//! Cohorts, scenarios and their validation.
//!
//! A scenario is the global parameter table plus one or more hardware
//! cohorts. Cohort fields left as `None` follow the reference server values
//! in the parameter table, so a single-cohort scenario tracks every global
//! override.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::params::{ParamError, ParamField, ParameterSet, PlotterKind, PlotterProfile};
use crate::quantities::{
    CarbonMass, DataSize, DataUnit, Energy, EnergyUnit, Fraction, Pue, QuantityError,
};
use crate::real::{lit, to_f64, Real};

const SUM_TOLERANCE: f64 = 1e-9;

/// Share of a cohort's netspace growth plotted by each plotter family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotterMix<S: Real> {
    pub bladebit: Fraction<S>,
    pub madmax: Fraction<S>,
    pub standard: Fraction<S>,
}

impl<S: Real> PlotterMix<S> {
    pub fn new(bladebit: S, madmax: S, standard: S) -> Result<Self, QuantityError> {
        Ok(PlotterMix {
            bladebit: Fraction::new(bladebit)?,
            madmax: Fraction::new(madmax)?,
            standard: Fraction::new(standard)?,
        })
    }

    pub fn from_params(p: &ParameterSet<S>) -> Self {
        PlotterMix { bladebit: p.f_bb, madmax: p.f_mm, standard: p.f_std }
    }

    pub fn sum(&self) -> S {
        self.bladebit.value() + self.madmax.value() + self.standard.value()
    }

    /// Moves the Bladebit share onto MadMax and Standard at `madmax_weight : 1 - madmax_weight`.
    pub fn without_compression(&self, madmax_weight: S) -> Self {
        let bb = self.bladebit.value();
        PlotterMix {
            bladebit: Fraction::zero(),
            madmax: Fraction::new(self.madmax.value() + bb * madmax_weight)
                .unwrap_or(Fraction::one()),
            standard: Fraction::new(self.standard.value() + bb * (S::one() - madmax_weight))
                .unwrap_or(Fraction::one()),
        }
    }
}

/// Which Bladebit-plotting nodes carry a GPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GpuNodeRule {
    /// Every node in the cohort's Bladebit share is a GPU machine.
    AllBladebit,
    /// Only the GPU-mode part (`bb_gpu_split`) of the Bladebit share.
    GpuSplit,
}

impl GpuNodeRule {
    pub fn key(self) -> &'static str {
        match self {
            GpuNodeRule::AllBladebit => "all-bladebit",
            GpuNodeRule::GpuSplit => "gpu-split",
        }
    }
}

impl std::str::FromStr for GpuNodeRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-bladebit" => Ok(GpuNodeRule::AllBladebit),
            "gpu-split" => Ok(GpuNodeRule::GpuSplit),
            other => Err(format!("unknown gpu node rule `{other}`")),
        }
    }
}

/// Per-plot plotting energies of a cohort.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotEnergies<S: Real> {
    /// Use the measured server energies from the parameter table.
    Server,
    /// Cohort-specific energies; a kind absent here cannot be used.
    Custom(BTreeMap<PlotterKind, Energy<S>>),
}

/// One hardware class of farmers.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort<S: Real> {
    pub name: String,
    pub node_share: Fraction<S>,
    pub netspace_share: Fraction<S>,
    pub pue: Option<Pue<S>>,
    pub mix: Option<PlotterMix<S>>,
    /// Share of Bladebit plots made in GPU mode.
    pub bb_gpu_split: Fraction<S>,
    pub gpu_nodes: GpuNodeRule,
    pub plot_energy: PlotEnergies<S>,
    /// Annual farming energy per node.
    pub farm_energy: Option<Energy<S>>,
    pub embodied_chassis: Option<CarbonMass<S>>,
    pub embodied_gpu: Option<CarbonMass<S>>,
    /// RAM charged to every node, GiB.
    pub ram_gib: S,
    /// Extra RAM charged to nodes plotting Bladebit in RAM mode, GiB.
    pub ram_plotting_gib: S,
    pub ssd_tbw: Option<DataSize<S>>,
}

impl<S: Real> Cohort<S> {
    /// A cohort that inherits every hardware figure from the parameter table.
    pub fn server_like(name: impl Into<String>, node_share: S, netspace_share: S) -> Self {
        Cohort {
            name: name.into(),
            node_share: Fraction::new(node_share).unwrap_or(Fraction::zero()),
            netspace_share: Fraction::new(netspace_share).unwrap_or(Fraction::zero()),
            pue: None,
            mix: None,
            bb_gpu_split: Fraction::new(lit(0.5)).expect("0.5 is a fraction"),
            gpu_nodes: GpuNodeRule::AllBladebit,
            plot_energy: PlotEnergies::Server,
            farm_energy: None,
            embodied_chassis: None,
            embodied_gpu: None,
            ram_gib: S::zero(),
            ram_plotting_gib: S::zero(),
            ssd_tbw: None,
        }
    }
}

/// A cohort with every inherited value filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCohort<S: Real> {
    pub name: String,
    pub node_share: Fraction<S>,
    pub netspace_share: Fraction<S>,
    pub pue: Pue<S>,
    pub mix: PlotterMix<S>,
    pub bb_gpu_split: Fraction<S>,
    pub gpu_nodes: GpuNodeRule,
    pub profiles: BTreeMap<PlotterKind, PlotterProfile<S>>,
    pub farm_energy: Energy<S>,
    pub embodied_chassis: CarbonMass<S>,
    pub embodied_gpu: CarbonMass<S>,
    pub embodied_ram_per_node: CarbonMass<S>,
    pub embodied_ram_plotting: CarbonMass<S>,
    pub ssd_tbw: DataSize<S>,
}

impl<S: Real> ResolvedCohort<S> {
    /// Share of the cohort's growth plotted by `kind`.
    pub fn kind_share(&self, kind: PlotterKind) -> S {
        let split = self.bb_gpu_split.value();
        match kind {
            PlotterKind::Standard => self.mix.standard.value(),
            PlotterKind::MadMax => self.mix.madmax.value(),
            PlotterKind::BladebitRam => self.mix.bladebit.value() * (S::one() - split),
            PlotterKind::BladebitGpu => self.mix.bladebit.value() * split,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<S: Real> {
    pub name: String,
    pub params: ParameterSet<S>,
    pub cohorts: Vec<Cohort<S>>,
}

impl<S: Real> Scenario<S> {
    pub fn cohort(&self, name: &str) -> Option<&Cohort<S>> {
        self.cohorts.iter().find(|c| c.name == name)
    }

    pub fn cohort_mut(&mut self, name: &str) -> Option<&mut Cohort<S>> {
        self.cohorts.iter_mut().find(|c| c.name == name)
    }

    pub fn resolve(&self, c: &Cohort<S>) -> ResolvedCohort<S> {
        let p = &self.params;
        let profiles = PlotterKind::ALL
            .iter()
            .filter_map(|&kind| {
                let energy = match &c.plot_energy {
                    PlotEnergies::Server => Some(p.plot_energy(kind)),
                    PlotEnergies::Custom(map) => map.get(&kind).copied(),
                }?;
                Some((kind, PlotterProfile { per_plot_energy: energy, ..p.server_profile(kind) }))
            })
            .collect();
        let ram = |gib: S| CarbonMass::kg(gib * p.gamma_ram.canonical()).unwrap_or_default();
        ResolvedCohort {
            name: c.name.clone(),
            node_share: c.node_share,
            netspace_share: c.netspace_share,
            pue: c.pue.unwrap_or(p.pue_server),
            mix: c.mix.unwrap_or_else(|| PlotterMix::from_params(p)),
            bb_gpu_split: c.bb_gpu_split,
            gpu_nodes: c.gpu_nodes,
            profiles,
            farm_energy: c.farm_energy.unwrap_or(p.e_farm_server),
            embodied_chassis: c.embodied_chassis.unwrap_or(p.gamma_enter),
            embodied_gpu: c.embodied_gpu.unwrap_or(p.gamma_gpu),
            embodied_ram_per_node: ram(c.ram_gib),
            embodied_ram_plotting: ram(c.ram_plotting_gib),
            ssd_tbw: c.ssd_tbw.unwrap_or(p.tbw_ssd_server),
        }
    }

    pub fn resolved_cohorts(&self) -> Vec<ResolvedCohort<S>> {
        self.cohorts.iter().map(|c| self.resolve(c)).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// One broken invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

// Loosened to a few ulps of the scalar so f32 scenarios survive their own rounding.
fn off_unity<S: Real>(sum: f64) -> bool {
    let tol = SUM_TOLERANCE.max(8.0 * to_f64(S::epsilon()));
    (sum - 1.0).abs() > tol
}

/// Checks every scenario invariant; an empty report means the scenario is usable.
pub fn validate<S: Real>(s: &Scenario<S>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let p = &s.params;

    let f_sum = to_f64(p.f_bb.value() + p.f_mm.value() + p.f_std.value());
    if off_unity::<S>(f_sum) {
        report.push("global.f_bb+f_mm+f_std", format!("plotter fractions sum to {f_sum}"));
    }
    if p.n_node < 1 {
        report.push("global.n_node", "must be at least 1");
    }
    for (field, size) in [(ParamField::SPlot, p.s_plot), (ParamField::SPlotC5, p.s_plot_c5)] {
        if size.is_zero() {
            report.push(format!("global.{field}"), "degenerate plot size");
        }
    }
    if p.tbw_ssd_server.is_zero() {
        report.push("global.tbw_ssd_server", "TBW must be positive");
    }

    if s.cohorts.is_empty() {
        report.push("cohort", "scenario has no cohorts");
        return report;
    }

    let mut seen = BTreeSet::new();
    for c in &s.cohorts {
        let at = format!("cohort.{}", c.name);
        if !seen.insert(c.name.as_str()) {
            report.push(at.clone(), "duplicate cohort name");
        }
        if c.name.is_empty() || c.name.contains('.') {
            report.push(at.clone(), "cohort name must be non-empty and free of dots");
        }
        let r = s.resolve(c);
        let mix_sum = to_f64(r.mix.sum());
        if off_unity::<S>(mix_sum) {
            report.push(format!("{at}.mix"), format!("mix sums to {mix_sum}"));
        }
        if r.ssd_tbw.is_zero() {
            report.push(format!("{at}.ssd_tbw"), "TBW must be positive");
        }
        if !(c.ram_gib >= S::zero() && c.ram_plotting_gib >= S::zero()) {
            report.push(format!("{at}.ram_gib"), "RAM capacities must be non-negative");
        }
        for kind in PlotterKind::ALL {
            if r.kind_share(kind) > S::zero() && !r.profiles.contains_key(&kind) {
                report.push(
                    format!("{at}.plot_energy.{kind}"),
                    format!("missing profile for used plotter `{kind}`"),
                );
            }
        }
    }

    let node_sum: f64 = s.cohorts.iter().map(|c| to_f64(c.node_share.value())).sum();
    if off_unity::<S>(node_sum) {
        report.push("cohort.*.node_share", format!("node_share sums to {node_sum}"));
    }
    let space_sum: f64 = s.cohorts.iter().map(|c| to_f64(c.netspace_share.value())).sum();
    if off_unity::<S>(space_sum) {
        report.push("cohort.*.netspace_share", format!("netspace_share sums to {space_sum}"));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("cannot resolve parameter path `{0}`")]
    Unresolvable(String),
    #[error("no cohort named `{cohort}` in path `{path}`")]
    UnknownCohort { cohort: String, path: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("`{path}`: {source}")]
    Invalid { path: String, source: QuantityError },
}

/// A numeric field addressed by dotted path: `global.<key>`, a bare global
/// `<key>`, or `cohort.<name>.<field>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamPath {
    Global(ParamField),
    Cohort { cohort: String, field: CohortField },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortField {
    NodeShare,
    NetspaceShare,
    Pue,
    BbGpuSplit,
    Mix(MixPart),
    FarmEnergy,
    ChassisKg,
    GpuKg,
    RamGib,
    RamPlottingGib,
    SsdTbw,
    PlotEnergy(PlotterKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixPart {
    Bladebit,
    MadMax,
    Standard,
}

impl std::str::FromStr for ParamPath {
    type Err = PathError;

    fn from_str(path: &str) -> Result<Self, Self::Err> {
        let bad = || PathError::Unresolvable(path.to_string());
        let parts: Vec<&str> = path.trim().split('.').collect();
        match parts.as_slice() {
            ["global", key] | [key] => {
                key.parse().map(ParamPath::Global).map_err(|_| bad())
            }
            ["cohort", name, rest @ ..] => {
                let field = match rest {
                    ["node_share"] => CohortField::NodeShare,
                    ["netspace_share"] => CohortField::NetspaceShare,
                    ["pue"] => CohortField::Pue,
                    ["bb_gpu_split"] => CohortField::BbGpuSplit,
                    ["mix", "bladebit"] => CohortField::Mix(MixPart::Bladebit),
                    ["mix", "madmax"] => CohortField::Mix(MixPart::MadMax),
                    ["mix", "standard"] => CohortField::Mix(MixPart::Standard),
                    ["farm_energy_kwh"] => CohortField::FarmEnergy,
                    ["chassis_kg"] => CohortField::ChassisKg,
                    ["gpu_kg"] => CohortField::GpuKg,
                    ["ram_gib"] => CohortField::RamGib,
                    ["ram_plotting_gib"] => CohortField::RamPlottingGib,
                    ["ssd_tbw_tib"] => CohortField::SsdTbw,
                    ["plot_energy_kwh", kind] => {
                        CohortField::PlotEnergy(kind.parse().map_err(|_| bad())?)
                    }
                    _ => return Err(bad()),
                };
                Ok(ParamPath::Cohort { cohort: name.to_string(), field })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPath::Global(field) => write!(f, "global.{field}"),
            ParamPath::Cohort { cohort, field } => {
                write!(f, "cohort.{cohort}.")?;
                match field {
                    CohortField::NodeShare => f.write_str("node_share"),
                    CohortField::NetspaceShare => f.write_str("netspace_share"),
                    CohortField::Pue => f.write_str("pue"),
                    CohortField::BbGpuSplit => f.write_str("bb_gpu_split"),
                    CohortField::Mix(MixPart::Bladebit) => f.write_str("mix.bladebit"),
                    CohortField::Mix(MixPart::MadMax) => f.write_str("mix.madmax"),
                    CohortField::Mix(MixPart::Standard) => f.write_str("mix.standard"),
                    CohortField::FarmEnergy => f.write_str("farm_energy_kwh"),
                    CohortField::ChassisKg => f.write_str("chassis_kg"),
                    CohortField::GpuKg => f.write_str("gpu_kg"),
                    CohortField::RamGib => f.write_str("ram_gib"),
                    CohortField::RamPlottingGib => f.write_str("ram_plotting_gib"),
                    CohortField::SsdTbw => f.write_str("ssd_tbw_tib"),
                    CohortField::PlotEnergy(kind) => write!(f, "plot_energy_kwh.{kind}"),
                }
            }
        }
    }
}

impl<S: Real> Scenario<S> {
    /// Current (resolved) value at `path`.
    pub fn get_path(&self, path: &ParamPath) -> Result<S, PathError> {
        match path {
            ParamPath::Global(field) => Ok(self.params.get(*field)),
            ParamPath::Cohort { cohort, field } => {
                let c = self.cohort(cohort).ok_or_else(|| PathError::UnknownCohort {
                    cohort: cohort.clone(),
                    path: path.to_string(),
                })?;
                let r = self.resolve(c);
                Ok(match field {
                    CohortField::NodeShare => r.node_share.value(),
                    CohortField::NetspaceShare => r.netspace_share.value(),
                    CohortField::Pue => r.pue.value(),
                    CohortField::BbGpuSplit => r.bb_gpu_split.value(),
                    CohortField::Mix(MixPart::Bladebit) => r.mix.bladebit.value(),
                    CohortField::Mix(MixPart::MadMax) => r.mix.madmax.value(),
                    CohortField::Mix(MixPart::Standard) => r.mix.standard.value(),
                    CohortField::FarmEnergy => r.farm_energy.in_unit(EnergyUnit::KilowattHour),
                    CohortField::ChassisKg => r.embodied_chassis.canonical(),
                    CohortField::GpuKg => r.embodied_gpu.canonical(),
                    CohortField::RamGib => c.ram_gib,
                    CohortField::RamPlottingGib => c.ram_plotting_gib,
                    CohortField::SsdTbw => r.ssd_tbw.in_unit(DataUnit::TiB),
                    CohortField::PlotEnergy(kind) => r
                        .profiles
                        .get(kind)
                        .map(|p| p.per_plot_energy.in_unit(EnergyUnit::KilowattHour))
                        .unwrap_or(S::zero()),
                })
            }
        }
    }

    /// Overwrites the value at `path`. Setting an inherited cohort field
    /// detaches it from the parameter table.
    pub fn set_path(&mut self, path: &ParamPath, value: S) -> Result<(), PathError> {
        let (cohort, field) = match path {
            ParamPath::Global(field) => return Ok(self.params.set(*field, value)?),
            ParamPath::Cohort { cohort, field } => (cohort, *field),
        };
        let resolved = {
            let c = self.cohort(cohort).ok_or_else(|| PathError::UnknownCohort {
                cohort: cohort.clone(),
                path: path.to_string(),
            })?;
            self.resolve(c)
        };
        let inv = |source| PathError::Invalid { path: path.to_string(), source };
        let c = self.cohort_mut(cohort).expect("cohort checked above");
        match field {
            CohortField::NodeShare => c.node_share = Fraction::new(value).map_err(inv)?,
            CohortField::NetspaceShare => c.netspace_share = Fraction::new(value).map_err(inv)?,
            CohortField::Pue => c.pue = Some(Pue::new(value).map_err(inv)?),
            CohortField::BbGpuSplit => c.bb_gpu_split = Fraction::new(value).map_err(inv)?,
            CohortField::Mix(part) => {
                let mut mix = resolved.mix;
                let f = Fraction::new(value).map_err(inv)?;
                match part {
                    MixPart::Bladebit => mix.bladebit = f,
                    MixPart::MadMax => mix.madmax = f,
                    MixPart::Standard => mix.standard = f,
                }
                c.mix = Some(mix);
            }
            CohortField::FarmEnergy => c.farm_energy = Some(Energy::kwh(value).map_err(inv)?),
            CohortField::ChassisKg => c.embodied_chassis = Some(CarbonMass::kg(value).map_err(inv)?),
            CohortField::GpuKg => c.embodied_gpu = Some(CarbonMass::kg(value).map_err(inv)?),
            CohortField::RamGib => {
                c.ram_gib = DataSize::gib(value).map_err(inv)?.value();
            }
            CohortField::RamPlottingGib => {
                c.ram_plotting_gib = DataSize::gib(value).map_err(inv)?.value();
            }
            CohortField::SsdTbw => c.ssd_tbw = Some(DataSize::tib(value).map_err(inv)?),
            CohortField::PlotEnergy(kind) => {
                let energy = Energy::kwh(value).map_err(inv)?;
                let mut map: BTreeMap<_, _> = resolved
                    .profiles
                    .iter()
                    .map(|(k, p)| (*k, p.per_plot_energy))
                    .collect();
                map.insert(kind, energy);
                c.plot_energy = PlotEnergies::Custom(map);
            }
        }
        Ok(())
    }
}
