//! Built-in scenarios: the homogeneous server model, the three-cohort
//! model, and the sensitivity variants derived from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::params::{default_parameter_set, ParameterSet, PlotterKind};
use crate::quantities::{
    CarbonMass, DataSize, DurationYears, Energy, EnergyUnit, Fraction, Power, Pue,
};
use crate::real::{lit, Real};
use crate::scenario::{Cohort, GpuNodeRule, PlotEnergies, PlotterMix, Scenario};

/// MadMax weight when Bladebit plots are reassigned (MadMax : Standard = 3 : 1).
pub const NO_COMPRESSION_MADMAX_WEIGHT: f64 = 0.75;

/// RAM the in-memory Bladebit plotter needs on a server, GiB.
pub const SERVER_RAM_PLOTTING_GIB: f64 = 416.0;
pub const DESKTOP_RAM_GIB: f64 = 16.0;
pub const LAPTOP_RAM_GIB: f64 = 8.0;
/// Endurance of a consumer SSD, TiB written.
pub const CONSUMER_SSD_TBW_TIB: f64 = 600.0;
pub const DESKTOP_CHASSIS_KG: f64 = 350.0;
pub const LAPTOP_CHASSIS_KG: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Method1,
    Method2,
    HomogeneousNoCompression,
    TieredNoCompression,
    TieredLowServer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown preset `{0}` (expected one of: method1, method2, homogeneous-no-compression, tiered-no-compression, tiered-low-server)")]
pub struct UnknownPreset(pub String);

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::HomogeneousNoCompression,
        Preset::TieredNoCompression,
        Preset::TieredLowServer,
        Preset::Method1,
        Preset::Method2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Method1 => "method1",
            Preset::Method2 => "method2",
            Preset::HomogeneousNoCompression => "homogeneous-no-compression",
            Preset::TieredNoCompression => "tiered-no-compression",
            Preset::TieredLowServer => "tiered-low-server",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Preset::Method1 => "Homogeneous servers with compression",
            Preset::Method2 => "Tiered cohorts with compression",
            Preset::HomogeneousNoCompression => "Homogeneous servers (no compression)",
            Preset::TieredNoCompression => "Tiered cohorts (no compression)",
            Preset::TieredLowServer => "Tiered cohorts with compression and lower server activity",
        }
    }

    /// What the preset changes relative to the baseline.
    pub fn key_variation(self) -> &'static str {
        match self {
            Preset::Method1 => "All nodes = servers, with BladeBit",
            Preset::Method2 => "Baseline",
            Preset::HomogeneousNoCompression => "All nodes = servers, no BladeBit",
            Preset::TieredNoCompression => "Hardware diversity without C5 plots",
            Preset::TieredLowServer => "\u{2193} server plot share (65% \u{2192} 30%)",
        }
    }

    pub fn scenario<S: Real>(self) -> Scenario<S> {
        match self {
            Preset::Method1 => method1_scenario(),
            Preset::Method2 => method2_scenario(),
            Preset::HomogeneousNoCompression => homogeneous_no_compression(),
            Preset::TieredNoCompression => tiered_no_compression(),
            Preset::TieredLowServer => tiered_low_server(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = match key.as_str() {
            "homogeneous-with-compression" => "method1",
            "tiered-with-compression" => "method2",
            other => other,
        };
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == key)
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}

fn frac<S: Real>(x: f64) -> Fraction<S> {
    Fraction::new(lit(x)).expect("preset fraction in [0, 1]")
}

fn mix<S: Real>(bladebit: f64, madmax: f64, standard: f64) -> PlotterMix<S> {
    PlotterMix::new(lit(bladebit), lit(madmax), lit(standard)).expect("preset mix is valid")
}

fn kg<S: Real>(x: f64) -> CarbonMass<S> {
    CarbonMass::kg(lit(x)).expect("preset mass is valid")
}

/// Per-plot energy of a consumer host: plotting time at plotting power.
pub fn consumer_plot_energy<S: Real>(hours: f64, watts: f64) -> Energy<S> {
    let e = Power::watts(lit::<S>(watts)).expect("preset power is valid").over_hours(lit(hours));
    e.to(EnergyUnit::KilowattHour)
}

/// Annual energy of a host farming around the clock at `watts`.
pub fn always_on_energy<S: Real>(watts: f64) -> Energy<S> {
    let e = Power::watts(lit::<S>(watts)).expect("preset power is valid") * DurationYears::one_year();
    e.to(EnergyUnit::KilowattHour)
}

fn scenario<S: Real>(name: &str, params: ParameterSet<S>, cohorts: Vec<Cohort<S>>) -> Scenario<S> {
    Scenario { name: name.to_string(), params, cohorts }
}

/// Every node is a server; all values come from the parameter table.
pub fn method1_scenario<S: Real>() -> Scenario<S> {
    let mut server = Cohort::server_like("server", S::one(), S::one());
    server.bb_gpu_split = frac(0.5);
    server.gpu_nodes = GpuNodeRule::AllBladebit;
    scenario("method1", default_parameter_set(), vec![server])
}

fn server_cohort<S: Real>(node_share: f64, netspace_share: f64) -> Cohort<S> {
    let mut c = Cohort::server_like("server", lit(node_share), lit(netspace_share));
    c.ram_plotting_gib = lit(SERVER_RAM_PLOTTING_GIB);
    c
}

fn desktop_cohort<S: Real>(node_share: f64, netspace_share: f64) -> Cohort<S> {
    let energies: BTreeMap<_, _> = [
        (PlotterKind::BladebitGpu, consumer_plot_energy(0.25, 800.0)),
        (PlotterKind::MadMax, consumer_plot_energy(1.5, 800.0)),
        (PlotterKind::Standard, consumer_plot_energy(8.0, 800.0)),
    ]
    .into_iter()
    .collect();
    Cohort {
        name: "desktop".to_string(),
        node_share: frac(node_share),
        netspace_share: frac(netspace_share),
        pue: Some(Pue::new(lit(1.2)).expect("valid PUE")),
        mix: Some(mix(0.2, 0.4, 0.4)),
        bb_gpu_split: Fraction::one(),
        gpu_nodes: GpuNodeRule::GpuSplit,
        plot_energy: PlotEnergies::Custom(energies),
        farm_energy: Some(always_on_energy(66.0)),
        embodied_chassis: Some(kg(DESKTOP_CHASSIS_KG)),
        embodied_gpu: None,
        ram_gib: lit(DESKTOP_RAM_GIB),
        ram_plotting_gib: S::zero(),
        ssd_tbw: Some(DataSize::tib(lit(CONSUMER_SSD_TBW_TIB)).expect("valid TBW")),
    }
}

fn laptop_cohort<S: Real>(node_share: f64, netspace_share: f64) -> Cohort<S> {
    let energies: BTreeMap<_, _> = [
        (PlotterKind::MadMax, consumer_plot_energy(2.0, 100.0)),
        (PlotterKind::Standard, consumer_plot_energy(10.0, 100.0)),
    ]
    .into_iter()
    .collect();
    Cohort {
        name: "laptop".to_string(),
        node_share: frac(node_share),
        netspace_share: frac(netspace_share),
        pue: Some(Pue::unity()),
        mix: Some(mix(0.0, 0.15, 0.85)),
        bb_gpu_split: Fraction::zero(),
        gpu_nodes: GpuNodeRule::GpuSplit,
        plot_energy: PlotEnergies::Custom(energies),
        farm_energy: Some(always_on_energy(32.0)),
        embodied_chassis: Some(kg(LAPTOP_CHASSIS_KG)),
        embodied_gpu: None,
        ram_gib: lit(LAPTOP_RAM_GIB),
        ram_plotting_gib: S::zero(),
        ssd_tbw: Some(DataSize::tib(lit(CONSUMER_SSD_TBW_TIB)).expect("valid TBW")),
    }
}

fn tiered<S: Real>(name: &str, netspace: [f64; 3]) -> Scenario<S> {
    scenario(
        name,
        default_parameter_set(),
        vec![
            server_cohort(0.15, netspace[0]),
            desktop_cohort(0.60, netspace[1]),
            laptop_cohort(0.25, netspace[2]),
        ],
    )
}

/// Servers, desktops and laptops with their own shares, PUE and hardware.
pub fn method2_scenario<S: Real>() -> Scenario<S> {
    tiered("method2", [0.65, 0.30, 0.05])
}

fn drop_compression<S: Real>(mut s: Scenario<S>, name: &str) -> Scenario<S> {
    let weight = lit(NO_COMPRESSION_MADMAX_WEIGHT);
    for c in &mut s.cohorts {
        let current = c.mix.unwrap_or_else(|| PlotterMix::from_params(&s.params));
        c.mix = Some(current.without_compression(weight));
    }
    s.name = name.to_string();
    s
}

pub fn homogeneous_no_compression<S: Real>() -> Scenario<S> {
    drop_compression(method1_scenario(), Preset::HomogeneousNoCompression.name())
}

pub fn tiered_no_compression<S: Real>() -> Scenario<S> {
    drop_compression(method2_scenario(), Preset::TieredNoCompression.name())
}

/// Server netspace cut from 65% to 30%; desktops and laptops absorb the rest.
pub fn tiered_low_server<S: Real>() -> Scenario<S> {
    tiered(Preset::TieredLowServer.name(), [0.30, 0.60, 0.10])
}

/// All sensitivity presets, in [`Preset::ALL`] order.
pub fn table3_scenarios<S: Real>() -> Vec<(Preset, Scenario<S>)> {
    Preset::ALL.iter().map(|&p| (p, p.scenario())).collect()
}
