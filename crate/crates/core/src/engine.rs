//! The emissions model.
//!
//! Netspace growth is split per cohort and plotter, turned into plot counts,
//! then into plotting energy; farming energy scales with node counts.
//! Electricity carbon is operational energy times grid intensity. Embodied
//! carbon has four parts: SSD wear from plotting writes, server chassis with
//! and without GPUs, and HDD storage for the whole netspace. All parts are
//! annual figures.

use std::ops::Add;

use thiserror::Error;

use crate::params::{ParameterSet, PlotterKind};
use crate::quantities::{
    CarbonIntensity, CarbonMass, DataSize, DataUnit, DurationYears, Energy, Pue, QuantityError,
};
use crate::real::{lit, Real};
use crate::scenario::{GpuNodeRule, ResolvedCohort, Scenario, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    Invalid(ValidationReport),
    #[error("degenerate plot size for `{0}`")]
    DegeneratePlotSize(PlotterKind),
    #[error("cohort `{cohort}` has no profile for used plotter `{kind}`")]
    MissingProfile { cohort: String, kind: PlotterKind },
    #[error("cohort `{0}` has zero SSD TBW")]
    ZeroTbw(String),
    #[error(transparent)]
    Quantity(#[from] QuantityError),
}

/// Netspace assigned to one cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortAllocation<S: Real> {
    pub cohort: String,
    /// Growth plotted with Bladebit (compressed C5 plots).
    pub s_c5: DataSize<S>,
    pub s_mm: DataSize<S>,
    pub s_std: DataSize<S>,
    /// Share of the total stored netspace.
    pub s_stock: DataSize<S>,
}

impl<S: Real> CohortAllocation<S> {
    pub fn growth(&self) -> DataSize<S> {
        self.s_c5 + self.s_mm + self.s_std
    }
}

/// Plots created per year; fractional counts are kept.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlotCounts<S> {
    pub n_c5: S,
    pub n_mm: S,
    pub n_std: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlottingEnergy<S: Real> {
    pub bladebit_ram: Energy<S>,
    pub bladebit_gpu: Energy<S>,
    pub madmax: Energy<S>,
    pub standard: Energy<S>,
}

impl<S: Real> PlottingEnergy<S> {
    pub fn total(&self) -> Energy<S> {
        self.bladebit_ram + self.bladebit_gpu + self.madmax + self.standard
    }

    pub fn get(&self, kind: PlotterKind) -> Energy<S> {
        match kind {
            PlotterKind::BladebitRam => self.bladebit_ram,
            PlotterKind::BladebitGpu => self.bladebit_gpu,
            PlotterKind::MadMax => self.madmax,
            PlotterKind::Standard => self.standard,
        }
    }
}

impl<S: Real> Add for PlottingEnergy<S> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        PlottingEnergy {
            bladebit_ram: self.bladebit_ram + o.bladebit_ram,
            bladebit_gpu: self.bladebit_gpu + o.bladebit_gpu,
            madmax: self.madmax + o.madmax,
            standard: self.standard + o.standard,
        }
    }
}

/// Embodied carbon of compute hardware, split by GPU equipment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviceEmbodied<S: Real> {
    pub gpu: CarbonMass<S>,
    pub nogpu: CarbonMass<S>,
}

/// Energy and carbon components for one cohort or the whole network.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components<S: Real> {
    pub plotting: PlottingEnergy<S>,
    pub e_farm: Energy<S>,
    pub e_op: Energy<S>,
    pub c_elec: CarbonMass<S>,
    pub c_emb_ssd: CarbonMass<S>,
    pub c_emb_gpu_devices: CarbonMass<S>,
    pub c_emb_nogpu_devices: CarbonMass<S>,
    pub c_emb_hdd: CarbonMass<S>,
    pub c_emb: CarbonMass<S>,
    pub c_total: CarbonMass<S>,
}

impl<S: Real> Add for Components<S> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Components {
            plotting: self.plotting + o.plotting,
            e_farm: self.e_farm + o.e_farm,
            e_op: self.e_op + o.e_op,
            c_elec: self.c_elec + o.c_elec,
            c_emb_ssd: self.c_emb_ssd + o.c_emb_ssd,
            c_emb_gpu_devices: self.c_emb_gpu_devices + o.c_emb_gpu_devices,
            c_emb_nogpu_devices: self.c_emb_nogpu_devices + o.c_emb_nogpu_devices,
            c_emb_hdd: self.c_emb_hdd + o.c_emb_hdd,
            c_emb: self.c_emb + o.c_emb,
            c_total: self.c_total + o.c_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortBreakdown<S: Real> {
    pub name: String,
    pub nodes: S,
    pub gpu_nodes: S,
    pub allocation: CohortAllocation<S>,
    pub counts: PlotCounts<S>,
    pub components: Components<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsBreakdown<S: Real> {
    pub scenario: String,
    pub cohorts: Vec<CohortBreakdown<S>>,
    pub network: Components<S>,
}

impl<S: Real> EmissionsBreakdown<S> {
    pub fn cohort(&self, name: &str) -> Option<&CohortBreakdown<S>> {
        self.cohorts.iter().find(|c| c.name == name)
    }

    /// Embodied share of the total, zero for an empty network.
    pub fn embodied_share(&self) -> S {
        let total = self.network.c_total.canonical();
        if total > S::zero() {
            self.network.c_emb.canonical() / total
        } else {
            S::zero()
        }
    }

    pub fn counts(&self) -> PlotCounts<S> {
        self.cohorts.iter().fold(PlotCounts::default(), |acc, c| PlotCounts {
            n_c5: acc.n_c5 + c.counts.n_c5,
            n_mm: acc.n_mm + c.counts.n_mm,
            n_std: acc.n_std + c.counts.n_std,
        })
    }
}

fn ensure_valid<S: Real>(s: &Scenario<S>) -> Result<(), ModelError> {
    let report = s.validate();
    if report.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(report))
    }
}

fn allocate<S: Real>(p: &ParameterSet<S>, c: &ResolvedCohort<S>) -> Result<CohortAllocation<S>, ModelError> {
    let growth = p.s_netg.in_unit(DataUnit::TiB) * c.netspace_share.value();
    let stock = p.s_net.in_unit(DataUnit::TiB) * c.netspace_share.value();
    Ok(CohortAllocation {
        cohort: c.name.clone(),
        s_c5: DataSize::tib(growth * c.mix.bladebit.value())?,
        s_mm: DataSize::tib(growth * c.mix.madmax.value())?,
        s_std: DataSize::tib(growth * c.mix.standard.value())?,
        s_stock: DataSize::tib(stock)?,
    })
}

/// Splits network netspace over cohorts and, within each, over plotters.
pub fn partition_netspace<S: Real>(s: &Scenario<S>) -> Result<Vec<CohortAllocation<S>>, ModelError> {
    ensure_valid(s)?;
    s.resolved_cohorts().iter().map(|c| allocate(&s.params, c)).collect()
}

pub fn plot_counts<S: Real>(a: &CohortAllocation<S>, p: &ParameterSet<S>) -> Result<PlotCounts<S>, ModelError> {
    let per_plot = |space: DataSize<S>, kind: PlotterKind| {
        let size = p.plot_size(kind).in_unit(DataUnit::GiB);
        if size <= S::zero() {
            Err(ModelError::DegeneratePlotSize(kind))
        } else {
            Ok(space.in_unit(DataUnit::GiB) / size)
        }
    };
    Ok(PlotCounts {
        n_c5: per_plot(a.s_c5, PlotterKind::BladebitGpu)?,
        n_mm: per_plot(a.s_mm, PlotterKind::MadMax)?,
        n_std: per_plot(a.s_std, PlotterKind::Standard)?,
    })
}

/// Plot count for `kind`; Bladebit plots are split between RAM and GPU mode.
fn kind_count<S: Real>(c: &ResolvedCohort<S>, n: &PlotCounts<S>, kind: PlotterKind) -> S {
    let split = c.bb_gpu_split.value();
    match kind {
        PlotterKind::Standard => n.n_std,
        PlotterKind::MadMax => n.n_mm,
        PlotterKind::BladebitRam => n.n_c5 * (S::one() - split),
        PlotterKind::BladebitGpu => n.n_c5 * split,
    }
}

/// Count × per-plot energy × PUE for each plotter.
pub fn plotting_energy<S: Real>(c: &ResolvedCohort<S>, n: &PlotCounts<S>) -> Result<PlottingEnergy<S>, ModelError> {
    let pue = c.pue.value();
    let energy = |kind: PlotterKind| -> Result<Energy<S>, ModelError> {
        let count = kind_count(c, n, kind);
        if count == S::zero() {
            return Ok(Energy::zero());
        }
        let profile = c.profiles.get(&kind).ok_or_else(|| ModelError::MissingProfile {
            cohort: c.name.clone(),
            kind,
        })?;
        Ok(Energy::kwh(count * profile.per_plot_energy.canonical() * pue)?)
    };
    Ok(PlottingEnergy {
        bladebit_ram: energy(PlotterKind::BladebitRam)?,
        bladebit_gpu: energy(PlotterKind::BladebitGpu)?,
        madmax: energy(PlotterKind::MadMax)?,
        standard: energy(PlotterKind::Standard)?,
    })
}

/// Nodes × annual per-node energy × PUE.
pub fn farming_energy<S: Real>(c: &ResolvedCohort<S>, n_node_total: u64) -> Energy<S> {
    let nodes = c.node_share.value() * lit(n_node_total as f64);
    Energy::kwh(nodes * c.farm_energy.canonical() * c.pue.value()).unwrap_or_default()
}

pub fn electricity_carbon<S: Real>(e_op: Energy<S>, i: CarbonIntensity<S>) -> CarbonMass<S> {
    e_op * i
}

fn cohort_ssd<S: Real>(p: &ParameterSet<S>, c: &ResolvedCohort<S>, n: &PlotCounts<S>) -> Result<CarbonMass<S>, ModelError> {
    let tbw = c.ssd_tbw.in_unit(DataUnit::TiB);
    if tbw <= S::zero() {
        return Err(ModelError::ZeroTbw(c.name.clone()));
    }
    let writes = p.t_writes_std.in_unit(DataUnit::TiB) * n.n_std
        + p.t_writes_mm.in_unit(DataUnit::TiB) * n.n_mm
        + p.t_writes_bb.in_unit(DataUnit::TiB) * n.n_c5;
    // drives are 1 TiB, so writes / TBW counts drives worn out
    Ok(CarbonMass::kg(writes * p.gamma_ssd.canonical() / tbw)?)
}

fn gpu_node_count<S: Real>(c: &ResolvedCohort<S>, nodes: S) -> S {
    let bladebit_nodes = nodes * c.mix.bladebit.value();
    match c.gpu_nodes {
        GpuNodeRule::AllBladebit => bladebit_nodes,
        GpuNodeRule::GpuSplit => bladebit_nodes * c.bb_gpu_split.value(),
    }
}

fn cohort_devices<S: Real>(p: &ParameterSet<S>, c: &ResolvedCohort<S>) -> Result<DeviceEmbodied<S>, ModelError> {
    let nodes = c.node_share.value() * lit(p.n_node as f64);
    let gpu_nodes = gpu_node_count(c, nodes);
    let ram_plotting_nodes =
        nodes * c.mix.bladebit.value() * (S::one() - c.bb_gpu_split.value());
    let per_year = p.f_allocation.value() / p.l_lifetime.value();

    let base = c.embodied_chassis.canonical() + c.embodied_ram_per_node.canonical();
    let mut gpu = gpu_nodes * (base + c.embodied_gpu.canonical());
    let mut nogpu = (nodes - gpu_nodes).max(S::zero()) * base;
    // RAM-mode plotters sit with the GPU machines when all Bladebit nodes carry one
    let ram_extra = ram_plotting_nodes * c.embodied_ram_plotting.canonical();
    match c.gpu_nodes {
        GpuNodeRule::AllBladebit => gpu = gpu + ram_extra,
        GpuNodeRule::GpuSplit => nogpu = nogpu + ram_extra,
    }
    Ok(DeviceEmbodied {
        gpu: CarbonMass::kg(gpu * per_year)?,
        nogpu: CarbonMass::kg(nogpu * per_year)?,
    })
}

fn cohort_hdd<S: Real>(p: &ParameterSet<S>, a: &CohortAllocation<S>) -> Result<CarbonMass<S>, ModelError> {
    let stock = a.s_stock.in_unit(DataUnit::TiB);
    Ok(CarbonMass::kg(stock * p.gamma_hdd.canonical() / p.l_lifetime.value())?)
}

fn cohort_components<S: Real>(
    p: &ParameterSet<S>,
    c: &ResolvedCohort<S>,
) -> Result<CohortBreakdown<S>, ModelError> {
    let allocation = allocate(p, c)?;
    let counts = plot_counts(&allocation, p)?;
    let plotting = plotting_energy(c, &counts)?;
    let e_farm = farming_energy(c, p.n_node);
    let e_op = plotting.total() + e_farm;
    let c_elec = electricity_carbon(e_op, p.i_elec);
    let c_emb_ssd = cohort_ssd(p, c, &counts)?;
    let devices = cohort_devices(p, c)?;
    let c_emb_hdd = cohort_hdd(p, &allocation)?;
    let c_emb = c_emb_ssd + devices.gpu + devices.nogpu + c_emb_hdd;
    let nodes = c.node_share.value() * lit(p.n_node as f64);
    Ok(CohortBreakdown {
        name: c.name.clone(),
        nodes,
        gpu_nodes: gpu_node_count(c, nodes),
        allocation,
        counts,
        components: Components {
            plotting,
            e_farm,
            e_op,
            c_elec,
            c_emb_ssd,
            c_emb_gpu_devices: devices.gpu,
            c_emb_nogpu_devices: devices.nogpu,
            c_emb_hdd,
            c_emb,
            c_total: c_elec + c_emb,
        },
    })
}

/// Plotting plus farming energy across all cohorts.
pub fn operational_energy<S: Real>(s: &Scenario<S>) -> Result<Energy<S>, ModelError> {
    Ok(total_emissions(s)?.network.e_op)
}

pub fn embodied_ssd<S: Real>(s: &Scenario<S>) -> Result<CarbonMass<S>, ModelError> {
    Ok(total_emissions(s)?.network.c_emb_ssd)
}

pub fn embodied_devices<S: Real>(s: &Scenario<S>) -> Result<DeviceEmbodied<S>, ModelError> {
    ensure_valid(s)?;
    s.resolved_cohorts()
        .iter()
        .map(|c| cohort_devices(&s.params, c))
        .try_fold(DeviceEmbodied::default(), |acc, d| {
            let d = d?;
            Ok(DeviceEmbodied { gpu: acc.gpu + d.gpu, nogpu: acc.nogpu + d.nogpu })
        })
}

pub fn embodied_hdd<S: Real>(s: &Scenario<S>) -> Result<CarbonMass<S>, ModelError> {
    partition_netspace(s)?
        .iter()
        .map(|a| cohort_hdd(&s.params, a))
        .sum()
}

/// Full per-cohort and network breakdown of a validated scenario.
pub fn total_emissions<S: Real>(s: &Scenario<S>) -> Result<EmissionsBreakdown<S>, ModelError> {
    ensure_valid(s)?;
    let cohorts = s
        .resolved_cohorts()
        .iter()
        .map(|c| cohort_components(&s.params, c))
        .collect::<Result<Vec<_>, _>>()?;
    let network = cohorts
        .iter()
        .map(|c| c.components)
        .fold(Components::default(), |a, b| a + b);
    Ok(EmissionsBreakdown { scenario: s.name.clone(), cohorts, network })
}

/// A population of identical devices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceProfile<S: Real> {
    pub energy: Energy<S>,
    pub pue: Pue<S>,
    pub count: u64,
}

/// Fleet energy as the sum of per-device energy times PUE.
pub fn bottom_up_total<S: Real>(devices: &[DeviceProfile<S>]) -> Energy<S> {
    devices
        .iter()
        .map(|d| {
            let kwh = lit::<S>(d.count as f64) * d.energy.canonical() * d.pue.value();
            Energy::kwh(kwh).unwrap_or_default()
        })
        .sum()
}

/// Network energy from hash rate (hash/s) and hardware efficiency (J/hash).
pub fn top_down_total<S: Real>(
    hash_rate: S,
    joules_per_hash: S,
    pue: Pue<S>,
    duration: DurationYears<S>,
) -> Result<Energy<S>, QuantityError> {
    let watts = hash_rate * joules_per_hash * pue.value();
    let power = crate::quantities::Power::watts(watts)?;
    Ok(power.over_hours(duration.hours()))
}
