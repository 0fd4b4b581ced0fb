//! Global model parameters, their units and where each value comes from.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::quantities::{
    CarbonIntensity, CarbonMass, DataSize, DataUnit, DurationYears, Energy, EnergyUnit, Fraction,
    Pue, QuantityError,
};
use crate::real::{lit, to_f64, Real};

/// Where a parameter value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    /// Measured on the testbed.
    Empirical,
    /// Taken from published sources.
    Literature,
    /// Modelling assumption.
    Assumed,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Empirical => "empirical",
            Provenance::Literature => "literature",
            Provenance::Assumed => "assumed",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empirical" => Ok(Provenance::Empirical),
            "literature" => Ok(Provenance::Literature),
            "assumed" => Ok(Provenance::Assumed),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

/// One row of the testbed measurement summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasuredRun {
    StandardPlotting,
    MadMaxPlotting,
    BladebitRamPlotting,
    BladebitGpuPlotting,
    Farming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasuredColumn {
    Energy,
    DiskWrites,
}

/// Identifies the measurement an empirical parameter is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Measurement {
    pub run: MeasuredRun,
    pub column: MeasuredColumn,
}

macro_rules! param_fields {
    ($($variant:ident => ($key:literal, $unit:literal, $prov:ident)),+ $(,)?) => {
        /// Every named global parameter.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ParamField {
            $($variant),+
        }

        impl ParamField {
            pub const ALL: &'static [ParamField] = &[$(ParamField::$variant),+];

            /// Lower-snake-case key used in scenario files and sweep paths.
            pub fn key(self) -> &'static str {
                match self {
                    $(ParamField::$variant => $key),+
                }
            }

            /// Unit in which the value is read and written by name.
            pub fn unit(self) -> &'static str {
                match self {
                    $(ParamField::$variant => $unit),+
                }
            }

            pub fn default_provenance(self) -> Provenance {
                match self {
                    $(ParamField::$variant => Provenance::$prov),+
                }
            }
        }
    };
}

param_fields! {
    SNet => ("s_net", "EiB", Literature),
    SNetg => ("s_netg", "EiB", Literature),
    NNode => ("n_node", "nodes", Literature),
    SPlot => ("s_plot", "GiB", Literature),
    SPlotC5 => ("s_plot_c5", "GiB", Literature),
    EPlotStd => ("e_plot_std", "kWh", Empirical),
    EPlotC5Ram => ("e_plot_c5_ram", "Wh", Empirical),
    EPlotC5Gpu => ("e_plot_c5_gpu", "Wh", Empirical),
    EPlotMm => ("e_plot_mm", "Wh", Empirical),
    EFarmServer => ("e_farm_server", "kWh/node-yr", Empirical),
    PueServer => ("pue_server", "1", Literature),
    IElec => ("i_elec", "kg/kWh", Literature),
    TWritesStd => ("t_writes_std", "TiB", Empirical),
    TWritesMm => ("t_writes_mm", "TiB", Empirical),
    TWritesBb => ("t_writes_bb", "TiB", Empirical),
    GammaSsd => ("gamma_ssd", "kg/TiB", Literature),
    GammaHdd => ("gamma_hdd", "kg/TiB", Literature),
    GammaGpu => ("gamma_gpu", "kg/GPU", Literature),
    GammaEnter => ("gamma_enter", "kg/server", Literature),
    GammaRam => ("gamma_ram", "kg/GiB", Assumed),
    TbwSsdServer => ("tbw_ssd_server", "TiB", Literature),
    LLifetime => ("l_lifetime", "yr", Literature),
    FBb => ("f_bb", "1", Literature),
    FMm => ("f_mm", "1", Assumed),
    FStd => ("f_std", "1", Assumed),
    FAllocation => ("f_allocation", "1", Assumed),
}

impl ParamField {
    /// The testbed measurement an empirical parameter is taken from.
    pub fn measurement(self) -> Option<Measurement> {
        use MeasuredColumn::*;
        use MeasuredRun::*;
        let (run, column) = match self {
            ParamField::EPlotStd => (StandardPlotting, Energy),
            ParamField::EPlotMm => (MadMaxPlotting, Energy),
            ParamField::EPlotC5Ram => (BladebitRamPlotting, Energy),
            ParamField::EPlotC5Gpu => (BladebitGpuPlotting, Energy),
            ParamField::EFarmServer => (Farming, Energy),
            ParamField::TWritesStd => (StandardPlotting, DiskWrites),
            ParamField::TWritesMm => (MadMaxPlotting, DiskWrites),
            ParamField::TWritesBb => (BladebitRamPlotting, DiskWrites),
            _ => return None,
        };
        Some(Measurement { run, column })
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ParamField {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        // `pue` and `e_farm` are accepted as the short table names
        let key = match key {
            "pue" => "pue_server",
            "e_farm" => "e_farm_server",
            "e_plot" => "e_plot_std",
            "t_writes" => "t_writes_std",
            "tbw_ssd" => "tbw_ssd_server",
            other => other,
        };
        ParamField::ALL
            .iter()
            .copied()
            .find(|f| f.key() == key)
            .ok_or_else(|| ParamError::UnknownField(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownField(String),
    #[error("parameter `{field}`: {source}")]
    Invalid { field: ParamField, source: QuantityError },
    #[error("parameter `{field}` must be a positive integer, got {value}")]
    NotACount { field: ParamField, value: f64 },
}

/// The global parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet<S: Real> {
    pub s_net: DataSize<S>,
    pub s_netg: DataSize<S>,
    pub n_node: u64,
    pub s_plot: DataSize<S>,
    pub s_plot_c5: DataSize<S>,
    pub e_plot_std: Energy<S>,
    pub e_plot_c5_ram: Energy<S>,
    pub e_plot_c5_gpu: Energy<S>,
    pub e_plot_mm: Energy<S>,
    /// Annual farming energy of one node.
    pub e_farm_server: Energy<S>,
    pub pue_server: Pue<S>,
    pub i_elec: CarbonIntensity<S>,
    pub t_writes_std: DataSize<S>,
    pub t_writes_mm: DataSize<S>,
    pub t_writes_bb: DataSize<S>,
    /// Embodied carbon of one TiB of SSD.
    pub gamma_ssd: CarbonMass<S>,
    /// Embodied carbon of one TiB of HDD.
    pub gamma_hdd: CarbonMass<S>,
    /// Embodied carbon of one GPU.
    pub gamma_gpu: CarbonMass<S>,
    /// Embodied carbon of one server chassis.
    pub gamma_enter: CarbonMass<S>,
    /// Embodied carbon of one GiB of RAM.
    pub gamma_ram: CarbonMass<S>,
    pub tbw_ssd_server: DataSize<S>,
    pub l_lifetime: DurationYears<S>,
    pub f_bb: Fraction<S>,
    pub f_mm: Fraction<S>,
    pub f_std: Fraction<S>,
    pub f_allocation: Fraction<S>,
    provenance: BTreeMap<ParamField, Provenance>,
}

fn q<T>(r: Result<T, QuantityError>) -> T {
    r.expect("built-in parameter value is valid")
}

pub fn default_parameter_set<S: Real>() -> ParameterSet<S> {
    ParameterSet::default()
}

impl<S: Real> Default for ParameterSet<S> {
    fn default() -> Self {
        ParameterSet {
            s_net: q(DataSize::eib(lit(33.8465))),
            s_netg: q(DataSize::eib(lit(12.6593))),
            n_node: 250_000,
            s_plot: q(DataSize::gib(lit(101.4))),
            s_plot_c5: q(DataSize::gib(lit(81.3))),
            e_plot_std: q(Energy::kwh(lit(4.995))),
            e_plot_c5_ram: q(Energy::wh(lit(165.637))),
            e_plot_c5_gpu: q(Energy::wh(lit(85.968))),
            e_plot_mm: q(Energy::wh(lit(927.634))),
            e_farm_server: q(Energy::kwh(lit(6761.283))),
            pue_server: q(Pue::new(lit(1.58))),
            i_elec: q(CarbonIntensity::new(lit(0.384))),
            t_writes_std: q(DataSize::tib(lit(1.64))),
            t_writes_mm: q(DataSize::tib(lit(1.357))),
            t_writes_bb: q(DataSize::tib(lit(0.084))),
            gamma_ssd: q(CarbonMass::kg(lit(160.0))),
            gamma_hdd: q(CarbonMass::kg(lit(20.0))),
            gamma_gpu: q(CarbonMass::kg(lit(200.0))),
            gamma_enter: q(CarbonMass::kg(lit(1000.0))),
            gamma_ram: q(CarbonMass::kg(lit(0.6))),
            tbw_ssd_server: q(DataSize::tib(lit(2390.15207))),
            l_lifetime: q(DurationYears::new(lit(4.0))),
            f_bb: q(Fraction::new(lit(0.6))),
            f_mm: q(Fraction::new(lit(0.3))),
            f_std: q(Fraction::new(lit(0.1))),
            f_allocation: q(Fraction::new(lit(0.67))),
            provenance: ParamField::ALL.iter().map(|&f| (f, f.default_provenance())).collect(),
        }
    }
}

impl<S: Real> ParameterSet<S> {
    pub fn provenance(&self, field: ParamField) -> Provenance {
        self.provenance.get(&field).copied().unwrap_or(field.default_provenance())
    }

    /// Value of `field` in the unit given by [`ParamField::unit`].
    pub fn get(&self, field: ParamField) -> S {
        use ParamField::*;
        match field {
            SNet => self.s_net.in_unit(DataUnit::EiB),
            SNetg => self.s_netg.in_unit(DataUnit::EiB),
            NNode => lit(self.n_node as f64),
            SPlot => self.s_plot.in_unit(DataUnit::GiB),
            SPlotC5 => self.s_plot_c5.in_unit(DataUnit::GiB),
            EPlotStd => self.e_plot_std.in_unit(EnergyUnit::KilowattHour),
            EPlotC5Ram => self.e_plot_c5_ram.in_unit(EnergyUnit::WattHour),
            EPlotC5Gpu => self.e_plot_c5_gpu.in_unit(EnergyUnit::WattHour),
            EPlotMm => self.e_plot_mm.in_unit(EnergyUnit::WattHour),
            EFarmServer => self.e_farm_server.in_unit(EnergyUnit::KilowattHour),
            PueServer => self.pue_server.value(),
            IElec => self.i_elec.value(),
            TWritesStd => self.t_writes_std.in_unit(DataUnit::TiB),
            TWritesMm => self.t_writes_mm.in_unit(DataUnit::TiB),
            TWritesBb => self.t_writes_bb.in_unit(DataUnit::TiB),
            GammaSsd => self.gamma_ssd.canonical(),
            GammaHdd => self.gamma_hdd.canonical(),
            GammaGpu => self.gamma_gpu.canonical(),
            GammaEnter => self.gamma_enter.canonical(),
            GammaRam => self.gamma_ram.canonical(),
            TbwSsdServer => self.tbw_ssd_server.in_unit(DataUnit::TiB),
            LLifetime => self.l_lifetime.value(),
            FBb => self.f_bb.value(),
            FMm => self.f_mm.value(),
            FStd => self.f_std.value(),
            FAllocation => self.f_allocation.value(),
        }
    }

    /// Sets `field` from a value in the unit given by [`ParamField::unit`].
    pub fn set(&mut self, field: ParamField, value: S) -> Result<(), ParamError> {
        use ParamField::*;
        let inv = |source| ParamError::Invalid { field, source };
        match field {
            SNet => self.s_net = DataSize::eib(value).map_err(inv)?,
            SNetg => self.s_netg = DataSize::eib(value).map_err(inv)?,
            NNode => {
                let v = to_f64(value);
                if !(v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
                    return Err(ParamError::NotACount { field, value: v });
                }
                self.n_node = v as u64;
            }
            SPlot => self.s_plot = DataSize::gib(value).map_err(inv)?,
            SPlotC5 => self.s_plot_c5 = DataSize::gib(value).map_err(inv)?,
            EPlotStd => self.e_plot_std = Energy::kwh(value).map_err(inv)?,
            EPlotC5Ram => self.e_plot_c5_ram = Energy::wh(value).map_err(inv)?,
            EPlotC5Gpu => self.e_plot_c5_gpu = Energy::wh(value).map_err(inv)?,
            EPlotMm => self.e_plot_mm = Energy::wh(value).map_err(inv)?,
            EFarmServer => self.e_farm_server = Energy::kwh(value).map_err(inv)?,
            PueServer => self.pue_server = Pue::new(value).map_err(inv)?,
            IElec => self.i_elec = CarbonIntensity::new(value).map_err(inv)?,
            TWritesStd => self.t_writes_std = DataSize::tib(value).map_err(inv)?,
            TWritesMm => self.t_writes_mm = DataSize::tib(value).map_err(inv)?,
            TWritesBb => self.t_writes_bb = DataSize::tib(value).map_err(inv)?,
            GammaSsd => self.gamma_ssd = CarbonMass::kg(value).map_err(inv)?,
            GammaHdd => self.gamma_hdd = CarbonMass::kg(value).map_err(inv)?,
            GammaGpu => self.gamma_gpu = CarbonMass::kg(value).map_err(inv)?,
            GammaEnter => self.gamma_enter = CarbonMass::kg(value).map_err(inv)?,
            GammaRam => self.gamma_ram = CarbonMass::kg(value).map_err(inv)?,
            TbwSsdServer => self.tbw_ssd_server = DataSize::tib(value).map_err(inv)?,
            LLifetime => self.l_lifetime = DurationYears::new(value).map_err(inv)?,
            FBb => self.f_bb = Fraction::new(value).map_err(inv)?,
            FMm => self.f_mm = Fraction::new(value).map_err(inv)?,
            FStd => self.f_std = Fraction::new(value).map_err(inv)?,
            FAllocation => self.f_allocation = Fraction::new(value).map_err(inv)?,
        }
        Ok(())
    }

    /// Sets a value and records where it came from.
    pub fn set_with_provenance(
        &mut self,
        field: ParamField,
        value: S,
        provenance: Provenance,
    ) -> Result<(), ParamError> {
        self.set(field, value)?;
        self.provenance.insert(field, provenance);
        Ok(())
    }
}

/// The four plotting pipelines the model distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlotterKind {
    Standard,
    MadMax,
    BladebitRam,
    BladebitGpu,
}

impl PlotterKind {
    pub const ALL: [PlotterKind; 4] =
        [PlotterKind::Standard, PlotterKind::MadMax, PlotterKind::BladebitRam, PlotterKind::BladebitGpu];

    /// Bladebit variants produce compressed (C5) plots.
    pub fn is_compressed(self) -> bool {
        matches!(self, PlotterKind::BladebitRam | PlotterKind::BladebitGpu)
    }

    pub fn key(self) -> &'static str {
        match self {
            PlotterKind::Standard => "standard",
            PlotterKind::MadMax => "madmax",
            PlotterKind::BladebitRam => "bladebit_ram",
            PlotterKind::BladebitGpu => "bladebit_gpu",
        }
    }

    /// Global parameter holding this kind's per-plot energy.
    pub fn energy_field(self) -> ParamField {
        match self {
            PlotterKind::Standard => ParamField::EPlotStd,
            PlotterKind::MadMax => ParamField::EPlotMm,
            PlotterKind::BladebitRam => ParamField::EPlotC5Ram,
            PlotterKind::BladebitGpu => ParamField::EPlotC5Gpu,
        }
    }

    /// Global parameter holding this kind's per-plot SSD writes.
    pub fn writes_field(self) -> ParamField {
        match self {
            PlotterKind::Standard => ParamField::TWritesStd,
            PlotterKind::MadMax => ParamField::TWritesMm,
            PlotterKind::BladebitRam | PlotterKind::BladebitGpu => ParamField::TWritesBb,
        }
    }
}

impl fmt::Display for PlotterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for PlotterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "standard" | "std" => Ok(PlotterKind::Standard),
            "madmax" | "mm" => Ok(PlotterKind::MadMax),
            "bladebit_ram" => Ok(PlotterKind::BladebitRam),
            "bladebit_gpu" | "bladebit_cuda" => Ok(PlotterKind::BladebitGpu),
            _ => Err(format!("unknown plotter `{s}`")),
        }
    }
}

/// Per-plot cost of one plotter on one host class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotterProfile<S: Real> {
    pub kind: PlotterKind,
    pub per_plot_energy: Energy<S>,
    pub per_plot_writes: DataSize<S>,
    pub plot_size: DataSize<S>,
    pub compressed: bool,
}

impl<S: Real> ParameterSet<S> {
    pub fn plot_size(&self, kind: PlotterKind) -> DataSize<S> {
        if kind.is_compressed() {
            self.s_plot_c5
        } else {
            self.s_plot
        }
    }

    pub fn plot_writes(&self, kind: PlotterKind) -> DataSize<S> {
        match kind {
            PlotterKind::Standard => self.t_writes_std,
            PlotterKind::MadMax => self.t_writes_mm,
            PlotterKind::BladebitRam | PlotterKind::BladebitGpu => self.t_writes_bb,
        }
    }

    pub fn plot_energy(&self, kind: PlotterKind) -> Energy<S> {
        match kind {
            PlotterKind::Standard => self.e_plot_std,
            PlotterKind::MadMax => self.e_plot_mm,
            PlotterKind::BladebitRam => self.e_plot_c5_ram,
            PlotterKind::BladebitGpu => self.e_plot_c5_gpu,
        }
    }

    /// Profile measured on the reference server.
    pub fn server_profile(&self, kind: PlotterKind) -> PlotterProfile<S> {
        PlotterProfile {
            kind,
            per_plot_energy: self.plot_energy(kind),
            per_plot_writes: self.plot_writes(kind),
            plot_size: self.plot_size(kind),
            compressed: kind.is_compressed(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_values_and_tags() {
        let p = default_parameter_set::<f64>();
        assert_eq!(p.e_plot_std.in_unit(EnergyUnit::KilowattHour), 4.995);
        assert_eq!(p.provenance(ParamField::EPlotStd), Provenance::Empirical);
        assert_eq!(p.i_elec.value(), 0.384);
        assert_eq!(p.provenance(ParamField::IElec), Provenance::Literature);
        let sum = p.f_bb.value() + p.f_mm.value() + p.f_std.value();
        assert!((sum - 1.0).abs() < 1e-9);
        assert_eq!((p.f_bb.value(), p.f_mm.value(), p.f_std.value()), (0.6, 0.3, 0.1));
        assert_eq!(p.n_node, 250_000);
        assert_eq!(p.f_allocation.value(), 0.67);
    }

    #[test]
    fn field_keys_round_trip() {
        for &f in ParamField::ALL {
            assert_eq!(f.key().parse::<ParamField>().unwrap(), f);
        }
        assert_eq!("pue".parse::<ParamField>().unwrap(), ParamField::PueServer);
        assert!("pue_moon".parse::<ParamField>().is_err());
    }

    #[test]
    fn get_set_in_table_units() {
        let mut p = default_parameter_set::<f64>();
        for &f in ParamField::ALL {
            let v = p.get(f);
            p.set(f, v).unwrap();
            assert_eq!(p.get(f), v, "{f}");
        }
        p.set(ParamField::EPlotC5Ram, 200.0).unwrap();
        assert_eq!(p.e_plot_c5_ram.in_unit(EnergyUnit::KilowattHour), 0.2);
        assert!(p.set(ParamField::PueServer, 0.5).is_err());
        assert!(p.set(ParamField::NNode, 0.0).is_err());
        assert!(p.set(ParamField::NNode, 1.5).is_err());
        assert!(p.set(ParamField::FBb, 1.5).is_err());
    }

    #[test]
    fn plotter_profiles() {
        let p = default_parameter_set::<f64>();
        let bb = p.server_profile(PlotterKind::BladebitGpu);
        assert!(bb.compressed);
        assert_eq!(bb.plot_size.in_unit(DataUnit::GiB), 81.3);
        let std = p.server_profile(PlotterKind::Standard);
        assert!(!std.compressed);
        assert_eq!(std.plot_size.in_unit(DataUnit::GiB), 101.4);
        assert_eq!(std.per_plot_writes.in_unit(DataUnit::TiB), 1.64);
    }

    #[test]
    fn override_keeps_requested_provenance() {
        let mut p = default_parameter_set::<f64>();
        p.set_with_provenance(ParamField::IElec, 0.2, Provenance::Assumed).unwrap();
        assert_eq!(p.provenance(ParamField::IElec), Provenance::Assumed);
    }

    proptest! {
        /// Empirical parameters, and only those, trace back to a testbed measurement.
        #[test]
        fn measurement_mapping_is_total(i in 0usize..ParamField::ALL.len()) {
            let f = ParamField::ALL[i];
            let empirical = f.default_provenance() == Provenance::Empirical;
            prop_assert_eq!(empirical, f.measurement().is_some());
        }
    }
}
