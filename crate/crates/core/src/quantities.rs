//! Dimension-tagged quantities used by the footprint model.
//!
//! Each physical dimension gets its own type, so adding an energy to a
//! carbon mass does not compile:
//!
//! ```compile_fail
//! use postcarbon::quantities::{CarbonMass, Energy, EnergyUnit, MassUnit};
//! let e = Energy::<f64>::new(1.0, EnergyUnit::KilowattHour).unwrap();
//! let m = CarbonMass::<f64>::new(1.0, MassUnit::Kilogram).unwrap();
//! let _ = e + m;
//! ```
//!
//! Scaled quantities keep the unit they were constructed in; equality and
//! ordering compare the canonical magnitude (TiB, kWh, kg).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use thiserror::Error;

use crate::real::{lit, to_f64, Real};

/// Hours in one (non-leap) year.
pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantityError {
    #[error("{quantity} must be finite, got {value}")]
    NotFinite { quantity: &'static str, value: f64 },
    #[error("{quantity} must be non-negative, got {value}")]
    Negative { quantity: &'static str, value: f64 },
    #[error("fraction must lie in [0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("PUE must be at least 1, got {0}")]
    PueBelowOne(f64),
    #[error("duration must be positive, got {0} years")]
    NonPositiveDuration(f64),
    #[error("unknown {quantity} unit `{unit}`")]
    UnknownUnit { quantity: &'static str, unit: String },
    #[error("cannot parse `{0}` as a quantity")]
    Unparsable(String),
}

fn check_magnitude<S: Real>(quantity: &'static str, value: S) -> Result<S, QuantityError> {
    if !value.is_finite() {
        return Err(QuantityError::NotFinite { quantity, value: to_f64(value) });
    }
    if value < S::zero() {
        return Err(QuantityError::Negative { quantity, value: to_f64(value) });
    }
    Ok(value)
}

/// Rescales `value` from a unit with canonical factor `from` to one with
/// factor `to`. Integral ratios are applied by a single multiply or divide.
fn rescale<S: Real>(value: S, from: f64, to: f64) -> S {
    if from == to {
        value
    } else if from > to {
        value * lit::<S>(from / to)
    } else {
        value / lit::<S>(to / from)
    }
}

macro_rules! scaled_quantity {
    (
        $(#[$meta:meta])*
        $name:ident, $unit:ident, $label:literal, canonical = $canon:ident,
        { $($variant:ident => ($factor:expr, $sym:literal)),+ $(,)? }
    ) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $unit {
            $($variant),+
        }

        impl $unit {
            pub const ALL: &'static [$unit] = &[$($unit::$variant),+];

            /// Size of one of this unit, expressed in the canonical unit.
            pub fn factor(self) -> f64 {
                match self {
                    $($unit::$variant => $factor),+
                }
            }

            pub fn symbol(self) -> &'static str {
                match self {
                    $($unit::$variant => $sym),+
                }
            }
        }

        impl fmt::Display for $unit {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.symbol())
            }
        }

        impl FromStr for $unit {
            type Err = QuantityError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $unit::ALL
                    .iter()
                    .copied()
                    .find(|u| u.symbol().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| QuantityError::UnknownUnit {
                        quantity: $label,
                        unit: s.to_string(),
                    })
            }
        }

        $(#[$meta])*
        #[derive(Debug, Clone, Copy)]
        pub struct $name<S> {
            value: S,
            unit: $unit,
        }

        impl<S: Real> $name<S> {
            pub fn new(value: S, unit: $unit) -> Result<Self, QuantityError> {
                Ok(Self { value: check_magnitude($label, value)?, unit })
            }

            pub fn zero() -> Self {
                Self { value: S::zero(), unit: $unit::$canon }
            }

            /// Builds from a magnitude already in the canonical unit.
            pub fn from_canonical(value: S) -> Result<Self, QuantityError> {
                Self::new(value, $unit::$canon)
            }

            pub fn value(&self) -> S {
                self.value
            }

            pub fn unit(&self) -> $unit {
                self.unit
            }

            /// Magnitude in the canonical unit.
            pub fn canonical(&self) -> S {
                self.in_unit($unit::$canon)
            }

            pub fn in_unit(&self, unit: $unit) -> S {
                rescale(self.value, self.unit.factor(), unit.factor())
            }

            /// Same quantity expressed in `unit`.
            pub fn to(&self, unit: $unit) -> Self {
                Self { value: self.in_unit(unit), unit }
            }

            /// Multiplies by a non-negative dimensionless factor.
            pub fn scale(&self, factor: S) -> Result<Self, QuantityError> {
                Self::new(self.value * factor, self.unit)
            }

            pub fn is_zero(&self) -> bool {
                self.value == S::zero()
            }
        }

        impl<S: Real> Default for $name<S> {
            fn default() -> Self {
                Self::zero()
            }
        }

        impl<S: Real> PartialEq for $name<S> {
            fn eq(&self, other: &Self) -> bool {
                self.canonical() == other.canonical()
            }
        }

        impl<S: Real> PartialOrd for $name<S> {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                self.canonical().partial_cmp(&other.canonical())
            }
        }

        impl<S: Real> Add for $name<S> {
            type Output = Self;

            fn add(self, rhs: Self) -> Self {
                Self { value: self.value + rhs.in_unit(self.unit), unit: self.unit }
            }
        }

        impl<S: Real> std::iter::Sum for $name<S> {
            fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
                iter.fold(Self::zero(), |a, b| a + b)
            }
        }

        impl<S: Real> fmt::Display for $name<S> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.value, self.unit)
            }
        }

        impl<S: Real> FromStr for $name<S> {
            type Err = QuantityError;

            /// Parses `"<number><unit>"` or `"<number> <unit>"`, e.g. `0.13TWh`.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                // longest numeric prefix, so "12EiB" and "1e3kWh" both split correctly
                let (value, unit) = (1..s.len())
                    .rev()
                    .filter(|&i| s.is_char_boundary(i))
                    .find_map(|i| {
                        let (num, unit) = s.split_at(i);
                        num.trim().parse::<f64>().ok().map(|v| (v, unit))
                    })
                    .ok_or_else(|| QuantityError::Unparsable(s.to_string()))?;
                Self::new(lit(value), unit.parse()?)
            }
        }
    };
}

scaled_quantity! {
    /// Amount of storage, binary prefixes throughout.
    DataSize, DataUnit, "data size", canonical = TiB,
    {
        GiB => (1.0 / 1024.0, "GiB"),
        TiB => (1.0, "TiB"),
        EiB => (1_048_576.0, "EiB"),
    }
}

scaled_quantity! {
    Energy, EnergyUnit, "energy", canonical = KilowattHour,
    {
        WattHour => (1e-3, "Wh"),
        KilowattHour => (1.0, "kWh"),
        MegawattHour => (1e3, "MWh"),
        TerawattHour => (1e9, "TWh"),
    }
}

scaled_quantity! {
    /// Mass of CO2 (or CO2-equivalent).
    CarbonMass, MassUnit, "carbon mass", canonical = Kilogram,
    {
        Kilogram => (1.0, "kg"),
        Tonne => (1e3, "t"),
        Megatonne => (1e9, "Mt"),
    }
}

impl<S: Real> DataSize<S> {
    pub fn tib(value: S) -> Result<Self, QuantityError> {
        Self::new(value, DataUnit::TiB)
    }

    pub fn gib(value: S) -> Result<Self, QuantityError> {
        Self::new(value, DataUnit::GiB)
    }

    pub fn eib(value: S) -> Result<Self, QuantityError> {
        Self::new(value, DataUnit::EiB)
    }

    /// Size of `bytes` bytes.
    pub fn from_bytes(bytes: u128) -> Self {
        // 2^40 bytes per TiB; the split keeps integer precision for the whole part.
        let whole = bytes >> 40;
        let rest = bytes & ((1u128 << 40) - 1);
        let tib = whole as f64 + rest as f64 / (1u64 << 40) as f64;
        Self { value: lit(tib), unit: DataUnit::TiB }
    }
}

impl<S: Real> Energy<S> {
    pub fn wh(value: S) -> Result<Self, QuantityError> {
        Self::new(value, EnergyUnit::WattHour)
    }

    pub fn kwh(value: S) -> Result<Self, QuantityError> {
        Self::new(value, EnergyUnit::KilowattHour)
    }
}

impl<S: Real> CarbonMass<S> {
    pub fn kg(value: S) -> Result<Self, QuantityError> {
        Self::new(value, MassUnit::Kilogram)
    }

    pub fn tonnes(value: S) -> Result<Self, QuantityError> {
        Self::new(value, MassUnit::Tonne)
    }

    pub fn megatonnes(value: S) -> Result<Self, QuantityError> {
        Self::new(value, MassUnit::Megatonne)
    }

    pub fn in_tonnes(&self) -> S {
        self.in_unit(MassUnit::Tonne)
    }

    pub fn in_megatonnes(&self) -> S {
        self.in_unit(MassUnit::Megatonne)
    }
}

macro_rules! single_unit {
    ($(#[$meta:meta])* $name:ident, $check:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        pub struct $name<S>(S);

        impl<S: Real> $name<S> {
            pub fn new(value: S) -> Result<Self, QuantityError> {
                let check: fn(S) -> Result<S, QuantityError> = $check;
                check(value).map(Self)
            }

            pub fn value(&self) -> S {
                self.0
            }
        }

        impl<S: Real> fmt::Display for $name<S> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

single_unit! {
    /// Electrical power in watts.
    Power, |v| check_magnitude("power", v)
}

single_unit! {
    /// kg CO2 per kWh.
    CarbonIntensity, |v| check_magnitude("carbon intensity", v)
}

single_unit! {
    /// Dimensionless share in `[0, 1]`.
    Fraction, |v| {
        if v.is_finite() && v >= S::zero() && v <= S::one() {
            Ok(v)
        } else {
            Err(QuantityError::FractionOutOfRange(to_f64(v)))
        }
    }
}

single_unit! {
    /// Power Usage Effectiveness, at least 1.
    Pue, |v| {
        if v.is_finite() && v >= S::one() {
            Ok(v)
        } else {
            Err(QuantityError::PueBelowOne(to_f64(v)))
        }
    }
}

single_unit! {
    /// Positive span of time in years.
    DurationYears, |v| {
        if v.is_finite() && v > S::zero() {
            Ok(v)
        } else {
            Err(QuantityError::NonPositiveDuration(to_f64(v)))
        }
    }
}

impl<S: Real> Fraction<S> {
    pub fn zero() -> Self {
        Fraction(S::zero())
    }

    pub fn one() -> Self {
        Fraction(S::one())
    }

    pub fn complement(&self) -> Self {
        Fraction(S::one() - self.0)
    }
}

impl<S: Real> Pue<S> {
    pub fn unity() -> Self {
        Pue(S::one())
    }
}

impl<S: Real> DurationYears<S> {
    pub fn one_year() -> Self {
        DurationYears(S::one())
    }

    pub fn from_hours(hours: S) -> Result<Self, QuantityError> {
        Self::new(hours / lit(HOURS_PER_YEAR))
    }

    pub fn hours(&self) -> S {
        self.0 * lit(HOURS_PER_YEAR)
    }
}

impl<S: Real> Power<S> {
    pub fn watts(value: S) -> Result<Self, QuantityError> {
        Self::new(value)
    }

    /// Energy drawn at this power over `hours` hours; 1 W for 1 h is 1 Wh.
    pub fn over_hours(&self, hours: S) -> Energy<S> {
        Energy { value: self.0 * hours.max(S::zero()), unit: EnergyUnit::WattHour }
    }
}

impl<S: Real> Mul<DurationYears<S>> for Power<S> {
    type Output = Energy<S>;

    fn mul(self, rhs: DurationYears<S>) -> Energy<S> {
        self.over_hours(rhs.hours())
    }
}

impl<S: Real> Mul<CarbonIntensity<S>> for Energy<S> {
    type Output = CarbonMass<S>;

    fn mul(self, rhs: CarbonIntensity<S>) -> CarbonMass<S> {
        CarbonMass { value: self.canonical() * rhs.0, unit: MassUnit::Kilogram }
    }
}

pub fn convert_data_size<S: Real>(q: DataSize<S>, target: DataUnit) -> DataSize<S> {
    q.to(target)
}

pub fn convert_energy<S: Real>(q: Energy<S>, target: EnergyUnit) -> Energy<S> {
    q.to(target)
}

pub fn convert_mass<S: Real>(q: CarbonMass<S>, target: MassUnit) -> CarbonMass<S> {
    q.to(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn netspace_growth_in_tib() {
        let q = DataSize::<f64>::eib(12.6593).unwrap();
        let tib = convert_data_size(q, DataUnit::TiB).value();
        assert!(rel(tib, 12.6593 * 1_048_576.0) < 1e-12);
        assert!(rel(tib, 13_274_238.157) < 1e-9);
        // 60% of it is the compressed-plot netspace printed with the model
        assert!(rel(0.6 * tib, 7_964_542.894) < 1e-9);
    }

    #[test]
    fn total_netspace_in_tib() {
        let q = DataSize::<f64>::eib(33.8465).unwrap();
        assert!(rel(q.in_unit(DataUnit::TiB), 35_490_627.6) < 1e-8);
    }

    #[test]
    fn tib_to_gib() {
        let q = DataSize::<f64>::tib(1.0).unwrap().to(DataUnit::GiB);
        assert_eq!(q.value(), 1024.0);
        assert_eq!(q.unit(), DataUnit::GiB);
    }

    #[test]
    fn energy_conversions() {
        let q = Energy::<f64>::wh(4995.0485).unwrap();
        assert!(rel(convert_energy(q, EnergyUnit::KilowattHour).value(), 4.9950485) < 1e-12);
        assert_eq!(Energy::<f64>::wh(0.0).unwrap().in_unit(EnergyUnit::KilowattHour), 0.0);
        let claim = Energy::<f64>::new(0.13, EnergyUnit::TerawattHour).unwrap();
        assert!(rel(claim.canonical(), 130_000_000.0) < 1e-12);
    }

    #[test]
    fn mass_conversions() {
        let m = CarbonMass::<f64>::kg(1_096_467_223.9).unwrap();
        assert!(rel(convert_mass(m, MassUnit::Tonne).value(), 1_096_467.223_9) < 1e-12);
        let t = CarbonMass::<f64>::tonnes(1_326_509.261).unwrap();
        assert!((t.in_megatonnes() - 1.3265).abs() < 1e-4);
        assert_eq!(CarbonMass::<f64>::zero().in_megatonnes(), 0.0);
    }

    #[test]
    fn constructors_reject_invalid_magnitudes() {
        assert!(matches!(Energy::<f64>::kwh(-1.0), Err(QuantityError::Negative { .. })));
        assert!(matches!(DataSize::<f64>::tib(f64::NAN), Err(QuantityError::NotFinite { .. })));
        assert!(CarbonMass::<f64>::kg(-0.1).is_err());
        assert!(Power::<f64>::watts(-5.0).is_err());
        assert!(CarbonIntensity::<f64>::new(-0.384).is_err());
        assert_eq!(Pue::<f64>::new(0.99), Err(QuantityError::PueBelowOne(0.99)));
        assert!(Pue::<f64>::new(1.0).is_ok());
        assert!(Fraction::<f64>::new(1.01).is_err());
        assert!(Fraction::<f64>::new(-0.01).is_err());
        assert!(DurationYears::<f64>::new(0.0).is_err());
    }

    #[test]
    fn watt_for_an_hour_is_a_watt_hour() {
        let one_hour = DurationYears::<f64>::from_hours(1.0).unwrap();
        let e = Power::watts(1.0).unwrap() * one_hour;
        assert!(rel(e.in_unit(EnergyUnit::WattHour), 1.0) < 1e-15);
        let laptop = Power::watts(32.0).unwrap() * DurationYears::one_year();
        assert!(rel(laptop.in_unit(EnergyUnit::KilowattHour), 280.32) < 1e-12);
    }

    #[test]
    fn energy_times_intensity_is_mass() {
        let e = Energy::<f64>::kwh(130_000_000.0).unwrap();
        let m = e * CarbonIntensity::new(0.384).unwrap();
        assert!(rel(m.in_tonnes(), 49_920.0) < 1e-12);
    }

    #[test]
    fn addition_normalises_to_lhs_unit() {
        let a = Energy::<f64>::kwh(1.0).unwrap();
        let b = Energy::<f64>::wh(500.0).unwrap();
        let s = a + b;
        assert_eq!(s.unit(), EnergyUnit::KilowattHour);
        assert!(rel(s.value(), 1.5) < 1e-15);
    }

    #[test]
    fn parses_value_with_unit() {
        let e: Energy<f64> = "0.13TWh".parse().unwrap();
        assert_eq!(e.unit(), EnergyUnit::TerawattHour);
        let d: DataSize<f64> = "81.3 GiB".parse().unwrap();
        assert_eq!(d.unit(), DataUnit::GiB);
        let n: DataSize<f64> = "12EiB".parse().unwrap();
        assert_eq!(n.unit(), DataUnit::EiB);
        let big: Energy<f64> = "1e3 kWh".parse().unwrap();
        assert_eq!(big.value(), 1000.0);
        assert!("12 parsecs".parse::<Energy<f64>>().is_err());
        assert!("TWh".parse::<Energy<f64>>().is_err());
    }

    #[test]
    fn single_precision_conversion() {
        let q = DataSize::<f32>::eib(1.0).unwrap();
        assert_eq!(q.in_unit(DataUnit::GiB), 1_073_741_824.0f32);
    }

    proptest! {
        #[test]
        fn data_round_trip(v in 0.0f64..1e12, a in 0usize..3, b in 0usize..3) {
            let (ua, ub) = (DataUnit::ALL[a], DataUnit::ALL[b]);
            let back = DataSize::new(v, ua).unwrap().to(ub).to(ua).value();
            prop_assert!(rel(back, v) <= 1e-12);
        }

        #[test]
        fn energy_round_trip(v in 0.0f64..1e12, a in 0usize..4, b in 0usize..4) {
            let (ua, ub) = (EnergyUnit::ALL[a], EnergyUnit::ALL[b]);
            let back = Energy::new(v, ua).unwrap().to(ub).to(ua).value();
            prop_assert!(rel(back, v) <= 1e-12);
        }

        #[test]
        fn mass_round_trip(v in 0.0f64..1e12, a in 0usize..3, b in 0usize..3) {
            let (ua, ub) = (MassUnit::ALL[a], MassUnit::ALL[b]);
            let back = CarbonMass::new(v, ua).unwrap().to(ub).to(ua).value();
            prop_assert!(rel(back, v) <= 1e-12);
        }

        #[test]
        fn negative_magnitudes_rejected(v in -1e9f64..-1e-12) {
            prop_assert!(DataSize::tib(v).is_err());
            prop_assert!(Energy::kwh(v).is_err());
            prop_assert!(CarbonMass::kg(v).is_err());
            prop_assert!(Pue::new(1.0 + v.max(-0.999)).is_err());
        }
    }
}
