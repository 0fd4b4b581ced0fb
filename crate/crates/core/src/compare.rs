//! Cross-chain comparison data and everyday equivalences.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::quantities::{CarbonIntensity, CarbonMass, Energy, MassUnit};

pub const BUILTIN_CHAINS: &str = include_str!("../data/chains.csv");
pub const BUILTIN_COUNTRIES: &str = include_str!("../data/countries.csv");
pub const CHAINS_FILE: &str = "chains.csv";
pub const COUNTRIES_FILE: &str = "countries.csv";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("ratio with a zero denominator")]
    ZeroDenominator,
    #[error("car factor must be positive, got {0} t")]
    BadCarFactor(f64),
    #[error("{origin}: file not found")]
    NotFound { origin: String },
    #[error("{origin}: {message}")]
    Io { origin: String, message: String },
    #[error("{origin}:{line}: {message}")]
    Malformed { origin: String, line: u64, message: String },
    #[error("{origin}:{line}: duplicate chain `{name}`")]
    Duplicate { origin: String, line: u64, name: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub name: String,
    pub annual: CarbonMass<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceFactors {
    /// Tonnes of CO2 per passenger car and year.
    pub car_t: f64,
}

impl Default for EquivalenceFactors {
    fn default() -> Self {
        EquivalenceFactors { car_t: 4.6 }
    }
}

impl EquivalenceFactors {
    pub fn new(car_t: f64) -> Result<Self, CompareError> {
        if car_t > 0.0 && car_t.is_finite() {
            Ok(EquivalenceFactors { car_t })
        } else {
            Err(CompareError::BadCarFactor(car_t))
        }
    }
}

/// Carbon of a published annual energy figure, in Mt.
pub fn claim_to_emissions(annual_energy: Energy<f64>, i: CarbonIntensity<f64>) -> CarbonMass<f64> {
    (annual_energy * i).to(MassUnit::Megatonne)
}

pub fn ratio(a: CarbonMass<f64>, b: CarbonMass<f64>) -> Result<f64, CompareError> {
    if b.is_zero() {
        return Err(CompareError::ZeroDenominator);
    }
    Ok(a.canonical() / b.canonical())
}

pub fn car_equivalents(m: CarbonMass<f64>, f: EquivalenceFactors) -> f64 {
    m.in_tonnes() / f.car_t
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    name: String,
    annual_mtco2: f64,
}

/// Parses `name,annual_mtco2` rows; names must be unique.
pub fn parse_chain_dataset(text: &str, origin: &str) -> Result<Vec<ChainRecord>, CompareError> {
    let malformed = |line: u64, message: String| CompareError::Malformed { origin: origin.to_string(), line, message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if !text.trim().is_empty() && headers.iter().ne(["name", "annual_mtco2"]) {
        return Err(malformed(1, "expected header `name,annual_mtco2`".into()));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRecord>() {
        let line = out.len() as u64 + 2;
        let raw = row.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line());
            let msg = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            malformed(line, msg)
        })?;
        if raw.name.is_empty() {
            return Err(malformed(line, "empty chain name".into()));
        }
        let annual = CarbonMass::megatonnes(raw.annual_mtco2).map_err(|e| malformed(line, e.to_string()))?;
        if !seen.insert(raw.name.clone()) {
            return Err(CompareError::Duplicate { origin: origin.to_string(), line, name: raw.name });
        }
        out.push(ChainRecord { name: raw.name, annual });
    }
    Ok(out)
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource<'a> {
    Builtin,
    Path(&'a Path),
}

pub fn load_chain_dataset(source: DatasetSource<'_>) -> Result<Vec<ChainRecord>, CompareError> {
    match source {
        DatasetSource::Builtin => parse_chain_dataset(BUILTIN_CHAINS, "builtin:chains.csv"),
        DatasetSource::Path(p) => {
            let origin = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CompareError::NotFound { origin: origin.clone() },
                _ => CompareError::Io { origin: origin.clone(), message: e.to_string() },
            })?;
            parse_chain_dataset(&text, &origin)
        }
    }
}

/// Countries with annual emissions near the network's, for context.
pub fn builtin_countries() -> Vec<ChainRecord> {
    parse_chain_dataset(BUILTIN_COUNTRIES, "builtin:countries.csv").expect("builtin country data parses")
}

/// Chart rows `name,mt_co2,log10_mt`, largest first. The log column is left
/// empty for zero emissions.
pub fn emit_comparison(records: &[ChainRecord], chia: &[(String, CarbonMass<f64>)]) -> String {
    let mut rows: Vec<(String, f64)> = records
        .iter()
        .map(|r| (r.name.clone(), r.annual.in_megatonnes()))
        .chain(chia.iter().map(|(label, m)| (label.clone(), m.in_megatonnes())))
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "mt_co2", "log10_mt"]).expect("in-memory write");
    for (name, mt) in rows {
        let log = if mt > 0.0 { mt.log10().to_string() } else { String::new() };
        w.write_record([name, mt.to_string(), log]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::total_emissions;
    use crate::presets::method2_scenario;
    use proptest::prelude::*;

    fn i() -> CarbonIntensity<f64> {
        CarbonIntensity::new(0.384).unwrap()
    }

    fn twh(x: f64) -> Energy<f64> {
        Energy::new(x, crate::quantities::EnergyUnit::TerawattHour).unwrap()
    }

    #[test]
    fn claim() {
        assert!((claim_to_emissions(twh(0.13), i()).in_megatonnes() - 0.04992).abs() < 1e-12);
        assert_eq!(claim_to_emissions(twh(0.0), i()).canonical(), 0.0);
        assert!((claim_to_emissions(twh(1.0), i()).in_megatonnes() - 0.384).abs() < 1e-12);
    }

    #[test]
    fn ratios() {
        let mt = |x| CarbonMass::megatonnes(x).unwrap();
        assert!((ratio(mt(1.3265), mt(0.04992)).unwrap() - 26.57).abs() < 0.01);
        assert!((ratio(mt(0.884), mt(0.04992)).unwrap() - 17.71).abs() < 0.01);
        assert_eq!(ratio(mt(3.0), mt(3.0)).unwrap(), 1.0);
        assert_eq!(ratio(mt(3.0), mt(0.0)), Err(CompareError::ZeroDenominator));
    }

    #[test]
    fn cars() {
        let f = EquivalenceFactors::default();
        let n = car_equivalents(CarbonMass::megatonnes(0.884).unwrap(), f);
        assert!((n - 192_173.0).abs() / 192_173.0 < 1e-4);
        assert!((car_equivalents(CarbonMass::tonnes(4.6).unwrap(), f) - 1.0).abs() < 1e-12);
        assert_eq!(car_equivalents(CarbonMass::kg(0.0).unwrap(), f), 0.0);
        assert!(EquivalenceFactors::new(0.0).is_err());
    }

    #[test]
    fn builtin_dataset() {
        let d = load_chain_dataset(DatasetSource::Builtin).unwrap();
        assert_eq!(d.len(), 9);
        let tezos = d.iter().find(|r| r.name == "Tezos").unwrap();
        assert_eq!(tezos.annual.in_megatonnes(), 0.000075);
        assert_eq!(builtin_countries().len(), 3);
    }

    #[test]
    fn dataset_errors() {
        let dup = "name,annual_mtco2\nTezos,1\nTezos,2\n";
        assert!(matches!(parse_chain_dataset(dup, "d"), Err(CompareError::Duplicate { line: 3, .. })));
        let neg = "name,annual_mtco2\nX,-1\n";
        assert!(matches!(parse_chain_dataset(neg, "d"), Err(CompareError::Malformed { line: 2, .. })));
        let bad = "name,annual_mtco2\nX,lots\n";
        assert!(parse_chain_dataset(bad, "d").is_err());
        assert!(parse_chain_dataset("name,annual_mtco2\n", "d").unwrap().is_empty());
        assert!(parse_chain_dataset("", "d").unwrap().is_empty());
        let missing = load_chain_dataset(DatasetSource::Path(Path::new("/nonexistent.csv")));
        assert!(matches!(missing, Err(CompareError::NotFound { .. })));
    }

    #[test]
    fn chart_rows() {
        let d = load_chain_dataset(DatasetSource::Builtin).unwrap();
        let m2 = total_emissions(&method2_scenario::<f64>()).unwrap().network.c_total;
        let csv = emit_comparison(&d, &[("Chia (method2)".into(), m2)]);
        let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(names[0], "Bitcoin");
        assert_eq!(names[1], "Chia (method2)");
        let eth = names.iter().position(|n| *n == "Ethereum-PoS").unwrap();
        assert!(eth > 1);
        let bitcoin = csv.lines().nth(1).unwrap();
        let log: f64 = bitcoin.split(',').nth(2).unwrap().parse().unwrap();
        assert!((log - 1.9647).abs() < 1e-4);
    }

    #[test]
    fn chart_edge_cases() {
        let one = [ChainRecord { name: "A".into(), annual: CarbonMass::megatonnes(1.0).unwrap() }];
        assert_eq!(emit_comparison(&one, &[]), "name,mt_co2,log10_mt\nA,1,0\n");
        let zero = [ChainRecord { name: "Z".into(), annual: CarbonMass::megatonnes(0.0).unwrap() }];
        assert_eq!(emit_comparison(&zero, &[]), "name,mt_co2,log10_mt\nZ,0,\n");
        let ties = [
            ChainRecord { name: "b".into(), annual: CarbonMass::megatonnes(1.0).unwrap() },
            ChainRecord { name: "a".into(), annual: CarbonMass::megatonnes(1.0).unwrap() },
        ];
        assert_eq!(emit_comparison(&ties, &[]), "name,mt_co2,log10_mt\na,1,0\nb,1,0\n");
        assert_eq!(emit_comparison(&[], &[]), "name,mt_co2,log10_mt\n");
    }

    #[test]
    fn two_orders_of_magnitude() {
        let d = load_chain_dataset(DatasetSource::Builtin).unwrap();
        let calibrated = include_str!("../../../scenarios/method2-calibrated.toml");
        let s = crate::scenario_file::scenario_from_str(calibrated).unwrap();
        let m2 = total_emissions(&s).unwrap().network.c_total;
        let floor = CarbonMass::megatonnes(0.584).unwrap();
        for r in d.iter().filter(|r| r.name != "Bitcoin") {
            assert!(ratio(m2, r.annual).unwrap() > 100.0, "{}", r.name);
            if r.name != "Solana" {
                assert!(ratio(floor, r.annual).unwrap() > 100.0, "{}", r.name);
            }
        }
    }

    proptest! {
        #[test]
        fn intensity_cancels(x in 1e-6..10.0f64, y in 1e-6..10.0f64, k in 1e-3..2.0f64) {
            let i = CarbonIntensity::new(k).unwrap();
            let r = ratio(claim_to_emissions(twh(x), i), claim_to_emissions(twh(y), i)).unwrap();
            prop_assert!((r - x / y).abs() <= 1e-12 * (x / y));
        }

        #[test]
        fn chart_is_deterministic(values in prop::collection::vec(0.0..100.0f64, 0..12)) {
            let records: Vec<_> = values
                .iter()
                .enumerate()
                .map(|(n, &v)| ChainRecord { name: format!("c{}", n % 4), annual: CarbonMass::megatonnes(v).unwrap() })
                .collect();
            let mut reversed = records.clone();
            reversed.reverse();
            prop_assert_eq!(emit_comparison(&records, &[]), emit_comparison(&reversed, &[]));
        }
    }
}
