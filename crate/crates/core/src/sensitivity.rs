//! Preset runs, parameter sweeps and one-at-a-time elasticities.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{total_emissions, EmissionsBreakdown, ModelError};
use crate::presets::{table3_scenarios, Preset, UnknownPreset};
use crate::quantities::{CarbonMass, Fraction};
use crate::real::{lit, to_f64, Real};
use crate::scenario::{ParamPath, PathError, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    UnknownPreset(#[from] UnknownPreset),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("relative delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("`{path}` is {value}; elasticity needs a positive base value")]
    NonPositiveBase { path: String, value: f64 },
    #[error("{metric} is zero at the base point")]
    ZeroMetric { metric: Metric },
}

pub fn run_preset<S: Real>(name: &str) -> Result<EmissionsBreakdown<S>, SensitivityError> {
    let preset: Preset = name.parse()?;
    Ok(total_emissions(&preset.scenario())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow<S: Real> {
    pub scenario: String,
    pub c_total: CarbonMass<S>,
    pub key_variation: String,
    pub embodied_share: Fraction<S>,
}

/// Rows for the given scenarios, sorted by total ascending.
pub fn sensitivity_report<S: Real>(
    scenarios: &[(String, String, Scenario<S>)],
) -> Result<Vec<SensitivityRow<S>>, SensitivityError> {
    let mut rows = scenarios
        .iter()
        .map(|(name, key, s)| {
            let b = total_emissions(s)?;
            Ok(SensitivityRow {
                scenario: name.clone(),
                c_total: b.network.c_total,
                key_variation: key.clone(),
                embodied_share: Fraction::new(b.embodied_share()).unwrap_or(Fraction::zero()),
            })
        })
        .collect::<Result<Vec<_>, SensitivityError>>()?;
    rows.sort_by(|a, b| {
        a.c_total
            .partial_cmp(&b.c_total)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.scenario.cmp(&b.scenario))
    });
    Ok(rows)
}

/// The five built-in presets, cheapest first.
pub fn table3_report<S: Real>() -> Vec<SensitivityRow<S>> {
    let scenarios: Vec<_> = table3_scenarios::<S>()
        .into_iter()
        .map(|(p, s)| (p.name().to_string(), p.key_variation().to_string(), s))
        .collect();
    sensitivity_report(&scenarios).expect("built-in presets evaluate")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<S> {
    pub path: ParamPath,
    pub values: Vec<S>,
}

impl<S: Real> SweepSpec<S> {
    pub fn new(path: &str, values: Vec<S>) -> Result<Self, SensitivityError> {
        if values.is_empty() {
            return Err(SensitivityError::EmptySweep);
        }
        Ok(SweepSpec { path: path.parse()?, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<S: Real> {
    pub c_total: CarbonMass<S>,
    pub c_elec: CarbonMass<S>,
    pub c_emb: CarbonMass<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<S: Real> {
    pub value: S,
    pub result: Result<SweepPoint<S>, SensitivityError>,
}

fn evaluate<S: Real>(base: &Scenario<S>, path: &ParamPath, value: S) -> Result<SweepPoint<S>, SensitivityError> {
    let mut s = base.clone();
    s.set_path(path, value)?;
    let b = total_emissions(&s)?;
    Ok(SweepPoint { c_total: b.network.c_total, c_elec: b.network.c_elec, c_emb: b.network.c_emb })
}

/// Evaluates the scenario once per value; rows keep the input order.
pub fn sweep<S: Real>(s: &Scenario<S>, spec: &SweepSpec<S>) -> Result<Vec<SweepRow<S>>, SensitivityError> {
    if spec.values.is_empty() {
        return Err(SensitivityError::EmptySweep);
    }
    s.get_path(&spec.path)?;
    Ok(spec
        .values
        .par_iter()
        .map(|&value| SweepRow { value, result: evaluate(s, &spec.path, value) })
        .collect())
}

/// CSV with header `value,c_total_t,c_elec_t,c_emb_t`; failed rows carry
/// only the value.
pub fn sweep_csv<S: Real>(rows: &[SweepRow<S>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["value", "c_total_t", "c_elec_t", "c_emb_t"]).expect("in-memory write");
    for row in rows {
        let value = to_f64(row.value).to_string();
        let record = match &row.result {
            Ok(p) => [
                value,
                to_f64(p.c_total.in_tonnes()).to_string(),
                to_f64(p.c_elec.in_tonnes()).to_string(),
                to_f64(p.c_emb.in_tonnes()).to_string(),
            ],
            Err(_) => [value, String::new(), String::new(), String::new()],
        };
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Total,
    Electricity,
    Embodied,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Total => "c_total",
            Metric::Electricity => "c_elec",
            Metric::Embodied => "c_emb",
        })
    }
}

impl Metric {
    fn of<S: Real>(self, p: &SweepPoint<S>) -> S {
        match self {
            Metric::Total => p.c_total.canonical(),
            Metric::Electricity => p.c_elec.canonical(),
            Metric::Embodied => p.c_emb.canonical(),
        }
    }
}

pub const DEFAULT_RELATIVE_DELTA: f64 = 1e-3;

/// Relative change of `metric` per relative change of the value at `path`,
/// by symmetric difference.
pub fn elasticity<S: Real>(
    s: &Scenario<S>,
    path: &str,
    relative_delta: S,
    metric: Metric,
) -> Result<S, SensitivityError> {
    if !(relative_delta > S::zero() && relative_delta < S::one()) {
        return Err(SensitivityError::BadDelta(to_f64(relative_delta)));
    }
    let path: ParamPath = path.parse()?;
    let p = s.get_path(&path)?;
    if !(p > S::zero()) {
        return Err(SensitivityError::NonPositiveBase { path: path.to_string(), value: to_f64(p) });
    }
    let base = total_emissions(s)?;
    let c0 = metric.of(&SweepPoint {
        c_total: base.network.c_total,
        c_elec: base.network.c_elec,
        c_emb: base.network.c_emb,
    });
    let up = metric.of(&evaluate(s, &path, p * (S::one() + relative_delta))?);
    let down = metric.of(&evaluate(s, &path, p * (S::one() - relative_delta))?);
    if up == down {
        return Ok(S::zero());
    }
    if c0 == S::zero() {
        return Err(SensitivityError::ZeroMetric { metric });
    }
    Ok((up - down) / c0 / (lit::<S>(2.0) * relative_delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::method1_scenario;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn preset_runs() {
        let m1 = run_preset::<f64>("method1").unwrap();
        assert!(rel(m1.network.c_total.in_megatonnes(), 1.32) < 0.005);
        let hnc = run_preset::<f64>("homogeneous-no-compression").unwrap();
        assert!(rel(hnc.network.c_total.in_megatonnes(), 1.401) < 0.02);
        assert!(run_preset::<f64>("nope").is_err());
    }

    #[test]
    fn preset_runs_are_deterministic() {
        let a = format!("{:?}", run_preset::<f64>("method2").unwrap());
        let b = format!("{:?}", run_preset::<f64>("method2").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn report_sorted_with_shares() {
        let rows = table3_report::<f64>();
        assert_eq!(rows.len(), 5);
        assert!(rows.windows(2).all(|w| w[0].c_total <= w[1].c_total));
        let m1 = rows.iter().find(|r| r.scenario == "method1").unwrap();
        assert!((m1.embodied_share.value() - 230_042.037 / 1_326_509.261).abs() < 1e-6);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.embodied_share.value())));
    }

    #[test]
    fn single_preset_report() {
        let rows = sensitivity_report(&[("method1".into(), "x".into(), method1_scenario::<f64>())]).unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn intensity_sweep() {
        let spec = SweepSpec::new("global.i_elec", vec![0.0, 0.384, 0.768]).unwrap();
        let rows = sweep(&method1_scenario::<f64>(), &spec).unwrap();
        let c: Vec<f64> = rows.iter().map(|r| r.result.as_ref().unwrap().c_elec.in_tonnes()).collect();
        assert_eq!(c[0], 0.0);
        assert!(rel(c[1], 1_096_467.224) < 1e-9);
        assert!(rel(c[2], 2_192_934.448) < 1e-9);
    }

    #[test]
    fn single_value_sweep_matches_total() {
        let s = method1_scenario::<f64>();
        let rows = sweep(&s, &SweepSpec::new("i_elec", vec![0.384]).unwrap()).unwrap();
        let b = total_emissions(&s).unwrap();
        assert_eq!(rows[0].result.as_ref().unwrap().c_total, b.network.c_total);
    }

    #[test]
    fn pue_sweep_scales_energy() {
        let s = method1_scenario::<f64>();
        let rows = sweep(&s, &SweepSpec::new("global.pue_server", vec![1.0]).unwrap()).unwrap();
        let elec = rows[0].result.as_ref().unwrap().c_elec.canonical();
        let base = total_emissions(&s).unwrap().network.c_elec.canonical();
        assert!(rel(elec, base / 1.58) < 1e-12);
    }

    #[test]
    fn sweep_errors() {
        let s = method1_scenario::<f64>();
        assert!(matches!(SweepSpec::new("global.nope", vec![1.0]), Err(SensitivityError::Path(_))));
        assert_eq!(SweepSpec::<f64>::new("i_elec", vec![]), Err(SensitivityError::EmptySweep));
        let spec = SweepSpec::new("cohort.nobody.pue", vec![1.0]).unwrap();
        assert!(sweep(&s, &spec).is_err());
        let rows = sweep(&s, &SweepSpec::new("i_elec", vec![0.1, -1.0, 0.2]).unwrap()).unwrap();
        assert!(rows[0].result.is_ok() && rows[1].result.is_err() && rows[2].result.is_ok());
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().next(), Some("value,c_total_t,c_elec_t,c_emb_t"));
        assert_eq!(csv.lines().nth(2), Some("-1,,,"));
    }

    #[test]
    fn sweep_leaves_base_untouched() {
        let s = method1_scenario::<f64>();
        let before = s.clone();
        sweep(&s, &SweepSpec::new("i_elec", vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn elasticities() {
        let s = method1_scenario::<f64>();
        let e = elasticity(&s, "i_elec", DEFAULT_RELATIVE_DELTA, Metric::Electricity).unwrap();
        assert!((e - 1.0).abs() < 1e-9);
        let h = elasticity(&s, "gamma_hdd", DEFAULT_RELATIVE_DELTA, Metric::Total).unwrap();
        assert!((h - 177_453.138 / 1_326_509.261).abs() < 1e-6);
        assert_eq!(elasticity(&s, "gamma_ram", DEFAULT_RELATIVE_DELTA, Metric::Total).unwrap(), 0.0);
        assert!(elasticity(&s, "bogus", DEFAULT_RELATIVE_DELTA, Metric::Total).is_err());
        assert!(elasticity(&s, "i_elec", 1.5, Metric::Total).is_err());
    }
}
