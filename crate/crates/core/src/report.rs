//! Emissions reports and scale-up projections.
//!
//! `report.json` has sorted keys. Display floats carry 6 significant digits
//! (reduction percentages 2 decimals); every `exact` object carries the same
//! totals at full precision so parsing the report reproduces them bit for
//! bit. Counts (`units_required*`, `horizon_hours`) are plain integers.

use std::fmt::Write as _;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::carbon::{footprint_from_slices, CarbonError, FootprintSeries};
use crate::ingest::{format_timestamp, hourly_energy, IngestError};
use crate::model::{CarbonIntensitySeries, Node, PowerSeries, ScenarioKind};
use crate::scalar::Scalar;
use crate::simulate::{reduction_pct, ScenarioResult};

pub const HOURLY_CF_HEADER: &str = "hour,scenario,node_id,cf_g";
pub const TOTALS_HEADER: &str = "scenario,node_id,energy_kwh,cf_g,kg_co2";

const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no baseline result to compare against")]
    MissingBaseline,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("trace alignment: {0}")]
    Alignment(String),
    #[error(transparent)]
    Carbon(#[from] CarbonError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Inputs of the fleet-scale projection.
///
/// The equivalence defaults are back-derived from a 20 Mt total matching 90
/// million trees and 2.44 million cars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionParams {
    pub target_kg: f64,
    pub annual_reduction_per_unit_kg: f64,
    pub years: u32,
    pub kg_per_tree_year: f64,
    pub kg_per_car_year: f64,
    /// Eco-cost factor; reported only when supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eur_per_kg: Option<f64>,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            target_kg: 19_754_000_000.0,
            annual_reduction_per_unit_kg: 713.5,
            years: 10,
            kg_per_tree_year: 222.2,
            kg_per_car_year: 8_196.7,
            eur_per_kg: None,
        }
    }
}

impl ProjectionParams {
    pub fn validate(&self) -> Result<(), ReportError> {
        let positive = [
            ("target_kg", self.target_kg),
            ("annual_reduction_per_unit_kg", self.annual_reduction_per_unit_kg),
            ("kg_per_tree_year", self.kg_per_tree_year),
            ("kg_per_car_year", self.kg_per_car_year),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(ReportError::Domain(format!("{name} must be positive, got {v}")));
        }
        if self.years == 0 {
            return Err(ReportError::Domain("years must be at least 1".into()));
        }
        if let Some(eur) = self.eur_per_kg {
            if !(eur.is_finite() && eur > 0.0) {
                return Err(ReportError::Domain(format!("eur_per_kg must be positive, got {eur}")));
            }
        }
        Ok(())
    }
}

/// Number of whole units needed to reach `target_kg`: `floor(target / per_unit)`.
pub fn units_required<T: Scalar>(target_kg: T, annual_per_unit_kg: T) -> Result<u64, ReportError> {
    if !(target_kg.is_finite() && target_kg > T::zero()) {
        return Err(ReportError::Domain(format!("target {target_kg} kg must be positive")));
    }
    if !(annual_per_unit_kg.is_finite() && annual_per_unit_kg > T::zero()) {
        return Err(ReportError::Domain(format!(
            "per-unit reduction {annual_per_unit_kg} kg must be positive"
        )));
    }
    (target_kg / annual_per_unit_kg)
        .floor()
        .to_u64()
        .ok_or_else(|| ReportError::Domain("unit count out of range".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalences {
    pub tree_years: f64,
    pub car_years: f64,
}

pub fn equivalences(total_kg: f64, params: &ProjectionParams) -> Result<Equivalences, ReportError> {
    if !(total_kg.is_finite() && total_kg >= 0.0) {
        return Err(ReportError::Domain(format!("total {total_kg} kg must be >= 0")));
    }
    if !(params.kg_per_tree_year > 0.0 && params.kg_per_car_year > 0.0) {
        return Err(ReportError::Domain("equivalence factors must be positive".into()));
    }
    Ok(Equivalences {
        tree_years: total_kg / params.kg_per_tree_year,
        car_years: total_kg / params.kg_per_car_year,
    })
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Lowercase hex SHA-256 of the config bytes.
pub fn config_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactTotals {
    pub cf_g: f64,
    pub energy_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node_id: String,
    pub energy_kwh: f64,
    pub kg_co2: f64,
    pub exact: ExactTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioKind,
    pub total_energy_kwh: f64,
    pub total_kg_co2: f64,
    pub reduction_pct: f64,
    pub nodes: Vec<NodeSummary>,
    pub exact: ExactTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub params: ProjectionParams,
    /// `floor(target / annual per-unit reduction)`: one year of reductions per unit.
    pub units_required: u64,
    /// `floor(target / (annual per-unit reduction * years))`: reductions accumulated over the period.
    pub units_required_over_period: u64,
    pub target_equivalences: Equivalences,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_eco_cost_eur: Option<f64>,
    /// Baseline minus scenario C, scaled to one year, for one simulated cluster.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated_annual_reduction_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated_units_required: Option<u64>,
}

impl Projection {
    pub fn new(params: &ProjectionParams, simulated_annual_kg: Option<f64>) -> Result<Self, ReportError> {
        params.validate()?;
        let per_period = params.annual_reduction_per_unit_kg * f64::from(params.years);
        let simulated_units = match simulated_annual_kg {
            Some(kg) if kg > 0.0 => Some(units_required(params.target_kg, kg)?),
            _ => None,
        };
        Ok(Self {
            params: params.clone(),
            units_required: units_required(params.target_kg, params.annual_reduction_per_unit_kg)?,
            units_required_over_period: units_required(params.target_kg, per_period)?,
            target_equivalences: rounded(equivalences(params.target_kg, params)?),
            target_eco_cost_eur: params.eur_per_kg.map(|e| sig6(e * params.target_kg)),
            simulated_annual_reduction_kg: simulated_annual_kg.map(sig6),
            simulated_units_required: simulated_units,
        })
    }
}

fn rounded(e: Equivalences) -> Equivalences {
    Equivalences {
        tree_years: sig6(e.tree_years),
        car_years: sig6(e.car_years),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub start: String,
    pub horizon_hours: u64,
    pub scenarios: Vec<ScenarioSummary>,
    pub projection: Projection,
}

impl EmissionsReport {
    pub fn scenario(&self, kind: ScenarioKind) -> Option<&ScenarioSummary> {
        self.scenarios.iter().find(|s| s.scenario == kind)
    }

    /// Pretty JSON with lexicographically sorted keys and a trailing newline.
    pub fn to_json(&self) -> Result<String, ReportError> {
        // serde_json::Value keeps object keys in a BTreeMap
        let value = serde_json::to_value(self)?;
        let mut s = serde_json::to_string_pretty(&value)?;
        s.push('\n');
        Ok(s)
    }
}

/// Provenance fields of a report.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    pub start: Option<DateTime<Utc>>,
    pub config_digest: Option<String>,
}

/// Rendered report documents.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub report: EmissionsReport,
    pub json: String,
    /// `hour,scenario,node_id,cf_g`, one row per scenario x node x hour.
    pub hourly_cf_csv: String,
    /// Per-node totals plus one `total` row per scenario.
    pub totals_csv: String,
}

pub fn build_report<T: Scalar>(
    results: &[ScenarioResult<T>],
    params: &ProjectionParams,
    meta: &ReportMeta,
) -> Result<EmissionsReport, ReportError> {
    let baseline = results
        .iter()
        .find(|r| r.scenario == ScenarioKind::Baseline)
        .ok_or(ReportError::MissingBaseline)?;
    let baseline_g = baseline.total_cf_g.to_f64_lossy();
    let horizon = baseline.horizon_hours();

    let mut scenarios = Vec::with_capacity(results.len());
    for r in results {
        let total_g = r.total_cf_g.to_f64_lossy();
        let reduction = if r.scenario == ScenarioKind::Baseline {
            0.0
        } else {
            reduction_pct(baseline_g, total_g).map_err(|e| ReportError::Domain(e.to_string()))?
        };
        let nodes = r
            .allocation
            .node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let exact = ExactTotals {
                    cf_g: r.node_cf_g(i).to_f64_lossy(),
                    energy_kwh: r.node_energy_kwh(i).to_f64_lossy(),
                };
                NodeSummary {
                    node_id: id.clone(),
                    energy_kwh: sig6(exact.energy_kwh),
                    kg_co2: sig6(exact.cf_g / 1000.0),
                    exact,
                }
            })
            .collect();
        let exact = ExactTotals {
            cf_g: total_g,
            energy_kwh: r.total_energy_kwh.to_f64_lossy(),
        };
        scenarios.push(ScenarioSummary {
            scenario: r.scenario,
            total_energy_kwh: sig6(exact.energy_kwh),
            total_kg_co2: sig6(total_g / 1000.0),
            reduction_pct: round2(reduction),
            nodes,
            exact,
        });
    }

    let simulated_annual_kg = results
        .iter()
        .find(|r| r.scenario == ScenarioKind::C)
        .filter(|_| horizon > 0)
        .map(|c| (baseline_g - c.total_cf_g.to_f64_lossy()) / 1000.0 * HOURS_PER_YEAR / horizon as f64);

    Ok(EmissionsReport {
        config_digest: meta.config_digest.clone(),
        start: meta.start.map(format_timestamp).unwrap_or_default(),
        horizon_hours: horizon as u64,
        scenarios,
        projection: Projection::new(params, simulated_annual_kg)?,
    })
}

/// Builds the JSON report and the plot-ready CSVs.
pub fn render_report<T: Scalar>(
    results: &[ScenarioResult<T>],
    params: &ProjectionParams,
    meta: &ReportMeta,
) -> Result<RenderedReport, ReportError> {
    let report = build_report(results, params, meta)?;
    let json = report.to_json()?;

    let mut hourly = String::from(HOURLY_CF_HEADER);
    hourly.push('\n');
    let mut totals = String::from(TOTALS_HEADER);
    totals.push('\n');
    for r in results {
        for h in 0..r.horizon_hours() {
            for fp in &r.footprints {
                let _ = writeln!(hourly, "{h},{},{},{}", r.scenario, fp.node_id, sig6(fp.values[h].to_f64_lossy()));
            }
        }
        for (i, id) in r.allocation.node_ids.iter().enumerate() {
            let g = r.node_cf_g(i).to_f64_lossy();
            let _ = writeln!(
                totals,
                "{},{id},{},{},{}",
                r.scenario,
                sig6(r.node_energy_kwh(i).to_f64_lossy()),
                sig6(g),
                sig6(g / 1000.0)
            );
        }
        let g = r.total_cf_g.to_f64_lossy();
        let _ = writeln!(
            totals,
            "{},total,{},{},{}",
            r.scenario,
            sig6(r.total_energy_kwh.to_f64_lossy()),
            sig6(g),
            sig6(g / 1000.0)
        );
    }
    Ok(RenderedReport {
        report,
        json,
        hourly_cf_csv: hourly,
        totals_csv: totals,
    })
}

/// Footprint of a node computed from measured power samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredNode<T> {
    pub node_id: String,
    pub zone: String,
    pub start: DateTime<Utc>,
    pub energy_kwh: Vec<T>,
    pub footprint: FootprintSeries<T>,
}

/// Integrates `power` into hourly energy and applies the node's PUE and the
/// matching hours of `ci`.
pub fn measured_footprint<T: Scalar>(
    node: &Node<T>,
    power: &PowerSeries<T>,
    ci: &CarbonIntensitySeries<T>,
) -> Result<MeasuredNode<T>, ReportError> {
    if ci.zone() != node.zone() {
        return Err(CarbonError::ZoneMismatch {
            node: node.id().to_string(),
            node_zone: node.zone().to_string(),
            series_zone: ci.zone().to_string(),
        }
        .into());
    }
    let energy = hourly_energy(power)?;
    let offset = power.start() - ci.start();
    if offset < Duration::zero() || offset != Duration::hours(offset.num_hours()) {
        return Err(ReportError::Alignment(format!(
            "power trace of {} starts at {}, outside the hourly CI grid starting {}",
            node.id(),
            format_timestamp(power.start()),
            format_timestamp(ci.start())
        )));
    }
    let first = offset.num_hours() as usize;
    let window = ci.values().get(first..first + energy.len()).ok_or_else(|| {
        ReportError::Alignment(format!(
            "CI for zone {} does not cover the {} h power trace of {}",
            node.zone(),
            energy.len(),
            node.id()
        ))
    })?;
    let footprint = footprint_from_slices(node, &energy, window)?;
    Ok(MeasuredNode {
        node_id: node.id().to_string(),
        zone: node.zone().to_string(),
        start: power.start(),
        energy_kwh: energy,
        footprint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredNodeSummary {
    pub node_id: String,
    pub zone: String,
    pub start: String,
    pub hours: u64,
    pub energy_kwh: f64,
    pub kg_co2: f64,
    pub exact: ExactTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredReport {
    pub nodes: Vec<MeasuredNodeSummary>,
    pub total_energy_kwh: f64,
    pub total_kg_co2: f64,
    pub exact: ExactTotals,
    pub projection: Projection,
}

impl MeasuredReport {
    pub fn new<T: Scalar>(nodes: &[MeasuredNode<T>], params: &ProjectionParams) -> Result<Self, ReportError> {
        let summaries: Vec<MeasuredNodeSummary> = nodes
            .iter()
            .map(|m| {
                let exact = ExactTotals {
                    cf_g: m.footprint.total().to_f64_lossy(),
                    energy_kwh: m.energy_kwh.iter().copied().sum::<T>().to_f64_lossy(),
                };
                MeasuredNodeSummary {
                    node_id: m.node_id.clone(),
                    zone: m.zone.clone(),
                    start: format_timestamp(m.start),
                    hours: m.energy_kwh.len() as u64,
                    energy_kwh: sig6(exact.energy_kwh),
                    kg_co2: sig6(exact.cf_g / 1000.0),
                    exact,
                }
            })
            .collect();
        let exact = ExactTotals {
            cf_g: summaries.iter().map(|s| s.exact.cf_g).sum(),
            energy_kwh: summaries.iter().map(|s| s.exact.energy_kwh).sum(),
        };
        Ok(Self {
            nodes: summaries,
            total_energy_kwh: sig6(exact.energy_kwh),
            total_kg_co2: sig6(exact.cf_g / 1000.0),
            exact,
            projection: Projection::new(params, None)?,
        })
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let value = serde_json::to_value(self)?;
        let mut s = serde_json::to_string_pretty(&value)?;
        s.push('\n');
        Ok(s)
    }
}
