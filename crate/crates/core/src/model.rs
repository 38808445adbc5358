//! Domain types shared across the crate.
//!
//! Every constructor validates its field invariants, and deserialization goes
//! through the same constructors, so a value of any of these types is known to
//! be well formed. Timestamps are UTC throughout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("zone id must be non-empty")]
    EmptyZone,
    #[error("node id must be non-empty")]
    EmptyNodeId,
    #[error("node {node}: invalid {field} = {value}")]
    InvalidNodeField {
        node: String,
        field: &'static str,
        value: f64,
    },
    #[error("carbon intensity series for zone {zone} is empty")]
    EmptySeries { zone: String },
    #[error("carbon intensity series for zone {zone} starts at {start}, not on an hour boundary")]
    UnalignedStart { zone: String, start: DateTime<Utc> },
    #[error("invalid sample {value} at index {index} in {what}")]
    InvalidSample {
        what: String,
        index: usize,
        value: f64,
    },
    #[error("power series for node {node} has zero cadence")]
    ZeroCadence { node: String },
    #[error("invalid demand {value} at hour {hour}")]
    InvalidDemand { hour: usize, value: f64 },
    #[error("duplicate job id {0}")]
    DuplicateJobId(String),
    #[error("ranking weights must be finite and >= 0 with at least one > 0")]
    InvalidWeights,
    #[error("no carbon intensity series for zone {zone} (node {node})")]
    MissingZoneSeries { zone: String, node: String },
    #[error("duplicate node id {0}")]
    DuplicateNodeId(String),
    #[error("duplicate carbon intensity series for zone {0}")]
    DuplicateZoneSeries(String),
    #[error("horizon mismatch: {0}")]
    HorizonMismatch(String),
    #[error("cluster has no nodes")]
    EmptyCluster,
}

/// Carbon-intensity zone identifier, e.g. `ES`, `NL`, `DE`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Zone(String);

impl Zone {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyZone);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Zone {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Zone> for String {
    fn from(zone: Zone) -> Self {
        zone.0
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A compute location: one site with an affine power model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeFields<T>", into = "NodeFields<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Node<T> {
    id: String,
    zone: Zone,
    pue: T,
    idle_power_w: T,
    max_power_w: T,
    capacity_units: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFields<T> {
    id: String,
    zone: Zone,
    pue: T,
    idle_power_w: T,
    max_power_w: T,
    capacity_units: T,
}

impl<T: Scalar> Node<T> {
    pub fn new(
        id: impl Into<String>,
        zone: Zone,
        pue: T,
        idle_power_w: T,
        max_power_w: T,
        capacity_units: T,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyNodeId);
        }
        let bad = |field: &'static str, value: T| ModelError::InvalidNodeField {
            node: id.clone(),
            field,
            value: value.to_f64_lossy(),
        };
        if !(pue.is_finite() && pue >= T::one()) {
            return Err(bad("pue", pue));
        }
        if !idle_power_w.is_non_negative() {
            return Err(bad("idle_power_w", idle_power_w));
        }
        if !(max_power_w.is_finite() && max_power_w >= idle_power_w) {
            return Err(bad("max_power_w", max_power_w));
        }
        if !(capacity_units.is_finite() && capacity_units > T::zero()) {
            return Err(bad("capacity_units", capacity_units));
        }
        Ok(Self {
            id,
            zone,
            pue,
            idle_power_w,
            max_power_w,
            capacity_units,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn zone(&self) -> &Zone {
        &self.zone
    }

    pub fn pue(&self) -> T {
        self.pue
    }

    pub fn idle_power_w(&self) -> T {
        self.idle_power_w
    }

    pub fn max_power_w(&self) -> T {
        self.max_power_w
    }

    /// Work completed per hour at utilization 1.0.
    pub fn capacity_units(&self) -> T {
        self.capacity_units
    }

    /// Affine power model: `idle + (max - idle) * u` when powered, else 0 W.
    ///
    /// Utilization is clamped to `[0, 1]`.
    pub fn power_w(&self, utilization: T, powered: bool) -> T {
        if !powered {
            return T::zero();
        }
        let u = utilization.max(T::zero()).min(T::one());
        self.idle_power_w + (self.max_power_w - self.idle_power_w) * u
    }
}

impl<T: Scalar> TryFrom<NodeFields<T>> for Node<T> {
    type Error = ModelError;

    fn try_from(f: NodeFields<T>) -> Result<Self, Self::Error> {
        Node::new(
            f.id,
            f.zone,
            f.pue,
            f.idle_power_w,
            f.max_power_w,
            f.capacity_units,
        )
    }
}

impl<T> From<Node<T>> for NodeFields<T> {
    fn from(n: Node<T>) -> Self {
        Self {
            id: n.id,
            zone: n.zone,
            pue: n.pue,
            idle_power_w: n.idle_power_w,
            max_power_w: n.max_power_w,
            capacity_units: n.capacity_units,
        }
    }
}

/// Hourly grid carbon intensity (gCO2/kWh) for one zone, gap free.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonIntensitySeries<T> {
    zone: Zone,
    start: DateTime<Utc>,
    values: Vec<T>,
}

impl<T: Scalar> CarbonIntensitySeries<T> {
    pub fn new(zone: Zone, start: DateTime<Utc>, values: Vec<T>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptySeries {
                zone: zone.to_string(),
            });
        }
        if !is_hour_aligned(start) {
            return Err(ModelError::UnalignedStart {
                zone: zone.to_string(),
                start,
            });
        }
        check_samples(&values, || format!("carbon intensity series {zone}"))?;
        Ok(Self {
            zone,
            start,
            values,
        })
    }

    pub fn zone(&self) -> &Zone {
        &self.zone
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestamp of hour slot `index`.
    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// First `hours` slots of the series, or `None` if it is shorter.
    pub fn truncated(&self, hours: usize) -> Option<Self> {
        if hours == 0 || hours > self.values.len() {
            return None;
        }
        Some(Self {
            zone: self.zone.clone(),
            start: self.start,
            values: self.values[..hours].to_vec(),
        })
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }
}

/// Power samples of one node at a fixed cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    node_id: String,
    start: DateTime<Utc>,
    cadence_s: u32,
    values: Vec<T>,
}

impl<T: Scalar> PowerSeries<T> {
    pub const DEFAULT_CADENCE_S: u32 = 20;

    pub fn new(
        node_id: impl Into<String>,
        start: DateTime<Utc>,
        cadence_s: u32,
        values: Vec<T>,
    ) -> Result<Self, ModelError> {
        let node_id = node_id.into();
        if node_id.trim().is_empty() {
            return Err(ModelError::EmptyNodeId);
        }
        if cadence_s == 0 {
            return Err(ModelError::ZeroCadence { node: node_id });
        }
        check_samples(&values, || format!("power series {node_id}"))?;
        Ok(Self {
            node_id,
            start,
            cadence_s,
            values,
        })
    }

    pub fn node_id(&self) -> &str {
        &self.node_id
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn cadence_s(&self) -> u32 {
        self.cadence_s
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(i64::from(self.cadence_s) * index as i64)
    }
}

fn check_samples<T: Scalar>(values: &[T], what: impl Fn() -> String) -> Result<(), ModelError> {
    match values.iter().position(|v| !v.is_non_negative()) {
        Some(index) => Err(ModelError::InvalidSample {
            what: what(),
            index,
            value: values[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn is_hour_aligned(t: DateTime<Utc>) -> bool {
    t.minute() == 0 && t.second() == 0 && t.nanosecond() == 0
}

/// A unit of work with an urgency profile. Higher priority is more urgent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub id: String,
    pub priority: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<DateTime<Utc>>,
}

/// Compute demand per simulated hour plus optional jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorkloadFields<T>", into = "WorkloadFields<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct WorkloadSpec<T> {
    demand: Vec<T>,
    jobs: Vec<Job>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorkloadFields<T> {
    demand: Vec<T>,
    #[serde(default)]
    jobs: Vec<Job>,
}

impl<T: Scalar> WorkloadSpec<T> {
    pub fn new(demand: Vec<T>, jobs: Vec<Job>) -> Result<Self, ModelError> {
        if let Some(hour) = demand.iter().position(|d| !d.is_non_negative()) {
            return Err(ModelError::InvalidDemand {
                hour,
                value: demand[hour].to_f64_lossy(),
            });
        }
        let mut seen = BTreeSet::new();
        for job in &jobs {
            if !seen.insert(job.id.as_str()) {
                return Err(ModelError::DuplicateJobId(job.id.clone()));
            }
        }
        Ok(Self { demand, jobs })
    }

    /// Same demand every hour, no jobs.
    pub fn constant(level: T, hours: usize) -> Result<Self, ModelError> {
        Self::new(vec![level; hours], Vec::new())
    }

    pub fn demand(&self) -> &[T] {
        &self.demand
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn horizon_hours(&self) -> usize {
        self.demand.len()
    }

    pub fn total_demand(&self) -> T {
        self.demand.iter().copied().sum()
    }
}

impl<T: Scalar> TryFrom<WorkloadFields<T>> for WorkloadSpec<T> {
    type Error = ModelError;

    fn try_from(f: WorkloadFields<T>) -> Result<Self, Self::Error> {
        Self::new(f.demand, f.jobs)
    }
}

impl<T> From<WorkloadSpec<T>> for WorkloadFields<T> {
    fn from(w: WorkloadSpec<T>) -> Self {
        Self {
            demand: w.demand,
            jobs: w.jobs,
        }
    }
}

/// Weights of the four ranking terms (footprint, forecast, efficiency, urgency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightFields<T>", into = "WeightFields<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RankingWeights<T> {
    w1: T,
    w2: T,
    w3: T,
    w4: T,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightFields<T> {
    w1: T,
    w2: T,
    w3: T,
    w4: T,
}

impl<T: Scalar> RankingWeights<T> {
    pub fn new(w1: T, w2: T, w3: T, w4: T) -> Result<Self, ModelError> {
        let all = [w1, w2, w3, w4];
        if all.iter().any(|w| !w.is_non_negative()) || all.iter().all(|w| *w == T::zero()) {
            return Err(ModelError::InvalidWeights);
        }
        Ok(Self { w1, w2, w3, w4 })
    }

    /// Weights applied to carbon footprint only: `(1, 0, 0, 0)`.
    pub fn footprint_only() -> Self {
        Self {
            w1: T::one(),
            w2: T::zero(),
            w3: T::zero(),
            w4: T::zero(),
        }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.w1, self.w2, self.w3, self.w4]
    }

    pub fn scaled(&self, factor: T) -> Result<Self, ModelError> {
        Self::new(
            self.w1 * factor,
            self.w2 * factor,
            self.w3 * factor,
            self.w4 * factor,
        )
    }
}

impl<T: Scalar> Default for RankingWeights<T> {
    fn default() -> Self {
        Self {
            w1: T::lit(0.4),
            w2: T::lit(0.3),
            w3: T::lit(0.2),
            w4: T::lit(0.1),
        }
    }
}

impl<T: Scalar> TryFrom<WeightFields<T>> for RankingWeights<T> {
    type Error = ModelError;

    fn try_from(f: WeightFields<T>) -> Result<Self, Self::Error> {
        Self::new(f.w1, f.w2, f.w3, f.w4)
    }
}

impl<T> From<RankingWeights<T>> for WeightFields<T> {
    fn from(w: RankingWeights<T>) -> Self {
        Self {
            w1: w.w1,
            w2: w.w2,
            w3: w.w3,
            w4: w.w4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Load split evenly, carbon blind.
    Baseline,
    /// All load on the lowest-mean-CI node, others idle.
    A,
    /// As A, with the other nodes powered off.
    B,
    /// Hourly re-ranking and load shifting.
    C,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::Baseline, Self::A, Self::B, Self::C];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Self::Baseline),
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "c" => Ok(Self::C),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// Nodes plus the carbon-intensity series of their zones, all trimmed to a
/// common horizon and start hour.
#[derive(Debug, Clone)]
pub struct Cluster<T> {
    nodes: Vec<Node<T>>,
    series: BTreeMap<Zone, CarbonIntensitySeries<T>>,
    horizon_hours: usize,
}

impl<T: Scalar> Cluster<T> {
    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn horizon_hours(&self) -> usize {
        self.horizon_hours
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.series
            .values()
            .next()
            .map(|s| s.start())
            .expect("validated cluster has at least one series")
    }

    pub fn series(&self, zone: &Zone) -> &CarbonIntensitySeries<T> {
        &self.series[zone]
    }

    pub fn ci_of(&self, node: &Node<T>) -> &[T] {
        self.series(node.zone()).values()
    }

    pub fn all_series(&self) -> impl Iterator<Item = &CarbonIntensitySeries<T>> {
        self.series.values()
    }

    pub fn total_capacity(&self) -> T {
        self.nodes.iter().map(|n| n.capacity_units()).sum()
    }
}

/// Checks that every node's zone has exactly one series covering the horizon
/// and that node ids are unique.
///
/// Series for zones without nodes are dropped. All series used must share the
/// same start hour; they are truncated to `horizon_hours`.
pub fn validate_cluster<T: Scalar>(
    nodes: Vec<Node<T>>,
    series: Vec<CarbonIntensitySeries<T>>,
    horizon_hours: usize,
) -> Result<Cluster<T>, ModelError> {
    if nodes.is_empty() {
        return Err(ModelError::EmptyCluster);
    }
    if horizon_hours == 0 {
        return Err(ModelError::HorizonMismatch("horizon must be at least 1 hour".into()));
    }
    let mut ids = BTreeSet::new();
    for node in &nodes {
        if !ids.insert(node.id()) {
            return Err(ModelError::DuplicateNodeId(node.id().to_string()));
        }
    }
    let mut by_zone = BTreeMap::new();
    for s in series {
        let zone = s.zone().clone();
        if by_zone.insert(zone.clone(), s).is_some() {
            return Err(ModelError::DuplicateZoneSeries(zone.to_string()));
        }
    }
    let used: BTreeSet<&Zone> = nodes.iter().map(|n| n.zone()).collect();
    for node in &nodes {
        if !by_zone.contains_key(node.zone()) {
            return Err(ModelError::MissingZoneSeries {
                zone: node.zone().to_string(),
                node: node.id().to_string(),
            });
        }
    }
    let mut trimmed = BTreeMap::new();
    let mut start = None;
    for (zone, s) in by_zone {
        if !used.contains(&zone) {
            continue;
        }
        match start {
            None => start = Some(s.start()),
            Some(t) if t != s.start() => {
                return Err(ModelError::HorizonMismatch(format!(
                    "zone {zone} starts at {}, expected {t}",
                    s.start()
                )))
            }
            Some(_) => {}
        }
        let len = s.len();
        let cut = s.truncated(horizon_hours).ok_or_else(|| {
            ModelError::HorizonMismatch(format!(
                "zone {zone} has {len} hours, horizon needs {horizon_hours}"
            ))
        })?;
        trimmed.insert(zone, cut);
    }
    Ok(Cluster {
        nodes,
        series: trimmed,
        horizon_hours,
    })
}
