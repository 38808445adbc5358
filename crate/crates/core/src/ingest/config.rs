//! Cluster configuration document.
//!
//! ```json
//! {
//!   "nodes": [{"id": "es-1", "zone": "ES", "pue": 1.2, "idle_power_w": 2000,
//!              "max_power_w": 5000, "capacity_units": 20}],
//!   "weights": {"w1": 0.4, "w2": 0.3, "w3": 0.2, "w4": 0.1},
//!   "scenario": "all",
//!   "horizon_hours": 8760,
//!   "workload": {"demand": {"constant": 20}, "jobs": []},
//!   "forecast": {"method": "seasonal_naive_24h", "horizon_hours": 24},
//!   "scenario_c": {"epoch_hours": 1, "cfp_window_hours": 1},
//!   "gap_fill": "fail",
//!   "projection": {"target_kg": 19754000000, "annual_reduction_per_unit_kg": 713.5}
//! }
//! ```
//!
//! Everything except `nodes`, `horizon_hours` and `workload` has a default.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::GapPolicy;
use crate::model::{
    validate_cluster, CarbonIntensitySeries, Cluster, Job, ModelError, Node, RankingWeights,
    ScenarioKind, WorkloadSpec,
};
use crate::report::{ProjectionParams, ReportError};
use crate::scalar::Scalar;
use crate::simulate::{ForecastConfig, ScenarioCConfig, SimError, SimulationConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// One scenario or all four.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ScenarioSelection {
    #[default]
    All,
    One(ScenarioKind),
}

impl ScenarioSelection {
    pub fn kinds(&self) -> Vec<ScenarioKind> {
        match self {
            Self::All => ScenarioKind::ALL.to_vec(),
            // the report needs a baseline to compare against
            Self::One(ScenarioKind::Baseline) => vec![ScenarioKind::Baseline],
            Self::One(kind) => vec![ScenarioKind::Baseline, *kind],
        }
    }
}

impl FromStr for ScenarioSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(Self::All)
        } else {
            s.parse().map(Self::One)
        }
    }
}

impl fmt::Display for ScenarioSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::One(kind) => kind.fmt(f),
        }
    }
}

impl Serialize for ScenarioSelection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScenarioSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Hourly demand in compute units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandConfig<T> {
    Constant(T),
    /// Exactly one value per horizon hour.
    Hourly(Vec<T>),
    /// 24 values repeated every day, starting at the first simulated hour.
    DailyProfile(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig<T> {
    pub demand: DemandConfig<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jobs: Vec<Job>,
}

impl<T: Scalar> WorkloadConfig<T> {
    pub fn build(&self, horizon_hours: usize) -> Result<WorkloadSpec<T>, ConfigError> {
        let demand = match &self.demand {
            DemandConfig::Constant(level) => vec![*level; horizon_hours],
            DemandConfig::Hourly(values) => {
                if values.len() != horizon_hours {
                    return Err(ConfigError::Invalid(format!(
                        "hourly demand has {} entries, horizon is {horizon_hours}",
                        values.len()
                    )));
                }
                values.clone()
            }
            DemandConfig::DailyProfile(profile) => {
                if profile.len() != 24 {
                    return Err(ConfigError::Invalid(format!(
                        "daily_profile needs 24 values, got {}",
                        profile.len()
                    )));
                }
                profile.iter().copied().cycle().take(horizon_hours).collect()
            }
        };
        Ok(WorkloadSpec::new(demand, self.jobs.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ClusterConfig<T> {
    pub nodes: Vec<Node<T>>,
    #[serde(default)]
    pub weights: RankingWeights<T>,
    #[serde(default)]
    pub scenario: ScenarioSelection,
    pub horizon_hours: usize,
    pub workload: WorkloadConfig<T>,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub scenario_c: ScenarioCConfig,
    #[serde(default)]
    pub gap_fill: GapPolicy,
    #[serde(default)]
    pub projection: ProjectionParams,
}

impl<T: Scalar> ClusterConfig<T> {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_slice(bytes)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file, returning its raw bytes as well.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok((Self::from_json(&bytes)?, bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes.is_empty() {
            return Err(ModelError::EmptyCluster.into());
        }
        if self.horizon_hours == 0 {
            return Err(ConfigError::Invalid("horizon_hours must be at least 1".into()));
        }
        self.simulation_config().validate()?;
        self.projection.validate()?;
        self.workload.build(self.horizon_hours)?;
        Ok(())
    }

    pub fn simulation_config(&self) -> SimulationConfig<T> {
        SimulationConfig {
            weights: self.weights,
            forecast: self.forecast,
            scenario_c: self.scenario_c,
        }
    }

    pub fn workload_spec(&self) -> Result<WorkloadSpec<T>, ConfigError> {
        self.workload.build(self.horizon_hours)
    }

    pub fn cluster(&self, series: Vec<CarbonIntensitySeries<T>>) -> Result<Cluster<T>, ConfigError> {
        Ok(validate_cluster(self.nodes.clone(), series, self.horizon_hours)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ForecastMethod;

    const MINIMAL: &str = r#"{
        "nodes": [{"id": "n1", "zone": "ES", "pue": 1.2, "idle_power_w": 10, "max_power_w": 30, "capacity_units": 1}],
        "horizon_hours": 48,
        "workload": {"demand": {"constant": 0.5}}
    }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ClusterConfig::<f64>::from_json(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.weights, RankingWeights::default());
        assert_eq!(c.scenario, ScenarioSelection::All);
        assert_eq!(c.forecast.method, ForecastMethod::SeasonalNaive24h);
        assert_eq!(c.forecast.horizon_hours, 24);
        assert_eq!(c.scenario_c, ScenarioCConfig::default());
        assert_eq!(c.gap_fill, GapPolicy::Fail);
        assert_eq!(c.workload_spec().unwrap().demand(), vec![0.5; 48].as_slice());
    }

    #[test]
    fn full_config_round_trips() {
        let json = r#"{
            "nodes": [{"id": "n1", "zone": "ES", "pue": 1.2, "idle_power_w": 10, "max_power_w": 30, "capacity_units": 1}],
            "weights": {"w1": 1, "w2": 0, "w3": 0, "w4": 0},
            "scenario": "c",
            "horizon_hours": 2,
            "workload": {"demand": {"hourly": [0.1, 0.2]}, "jobs": [{"id": "j", "priority": 3, "deadline": "2022-01-01T05:00:00Z"}]},
            "forecast": {"method": "moving_average", "window_hours": 3, "horizon_hours": 6},
            "scenario_c": {"epoch_hours": 24, "cfp_window_hours": 24},
            "gap_fill": "linear",
            "projection": {"years": 5}
        }"#;
        let c = ClusterConfig::<f64>::from_json(json.as_bytes()).unwrap();
        assert_eq!(c.scenario, ScenarioSelection::One(ScenarioKind::C));
        assert_eq!(c.forecast.method, ForecastMethod::MovingAverage { window_hours: 3 });
        assert_eq!(c.projection.years, 5);
        assert_eq!(c.projection.target_kg, 19_754_000_000.0);
        let again = ClusterConfig::<f64>::from_json(serde_json::to_string(&c).unwrap().as_bytes()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn invalid_configs() {
        let bad_len = MINIMAL.replace(r#"{"constant": 0.5}"#, r#"{"hourly": [1, 2]}"#);
        assert!(matches!(ClusterConfig::<f64>::from_json(bad_len.as_bytes()), Err(ConfigError::Invalid(_))));
        let bad_pue = MINIMAL.replace(r#""pue": 1.2"#, r#""pue": 0.2"#);
        assert!(ClusterConfig::<f64>::from_json(bad_pue.as_bytes()).is_err());
        let bad_epoch = MINIMAL.replace(r#""horizon_hours": 48"#, r#""horizon_hours": 48, "scenario_c": {"epoch_hours": 0}"#);
        assert!(matches!(ClusterConfig::<f64>::from_json(bad_epoch.as_bytes()), Err(ConfigError::Sim(_))));
        let unknown = MINIMAL.replace(r#""horizon_hours": 48"#, r#""horizon_hours": 48, "colour": 1"#);
        assert!(ClusterConfig::<f64>::from_json(unknown.as_bytes()).is_err());
    }

    #[test]
    fn daily_profile_repeats() {
        let w = WorkloadConfig {
            demand: DemandConfig::DailyProfile((0..24).map(f64::from).collect()),
            jobs: vec![],
        };
        let spec = w.build(30).unwrap();
        assert_eq!(spec.demand()[25], 1.0);
        assert!(WorkloadConfig { demand: DemandConfig::DailyProfile(vec![1.0f64; 5]), jobs: vec![] }.build(3).is_err());
    }

    #[test]
    fn scenario_selection_includes_baseline() {
        assert_eq!(ScenarioSelection::One(ScenarioKind::B).kinds(), vec![ScenarioKind::Baseline, ScenarioKind::B]);
        assert_eq!(ScenarioSelection::All.kinds().len(), 4);
        assert_eq!("ALL".parse::<ScenarioSelection>().unwrap(), ScenarioSelection::All);
        assert!("d".parse::<ScenarioSelection>().is_err());
    }
}
