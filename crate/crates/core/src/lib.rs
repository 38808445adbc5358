//! Carbon-aware placement across geographically distributed compute nodes.
//!
//! The crate ranks nodes by a weighted sum of realized carbon footprint,
//! forecasted footprint, power efficiency and scheduling urgency, and replays
//! hourly carbon-intensity traces through four placement scenarios:
//!
//! * **baseline**: load split evenly, carbon blind;
//! * **A**: all load on the node with the lowest mean intensity, others idle;
//! * **B**: as A, with the other nodes powered off;
//! * **C**: nodes re-ranked every hour and load shifted to the best one.
//!
//! Footprint is energy (kWh) x PUE x intensity (gCO2/kWh). The numeric code
//! is generic over [`Scalar`] (`f32` or `f64`); the `*F64` aliases below are
//! what the command-line tool uses.

pub mod carbon;
pub mod forecast;
pub mod ingest;
pub mod model;
pub mod ranking;
pub mod report;
pub mod scalar;
pub mod simulate;

pub use carbon::{compute_cf, node_footprint, CarbonError, FootprintSeries};
pub use forecast::{fcfp, forecast_ci, ForecastError, ForecastMethod};
pub use ingest::{
    hourly_energy, parse_ci_csv, parse_power_csv, ClusterConfig, GapPolicy, IngestError,
};
pub use model::{
    validate_cluster, CarbonIntensitySeries, Cluster, Job, ModelError, Node, PowerSeries,
    RankingWeights, ScenarioKind, WorkloadSpec, Zone,
};
pub use ranking::{cp_ratio, maiz_ranking, normalize, schedule_weight, NodeScore, RankingError};
pub use report::{
    equivalences, render_report, units_required, EmissionsReport, ProjectionParams, ReportError,
};
pub use scalar::Scalar;
pub use simulate::{
    reduction_pct, run_baseline, run_scenario, run_scenario_a, run_scenario_b, run_scenario_c,
    run_scenarios, ScenarioResult, SimError, SimulationConfig,
};

pub type NodeF64 = Node<f64>;
pub type NodeF32 = Node<f32>;
pub type ClusterF64 = Cluster<f64>;
pub type ClusterF32 = Cluster<f32>;
pub type CarbonIntensitySeriesF64 = CarbonIntensitySeries<f64>;
pub type PowerSeriesF64 = PowerSeries<f64>;
pub type WorkloadSpecF64 = WorkloadSpec<f64>;
pub type RankingWeightsF64 = RankingWeights<f64>;
pub type NodeScoreF64 = NodeScore<f64>;
pub type ScenarioResultF64 = ScenarioResult<f64>;
pub type SimulationConfigF64 = SimulationConfig<f64>;
pub type ClusterConfigF64 = ClusterConfig<f64>;
