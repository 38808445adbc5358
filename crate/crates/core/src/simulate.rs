//! Hourly, deterministic scenario engine.
//!
//! The engine asks a [`PlacementPolicy`] for one allocation per hour, checks
//! the allocation invariants (utilization within `[0, 1]`, no work on
//! unpowered nodes, served work equal to demand) and turns it into per-node
//! energy and footprint series through the affine power model. Workload moves
//! between hours are free and instantaneous.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carbon::{energy_kwh, footprint_from_slices, CarbonError, FootprintSeries};
use crate::forecast::{fcfp, forecast_with_fallback, ForecastError, ForecastMethod};
use crate::model::{Cluster, Job, Node, RankingWeights, ScenarioKind, WorkloadSpec};
use crate::ranking::{maiz_ranking, schedule_terms, NodeScore, RankingError, RankingInput};
use crate::scalar::{rel_diff, Scalar};

/// Relative slack when comparing served work against demand or capacity.
const WORK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("workload covers {workload} hours but the cluster horizon is {cluster}")]
    HorizonMismatch { workload: usize, cluster: usize },
    #[error("demand overflow at hour {hour}: {demand} units exceed total capacity {capacity}")]
    DemandOverflow { hour: usize, demand: f64, capacity: f64 },
    #[error("baseline footprint is zero, reduction is undefined")]
    ZeroBaseline,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("policy produced an invalid allocation at hour {hour}: {reason}")]
    InvalidAllocation { hour: usize, reason: String },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Carbon(#[from] CarbonError),
}

/// One node's state during one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot<T> {
    pub utilization: T,
    pub powered: bool,
}

impl<T: Scalar> Slot<T> {
    pub fn off() -> Self {
        Self {
            utilization: T::zero(),
            powered: false,
        }
    }
}

/// Per-hour node states, indexed `[hour][node]` in cluster node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation<T> {
    pub node_ids: Vec<String>,
    pub hours: Vec<Vec<Slot<T>>>,
}

impl<T: Scalar> Allocation<T> {
    /// Compute units served in `hour`.
    pub fn served(&self, hour: usize, nodes: &[Node<T>]) -> T {
        self.hours[hour]
            .iter()
            .zip(nodes)
            .map(|(s, n)| s.utilization * n.capacity_units())
            .sum()
    }

    /// Index of the node carrying the most work in `hour`, if any work is placed.
    pub fn primary_node(&self, hour: usize, nodes: &[Node<T>]) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, (s, n)) in self.hours[hour].iter().zip(nodes).enumerate() {
            let work = s.utilization * n.capacity_units();
            if work > T::zero() && best.is_none_or(|(_, w)| work > w) {
                best = Some((i, work));
            }
        }
        best.map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult<T> {
    pub scenario: ScenarioKind,
    pub allocation: Allocation<T>,
    /// kWh per hour, indexed `[node][hour]`.
    pub energy_kwh: Vec<Vec<T>>,
    pub footprints: Vec<FootprintSeries<T>>,
    pub total_energy_kwh: T,
    pub total_cf_g: T,
}

impl<T: Scalar> ScenarioResult<T> {
    pub fn node_energy_kwh(&self, node: usize) -> T {
        self.energy_kwh[node].iter().copied().sum()
    }

    pub fn node_cf_g(&self, node: usize) -> T {
        self.footprints[node].total()
    }

    /// Footprint of all nodes in `hour`, gCO2.
    pub fn hourly_cf_g(&self, hour: usize) -> T {
        self.footprints.iter().map(|f| f.values[hour]).sum()
    }

    pub fn horizon_hours(&self) -> usize {
        self.allocation.hours.len()
    }
}

/// Knobs of the load-shifting scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioCConfig {
    /// Hours between re-rankings, 1..=24.
    pub epoch_hours: usize,
    /// Trailing hours (ending at the decision hour) summed into the realized footprint term.
    pub cfp_window_hours: usize,
}

impl Default for ScenarioCConfig {
    fn default() -> Self {
        Self {
            epoch_hours: 1,
            cfp_window_hours: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    #[serde(flatten)]
    pub method: ForecastMethod,
    pub horizon_hours: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            method: ForecastMethod::SeasonalNaive24h,
            horizon_hours: 24,
        }
    }
}

/// Everything besides the cluster and workload that a run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<T> {
    pub weights: RankingWeights<T>,
    pub forecast: ForecastConfig,
    pub scenario_c: ScenarioCConfig,
}

impl<T: Scalar> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            weights: RankingWeights::default(),
            forecast: ForecastConfig::default(),
            scenario_c: ScenarioCConfig::default(),
        }
    }
}

impl<T: Scalar> SimulationConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let c = &self.scenario_c;
        if !(1..=24).contains(&c.epoch_hours) {
            return Err(SimError::InvalidConfig(format!(
                "epoch_hours must be within 1..=24, got {}",
                c.epoch_hours
            )));
        }
        if c.cfp_window_hours == 0 {
            return Err(SimError::InvalidConfig("cfp_window_hours must be >= 1".into()));
        }
        self.forecast.method.validate()?;
        Ok(())
    }
}

/// Read-only view handed to a policy for one decision hour.
pub struct HourContext<'a, T> {
    pub cluster: &'a Cluster<T>,
    pub workload: &'a WorkloadSpec<T>,
    pub hour: usize,
    pub demand: T,
    /// The allocation chosen so far, hours `0..hour`.
    pub history: &'a Allocation<T>,
}

/// Decides node states for each simulated hour.
pub trait PlacementPolicy<T: Scalar> {
    fn kind(&self) -> ScenarioKind;

    fn place(&mut self, ctx: &HourContext<'_, T>) -> Result<Vec<Slot<T>>, SimError>;
}

/// Affine node power in watts; 0 W when unpowered.
pub fn power_of<T: Scalar>(node: &Node<T>, utilization: T, powered: bool) -> T {
    node.power_w(utilization, powered)
}

/// Drives `policy` over every hour of the horizon.
pub fn run_policy<T: Scalar, P: PlacementPolicy<T> + ?Sized>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    policy: &mut P,
) -> Result<ScenarioResult<T>, SimError> {
    let horizon = cluster.horizon_hours();
    if workload.horizon_hours() != horizon {
        return Err(SimError::HorizonMismatch {
            workload: workload.horizon_hours(),
            cluster: horizon,
        });
    }
    let nodes = cluster.nodes();
    let capacity = cluster.total_capacity();
    let tol = T::lit(WORK_TOLERANCE);
    let mut allocation = Allocation {
        node_ids: nodes.iter().map(|n| n.id().to_string()).collect(),
        hours: Vec::with_capacity(horizon),
    };
    for (hour, &demand) in workload.demand().iter().enumerate() {
        if demand > capacity * (T::one() + tol) {
            return Err(SimError::DemandOverflow {
                hour,
                demand: demand.to_f64_lossy(),
                capacity: capacity.to_f64_lossy(),
            });
        }
        let slots = policy.place(&HourContext {
            cluster,
            workload,
            hour,
            demand,
            history: &allocation,
        })?;
        check_slots(hour, demand, nodes, &slots)?;
        allocation.hours.push(slots);
    }

    let mut energy = vec![Vec::with_capacity(horizon); nodes.len()];
    for slots in &allocation.hours {
        for (i, (slot, node)) in slots.iter().zip(nodes).enumerate() {
            energy[i].push(energy_kwh(power_of(node, slot.utilization, slot.powered), T::one()));
        }
    }
    let footprints = nodes
        .iter()
        .zip(&energy)
        .map(|(node, e)| footprint_from_slices(node, e, cluster.ci_of(node)))
        .collect::<Result<Vec<_>, _>>()?;
    let total_energy_kwh = energy.iter().flatten().copied().sum();
    let total_cf_g = footprints.iter().map(FootprintSeries::total).sum();
    Ok(ScenarioResult {
        scenario: policy.kind(),
        allocation,
        energy_kwh: energy,
        footprints,
        total_energy_kwh,
        total_cf_g,
    })
}

fn check_slots<T: Scalar>(
    hour: usize,
    demand: T,
    nodes: &[Node<T>],
    slots: &[Slot<T>],
) -> Result<(), SimError> {
    let bad = |reason: String| SimError::InvalidAllocation { hour, reason };
    if slots.len() != nodes.len() {
        return Err(bad(format!("{} slots for {} nodes", slots.len(), nodes.len())));
    }
    for (slot, node) in slots.iter().zip(nodes) {
        let u = slot.utilization;
        if !(u >= T::zero() && u <= T::one()) {
            return Err(bad(format!("node {} utilization {u}", node.id())));
        }
        if u > T::zero() && !slot.powered {
            return Err(bad(format!("node {} has work but is powered off", node.id())));
        }
    }
    let served: T = slots
        .iter()
        .zip(nodes)
        .map(|(s, n)| s.utilization * n.capacity_units())
        .sum();
    let ok = if demand == T::zero() {
        served == T::zero()
    } else {
        rel_diff(served, demand) <= T::lit(WORK_TOLERANCE)
    };
    if !ok {
        return Err(bad(format!("served {served} units, demand {demand}")));
    }
    Ok(())
}

/// Greedy fill along `order`: each node takes as much as fits before the next.
pub fn fill_in_order<T: Scalar>(nodes: &[Node<T>], order: &[usize], demand: T) -> Vec<T> {
    let mut util = vec![T::zero(); nodes.len()];
    let mut remaining = demand;
    for &i in order {
        if remaining <= T::zero() {
            break;
        }
        let cap = nodes[i].capacity_units();
        if remaining >= cap {
            util[i] = T::one();
            remaining = remaining - cap;
        } else {
            util[i] = remaining / cap;
            remaining = T::zero();
        }
    }
    util
}

/// Even split with water-filling: nodes whose share exceeds their capacity
/// are capped and the excess is re-split over the rest.
pub fn even_split<T: Scalar>(nodes: &[Node<T>], demand: T) -> Vec<T> {
    let mut util = vec![T::zero(); nodes.len()];
    let mut open: Vec<usize> = (0..nodes.len()).collect();
    let mut remaining = demand;
    while !open.is_empty() && remaining > T::zero() {
        let share = remaining / T::from_usize_lossy(open.len());
        let (capped, rest): (Vec<usize>, Vec<usize>) =
            open.iter().partition(|&&i| nodes[i].capacity_units() <= share);
        if capped.is_empty() {
            for &i in &open {
                util[i] = share / nodes[i].capacity_units();
            }
            break;
        }
        for &i in &capped {
            util[i] = T::one();
            remaining = remaining - nodes[i].capacity_units();
        }
        open = rest;
    }
    util
}

/// Load split evenly across all nodes, all nodes powered.
#[derive(Debug, Default, Clone, Copy)]
pub struct EvenSplit;

impl<T: Scalar> PlacementPolicy<T> for EvenSplit {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Baseline
    }

    fn place(&mut self, ctx: &HourContext<'_, T>) -> Result<Vec<Slot<T>>, SimError> {
        Ok(even_split(ctx.cluster.nodes(), ctx.demand)
            .into_iter()
            .map(|utilization| Slot {
                utilization,
                powered: true,
            })
            .collect())
    }
}

/// Node indices ordered by mean carbon intensity over the horizon, then id.
pub fn mean_ci_order<T: Scalar>(cluster: &Cluster<T>) -> Vec<usize> {
    let means: Vec<T> = cluster
        .nodes()
        .iter()
        .map(|n| cluster.series(n.zone()).mean())
        .collect();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| {
        means[a]
            .partial_cmp(&means[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| cluster.nodes()[a].id().cmp(cluster.nodes()[b].id()))
    });
    order
}

/// One target for the whole horizon (lowest mean CI), spilling down the same
/// order when the target is full.
#[derive(Debug, Clone)]
pub struct FixedTarget {
    order: Vec<usize>,
    power_off_idle: bool,
}

impl FixedTarget {
    /// Scenario A: non-target nodes stay powered at idle.
    pub fn keep_idle<T: Scalar>(cluster: &Cluster<T>) -> Self {
        Self {
            order: mean_ci_order(cluster),
            power_off_idle: false,
        }
    }

    /// Scenario B: non-target nodes are off unless spill needs them.
    pub fn power_off<T: Scalar>(cluster: &Cluster<T>) -> Self {
        Self {
            order: mean_ci_order(cluster),
            power_off_idle: true,
        }
    }

    pub fn target(&self) -> usize {
        self.order[0]
    }
}

impl<T: Scalar> PlacementPolicy<T> for FixedTarget {
    fn kind(&self) -> ScenarioKind {
        if self.power_off_idle {
            ScenarioKind::B
        } else {
            ScenarioKind::A
        }
    }

    fn place(&mut self, ctx: &HourContext<'_, T>) -> Result<Vec<Slot<T>>, SimError> {
        let util = fill_in_order(ctx.cluster.nodes(), &self.order, ctx.demand);
        Ok(slots_for(util, self.target(), !self.power_off_idle))
    }
}

fn slots_for<T: Scalar>(util: Vec<T>, head: usize, all_powered: bool) -> Vec<Slot<T>> {
    util.into_iter()
        .enumerate()
        .map(|(i, utilization)| Slot {
            utilization,
            powered: all_powered || i == head || utilization > T::zero(),
        })
        .collect()
}

/// Re-ranks nodes every epoch and fills demand greedily in rank order; the
/// best-ranked node stays powered, other idle nodes are switched off.
#[derive(Debug, Clone)]
pub struct RankedShifting<T> {
    config: SimulationConfig<T>,
    order: Vec<usize>,
}

impl<T: Scalar> RankedShifting<T> {
    pub fn new(config: SimulationConfig<T>) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Self {
            config,
            order: Vec::new(),
        })
    }
}

impl<T: Scalar> PlacementPolicy<T> for RankedShifting<T> {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::C
    }

    fn place(&mut self, ctx: &HourContext<'_, T>) -> Result<Vec<Slot<T>>, SimError> {
        if self.order.is_empty() || ctx.hour.is_multiple_of(self.config.scenario_c.epoch_hours) {
            let host = ctx
                .hour
                .checked_sub(1)
                .and_then(|prev| ctx.history.primary_node(prev, ctx.cluster.nodes()));
            let scores = rank_at_hour(ctx.cluster, ctx.workload, &self.config, ctx.hour, host)?;
            self.order = scores
                .iter()
                .map(|s| {
                    ctx.cluster
                        .nodes()
                        .iter()
                        .position(|n| n.id() == s.node_id)
                        .expect("scored node is in the cluster")
                })
                .collect();
        }
        let util = fill_in_order(ctx.cluster.nodes(), &self.order, ctx.demand);
        Ok(slots_for(util, self.order[0], false))
    }
}

/// Utilization a node would run at if it took the whole demand alone.
fn projected_utilization<T: Scalar>(node: &Node<T>, demand: T) -> T {
    (demand / node.capacity_units()).min(T::one())
}

/// Jobs still relevant at `hour`: no deadline, or a deadline not yet passed.
fn open_jobs<T: Scalar>(cluster: &Cluster<T>, jobs: &[Job], hour: usize) -> Vec<Job> {
    let now = cluster.series(cluster.nodes()[0].zone()).timestamp(hour);
    jobs.iter()
        .filter(|j| j.deadline.is_none_or(|d| d >= now))
        .cloned()
        .collect()
}

/// Raw ranking terms of every node for a decision at `hour`.
///
/// * realized footprint: trailing `cfp_window_hours` up to and including
///   `hour`, at the node's projected utilization for this hour's demand;
/// * forecasted footprint: CI forecast from history through `hour`, over the
///   following hours of the horizon, at projected utilization of the planned
///   demand;
/// * power per unit of work;
/// * urgency of open jobs, charged to every node except `current_host`.
pub fn ranking_inputs<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    config: &SimulationConfig<T>,
    hour: usize,
    current_host: Option<usize>,
) -> Result<Vec<RankingInput<T>>, SimError> {
    let horizon = cluster.horizon_hours();
    if hour >= horizon {
        return Err(SimError::InvalidConfig(format!(
            "decision hour {hour} is outside the {horizon} h horizon"
        )));
    }
    let demand = workload.demand();
    let nodes = cluster.nodes();
    let window_start = (hour + 1).saturating_sub(config.scenario_c.cfp_window_hours);
    let ahead = config.forecast.horizon_hours.min(horizon - hour - 1);
    let now = cluster.series(nodes[0].zone()).timestamp(hour);
    let ids: Vec<&str> = nodes.iter().map(|n| n.id()).collect();
    let host_id = current_host.map(|i| nodes[i].id());
    let jobs = open_jobs(cluster, workload.jobs(), hour);
    let schedule = schedule_terms::<T>(&ids, host_id, &jobs, now);

    nodes
        .iter()
        .zip(schedule)
        .map(|(node, sched)| {
            let ci = cluster.ci_of(node);
            let load_kwh = energy_kwh(
                power_of(node, projected_utilization(node, demand[hour]), true),
                T::one(),
            );
            let window_ci: T = ci[window_start..=hour].iter().copied().sum();
            let cfp = load_kwh * node.pue() * window_ci;

            let forecast = forecast_with_fallback(&ci[..=hour], config.forecast.method, ahead)?;
            let planned: Vec<T> = demand[hour + 1..hour + 1 + ahead]
                .iter()
                .map(|&d| energy_kwh(power_of(node, projected_utilization(node, d), true), T::one()))
                .collect();
            let fcfp = fcfp(node, &planned, &forecast)?;
            Ok(RankingInput::for_node(node, cfp, fcfp, sched))
        })
        .collect()
}

/// Node scores for a decision at `hour`, best first.
pub fn rank_at_hour<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    config: &SimulationConfig<T>,
    hour: usize,
    current_host: Option<usize>,
) -> Result<Vec<NodeScore<T>>, SimError> {
    let inputs = ranking_inputs(cluster, workload, config, hour, current_host)?;
    Ok(maiz_ranking(&inputs, &config.weights)?)
}

pub fn run_baseline<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
) -> Result<ScenarioResult<T>, SimError> {
    run_policy(cluster, workload, &mut EvenSplit)
}

pub fn run_scenario_a<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
) -> Result<ScenarioResult<T>, SimError> {
    run_policy(cluster, workload, &mut FixedTarget::keep_idle(cluster))
}

pub fn run_scenario_b<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
) -> Result<ScenarioResult<T>, SimError> {
    run_policy(cluster, workload, &mut FixedTarget::power_off(cluster))
}

pub fn run_scenario_c<T: Scalar>(
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    config: &SimulationConfig<T>,
) -> Result<ScenarioResult<T>, SimError> {
    run_policy(cluster, workload, &mut RankedShifting::new(config.clone())?)
}

pub fn run_scenario<T: Scalar>(
    kind: ScenarioKind,
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    config: &SimulationConfig<T>,
) -> Result<ScenarioResult<T>, SimError> {
    match kind {
        ScenarioKind::Baseline => run_baseline(cluster, workload),
        ScenarioKind::A => run_scenario_a(cluster, workload),
        ScenarioKind::B => run_scenario_b(cluster, workload),
        ScenarioKind::C => run_scenario_c(cluster, workload, config),
    }
}

/// Runs `kinds` concurrently; results come back in the order requested.
pub fn run_scenarios<T: Scalar>(
    kinds: &[ScenarioKind],
    cluster: &Cluster<T>,
    workload: &WorkloadSpec<T>,
    config: &SimulationConfig<T>,
) -> Result<Vec<ScenarioResult<T>>, SimError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| scope.spawn(move || run_scenario(kind, cluster, workload, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

/// Percent reduction of `scenario_g` relative to `baseline_g`.
pub fn reduction_pct<T: Scalar>(baseline_g: T, scenario_g: T) -> Result<T, SimError> {
    if baseline_g.is_nan() || baseline_g <= T::zero() {
        return Err(SimError::ZeroBaseline);
    }
    Ok(T::lit(100.0) * (baseline_g - scenario_g) / baseline_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_cluster, CarbonIntensitySeries, Zone};
    use chrono::{TimeZone, Utc};

    fn cluster(nodes: &[(&str, &str, f64, f64, f64)], ci: &[(&str, Vec<f64>)]) -> Cluster<f64> {
        let t0 = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        let nodes = nodes
            .iter()
            .map(|&(id, z, idle, max, cap)| Node::new(id, Zone::new(z).unwrap(), 1.0, idle, max, cap).unwrap())
            .collect();
        let series = ci
            .iter()
            .map(|(z, v)| CarbonIntensitySeries::new(Zone::new(*z).unwrap(), t0, v.clone()).unwrap())
            .collect();
        let horizon = ci[0].1.len();
        validate_cluster(nodes, series, horizon).unwrap()
    }

    fn three_zone(hours: usize) -> Cluster<f64> {
        cluster(
            &[("de", "DE", 100.0, 300.0, 1.0), ("es", "ES", 100.0, 300.0, 1.0), ("nl", "NL", 100.0, 300.0, 1.0)],
            &[("ES", vec![100.0; hours]), ("NL", vec![300.0; hours]), ("DE", vec![500.0; hours])],
        )
    }

    #[test]
    fn power_of_examples() {
        let n = Node::new("n", Zone::new("ES").unwrap(), 1.0, 100.0, 300.0, 1.0).unwrap();
        assert_eq!(power_of(&n, 0.0, true), 100.0);
        assert_eq!(power_of(&n, 1.0, true), 300.0);
        assert_eq!(power_of(&n, 0.5, false), 0.0);
    }

    #[test]
    fn baseline_even_split() {
        let c = three_zone(4);
        let w = WorkloadSpec::constant(1.0, 4).unwrap();
        let r = run_baseline(&c, &w).unwrap();
        for slots in &r.allocation.hours {
            for s in slots {
                assert!((s.utilization - 1.0 / 3.0).abs() < 1e-15);
                assert!(s.powered);
            }
        }
    }

    #[test]
    fn baseline_idle_only_at_zero_demand() {
        let c = three_zone(2);
        let r = run_baseline(&c, &WorkloadSpec::constant(0.0, 2).unwrap()).unwrap();
        // 0.1 kWh idle per node-hour
        let expected = 2.0 * 0.1 * (100.0 + 300.0 + 500.0);
        assert!((r.total_cf_g - expected).abs() < 1e-9);
    }

    #[test]
    fn overflow_is_rejected_by_every_scenario() {
        let c = three_zone(2);
        let w = WorkloadSpec::constant(3.5, 2).unwrap();
        for kind in ScenarioKind::ALL {
            let err = run_scenario(kind, &c, &w, &SimulationConfig::default()).unwrap_err();
            assert!(matches!(err, SimError::DemandOverflow { hour: 0, .. }), "{kind}");
        }
    }

    #[test]
    fn water_filling_caps_small_nodes() {
        let c = cluster(
            &[("a", "ES", 0.0, 1.0, 0.5), ("b", "ES", 0.0, 1.0, 2.0), ("c", "ES", 0.0, 1.0, 2.0)],
            &[("ES", vec![1.0])],
        );
        let u = even_split(c.nodes(), 3.0);
        assert_eq!(u[0], 1.0);
        assert!((u[1] - 0.625).abs() < 1e-15 && (u[2] - 0.625).abs() < 1e-15);
    }

    #[test]
    fn scenario_a_targets_lowest_mean_ci() {
        let c = three_zone(3);
        let r = run_scenario_a(&c, &WorkloadSpec::constant(1.0, 3).unwrap()).unwrap();
        let es = r.allocation.node_ids.iter().position(|n| n == "es").unwrap();
        for slots in &r.allocation.hours {
            for (i, s) in slots.iter().enumerate() {
                assert!(s.powered);
                assert_eq!(s.utilization, if i == es { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn scenario_a_spills_to_next_lowest() {
        let c = cluster(
            &[("de", "DE", 0.0, 1.0, 2.0), ("es", "ES", 0.0, 1.0, 0.5), ("nl", "NL", 0.0, 1.0, 2.0)],
            &[("ES", vec![100.0]), ("NL", vec![300.0]), ("DE", vec![500.0])],
        );
        let r = run_scenario_a(&c, &WorkloadSpec::constant(1.0, 1).unwrap()).unwrap();
        let u: Vec<f64> = r.allocation.hours[0].iter().map(|s| s.utilization).collect();
        assert_eq!(u, vec![0.0, 1.0, 0.25]);
    }

    #[test]
    fn equal_ci_targets_smallest_id() {
        let c = cluster(
            &[("z", "ES", 0.0, 1.0, 1.0), ("b", "NL", 0.0, 1.0, 1.0), ("m", "DE", 0.0, 1.0, 1.0)],
            &[("ES", vec![200.0; 2]), ("NL", vec![200.0; 2]), ("DE", vec![200.0; 2])],
        );
        let p = FixedTarget::keep_idle(&c);
        assert_eq!(c.nodes()[p.target()].id(), "b");
    }

    #[test]
    fn scenario_b_powers_off_others() {
        let c = three_zone(2);
        let r = run_scenario_b(&c, &WorkloadSpec::constant(1.0, 2).unwrap()).unwrap();
        let es = r.allocation.node_ids.iter().position(|n| n == "es").unwrap();
        for i in 0..3 {
            let e = r.node_energy_kwh(i);
            if i == es {
                assert!((e - 0.6).abs() < 1e-12);
            } else {
                assert_eq!(e, 0.0);
            }
        }
        let idle = run_scenario_b(&c, &WorkloadSpec::constant(0.0, 2).unwrap()).unwrap();
        assert!((idle.total_energy_kwh - 0.2).abs() < 1e-12);
    }

    #[test]
    fn scenario_c_three_node_example() {
        let c = three_zone(24);
        let w = WorkloadSpec::constant(1.0, 24).unwrap();
        let base = run_baseline(&c, &w).unwrap();
        let shifted = run_scenario_c(&c, &w, &SimulationConfig::default()).unwrap();
        assert!((base.hourly_cf_g(5) - 150.0).abs() < 1e-9);
        assert!((shifted.hourly_cf_g(5) - 30.0).abs() < 1e-9);
        let pct = reduction_pct(base.total_cf_g, shifted.total_cf_g).unwrap();
        assert!((pct - 80.0).abs() < 1e-9, "{pct}");
    }

    #[test]
    fn constant_ci_c_matches_b() {
        let c = three_zone(48);
        let w = WorkloadSpec::constant(0.7, 48).unwrap();
        let b = run_scenario_b(&c, &w).unwrap();
        let cc = run_scenario_c(&c, &w, &SimulationConfig::default()).unwrap();
        assert_eq!(b.allocation, cc.allocation);
    }

    #[test]
    fn c_switches_at_crossing() {
        // ES falls and NL rises; ES becomes cleaner from hour 13 on.
        let es: Vec<f64> = (0..24).map(|h| 400.0 - 10.0 * f64::from(h)).collect();
        let nl: Vec<f64> = (0..24).map(|h| 150.0 + 10.0 * f64::from(h)).collect();
        let c = cluster(
            &[("es", "ES", 0.0, 300.0, 1.0), ("nl", "NL", 0.0, 300.0, 1.0)],
            &[("ES", es.clone()), ("NL", nl.clone())],
        );
        let cfg = SimulationConfig {
            weights: RankingWeights::footprint_only(),
            ..SimulationConfig::default()
        };
        let r = run_scenario_c(&c, &WorkloadSpec::constant(1.0, 24).unwrap(), &cfg).unwrap();
        for h in 0..24 {
            let expected = if h >= 13 { 0 } else { 1 };
            assert_eq!(expected == 0, es[h] < nl[h]);
            assert_eq!(r.allocation.primary_node(h, c.nodes()), Some(expected), "hour {h}");
        }
    }

    #[test]
    fn reduction_examples() {
        assert!((reduction_pct(10_000.0_f64, 1_432.0).unwrap() - 85.68).abs() < 1e-9);
        assert_eq!(reduction_pct(42.0, 42.0).unwrap(), 0.0);
        assert_eq!(reduction_pct(42.0, 0.0).unwrap(), 100.0);
        assert_eq!(reduction_pct(0.0, 1.0), Err(SimError::ZeroBaseline));
    }

    #[test]
    fn horizon_mismatch() {
        let c = three_zone(4);
        let w = WorkloadSpec::constant(1.0, 3).unwrap();
        assert!(matches!(run_baseline(&c, &w), Err(SimError::HorizonMismatch { .. })));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimulationConfig::<f64>::default();
        cfg.scenario_c.epoch_hours = 25;
        assert!(cfg.validate().is_err());
        cfg.scenario_c.epoch_hours = 24;
        assert!(cfg.validate().is_ok());
        cfg.scenario_c.cfp_window_hours = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn daily_epoch_holds_order_within_day() {
        let es: Vec<f64> = (0..48).map(|h| if h % 24 < 12 { 100.0 } else { 500.0 }).collect();
        let nl = vec![300.0; 48];
        let c = cluster(
            &[("es", "ES", 0.0, 300.0, 1.0), ("nl", "NL", 0.0, 300.0, 1.0)],
            &[("ES", es), ("NL", nl)],
        );
        let mut cfg = SimulationConfig {
            weights: RankingWeights::footprint_only(),
            ..SimulationConfig::default()
        };
        cfg.scenario_c.epoch_hours = 24;
        let r = run_scenario_c(&c, &WorkloadSpec::constant(1.0, 48).unwrap(), &cfg).unwrap();
        for h in 0..48 {
            assert_eq!(r.allocation.primary_node(h, c.nodes()), Some(0));
        }
    }

    #[test]
    fn f32_runs() {
        let t0 = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        let z = Zone::new("ES").unwrap();
        let node = Node::<f32>::new("n", z.clone(), 1.2, 10.0, 20.0, 1.0).unwrap();
        let s = CarbonIntensitySeries::new(z, t0, vec![100.0f32; 30]).unwrap();
        let c = validate_cluster(vec![node], vec![s], 30).unwrap();
        let w = WorkloadSpec::constant(0.5f32, 30).unwrap();
        let r = run_scenarios(&ScenarioKind::ALL, &c, &w, &SimulationConfig::default()).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[0].total_cf_g - 30.0 * 0.015 * 1.2 * 100.0).abs() < 1e-2);
    }
}
