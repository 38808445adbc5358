//! Weighted node ranking.
//!
//! Four raw terms are gathered per node, all oriented so that lower is
//! better: realized carbon footprint, forecasted footprint, power per unit of
//! work, and scheduling urgency. Each term is min-max normalized across the
//! candidate set and combined as `w1*cfp + w2*fcfp + w3*cp + w4*sched`. The
//! lowest score is the preferred placement target.

use std::cmp::Ordering;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Job, Node, RankingWeights};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("cannot rank an empty cluster")]
    EmptyCluster,
    #[error("duplicate node {0} in ranking input")]
    DuplicateNode(String),
    #[error("raw term {term} of node {node} is not a finite non-negative number")]
    InvalidTerm { node: String, term: &'static str },
}

/// Watts at full load per unit of hourly capacity. Lower is more efficient.
pub fn cp_ratio<T: Scalar>(node: &Node<T>) -> T {
    node.max_power_w() / node.capacity_units()
}

/// Urgency of a job set at `now`, in `[0, 1]`.
///
/// The maximum over jobs of `priority / max_priority` times deadline
/// pressure, where pressure is `clamp(1 - remaining / 24 h, 0, 1)`, 1 once the
/// deadline has passed, and 0.5 when the job has no deadline.
pub fn schedule_weight<T: Scalar>(jobs: &[Job], now: DateTime<Utc>) -> T {
    let max_priority = jobs.iter().map(|j| j.priority).max().unwrap_or(0);
    if max_priority == 0 {
        return T::zero();
    }
    let day_s = T::lit(86_400.0);
    jobs.iter()
        .map(|job| {
            let priority_norm =
                T::from_u32(job.priority).unwrap() / T::from_u32(max_priority).unwrap();
            let pressure = match job.deadline {
                None => T::lit(0.5),
                Some(deadline) if deadline <= now => T::one(),
                Some(deadline) => {
                    let remaining = T::from_i64((deadline - now).num_seconds()).unwrap();
                    (T::one() - remaining / day_s).max(T::zero()).min(T::one())
                }
            };
            priority_norm * pressure
        })
        .fold(T::zero(), T::max)
}

/// Per-node urgency term.
///
/// Moving urgent work off the node currently serving it is penalized, so
/// every other node carries the job set's urgency and the current host
/// carries zero. With no current host every node gets zero.
pub fn schedule_terms<T: Scalar>(
    node_ids: &[&str],
    current_host: Option<&str>,
    jobs: &[Job],
    now: DateTime<Utc>,
) -> Vec<T> {
    let urgency = match current_host {
        Some(_) => schedule_weight(jobs, now),
        None => T::zero(),
    };
    node_ids
        .iter()
        .map(|id| match current_host {
            Some(host) if host != *id => urgency,
            _ => T::zero(),
        })
        .collect()
}

/// Min-max normalization to `[0, 1]`; an all-equal input maps to zeros.
pub fn normalize<T: Scalar>(values: &[T]) -> Vec<T> {
    let Some(&first) = values.first() else {
        return Vec::new();
    };
    let (lo, hi) = values
        .iter()
        .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range <= T::zero() {
        return vec![T::zero(); values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / range).max(T::zero()).min(T::one()))
        .collect()
}

/// Raw, un-normalized ranking terms of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingInput<T> {
    pub node_id: String,
    /// Realized footprint over the trailing window, gCO2.
    pub cfp: T,
    /// Forecasted footprint over the planning horizon, gCO2.
    pub fcfp: T,
    pub cp_ratio: T,
    pub schedule: T,
}

impl<T: Scalar> RankingInput<T> {
    pub fn for_node(node: &Node<T>, cfp: T, fcfp: T, schedule: T) -> Self {
        Self {
            node_id: node.id().to_string(),
            cfp,
            fcfp,
            cp_ratio: cp_ratio(node),
            schedule,
        }
    }

    fn terms(&self) -> [(T, &'static str); 4] {
        [
            (self.cfp, "cfp"),
            (self.fcfp, "fcfp"),
            (self.cp_ratio, "cp_ratio"),
            (self.schedule, "schedule"),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore<T> {
    pub node_id: String,
    pub cfp_norm: T,
    pub fcfp_norm: T,
    pub cp_ratio_norm: T,
    pub schedule_norm: T,
    pub score: T,
}

impl<T: Scalar> NodeScore<T> {
    pub fn components(&self) -> [T; 4] {
        [
            self.cfp_norm,
            self.fcfp_norm,
            self.cp_ratio_norm,
            self.schedule_norm,
        ]
    }

    /// Weighted sum of the stored normalized components.
    pub fn recompute(&self, weights: &RankingWeights<T>) -> T {
        weighted_sum(&weights.as_array(), &self.components())
    }
}

fn weighted_sum<T: Scalar>(w: &[T; 4], x: &[T; 4]) -> T {
    w.iter().zip(x).fold(T::zero(), |acc, (&w, &x)| acc + w * x)
}

/// Scores and orders the candidate nodes, best (lowest score) first.
///
/// Equal scores are ordered by the normalized terms that carry positive
/// weight, compared in order, then by node id. A node that dominates another
/// on the weighted terms therefore never ranks behind it, even when rounding
/// makes their scores equal.
pub fn maiz_ranking<T: Scalar>(
    inputs: &[RankingInput<T>],
    weights: &RankingWeights<T>,
) -> Result<Vec<NodeScore<T>>, RankingError> {
    if inputs.is_empty() {
        return Err(RankingError::EmptyCluster);
    }
    let mut ids: Vec<&str> = inputs.iter().map(|i| i.node_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(RankingError::DuplicateNode(w[0].to_string()));
    }
    for input in inputs {
        if let Some((_, term)) = input.terms().iter().find(|(v, _)| !v.is_non_negative()) {
            return Err(RankingError::InvalidTerm {
                node: input.node_id.clone(),
                term,
            });
        }
    }

    let column = |k: usize| -> Vec<T> { normalize(&inputs.iter().map(|i| i.terms()[k].0).collect::<Vec<_>>()) };
    let cols = [column(0), column(1), column(2), column(3)];
    let w = weights.as_array();
    let mut scores: Vec<NodeScore<T>> = inputs
        .iter()
        .enumerate()
        .map(|(i, input)| {
            let comps = [cols[0][i], cols[1][i], cols[2][i], cols[3][i]];
            NodeScore {
                node_id: input.node_id.clone(),
                cfp_norm: comps[0],
                fcfp_norm: comps[1],
                cp_ratio_norm: comps[2],
                schedule_norm: comps[3],
                score: weighted_sum(&w, &comps),
            }
        })
        .collect();

    let active: Vec<usize> = (0..4).filter(|&k| w[k] > T::zero()).collect();
    scores.sort_by(|a, b| {
        cmp_scalar(a.score, b.score)
            .then_with(|| {
                let (ca, cb) = (a.components(), b.components());
                active
                    .iter()
                    .map(|&k| cmp_scalar(ca[k], cb[k]))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.node_id.cmp(&b.node_id))
    });
    Ok(scores)
}

fn cmp_scalar<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}
