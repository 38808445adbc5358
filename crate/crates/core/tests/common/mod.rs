#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use maizx_core::{validate_cluster, CarbonIntensitySeries, Cluster, Node, Zone};

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap()
}

/// Identical nodes `n0, n1, ...` in zones `Z0, Z1, ...`, one per CI trace.
pub fn uniform_cluster(ci: &[Vec<f64>], pue: f64, idle_w: f64, max_w: f64, capacity: f64) -> Cluster<f64> {
    let nodes = (0..ci.len())
        .map(|i| Node::new(format!("n{i}"), Zone::new(format!("Z{i}")).unwrap(), pue, idle_w, max_w, capacity).unwrap())
        .collect();
    let series = ci
        .iter()
        .enumerate()
        .map(|(i, v)| CarbonIntensitySeries::new(Zone::new(format!("Z{i}")).unwrap(), t0(), v.clone()).unwrap())
        .collect();
    validate_cluster(nodes, series, ci[0].len()).unwrap()
}

/// Brute-force optimum for identical zero-idle nodes: every hour the whole
/// demand runs on whichever zone is cleanest.
pub fn argmin_oracle_g(ci: &[Vec<f64>], demand: &[f64], pue: f64, max_w: f64, capacity: f64) -> f64 {
    demand
        .iter()
        .enumerate()
        .map(|(h, d)| {
            let kwh = max_w * (d / capacity) / 1000.0;
            ci.iter().map(|zone| kwh * pue * zone[h]).fold(f64::INFINITY, f64::min)
        })
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
