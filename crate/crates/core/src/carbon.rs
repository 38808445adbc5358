//! Carbon footprint: energy (kWh) x PUE x grid intensity (gCO2/kWh) -> gCO2.
//!
//! Grams are the only internal unit; kilograms appear in reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CarbonIntensitySeries, Node};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CarbonError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("length mismatch: {energy} energy hours vs {intensity} intensity hours")]
    LengthMismatch { energy: usize, intensity: usize },
    #[error("zone mismatch: node {node} is in {node_zone}, series is {series_zone}")]
    ZoneMismatch {
        node: String,
        node_zone: String,
        series_zone: String,
    },
}

/// Hourly footprint of a node, gCO2 per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintSeries<T> {
    pub node_id: String,
    pub values: Vec<T>,
}

impl<T: Scalar> FootprintSeries<T> {
    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// `ec_kwh * pue * ci_g_per_kwh`.
pub fn compute_cf<T: Scalar>(ec_kwh: T, pue: T, ci_g_per_kwh: T) -> Result<T, CarbonError> {
    if !ec_kwh.is_non_negative() {
        return Err(CarbonError::Domain(format!("energy {ec_kwh} kWh is negative")));
    }
    if !(pue.is_finite() && pue >= T::one()) {
        return Err(CarbonError::Domain(format!("pue {pue} is below 1")));
    }
    if !ci_g_per_kwh.is_non_negative() {
        return Err(CarbonError::Domain(format!(
            "carbon intensity {ci_g_per_kwh} g/kWh is negative"
        )));
    }
    Ok(ec_kwh * pue * ci_g_per_kwh)
}

/// Elementwise [`compute_cf`] with the node's PUE.
pub fn node_footprint<T: Scalar>(
    node: &Node<T>,
    energy_kwh: &[T],
    ci: &CarbonIntensitySeries<T>,
) -> Result<FootprintSeries<T>, CarbonError> {
    if ci.zone() != node.zone() {
        return Err(CarbonError::ZoneMismatch {
            node: node.id().to_string(),
            node_zone: node.zone().to_string(),
            series_zone: ci.zone().to_string(),
        });
    }
    footprint_from_slices(node, energy_kwh, ci.values())
}

pub(crate) fn footprint_from_slices<T: Scalar>(
    node: &Node<T>,
    energy_kwh: &[T],
    ci: &[T],
) -> Result<FootprintSeries<T>, CarbonError> {
    if energy_kwh.len() != ci.len() {
        return Err(CarbonError::LengthMismatch {
            energy: energy_kwh.len(),
            intensity: ci.len(),
        });
    }
    let values = energy_kwh
        .iter()
        .zip(ci)
        .map(|(&e, &c)| compute_cf(e, node.pue(), c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FootprintSeries {
        node_id: node.id().to_string(),
        values,
    })
}

/// Watts held for `hours` hours, in kWh.
pub fn energy_kwh<T: Scalar>(power_w: T, hours: T) -> T {
    power_w * hours / T::lit(1000.0)
}
