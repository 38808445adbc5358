//! Carbon-intensity forecasting for the forecasted-footprint ranking term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carbon::{compute_cf, CarbonError};
use crate::model::{CarbonIntensitySeries, Node};
use crate::scalar::Scalar;

pub const SEASON_HOURS: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("insufficient history: {method} needs {needed} hours, got {got}")]
    InsufficientHistory {
        method: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("moving average window must be at least 1 hour")]
    InvalidWindow,
    #[error("length mismatch: {planned} planned hours vs {forecast} forecast hours")]
    LengthMismatch { planned: usize, forecast: usize },
    #[error(transparent)]
    Carbon(#[from] CarbonError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ForecastMethod {
    /// Repeat the last observation.
    Persistence,
    /// Repeat the value observed 24 hours earlier.
    #[default]
    #[serde(rename = "seasonal_naive_24h")]
    SeasonalNaive24h,
    /// Hold the trailing mean of the last `window_hours` observations.
    MovingAverage { window_hours: usize },
}

impl ForecastMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Persistence => "persistence",
            Self::SeasonalNaive24h => "seasonal_naive_24h",
            Self::MovingAverage { .. } => "moving_average",
        }
    }

    pub fn min_history(&self) -> usize {
        match self {
            Self::Persistence => 1,
            Self::SeasonalNaive24h => SEASON_HOURS,
            Self::MovingAverage { window_hours } => (*window_hours).max(1),
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        match self {
            Self::MovingAverage { window_hours: 0 } => Err(ForecastError::InvalidWindow),
            _ => Ok(()),
        }
    }
}

/// Forecasts `horizon_h` hourly values following `history`.
pub fn forecast_ci<T: Scalar>(
    history: &CarbonIntensitySeries<T>,
    method: ForecastMethod,
    horizon_h: usize,
) -> Result<Vec<T>, ForecastError> {
    forecast_values(history.values(), method, horizon_h)
}

/// Slice form of [`forecast_ci`].
pub fn forecast_values<T: Scalar>(
    history: &[T],
    method: ForecastMethod,
    horizon_h: usize,
) -> Result<Vec<T>, ForecastError> {
    method.validate()?;
    let needed = method.min_history();
    if history.len() < needed {
        return Err(ForecastError::InsufficientHistory {
            method: method.name(),
            needed,
            got: history.len(),
        });
    }
    let n = history.len();
    let out = match method {
        ForecastMethod::Persistence => vec![history[n - 1]; horizon_h],
        // Beyond one season the forecast recurses into itself, which is the
        // last observed season repeated.
        ForecastMethod::SeasonalNaive24h => (0..horizon_h)
            .map(|h| history[n - SEASON_HOURS + h % SEASON_HOURS])
            .collect(),
        ForecastMethod::MovingAverage { window_hours } => {
            let tail = &history[n - window_hours..];
            let mean = tail.iter().copied().sum::<T>() / T::from_usize_lossy(window_hours);
            vec![mean; horizon_h]
        }
    };
    Ok(out)
}

/// As [`forecast_values`], falling back to persistence when the history is
/// too short for `method`. Empty history yields an empty forecast.
pub fn forecast_with_fallback<T: Scalar>(
    history: &[T],
    method: ForecastMethod,
    horizon_h: usize,
) -> Result<Vec<T>, ForecastError> {
    if history.is_empty() {
        return Ok(Vec::new());
    }
    if history.len() < method.min_history() {
        return forecast_values(history, ForecastMethod::Persistence, horizon_h);
    }
    forecast_values(history, method, horizon_h)
}

/// Forecasted footprint: sum over hours of planned energy x PUE x forecast CI.
pub fn fcfp<T: Scalar>(
    node: &Node<T>,
    planned_energy_kwh: &[T],
    forecast: &[T],
) -> Result<T, ForecastError> {
    if planned_energy_kwh.len() != forecast.len() {
        return Err(ForecastError::LengthMismatch {
            planned: planned_energy_kwh.len(),
            forecast: forecast.len(),
        });
    }
    planned_energy_kwh
        .iter()
        .zip(forecast)
        .try_fold(T::zero(), |acc, (&e, &c)| Ok(acc + compute_cf(e, node.pue(), c)?))
}

/// Mean absolute error between a forecast and what was observed.
pub fn mean_absolute_error<T: Scalar>(forecast: &[T], actual: &[T]) -> T {
    let n = forecast.len().min(actual.len());
    if n == 0 {
        return T::zero();
    }
    forecast
        .iter()
        .zip(actual)
        .map(|(f, a)| (*f - *a).abs())
        .sum::<T>()
        / T::from_usize_lossy(n)
}
