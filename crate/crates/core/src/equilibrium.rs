//! Competitive liquidity-provision equilibrium: fee income must cover
//! expected impermanent loss.
//!
//! With daily traded volume V, fee rate f, and per-unit impermanent loss
//! IL, a pool holding x units earns f*V/x per unit and loses E[IL] per
//! unit in expectation. Zero expected profit pins the equilibrium stock
//!
//! ```text
//! x* = f * E[V] / E[IL]
//! ```
//!
//! with both expectations estimated as trailing means over a window that
//! excludes the current day, keeping the predictor ex-ante. The model is
//! checked by regressing log observed liquidity on log predicted.

use crate::cpmm::{self, IlMode};
use crate::domain::DomainError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("undefined equilibrium on day {day}: expected impermanent loss is zero")]
    UndefinedEquilibrium { day: i64 },
    #[error("fit needs equally many observed and predicted values, got {observed} and {predicted}")]
    LengthMismatch { observed: usize, predicted: usize },
    #[error("fit needs at least two points, got {n}")]
    TooShort { n: usize },
    #[error("degenerate fit: predictor has no variance")]
    DegeneratePredictor,
    #[error("fit inputs must be positive to take logs, got {value}")]
    NotLoggable { value: f64 },
}

/// One day of a pair's history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyPoint {
    pub day: i64,
    /// Volume traded that day, in base-token units.
    pub volume: f64,
    /// Realized impermanent loss of the day's gross price change.
    pub il: f64,
    /// Observed pool liquidity, in base-token units.
    pub observed_liquidity: f64,
}

/// A pair's daily panel with strictly increasing days.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDailySeries {
    pub pair_label: String,
    points: Vec<DailyPoint>,
}

impl PairDailySeries {
    pub fn new(pair_label: impl Into<String>, points: Vec<DailyPoint>) -> Result<Self, EquilibriumError> {
        for w in points.windows(2) {
            if w[1].day <= w[0].day {
                return Err(DomainError::Invalid(format!(
                    "days must be strictly increasing, got {} then {}",
                    w[0].day, w[1].day
                ))
                .into());
            }
        }
        for p in &points {
            if !(p.volume.is_finite() && p.volume >= 0.0) {
                return Err(DomainError::Invalid(format!(
                    "volume must be nonnegative, got {} on day {}",
                    p.volume, p.day
                ))
                .into());
            }
            if !(p.il.is_finite() && p.il >= 0.0) {
                return Err(DomainError::Invalid(format!(
                    "impermanent loss must be nonnegative, got {} on day {}",
                    p.il, p.day
                ))
                .into());
            }
            if !(p.observed_liquidity.is_finite() && p.observed_liquidity > 0.0) {
                return Err(DomainError::NotPositive {
                    what: "observed liquidity",
                    value: p.observed_liquidity,
                }
                .into());
            }
        }
        Ok(PairDailySeries { pair_label: pair_label.into(), points })
    }

    /// Builds the panel from raw daily rows of (day, volume, open price,
    /// close price, observed liquidity), deriving each day's loss from
    /// its gross price change.
    pub fn from_prices(
        pair_label: impl Into<String>,
        rows: &[(i64, f64, f64, f64, f64)],
    ) -> Result<Self, EquilibriumError> {
        let mut points = Vec::with_capacity(rows.len());
        for (day, volume, open, close, liquidity) in rows {
            if !(open.is_finite() && *open > 0.0) {
                return Err(DomainError::NotPositive { what: "open price", value: *open }.into());
            }
            if !(close.is_finite() && *close > 0.0) {
                return Err(DomainError::NotPositive { what: "close price", value: *close }.into());
            }
            let il = cpmm::impermanent_loss(close / open, IlMode::Difference)?.il;
            points.push(DailyPoint {
                day: *day,
                volume: *volume,
                il,
                observed_liquidity: *liquidity,
            });
        }
        PairDailySeries::new(pair_label, points)
    }

    pub fn points(&self) -> &[DailyPoint] {
        &self.points
    }
}

/// A day's trailing expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedStats {
    pub day: i64,
    pub expected_volume: f64,
    pub expected_il: f64,
}

/// Trailing means of volume and impermanent loss over the prior
/// `window_days` points, excluding the current day. Days without a full
/// window are skipped, so the first `window_days` points yield nothing.
pub fn expected_stats(series: &PairDailySeries, window_days: usize) -> Vec<ExpectedStats> {
    let w = window_days.max(1);
    let points = series.points();
    points
        .iter()
        .enumerate()
        .skip(w)
        .map(|(i, p)| {
            let window = &points[i - w..i];
            ExpectedStats {
                day: p.day,
                expected_volume: window.iter().map(|q| q.volume).sum::<f64>() / w as f64,
                expected_il: window.iter().map(|q| q.il).sum::<f64>() / w as f64,
            }
        })
        .collect()
}

/// Equilibrium liquidity stock for fee rate `f`: f * E[V] / E[IL]. A
/// zero expected loss admits no finite equilibrium and is reported, not
/// clamped.
pub fn predicted_liquidity(f: f64, stats: &ExpectedStats) -> Result<f64, EquilibriumError> {
    if !(f.is_finite() && f > 0.0) {
        return Err(DomainError::NotPositive { what: "fee rate", value: f }.into());
    }
    if stats.expected_il == 0.0 {
        return Err(EquilibriumError::UndefinedEquilibrium { day: stats.day });
    }
    Ok(f * stats.expected_volume / stats.expected_il)
}

/// Pooled least-squares fit of log(observed) on log(predicted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_observations: usize,
}

/// Ordinary least squares of log observed liquidity on log predicted
/// liquidity. Inputs must be elementwise positive and equally long;
/// callers drop days with undefined predictions beforehand.
pub fn model_fit(observed: &[f64], predicted: &[f64]) -> Result<FitReport, EquilibriumError> {
    if observed.len() != predicted.len() {
        return Err(EquilibriumError::LengthMismatch {
            observed: observed.len(),
            predicted: predicted.len(),
        });
    }
    let n = observed.len();
    if n < 2 {
        return Err(EquilibriumError::TooShort { n });
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (&o, &p) in observed.iter().zip(predicted) {
        for v in [o, p] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EquilibriumError::NotLoggable { value: v });
            }
        }
        ys.push(o.ln());
        xs.push(p.ln());
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(EquilibriumError::DegeneratePredictor);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    // R^2 = squared correlation; a constant response is fit perfectly by
    // the constant line, so syy = 0 counts as full explanation.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(FitReport { slope, intercept, r_squared, n_observations: n })
}

/// One pair-day of the prediction panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub day: i64,
    pub pair_label: String,
    pub predicted: f64,
    pub observed: f64,
}

/// Full pipeline over several pairs: trailing stats, predictions, and
/// the pooled fit. Days with no full window or an undefined equilibrium
/// are dropped pairwise.
pub fn predict_and_fit(
    series: &[PairDailySeries],
    window_days: usize,
    fee_rate: f64,
) -> Result<(Vec<PredictionRow>, FitReport), EquilibriumError> {
    let mut rows = Vec::new();
    for s in series {
        let by_day: std::collections::BTreeMap<i64, &DailyPoint> =
            s.points().iter().map(|p| (p.day, p)).collect();
        for stats in expected_stats(s, window_days) {
            let Ok(predicted) = predicted_liquidity(fee_rate, &stats) else {
                continue;
            };
            if predicted <= 0.0 {
                continue;
            }
            let point = by_day[&stats.day];
            rows.push(PredictionRow {
                day: stats.day,
                pair_label: s.pair_label.clone(),
                predicted,
                observed: point.observed_liquidity,
            });
        }
    }
    let observed: Vec<f64> = rows.iter().map(|r| r.observed).collect();
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let fit = model_fit(&observed, &predicted)?;
    Ok((rows, fit))
}
