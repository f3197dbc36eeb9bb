//! Triangular no-arbitrage deviations over closed currency cycles.
//!
//! For a cycle X -> Y -> Z -> X quoted at P_XY, P_YZ, P_ZX, the
//! law-of-one-price error is theta = P_XY * P_YZ * P_ZX - 1: the net
//! profit per unit notional of trading the full cycle at those quotes
//! with no frictions. Per-exchange hourly series are combined across
//! venues by keeping the deviation of smallest magnitude, a conservative
//! estimate of the executable mispricing, and summarized by a rolling
//! top-decile band of |theta|.

use crate::cpmm;
use crate::domain::{DomainError, HourStamp, Pair, Price};
use crate::lob::LobSnapshot;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriarbError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("cycle does not close: {detail}")]
    CycleMismatch { detail: String },
    #[error("no series to combine")]
    EmptyCombine,
}

/// An ordered triple of pairs forming a closed cycle: each leg's quote
/// token is the next leg's base token, wrapping around.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub legs: [Pair; 3],
}

impl Triplet {
    pub fn new(legs: [Pair; 3]) -> Result<Self, TriarbError> {
        for k in 0..3 {
            let here = &legs[k].quote.symbol;
            let next = &legs[(k + 1) % 3].base.symbol;
            if here != next {
                return Err(TriarbError::CycleMismatch {
                    detail: format!(
                        "leg {} quotes in {here} but leg {} starts from {next}",
                        k + 1,
                        (k + 1) % 3 + 1
                    ),
                });
            }
        }
        Ok(Triplet { legs })
    }

    /// The same cycle entered one leg later.
    pub fn rotated(&self) -> Triplet {
        let [a, b, c] = self.legs.clone();
        Triplet { legs: [b, c, a] }
    }

    /// The cycle walked backward, every leg flipped.
    pub fn reversed(&self) -> Triplet {
        let [a, b, c] = self.legs.clone();
        let flip = |p: Pair| Pair { base: p.quote, quote: p.base };
        Triplet { legs: [flip(c), flip(b), flip(a)] }
    }

    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}",
            self.legs[0].base.symbol, self.legs[1].base.symbol, self.legs[2].base.symbol
        )
    }
}

/// Deviation from the law of one price around one cycle.
pub fn theta(p_xy: Price, p_yz: Price, p_zx: Price) -> f64 {
    p_xy.value() * p_yz.value() * p_zx.value() - 1.0
}

/// How a series' quotes were measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceSource {
    /// Order-book touch midpoints.
    LobMid,
    /// Constant-product reserve ratios.
    V2ReserveRatio,
    /// Marginal prices read off concentrated pools.
    V3Quoted,
}

impl PriceSource {
    pub fn label(self) -> &'static str {
        match self {
            PriceSource::LobMid => "lob_mid",
            PriceSource::V2ReserveRatio => "v2_reserve_ratio",
            PriceSource::V3Quoted => "v3_quoted",
        }
    }
}

/// Hourly quotes for one cycle on one exchange. Stamps strictly
/// increase; prices are stored in leg order.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletQuoteSeries {
    pub triplet: Triplet,
    pub exchange: String,
    points: Vec<(HourStamp, [f64; 3])>,
}

impl TripletQuoteSeries {
    pub fn new(
        triplet: Triplet,
        exchange: impl Into<String>,
        points: Vec<(HourStamp, [f64; 3])>,
    ) -> Result<Self, TriarbError> {
        for w in points.windows(2) {
            if w[1].0 .0 <= w[0].0 .0 {
                return Err(DomainError::Invalid(format!(
                    "quote stamps must be strictly increasing, got {} then {}",
                    w[0].0 .0, w[1].0 .0
                ))
                .into());
            }
        }
        for (stamp, prices) in &points {
            for p in prices {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(DomainError::Invalid(format!(
                        "non-positive quote {p} at hour {}",
                        stamp.0
                    ))
                    .into());
                }
            }
        }
        Ok(TripletQuoteSeries { triplet, exchange: exchange.into(), points })
    }

    /// Builds the series from per-leg book snapshots, taking touch
    /// midpoints. Hours missing any leg are dropped.
    pub fn from_lob(
        triplet: Triplet,
        exchange: impl Into<String>,
        legs: [&[LobSnapshot]; 3],
    ) -> Result<Self, TriarbError> {
        let per_leg = index_leg(&triplet, legs, |book: &LobSnapshot| {
            (book.ts_hour, book.pair.clone(), book.mid_price())
        })?;
        TripletQuoteSeries::new(triplet, exchange, intersect(per_leg))
    }

    /// Builds the series from per-leg constant-product snapshots, taking
    /// reserve-ratio quotes. Hours missing any leg are dropped.
    pub fn from_v2_pools(
        triplet: Triplet,
        exchange: impl Into<String>,
        legs: [&[(HourStamp, cpmm::Pool)]; 3],
    ) -> Result<Self, TriarbError> {
        let per_leg = index_leg(&triplet, legs, |(stamp, pool): &(HourStamp, cpmm::Pool)| {
            (*stamp, pool.pair.clone(), pool.quoted_price().value())
        })?;
        TripletQuoteSeries::new(triplet, exchange, intersect(per_leg))
    }

    pub fn points(&self) -> &[(HourStamp, [f64; 3])] {
        &self.points
    }
}

fn index_leg<T>(
    triplet: &Triplet,
    legs: [&[T]; 3],
    read: impl Fn(&T) -> (HourStamp, Pair, f64),
) -> Result<[BTreeMap<i64, f64>; 3], TriarbError> {
    let mut out: [BTreeMap<i64, f64>; 3] = Default::default();
    for (k, rows) in legs.iter().enumerate() {
        for row in rows.iter() {
            let (stamp, pair, price) = read(row);
            if pair != triplet.legs[k] {
                return Err(TriarbError::CycleMismatch {
                    detail: format!(
                        "leg {} expects {}, got {}",
                        k + 1,
                        triplet.legs[k].label(),
                        pair.label()
                    ),
                });
            }
            out[k].insert(stamp.0, price);
        }
    }
    Ok(out)
}

fn intersect(per_leg: [BTreeMap<i64, f64>; 3]) -> Vec<(HourStamp, [f64; 3])> {
    per_leg[0]
        .iter()
        .filter_map(|(stamp, p0)| {
            let p1 = per_leg[1].get(stamp)?;
            let p2 = per_leg[2].get(stamp)?;
            Some((HourStamp(*stamp), [*p0, *p1, *p2]))
        })
        .collect()
}

/// Hourly deviations for one exchange and one quote definition.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSeries {
    pub exchange: String,
    pub source: PriceSource,
    pub points: Vec<(HourStamp, f64)>,
}

/// Pointwise theta over a quote series. The quote definition tag is
/// carried through for provenance in later aggregation.
pub fn deviation_series(src: &TripletQuoteSeries, source: PriceSource) -> DeviationSeries {
    let points = src
        .points
        .iter()
        .map(|(stamp, [p_xy, p_yz, p_zx])| (*stamp, p_xy * p_yz * p_zx - 1.0))
        .collect();
    DeviationSeries { exchange: src.exchange.clone(), source, points }
}

/// One combined observation and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPoint {
    pub ts_hour: HourStamp,
    pub theta: f64,
    /// Exchange whose deviation won the min-|theta| comparison.
    pub source: String,
}

/// Per stamp over the union of stamps, keeps the deviation of smallest
/// magnitude among the series quoting that hour. Exact magnitude ties
/// keep the first-listed series.
pub fn min_abs_combine(series: &[DeviationSeries]) -> Result<Vec<CombinedPoint>, TriarbError> {
    if series.is_empty() {
        return Err(TriarbError::EmptyCombine);
    }
    let mut best: BTreeMap<i64, (f64, &str)> = BTreeMap::new();
    for s in series {
        for (stamp, theta) in &s.points {
            match best.get(&stamp.0) {
                Some((held, _)) if theta.abs() >= held.abs() => {}
                _ => {
                    best.insert(stamp.0, (*theta, s.exchange.as_str()));
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(stamp, (theta, source))| CombinedPoint {
            ts_hour: HourStamp(stamp),
            theta,
            source: source.to_string(),
        })
        .collect())
}

/// Mean |theta| over a deviation series, the scalar the log-scale
/// summaries aggregate.
pub fn mean_abs(points: &[(HourStamp, f64)]) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    Some(points.iter().map(|(_, t)| t.abs()).sum::<f64>() / points.len() as f64)
}

/// Trailing top-decile band of |theta|: at each stamp t, the nearest-rank
/// 90th percentile of |theta| over observations in (t - window, t].
/// Stamps whose window holds fewer than 10 observations produce no band
/// point.
pub fn rolling_top_decile(
    points: &[(HourStamp, f64)],
    window_hours: u32,
) -> Vec<(HourStamp, f64)> {
    let window = i64::from(window_hours.max(1));
    let mut out = Vec::new();
    let mut lo = 0usize;
    for (i, (stamp, _)) in points.iter().enumerate() {
        while points[lo].0 .0 <= stamp.0 - window {
            lo += 1;
        }
        let in_window = &points[lo..=i];
        if in_window.len() < 10 {
            continue;
        }
        let mut magnitudes: Vec<f64> = in_window.iter().map(|(_, t)| t.abs()).collect();
        magnitudes.sort_by(|a, b| a.partial_cmp(b).expect("finite theta"));
        // Nearest-rank percentile: the ceil(0.9 n)-th smallest value.
        let rank = (0.9 * magnitudes.len() as f64).ceil() as usize;
        out.push((*stamp, magnitudes[rank - 1]));
    }
    out
}
