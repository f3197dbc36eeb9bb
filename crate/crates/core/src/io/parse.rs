//! Readers for the input wire formats.

use super::{parse_pair, FormatError, IngestError};
use crate::clmm::{self, FeeTier, TickGrid};
use crate::costs::{GasPoint, GasPriceSeries, WithdrawFeeSchedule};
use crate::cpmm;
use crate::domain::{HourStamp, Price};
use crate::equilibrium::PairDailySeries;
use crate::lob::LobSnapshot;
use crate::triarb::{Triplet, TripletQuoteSeries};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Read;

/// Wire shape of one concentrated-pool snapshot.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct PoolV3Record {
    pub ts_hour: i64,
    pub pair: String,
    pub fee_tier_bps: u32,
    pub current_price: f64,
    pub ticks: Vec<f64>,
    pub liquidity: Vec<f64>,
}

/// Reads a whole CSV, checks the header verbatim, and returns data rows
/// as (line number, fields).
fn read_csv<R: Read>(
    reader: R,
    file: &str,
    expected_header: &str,
) -> Result<Vec<(u64, Vec<String>)>, FormatError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for record in csv_reader.records() {
        let record = record.map_err(|source| FormatError::Csv { file: file.into(), source })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if !header_seen {
            let found = fields.join(",");
            if found != expected_header {
                return Err(FormatError::Header {
                    file: file.into(),
                    expected: expected_header.into(),
                    found,
                });
            }
            header_seen = true;
            continue;
        }
        rows.push((line, fields));
    }
    if !header_seen {
        return Err(FormatError::Header {
            file: file.into(),
            expected: expected_header.into(),
            found: String::new(),
        });
    }
    Ok(rows)
}

fn bad(file: &str, line: u64, reason: impl Into<String>) -> IngestError {
    IngestError { file: file.into(), line, reason: reason.into() }
}

fn field_i64(fields: &[String], idx: usize, name: &str) -> Result<i64, String> {
    fields[idx]
        .parse::<i64>()
        .map_err(|_| format!("{name} `{}` is not an integer", fields[idx]))
}

fn field_f64(fields: &[String], idx: usize, name: &str) -> Result<f64, String> {
    fields[idx]
        .parse::<f64>()
        .map_err(|_| format!("{name} `{}` is not a number", fields[idx]))
}

fn arity(fields: &[String], n: usize) -> Result<(), String> {
    if fields.len() != n {
        return Err(format!("expected {n} fields, got {}", fields.len()));
    }
    Ok(())
}

/// Constant-product pool snapshots: `ts_hour,pair,x,y,fee_bps`. Fees
/// arrive in bps and are stored as fractions.
pub fn parse_pool_v2_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(Vec<(HourStamp, cpmm::Pool)>, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "ts_hour,pair,x,y,fee_bps")?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut last_stamp: Option<i64> = None;
    let mut seen: HashMap<(i64, String), ()> = HashMap::new();
    for (line, fields) in rows {
        let parsed = (|| -> Result<(i64, cpmm::Pool), String> {
            arity(&fields, 5)?;
            let stamp = field_i64(&fields, 0, "ts_hour")?;
            let pair = parse_pair(&fields[1]).map_err(|e| e.to_string())?;
            let x = field_f64(&fields, 2, "x")?;
            let y = field_f64(&fields, 3, "y")?;
            let fee_bps = field_f64(&fields, 4, "fee_bps")?;
            let pool = cpmm::Pool::new(pair, x, y, fee_bps * 1e-4).map_err(|e| e.to_string())?;
            Ok((stamp, pool))
        })();
        match parsed {
            Ok((stamp, pool)) => {
                if last_stamp.is_some_and(|last| stamp < last) {
                    return Err(FormatError::NonMonotonic { file: file.into(), line });
                }
                last_stamp = Some(stamp);
                if seen.insert((stamp, pool.pair.label()), ()).is_some() {
                    errors.push(bad(
                        file,
                        line,
                        format!("duplicate snapshot for {} at hour {stamp}", pool.pair.label()),
                    ));
                    continue;
                }
                out.push((HourStamp(stamp), pool));
            }
            Err(reason) => errors.push(bad(file, line, reason)),
        }
    }
    Ok((out, errors))
}

/// Concentrated-pool snapshots: a JSON array of records with tick
/// boundaries and one liquidity value per interval.
pub fn parse_pool_v3_json<R: Read>(
    reader: R,
    file: &str,
) -> Result<(Vec<(HourStamp, clmm::Pool)>, Vec<IngestError>), FormatError> {
    let records: Vec<PoolV3Record> = serde_json::from_reader(reader)
        .map_err(|source| FormatError::Json { file: file.into(), source })?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut last_stamp: Option<i64> = None;
    for (ordinal, record) in records.iter().enumerate() {
        let line = ordinal as u64 + 1;
        if last_stamp.is_some_and(|last| record.ts_hour < last) {
            return Err(FormatError::NonMonotonic { file: file.into(), line });
        }
        last_stamp = Some(record.ts_hour);
        let parsed = (|| -> Result<clmm::Pool, String> {
            let pair = parse_pair(&record.pair).map_err(|e| e.to_string())?;
            let tier = FeeTier::new(record.fee_tier_bps).map_err(|e| e.to_string())?;
            if record.liquidity.len() + 1 != record.ticks.len() {
                return Err(format!(
                    "{} ticks need {} liquidity values, got {}",
                    record.ticks.len(),
                    record.ticks.len().saturating_sub(1),
                    record.liquidity.len()
                ));
            }
            let grid = TickGrid::new(record.ticks.clone()).map_err(|e| e.to_string())?;
            let price = Price::new(record.current_price).map_err(|e| e.to_string())?;
            clmm::Pool::new(pair, tier, grid, record.liquidity.clone(), price)
                .map_err(|e| e.to_string())
        })();
        match parsed {
            Ok(pool) => out.push((HourStamp(record.ts_hour), pool)),
            Err(reason) => errors.push(bad(file, line, reason)),
        }
    }
    Ok((out, errors))
}

/// Order-book ladders: `ts_hour,pair,side,price,volume`, one level per
/// row, grouped into snapshots per (stamp, pair). Row order within a
/// snapshot does not matter; levels are sorted out from the touch.
pub fn parse_lob_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(Vec<LobSnapshot>, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "ts_hour,pair,side,price,volume")?;
    let mut errors = Vec::new();
    struct Group {
        first_line: u64,
        stamp: i64,
        pair: String,
        bids: Vec<(f64, f64)>,
        asks: Vec<(f64, f64)>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<(i64, String), usize> = HashMap::new();
    let mut last_stamp: Option<i64> = None;
    for (line, fields) in rows {
        let parsed = (|| -> Result<(i64, String, bool, f64, f64), String> {
            arity(&fields, 5)?;
            let stamp = field_i64(&fields, 0, "ts_hour")?;
            parse_pair(&fields[1]).map_err(|e| e.to_string())?;
            let is_bid = match fields[2].as_str() {
                "bid" => true,
                "ask" => false,
                other => return Err(format!("side must be bid or ask, got `{other}`")),
            };
            let price = field_f64(&fields, 3, "price")?;
            let volume = field_f64(&fields, 4, "volume")?;
            Ok((stamp, fields[1].clone(), is_bid, price, volume))
        })();
        let (stamp, pair, is_bid, price, volume) = match parsed {
            Ok(row) => row,
            Err(reason) => {
                errors.push(bad(file, line, reason));
                continue;
            }
        };
        if last_stamp.is_some_and(|last| stamp < last) {
            return Err(FormatError::NonMonotonic { file: file.into(), line });
        }
        last_stamp = Some(stamp);
        let key = (stamp, pair.clone());
        let at = *index.entry(key).or_insert_with(|| {
            groups.push(Group { first_line: line, stamp, pair, bids: vec![], asks: vec![] });
            groups.len() - 1
        });
        if is_bid {
            groups[at].bids.push((price, volume));
        } else {
            groups[at].asks.push((price, volume));
        }
    }
    let mut out = Vec::new();
    for mut group in groups {
        group.bids.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        group.asks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let snapshot = (|| -> Result<LobSnapshot, String> {
            let pair = parse_pair(&group.pair).map_err(|e| e.to_string())?;
            LobSnapshot::new(pair, HourStamp(group.stamp), group.bids.clone(), group.asks.clone())
                .map_err(|e| e.to_string())
        })();
        match snapshot {
            Ok(s) => out.push(s),
            Err(reason) => errors.push(bad(file, group.first_line, reason)),
        }
    }
    Ok((out, errors))
}

/// Hourly gas conditions: `ts_hour,gas_price,native_usd`, strictly
/// increasing stamps.
pub fn parse_gas_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(GasPriceSeries, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "ts_hour,gas_price,native_usd")?;
    let mut points = Vec::new();
    let mut errors = Vec::new();
    let mut last_stamp: Option<i64> = None;
    for (line, fields) in rows {
        let parsed = (|| -> Result<GasPoint, String> {
            arity(&fields, 3)?;
            let stamp = field_i64(&fields, 0, "ts_hour")?;
            let gas_price = field_f64(&fields, 1, "gas_price")?;
            if !(gas_price.is_finite() && gas_price > 0.0) {
                return Err(format!("gas_price must be positive, got {gas_price}"));
            }
            let native_usd =
                Price::new(field_f64(&fields, 2, "native_usd")?).map_err(|e| e.to_string())?;
            Ok(GasPoint { ts_hour: HourStamp(stamp), gas_price, native_usd })
        })();
        match parsed {
            Ok(point) => {
                if last_stamp.is_some_and(|last| point.ts_hour.0 <= last) {
                    return Err(FormatError::NonMonotonic { file: file.into(), line });
                }
                last_stamp = Some(point.ts_hour.0);
                points.push(point);
            }
            Err(reason) => errors.push(bad(file, line, reason)),
        }
    }
    let series = GasPriceSeries::new(points)
        .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
    Ok((series, errors))
}

/// Withdrawal fee snapshots: `ts_hour,token,fee_tokens`, strictly
/// increasing stamps per token.
pub fn parse_withdraw_fees_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(WithdrawFeeSchedule, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "ts_hour,token,fee_tokens")?;
    let mut raw = Vec::new();
    let mut errors = Vec::new();
    let mut last_by_token: HashMap<String, i64> = HashMap::new();
    for (line, fields) in rows {
        let parsed = (|| -> Result<(i64, String, f64), String> {
            arity(&fields, 3)?;
            let stamp = field_i64(&fields, 0, "ts_hour")?;
            let token = fields[1].clone();
            if token.is_empty() {
                return Err("token symbol is empty".into());
            }
            let fee = field_f64(&fields, 2, "fee_tokens")?;
            if !(fee.is_finite() && fee >= 0.0) {
                return Err(format!("fee_tokens must be nonnegative, got {fee}"));
            }
            Ok((stamp, token, fee))
        })();
        match parsed {
            Ok((stamp, token, fee)) => {
                if last_by_token.get(&token).is_some_and(|last| stamp <= *last) {
                    return Err(FormatError::NonMonotonic { file: file.into(), line });
                }
                last_by_token.insert(token.clone(), stamp);
                raw.push((HourStamp(stamp), token, fee));
            }
            Err(reason) => errors.push(bad(file, line, reason)),
        }
    }
    let schedule = WithdrawFeeSchedule::new(raw)
        .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
    Ok((schedule, errors))
}

/// Cycle quotes: `ts_hour,exchange,leg,price`, legs labeled as pairs.
/// Each exchange must quote exactly three legs closing a cycle; hours
/// missing a leg are dropped without complaint, mirroring the missing-
/// data policy downstream. Series come back in exchange appearance
/// order.
pub fn parse_quotes_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(Vec<TripletQuoteSeries>, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "ts_hour,exchange,leg,price")?;
    let mut errors = Vec::new();
    struct Acc {
        legs: Vec<String>,
        // stamp -> leg index -> price, insertion-ordered by stamp.
        points: Vec<(i64, [Option<f64>; 3])>,
        last_stamp: Option<i64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut accs: HashMap<String, Acc> = HashMap::new();
    for (line, fields) in rows {
        let parsed = (|| -> Result<(i64, String, String, f64), String> {
            arity(&fields, 4)?;
            let stamp = field_i64(&fields, 0, "ts_hour")?;
            let exchange = fields[1].clone();
            if exchange.is_empty() {
                return Err("exchange is empty".into());
            }
            parse_pair(&fields[2]).map_err(|e| e.to_string())?;
            let price = field_f64(&fields, 3, "price")?;
            if !(price.is_finite() && price > 0.0) {
                return Err(format!("price must be positive, got {price}"));
            }
            Ok((stamp, exchange, fields[2].clone(), price))
        })();
        let (stamp, exchange, leg, price) = match parsed {
            Ok(row) => row,
            Err(reason) => {
                errors.push(bad(file, line, reason));
                continue;
            }
        };
        let acc = accs.entry(exchange.clone()).or_insert_with(|| {
            order.push(exchange.clone());
            Acc { legs: Vec::new(), points: Vec::new(), last_stamp: None }
        });
        if acc.last_stamp.is_some_and(|last| stamp < last) {
            return Err(FormatError::NonMonotonic { file: file.into(), line });
        }
        acc.last_stamp = Some(stamp);
        let leg_idx = match acc.legs.iter().position(|l| *l == leg) {
            Some(idx) => idx,
            None if acc.legs.len() < 3 => {
                acc.legs.push(leg.clone());
                acc.legs.len() - 1
            }
            None => {
                errors.push(bad(
                    file,
                    line,
                    format!("exchange {exchange} already quotes three legs; `{leg}` is a fourth"),
                ));
                continue;
            }
        };
        if acc.points.last().map(|(s, _)| *s) != Some(stamp) {
            acc.points.push((stamp, [None; 3]));
        }
        let slot = &mut acc.points.last_mut().expect("just pushed").1[leg_idx];
        if slot.is_some() {
            errors.push(bad(
                file,
                line,
                format!("duplicate quote for {leg} on {exchange} at hour {stamp}"),
            ));
            continue;
        }
        *slot = Some(price);
    }
    let mut out = Vec::new();
    for exchange in order {
        let acc = &accs[&exchange];
        if acc.legs.len() != 3 {
            return Err(FormatError::Invalid {
                file: file.into(),
                reason: format!(
                    "exchange {exchange} quotes {} legs, a cycle needs 3",
                    acc.legs.len()
                ),
            });
        }
        let legs: Vec<_> = acc
            .legs
            .iter()
            .map(|l| parse_pair(l))
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
        let triplet = Triplet::new([legs[0].clone(), legs[1].clone(), legs[2].clone()])
            .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
        let points: Vec<(HourStamp, [f64; 3])> = acc
            .points
            .iter()
            .filter_map(|(stamp, prices)| {
                Some((HourStamp(*stamp), [prices[0]?, prices[1]?, prices[2]?]))
            })
            .collect();
        let series = TripletQuoteSeries::new(triplet, exchange, points)
            .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
        out.push(series);
    }
    Ok((out, errors))
}

/// Daily pair panel: `day,pair,volume_x,price_open,price_close,liquidity_x`.
/// Series come back per pair in appearance order, with each day's loss
/// derived from its open-to-close price change.
pub fn parse_eq_panel_csv<R: Read>(
    reader: R,
    file: &str,
) -> Result<(Vec<PairDailySeries>, Vec<IngestError>), FormatError> {
    let rows = read_csv(reader, file, "day,pair,volume_x,price_open,price_close,liquidity_x")?;
    let mut errors = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut by_pair: HashMap<String, Vec<(i64, f64, f64, f64, f64)>> = HashMap::new();
    for (line, fields) in rows {
        let parsed = (|| -> Result<(i64, String, f64, f64, f64, f64), String> {
            arity(&fields, 6)?;
            let day = field_i64(&fields, 0, "day")?;
            parse_pair(&fields[1]).map_err(|e| e.to_string())?;
            let volume = field_f64(&fields, 2, "volume_x")?;
            if !(volume.is_finite() && volume >= 0.0) {
                return Err(format!("volume_x must be nonnegative, got {volume}"));
            }
            let open = field_f64(&fields, 3, "price_open")?;
            let close = field_f64(&fields, 4, "price_close")?;
            for (name, v) in [("price_open", open), ("price_close", close)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("{name} must be positive, got {v}"));
                }
            }
            let liquidity = field_f64(&fields, 5, "liquidity_x")?;
            if !(liquidity.is_finite() && liquidity > 0.0) {
                return Err(format!("liquidity_x must be positive, got {liquidity}"));
            }
            Ok((day, fields[1].clone(), volume, open, close, liquidity))
        })();
        match parsed {
            Ok((day, pair, volume, open, close, liquidity)) => {
                let rows = by_pair.entry(pair.clone()).or_insert_with(|| {
                    order.push(pair);
                    Vec::new()
                });
                if rows.last().is_some_and(|(last, ..)| day <= *last) {
                    return Err(FormatError::NonMonotonic { file: file.into(), line });
                }
                rows.push((day, volume, open, close, liquidity));
            }
            Err(reason) => errors.push(bad(file, line, reason)),
        }
    }
    let mut out = Vec::new();
    for pair in order {
        let series = PairDailySeries::from_prices(&pair, &by_pair[&pair])
            .map_err(|e| FormatError::Invalid { file: file.into(), reason: e.to_string() })?;
        out.push(series);
    }
    Ok((out, errors))
}
