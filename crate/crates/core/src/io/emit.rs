//! Writers for the wire formats. Input formats round-trip through
//! their parsers; report formats print fixed six-decimal columns so
//! reruns over the same inputs are byte-identical.

use super::parse::PoolV3Record;
use super::FormatError;
use crate::clmm;
use crate::costs::{GasPriceSeries, PanelRow, WithdrawFeeSchedule};
use crate::cpmm;
use crate::domain::HourStamp;
use crate::equilibrium::PredictionRow;
use crate::lob::LobSnapshot;
use crate::triarb::{CombinedPoint, DeviationSeries, TripletQuoteSeries};
use std::io::Write;

fn io_err(file: &str, source: std::io::Error) -> FormatError {
    FormatError::Read { file: file.into(), source }
}

/// Constant-product snapshots, inverse of `parse_pool_v2_csv`.
pub fn emit_pools_v2_csv<W: Write>(
    mut w: W,
    file: &str,
    pools: &[(HourStamp, cpmm::Pool)],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,pair,x,y,fee_bps")?;
        for (stamp, pool) in pools {
            writeln!(
                w,
                "{},{},{},{},{}",
                stamp.0,
                pool.pair.label(),
                pool.x,
                pool.y,
                pool.fee * 1e4
            )?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Concentrated snapshots, inverse of `parse_pool_v3_json`.
pub fn emit_pool_v3_json<W: Write>(
    mut w: W,
    file: &str,
    pools: &[(HourStamp, clmm::Pool)],
) -> Result<(), FormatError> {
    let records: Vec<PoolV3Record> = pools
        .iter()
        .map(|(stamp, pool)| PoolV3Record {
            ts_hour: stamp.0,
            pair: pool.pair.label(),
            fee_tier_bps: pool.fee_tier.bps(),
            current_price: pool.current_price.value(),
            ticks: pool.grid.boundaries().to_vec(),
            liquidity: pool.liquidity.clone(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &records)
        .map_err(|source| FormatError::Json { file: file.into(), source })?;
    writeln!(w).map_err(|e| io_err(file, e))
}

/// Order-book ladders, inverse of `parse_lob_csv`. Bids print first,
/// outward from the touch.
pub fn emit_lob_csv<W: Write>(
    mut w: W,
    file: &str,
    books: &[LobSnapshot],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,pair,side,price,volume")?;
        for book in books {
            for (price, volume) in &book.bids {
                writeln!(w, "{},{},bid,{},{}", book.ts_hour.0, book.pair.label(), price, volume)?;
            }
            for (price, volume) in &book.asks {
                writeln!(w, "{},{},ask,{},{}", book.ts_hour.0, book.pair.label(), price, volume)?;
            }
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Gas conditions, inverse of `parse_gas_csv`.
pub fn emit_gas_csv<W: Write>(
    mut w: W,
    file: &str,
    series: &GasPriceSeries,
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,gas_price,native_usd")?;
        for point in series.points() {
            writeln!(w, "{},{},{}", point.ts_hour.0, point.gas_price, point.native_usd.value())?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Withdrawal fees, inverse of `parse_withdraw_fees_csv`. Rows come
/// out token-major in canonical order, matching how fee pages are
/// scraped per asset.
pub fn emit_withdraw_fees_csv<W: Write>(
    mut w: W,
    file: &str,
    schedule: &WithdrawFeeSchedule,
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,token,fee_tokens")?;
        for (stamp, token, fee) in schedule.snapshots() {
            writeln!(w, "{},{},{}", stamp.0, token, fee)?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Cycle quotes, inverse of `parse_quotes_csv`. Exchange-major, then
/// hour, then leg order.
pub fn emit_quotes_csv<W: Write>(
    mut w: W,
    file: &str,
    series: &[TripletQuoteSeries],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,exchange,leg,price")?;
        for s in series {
            for (stamp, prices) in s.points() {
                for (leg, price) in s.triplet.legs.iter().zip(prices) {
                    writeln!(w, "{},{},{},{}", stamp.0, s.exchange, leg.label(), price)?;
                }
            }
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Daily pair panel, inverse of `parse_eq_panel_csv`. Takes raw rows of
/// (day, pair, volume, open, close, liquidity) since the parsed form
/// keeps only the derived loss, not the prices.
pub fn emit_eq_panel_csv<W: Write>(
    mut w: W,
    file: &str,
    rows: &[(i64, String, f64, f64, f64, f64)],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "day,pair,volume_x,price_open,price_close,liquidity_x")?;
        for (day, pair, volume, open, close, liquidity) in rows {
            writeln!(w, "{day},{pair},{volume},{open},{close},{liquidity}")?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Cost panel report: one row per priced (hour, venue, pair, size)
/// cell, all bps columns at six decimals.
pub fn emit_panel_csv<W: Write>(
    mut w: W,
    file: &str,
    rows: &[PanelRow],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,venue,pair,trade_usd,spread_bps,fee_bps,settlement_bps,total_bps")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                row.ts_hour.0,
                row.cost.venue,
                row.pair,
                row.cost.trade_usd,
                row.cost.spread.value(),
                row.cost.exchange_fee.value(),
                row.cost.settlement.value(),
                row.cost.total.value()
            )?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Deviation report: per-exchange thetas, then the combined series,
/// then the rolling decile band, all in bps at six decimals.
pub fn emit_deviation_csv<W: Write>(
    mut w: W,
    file: &str,
    deviations: &[DeviationSeries],
    combined: &[CombinedPoint],
    bands: &[(HourStamp, f64)],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "ts_hour,kind,label,value")?;
        for series in deviations {
            for (stamp, theta) in &series.points {
                writeln!(w, "{},theta,{},{:.6}", stamp.0, series.exchange, theta * 1e4)?;
            }
        }
        for point in combined {
            writeln!(w, "{},combined,{},{:.6}", point.ts_hour.0, point.source, point.theta * 1e4)?;
        }
        for (stamp, band) in bands {
            writeln!(w, "{},band,top-decile,{:.6}", stamp.0, band * 1e4)?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}

/// Liquidity fit report: predicted against observed depth per pair-day.
pub fn emit_eq_csv<W: Write>(
    mut w: W,
    file: &str,
    rows: &[PredictionRow],
) -> Result<(), FormatError> {
    (|| -> std::io::Result<()> {
        writeln!(w, "day,pair,predicted_x,observed_x")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{:.6},{:.6}",
                row.day, row.pair_label, row.predicted, row.observed
            )?;
        }
        Ok(())
    })()
    .map_err(|e| io_err(file, e))
}
