//! Total transaction-cost assembly for both venue families.
//!
//! A trade's all-in cost in basis points of notional decomposes into
//! three parts: the size-dependent spread, the venue's exchange fee, and
//! a settlement component. For on-chain pools settlement is the swap gas
//! bill; for order-book exchanges it is the deposit gas plus the
//! exchange-charged withdrawal fee for moving funds on and off the
//! venue. The panel builder evaluates the decomposition per hour, pair,
//! trade size, and venue, and appends per-category minimum rows.

use crate::clmm::{self, PoolRef};
use crate::cpmm;
use crate::domain::{usd_to_token_amount, Bps, DomainError, HourStamp, Pair, Price, TokenKind};
use crate::io::Config;
use crate::lob::{self, LobSnapshot};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no gas data at or before hour {stamp}")]
    GasCoverage { stamp: i64 },
    #[error("no withdrawal fee for {token} at or before hour {stamp}")]
    MissingWithdrawFee { token: String, stamp: i64 },
    #[error("no dollar value reachable for {symbol}")]
    Unpriceable { symbol: String },
}

/// Gas units charged per transaction kind. Defaults are the sample
/// medians for the two pool generations and the standard transfer
/// stipends for deposits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasSchedule {
    pub swap_v2: u64,
    pub swap_v3: u64,
    pub transfer_native: u64,
    pub transfer_erc20: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            swap_v2: 118_340,
            swap_v3: 130_889,
            transfer_native: 21_000,
            transfer_erc20: 65_000,
        }
    }
}

impl GasSchedule {
    /// Units a deposit of the given token burns: a plain transfer for the
    /// native token, a contract call for everything else.
    pub fn deposit_units(&self, kind: TokenKind) -> u64 {
        match kind {
            TokenKind::Native => self.transfer_native,
            TokenKind::Erc20 => self.transfer_erc20,
        }
    }
}

/// One observed hour of gas conditions: price per unit in native
/// currency, and the native token's dollar price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasPoint {
    pub ts_hour: HourStamp,
    pub gas_price: f64,
    pub native_usd: Price,
}

/// Hourly gas observations with strictly increasing stamps. Lookups
/// resolve to the nearest hour at or before the stamp; sub-hour
/// interpolation would add false precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GasPriceSeries {
    points: Vec<GasPoint>,
}

impl GasPriceSeries {
    pub fn new(points: Vec<GasPoint>) -> Result<Self, DomainError> {
        for w in points.windows(2) {
            if w[1].ts_hour.0 <= w[0].ts_hour.0 {
                return Err(DomainError::Invalid(format!(
                    "gas stamps must be strictly increasing, got {} then {}",
                    w[0].ts_hour.0, w[1].ts_hour.0
                )));
            }
        }
        for p in &points {
            if !(p.gas_price.is_finite() && p.gas_price > 0.0) {
                return Err(DomainError::NotPositive { what: "gas price", value: p.gas_price });
            }
        }
        Ok(GasPriceSeries { points })
    }

    pub fn points(&self) -> &[GasPoint] {
        &self.points
    }

    pub fn at_or_before(&self, stamp: HourStamp) -> Result<&GasPoint, CostError> {
        let idx = self.points.partition_point(|p| p.ts_hour.0 <= stamp.0);
        if idx == 0 {
            return Err(CostError::GasCoverage { stamp: stamp.0 });
        }
        Ok(&self.points[idx - 1])
    }
}

/// Dollar cost of burning `units` of gas at the conditions prevailing at
/// `stamp`: units x gas price x native dollar price.
pub fn gas_cost_usd(
    units: u64,
    stamp: HourStamp,
    series: &GasPriceSeries,
) -> Result<f64, CostError> {
    let point = series.at_or_before(stamp)?;
    Ok(units as f64 * point.gas_price * point.native_usd.value())
}

/// Stepwise-constant withdrawal fees per token, in token units. Fee
/// changes are infrequent; a lookup forward-fills the latest snapshot at
/// or before the stamp.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WithdrawFeeSchedule {
    by_token: BTreeMap<String, Vec<(HourStamp, f64)>>,
}

impl WithdrawFeeSchedule {
    pub fn new(rows: Vec<(HourStamp, String, f64)>) -> Result<Self, DomainError> {
        let mut by_token: BTreeMap<String, Vec<(HourStamp, f64)>> = BTreeMap::new();
        for (stamp, token, fee) in rows {
            if !(fee.is_finite() && fee >= 0.0) {
                return Err(DomainError::Invalid(format!(
                    "withdrawal fee must be nonnegative, got {fee} for {token}"
                )));
            }
            by_token.entry(token).or_default().push((stamp, fee));
        }
        for rows in by_token.values_mut() {
            rows.sort_by_key(|(stamp, _)| stamp.0);
        }
        Ok(WithdrawFeeSchedule { by_token })
    }

    /// All snapshots in canonical (token, stamp) order.
    pub fn snapshots(&self) -> Vec<(HourStamp, String, f64)> {
        self.by_token
            .iter()
            .flat_map(|(token, rows)| {
                rows.iter().map(move |(stamp, fee)| (*stamp, token.clone(), *fee))
            })
            .collect()
    }

    /// Fee in token units for withdrawing `token` at `stamp`.
    pub fn fee_tokens(&self, token: &str, stamp: HourStamp) -> Result<f64, CostError> {
        let rows = self
            .by_token
            .get(token)
            .ok_or_else(|| CostError::MissingWithdrawFee { token: token.into(), stamp: stamp.0 })?;
        let idx = rows.partition_point(|(s, _)| s.0 <= stamp.0);
        if idx == 0 {
            return Err(CostError::MissingWithdrawFee { token: token.into(), stamp: stamp.0 });
        }
        Ok(rows[idx - 1].1)
    }
}

/// One venue's cost decomposition for one trade.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub venue: String,
    pub trade_usd: f64,
    pub spread: Bps,
    pub exchange_fee: Bps,
    pub settlement: Bps,
    /// Always (spread + exchange_fee) + settlement, in that association,
    /// so subtracting components back out is exact.
    pub total: Bps,
}

impl CostBreakdown {
    /// Single assembly path for the total; every constructor funnels
    /// through here so the additivity invariant is bitwise.
    pub fn assemble(
        venue: impl Into<String>,
        trade_usd: f64,
        spread: Bps,
        exchange_fee: Bps,
        settlement: Bps,
    ) -> CostBreakdown {
        let total = (spread.value() + exchange_fee.value()) + settlement.value();
        CostBreakdown {
            venue: venue.into(),
            trade_usd,
            spread,
            exchange_fee,
            settlement,
            total: Bps::new(total).expect("sum of finite components"),
        }
    }

    pub fn with_venue(mut self, venue: impl Into<String>) -> CostBreakdown {
        self.venue = venue.into();
        self
    }
}

fn settlement_bps(usd: f64, trade_usd: f64) -> Bps {
    Bps::new(usd / trade_usd * 1e4).expect("finite settlement")
}

/// On-chain pool cost: spread + fee tier + swap gas as a fraction of the
/// notional.
pub fn tc_dex(
    spread: Bps,
    fee_tier: Bps,
    swap_gas_usd: f64,
    trade_usd: f64,
) -> Result<CostBreakdown, CostError> {
    if !(trade_usd.is_finite() && trade_usd > 0.0) {
        return Err(DomainError::NotPositive { what: "trade notional", value: trade_usd }.into());
    }
    if !(swap_gas_usd.is_finite() && swap_gas_usd >= 0.0) {
        return Err(DomainError::NotPositive { what: "swap gas", value: swap_gas_usd }.into());
    }
    Ok(CostBreakdown::assemble(
        "dex",
        trade_usd,
        spread,
        fee_tier,
        settlement_bps(swap_gas_usd, trade_usd),
    ))
}

/// Order-book venue cost: spread + taker fee + the deposit/withdrawal
/// round trip as a fraction of the notional.
pub fn tc_cex(
    spread: Bps,
    taker_fee: Bps,
    deposit_gas_usd: f64,
    withdraw_fee_usd: f64,
    trade_usd: f64,
) -> Result<CostBreakdown, CostError> {
    if !(trade_usd.is_finite() && trade_usd > 0.0) {
        return Err(DomainError::NotPositive { what: "trade notional", value: trade_usd }.into());
    }
    if !(deposit_gas_usd.is_finite() && deposit_gas_usd >= 0.0) {
        return Err(DomainError::NotPositive { what: "deposit gas", value: deposit_gas_usd }.into());
    }
    if !(withdraw_fee_usd.is_finite() && withdraw_fee_usd >= 0.0) {
        return Err(
            DomainError::NotPositive { what: "withdrawal fee", value: withdraw_fee_usd }.into()
        );
    }
    Ok(CostBreakdown::assemble(
        "cex",
        trade_usd,
        spread,
        taker_fee,
        settlement_bps(deposit_gas_usd + withdraw_fee_usd, trade_usd),
    ))
}

/// Dollar values per token symbol at one hour, derived by propagating
/// known anchors (configured stables at 1, the native token from the gas
/// series) across the observed pair graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UsdOracle {
    values: BTreeMap<String, f64>,
}

impl UsdOracle {
    /// Fixpoint propagation over `edges` of (pair, price in quote per
    /// base). Edges are walked in sorted pair-label order and a symbol's
    /// first derived value sticks, so the result does not depend on
    /// input ordering.
    pub fn build(seeds: &[(String, f64)], edges: &[(Pair, f64)]) -> UsdOracle {
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        for (symbol, usd) in seeds {
            if usd.is_finite() && *usd > 0.0 {
                values.entry(symbol.clone()).or_insert(*usd);
            }
        }
        let mut sorted: Vec<&(Pair, f64)> = edges.iter().collect();
        sorted.sort_by_key(|(pair, _)| pair.label());
        loop {
            let mut changed = false;
            for (pair, price) in &sorted {
                if !(price.is_finite() && *price > 0.0) {
                    continue;
                }
                let base = pair.base.symbol.clone();
                let quote = pair.quote.symbol.clone();
                match (values.get(&base).copied(), values.get(&quote).copied()) {
                    (None, Some(q)) => {
                        values.insert(base, price * q);
                        changed = true;
                    }
                    (Some(b), None) => {
                        values.insert(quote, b / price);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return UsdOracle { values };
            }
        }
    }

    pub fn usd(&self, symbol: &str) -> Result<Price, CostError> {
        let value = self
            .values
            .get(symbol)
            .copied()
            .ok_or_else(|| CostError::Unpriceable { symbol: symbol.into() })?;
        Ok(Price::new(value).expect("oracle stores positive values"))
    }
}

/// Everything the panel builder reads, all immutable.
#[derive(Debug, Clone, Copy)]
pub struct PanelInputs<'a> {
    pub pools_v2: &'a [(HourStamp, cpmm::Pool)],
    pub pools_v3: &'a [(HourStamp, clmm::Pool)],
    /// (venue name, snapshots) per order-book exchange.
    pub books: &'a [(String, Vec<LobSnapshot>)],
    pub gas: &'a GasPriceSeries,
    pub withdraw_fees: &'a WithdrawFeeSchedule,
}

/// One panel cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub ts_hour: HourStamp,
    pub pair: String,
    pub cost: CostBreakdown,
}

/// Builds the hourly cost panel over every (hour, pair, size, venue)
/// cell with data. Venues missing data at an hour (no snapshot, not
/// enough depth or liquidity for the size, no fee quote, no dollar
/// value) are omitted, never zero-filled. When at least two venues of a
/// category priced a cell, a `dex-best` / `cex-best` row carries the
/// category minimum by total cost (ties keep the earlier venue in
/// listing order: v2 before v3, then book venues sorted by name).
/// With `include_dw` off, order-book settlement is dropped, modeling a
/// trader who amortizes transfers across many trades; pool gas stays,
/// since a swap cannot avoid it.
pub fn tc_panel(
    inputs: &PanelInputs,
    sizes: &[f64],
    pairs: &[Pair],
    config: &Config,
    include_dw: bool,
) -> Vec<PanelRow> {
    let mut hours: BTreeSet<i64> = BTreeSet::new();
    hours.extend(inputs.pools_v2.iter().map(|(h, _)| h.0));
    hours.extend(inputs.pools_v3.iter().map(|(h, _)| h.0));
    for (_, snapshots) in inputs.books {
        hours.extend(snapshots.iter().map(|b| b.ts_hour.0));
    }
    let mut venues: Vec<&(String, Vec<LobSnapshot>)> = inputs.books.iter().collect();
    venues.sort_by(|a, b| a.0.cmp(&b.0));

    let mut rows = Vec::new();
    for hour in hours {
        let stamp = HourStamp(hour);
        let oracle = hour_oracle(inputs, stamp, config);
        for pair in pairs {
            let (Ok(base_usd), Ok(quote_usd)) =
                (oracle.usd(&pair.base.symbol), oracle.usd(&pair.quote.symbol))
            else {
                continue;
            };
            for &size in sizes {
                let mut dex: Vec<CostBreakdown> = Vec::new();
                if let Some(cost) =
                    v2_cell(inputs, stamp, pair, size, base_usd, quote_usd, config)
                {
                    dex.push(cost);
                }
                if let Some(cost) =
                    v3_cell(inputs, stamp, pair, size, base_usd, quote_usd, config)
                {
                    dex.push(cost);
                }
                let mut cex: Vec<CostBreakdown> = Vec::new();
                for (venue, snapshots) in &venues {
                    let Some(book) =
                        snapshots.iter().find(|b| b.ts_hour == stamp && &b.pair == pair)
                    else {
                        continue;
                    };
                    if let Some(cost) = cex_cell(
                        inputs, stamp, pair, size, base_usd, quote_usd, config, venue, book,
                        include_dw,
                    ) {
                        cex.push(cost);
                    }
                }
                push_category(&mut rows, stamp, pair, dex, "dex-best");
                push_category(&mut rows, stamp, pair, cex, "cex-best");
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.ts_hour.0, &a.pair, a.cost.trade_usd, &a.cost.venue)
            .partial_cmp(&(b.ts_hour.0, &b.pair, b.cost.trade_usd, &b.cost.venue))
            .expect("finite sort keys")
    });
    rows
}

fn push_category(
    rows: &mut Vec<PanelRow>,
    stamp: HourStamp,
    pair: &Pair,
    cells: Vec<CostBreakdown>,
    best_name: &str,
) {
    let best = (cells.len() >= 2).then(|| {
        cells
            .iter()
            .skip(1)
            .fold(cells[0].clone(), |best, c| {
                if c.total.value() < best.total.value() { c.clone() } else { best }
            })
            .with_venue(best_name)
    });
    for cost in cells {
        rows.push(PanelRow { ts_hour: stamp, pair: pair.label(), cost });
    }
    if let Some(cost) = best {
        rows.push(PanelRow { ts_hour: stamp, pair: pair.label(), cost });
    }
}

fn hour_oracle(inputs: &PanelInputs, stamp: HourStamp, config: &Config) -> UsdOracle {
    let mut seeds: Vec<(String, f64)> =
        config.stable_usd_symbols.iter().map(|s| (s.clone(), 1.0)).collect();
    if let Ok(point) = inputs.gas.at_or_before(stamp) {
        seeds.push((config.native_symbol.clone(), point.native_usd.value()));
    }
    let mut edges: Vec<(Pair, f64)> = Vec::new();
    for (_, snapshots) in inputs.books {
        for book in snapshots.iter().filter(|b| b.ts_hour == stamp) {
            edges.push((book.pair.clone(), book.mid_price()));
        }
    }
    for (h, pool) in inputs.pools_v2 {
        if *h == stamp {
            edges.push((pool.pair.clone(), pool.quoted_price().value()));
        }
    }
    for (h, pool) in inputs.pools_v3 {
        if *h == stamp {
            edges.push((pool.pair.clone(), pool.current_price.value()));
        }
    }
    UsdOracle::build(&seeds, &edges)
}

fn v2_cell(
    inputs: &PanelInputs,
    stamp: HourStamp,
    pair: &Pair,
    size: f64,
    base_usd: Price,
    quote_usd: Price,
    config: &Config,
) -> Option<CostBreakdown> {
    let (_, pool) = inputs
        .pools_v2
        .iter()
        .find(|(h, p)| *h == stamp && &p.pair == pair)?;
    let spread = pool.ba_spread(size, base_usd, quote_usd).ok()?;
    let gas = gas_cost_usd(config.gas.swap_v2, stamp, inputs.gas).ok()?;
    let fee = Bps::new(pool.fee * 1e4).ok()?;
    tc_dex(spread, fee, gas, size).ok().map(|c| c.with_venue("v2"))
}

fn v3_cell(
    inputs: &PanelInputs,
    stamp: HourStamp,
    pair: &Pair,
    size: f64,
    base_usd: Price,
    quote_usd: Price,
    config: &Config,
) -> Option<CostBreakdown> {
    let pools: Vec<&clmm::Pool> = inputs
        .pools_v3
        .iter()
        .filter(|(h, p)| *h == stamp && &p.pair == pair)
        .map(|(_, p)| p)
        .collect();
    if pools.is_empty() {
        return None;
    }
    let refs: Vec<PoolRef> = pools.iter().map(|p| PoolRef::Concentrated(p)).collect();
    let gas = gas_cost_usd(config.gas.swap_v3, stamp, inputs.gas).ok()?;
    let choice = clmm::best_pool_priced(&refs, size, base_usd, quote_usd, gas).ok()?;
    Some(choice.cost.with_venue("v3"))
}

#[allow(clippy::too_many_arguments)]
fn cex_cell(
    inputs: &PanelInputs,
    stamp: HourStamp,
    pair: &Pair,
    size: f64,
    base_usd: Price,
    quote_usd: Price,
    config: &Config,
    venue: &str,
    book: &LobSnapshot,
    include_dw: bool,
) -> Option<CostBreakdown> {
    let dx = usd_to_token_amount(base_usd, size).ok()?;
    let spread = lob::spread_lob(book, dx).ok()?;
    let taker = Bps::new(config.taker_fee_bps(venue)).ok()?;
    let (deposit, withdraw) = if include_dw {
        // Token kind for gas purposes follows the configured native
        // symbol; parsed tokens default to the contract kind.
        let kind = if pair.base.symbol == config.native_symbol {
            TokenKind::Native
        } else {
            TokenKind::Erc20
        };
        let units = config.gas.deposit_units(kind);
        let deposit = gas_cost_usd(units, stamp, inputs.gas).ok()?;
        let fee_tokens = inputs.withdraw_fees.fee_tokens(&pair.quote.symbol, stamp).ok()?;
        (deposit, fee_tokens * quote_usd.value())
    } else {
        (0.0, 0.0)
    };
    tc_cex(spread, taker, deposit, withdraw, size).ok().map(|c| c.with_venue(venue))
}
