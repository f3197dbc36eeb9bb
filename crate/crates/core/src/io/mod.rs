//! File formats and configuration.
//!
//! All wire formats are flat UTF-8 CSV with explicit headers, except
//! concentrated-pool snapshots, whose nested tick arrays ride in JSON.
//! Parsing is tolerant of bad records: malformed rows are collected as
//! [`IngestError`]s and skipped while the rest of the file loads; only
//! structural problems (unreadable file, wrong header, stamps out of
//! order) abort a parse. Input emitters print numbers in shortest
//! round-trip form so emit-then-parse is lossless; result tables print
//! fixed six-decimal values so reruns are byte-identical.

mod emit;
mod parse;

pub use emit::{
    emit_deviation_csv, emit_eq_csv, emit_eq_panel_csv, emit_gas_csv, emit_lob_csv,
    emit_panel_csv, emit_pool_v3_json, emit_pools_v2_csv, emit_quotes_csv,
    emit_withdraw_fees_csv,
};
pub use parse::{
    parse_eq_panel_csv, parse_gas_csv, parse_lob_csv, parse_pool_v2_csv, parse_pool_v3_json,
    parse_quotes_csv, parse_withdraw_fees_csv,
};

use crate::costs::GasSchedule;
use crate::domain::{DomainError, Pair, Token};
use thiserror::Error;

/// A row-level problem: the record is dropped, the parse continues.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file} line {line}: {reason}")]
pub struct IngestError {
    pub file: String,
    /// 1-based line for CSV, 1-based record ordinal for JSON.
    pub line: u64,
    pub reason: String,
}

/// A structural problem that aborts the parse.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{file}: {source}")]
    Read {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: {source}")]
    Json {
        file: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{file} line {line}: stamps must be in order")]
    NonMonotonic { file: String, line: u64 },
    #[error("{file}: {reason}")]
    Invalid { file: String, reason: String },
}

/// Runtime configuration, compiled-in defaults. Taker fees are venue
/// constants rather than hardcoded values because they are
/// sample-period facts, not identities.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Per-venue taker fees in bps; venues not listed fall back to the
    /// default.
    pub taker_fees_bps: Vec<(String, f64)>,
    pub default_taker_fee_bps: f64,
    /// Symbols pinned to 1 USD when resolving dollar values.
    pub stable_usd_symbols: Vec<String>,
    /// Symbol whose dollar price rides in the gas series and whose
    /// deposits burn the plain-transfer stipend.
    pub native_symbol: String,
    pub gas: GasSchedule,
    /// Trade-size grid in USD, strictly increasing.
    pub sizes_usd: Vec<f64>,
    /// Rolling band window for deviation series.
    pub window_hours: u32,
    /// Trailing window for equilibrium expectations.
    pub window_days: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            taker_fees_bps: vec![("binance".into(), 10.0), ("kraken".into(), 26.0)],
            default_taker_fee_bps: 10.0,
            stable_usd_symbols: vec!["USDC".into(), "USDT".into(), "DAI".into()],
            native_symbol: "ETH".into(),
            gas: GasSchedule::default(),
            sizes_usd: vec![1e3, 1e4, 1e5, 1e6],
            window_hours: 168,
            window_days: 14,
        }
    }
}

impl Config {
    pub fn taker_fee_bps(&self, venue: &str) -> f64 {
        self.taker_fees_bps
            .iter()
            .find(|(name, _)| name == venue)
            .map(|(_, fee)| *fee)
            .unwrap_or(self.default_taker_fee_bps)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        for (venue, fee) in &self.taker_fees_bps {
            if !(fee.is_finite() && *fee >= 0.0) {
                return Err(DomainError::Invalid(format!(
                    "taker fee for {venue} must be nonnegative, got {fee}"
                )));
            }
        }
        if !(self.default_taker_fee_bps.is_finite() && self.default_taker_fee_bps >= 0.0) {
            return Err(DomainError::Invalid("default taker fee must be nonnegative".into()));
        }
        for w in self.sizes_usd.windows(2) {
            if !(w[0] < w[1]) {
                return Err(DomainError::Invalid(
                    "trade sizes must be strictly increasing".into(),
                ));
            }
        }
        if let Some(first) = self.sizes_usd.first() {
            if !(first.is_finite() && *first > 0.0) {
                return Err(DomainError::NotPositive { what: "trade size", value: *first });
            }
        }
        Ok(())
    }
}

/// Parses a `BASE-QUOTE` label. Tokens come back as contract-kind; gas
/// economics decide native-ness from config, not from the file.
pub fn parse_pair(label: &str) -> Result<Pair, DomainError> {
    let (base, quote) = label
        .split_once('-')
        .ok_or_else(|| DomainError::Invalid(format!("pair label `{label}` is not BASE-QUOTE")))?;
    Pair::new(Token::erc20(base)?, Token::erc20(quote)?)
}
