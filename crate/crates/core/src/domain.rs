//! Shared vocabulary: tokens, pairs, prices, trade sizes, basis points,
//! hour stamps.
//!
//! Everything here is an immutable value type; engines never mutate them.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{what} must be positive and finite, got {value}")]
    NotPositive { what: &'static str, value: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Whether a token is the chain's native currency or a contract token.
/// Drives the deposit gas amount: native transfers are cheaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Native,
    Erc20,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub symbol: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(symbol: impl Into<String>, kind: TokenKind) -> Result<Self, DomainError> {
        let symbol = symbol.into();
        if symbol.is_empty() {
            return Err(DomainError::Invalid("token symbol must be non-empty".into()));
        }
        Ok(Token { symbol, kind })
    }

    pub fn native(symbol: impl Into<String>) -> Result<Self, DomainError> {
        Token::new(symbol, TokenKind::Native)
    }

    pub fn erc20(symbol: impl Into<String>) -> Result<Self, DomainError> {
        Token::new(symbol, TokenKind::Erc20)
    }
}

/// A directed market X-Y: prices are quoted in units of Y per unit of X.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pair {
    pub base: Token,
    pub quote: Token,
}

impl Pair {
    pub fn new(base: Token, quote: Token) -> Result<Self, DomainError> {
        if base.symbol == quote.symbol {
            return Err(DomainError::Invalid(format!(
                "pair legs must differ, got {}-{}",
                base.symbol, quote.symbol
            )));
        }
        Ok(Pair { base, quote })
    }

    /// Canonical `BASE-QUOTE` form, the same spelling the file formats use.
    pub fn label(&self) -> String {
        format!("{}-{}", self.base.symbol, self.quote.symbol)
    }
}

/// A positive finite price in quote units per base unit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Price(f64);

impl Price {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        if !(value.is_finite() && value > 0.0) {
            return Err(DomainError::NotPositive { what: "price", value });
        }
        Ok(Price(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The opposite quoting direction, base units per quote unit.
    pub fn inverse(self) -> Price {
        Price(1.0 / self.0)
    }
}

/// Basis points; 1 bps = 1e-4 of notional. The canonical unit for every
/// cost output.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bps(f64);

impl Bps {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        if !value.is_finite() {
            return Err(DomainError::Invalid(format!("bps must be finite, got {value}")));
        }
        Ok(Bps(value))
    }

    /// Converts a plain fraction (0.01 = 1%) to basis points.
    pub fn from_fraction(fraction: f64) -> Result<Self, DomainError> {
        Bps::new(fraction * 1e4)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn as_fraction(self) -> f64 {
        self.0 * 1e-4
    }
}

/// A dollar notional plus its resolution into base-token units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeSize {
    pub usd: f64,
    pub token_amount: f64,
}

impl TradeSize {
    /// Resolves a dollar notional at the dollar value of one base token.
    pub fn resolve(usd: f64, base_usd: Price) -> Result<Self, DomainError> {
        let token_amount = usd_to_token_amount(base_usd, usd)?;
        Ok(TradeSize { usd, token_amount })
    }
}

/// Integer hours since the Unix epoch. All series in the library are
/// stamped at this resolution; there is no timezone logic anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HourStamp(pub i64);

impl HourStamp {
    pub fn epoch_hour(self) -> i64 {
        self.0
    }
}

/// Converts a dollar notional into base-token units at the supplied
/// dollar value of one base token.
pub fn usd_to_token_amount(base_usd: Price, usd: f64) -> Result<f64, DomainError> {
    if !(usd.is_finite() && usd > 0.0) {
        return Err(DomainError::NotPositive { what: "usd notional", value: usd });
    }
    Ok(usd / base_usd.value())
}

/// Relative gap between two values, 0 when both are equal (including both
/// zero). Symmetric in its arguments; used by test suites as the single
/// closeness measure.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / f64::max(a.abs(), b.abs())
}
