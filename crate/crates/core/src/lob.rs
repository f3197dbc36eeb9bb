//! Central-limit order book snapshots and execution-cost measures.
//!
//! A snapshot is a two-sided ladder of resting quotes. Sweeping a size
//! through one side fills levels best-first, taking a pro-rata slice of
//! the last level touched; the volume-weighted fill price, not the touch
//! quote, is what a taker actually pays.

use crate::domain::{Bps, DomainError, HourStamp, Pair};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LobError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("crossed book: best bid {bid} at or above best ask {ask}")]
    Crossed { bid: f64, ask: f64 },
    #[error("side is empty")]
    EmptySide,
    #[error("insufficient depth: {available} on the book for a request of {requested}")]
    InsufficientDepth { requested: f64, available: f64 },
}

/// One resting level: price and the volume quoted at it, both in base
/// units (volume in base tokens, price in quote per base).
pub type Level = (f64, f64);

/// A point-in-time order book for one pair. Bids descend from the best
/// bid, asks ascend from the best ask, and the sides must not cross.
#[derive(Debug, Clone, PartialEq)]
pub struct LobSnapshot {
    pub pair: Pair,
    pub ts_hour: HourStamp,
    pub bids: Vec<Level>,
    pub asks: Vec<Level>,
}

impl LobSnapshot {
    pub fn new(
        pair: Pair,
        ts_hour: HourStamp,
        bids: Vec<Level>,
        asks: Vec<Level>,
    ) -> Result<Self, LobError> {
        if bids.is_empty() || asks.is_empty() {
            return Err(LobError::EmptySide);
        }
        check_side(&bids, false)?;
        check_side(&asks, true)?;
        if bids[0].0 >= asks[0].0 {
            return Err(LobError::Crossed { bid: bids[0].0, ask: asks[0].0 });
        }
        Ok(LobSnapshot { pair, ts_hour, bids, asks })
    }

    pub fn best_bid(&self) -> f64 {
        self.bids[0].0
    }

    pub fn best_ask(&self) -> f64 {
        self.asks[0].0
    }

    /// Midpoint of the touch, the book's reference price.
    pub fn mid_price(&self) -> f64 {
        0.5 * (self.best_bid() + self.best_ask())
    }

    pub fn bid_depth(&self) -> f64 {
        self.bids.iter().map(|l| l.1).sum()
    }

    pub fn ask_depth(&self) -> f64 {
        self.asks.iter().map(|l| l.1).sum()
    }
}

fn check_side(levels: &[Level], ascending: bool) -> Result<(), LobError> {
    for (price, volume) in levels {
        if !(price.is_finite() && *price > 0.0) {
            return Err(DomainError::NotPositive { what: "level price", value: *price }.into());
        }
        if !(volume.is_finite() && *volume > 0.0) {
            return Err(DomainError::NotPositive { what: "level volume", value: *volume }.into());
        }
    }
    let ok = levels.windows(2).all(|w| if ascending { w[0].0 < w[1].0 } else { w[0].0 > w[1].0 });
    if !ok {
        return Err(DomainError::Invalid(format!(
            "levels must be strictly {} from the touch",
            if ascending { "ascending" } else { "descending" }
        ))
        .into());
    }
    Ok(())
}

/// The levels a sweep consumed and the price it averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct FillReport {
    pub requested: f64,
    /// (price, volume taken) per level, best-first; the last entry may be
    /// a partial slice.
    pub fills: Vec<Level>,
    /// Volume-weighted average price across the fills.
    pub vw_price: f64,
}

fn sweep(levels: &[Level], dx: f64) -> Result<FillReport, LobError> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(DomainError::NotPositive { what: "sweep size", value: dx }.into());
    }
    let mut remaining = dx;
    let mut fills = Vec::new();
    let mut notional = 0.0;
    for (price, volume) in levels {
        let take = remaining.min(*volume);
        fills.push((*price, take));
        notional += price * take;
        remaining -= take;
        if remaining <= 0.0 {
            return Ok(FillReport { requested: dx, fills, vw_price: notional / dx });
        }
    }
    Err(LobError::InsufficientDepth { requested: dx, available: dx - remaining })
}

/// Volume-weighted price of buying `dx` base tokens off the ask side.
pub fn vw_ask(book: &LobSnapshot, dx: f64) -> Result<FillReport, LobError> {
    sweep(&book.asks, dx)
}

/// Volume-weighted price of selling `dx` base tokens into the bid side.
pub fn vw_bid(book: &LobSnapshot, dx: f64) -> Result<FillReport, LobError> {
    sweep(&book.bids, dx)
}

/// Effective half-spread for a round trip of `dx`: with A and B the
/// volume-weighted ask and bid fills, (A - B) / (A + B) in bps. Depends
/// on size through the ladder, unlike the quoted touch spread.
pub fn spread_lob(book: &LobSnapshot, dx: f64) -> Result<Bps, LobError> {
    let a = vw_ask(book, dx)?.vw_price;
    let b = vw_bid(book, dx)?.vw_price;
    Ok(Bps::from_fraction((a - b) / (a + b)).map_err(LobError::Domain)?)
}

/// Reference mid of the book, exposed as a free function to mirror the
/// other measures.
pub fn mid_price(book: &LobSnapshot) -> f64 {
    book.mid_price()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{rel_diff, Token};
    use proptest::prelude::*;

    fn pair() -> Pair {
        Pair::new(Token::native("ETH").unwrap(), Token::erc20("USDC").unwrap()).unwrap()
    }

    fn book(bids: Vec<Level>, asks: Vec<Level>) -> LobSnapshot {
        LobSnapshot::new(pair(), HourStamp(0), bids, asks).unwrap()
    }

    #[test]
    fn sweep_fills_best_first_with_pro_rata_tail() {
        let b = book(vec![(99.0, 10.0)], vec![(100.0, 5.0), (101.0, 10.0)]);
        let a = vw_ask(&b, 10.0).unwrap();
        assert_eq!(a.fills, vec![(100.0, 5.0), (101.0, 5.0)]);
        assert!(rel_diff(a.vw_price, 100.5) < 1e-12);
        let partial = vw_ask(&b, 7.0).unwrap();
        assert_eq!(partial.fills, vec![(100.0, 5.0), (101.0, 2.0)]);
        assert!(rel_diff(partial.vw_price, (500.0 + 202.0) / 7.0) < 1e-12);
    }

    #[test]
    fn bid_sweep_mirrors_the_ask_side() {
        let b = book(vec![(99.0, 5.0), (98.0, 10.0)], vec![(100.0, 5.0), (101.0, 10.0)]);
        let r = vw_bid(&b, 10.0).unwrap();
        assert_eq!(r.fills, vec![(99.0, 5.0), (98.0, 5.0)]);
        assert!(rel_diff(r.vw_price, 98.5) < 1e-12);
    }

    #[test]
    fn spread_matches_hand_value() {
        let b = book(vec![(99.0, 10.0)], vec![(100.0, 5.0), (101.0, 10.0)]);
        let s = spread_lob(&b, 10.0).unwrap();
        assert!((s.value() - 75.19).abs() < 0.01);
        // Same ask ladder against a two-level bid side.
        let b2 = book(vec![(99.0, 5.0), (98.0, 10.0)], vec![(100.0, 5.0), (101.0, 10.0)]);
        let s2 = spread_lob(&b2, 10.0).unwrap();
        assert!(rel_diff(s2.value(), 2.0 / 199.0 * 1e4) < 1e-9);
    }

    #[test]
    fn mid_price_is_the_touch_midpoint() {
        let b = book(vec![(99.0, 10.0)], vec![(100.0, 5.0)]);
        assert!(rel_diff(b.mid_price(), 99.5) < 1e-12);
        assert_eq!(mid_price(&b), b.mid_price());
    }

    #[test]
    fn tiny_sweeps_pay_the_touch() {
        let b = book(vec![(1999.0, 3.0), (1998.0, 9.0)], vec![(2001.0, 2.0), (2004.0, 7.0)]);
        assert!(rel_diff(vw_ask(&b, 1e-9).unwrap().vw_price, 2001.0) < 1e-12);
        assert!(rel_diff(vw_bid(&b, 1e-9).unwrap().vw_price, 1999.0) < 1e-12);
    }

    #[test]
    fn exhausting_the_side_reports_available_depth() {
        let b = book(vec![(99.0, 10.0)], vec![(100.0, 5.0), (101.0, 10.0)]);
        match vw_ask(&b, 16.0).unwrap_err() {
            LobError::InsufficientDepth { requested, available } => {
                assert_eq!(requested, 16.0);
                assert!(rel_diff(available, 15.0) < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Exactly the full depth still fills.
        assert!(vw_ask(&b, 15.0).is_ok());
    }

    #[test]
    fn malformed_books_are_rejected() {
        let p = pair();
        assert!(matches!(
            LobSnapshot::new(p.clone(), HourStamp(0), vec![(100.0, 1.0)], vec![(99.0, 1.0)]),
            Err(LobError::Crossed { .. })
        ));
        assert!(matches!(
            LobSnapshot::new(p.clone(), HourStamp(0), vec![(99.0, 1.0)], vec![(99.0, 1.0)]),
            Err(LobError::Crossed { .. })
        ));
        assert!(LobSnapshot::new(p.clone(), HourStamp(0), vec![], vec![(99.0, 1.0)]).is_err());
        // Bids must descend, asks ascend.
        assert!(LobSnapshot::new(
            p.clone(),
            HourStamp(0),
            vec![(98.0, 1.0), (99.0, 1.0)],
            vec![(100.0, 1.0)]
        )
        .is_err());
        assert!(LobSnapshot::new(
            p.clone(),
            HourStamp(0),
            vec![(99.0, 1.0)],
            vec![(101.0, 1.0), (100.0, 1.0)]
        )
        .is_err());
        assert!(LobSnapshot::new(
            p,
            HourStamp(0),
            vec![(99.0, 0.0)],
            vec![(100.0, 1.0)]
        )
        .is_err());
    }

    prop_compose! {
        // Ladders built outward from a positive touch with strictly
        // positive gaps and volumes.
        fn arb_book()(
            mid in 1.0f64..1e4,
            half_spread in 1e-4f64..0.02,
            bid_gaps in prop::collection::vec(1e-4f64..0.05, 1..8),
            ask_gaps in prop::collection::vec(1e-4f64..0.05, 1..8),
            bid_vols in prop::collection::vec(0.1f64..50.0, 8),
            ask_vols in prop::collection::vec(0.1f64..50.0, 8),
        ) -> LobSnapshot {
            let mut bids = Vec::new();
            let mut price = mid * (1.0 - half_spread);
            for (gap, vol) in bid_gaps.iter().zip(&bid_vols) {
                bids.push((price, *vol));
                price *= 1.0 - gap;
            }
            let mut asks = Vec::new();
            let mut price = mid * (1.0 + half_spread);
            for (gap, vol) in ask_gaps.iter().zip(&ask_vols) {
                asks.push((price, *vol));
                price *= 1.0 + gap;
            }
            LobSnapshot::new(
                Pair::new(Token::native("ETH").unwrap(), Token::erc20("USDC").unwrap()).unwrap(),
                HourStamp(0),
                bids,
                asks,
            ).unwrap()
        }
    }

    proptest! {
        #[test]
        fn vw_prices_degrade_with_size(b in arb_book(), f1 in 0.01f64..1.0, f2 in 0.01f64..1.0) {
            let (small, large) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let depth = b.ask_depth().min(b.bid_depth());
            let (dx1, dx2) = (small * depth, large * depth);
            prop_assume!(dx1 > 0.0);
            let a1 = vw_ask(&b, dx1).unwrap().vw_price;
            let a2 = vw_ask(&b, dx2).unwrap().vw_price;
            prop_assert!(a2 >= a1 - 1e-12 * a1);
            let b1 = vw_bid(&b, dx1).unwrap().vw_price;
            let b2 = vw_bid(&b, dx2).unwrap().vw_price;
            prop_assert!(b2 <= b1 + 1e-12 * b1);
            let s1 = spread_lob(&b, dx1).unwrap().value();
            let s2 = spread_lob(&b, dx2).unwrap().value();
            prop_assert!(s2 >= s1 - 1e-9);
        }

        #[test]
        fn fills_are_bracketed_by_touch_and_mid(b in arb_book(), f in 0.01f64..1.0) {
            let depth = b.ask_depth().min(b.bid_depth());
            let dx = f * depth;
            prop_assume!(dx > 0.0);
            let a = vw_ask(&b, dx).unwrap().vw_price;
            let bid = vw_bid(&b, dx).unwrap().vw_price;
            prop_assert!(a >= b.best_ask() - 1e-12 * a);
            prop_assert!(bid <= b.best_bid() + 1e-12 * bid);
            prop_assert!(a > b.mid_price() && bid < b.mid_price());
            prop_assert!(spread_lob(&b, dx).unwrap().value() > 0.0);
        }

        #[test]
        fn fill_conservation(b in arb_book(), f in 0.05f64..1.0) {
            let dx = f * b.ask_depth();
            let r = vw_ask(&b, dx).unwrap();
            let filled: f64 = r.fills.iter().map(|l| l.1).sum();
            prop_assert!(rel_diff(filled, dx) < 1e-9);
            let notional: f64 = r.fills.iter().map(|l| l.0 * l.1).sum();
            prop_assert!(rel_diff(notional / dx, r.vw_price) < 1e-9);
        }
    }
}
