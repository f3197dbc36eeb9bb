//! Constant-product pool engine: quoting, swap execution, quoted
//! half-spreads, and impermanent loss.
//!
//! A pool holds reserves (x, y) with fee rate f and keeps x * y invariant
//! across swaps in the fee-adjusted sense: selling dx moves the state to
//! (x + phi * dx, y - dy) with phi = 1 - f, and
//!
//! ```text
//! dy = y * phi * dx / (x + phi * dx)
//! ```
//!
//! so (x + phi * dx)(y - dy) = x * y. Fee proceeds accumulate beside the
//! reserves, never inside them, which keeps the invariant exact.

use crate::domain::{Bps, DomainError, Pair, Price};

/// Constant-product pool state. `fee_collected_x` sits outside the
/// invariant: it is input-side fee income, not tradable reserves.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub pair: Pair,
    pub x: f64,
    pub y: f64,
    pub fee: f64,
    pub fee_collected_x: f64,
}

/// Outcome of a single swap of `amount_in` base tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapResult {
    pub amount_in: f64,
    pub amount_out: f64,
    /// Fee-exclusive execution price dy / (phi * dx); always below the
    /// pre-trade quoted price.
    pub transaction_price: Price,
    pub new_state: Pool,
}

/// Holding-vs-providing decomposition for a gross price change `delta_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlBreakdown {
    /// Value multiple of the pooled position, sqrt(delta_p).
    pub r_lp: f64,
    /// Value multiple of the buy-and-hold portfolio, (delta_p + 1) / 2.
    pub r_h: f64,
    pub il: f64,
}

/// How the loss is reported: `Difference` is r_h - r_lp (nonnegative),
/// `Percentage` is r_lp / r_h - 1 (nonpositive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IlMode {
    #[default]
    Difference,
    Percentage,
}

impl Pool {
    pub fn new(pair: Pair, x: f64, y: f64, fee: f64) -> Result<Self, DomainError> {
        if !(x.is_finite() && x > 0.0) {
            return Err(DomainError::NotPositive { what: "reserve x", value: x });
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(DomainError::NotPositive { what: "reserve y", value: y });
        }
        if !(fee.is_finite() && (0.0..1.0).contains(&fee)) {
            return Err(DomainError::Invalid(format!("fee must lie in [0, 1), got {fee}")));
        }
        Ok(Pool { pair, x, y, fee, fee_collected_x: 0.0 })
    }

    /// Input share that reaches the invariant, 1 - fee.
    pub fn phi(&self) -> f64 {
        1.0 - self.fee
    }

    /// Marginal price y / x in quote per base.
    pub fn quoted_price(&self) -> Price {
        Price::new(self.y / self.x).expect("positive reserves imply positive price")
    }

    /// The same pool seen from the opposite quoting direction. The fee
    /// accumulator is not carried over; the view exists for price and
    /// spread math on the reverse leg.
    pub fn inverted(&self) -> Pool {
        Pool {
            pair: Pair { base: self.pair.quote.clone(), quote: self.pair.base.clone() },
            x: self.y,
            y: self.x,
            fee: self.fee,
            fee_collected_x: 0.0,
        }
    }

    /// Output for selling `dx` base tokens.
    pub fn amount_out(&self, dx: f64) -> Result<f64, DomainError> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(DomainError::NotPositive { what: "input amount", value: dx });
        }
        let eff = self.phi() * dx;
        Ok(self.y * eff / (self.x + eff))
    }

    /// Executes the swap and returns the post-trade state. The fee share
    /// `fee * dx` lands in `fee_collected_x`, not in the reserves.
    pub fn execute_swap(&self, dx: f64) -> Result<SwapResult, DomainError> {
        let dy = self.amount_out(dx)?;
        let eff = self.phi() * dx;
        let new_state = Pool {
            pair: self.pair.clone(),
            x: self.x + eff,
            y: self.y - dy,
            fee: self.fee,
            fee_collected_x: self.fee_collected_x + self.fee * dx,
        };
        // dy / (phi * dx) simplifies to y / (x + phi * dx); the latter form
        // stays well defined as dx -> 0.
        let transaction_price = Price::new(self.y / (self.x + eff))?;
        Ok(SwapResult { amount_in: dx, amount_out: dy, transaction_price, new_state })
    }

    /// Quoted half-spread for selling `dx`: the relative gap between the
    /// marginal price and the execution price, phi*dx / (x + phi*dx).
    pub fn half_spread(&self, dx: f64) -> Result<Bps, DomainError> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(DomainError::NotPositive { what: "input amount", value: dx });
        }
        let eff = self.phi() * dx;
        Bps::from_fraction(eff / (self.x + eff))
    }

    /// Two-sided half-spread at a common dollar notional: the arithmetic
    /// mean of the sell-base and sell-quote half-spreads, with each leg's
    /// token amount resolved at its pre-trade dollar value.
    pub fn ba_spread(
        &self,
        usd_size: f64,
        base_usd: Price,
        quote_usd: Price,
    ) -> Result<Bps, DomainError> {
        let dx = crate::domain::usd_to_token_amount(base_usd, usd_size)?;
        let dy = crate::domain::usd_to_token_amount(quote_usd, usd_size)?;
        let sell_base = self.half_spread(dx)?;
        let sell_quote = self.inverted().half_spread(dy)?;
        Bps::new(0.5 * (sell_base.value() + sell_quote.value()))
    }
}

/// Impermanent loss of a full-range position over a gross price change
/// `delta_p` = P' / P, against the 50/50 buy-and-hold benchmark.
///
/// The difference form (r_h - r_lp) is computed as (sqrt(delta_p) - 1)^2 / 2,
/// which is the same quantity with the cancellation near delta_p = 1 removed.
pub fn impermanent_loss(delta_p: f64, mode: IlMode) -> Result<IlBreakdown, DomainError> {
    if !(delta_p.is_finite() && delta_p > 0.0) {
        return Err(DomainError::NotPositive { what: "gross price change", value: delta_p });
    }
    let s = delta_p.sqrt();
    let r_lp = s;
    let r_h = (delta_p + 1.0) / 2.0;
    let il = match mode {
        IlMode::Difference => 0.5 * (s - 1.0) * (s - 1.0),
        IlMode::Percentage => r_lp / r_h - 1.0,
    };
    Ok(IlBreakdown { r_lp, r_h, il })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{rel_diff, Token};
    use proptest::prelude::*;

    fn pool(x: f64, y: f64, fee: f64) -> Pool {
        let pair = Pair::new(Token::native("ETH").unwrap(), Token::erc20("USDC").unwrap()).unwrap();
        Pool::new(pair, x, y, fee).unwrap()
    }

    #[test]
    fn quoted_price_is_reserve_ratio() {
        assert_eq!(pool(1000.0, 1000.0, 0.0).quoted_price().value(), 1.0);
        assert_eq!(pool(100.0, 200.0, 0.0).quoted_price().value(), 2.0);
        let p = pool(200.0, 100.0, 0.0);
        assert_eq!(p.quoted_price().value(), 0.5);
        assert_eq!(p.quoted_price().inverse().value(), 2.0);
    }

    #[test]
    fn amount_out_matches_hand_values() {
        // 1000 * 0.997 * 100 / (1000 + 0.997 * 100) = 90.6611 to table precision.
        let dy = pool(1000.0, 1000.0, 0.003).amount_out(100.0).unwrap();
        assert!((dy - 90.6611).abs() < 5e-5, "dy = {dy}");
        // Fee-free, dx equal to reserves: k preservation forces dy = y / 2.
        let dy = pool(1000.0, 1000.0, 0.0).amount_out(1000.0).unwrap();
        assert_eq!(dy, 500.0);
    }

    #[test]
    fn amount_out_vanishes_with_trade_size() {
        let p = pool(1000.0, 1000.0, 0.003);
        let mut dx = 1.0;
        let mut last = p.amount_out(dx).unwrap();
        for _ in 0..10 {
            dx /= 10.0;
            let dy = p.amount_out(dx).unwrap();
            assert!(dy < last);
            last = dy;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn swap_preserves_fee_adjusted_product() {
        let p = pool(1000.0, 1000.0, 0.003);
        let r = p.execute_swap(100.0).unwrap();
        let k_before = p.x * p.y;
        let k_after = r.new_state.x * r.new_state.y;
        assert!(rel_diff(k_before, k_after) < 1e-12);
        assert!((r.new_state.x - 1099.7).abs() < 1e-9);
        assert!(rel_diff(r.new_state.fee_collected_x, 0.3) < 1e-12);
    }

    #[test]
    fn transaction_price_sits_below_quoted() {
        let p = pool(1000.0, 1000.0, 0.003);
        let r = p.execute_swap(100.0).unwrap();
        assert!(r.transaction_price.value() < p.quoted_price().value());
        // dy / (phi dx) and y / (x + phi dx) are the same number.
        let direct = r.amount_out / (p.phi() * 100.0);
        assert!(rel_diff(direct, r.transaction_price.value()) < 1e-12);
        // The gap closes as the trade shrinks.
        let tiny = p.execute_swap(1e-9).unwrap();
        assert!(rel_diff(tiny.transaction_price.value(), p.quoted_price().value()) < 1e-9);
    }

    #[test]
    fn half_spread_matches_hand_values() {
        let s = pool(1000.0, 1000.0, 0.003).half_spread(100.0).unwrap();
        assert!((s.value() - 906.6109).abs() < 1e-3, "spread = {}", s.value());
        // Fee-free with dx = x: dx / (x + dx) = 1/2.
        let s = pool(1000.0, 1000.0, 0.0).half_spread(1000.0).unwrap();
        assert_eq!(s.value(), 5000.0);
    }

    #[test]
    fn ba_spread_symmetric_pool_equals_either_direction() {
        let p = pool(1000.0, 1000.0, 0.0);
        let one = Price::new(1.0).unwrap();
        let two_sided = p.ba_spread(100.0, one, one).unwrap();
        let one_sided = p.half_spread(100.0).unwrap();
        assert!(rel_diff(two_sided.value(), one_sided.value()) < 1e-12);
    }

    #[test]
    fn ba_spread_is_the_midpoint_of_both_directions() {
        // With dollar marks matching the pool's own quote, both directions
        // slip identically; a stale mark (110 vs the quoted 100) makes the
        // resolved inputs differ, and the two-sided number is their mean.
        let p = pool(100.0, 10_000.0, 0.0);
        let base_usd = Price::new(110.0).unwrap();
        let quote_usd = Price::new(1.0).unwrap();
        let usd = 500.0;
        let dx = usd / 110.0;
        let dy = usd / 1.0;
        let sell_base = p.half_spread(dx).unwrap().value();
        let sell_quote = p.inverted().half_spread(dy).unwrap().value();
        assert!(rel_diff(sell_base, sell_quote) > 1e-3, "directions must differ");
        let mean = 0.5 * (sell_base + sell_quote);
        let got = p.ba_spread(usd, base_usd, quote_usd).unwrap().value();
        assert!(rel_diff(got, mean) < 1e-12);
    }

    #[test]
    fn impermanent_loss_matches_hand_values() {
        let b = impermanent_loss(1.0, IlMode::Difference).unwrap();
        assert_eq!(b.il, 0.0);
        let b = impermanent_loss(4.0, IlMode::Difference).unwrap();
        assert_eq!(b.r_lp, 2.0);
        assert_eq!(b.r_h, 2.5);
        assert_eq!(b.il, 0.5);
        let b = impermanent_loss(0.25, IlMode::Difference).unwrap();
        assert_eq!(b.il, 0.125);
    }

    #[test]
    fn percentage_mode_rescales_by_holding_return() {
        let b = impermanent_loss(4.0, IlMode::Percentage).unwrap();
        // 2 / 2.5 - 1 = -0.2; providing returned 20% less than holding.
        assert!(rel_diff(b.il, -0.2) < 1e-12);
        assert_eq!(impermanent_loss(1.0, IlMode::Percentage).unwrap().il, 0.0);
    }

    #[test]
    fn round_trip_without_fees_returns_input() {
        let p = pool(1000.0, 1000.0, 0.0);
        let out = p.execute_swap(137.0).unwrap();
        let back = out.new_state.inverted().execute_swap(out.amount_out).unwrap();
        assert!(rel_diff(back.amount_out, 137.0) < 1e-9);
    }

    #[test]
    fn fee_free_swaps_compose() {
        let p = pool(5000.0, 3000.0, 0.0);
        let combined = p.execute_swap(700.0).unwrap();
        let first = p.execute_swap(250.0).unwrap();
        let second = first.new_state.execute_swap(450.0).unwrap();
        assert!(rel_diff(first.amount_out + second.amount_out, combined.amount_out) < 1e-12);
        assert!(rel_diff(second.new_state.y, combined.new_state.y) < 1e-12);
    }

    proptest! {
        #[test]
        fn constant_product_invariance(
            x in 1e-6f64..1e12,
            y in 1e-6f64..1e12,
            fee in 0.0f64..0.05,
            scale in 1e-9f64..10.0,
        ) {
            let p = pool(x, y, fee);
            let r = p.execute_swap(scale * x).unwrap();
            prop_assert!(rel_diff(r.new_state.x * r.new_state.y, x * y) < 1e-12);
        }

        #[test]
        fn half_spread_increases_and_flattens(
            x in 1e-3f64..1e9,
            y in 1e-3f64..1e9,
            fee in 0.0f64..0.05,
            a in 1e-6f64..1.0,
            step in 1.01f64..3.0,
        ) {
            // Random geometric triple a < b < c of trade sizes relative to x.
            let p = pool(x, y, fee);
            let (a, b, c) = (a * x, a * x * step, a * x * step * step);
            let sa = p.half_spread(a).unwrap().value();
            let sb = p.half_spread(b).unwrap().value();
            let sc = p.half_spread(c).unwrap().value();
            prop_assert!(sa < sb && sb < sc);
            // Concavity via divided differences.
            let left = (sb - sa) / (b - a);
            let right = (sc - sb) / (c - b);
            prop_assert!(right <= left * (1.0 + 1e-12));
        }

        #[test]
        fn il_nonnegative_and_positive_off_unity(dp_log in -9.0f64..9.0) {
            let dp = dp_log.exp();
            let il = impermanent_loss(dp, IlMode::Difference).unwrap().il;
            prop_assert!(il >= 0.0);
            if (dp_log).abs() > 1e-6 {
                prop_assert!(il > 0.0);
                let inv = impermanent_loss(1.0 / dp, IlMode::Difference).unwrap().il;
                prop_assert!(inv > 0.0);
            }
        }
    }
}
