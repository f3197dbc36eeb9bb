//! Seeded generators and a slow reference swap, for tests only.
//! Everything here is deterministic given the seed.

use crate::clmm::{self, FeeTier, TickGrid, FEE_TIERS_BPS};
use crate::cpmm;
use crate::domain::{HourStamp, Pair, Price, Token};
use crate::lob::LobSnapshot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn test_pair() -> Pair {
    Pair::new(Token::erc20("X").unwrap(), Token::erc20("Y").unwrap()).unwrap()
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Standard normal draw via Box-Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_fee_tier(rng: &mut impl Rng) -> FeeTier {
    let bps = FEE_TIERS_BPS[rng.gen_range(0..FEE_TIERS_BPS.len())];
    FeeTier::new(bps).unwrap()
}

/// Reserves spread over six orders of magnitude, any listed fee tier.
pub fn random_v2_pool(rng: &mut impl Rng) -> cpmm::Pool {
    let x = 10f64.powf(rng.gen_range(2.0..8.0));
    let y = 10f64.powf(rng.gen_range(2.0..8.0));
    let fee = f64::from(FEE_TIERS_BPS[rng.gen_range(0..FEE_TIERS_BPS.len())]) * 1e-4;
    cpmm::Pool::new(test_pair(), x, y, fee).unwrap()
}

/// An input between a dust trade and a third of the reserve.
pub fn random_v2_swap(rng: &mut impl Rng, pool: &cpmm::Pool) -> f64 {
    pool.x * 10f64.powf(rng.gen_range(-5.0..-0.5))
}

/// A grid of 2..=20 intervals with occasional empty gaps. The current
/// price sits strictly inside an interval with liquidity, so some
/// sell input is always absorbable.
pub fn random_v3_pool(rng: &mut impl Rng) -> clmm::Pool {
    let n = rng.gen_range(2..=20usize);
    let mut boundary = 10f64.powf(rng.gen_range(-3.0..3.0));
    let mut boundaries = vec![boundary];
    for _ in 0..n {
        boundary *= 1.0 + rng.gen_range(0.02..0.5);
        boundaries.push(boundary);
    }
    let mut liquidity: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.25) { 0.0 } else { 10f64.powf(rng.gen_range(4.0..9.0)) })
        .collect();
    let populated: Vec<usize> =
        (0..n).filter(|i| liquidity[*i] > 0.0).collect();
    let current = match populated.as_slice() {
        [] => {
            let i = rng.gen_range(0..n);
            liquidity[i] = 1e6;
            i
        }
        some => some[rng.gen_range(0..some.len())],
    };
    let lo = boundaries[current];
    let hi = boundaries[current + 1];
    let price = lo + rng.gen_range(0.05..0.95) * (hi - lo);
    clmm::Pool::new(
        test_pair(),
        random_fee_tier(rng),
        TickGrid::new(boundaries).unwrap(),
        liquidity,
        Price::new(price).unwrap(),
    )
    .unwrap()
}

/// A sell input the pool can absorb, kept large enough relative to
/// local liquidity that outputs stay far from cancellation noise.
pub fn random_v3_swap(rng: &mut impl Rng, pool: &clmm::Pool, apply_fee: bool) -> f64 {
    let budget = pool.max_sell_input(apply_fee);
    let price = pool.current_price.value();
    let local = pool.liquidity[pool.grid.interval_of(price).expect("price on grid")];
    let floor = 1e-3 * local / price.sqrt();
    (budget * rng.gen_range(0.05..0.9)).max(floor).min(budget * 0.95)
}

/// Ladders spreading outward from a mid between 0.01 and 10000.
pub fn random_book(rng: &mut impl Rng, ts_hour: HourStamp) -> LobSnapshot {
    let mid = 10f64.powf(rng.gen_range(-2.0..4.0));
    let half_spread = rng.gen_range(1e-5..5e-3);
    let mut bids = Vec::new();
    let mut price = mid * (1.0 - half_spread);
    for _ in 0..rng.gen_range(1..=12usize) {
        bids.push((price, 10f64.powf(rng.gen_range(0.0..4.0))));
        price *= 1.0 - rng.gen_range(1e-4..5e-3);
    }
    let mut asks = Vec::new();
    let mut price = mid * (1.0 + half_spread);
    for _ in 0..rng.gen_range(1..=12usize) {
        asks.push((price, 10f64.powf(rng.gen_range(0.0..4.0))));
        price *= 1.0 + rng.gen_range(1e-4..5e-3);
    }
    LobSnapshot::new(test_pair(), ts_hour, bids, asks).unwrap()
}

/// Membership of `u` = 1/sqrt(price) on the reversed grid: interval j
/// covers [ub[j+1], ub[j]) so a boundary landing moves to the next
/// interval down in price, matching grid membership.
fn u_interval(ub: &[f64], u: f64) -> Option<usize> {
    if u >= ub[0] || u < *ub.last().expect("grid nonempty") {
        return None;
    }
    Some(ub.partition_point(|v| *v > u) - 1)
}

/// Reference swap: the net input walks down the grid in `steps` equal
/// pieces, each settled with the no-cancellation form
/// dy = l du / (u (u + du)). Structurally unrelated to the production
/// walk; agreement is evidence, not tautology. Returns None when the
/// input runs off the bottom of the grid.
pub fn micro_step_swap(
    pool: &clmm::Pool,
    gross_input: f64,
    steps: usize,
    apply_fee: bool,
) -> Option<f64> {
    let phi = if apply_fee { 1.0 - pool.fee_tier.fraction() } else { 1.0 };
    let ub: Vec<f64> = pool.grid.boundaries().iter().map(|b| 1.0 / b.sqrt()).collect();
    let mut u = 1.0 / pool.current_price.value().sqrt();
    let piece = phi * gross_input / steps as f64;
    let mut out = 0.0;
    for _ in 0..steps {
        let mut left = piece;
        loop {
            let j = u_interval(&ub, u)?;
            let l = pool.liquidity[j];
            if l == 0.0 {
                u = ub[j];
                continue;
            }
            let capacity_du = ub[j] - u;
            let du = left / l;
            if du < capacity_du {
                out += l * du / (u * (u + du));
                u += du;
                break;
            }
            out += l * capacity_du / (u * ub[j]);
            left -= capacity_du * l;
            u = ub[j];
            if left <= 0.0 {
                break;
            }
        }
    }
    Some(out)
}
