//! Execution-cost analytics for crypto trading venues.
//!
//! The library models the two dominant venue mechanics side by side:
//!
//! * constant-product AMM pools ([`cpmm`]) and concentrated-liquidity
//!   pools with per-interval virtual liquidity ([`clmm`]), including
//!   quoted half-spreads and impermanent loss;
//! * limit-order-book ladders with volume-weighted execution prices
//!   ([`lob`]);
//! * the settlement layer (gas, deposit and withdrawal fees) and the
//!   total-cost decomposition spread + fee + settlement ([`costs`]);
//! * triangular no-arbitrage deviations with rolling top-decile bands
//!   ([`triarb`]);
//! * an equilibrium model tying pool liquidity to expected volume and
//!   expected impermanent loss ([`equilibrium`]).
//!
//! All arithmetic is IEEE double precision. Algebraic identities hold to
//! relative 1e-12, multi-step paths to 1e-9; every public cost output is
//! denominated in basis points.

pub mod clmm;
pub mod costs;
pub mod cpmm;
pub mod domain;
pub mod equilibrium;
pub mod io;
pub mod lob;
pub mod triarb;

#[cfg(feature = "testkit")]
pub mod testkit;
