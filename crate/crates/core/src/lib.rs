//! Super-hedging prices and strategies when executed prices are only known
//! to lie in random intervals and orders fill with delay.
//!
//! - [`pwl`]: exact piecewise-linear algebra, concave envelopes and superdifferentials.
//! - [`pricer`]: AIP check, one-step prices, backward recursion, closed forms and the path tree.
//! - [`sim`]: seeded Monte-Carlo verification of the hedge with delayed bid/ask execution.

pub mod pricer;
pub mod pwl;
pub mod sim;
