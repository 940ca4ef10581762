//! Delayed order execution against a bid/ask pair.
//!
//! At an intermediate date the hedger sends the whole mapping
//! `x ↦ Δθ(x) = θ_t(x) − θ_{t−1}`: sell where it is negative, buy where it is
//! positive. The executed side depends on where the zero `S*` of that mapping
//! sits relative to the quoted bid and ask.

use super::SimError;
use crate::pwl::Interval;

/// Convention for a zero strictly between bid and ask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StraddleRule {
    /// `S*` closer to the bid (ties included) executes at the ask, otherwise at the bid.
    #[default]
    CloserToBidTakesAsk,
    /// Mirror image: `S*` closer to the bid executes at the bid.
    CloserToBidTakesBid,
}

/// Sign of `Δθ` over a bracket that contains no zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSign {
    /// Selling (or holding) everywhere: executes at the bid.
    NonPositive,
    /// Buying everywhere: executes at the ask.
    Positive,
}

const MONOTONE_TOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-12;

/// First zero of a nondecreasing `delta` on `bracket`, i.e. the infimum of
/// `{x : delta(x) >= 0}` when that set meets the bracket with a sign change
/// or touches `bracket.lo`. `kinks` are the points where `delta` switches
/// between pieces of the form `a/x + b`; each piece is inverted in closed
/// form, falling back to bisection.
pub fn find_sstar<F>(delta: F, bracket: Interval, kinks: &[f64]) -> Result<Option<f64>, SimError>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = (bracket.lo(), bracket.hi());
    let mut nodes = Vec::with_capacity(kinks.len() + 2);
    nodes.push(lo);
    nodes.extend(kinks.iter().copied().filter(|&k| lo < k && k < hi));
    if hi > lo {
        nodes.push(hi);
    }
    let vals: Vec<f64> = nodes.iter().map(|&x| delta(x)).collect();

    let slack = |a: f64, b: f64| MONOTONE_TOL * a.abs().max(b.abs()).max(1.0);
    for i in 1..nodes.len() {
        let mid = 0.5 * (nodes[i - 1] + nodes[i]);
        let dm = delta(mid);
        if dm < vals[i - 1] - slack(dm, vals[i - 1]) || vals[i] < dm - slack(dm, vals[i]) {
            return Err(SimError::NonMonotoneOrder { at: mid });
        }
    }

    if vals[0] >= 0.0 {
        return Ok((vals[0] == 0.0).then_some(lo));
    }
    let Some(i) = vals.iter().position(|&v| v >= 0.0) else {
        return Ok(None);
    };
    if vals[i] == 0.0 {
        return Ok(Some(nodes[i]));
    }
    let (p, q) = (nodes[i - 1], nodes[i]);
    let (dp, dq) = (vals[i - 1], vals[i]);

    if p > 0.0 {
        let a = (dp - dq) / (1.0 / p - 1.0 / q);
        let b = dp - a / p;
        if b != 0.0 {
            let root = -a / b;
            if p <= root && root <= q && delta(root).abs() <= MONOTONE_TOL {
                return Ok(Some(root));
            }
        }
    }
    Ok(Some(bisect(&delta, p, q)))
}

fn bisect<F: Fn(f64) -> f64>(delta: &F, mut p: f64, mut q: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (p + q);
        let d = delta(mid);
        if d.abs() <= ROOT_TOL || q - p <= ROOT_TOL * mid.abs().max(1.0) {
            return mid;
        }
        if d < 0.0 {
            p = mid;
        } else {
            q = mid;
        }
    }
    0.5 * (p + q)
}

/// Executed price of a delayed order given the quoted bid and ask.
pub fn execute_delayed_order(
    bid: f64,
    ask: f64,
    sstar: Option<f64>,
    sign: OrderSign,
    rule: StraddleRule,
) -> Result<f64, SimError> {
    if !(bid > 0.0 && bid <= ask) {
        return Err(SimError::BadQuote { bid, ask });
    }
    let Some(x) = sstar else {
        return Ok(match sign {
            OrderSign::NonPositive => bid,
            OrderSign::Positive => ask,
        });
    };
    let price = if ask <= x {
        bid
    } else if x <= bid {
        ask
    } else {
        let closer_to_bid = (x - bid).abs() <= (x - ask).abs();
        match (rule, closer_to_bid) {
            (StraddleRule::CloserToBidTakesAsk, true) => ask,
            (StraddleRule::CloserToBidTakesAsk, false) => bid,
            (StraddleRule::CloserToBidTakesBid, true) => bid,
            (StraddleRule::CloserToBidTakesBid, false) => ask,
        }
    };
    Ok(price)
}
