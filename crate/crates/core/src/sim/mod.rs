//! Seeded Monte-Carlo check of super-hedging strategies.
//!
//! Every date draws `m ~ U[m_lo, m_hi]`, `spr ~ U[spr_lo, spr_hi]` and
//! `k ~ U[0, 1]`; the executable prices at that date form `[m·s, (m + spr)·s]`
//! where `s` is the previous executed price. The first and last dates execute
//! at `s·(m + k·spr)`; intermediate dates quote `bid = m·s`, `ask = (m + spr)·s`
//! and fill the delayed order by [`execute_delayed_order`]. The portfolio is
//! self-financing, `V_t = V_{t−1} + θ_{t−1}(S_t − S_{t−1})`.

mod execution;
mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::pricer::{HedgeClaim, MarketModel, StepSpec};
use crate::pwl::{Interval, PwlError};

pub use execution::{execute_delayed_order, find_sstar, OrderSign, StraddleRule};
pub use stats::{Histogram, Moments, SimStats};

/// Upper bound on paths per run.
pub const MAX_PATHS: u64 = 100_000_000;

const BATCH_SIZE: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("bid {bid} and ask {ask} do not form a valid quote")]
    BadQuote { bid: f64, ask: f64 },
    #[error("order mapping is not nondecreasing near {at}")]
    NonMonotoneOrder { at: f64 },
    #[error("at least one path is required")]
    NoPaths,
    #[error("{requested} paths exceed the cap of {cap}")]
    TooManyPaths { requested: u64, cap: u64 },
    #[error("step {step}: simulated prices leave the pricing support [k_down, k_up]")]
    SupportMismatch { step: usize },
    #[error("claim horizon {claim} differs from model horizon {model}")]
    HorizonMismatch { claim: usize, model: usize },
    #[error("bid/ask execution is only possible at dates 1..T-1, got {0}")]
    BadBidAskStep(usize),
    #[error(transparent)]
    Pwl(#[from] PwlError),
}

/// Seed plus the fixed stream layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngConfig {
    pub seed: u64,
}

impl RngConfig {
    pub const ALGORITHM: &'static str =
        "chacha8: key = splitmix64(seed, stream), one ChaCha stream per batch of 16384 paths";

    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Generator for one batch of one independent stream (e.g. one strike).
    pub fn batch_rng(&self, stream: u64, batch: u64) -> ChaCha8Rng {
        let mut state = self.seed ^ splitmix64(&mut stream.wrapping_add(0x5EED));
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(batch);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One date's random inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDraw {
    /// lower multiplier `m`
    pub m: f64,
    /// upper multiplier `M = m + spr`
    pub big_m: f64,
    /// position inside `[m, M]` for mid execution
    pub k: f64,
}

pub fn draw_step<R: Rng + ?Sized>(step: &StepSpec, rng: &mut R) -> StepDraw {
    let u_m: f64 = rng.random();
    let u_spr: f64 = rng.random();
    let k: f64 = rng.random();
    let m = step.m_lo + (step.m_hi - step.m_lo) * u_m;
    let spr = step.spr_lo + (step.spr_hi - step.spr_lo) * u_spr;
    StepDraw {
        m,
        big_m: m + spr,
        k,
    }
}

/// `s_prev·(m + k·(M − m))`
pub fn mid_execute(s_prev: f64, draw: &StepDraw) -> Result<f64, SimError> {
    if !(s_prev > 0.0 && s_prev.is_finite()) {
        return Err(SimError::NonPositivePrice(s_prev));
    }
    Ok(s_prev * (draw.m + draw.k * (draw.big_m - draw.m)))
}

/// Which dates execute against a bid/ask pair, and the straddle convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionProtocol {
    bid_ask: Vec<bool>,
    pub straddle: StraddleRule,
}

impl ExecutionProtocol {
    /// Bid/ask execution at every date strictly between 0 and `horizon`.
    pub fn interior(horizon: usize) -> Self {
        Self {
            bid_ask: (0..=horizon).map(|t| t > 0 && t < horizon).collect(),
            straddle: StraddleRule::default(),
        }
    }

    pub fn with_bid_ask_steps(horizon: usize, steps: &[usize]) -> Result<Self, SimError> {
        let mut bid_ask = vec![false; horizon + 1];
        for &t in steps {
            if t == 0 || t >= horizon {
                return Err(SimError::BadBidAskStep(t));
            }
            bid_ask[t] = true;
        }
        Ok(Self {
            bid_ask,
            straddle: StraddleRule::default(),
        })
    }

    pub fn with_straddle(mut self, rule: StraddleRule) -> Self {
        self.straddle = rule;
        self
    }

    pub fn horizon(&self) -> usize {
        self.bid_ask.len() - 1
    }

    pub fn is_bid_ask(&self, t: usize) -> bool {
        self.bid_ask.get(t).copied().unwrap_or(false)
    }

    pub fn bid_ask_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.bid_ask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(t, _)| t)
    }
}

/// One simulated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub s_prev: f64,
    /// executed prices `S_0..=S_T`
    pub s: Vec<f64>,
    /// quoted bid at bid/ask dates
    pub bid: Vec<Option<f64>>,
    pub ask: Vec<Option<f64>>,
    /// `θ_0..θ_{T−1}`
    pub theta: Vec<f64>,
    /// portfolio values `V_0..=V_T`
    pub v: Vec<f64>,
    /// `(V_T − payoff)/S_T`
    pub eps_r: f64,
}

pub fn run_path<C, R>(
    model: &MarketModel,
    claim: &C,
    protocol: &ExecutionProtocol,
    rng: &mut R,
) -> Result<SimPath, SimError>
where
    C: HedgeClaim + ?Sized,
    R: Rng + ?Sized,
{
    let horizon = model.horizon();
    let mut s = Vec::with_capacity(horizon + 1);
    let mut bid = vec![None; horizon + 1];
    let mut ask = vec![None; horizon + 1];
    let mut theta = Vec::with_capacity(horizon);
    let mut v = Vec::with_capacity(horizon + 1);

    let draw = draw_step(model.step(0), rng);
    s.push(mid_execute(model.s_init(), &draw)?);
    v.push(claim.value(&s));

    for t in 1..=horizon {
        let held = claim.theta(&s);
        theta.push(held);
        let draw = draw_step(model.step(t), rng);
        let s_prev = s[t - 1];
        let executed = if protocol.is_bid_ask(t) {
            let (b, a) = (s_prev * draw.m, s_prev * draw.big_m);
            bid[t] = Some(b);
            ask[t] = Some(a);
            let delta = |x: f64| {
                let mut p = s.clone();
                p.push(x);
                claim.theta(&p) - held
            };
            let kinks = claim.theta_kinks(&s);
            let sstar = find_sstar(delta, Interval::new(b, a)?, &kinks)?;
            let sign = if delta(b) > 0.0 {
                OrderSign::Positive
            } else {
                OrderSign::NonPositive
            };
            execute_delayed_order(b, a, sstar, sign, protocol.straddle)?
        } else {
            mid_execute(s_prev, &draw)?
        };
        s.push(executed);
        v.push(v[t - 1] + held * (executed - s_prev));
    }

    let s_last = s[horizon];
    let eps_r = (v[horizon] - claim.payoff(&s)) / s_last;
    Ok(SimPath {
        s_prev: model.s_init(),
        s,
        bid,
        ask,
        theta,
        v,
        eps_r,
    })
}

fn check_inputs<C: HedgeClaim + ?Sized>(
    model: &MarketModel,
    claim: &C,
    protocol: &ExecutionProtocol,
    n_paths: u64,
) -> Result<(), SimError> {
    if n_paths == 0 {
        return Err(SimError::NoPaths);
    }
    if n_paths > MAX_PATHS {
        return Err(SimError::TooManyPaths {
            requested: n_paths,
            cap: MAX_PATHS,
        });
    }
    if claim.horizon() != model.horizon() {
        return Err(SimError::HorizonMismatch {
            claim: claim.horizon(),
            model: model.horizon(),
        });
    }
    if let Some(t) = protocol.bid_ask_steps().find(|&t| t >= model.horizon()) {
        return Err(SimError::BadBidAskStep(t));
    }
    if let Some(step) = model
        .steps()
        .iter()
        .position(|s| !s.simulation_within_support())
    {
        return Err(SimError::SupportMismatch { step });
    }
    Ok(())
}

/// Everything that identifies a reproducible stream of paths.
#[derive(Clone, Copy)]
pub struct PathSource<'a, C: ?Sized> {
    pub model: &'a MarketModel,
    pub claim: &'a C,
    pub protocol: &'a ExecutionProtocol,
    pub rng: RngConfig,
    /// Independent stream index, e.g. the position of the strike.
    pub stream: u64,
}

impl<C: HedgeClaim + ?Sized> PathSource<'_, C> {
    fn batches(n_paths: u64) -> impl Iterator<Item = (u64, u64)> {
        let n_batches = n_paths.div_ceil(BATCH_SIZE);
        (0..n_batches).map(move |b| (b, BATCH_SIZE.min(n_paths - b * BATCH_SIZE)))
    }

    /// Folds every path into per-batch accumulators in parallel and merges
    /// them in batch order.
    pub fn fold<A, I, F, M>(&self, n_paths: u64, init: I, add: F, merge: M) -> Result<A, SimError>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &SimPath) + Sync,
        M: Fn(&mut A, A),
    {
        check_inputs(self.model, self.claim, self.protocol, n_paths)?;
        let batches: Vec<(u64, u64)> = Self::batches(n_paths).collect();
        let parts = batches
            .par_iter()
            .map(|&(b, len)| {
                let mut rng = self.rng.batch_rng(self.stream, b);
                let mut acc = init();
                for _ in 0..len {
                    let path = run_path(self.model, self.claim, self.protocol, &mut rng)?;
                    add(&mut acc, &path);
                }
                Ok(acc)
            })
            .collect::<Result<Vec<A>, SimError>>()?;
        let mut out = init();
        for part in parts {
            merge(&mut out, part);
        }
        Ok(out)
    }

    /// Visits the same paths as [`Self::fold`] sequentially, in order.
    pub fn for_each<E, F>(&self, n_paths: u64, mut visit: F) -> Result<(), E>
    where
        E: From<SimError>,
        F: FnMut(u64, &SimPath) -> Result<(), E>,
    {
        check_inputs(self.model, self.claim, self.protocol, n_paths)?;
        let mut id = 0;
        for (b, len) in Self::batches(n_paths) {
            let mut rng = self.rng.batch_rng(self.stream, b);
            for _ in 0..len {
                let path = run_path(self.model, self.claim, self.protocol, &mut rng)?;
                visit(id, &path)?;
                id += 1;
            }
        }
        Ok(())
    }

    pub fn stats(&self, n_paths: u64) -> Result<SimStats, SimError> {
        let (horizon, s_init) = (self.model.horizon(), self.model.s_init());
        self.fold(
            n_paths,
            || SimStats::new(horizon, s_init),
            |acc, p| acc.push(p),
            |acc, part| acc.merge(&part),
        )
    }

    /// Histograms of `S_0..=S_T` and `ε_R` over the ranges seen in `stats`.
    pub fn histograms(
        &self,
        n_paths: u64,
        stats: &SimStats,
        bins: usize,
    ) -> Result<PathHistograms, SimError> {
        let horizon = self.model.horizon();
        let init = || PathHistograms {
            prices: (0..=horizon)
                .map(|t| Histogram::new(stats.price(t).min(), stats.price(t).max(), bins))
                .collect(),
            eps_r: Histogram::new(stats.eps_r().min(), stats.eps_r().max(), bins),
        };
        self.fold(
            n_paths,
            init,
            |acc, p| {
                for (h, &s) in acc.prices.iter_mut().zip(&p.s) {
                    h.add(s);
                }
                acc.eps_r.add(p.eps_r);
            },
            |acc, part| {
                for (a, b) in acc.prices.iter_mut().zip(&part.prices) {
                    a.merge(b);
                }
                acc.eps_r.merge(&part.eps_r);
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathHistograms {
    pub prices: Vec<Histogram>,
    pub eps_r: Histogram,
}

/// Statistics for several claims on the same model, one independent stream each.
pub fn simulate(
    model: &MarketModel,
    claims: &[&dyn HedgeClaim],
    n_paths: u64,
    rng: RngConfig,
    protocol: &ExecutionProtocol,
) -> Result<Vec<SimStats>, SimError> {
    claims
        .iter()
        .enumerate()
        .map(|(i, &claim)| {
            PathSource {
                model,
                claim,
                protocol,
                rng,
                stream: i as u64,
            }
            .stats(n_paths)
        })
        .collect()
}
