//! Backward super-hedging valuation.
//!
//! The minimal super-hedging price of a claim one step ahead is the value at
//! the current price of the concave envelope of the next-step value function
//! over the conditional support of the next price. When the support is the
//! multiplicative interval `[k_down·s, k_up·s]` and the claim is convex, the
//! envelope is the chord, and the value functions obey
//!
//! ```text
//! g_{t-1}(x) = λ·g_t(k_down·x) + (1 − λ)·g_t(k_up·x),   λ = (k_up − 1)/(k_up − k_down)
//! ```
//!
//! which [`backward_induce`] applies from the payoff at `T` down to `t = 0`.

mod claim;
mod closed_form;
mod model;
mod tree;

use thiserror::Error;

use crate::pwl::{self, Interval, PwlError, PwlFunction};

pub use claim::HedgeClaim;
pub use closed_form::{closed_form_call, TwoStepSupports};
pub use model::{MarketModel, ModelError, StepSpec};
pub use tree::{asian_tree_price, AsianCall, PathPayoff, PathTreePricer, DEFAULT_TREE_DEPTH_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("AIP fails at step {step}: need k_down <= 1 <= k_up, got [{k_down}, {k_up}]")]
    AipViolated { step: usize, k_down: f64, k_up: f64 },
    #[error(
        "payoff is not convex; price it step by step with one_step_price or use the path tree"
    )]
    NonConvexPayoff,
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("step index {t} out of range for horizon {horizon}")]
    StepOutOfRange { t: usize, horizon: usize },
    #[error("tree depth {horizon} exceeds the cap of {cap}")]
    TreeTooDeep { horizon: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
}

/// Per-step AIP verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AipReport {
    pub verdicts: Vec<bool>,
}

impl AipReport {
    pub fn holds(&self) -> bool {
        self.verdicts.iter().all(|&ok| ok)
    }

    pub fn violations(&self) -> impl Iterator<Item = usize> + '_ {
        self.verdicts
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(t, _)| t)
    }
}

pub fn check_aip(model: &MarketModel) -> AipReport {
    AipReport {
        verdicts: model.steps().iter().map(StepSpec::satisfies_aip).collect(),
    }
}

fn aip_error(model: &MarketModel) -> Option<PricingError> {
    check_aip(model).violations().next().map(|t| {
        let s = model.step(t);
        PricingError::AipViolated {
            step: t,
            k_down: s.k_down,
            k_up: s.k_up,
        }
    })
}

/// Result of a one-step pricing problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneStepPrice {
    Finite {
        price: f64,
        theta: f64,
    },
    /// The current price lies outside the support hull: arbitrarily negative
    /// initial capital super-hedges.
    MinusInfinity,
}

impl OneStepPrice {
    pub fn price(&self) -> f64 {
        match self {
            Self::Finite { price, .. } => *price,
            Self::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Self::Finite { theta, .. } => Some(*theta),
            Self::MinusInfinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }
}

/// Infimum super-hedging price of `g_next(S_t)` given `S_{t-1} = s_prev`,
/// with `S_t ∈ [k_down·s_prev, k_up·s_prev]`. Accepts non-convex claims.
pub fn one_step_price(
    g_next: &PwlFunction,
    s_prev: f64,
    step: &StepSpec,
) -> Result<OneStepPrice, PricingError> {
    if !(s_prev > 0.0 && s_prev.is_finite()) {
        return Err(PricingError::NonPositivePrice(s_prev));
    }
    let support = Interval::scaled(s_prev, step.k_down, step.k_up)?;
    if !support.contains(s_prev) {
        return Ok(OneStepPrice::MinusInfinity);
    }
    if support.is_degenerate() {
        return Ok(OneStepPrice::Finite {
            price: g_next.value_at(s_prev),
            theta: 0.0,
        });
    }
    let env = pwl::upper_concave_envelope(g_next, support);
    let price = env.eval(s_prev)?;
    let theta = env.superdifferential(s_prev)?.midpoint();
    Ok(OneStepPrice::Finite { price, theta })
}

/// Value functions `g_0..=g_T` of a European claim.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    value_fns: Vec<PwlFunction>,
    weights: Vec<f64>,
    multipliers: Vec<(f64, f64)>,
    s_init: f64,
}

impl PricingResult {
    pub fn horizon(&self) -> usize {
        self.value_fns.len() - 1
    }

    /// `g_t`; `g_T` is the payoff.
    pub fn value_fn(&self, t: usize) -> &PwlFunction {
        &self.value_fns[t]
    }

    pub fn value_fns(&self) -> &[PwlFunction] {
        &self.value_fns
    }

    /// Down-branch weight used to build `g_t` from `g_{t+1}`, for `t < T`.
    pub fn weight(&self, t: usize) -> f64 {
        self.weights[t]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Hedge ratio mapping `s ↦ θ_t(s)` for `t < T`.
    pub fn strategy(&self, t: usize) -> Result<StrategyFn<'_>, PricingError> {
        if t >= self.horizon() {
            return Err(PricingError::StepOutOfRange {
                t,
                horizon: self.horizon(),
            });
        }
        let (k_down, k_up) = self.multipliers[t + 1];
        Ok(StrategyFn {
            g_next: &self.value_fns[t + 1],
            k_down,
            k_up,
        })
    }

    /// Super-hedging portfolio value `V_0 = g_0(S_0)` once `S_0` is executed.
    pub fn portfolio_value(&self, s0: f64) -> Result<f64, PricingError> {
        Ok(self.value_fns[0].eval(s0)?)
    }

    /// Premium that covers every possible `V_0`: the supremum of `g_0` over the
    /// date-0 support `[k_down·S_{-1}, k_up·S_{-1}]`.
    pub fn initial_premium(&self) -> f64 {
        let (kd, ku) = self.multipliers[0];
        let dom = Interval::scaled(self.s_init, kd, ku).expect("validated multipliers");
        self.value_fns[0].extrema_on(dom).1
    }
}

/// `s ↦ (g_{t+1}(k_up·s) − g_{t+1}(k_down·s)) / ((k_up − k_down)·s)`.
#[derive(Debug, Clone, Copy)]
pub struct StrategyFn<'a> {
    g_next: &'a PwlFunction,
    k_down: f64,
    k_up: f64,
}

impl StrategyFn<'_> {
    pub fn eval(&self, s: f64) -> Result<f64, PricingError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(PricingError::NonPositivePrice(s));
        }
        Ok(self.value(s))
    }

    pub(crate) fn value(&self, s: f64) -> f64 {
        if self.k_up == self.k_down {
            let (left, right) = self.g_next.one_sided_slopes(self.k_up * s);
            return 0.5 * (left + right) * self.k_up;
        }
        (self.g_next.value_at(self.k_up * s) - self.g_next.value_at(self.k_down * s))
            / ((self.k_up - self.k_down) * s)
    }

    /// Prices where the mapping switches between rational pieces `a/s + b`.
    pub fn kinks(&self) -> Vec<f64> {
        let bps = self.g_next.breakpoints();
        let mut out: Vec<f64> = bps
            .iter()
            .map(|x| x / self.k_up)
            .chain(bps.iter().map(|x| x / self.k_down))
            .filter(|x| *x > 0.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Backward recursion on value functions for a convex European payoff.
pub fn backward_induce(
    payoff: &PwlFunction,
    model: &MarketModel,
) -> Result<PricingResult, PricingError> {
    if let Some(err) = aip_error(model) {
        return Err(err);
    }
    if !payoff.is_convex(1e-9) {
        return Err(PricingError::NonConvexPayoff);
    }
    let horizon = model.horizon();
    let mut value_fns = vec![payoff.clone(); horizon + 1];
    let mut weights = vec![0.0; horizon];
    for t in (1..=horizon).rev() {
        let step = model.step(t);
        let g = &value_fns[t];
        let lambda = step.down_weight();
        let prev = PwlFunction::convex_combine(
            &g.scale_compose(step.k_down)?,
            &g.scale_compose(step.k_up)?,
            lambda,
        )?;
        debug_assert!(prev.is_convex(1e-9));
        value_fns[t - 1] = prev;
        weights[t - 1] = lambda;
    }
    Ok(PricingResult {
        value_fns,
        weights,
        multipliers: model.steps().iter().map(|s| (s.k_down, s.k_up)).collect(),
        s_init: model.s_init(),
    })
}

/// `θ_t(s)`, the quantity held over `(t, t+1]` when `S_t = s`.
pub fn strategy_at(
    result: &PricingResult,
    t: usize,
    s: f64,
    model: &MarketModel,
) -> Result<f64, PricingError> {
    if t >= result.horizon() || t + 1 >= model.steps().len() {
        return Err(PricingError::StepOutOfRange {
            t,
            horizon: result.horizon(),
        });
    }
    let step = model.step(t + 1);
    StrategyFn {
        g_next: result.value_fn(t + 1),
        k_down: step.k_down,
        k_up: step.k_up,
    }
    .eval(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{dominates, AffineFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn call(k: f64) -> PwlFunction {
        PwlFunction::call(k).unwrap()
    }

    #[test]
    fn aip_verdicts() {
        assert!(check_aip(&MarketModel::reference()).holds());
        let flat = MarketModel::uniform(100.0, 2, StepSpec::from_support(1.0, 1.0)).unwrap();
        assert!(check_aip(&flat).holds());
        let bad = MarketModel::uniform(100.0, 2, StepSpec::from_support(1.1, 1.4)).unwrap();
        let report = check_aip(&bad);
        assert!(!report.holds());
        assert_eq!(report.violations().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn one_step_call() {
        // chord through (70, 0) and (140, 40) evaluated at 100
        let m = 70.0;
        let big_m = 140.0;
        let (gm, g_big) = (0.0, 40.0);
        let expected = gm + (g_big - gm) / (big_m - m) * (100.0 - m);
        let out = one_step_price(&call(100.0), 100.0, &StepSpec::REFERENCE).unwrap();
        let OneStepPrice::Finite { price, theta } = out else {
            panic!("expected a finite price");
        };
        assert!((price - expected).abs() < 1e-12);
        assert!((price - 120.0 / 7.0).abs() < 1e-12);
        assert!((theta - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn one_step_zero_claim_and_infinite_price() {
        let zero = one_step_price(&PwlFunction::zero(), 80.0, &StepSpec::REFERENCE).unwrap();
        assert_eq!(
            zero,
            OneStepPrice::Finite {
                price: 0.0,
                theta: 0.0
            }
        );
        let out = one_step_price(&call(100.0), 100.0, &StepSpec::from_support(1.1, 1.4)).unwrap();
        assert_eq!(out, OneStepPrice::MinusInfinity);
        assert_eq!(out.price(), f64::NEG_INFINITY);
        assert!(one_step_price(&call(100.0), 0.0, &StepSpec::REFERENCE).is_err());
    }

    #[test]
    fn one_step_degenerate_support() {
        let out = one_step_price(&call(100.0), 130.0, &StepSpec::from_support(1.0, 1.0)).unwrap();
        assert_eq!(
            out,
            OneStepPrice::Finite {
                price: 30.0,
                theta: 0.0
            }
        );
    }

    #[test]
    fn one_step_non_convex_uses_envelope() {
        // straddle-like tent: concave payoff keeps its kink
        let tent = PwlFunction::new(vec![100.0], vec![10.0], 1.0, -1.0).unwrap();
        let out = one_step_price(&tent, 100.0, &StepSpec::REFERENCE).unwrap();
        assert_eq!(
            out,
            OneStepPrice::Finite {
                price: 10.0,
                theta: 0.0
            }
        );
    }

    #[test]
    fn backward_two_step_call() {
        let res = backward_induce(&call(100.0), &MarketModel::reference()).unwrap();
        let g1 = res.value_fn(1);
        assert!((g1.value_at(140.0) - 288.0 / 7.0).abs() < 1e-12);
        assert!((g1.value_at(140.0) - (3.0 / 7.0) * (1.4 * 140.0 - 100.0)).abs() < 1e-12);
        assert_eq!(g1.value_at(70.0), 0.0);
        let closed = 96.0 * 0.09 / 0.49;
        assert!((res.value_fn(0).value_at(100.0) - 864.0 / 49.0).abs() < 1e-12);
        assert!((res.value_fn(0).value_at(100.0) - closed).abs() < 1e-12);
        assert!(res.weights().iter().all(|w| (w - 4.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn backward_single_step_matches_one_step() {
        let model = MarketModel::uniform(100.0, 1, StepSpec::REFERENCE).unwrap();
        let res = backward_induce(&call(90.0), &model).unwrap();
        for s in [20.0, 64.0, 70.0, 100.0, 128.0, 200.0] {
            let direct = one_step_price(&call(90.0), s, model.step(1)).unwrap();
            assert!((res.value_fn(0).value_at(s) - direct.price()).abs() < 1e-12);
            let theta = strategy_at(&res, 0, s, &model).unwrap();
            assert!((theta - direct.theta().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_zero_and_errors() {
        let res = backward_induce(&PwlFunction::zero(), &MarketModel::reference()).unwrap();
        assert!(res
            .value_fns()
            .iter()
            .all(|g| g.values().iter().all(|&v| v == 0.0) && g.right_slope() == 0.0));

        let bad = MarketModel::uniform(100.0, 2, StepSpec::from_support(1.1, 1.4)).unwrap();
        assert!(matches!(
            backward_induce(&call(100.0), &bad),
            Err(PricingError::AipViolated { step: 0, .. })
        ));
        let tent = PwlFunction::new(vec![100.0], vec![10.0], 1.0, -1.0).unwrap();
        assert_eq!(
            backward_induce(&tent, &MarketModel::reference()),
            Err(PricingError::NonConvexPayoff)
        );
    }

    #[test]
    fn strategy_examples() {
        let model = MarketModel::reference();
        let res = backward_induce(&call(100.0), &model).unwrap();
        let t0 = strategy_at(&res, 0, 100.0, &model).unwrap();
        assert!((t0 - 288.0 / 490.0).abs() < 1e-12);
        let t1 = strategy_at(&res, 1, 140.0, &model).unwrap();
        assert!((t1 - 96.0 / 98.0).abs() < 1e-12);
        for s in [10.0, 50.0, 100.0 / 1.4] {
            assert_eq!(strategy_at(&res, 1, s, &model).unwrap(), 0.0);
        }
        assert!(strategy_at(&res, 1, 0.0, &model).is_err());
        assert!(strategy_at(&res, 2, 100.0, &model).is_err());
    }

    #[test]
    fn degenerate_strategy_uses_derivative() {
        let model = MarketModel::uniform(100.0, 1, StepSpec::from_support(1.0, 1.0)).unwrap();
        let res = backward_induce(&call(100.0), &model).unwrap();
        assert_eq!(strategy_at(&res, 0, 150.0, &model).unwrap(), 1.0);
        assert_eq!(strategy_at(&res, 0, 50.0, &model).unwrap(), 0.0);
        assert_eq!(strategy_at(&res, 0, 100.0, &model).unwrap(), 0.5);
    }

    #[test]
    fn initial_premium_is_sup_over_support() {
        let res = backward_induce(&call(100.0), &MarketModel::reference()).unwrap();
        let g0 = res.value_fn(0);
        assert_eq!(
            res.initial_premium(),
            g0.value_at(140.0).max(g0.value_at(70.0))
        );
        assert!(res.portfolio_value(-1.0).is_err());
    }

    #[test]
    fn value_functions_convex_nonnegative_and_above_payoff() {
        let model = MarketModel::uniform(100.0, 4, StepSpec::REFERENCE).unwrap();
        for k in [50.0, 100.0, 150.0] {
            for payoff in [call(k), PwlFunction::put(k).unwrap()] {
                let res = backward_induce(&payoff, &model).unwrap();
                for g in res.value_fns() {
                    assert!(g.is_convex(1e-9));
                    for i in 1..=600 {
                        let s = i as f64 * 0.5;
                        assert!(g.value_at(s) >= -1e-12);
                    }
                }
                for i in 1..=600 {
                    let s = i as f64 * 0.5;
                    assert!(res.value_fn(0).value_at(s) >= payoff.value_at(s) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_step_sandwich_and_super_hedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = PwlFunction::new(vec![60.0, 90.0, 120.0], vec![5.0, 0.0, 30.0], -0.5, 1.5).unwrap();
        for s in [60.0, 85.0, 100.0, 140.0] {
            let step = StepSpec::REFERENCE;
            let out = one_step_price(&g, s, &step).unwrap();
            let OneStepPrice::Finite { price, theta } = out else {
                panic!("finite expected");
            };
            let dom = Interval::scaled(s, step.k_down, step.k_up).unwrap();
            let supporting = AffineFunction::through(s, price, theta);
            assert!(dominates(&supporting, &g, dom, 1e-9));
            for i in 0..=1000 {
                let z = dom.lo() + dom.width() * i as f64 / 1000.0;
                assert!(price + theta * (z - s) >= g.value_at(z) - 1e-9);
            }
            let mut accepted = 0;
            for _ in 0..1000 {
                let slope = rng.random_range(-3.0..3.0);
                let lift = rng.random_range(0.0..20.0);
                // lowest intercept that makes this slope dominate, plus a lift
                let intercept = g
                    .breakpoints()
                    .iter()
                    .copied()
                    .chain([dom.lo(), dom.hi()])
                    .filter(|&x| dom.contains(x))
                    .map(|x| g.value_at(x) - slope * x)
                    .fold(f64::NEG_INFINITY, f64::max)
                    + lift;
                let a = AffineFunction::new(slope, intercept).unwrap();
                if dominates(&a, &g, dom, 0.0) {
                    accepted += 1;
                    assert!(a.eval(s) >= price - 1e-9);
                }
            }
            assert_eq!(accepted, 1000);
        }
    }
}
