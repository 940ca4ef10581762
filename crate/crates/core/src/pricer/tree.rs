//! Path-dependent claims priced on the binary tree of support multipliers.
//!
//! Under a convex-in-the-last-argument payoff, each backward step only needs
//! the value function at the two support endpoints `k_down·s` and `k_up·s`,
//! so `g_0(s_0)` is a weighted sum over the `2^T` multiplier paths.

use super::{aip_error, HedgeClaim, MarketModel, PricingError};
use crate::pwl::PwlFunction;

pub const DEFAULT_TREE_DEPTH_CAP: usize = 20;

/// Terminal payoff of a path `s_0..=s_T`.
pub trait PathPayoff: Send + Sync {
    fn eval(&self, path: &[f64]) -> f64;
}

impl<F> PathPayoff for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, path: &[f64]) -> f64 {
        self(path)
    }
}

impl PathPayoff for PwlFunction {
    fn eval(&self, path: &[f64]) -> f64 {
        self.value_at(path[path.len() - 1])
    }
}

/// Arithmetic-average call `(mean(s_0, …, s_T) − K)^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsianCall {
    pub strike: f64,
}

impl PathPayoff for AsianCall {
    fn eval(&self, path: &[f64]) -> f64 {
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        (mean - self.strike).max(0.0)
    }
}

pub struct PathTreePricer<P> {
    payoff: P,
    /// `(k_down, k_up, λ)` per date; index 0 is unused by the recursion.
    steps: Vec<(f64, f64, f64)>,
}

impl<P: PathPayoff> PathTreePricer<P> {
    pub fn new(payoff: P, model: &MarketModel) -> Result<Self, PricingError> {
        Self::with_cap(payoff, model, DEFAULT_TREE_DEPTH_CAP)
    }

    pub fn with_cap(payoff: P, model: &MarketModel, cap: usize) -> Result<Self, PricingError> {
        if let Some(err) = aip_error(model) {
            return Err(err);
        }
        if model.horizon() > cap {
            return Err(PricingError::TreeTooDeep {
                horizon: model.horizon(),
                cap,
            });
        }
        Ok(Self {
            payoff,
            steps: model
                .steps()
                .iter()
                .map(|s| (s.k_down, s.k_up, s.down_weight()))
                .collect(),
        })
    }

    pub fn payoff_fn(&self) -> &P {
        &self.payoff
    }

    fn subtree(&self, path: &mut Vec<f64>) -> f64 {
        let t = path.len() - 1;
        if t + 1 == self.steps.len() {
            return self.payoff.eval(path);
        }
        let (kd, ku, lambda) = self.steps[t + 1];
        let s = path[t];
        path.push(kd * s);
        let down = self.subtree(path);
        path[t + 1] = ku * s;
        let up = self.subtree(path);
        path.pop();
        lambda * down + (1.0 - lambda) * up
    }
}

impl<P: PathPayoff> HedgeClaim for PathTreePricer<P> {
    fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    fn value(&self, prefix: &[f64]) -> f64 {
        let mut path = prefix.to_vec();
        path.reserve(self.steps.len() - prefix.len());
        self.subtree(&mut path)
    }

    fn payoff(&self, path: &[f64]) -> f64 {
        self.payoff.eval(path)
    }

    fn theta(&self, prefix: &[f64]) -> f64 {
        let t = prefix.len() - 1;
        let (kd, ku, _) = self.steps[t + 1];
        if kd == ku {
            // the next price equals the current one; any position hedges
            return 0.0;
        }
        let s = prefix[t];
        let mut path = prefix.to_vec();
        path.push(ku * s);
        let up = self.subtree(&mut path);
        path[t + 1] = kd * s;
        let down = self.subtree(&mut path);
        (up - down) / ((ku - kd) * s)
    }
}

/// `g_0(s0)` of a path-dependent payoff by depth-first enumeration of the
/// multiplier tree.
pub fn asian_tree_price<P: PathPayoff>(
    payoff: P,
    model: &MarketModel,
    s0: f64,
) -> Result<f64, PricingError> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(PricingError::NonPositivePrice(s0));
    }
    Ok(PathTreePricer::new(payoff, model)?.value(&[s0]))
}

#[cfg(test)]
mod tests {
    use super::super::{backward_induce, one_step_price, StepSpec};
    use super::*;

    #[test]
    fn european_payoff_matches_backward() {
        let call = PwlFunction::call(100.0).unwrap();
        for horizon in 1..=4 {
            let model = MarketModel::uniform(100.0, horizon, StepSpec::REFERENCE).unwrap();
            let res = backward_induce(&call, &model).unwrap();
            for s0 in [60.0, 95.0, 100.0, 133.0] {
                let tree = asian_tree_price(call.clone(), &model, s0).unwrap();
                assert!((tree - res.value_fn(0).value_at(s0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_payoff_and_single_step() {
        let model = MarketModel::reference();
        assert_eq!(
            asian_tree_price(|_: &[f64]| 0.0, &model, 100.0).unwrap(),
            0.0
        );
        let one = MarketModel::uniform(100.0, 1, StepSpec::REFERENCE).unwrap();
        let tree = asian_tree_price(|p: &[f64]| (p[1] - 100.0f64).max(0.0), &one, 100.0).unwrap();
        let direct =
            one_step_price(&PwlFunction::call(100.0).unwrap(), 100.0, one.step(1)).unwrap();
        assert!((tree - direct.price()).abs() < 1e-12);
    }

    #[test]
    fn asian_call_two_steps_by_hand() {
        let model = MarketModel::reference();
        let payoff = AsianCall { strike: 90.0 };
        let lam = 4.0 / 7.0;
        let s0 = 100.0;
        let mut expected = 0.0;
        for (w1, k1) in [(lam, 0.7), (1.0 - lam, 1.4)] {
            for (w2, k2) in [(lam, 0.7), (1.0 - lam, 1.4)] {
                let s1 = s0 * k1;
                let s2 = s1 * k2;
                expected += w1 * w2 * ((s0 + s1 + s2) / 3.0 - 90.0f64).max(0.0);
            }
        }
        let got = asian_tree_price(payoff, &model, s0).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn caps_and_aip() {
        let deep = MarketModel::uniform(100.0, 21, StepSpec::REFERENCE).unwrap();
        assert!(matches!(
            asian_tree_price(AsianCall { strike: 100.0 }, &deep, 100.0),
            Err(PricingError::TreeTooDeep {
                horizon: 21,
                cap: 20
            })
        ));
        let bad = MarketModel::uniform(100.0, 2, StepSpec::from_support(1.1, 1.4)).unwrap();
        assert!(matches!(
            asian_tree_price(AsianCall { strike: 100.0 }, &bad, 100.0),
            Err(PricingError::AipViolated { .. })
        ));
    }

    #[test]
    fn tree_theta_super_hedges_one_step() {
        let model = MarketModel::reference();
        let pricer = PathTreePricer::new(AsianCall { strike: 95.0 }, &model).unwrap();
        let prefix = [100.0, 90.0];
        let v1 = pricer.value(&prefix);
        let th = pricer.theta(&prefix);
        for i in 0..=100 {
            let s2 = 90.0 * (0.7 + 0.7 * i as f64 / 100.0);
            let terminal = pricer.payoff(&[100.0, 90.0, s2]);
            assert!(v1 + th * (s2 - 90.0) >= terminal - 1e-9);
        }
    }
}
