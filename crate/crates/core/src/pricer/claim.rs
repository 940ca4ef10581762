use super::PricingResult;

/// A priced claim as seen by a hedger walking forward along one price path.
///
/// Prefixes are executed prices `s_0..=s_t`; the date is `prefix.len() - 1`.
pub trait HedgeClaim: Sync {
    fn horizon(&self) -> usize;

    /// Super-hedging value `g_t(s_0, …, s_t)`.
    fn value(&self, prefix: &[f64]) -> f64;

    /// Terminal payoff on a full path `s_0..=s_T`.
    fn payoff(&self, path: &[f64]) -> f64 {
        self.value(path)
    }

    /// Quantity `θ_t(s_0, …, s_t)` held over `(t, t + 1]`.
    fn theta(&self, prefix: &[f64]) -> f64;

    /// Prices where `s ↦ θ_t(history, s)` changes analytic form, with
    /// `history = s_0..s_{t-1}`. Empty when unknown.
    fn theta_kinks(&self, _history: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

impl HedgeClaim for PricingResult {
    fn horizon(&self) -> usize {
        PricingResult::horizon(self)
    }

    fn value(&self, prefix: &[f64]) -> f64 {
        let t = prefix.len() - 1;
        self.value_fn(t).value_at(prefix[t])
    }

    fn theta(&self, prefix: &[f64]) -> f64 {
        let t = prefix.len() - 1;
        self.strategy(t)
            .expect("theta requested at or after the horizon")
            .value(prefix[t])
    }

    fn theta_kinks(&self, history: &[f64]) -> Vec<f64> {
        self.strategy(history.len())
            .map(|s| s.kinks())
            .unwrap_or_default()
    }
}
