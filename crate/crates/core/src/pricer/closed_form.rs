//! Explicit value and hedge ratio of a call in the two-period model, case by
//! case. Kept independent of the value-function recursion so that each can
//! check the other.

use super::{MarketModel, PricingError};

/// Support multipliers of the two trading periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepSupports {
    /// `m_1^-`
    pub down1: f64,
    /// `M_1^+`
    pub up1: f64,
    /// `m_2^-`
    pub down2: f64,
    /// `M_2^+`
    pub up2: f64,
}

impl TwoStepSupports {
    pub fn from_model(model: &MarketModel) -> Option<Self> {
        if model.horizon() != 2 {
            return None;
        }
        let (s1, s2) = (model.step(1), model.step(2));
        Some(Self {
            down1: s1.k_down,
            up1: s1.k_up,
            down2: s2.k_down,
            up2: s2.k_up,
        })
    }
}

/// `(V_t(s), θ_t(s))` for the call `(S_2 − K)^+` at `t ∈ {0, 1}`.
pub fn closed_form_call(
    t: usize,
    s: f64,
    strike: f64,
    sup: &TwoStepSupports,
) -> Result<(f64, f64), PricingError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(PricingError::NonPositivePrice(s));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(PricingError::NonPositivePrice(strike));
    }
    match t {
        1 => Ok(time_one(s, strike, sup)),
        0 => Ok(time_zero(s, strike, sup)),
        _ => Err(PricingError::StepOutOfRange { t, horizon: 2 }),
    }
}

fn time_one(s1: f64, k: f64, sup: &TwoStepSupports) -> (f64, f64) {
    let (m2, big_m2) = (sup.down2, sup.up2);
    if s1 <= k / big_m2 {
        (0.0, 0.0)
    } else if s1 >= k / m2 {
        ((s1 - k).max(0.0), 1.0)
    } else {
        let value = (s1 * big_m2 - k) * (1.0 - m2) / (big_m2 - m2);
        let theta = (s1 * big_m2 - k) / (s1 * (big_m2 - m2));
        (value, theta)
    }
}

fn time_zero(s0: f64, k: f64, sup: &TwoStepSupports) -> (f64, f64) {
    let TwoStepSupports {
        down1: m1,
        up1: big_m1,
        down2: m2,
        up2: big_m2,
    } = *sup;
    let low = k / big_m2;
    let high = k / m2;
    let bottom = s0 * m1;
    let top = s0 * big_m1;
    let mid = |x: f64| low <= x && x <= high;

    if top <= low {
        // whole support below K/M_2^+
        (0.0, 0.0)
    } else if bottom >= high {
        ((s0 - k).max(0.0), 1.0)
    } else if bottom <= low && mid(top) {
        let value =
            (s0 * big_m1 * big_m2 - k) * (1.0 - m2) * (1.0 - m1) / ((big_m2 - m2) * (big_m1 - m1));
        let theta = (s0 * big_m1 * big_m2 - k) * (1.0 - m2) / (s0 * (big_m2 - m2) * (big_m1 - m1));
        (value, theta)
    } else if bottom <= low {
        // top above K/m_2^-
        let value = (s0 * big_m1 - k) * (1.0 - m1) / (big_m1 - m1);
        let theta = (s0 * big_m1 - k) / (s0 * (big_m1 - m1));
        (value, theta)
    } else if mid(top) {
        let value = (s0 * big_m2 - k) * (1.0 - m2) / (big_m2 - m2);
        let theta = big_m2 * (1.0 - m2) / (big_m2 - m2);
        (value, theta)
    } else {
        let denom = (big_m1 - m1) * (big_m2 - m2);
        let value = ((s0 * big_m1 - k) * (big_m2 - m2) * (1.0 - m1)
            - (s0 * m1 * big_m2 - k) * (1.0 - m2) * (1.0 - big_m1))
            / denom;
        let theta = ((s0 * big_m1 - k) * (big_m2 - m2) - (s0 * m1 * big_m2 - k) * (1.0 - m2))
            / (s0 * denom);
        (value, theta)
    }
}
