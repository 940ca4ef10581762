use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("step {step}: {msg}")]
    InvalidStep { step: usize, msg: String },
    #[error("initial price must be positive, got {0}")]
    NonPositiveInitialPrice(f64),
    #[error("horizon must be at least 1 (need {0} >= 2 step specifications)")]
    HorizonTooShort(usize),
}

/// Support multipliers and simulation distribution for one time step.
///
/// Given the previous executed price `s`, the next price lives in
/// `[k_down·s, k_up·s]`. The simulator draws `m ~ U[m_lo, m_hi]` and
/// `spr ~ U[spr_lo, spr_hi]` and uses the interval `[m·s, (m + spr)·s]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpec {
    pub k_down: f64,
    pub k_up: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub spr_lo: f64,
    pub spr_hi: f64,
}

impl StepSpec {
    /// `m ~ U[0.7, 1]`, `spr ~ U[0, 0.4]`, support multipliers `[0.7, 1.4]`.
    pub const REFERENCE: StepSpec = StepSpec {
        k_down: 0.7,
        k_up: 1.4,
        m_lo: 0.7,
        m_hi: 1.0,
        spr_lo: 0.0,
        spr_hi: 0.4,
    };

    /// Step whose support multipliers are the essential bounds of the distribution.
    pub fn from_distribution(m_lo: f64, m_hi: f64, spr_lo: f64, spr_hi: f64) -> Self {
        Self {
            k_down: m_lo,
            k_up: m_hi + spr_hi,
            m_lo,
            m_hi,
            spr_lo,
            spr_hi,
        }
    }

    /// Step given by its support alone; the attached distribution spans it.
    pub fn from_support(k_down: f64, k_up: f64) -> Self {
        Self {
            k_down,
            k_up,
            m_lo: k_down,
            m_hi: k_down,
            spr_lo: 0.0,
            spr_hi: k_up - k_down,
        }
    }

    pub fn validate(&self, step: usize) -> Result<(), ModelError> {
        let bad = |msg: &str| {
            Err(ModelError::InvalidStep {
                step,
                msg: msg.to_string(),
            })
        };
        let fields = [
            self.k_down,
            self.k_up,
            self.m_lo,
            self.m_hi,
            self.spr_lo,
            self.spr_hi,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if !(self.k_down > 0.0 && self.k_down <= self.k_up) {
            return bad("support multipliers need 0 < k_down <= k_up");
        }
        if self.m_lo > self.m_hi {
            return bad("m_lo must not exceed m_hi");
        }
        if !(0.0 <= self.spr_lo && self.spr_lo <= self.spr_hi) {
            return bad("spread range needs 0 <= spr_lo <= spr_hi");
        }
        if self.m_lo <= 0.0 {
            return bad("m_lo must be positive");
        }
        Ok(())
    }

    /// `k_down <= 1 <= k_up`: the current price lies in the next step's support hull.
    pub fn satisfies_aip(&self) -> bool {
        self.k_down <= 1.0 && 1.0 <= self.k_up
    }

    /// Whether every simulated interval `[m, m + spr]` lies inside `[k_down, k_up]`.
    pub fn simulation_within_support(&self) -> bool {
        let tol = 1e-12;
        self.k_down <= self.m_lo + tol && self.m_hi + self.spr_hi <= self.k_up + tol
    }

    pub fn is_degenerate(&self) -> bool {
        self.k_down == self.k_up
    }

    /// Weight of the down branch, `(k_up − 1)/(k_up − k_down)`; 1/2 when the
    /// support collapses to a point.
    pub fn down_weight(&self) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            (self.k_up - 1.0) / (self.k_up - self.k_down)
        }
    }
}

/// Last traded price plus one [`StepSpec`] per date `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    s_init: f64,
    steps: Vec<StepSpec>,
}

impl MarketModel {
    pub fn new(s_init: f64, steps: Vec<StepSpec>) -> Result<Self, ModelError> {
        if !(s_init > 0.0 && s_init.is_finite()) {
            return Err(ModelError::NonPositiveInitialPrice(s_init));
        }
        if steps.len() < 2 {
            return Err(ModelError::HorizonTooShort(steps.len()));
        }
        for (t, step) in steps.iter().enumerate() {
            step.validate(t)?;
        }
        Ok(Self { s_init, steps })
    }

    /// The same step specification at every date.
    pub fn uniform(s_init: f64, horizon: usize, step: StepSpec) -> Result<Self, ModelError> {
        Self::new(s_init, vec![step; horizon + 1])
    }

    /// `S_{-1} = 100`, two trading periods, [`StepSpec::REFERENCE`] everywhere.
    pub fn reference() -> Self {
        Self::uniform(100.0, 2, StepSpec::REFERENCE).expect("reference model is valid")
    }

    pub fn s_init(&self) -> f64 {
        self.s_init
    }

    pub fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn steps(&self) -> &[StepSpec] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> &StepSpec {
        &self.steps[t]
    }
}
