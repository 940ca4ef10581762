//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, lists are comma-separated.
//! Step parameters (`m_lo`, `m_hi`, `spr_lo`, `spr_hi`, `k_down`, `k_up`)
//! apply to every date; `stepN.<param>` overrides date `N` only. When
//! `k_down`/`k_up` are not given they default to the essential bounds of the
//! simulated interval, `m_lo` and `m_hi + spr_hi`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use superhedge_core::pricer::{MarketModel, StepSpec};
use superhedge_core::pwl::PwlFunction;
use superhedge_core::sim::{StraddleRule, MAX_PATHS};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}key `{key}`: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub msg: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: &str, msg: impl Into<String>) -> Self {
        Self {
            line,
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    Call,
    Put,
    /// Piecewise-linear payoff in moneyness units: `x ↦ K·f(x/K)` where `f`
    /// interpolates `points` and extends with the two slopes.
    Pwl {
        points: Vec<(f64, f64)>,
        left_slope: f64,
        right_slope: f64,
    },
    /// `(mean(S_0, …, S_T) − K)^+`
    AsianCall,
}

impl PayoffSpec {
    fn tag(&self) -> &'static str {
        match self {
            Self::Call => "call",
            Self::Put => "put",
            Self::Pwl { .. } => "pwl",
            Self::AsianCall => "asian-call",
        }
    }

    /// Terminal payoff of a European claim at the given strike.
    pub fn european(&self, strike: f64) -> Option<PwlFunction> {
        match self {
            Self::Call => PwlFunction::call(strike).ok(),
            Self::Put => PwlFunction::put(strike).ok(),
            Self::Pwl {
                points,
                left_slope,
                right_slope,
            } => PwlFunction::new(
                points.iter().map(|p| p.0 * strike).collect(),
                points.iter().map(|p| p.1 * strike).collect(),
                *left_slope,
                *right_slope,
            )
            .ok(),
            Self::AsianCall => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub stats: bool,
    pub dump_paths: bool,
    pub histograms: bool,
    pub export_strategy: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            stats: true,
            dump_paths: false,
            histograms: false,
            export_strategy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub s_prev: f64,
    pub horizon: usize,
    /// one entry per date `0..=horizon`
    pub steps: Vec<StepSpec>,
    pub strikes: Vec<f64>,
    pub n_paths: u64,
    pub seed: u64,
    pub payoff: PayoffSpec,
    pub outputs: Outputs,
    pub histogram_bins: usize,
    pub straddle: StraddleRule,
    pub clamp_infinite_price: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            s_prev: 100.0,
            horizon: 2,
            steps: vec![StepSpec::REFERENCE; 3],
            strikes: vec![50.0, 75.0, 100.0, 125.0, 150.0],
            n_paths: 1_000_000,
            seed: 1,
            payoff: PayoffSpec::Call,
            outputs: Outputs::default(),
            histogram_bins: 100,
            straddle: StraddleRule::default(),
            clamp_infinite_price: false,
        }
    }
}

const STEP_KEYS: [&str; 6] = ["m_lo", "m_hi", "spr_lo", "spr_hi", "k_down", "k_up"];

#[derive(Debug, Clone, Copy, Default)]
struct StepOverrides([Option<f64>; 6]);

impl StepOverrides {
    fn set(&mut self, param: &str, v: f64) {
        let i = STEP_KEYS
            .iter()
            .position(|k| *k == param)
            .expect("known step key");
        self.0[i] = Some(v);
    }

    fn layer(&self, under: &Self) -> Self {
        let mut out = *under;
        for (o, v) in out.0.iter_mut().zip(self.0) {
            if v.is_some() {
                *o = v;
            }
        }
        out
    }

    fn build(&self) -> StepSpec {
        let r = StepSpec::REFERENCE;
        let [m_lo, m_hi, spr_lo, spr_hi, k_down, k_up] = self.0;
        let m_lo = m_lo.unwrap_or(r.m_lo);
        let m_hi = m_hi.unwrap_or(r.m_hi);
        let spr_lo = spr_lo.unwrap_or(r.spr_lo);
        let spr_hi = spr_hi.unwrap_or(r.spr_hi);
        StepSpec {
            k_down: k_down.unwrap_or(m_lo),
            k_up: k_up.unwrap_or(m_hi + spr_hi),
            m_lo,
            m_hi,
            spr_lo,
            spr_hi,
        }
    }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::new(Some(line), key, format!("`{raw}` is not a finite number")))
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    let cleaned = raw.replace('_', "");
    cleaned
        .parse::<T>()
        .or_else(|_| {
            // allow 1e6-style path counts
            cleaned
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < 1.8e19)
                .and_then(|v| format!("{v:.0}").parse::<T>().ok())
                .ok_or(())
        })
        .map_err(|_| {
            ConfigError::new(
                Some(line),
                key,
                format!("`{raw}` is not a nonnegative integer"),
            )
        })
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::new(
            Some(line),
            key,
            format!("`{raw}` is not a boolean"),
        )),
    }
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(line, key, s))
        .collect()
}

fn parse_points(line: usize, key: &str, raw: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (x, y) = pair.split_once(':').ok_or_else(|| {
                ConfigError::new(Some(line), key, format!("`{pair}` is not an `x:y` pair"))
            })?;
            Ok((
                parse_f64(line, key, x.trim())?,
                parse_f64(line, key, y.trim())?,
            ))
        })
        .collect()
}

fn parse_straddle(line: usize, key: &str, raw: &str) -> Result<StraddleRule, ConfigError> {
    match raw {
        "closer-to-bid-takes-ask" => Ok(StraddleRule::CloserToBidTakesAsk),
        "closer-to-bid-takes-bid" => Ok(StraddleRule::CloserToBidTakesBid),
        _ => Err(ConfigError::new(
            Some(line),
            key,
            "expected `closer-to-bid-takes-ask` or `closer-to-bid-takes-bid`",
        )),
    }
}

fn straddle_name(rule: StraddleRule) -> &'static str {
    match rule {
        StraddleRule::CloserToBidTakesAsk => "closer-to-bid-takes-ask",
        StraddleRule::CloserToBidTakesBid => "closer-to-bid-takes-bid",
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut global = StepOverrides::default();
    let mut per_step: BTreeMap<usize, (usize, StepOverrides)> = BTreeMap::new();
    let mut payoff_tag: Option<(usize, String)> = None;
    let mut pwl_points: Option<Vec<(f64, f64)>> = None;
    let mut pwl_slopes = (0.0, 0.0);

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| ConfigError::new(Some(line), content, "expected `key = value`"))?;

        if let Some(rest) = key.strip_prefix("step") {
            if let Some((index, param)) = rest.split_once('.') {
                let t: usize = index
                    .parse()
                    .map_err(|_| ConfigError::new(Some(line), key, "bad step index"))?;
                if !STEP_KEYS.contains(&param) {
                    return Err(ConfigError::new(Some(line), key, "unknown step parameter"));
                }
                let entry = per_step
                    .entry(t)
                    .or_insert((line, StepOverrides::default()));
                entry.1.set(param, parse_f64(line, key, value)?);
                continue;
            }
        }

        match key {
            "s_prev" => cfg.s_prev = parse_f64(line, key, value)?,
            "horizon" => cfg.horizon = parse_int(line, key, value)?,
            k if STEP_KEYS.contains(&k) => global.set(k, parse_f64(line, key, value)?),
            "strikes" => cfg.strikes = parse_list(line, key, value)?,
            "n_paths" => cfg.n_paths = parse_int(line, key, value)?,
            "seed" => cfg.seed = parse_int(line, key, value)?,
            "payoff" => payoff_tag = Some((line, value.to_string())),
            "pwl_points" => pwl_points = Some(parse_points(line, key, value)?),
            "pwl_left_slope" => pwl_slopes.0 = parse_f64(line, key, value)?,
            "pwl_right_slope" => pwl_slopes.1 = parse_f64(line, key, value)?,
            "stats" => cfg.outputs.stats = parse_bool(line, key, value)?,
            "dump_paths" => cfg.outputs.dump_paths = parse_bool(line, key, value)?,
            "histograms" => cfg.outputs.histograms = parse_bool(line, key, value)?,
            "export_strategy" => cfg.outputs.export_strategy = parse_bool(line, key, value)?,
            "histogram_bins" => cfg.histogram_bins = parse_int(line, key, value)?,
            "straddle" => cfg.straddle = parse_straddle(line, key, value)?,
            "clamp_infinite_price" => cfg.clamp_infinite_price = parse_bool(line, key, value)?,
            _ => return Err(ConfigError::new(Some(line), key, "unknown key")),
        }
    }

    if let Some((line, tag)) = payoff_tag {
        cfg.payoff = match tag.as_str() {
            "call" => PayoffSpec::Call,
            "put" => PayoffSpec::Put,
            "asian-call" => PayoffSpec::AsianCall,
            "pwl" => PayoffSpec::Pwl {
                points: pwl_points.take().ok_or_else(|| {
                    ConfigError::new(Some(line), "pwl_points", "required when payoff = pwl")
                })?,
                left_slope: pwl_slopes.0,
                right_slope: pwl_slopes.1,
            },
            other => {
                return Err(ConfigError::new(
                    Some(line),
                    "payoff",
                    format!("`{other}` is not one of call, put, pwl, asian-call"),
                ))
            }
        };
    }
    if pwl_points.is_some() && !matches!(cfg.payoff, PayoffSpec::Pwl { .. }) {
        return Err(ConfigError::new(
            None,
            "pwl_points",
            "only valid with payoff = pwl",
        ));
    }

    if let Some((&t, &(line, _))) = per_step.range(cfg.horizon + 1..).next() {
        return Err(ConfigError::new(
            Some(line),
            &format!("step{t}"),
            format!("date {t} is beyond the horizon {}", cfg.horizon),
        ));
    }
    cfg.steps = (0..=cfg.horizon)
        .map(|t| match per_step.get(&t) {
            Some((_, o)) => o.layer(&global).build(),
            None => global.build(),
        })
        .collect();

    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, msg: &str| Err(ConfigError::new(None, key, msg));
        if !(self.s_prev > 0.0 && self.s_prev.is_finite()) {
            return err("s_prev", "must be positive");
        }
        if self.horizon == 0 {
            return err("horizon", "must be at least 1");
        }
        if self.steps.len() != self.horizon + 1 {
            return err(
                "horizon",
                "needs one step specification per date 0..=horizon",
            );
        }
        for (t, step) in self.steps.iter().enumerate() {
            step.validate(t)
                .map_err(|e| ConfigError::new(None, &format!("step{t}"), e.to_string()))?;
        }
        if self.strikes.is_empty() {
            return err("strikes", "at least one strike is required");
        }
        if self.strikes.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return err("strikes", "strikes must be positive");
        }
        if self.n_paths == 0 {
            return err("n_paths", "must be at least 1");
        }
        if self.n_paths > MAX_PATHS {
            return err("n_paths", &format!("must not exceed {MAX_PATHS}"));
        }
        if self.histogram_bins == 0 {
            return err("histogram_bins", "must be at least 1");
        }
        if let PayoffSpec::Pwl { points, .. } = &self.payoff {
            if self.payoff.european(1.0).is_none() || points.is_empty() {
                return err(
                    "pwl_points",
                    "need nonnegative, strictly increasing abscissae and finite values",
                );
            }
        }
        Ok(())
    }

    pub fn market_model(&self) -> MarketModel {
        MarketModel::new(self.s_prev, self.steps.clone()).expect("validated configuration")
    }

    /// Canonical text form; [`parse_config`] reads it back to an equal value.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let o = &mut out;
        let _ = writeln!(o, "s_prev = {}", self.s_prev);
        let _ = writeln!(o, "horizon = {}", self.horizon);
        for (t, s) in self.steps.iter().enumerate() {
            for (name, v) in STEP_KEYS
                .iter()
                .zip([s.m_lo, s.m_hi, s.spr_lo, s.spr_hi, s.k_down, s.k_up])
            {
                let _ = writeln!(o, "step{t}.{name} = {v}");
            }
        }
        let strikes: Vec<String> = self.strikes.iter().map(f64::to_string).collect();
        let _ = writeln!(o, "strikes = {}", strikes.join(", "));
        let _ = writeln!(o, "n_paths = {}", self.n_paths);
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "payoff = {}", self.payoff.tag());
        if let PayoffSpec::Pwl {
            points,
            left_slope,
            right_slope,
        } = &self.payoff
        {
            let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x}:{y}")).collect();
            let _ = writeln!(o, "pwl_points = {}", pts.join(", "));
            let _ = writeln!(o, "pwl_left_slope = {left_slope}");
            let _ = writeln!(o, "pwl_right_slope = {right_slope}");
        }
        let _ = writeln!(o, "stats = {}", self.outputs.stats);
        let _ = writeln!(o, "dump_paths = {}", self.outputs.dump_paths);
        let _ = writeln!(o, "histograms = {}", self.outputs.histograms);
        let _ = writeln!(o, "histogram_bins = {}", self.histogram_bins);
        let _ = writeln!(o, "export_strategy = {}", self.outputs.export_strategy);
        let _ = writeln!(o, "straddle = {}", straddle_name(self.straddle));
        let _ = writeln!(o, "clamp_infinite_price = {}", self.clamp_infinite_price);
        out
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
