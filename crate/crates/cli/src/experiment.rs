//! Runs a configured experiment and writes its artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use superhedge_core::pricer::{
    backward_induce, check_aip, AsianCall, HedgeClaim, MarketModel, PathTreePricer, PricingError,
};
use superhedge_core::sim::{ExecutionProtocol, PathSource, RngConfig, SimError, SimPath, SimStats};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, PayoffSpec};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_AIP: i32 = 3;
pub const EXIT_INFINITE_PRICE: i32 = 4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(
        "no-arbitrage condition fails at step {step}: need k_down <= 1 <= k_up, got [{k_down}, {k_up}]"
    )]
    Aip { step: usize, k_down: f64, k_up: f64 },
    #[error(
        "super-hedging price is -inf at step {step}: S_{prev} lies outside \
         [k_down * S_{prev}, k_up * S_{prev}] with k_down = {k_down}, k_up = {k_up}"
    )]
    InfinitePrice {
        step: usize,
        prev: String,
        k_down: f64,
        k_up: f64,
    },
    #[error("pricing failed: {0}")]
    Pricing(#[from] PricingError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_)
            | Self::Pricing(PricingError::NonConvexPayoff | PricingError::TreeTooDeep { .. })
            | Self::Sim(SimError::SupportMismatch { .. } | SimError::TooManyPaths { .. }) => {
                EXIT_CONFIG
            }
            Self::Aip { .. } => EXIT_AIP,
            Self::InfinitePrice { .. } => EXIT_INFINITE_PRICE,
            _ => EXIT_FAILURE,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One priced claim, European or path-dependent.
pub enum PricedClaim {
    European(superhedge_core::pricer::PricingResult),
    Asian(PathTreePricer<AsianCall>),
}

impl PricedClaim {
    pub fn price(
        cfg: &ExperimentConfig,
        model: &MarketModel,
        strike: f64,
    ) -> Result<Self, ExperimentError> {
        Ok(match cfg.payoff.european(strike) {
            Some(payoff) => Self::European(backward_induce(&payoff, model)?),
            None => Self::Asian(PathTreePricer::new(AsianCall { strike }, model)?),
        })
    }

    pub fn as_claim(&self) -> &dyn HedgeClaim {
        match self {
            Self::European(r) => r,
            Self::Asian(t) => t,
        }
    }

    /// Capital needed before `S_0` is known: the worst case of `g_0` over
    /// the support of `S_0`. `g_0` is convex, so the endpoints suffice.
    pub fn initial_premium(&self, model: &MarketModel) -> f64 {
        let step = model.step(0);
        let claim = self.as_claim();
        let lo = claim.value(&[step.k_down * model.s_init()]);
        let hi = claim.value(&[step.k_up * model.s_init()]);
        lo.max(hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrikeResult {
    pub strike: f64,
    pub premium: f64,
    pub stats: SimStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: Vec<StrikeResult>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn stats_table(&self) -> String {
        report::stats_text(&self.results)
    }
}

/// Fails with [`ExperimentError::Aip`], or [`ExperimentError::InfinitePrice`]
/// when the configuration asks to carry on past an AIP failure.
pub fn check_no_arbitrage(
    cfg: &ExperimentConfig,
    model: &MarketModel,
) -> Result<(), ExperimentError> {
    let report = check_aip(model);
    let Some(step) = report.violations().next() else {
        return Ok(());
    };
    let s = model.step(step);
    if cfg.clamp_infinite_price {
        return Err(ExperimentError::InfinitePrice {
            step,
            prev: if step == 0 {
                "-1".into()
            } else {
                (step - 1).to_string()
            },
            k_down: s.k_down,
            k_up: s.k_up,
        });
    }
    Err(ExperimentError::Aip {
        step,
        k_down: s.k_down,
        k_up: s.k_up,
    })
}

/// Prices every strike, simulates its hedge and writes the requested files
/// into `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let model = cfg.market_model();
    check_no_arbitrage(cfg, &model)?;

    let claims = cfg
        .strikes
        .iter()
        .map(|&k| PricedClaim::price(cfg, &model, k))
        .collect::<Result<Vec<_>, _>>()?;
    let protocol = ExecutionProtocol::interior(cfg.horizon).with_straddle(cfg.straddle);
    let rng = RngConfig::new(cfg.seed);
    let source = |i: usize| PathSource {
        model: &model,
        claim: claims[i].as_claim(),
        protocol: &protocol,
        rng,
        stream: i as u64,
    };

    let mut results = Vec::with_capacity(claims.len());
    for (i, claim) in claims.iter().enumerate() {
        results.push(StrikeResult {
            strike: cfg.strikes[i],
            premium: claim.initial_premium(&model),
            stats: source(i).stats(cfg.n_paths)?,
        });
    }

    fs::create_dir_all(out_dir).map_err(|e| ExperimentError::io(out_dir, e))?;
    let mut files = Vec::new();
    let emit = |files: &mut Vec<PathBuf>, name: String, body: String| {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| ExperimentError::io(&path, e))?;
        files.push(path);
        Ok::<_, ExperimentError>(())
    };

    emit(&mut files, "config.txt".into(), cfg.render())?;
    if cfg.outputs.stats {
        emit(&mut files, "stats.txt".into(), report::stats_text(&results))?;
        emit(&mut files, "stats.csv".into(), report::stats_csv(&results)?)?;
        emit(
            &mut files,
            "premium.csv".into(),
            report::premium_csv(&results)?,
        )?;
    }
    for (i, res) in results.iter().enumerate() {
        let tag = report::strike_tag(res.strike);
        if cfg.outputs.histograms {
            let hist = source(i).histograms(cfg.n_paths, &res.stats, cfg.histogram_bins)?;
            for (t, h) in hist.prices.iter().enumerate() {
                emit(
                    &mut files,
                    format!("hist_K{tag}_S{t}.csv"),
                    report::histogram_csv(h)?,
                )?;
            }
            emit(
                &mut files,
                format!("hist_K{tag}_eps_r.csv"),
                report::histogram_csv(&hist.eps_r)?,
            )?;
        }
        if cfg.outputs.dump_paths {
            let path = out_dir.join(format!("paths_K{tag}.csv"));
            let mut writer = report::PathWriter::create(&path, cfg.horizon)?;
            source(i).for_each(cfg.n_paths, |id, p: &SimPath| writer.push(id, p))?;
            files.push(writer.finish()?);
        }
        if cfg.outputs.export_strategy {
            let dates = match cfg.payoff {
                // the position after date 0 depends on the whole history
                PayoffSpec::AsianCall => 1,
                _ => cfg.horizon,
            };
            for t in 0..dates {
                let table = report::strategy_csv(claims[i].as_claim(), &model, t)?;
                emit(&mut files, format!("strategy_K{tag}_t{t}.csv"), table)?;
            }
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        results,
        files,
    })
}
