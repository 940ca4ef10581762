//! Text and CSV renderings of experiment results.

use std::fs::File;
use std::path::{Path, PathBuf};

use superhedge_core::pricer::{HedgeClaim, MarketModel};
use superhedge_core::sim::{Histogram, SimPath, SimStats};

use crate::experiment::{ExperimentError, StrikeResult};

const STRATEGY_GRID: usize = 201;

/// Strike as it appears in file names: `100`, `62.5`.
pub fn strike_tag(strike: f64) -> String {
    strike.to_string()
}

/// Six significant digits, switching to exponent form for very small or
/// large magnitudes.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn table(results: &[StrikeResult]) -> Vec<(String, Vec<f64>)> {
    let horizon = results.first().map_or(0, |r| r.stats.horizon());
    let columns: Vec<Vec<(String, f64)>> = results.iter().map(|r| r.stats.rows()).collect();
    let mut rows = vec![("K".to_string(), results.iter().map(|r| r.strike).collect())];
    for (i, label) in SimStats::row_labels(horizon).into_iter().enumerate() {
        rows.push((label, columns.iter().map(|c| c[i].1).collect()));
    }
    rows
}

/// Aligned table: one row per statistic, one column per strike.
pub fn stats_text(results: &[StrikeResult]) -> String {
    let rows: Vec<(String, Vec<String>)> = table(results)
        .into_iter()
        .map(|(label, vals)| (label, vals.into_iter().map(sig6).collect()))
        .collect();
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let col_w = rows
        .iter()
        .flat_map(|r| r.1.iter().map(String::len))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (label, cells) in rows {
        out.push_str(&format!("{label:<label_w$}"));
        for c in cells {
            out.push_str(&format!("  {c:>col_w$}"));
        }
        out.push('\n');
    }
    out
}

fn csv_string<F>(fill: F) -> Result<String, ExperimentError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let mem = Path::new("<memory>");
    fill(&mut w).map_err(|e| ExperimentError::csv(mem, e))?;
    let bytes = w
        .into_inner()
        .map_err(|e| ExperimentError::io(mem, e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Same layout as [`stats_text`] at full precision.
pub fn stats_csv(results: &[StrikeResult]) -> Result<String, ExperimentError> {
    csv_string(|w| {
        for (label, vals) in table(results) {
            let mut rec = vec![label];
            rec.extend(vals.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn premium_csv(results: &[StrikeResult]) -> Result<String, ExperimentError> {
    csv_string(|w| {
        w.write_record(["strike", "premium"])?;
        for r in results {
            w.write_record([r.strike.to_string(), r.premium.to_string()])?;
        }
        Ok(())
    })
}

pub fn histogram_csv(h: &Histogram) -> Result<String, ExperimentError> {
    csv_string(|w| {
        w.write_record(["bin_lo", "bin_hi", "count"])?;
        for (lo, hi, c) in h.bins() {
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        Ok(())
    })
}

/// `θ_t` sampled on an even grid over the support of `S_t`.
pub fn strategy_csv(
    claim: &dyn HedgeClaim,
    model: &MarketModel,
    t: usize,
) -> Result<String, ExperimentError> {
    let (lo, hi) = model.steps()[..=t]
        .iter()
        .fold((model.s_init(), model.s_init()), |(lo, hi), s| {
            (lo * s.k_down, hi * s.k_up)
        });
    csv_string(|w| {
        w.write_record(["z", "theta"])?;
        for i in 0..STRATEGY_GRID {
            let z = if i + 1 == STRATEGY_GRID {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (STRATEGY_GRID - 1) as f64
            };
            let theta = claim.theta(&vec![z; t + 1]);
            w.write_record([z.to_string(), theta.to_string()])?;
        }
        Ok(())
    })
}

pub fn path_header(horizon: usize) -> Vec<String> {
    let mut h = vec!["path_id".to_string()];
    h.extend((0..=horizon).map(|t| format!("S_{t}")));
    for t in 1..horizon {
        h.push(format!("bid_{t}"));
        h.push(format!("ask_{t}"));
    }
    h.extend((0..horizon).map(|t| format!("theta_{t}")));
    h.extend((0..=horizon).map(|t| format!("V_{t}")));
    h.push("eps_r".into());
    h
}

fn quote(q: Option<f64>) -> String {
    q.map(|x| x.to_string()).unwrap_or_default()
}

pub fn path_record(id: u64, p: &SimPath) -> Vec<String> {
    let horizon = p.theta.len();
    let mut rec = vec![id.to_string()];
    rec.extend(p.s.iter().map(f64::to_string));
    for t in 1..horizon {
        rec.push(quote(p.bid[t]));
        rec.push(quote(p.ask[t]));
    }
    rec.extend(p.theta.iter().map(f64::to_string));
    rec.extend(p.v.iter().map(f64::to_string));
    rec.push(p.eps_r.to_string());
    rec
}

/// Streams the per-path dump straight to disk.
pub struct PathWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl PathWriter {
    pub fn create(path: &Path, horizon: usize) -> Result<Self, ExperimentError> {
        let mut inner = csv::Writer::from_path(path).map_err(|e| ExperimentError::csv(path, e))?;
        inner
            .write_record(path_header(horizon))
            .map_err(|e| ExperimentError::csv(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn push(&mut self, id: u64, p: &SimPath) -> Result<(), ExperimentError> {
        self.inner
            .write_record(path_record(id, p))
            .map_err(|e| ExperimentError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, ExperimentError> {
        self.inner
            .flush()
            .map_err(|e| ExperimentError::io(&self.path, e))?;
        Ok(self.path)
    }
}
