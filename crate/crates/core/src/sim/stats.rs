use super::SimPath;

/// Running count, mean, sum of squared deviations, min and max.
///
/// Values are added with Welford's update and batches are combined with
/// Chan's pairwise formula, so merging per-batch accumulators in a fixed
/// order gives the same bits whatever thread computed each batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample standard deviation; zero for a single observation.
    pub fn std_dev(&self) -> f64 {
        match self.n {
            0 => f64::NAN,
            1 => 0.0,
            n => (self.m2 / (n - 1) as f64).sqrt(),
        }
    }

    pub fn min(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.min
        }
    }

    pub fn max(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.max
        }
    }
}

/// Aggregate statistics of a batch of simulated hedges.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    s_init: f64,
    prices: Vec<Moments>,
    v0: Moments,
    v0_over_s_init: Moments,
    v0_over_s0: Moments,
    eps_r: Moments,
    /// `θ_t S_t / V_t`, skipping paths with `V_t = 0`.
    exposure: Vec<Moments>,
}

impl SimStats {
    pub fn new(horizon: usize, s_init: f64) -> Self {
        Self {
            s_init,
            prices: vec![Moments::default(); horizon + 1],
            v0: Moments::default(),
            v0_over_s_init: Moments::default(),
            v0_over_s0: Moments::default(),
            eps_r: Moments::default(),
            exposure: vec![Moments::default(); horizon],
        }
    }

    pub fn push(&mut self, path: &SimPath) {
        for (m, &s) in self.prices.iter_mut().zip(&path.s) {
            m.push(s);
        }
        let v0 = path.v[0];
        self.v0.push(v0);
        self.v0_over_s_init.push(v0 / self.s_init);
        self.v0_over_s0.push(v0 / path.s[0]);
        self.eps_r.push(path.eps_r);
        for (t, m) in self.exposure.iter_mut().enumerate() {
            if path.v[t] != 0.0 {
                m.push(path.theta[t] * path.s[t] / path.v[t]);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.prices.iter_mut().zip(&other.prices) {
            a.merge(b);
        }
        self.v0.merge(&other.v0);
        self.v0_over_s_init.merge(&other.v0_over_s_init);
        self.v0_over_s0.merge(&other.v0_over_s0);
        self.eps_r.merge(&other.eps_r);
        for (a, b) in self.exposure.iter_mut().zip(&other.exposure) {
            a.merge(b);
        }
    }

    pub fn horizon(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn n_paths(&self) -> u64 {
        self.eps_r.count()
    }

    pub fn price(&self, t: usize) -> &Moments {
        &self.prices[t]
    }

    pub fn v0(&self) -> &Moments {
        &self.v0
    }

    pub fn v0_over_s_init(&self) -> &Moments {
        &self.v0_over_s_init
    }

    pub fn v0_over_s0(&self) -> &Moments {
        &self.v0_over_s0
    }

    pub fn eps_r(&self) -> &Moments {
        &self.eps_r
    }

    pub fn exposure(&self, t: usize) -> &Moments {
        &self.exposure[t]
    }

    /// Row labels of [`Self::rows`], in order.
    pub fn row_labels(horizon: usize) -> Vec<String> {
        let mut labels: Vec<String> = (0..=horizon).map(|t| format!("E(S_{t})")).collect();
        labels.extend(
            [
                "E(V_0)",
                "max V_0",
                "E(V_0/S_-1)",
                "E(V_0/S_0)",
                "min(V_0/S_0)",
                "max(V_0/S_0)",
                "E(eps_R)",
                "sigma(eps_R)",
                "min eps_R",
                "max eps_R",
            ]
            .map(String::from),
        );
        labels.extend((0..horizon).map(|t| format!("E(theta_{t} S_{t}/V_{t})")));
        labels
    }

    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut values: Vec<f64> = self.prices.iter().map(Moments::mean).collect();
        values.extend([
            self.v0.mean(),
            self.v0.max(),
            self.v0_over_s_init.mean(),
            self.v0_over_s0.mean(),
            self.v0_over_s0.min(),
            self.v0_over_s0.max(),
            self.eps_r.mean(),
            self.eps_r.std_dev(),
            self.eps_r.min(),
            self.eps_r.max(),
        ]);
        values.extend(self.exposure.iter().map(Moments::mean));
        Self::row_labels(self.horizon())
            .into_iter()
            .zip(values)
            .collect()
    }
}

/// Fixed-width histogram over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            hi,
            counts: vec![0; bins.max(1)],
        }
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let width = self.hi - self.lo;
        let idx = if width > 0.0 {
            (((x - self.lo) / width) * bins as f64)
                .floor()
                .clamp(0.0, (bins - 1) as f64) as usize
        } else {
            0
        };
        self.counts[idx] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `(bin_lo, bin_hi, count)` rows.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let n = self.counts.len();
        let width = (self.hi - self.lo) / n as f64;
        self.counts.iter().enumerate().map(move |(i, &c)| {
            let lo = self.lo + width * i as f64;
            let hi = if i + 1 == n {
                self.hi
            } else {
                self.lo + width * (i + 1) as f64
            };
            (lo, hi, c)
        })
    }
}
