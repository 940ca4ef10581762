//! Continuous piecewise-linear functions on the half-line `[0, ∞)`.
//!
//! A [`PwlFunction`] is stored as a strictly increasing list of breakpoints
//! with their values, plus the slope of the affine extension on each side.
//! Every payoff, value function, concave envelope and dominating affine
//! function used by the pricer is one of these, so kinks are carried exactly
//! through the backward recursion instead of being sampled on a grid.

use thiserror::Error;

/// Absolute tolerance used by domination tests and breakpoint merging.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("evaluation point {0} is negative")]
    NegativeArgument(f64),
    #[error("breakpoints and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("a piecewise-linear function needs at least one breakpoint")]
    Empty,
    #[error("breakpoints must be finite, nonnegative and strictly increasing (index {0})")]
    BadBreakpoints(usize),
    #[error("non-finite value or slope")]
    NonFinite,
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("mixing weight must lie in [0, 1], got {0}")]
    WeightOutOfRange(f64),
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("{x} lies outside [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
}

/// Closed interval `[lo, hi]` of nonnegative prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PwlError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(PwlError::BadInterval(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Support interval `[lo_ratio·s, hi_ratio·s]` attached to a price `s`.
    pub fn scaled(s: f64, lo_ratio: f64, hi_ratio: f64) -> Result<Self, PwlError> {
        Self::new(s * lo_ratio, s * hi_ratio)
    }
}

/// `x ↦ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFunction {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineFunction {
    pub fn new(slope: f64, intercept: f64) -> Result<Self, PwlError> {
        if !(slope.is_finite() && intercept.is_finite()) {
            return Err(PwlError::NonFinite);
        }
        Ok(Self { slope, intercept })
    }

    /// The affine function with the given slope passing through `(x, y)`.
    pub fn through(x: f64, y: f64, slope: f64) -> Self {
        Self {
            slope,
            intercept: y - slope * x,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEFAULT_TOL * a.abs().max(b.abs()).max(1.0)
}

impl PwlFunction {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self, PwlError> {
        if breakpoints.len() != values.len() {
            return Err(PwlError::LengthMismatch(breakpoints.len(), values.len()));
        }
        if breakpoints.is_empty() {
            return Err(PwlError::Empty);
        }
        for (i, &x) in breakpoints.iter().enumerate() {
            if !x.is_finite() || x < 0.0 || (i > 0 && x <= breakpoints[i - 1]) {
                return Err(PwlError::BadBreakpoints(i));
            }
        }
        if !(values.iter().all(|y| y.is_finite())
            && left_slope.is_finite()
            && right_slope.is_finite())
        {
            return Err(PwlError::NonFinite);
        }
        Ok(Self {
            xs: breakpoints,
            ys: values,
            left_slope,
            right_slope,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![c],
            left_slope: 0.0,
            right_slope: 0.0,
        }
    }

    pub fn affine(a: AffineFunction) -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![a.intercept],
            left_slope: a.slope,
            right_slope: a.slope,
        }
    }

    /// `x ↦ (x − strike)^+`
    pub fn call(strike: f64) -> Result<Self, PwlError> {
        Self::new(vec![strike], vec![0.0], 0.0, 1.0)
    }

    /// `x ↦ (strike − x)^+`
    pub fn put(strike: f64) -> Result<Self, PwlError> {
        Self::new(vec![strike], vec![0.0], -1.0, 0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn eval(&self, x: f64) -> Result<f64, PwlError> {
        if x < 0.0 || x.is_nan() {
            return Err(PwlError::NegativeArgument(x));
        }
        Ok(self.value_at(x))
    }

    /// Evaluation without the domain check; negative `x` follows the left extension.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] - self.left_slope * (self.xs[0] - x);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]);
        }
        let i = self.xs.partition_point(|&b| b <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slopes of consecutive linear pieces, left to right. The left extension
    /// only counts when the first breakpoint is strictly positive.
    pub fn segment_slopes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len() + 1);
        if self.xs[0] > 0.0 {
            out.push(self.left_slope);
        }
        out.extend(
            self.xs
                .windows(2)
                .zip(self.ys.windows(2))
                .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])),
        );
        out.push(self.right_slope);
        out
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.segment_slopes()
            .windows(2)
            .all(|w| w[1] - w[0] >= -tol * w[0].abs().max(w[1].abs()).max(1.0))
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.segment_slopes()
            .windows(2)
            .all(|w| w[0] - w[1] >= -tol * w[0].abs().max(w[1].abs()).max(1.0))
    }

    /// Left and right derivatives at `x`.
    pub fn one_sided_slopes(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let seg = |i: usize| (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]);
        // index of the first breakpoint >= x (up to tolerance)
        let j = self.xs.partition_point(|&b| b < x && !near(b, x));
        if j < n && near(self.xs[j], x) {
            let left = if j == 0 { self.left_slope } else { seg(j - 1) };
            let right = if j == n - 1 { self.right_slope } else { seg(j) };
            return (left, right);
        }
        let s = if j == 0 {
            self.left_slope
        } else if j == n {
            self.right_slope
        } else {
            seg(j - 1)
        };
        (s, s)
    }

    /// Smallest and largest value over the breakpoints that fall inside `dom`
    /// together with the two endpoints. For piecewise-linear functions this is
    /// the exact range on `dom`.
    pub fn extrema_on(&self, dom: Interval) -> (f64, f64) {
        self.sample_points(dom)
            .map(|x| self.value_at(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y), hi.max(y))
            })
    }

    fn sample_points(&self, dom: Interval) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(dom.lo)
            .chain(
                self.xs
                    .iter()
                    .copied()
                    .filter(move |&x| dom.lo < x && x < dom.hi),
            )
            .chain(std::iter::once(dom.hi))
    }

    /// `x ↦ f(k·x)`.
    pub fn scale_compose(&self, k: f64) -> Result<Self, PwlError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(PwlError::NonPositiveScale(k));
        }
        Ok(Self {
            xs: self.xs.iter().map(|x| x / k).collect(),
            ys: self.ys.clone(),
            left_slope: self.left_slope * k,
            right_slope: self.right_slope * k,
        })
    }

    /// `λ·f + (1 − λ)·g` on the merged breakpoint set.
    pub fn convex_combine(f: &Self, g: &Self, lambda: f64) -> Result<Self, PwlError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(PwlError::WeightOutOfRange(lambda));
        }
        let xs = merge_breakpoints(&f.xs, &g.xs);
        let ys = xs
            .iter()
            .map(|&x| lambda * f.value_at(x) + (1.0 - lambda) * g.value_at(x))
            .collect();
        Ok(Self {
            xs,
            ys,
            left_slope: lambda * f.left_slope + (1.0 - lambda) * g.left_slope,
            right_slope: lambda * f.right_slope + (1.0 - lambda) * g.right_slope,
        })
    }
}

/// Sorted union of two breakpoint lists; near-coincident points are merged.
fn merge_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        let x = if take_a {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&last) if near(last, x) => {}
            _ => out.push(x),
        }
    }
    out
}

/// Which end of the domain a superdifferential was taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
    /// The domain is a single point.
    Degenerate,
}

/// Range `[lo, hi]` of admissible slopes at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRange {
    pub lo: f64,
    pub hi: f64,
    pub boundary: Option<Boundary>,
}

impl SlopeRange {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, slope: f64) -> bool {
        self.lo <= slope && slope <= self.hi
    }
}

/// Smallest concave function dominating `f` on a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveEnvelope {
    hull: PwlFunction,
    domain: Interval,
}

impl ConcaveEnvelope {
    /// The envelope as a piecewise-linear function. Only meaningful on [`Self::domain`].
    pub fn function(&self) -> &PwlFunction {
        &self.hull
    }

    pub fn into_function(self) -> PwlFunction {
        self.hull
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn is_degenerate(&self) -> bool {
        self.domain.is_degenerate()
    }

    pub fn eval(&self, x: f64) -> Result<f64, PwlError> {
        self.check(x)?;
        Ok(self.hull.value_at(x))
    }

    pub fn superdifferential(&self, x: f64) -> Result<SlopeRange, PwlError> {
        superdifferential(&self.hull, x, self.domain)
    }

    fn check(&self, x: f64) -> Result<(), PwlError> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(PwlError::OutsideDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Upper hull of the graph of `f` over `dom` (monotone chain over the domain
/// endpoints and the interior breakpoints).
pub fn upper_concave_envelope(f: &PwlFunction, dom: Interval) -> ConcaveEnvelope {
    if dom.is_degenerate() {
        return ConcaveEnvelope {
            hull: PwlFunction::constant(f.value_at(dom.lo)),
            domain: dom,
        };
    }

    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(f.xs.len() + 2);
    for x in f.sample_points(dom) {
        let y = f.value_at(x);
        match pts.last_mut() {
            Some(last) if near(last.0, x) => {
                if y > last.1 {
                    last.1 = y;
                }
            }
            _ => pts.push((x, y)),
        }
    }
    if pts.len() < 2 {
        // lo and hi closer than the merge tolerance
        return ConcaveEnvelope {
            hull: PwlFunction::constant(pts[0].1),
            domain: dom,
        };
    }
    // A merged point may have swallowed `hi`; pin the right end of the hull to it.
    if let Some(last) = pts.last_mut() {
        last.0 = dom.hi;
    }

    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }

    let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
    let left = slope(hull[0], hull[1]);
    let right = slope(hull[hull.len() - 2], hull[hull.len() - 1]);
    let (xs, ys) = hull.into_iter().unzip();
    ConcaveEnvelope {
        hull: PwlFunction {
            xs,
            ys,
            left_slope: left,
            right_slope: right,
        },
        domain: dom,
    }
}

/// Superdifferential of a concave `h` at `x ∈ dom`: `[right slope, left slope]`.
/// At an endpoint of `dom` only the inward one-sided slope is returned and the
/// range is tagged with the boundary.
pub fn superdifferential(h: &PwlFunction, x: f64, dom: Interval) -> Result<SlopeRange, PwlError> {
    if !dom.contains(x) {
        return Err(PwlError::OutsideDomain {
            x,
            lo: dom.lo,
            hi: dom.hi,
        });
    }
    let (left, right) = h.one_sided_slopes(x);
    let range = if dom.is_degenerate() {
        SlopeRange {
            lo: 0.0,
            hi: 0.0,
            boundary: Some(Boundary::Degenerate),
        }
    } else if x == dom.lo {
        SlopeRange {
            lo: right,
            hi: right,
            boundary: Some(Boundary::Lower),
        }
    } else if x == dom.hi {
        SlopeRange {
            lo: left,
            hi: left,
            boundary: Some(Boundary::Upper),
        }
    } else {
        SlopeRange {
            lo: right.min(left),
            hi: right.max(left),
            boundary: None,
        }
    };
    Ok(range)
}

/// Whether `a ≥ f − tol` on `dom`, checked at the endpoints and at every
/// breakpoint of `f` inside `dom`.
pub fn dominates(a: &AffineFunction, f: &PwlFunction, dom: Interval, tol: f64) -> bool {
    f.sample_points(dom)
        .all(|x| a.eval(x) >= f.value_at(x) - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn call100() -> PwlFunction {
        PwlFunction::call(100.0).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn eval_call() {
        let f = call100();
        assert_eq!(f.eval(140.0).unwrap(), 40.0);
        assert_eq!(f.eval(100.0).unwrap(), 0.0);
        assert_eq!(f.eval(70.0).unwrap(), 0.0);
        assert_eq!(f.eval(-1.0), Err(PwlError::NegativeArgument(-1.0)));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(PwlFunction::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0, 0.0).is_err());
        assert!(PwlFunction::new(vec![-1.0], vec![0.0], 0.0, 0.0).is_err());
        assert!(PwlFunction::new(vec![1.0], vec![f64::NAN], 0.0, 0.0).is_err());
        assert!(PwlFunction::new(vec![], vec![], 0.0, 0.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn put_payoff() {
        let p = PwlFunction::put(100.0).unwrap();
        assert_eq!(p.value_at(0.0), 100.0);
        assert_eq!(p.value_at(60.0), 40.0);
        assert_eq!(p.value_at(130.0), 0.0);
        assert!(p.is_convex(DEFAULT_TOL));
    }

    #[test]
    fn scale_compose_matches_dense_grid() {
        let f = call100();
        let g = f.scale_compose(1.4).unwrap();
        assert!((g.breakpoints()[0] - 100.0 / 1.4).abs() < 1e-12);
        assert_eq!(g.right_slope(), 1.4);
        for i in 0..=3000 {
            let x = i as f64 * 0.1;
            let direct = (1.4 * x - 100.0f64).max(0.0);
            assert!((g.value_at(x) - direct).abs() < 1e-12, "x={x}");
        }
        assert_eq!(f.scale_compose(1.0).unwrap(), f);
        assert_eq!(
            PwlFunction::zero()
                .scale_compose(3.0)
                .unwrap()
                .value_at(12.0),
            0.0
        );
        assert!(f.scale_compose(0.0).is_err());
        assert!(f.scale_compose(-2.0).is_err());
    }

    #[test]
    fn convex_combine_examples() {
        let f = call100().scale_compose(0.7).unwrap();
        let g = call100().scale_compose(1.4).unwrap();
        let one = PwlFunction::convex_combine(&f, &g, 1.0).unwrap();
        let zero = PwlFunction::convex_combine(&f, &g, 0.0).unwrap();
        for x in [0.0, 50.0, 71.0, 100.0, 142.9, 300.0] {
            assert!((one.value_at(x) - f.value_at(x)).abs() < 1e-12);
            assert!((zero.value_at(x) - g.value_at(x)).abs() < 1e-12);
        }
        let mix = PwlFunction::convex_combine(&f, &g, 4.0 / 7.0).unwrap();
        // branches: 0 and 1.4·100 − 100 = 40
        let expected = (3.0 / 7.0) * 40.0;
        assert!((mix.value_at(100.0) - expected).abs() < 1e-12);
        assert!((mix.value_at(100.0) - 120.0 / 7.0).abs() < 1e-12);
        assert!(mix.is_convex(DEFAULT_TOL));
        assert!(PwlFunction::convex_combine(&f, &g, 1.5).is_err());
        assert!(PwlFunction::convex_combine(&f, &g, -0.1).is_err());
    }

    #[test]
    fn envelope_of_call_is_chord() {
        let env = upper_concave_envelope(&call100(), iv(70.0, 140.0));
        assert!(!env.is_degenerate());
        assert!((env.eval(100.0).unwrap() - 120.0 / 7.0).abs() < 1e-12);
        let h = env.function();
        assert_eq!(h.breakpoints(), &[70.0, 140.0]);
        assert!((h.right_slope() - 4.0 / 7.0).abs() < 1e-15);
        assert!(env.eval(150.0).is_err());
    }

    #[test]
    fn envelope_of_concave_is_itself() {
        let f = PwlFunction::new(vec![1.0, 2.0, 4.0], vec![0.0, 2.0, 3.0], 3.0, -1.0).unwrap();
        assert!(f.is_concave(DEFAULT_TOL));
        let env = upper_concave_envelope(&f, iv(0.5, 6.0));
        for i in 0..=110 {
            let x = 0.5 + i as f64 * 0.05;
            assert!((env.eval(x).unwrap() - f.value_at(x)).abs() < 1e-12);
        }
        let a = PwlFunction::affine(AffineFunction::new(2.0, -1.0).unwrap());
        let env = upper_concave_envelope(&a, iv(1.0, 9.0));
        assert!((env.eval(3.3).unwrap() - a.value_at(3.3)).abs() < 1e-12);
    }

    /// Concave envelope on sample points by brute force over all chords.
    fn brute_envelope(f: &PwlFunction, dom: Interval, n: usize, x: f64) -> f64 {
        let pts: Vec<f64> = (0..=n)
            .map(|i| dom.lo() + dom.width() * i as f64 / n as f64)
            .collect();
        let mut best = f64::NEG_INFINITY;
        for &a in pts.iter().filter(|&&a| a <= x) {
            for &b in pts.iter().filter(|&&b| b >= x) {
                let v = if b == a {
                    f.value_at(a)
                } else {
                    let w = (x - a) / (b - a);
                    (1.0 - w) * f.value_at(a) + w * f.value_at(b)
                };
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn envelope_of_w_shape() {
        let f = PwlFunction::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], -1.0, 1.0).unwrap();
        let dom = iv(0.0, 4.0);
        assert_eq!(f.value_at(0.0), 2.0);
        assert_eq!(f.value_at(4.0), 2.0);
        let env = upper_concave_envelope(&f, dom);
        for i in 0..=40 {
            let x = i as f64 * 0.1;
            let oracle = brute_envelope(&f, dom, 40, x);
            assert!((oracle - 2.0).abs() < 1e-12);
            assert!((env.eval(x).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_envelope() {
        let env = upper_concave_envelope(&call100(), iv(120.0, 120.0));
        assert!(env.is_degenerate());
        assert_eq!(env.eval(120.0).unwrap(), 20.0);
        let sd = env.superdifferential(120.0).unwrap();
        assert_eq!(sd.boundary, Some(Boundary::Degenerate));
    }

    #[test]
    fn superdifferential_examples() {
        let dom = iv(70.0, 140.0);
        let env = upper_concave_envelope(&call100(), dom);
        let sd = env.superdifferential(100.0).unwrap();
        assert!((sd.lo - 4.0 / 7.0).abs() < 1e-15 && (sd.hi - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(sd.boundary, None);

        let kink = PwlFunction::new(vec![0.0, 5.0], vec![0.0, 5.0], 1.0, 0.0).unwrap();
        let sd = superdifferential(&kink, 5.0, iv(0.0, 10.0)).unwrap();
        assert_eq!((sd.lo, sd.hi), (0.0, 1.0));
        assert_eq!(sd.midpoint(), 0.5);

        let lower = superdifferential(&kink, 0.0, iv(0.0, 10.0)).unwrap();
        assert_eq!(
            (lower.lo, lower.hi, lower.boundary),
            (1.0, 1.0, Some(Boundary::Lower))
        );
        let upper = superdifferential(&kink, 10.0, iv(0.0, 10.0)).unwrap();
        assert_eq!(
            (upper.lo, upper.hi, upper.boundary),
            (0.0, 0.0, Some(Boundary::Upper))
        );

        let aff = PwlFunction::affine(AffineFunction::new(-0.3, 2.0).unwrap());
        let sd = superdifferential(&aff, 4.0, iv(1.0, 9.0)).unwrap();
        assert_eq!((sd.lo, sd.hi), (-0.3, -0.3));

        assert!(superdifferential(&kink, 11.0, iv(0.0, 10.0)).is_err());
    }

    #[test]
    fn dominates_examples() {
        let f = call100();
        let dom = iv(70.0, 140.0);
        let chord = AffineFunction::through(70.0, 0.0, 4.0 / 7.0);
        assert!(dominates(&chord, &f, dom, DEFAULT_TOL));
        let lower = AffineFunction::new(chord.slope, chord.intercept - 1.0).unwrap();
        assert!(!dominates(&lower, &f, dom, DEFAULT_TOL));
        let identity = AffineFunction::new(1.0, 0.0).unwrap();
        assert!(dominates(&identity, &f, iv(0.0, 200.0), 0.0));
    }

    #[test]
    fn extrema() {
        let f = PwlFunction::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], -1.0, 1.0).unwrap();
        assert_eq!(f.extrema_on(iv(0.5, 3.5)), (0.0, 1.5));
    }

    fn arb_pwl() -> impl Strategy<Value = PwlFunction> {
        (
            prop::collection::vec((0.01f64..5.0, -10.0f64..10.0), 1..8),
            0.0f64..3.0,
            -3.0f64..3.0,
            -3.0f64..3.0,
        )
            .prop_map(|(steps, start, l, r)| {
                let mut x = start;
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for (dx, y) in steps {
                    xs.push(x);
                    ys.push(y);
                    x += dx;
                }
                PwlFunction::new(xs, ys, l, r).unwrap()
            })
    }

    proptest! {
        #[test]
        fn envelope_dominates_and_is_concave(f in arb_pwl(), a in 0.0f64..10.0, w in 0.01f64..10.0) {
            let dom = iv(a, a + w);
            let env = upper_concave_envelope(&f, dom);
            prop_assert!(env.function().is_concave(1e-9));
            for i in 0..=200 {
                let x = (a + w * i as f64 / 200.0).min(dom.hi());
                prop_assert!(env.eval(x).unwrap() >= f.value_at(x) - 1e-9);
            }
        }

        #[test]
        fn scale_and_combine_agree_with_pointwise(f in arb_pwl(), a in 0.1f64..3.0, b in 0.1f64..3.0, lam in 0.0f64..=1.0) {
            let mix = PwlFunction::convex_combine(
                &f.scale_compose(a).unwrap(),
                &f.scale_compose(b).unwrap(),
                lam,
            ).unwrap();
            for i in 0..=100 {
                let x = i as f64 * 0.2;
                let direct = lam * f.value_at(a * x) + (1.0 - lam) * f.value_at(b * x);
                prop_assert!((mix.value_at(x) - direct).abs() <= 1e-12 * direct.abs().max(1.0) * 10.0);
            }
        }
    }
}
