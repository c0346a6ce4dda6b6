//! Candidate actuator domains and the superlevel-set (bathtub) step.
//!
//! A domain is a finite union of disjoint open subintervals of `(0, π)`.
//! The bathtub step selects, among all domains of prescribed measure, the one
//! maximizing `∫_ω p` for a nonnegative combination `p = Σ w_j φ_j²` of
//! squared eigenfunctions: it is the superlevel set `{p > λ}` whose measure
//! matches the budget.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Intervals shorter than this are dropped when building a union.
pub const MIN_LENGTH: f64 = 1e-12;
/// Gaps shorter than this are closed when counting connected components.
pub const COMPONENT_GAP: f64 = 1e-9;
/// Endpoint slack tolerated outside `[0, π]` before reporting a domain error.
const ENDPOINT_SLACK: f64 = 1e-12;

/// Sorted, pairwise disjoint union of subintervals of `[0, π]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Builds a union from arbitrary (possibly unsorted or overlapping)
    /// intervals. Overlapping or touching pieces are merged, pieces shorter
    /// than [`MIN_LENGTH`] are dropped.
    pub fn new(mut raw: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &raw {
            if !(a.is_finite() && b.is_finite()) {
                return domain(format!("non-finite interval ({a}, {b})"));
            }
            if a < -ENDPOINT_SLACK || b > PI + ENDPOINT_SLACK {
                return domain(format!("interval ({a}, {b}) is not contained in [0, π]"));
            }
            if b < a {
                return domain(format!("interval ({a}, {b}) has reversed endpoints"));
            }
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            let (a, b) = (a.max(0.0), b.min(PI));
            match intervals.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => intervals.push((a, b)),
            }
        }
        intervals.retain(|&(a, b)| b - a >= MIN_LENGTH);
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole domain `(0, π)`.
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, PI)],
        }
    }

    /// Single interval of length `fraction·π` centered at `π/2`.
    pub fn centered(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return domain(format!("fraction {fraction} must lie in (0, 1]"));
        }
        let half = 0.5 * fraction * PI;
        Self::new(vec![(0.5 * PI - half, 0.5 * PI + half)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    /// Measure of the symmetric difference, by a sweep over sorted endpoints.
    pub fn symdiff_measure(&self, other: &IntervalUnion) -> f64 {
        // (position, which set, +1 open / -1 close)
        let mut events: Vec<(f64, usize, i32)> =
            Vec::with_capacity(2 * (self.intervals.len() + other.intervals.len()));
        for (set, u) in [self, other].into_iter().enumerate() {
            for &(a, b) in &u.intervals {
                events.push((a, set, 1));
                events.push((b, set, -1));
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut depth = [0i32; 2];
        let mut total = 0.0;
        let mut prev = 0.0;
        for (x, set, delta) in events {
            if (depth[0] > 0) != (depth[1] > 0) {
                total += x - prev;
            }
            depth[set] += delta;
            prev = x;
        }
        total
    }

    /// Number of connected components once gaps below [`COMPONENT_GAP`] are closed.
    pub fn component_count(&self) -> usize {
        let mut count = 0;
        let mut prev_end = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            if a - prev_end >= COMPONENT_GAP {
                count += 1;
            }
            prev_end = b;
        }
        count
    }

    /// Interval file: one `a,b` pair per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.intervals {
            let _ = writeln!(out, "{a:.16e},{b:.16e}");
        }
        out
    }

    /// Parses the interval file format. Blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let parse = |f: Option<&str>| -> Result<f64> {
                f.ok_or_else(|| Error::Parse(format!("line {}: expected `a,b`", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let a = parse(fields.next())?;
            let b = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Parse(format!(
                    "line {}: expected exactly two fields",
                    lineno + 1
                )));
            }
            raw.push((a, b));
        }
        Self::new(raw)
    }
}

/// Nonnegative combination `x ↦ Σ_j w_j φ_j(x)²` of squared normalized sine
/// modes, `φ_j(x) = sqrt(2/π)·sin(jx)`.
///
/// As a function of `cos x` this is a polynomial of degree at most `2N`, so a
/// superlevel set has at most `N` components.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCombination {
    weights: Vec<f64>,
}

impl ModeCombination {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return domain("mode combination needs at least one weight");
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return domain(format!("mode weight {w} is not a finite nonnegative number"));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return domain("mode combination has all weights zero");
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of modes `N`.
    pub fn modes(&self) -> usize {
        self.weights.len()
    }

    /// Evaluates `p(x)`, using `sin²(jx) = (1 − cos 2jx)/2` and the Chebyshev
    /// recurrence for `cos 2jx`.
    pub fn eval(&self, x: f64) -> f64 {
        let c2 = (2.0 * x).cos();
        let (mut prev, mut cur) = (1.0, c2);
        let mut acc = 0.0;
        for &w in &self.weights {
            acc += w * (1.0 - cur);
            let next = 2.0 * c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        acc / PI
    }

    /// Derivative `p'(x) = (2/π) Σ_j w_j j sin(2jx)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let c2 = (2.0 * x).cos();
        let (mut prev, mut cur) = (0.0, (2.0 * x).sin());
        let mut acc = 0.0;
        for (j, &w) in self.weights.iter().enumerate() {
            acc += w * (j + 1) as f64 * cur;
            let next = 2.0 * c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        2.0 * acc / PI
    }
}

/// Chebyshev series `Σ_k a_k T_k(c)` on `[−1, 1]`.
struct Chebyshev(Vec<f64>);

impl Chebyshev {
    fn eval(&self, c: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &a in self.0.iter().skip(1).rev() {
            let b0 = a + 2.0 * c * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.0[0] + c * b1 - b2
    }

    fn derivative(&self) -> Self {
        let n = self.0.len();
        let mut d = vec![0.0; n.saturating_sub(1).max(1)];
        for k in (1..n).rev() {
            let next = if k + 1 < n - 1 { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.0[k];
        }
        d[0] *= 0.5;
        Self(d)
    }

    /// Sign-changing roots in `(−1, 1)`, sorted. Critical points split the
    /// interval into monotone pieces, each holding at most one root.
    fn roots(&self) -> Vec<f64> {
        if self.0.len() < 2 {
            return Vec::new();
        }
        let mut breaks = vec![-1.0];
        breaks.extend(self.derivative().roots());
        breaks.push(1.0);
        breaks
            .windows(2)
            .filter_map(|w| {
                let (mut lo, mut hi) = (w[0], w[1]);
                let lo_sign = self.eval(lo) > 0.0;
                if lo_sign == (self.eval(hi) > 0.0) {
                    return None;
                }
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break Some(mid);
                    }
                    if (self.eval(mid) > 0.0) == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            })
            .collect()
    }
}

/// A combination split at its critical points into monotone pieces.
struct SampledCombination<'a> {
    p: &'a ModeCombination,
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> SampledCombination<'a> {
    /// `p(x) = P(cos 2x)` with `P(c) = Σ_j w_j (1 − T_j(c))/π`, so critical
    /// points are `x = π/2` and the preimages of the critical points of `P`.
    fn new(p: &'a ModeCombination) -> Self {
        let mut coeffs = vec![p.weights.iter().sum::<f64>() / PI];
        coeffs.extend(p.weights.iter().map(|w| -w / PI));
        let mut xs = vec![0.0, PI / 2.0, PI];
        for c in Chebyshev(coeffs).derivative().roots() {
            let x = 0.5 * c.acos();
            if x > 0.0 && x < PI / 2.0 {
                xs.extend([x, PI - x]);
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values = xs.iter().map(|&x| p.eval(x)).collect();
        Self { p, xs, values }
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn superlevel(&self, level: f64) -> IntervalUnion {
        let inside = |v: f64| v - level > 0.0;
        let mut raw = Vec::new();
        let mut start = if inside(self.values[0]) { Some(0.0) } else { None };
        for i in 1..self.xs.len() {
            let (was, is) = (inside(self.values[i - 1]), inside(self.values[i]));
            if was == is {
                continue;
            }
            let x = self.refine(self.xs[i - 1], self.xs[i], was, level);
            if is {
                start = Some(x);
            } else if let Some(a) = start.take() {
                raw.push((a, x));
            }
        }
        if let Some(a) = start {
            raw.push((a, PI));
        }
        // Roots are sorted and disjoint by construction.
        IntervalUnion::new(raw).expect("superlevel set endpoints lie in [0, π]")
    }

    /// Bisection on the sign of `p − level` down to 1e-13 in `x`.
    fn refine(&self, mut lo: f64, mut hi: f64, lo_inside: bool, level: f64) -> f64 {
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.p.eval(mid) - level > 0.0) == lo_inside {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `{x ∈ (0,π) : p(x) > level}` as an interval union.
///
/// Between consecutive critical points `p` is monotone, so each piece holds at
/// most one boundary point, found by bisection. A level below the minimum of `p` yields the full
/// domain, one above its maximum the empty set.
pub fn superlevel_set(p: &ModeCombination, level: f64) -> IntervalUnion {
    SampledCombination::new(p).superlevel(level)
}

/// Result of the bathtub step.
#[derive(Debug, Clone, PartialEq)]
pub struct Bathtub {
    pub omega: IntervalUnion,
    pub level: f64,
}

/// Absolute tolerance on `|measure(ω) − Lπ|` guaranteed by [`bathtub`].
pub const BATHTUB_MEASURE_TOL: f64 = 1e-10;
const BATHTUB_TARGET_TOL: f64 = 1e-14;
const PLATEAU_JUMP: f64 = 1e-6 * PI;

/// Superlevel set of `p` with measure `fraction·π`.
///
/// The level is located by a bracketing search (Newton steps on the measure,
/// whose derivative is `−Σ_b 1/|p'(x_b)|` over boundary points, safeguarded by
/// bisection). Measure is nonincreasing in the level; a jump larger than
/// `1e-6·π` across an unsplittable bracket means `p` is constant on a set of
/// positive measure, reported as [`Error::DegenerateCombination`].
pub fn bathtub(p: &ModeCombination, fraction: f64) -> Result<Bathtub> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return domain(format!("measure fraction L = {fraction} must lie in (0, 1)"));
    }
    let target = fraction * PI;
    let sampled = SampledCombination::new(p);

    let mut lo = 0.0;
    let mut lo_measure = PI;
    let mut hi = sampled.max_value();
    let mut hi_set = sampled.superlevel(hi);
    while hi_set.measure() > target {
        hi = hi * 2.0 + f64::MIN_POSITIVE;
        hi_set = sampled.superlevel(hi);
    }
    let mut hi_measure = hi_set.measure();
    let mut best = (hi_set, hi, (hi_measure - target).abs());

    let mut level = lo + (hi - lo) * (lo_measure - target) / (lo_measure - hi_measure);
    for _ in 0..200 {
        if !(level > lo && level < hi) {
            level = 0.5 * (lo + hi);
        }
        if level <= lo || level >= hi {
            break;
        }
        let set = sampled.superlevel(level);
        let m = set.measure();
        let err = (m - target).abs();
        let slope: f64 = set
            .intervals()
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&x| x > 0.0 && x < PI)
            .map(|x| 1.0 / p.derivative(x).abs().max(1e-300))
            .sum();
        if err < best.2 {
            best = (set, level, err);
        }
        if err <= BATHTUB_TARGET_TOL {
            break;
        }
        if m > target {
            lo = level;
            lo_measure = m;
        } else {
            hi = level;
            hi_measure = m;
        }
        level = if slope.is_finite() && slope > 0.0 {
            level + (m - target) / slope
        } else {
            0.5 * (lo + hi)
        };
        // Fall back to bisection when Newton stalls near the bracket ends.
        let width = hi - lo;
        if !(level > lo + 1e-3 * width && level < hi - 1e-3 * width) {
            level = 0.5 * (lo + hi);
        }
    }

    let (omega, level, err) = best;
    if err > BATHTUB_MEASURE_TOL {
        // The bracket cannot be split further: the measure jumps across it.
        return Err(Error::DegenerateCombination {
            level,
            jump: (lo_measure - hi_measure).max(PLATEAU_JUMP.min(err)),
        });
    }
    Ok(Bathtub { omega, level })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(j: usize) -> ModeCombination {
        let mut w = vec![0.0; j];
        w[j - 1] = 1.0;
        ModeCombination::new(w).unwrap()
    }

    #[test]
    fn chebyshev_derivative_matches_difference() {
        let q = Chebyshev(vec![0.3, -1.2, 0.7, 0.25, -0.4]);
        let dq = q.derivative();
        for &c in &[-0.9, -0.3, 0.0, 0.45, 0.8] {
            let fd = (q.eval(c + 1e-6) - q.eval(c - 1e-6)) / 2e-6;
            assert!((dq.eval(c) - fd).abs() < 1e-8, "{c}: {} vs {fd}", dq.eval(c));
        }
        // T_3 = 4c³ − 3c vanishes at 0 and ±√3/2.
        let roots = Chebyshev(vec![0.0, 0.0, 0.0, 1.0]).roots();
        let expected = [-(3f64.sqrt()) / 2.0, 0.0, 3f64.sqrt() / 2.0];
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().zip(expected).all(|(r, e)| (r - e).abs() < 1e-15));
    }

    #[test]
    fn narrow_bump_is_found() {
        // A shallow local maximum narrower than any practical sampling grid.
        let p = ModeCombination::new(vec![0.3383363848972367, 0.9785439147749985, 0.6611800378057675]).unwrap();
        let b = bathtub(&p, 0.7868852212500825).unwrap();
        assert!((b.omega.measure() - 0.7868852212500825 * PI).abs() <= BATHTUB_MEASURE_TOL);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalUnion::full().measure(), PI);
        let u = IntervalUnion::new(vec![(0.0, 0.5), (1.0, 1.5)]).unwrap();
        assert!((u.measure() - 1.0).abs() < 1e-15);
        assert_eq!(IntervalUnion::empty().measure(), 0.0);
    }

    #[test]
    fn new_merges_and_rejects() {
        let u = IntervalUnion::new(vec![(1.0, 2.0), (0.5, 1.2), (2.5, 2.6)]).unwrap();
        assert_eq!(u.intervals(), &[(0.5, 2.0), (2.5, 2.6)]);
        assert!(IntervalUnion::new(vec![(-0.5, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![(1.0, 4.0)]).is_err());
        assert!(IntervalUnion::new(vec![(2.0, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![(1.0, 1.0 + 1e-14)]).unwrap().is_empty());
    }

    #[test]
    fn symdiff_examples() {
        let a = IntervalUnion::new(vec![(0.0, 1.0)]).unwrap();
        let b = IntervalUnion::new(vec![(0.5, 1.5)]).unwrap();
        assert_eq!(a.symdiff_measure(&a), 0.0);
        assert!((a.symdiff_measure(&b) - 1.0).abs() < 1e-15);
        let u = IntervalUnion::new(vec![(0.2, 0.4), (1.0, 2.0)]).unwrap();
        assert!((u.symdiff_measure(&IntervalUnion::empty()) - u.measure()).abs() < 1e-15);
    }

    #[test]
    fn component_count_examples() {
        assert_eq!(IntervalUnion::centered(0.3).unwrap().component_count(), 1);
        assert_eq!(IntervalUnion::empty().component_count(), 0);
        let close = IntervalUnion::new(vec![(0.1, 0.2), (0.2 + 1e-11, 0.3), (1.0, 1.1)]).unwrap();
        assert_eq!(close.intervals().len(), 3);
        assert_eq!(close.component_count(), 2);
    }

    #[test]
    fn combination_matches_direct_evaluation() {
        let p = ModeCombination::new(vec![0.3, 0.0, 1.7, 0.25, 2.0]).unwrap();
        for i in 0..50 {
            let x = 0.061 * i as f64;
            let direct: f64 = p
                .weights()
                .iter()
                .enumerate()
                .map(|(j, w)| w * 2.0 / PI * ((j + 1) as f64 * x).sin().powi(2))
                .sum();
            assert!((p.eval(x) - direct).abs() < 1e-13);
            let d: f64 = p
                .weights()
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let k = (j + 1) as f64;
                    w * 2.0 / PI * 2.0 * k * (k * x).sin() * (k * x).cos()
                })
                .sum();
            assert!((p.derivative(x) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn superlevel_of_sin_squared() {
        let p = single(1);
        let level = 2.0 / PI * 0.3f64.sin().powi(2);
        let set = superlevel_set(&p, level);
        assert_eq!(set.intervals().len(), 1);
        let (a, b) = set.intervals()[0];
        assert!((a - 0.3).abs() < 1e-10);
        assert!((b - (PI - 0.3)).abs() < 1e-10);
        assert_eq!(superlevel_set(&p, -1.0), IntervalUnion::full());
        assert!(superlevel_set(&p, 1.0).is_empty());
    }

    #[test]
    fn superlevel_of_sin_squared_2x() {
        // sin²(2x) = 1/2 at odd multiples of π/8.
        let p = single(2);
        let set = superlevel_set(&p, 2.0 / PI * 0.5);
        assert_eq!(set.intervals().len(), 2);
        for (i, &(a, b)) in set.intervals().iter().enumerate() {
            let first = (4 * i + 1) as f64 * PI / 8.0;
            assert!((a - first).abs() < 1e-12);
            assert!((b - (first + PI / 4.0)).abs() < 1e-12);
            assert!((p.eval(a) - 1.0 / PI).abs() <= 1e-11);
        }
    }

    #[test]
    fn bathtub_sin_squared_centered() {
        let out = bathtub(&single(1), 0.2).unwrap();
        assert_eq!(out.omega.intervals().len(), 1);
        let (a, b) = out.omega.intervals()[0];
        assert!((a - (0.5 * PI - 0.1 * PI)).abs() < 1e-10);
        assert!((b - (0.5 * PI + 0.1 * PI)).abs() < 1e-10);
        let expected_level = 2.0 / PI * (0.4 * PI).sin().powi(2);
        assert!((out.level - expected_level).abs() < 1e-10);
    }

    #[test]
    fn bathtub_near_full_measure() {
        let out = bathtub(&single(1), 0.999).unwrap();
        assert!((out.omega.measure() - 0.999 * PI).abs() <= 1e-10);
    }

    #[test]
    fn bathtub_sin_squared_2x_half() {
        // Half the domain: level 1/2 (unnormalized), boundaries at odd multiples of π/8.
        let out = bathtub(&single(2), 0.5).unwrap();
        assert_eq!(out.omega.intervals().len(), 2);
        assert_eq!(out.omega.component_count(), 2);
        assert!((out.level - 1.0 / PI).abs() < 1e-10);
        for &(a, b) in out.omega.intervals() {
            assert!((b - a - PI / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bathtub_rejects_bad_fraction() {
        assert!(bathtub(&single(1), 0.0).is_err());
        assert!(bathtub(&single(1), 1.0).is_err());
    }

    #[test]
    fn combination_rejects_degenerate_weights() {
        assert!(ModeCombination::new(vec![]).is_err());
        assert!(ModeCombination::new(vec![0.0, 0.0]).is_err());
        assert!(ModeCombination::new(vec![1.0, -0.1]).is_err());
        assert!(ModeCombination::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let u = IntervalUnion::new(vec![(0.1, 0.7), (PI / 3.0, 2.0 * PI / 3.0)]).unwrap();
        let back = IntervalUnion::from_csv(&u.to_csv()).unwrap();
        assert_eq!(back, u);
        assert!(IntervalUnion::from_csv("0.1\n").is_err());
        assert!(IntervalUnion::from_csv("0.1,0.2,0.3\n").is_err());
        assert_eq!(
            IntervalUnion::from_csv("# comment\n\n0.5,1.0\n").unwrap().measure(),
            0.5
        );
    }
}
