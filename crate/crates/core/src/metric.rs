//! Partial metrics, the induced metric `p^S`, sample domains and the sampled
//! axiom checker.
//!
//! A partial metric `p` may assign a nonzero distance from a point to itself.
//! The checker samples triples from a finite grid and counts violations of
//! the four axioms:
//!
//! 1. `p(x,x) = p(y,y) = p(x,y)` implies `x = y` (forward direction only);
//! 2. `p(x,x) <= p(x,y)`;
//! 3. `p(x,y) = p(y,x)`;
//! 4. `p(x,z) <= p(x,y) + p(y,z) - p(y,y)`;
//!
//! plus the ordinary triangle inequality for `p^S(x,y) = 2p(x,y) - p(x,x) - p(y,y)`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{exact_key, Point};

/// Symmetry slack for user-supplied metrics.
pub const TOL_SYM: f64 = 1e-12;
/// Additive slack on every triangle-type inequality.
pub const TOL_TRI: f64 = 1e-10;

pub trait PartialMetric: Send + Sync {
    fn name(&self) -> &str;

    /// `p(x, y)` without domain checks.
    fn distance(&self, x: &[f64], y: &[f64]) -> f64;

    /// Whether `x` lies in the metric's carrier set.
    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    /// Bundled metrics are symmetric bit-for-bit and satisfy the small
    /// self-distance axiom without slack.
    fn is_exact(&self) -> bool {
        false
    }

    /// `p(x, y) = ||x - y||_2` exactly. Enables nearest-neighbour indexing.
    fn is_euclidean(&self) -> bool {
        false
    }

    /// A factor `c` with `max_i |x_i - y_i| <= c * p^S(x, y)` for all points,
    /// if one exists. Lets deduplication bucket points by coordinates.
    fn ps_coordinate_bound(&self) -> Option<f64> {
        None
    }
}

impl<M: PartialMetric + ?Sized> PartialMetric for &M {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).distance(x, y)
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
    fn is_euclidean(&self) -> bool {
        (**self).is_euclidean()
    }
    fn ps_coordinate_bound(&self) -> Option<f64> {
        (**self).ps_coordinate_bound()
    }
}

impl<M: PartialMetric + ?Sized> PartialMetric for Arc<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).distance(x, y)
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
    fn is_euclidean(&self) -> bool {
        (**self).is_euclidean()
    }
    fn ps_coordinate_bound(&self) -> Option<f64> {
        (**self).ps_coordinate_bound()
    }
}

/// The partial metrics shipped with the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinMetric {
    /// `max{x, y}` on the nonnegative reals.
    Max,
    /// `max{b, d} - min{a, c}` on intervals `[a, b]`, `[c, d]`.
    Interval,
    /// `|x - y|` when both lie in `[0, 1)`, otherwise `max{x, y}`, on `[0, k]`.
    Mixed { k: f64 },
    /// `max(sup x, sup y)` on nonnegative grid functions.
    SupPair,
    /// The Euclidean metric, a partial metric with zero self-distance.
    Euclidean,
}

impl BuiltinMetric {
    pub fn mixed(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid(format!("mixed_metric needs k > 0, got {k}")));
        }
        Ok(BuiltinMetric::Mixed { k })
    }

    /// Resolves a metric by its identifier. `k` is required for `mixed_metric`.
    pub fn from_name(name: &str, k: Option<f64>) -> Result<Self> {
        match name {
            "max_metric" => Ok(BuiltinMetric::Max),
            "interval_metric" => Ok(BuiltinMetric::Interval),
            "mixed_metric" => {
                let k = k.ok_or_else(|| Error::invalid("mixed_metric requires parameter k"))?;
                BuiltinMetric::mixed(k)
            }
            "sup_pair_metric" => Ok(BuiltinMetric::SupPair),
            "euclidean" => Ok(BuiltinMetric::Euclidean),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }

    pub const NAMES: [&'static str; 5] = [
        "max_metric",
        "interval_metric",
        "mixed_metric",
        "sup_pair_metric",
        "euclidean",
    ];
}

impl PartialMetric for BuiltinMetric {
    fn name(&self) -> &str {
        match self {
            BuiltinMetric::Max => "max_metric",
            BuiltinMetric::Interval => "interval_metric",
            BuiltinMetric::Mixed { .. } => "mixed_metric",
            BuiltinMetric::SupPair => "sup_pair_metric",
            BuiltinMetric::Euclidean => "euclidean",
        }
    }

    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            BuiltinMetric::Max => x[0].max(y[0]),
            BuiltinMetric::Interval => x[1].max(y[1]) - x[0].min(y[0]),
            BuiltinMetric::Mixed { .. } => {
                let (a, b) = (x[0], y[0]);
                if (0.0..1.0).contains(&a) && (0.0..1.0).contains(&b) {
                    (a - b).abs()
                } else {
                    a.max(b)
                }
            }
            BuiltinMetric::SupPair => sup(x).max(sup(y)),
            BuiltinMetric::Euclidean => {
                if x.len() == 1 {
                    (x[0] - y[0]).abs()
                } else {
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                }
            }
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match *self {
            BuiltinMetric::Max => x.len() == 1 && x[0] >= 0.0,
            BuiltinMetric::Interval => x.len() == 2 && x[0] <= x[1],
            BuiltinMetric::Mixed { k } => x.len() == 1 && (0.0..=k).contains(&x[0]),
            BuiltinMetric::SupPair => x.iter().all(|&v| v >= 0.0),
            BuiltinMetric::Euclidean => true,
        }
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn is_euclidean(&self) -> bool {
        matches!(self, BuiltinMetric::Euclidean)
    }

    fn ps_coordinate_bound(&self) -> Option<f64> {
        match self {
            // p^S = |x - y|
            BuiltinMetric::Max => Some(1.0),
            // p^S = |a - c| + |b - d|
            BuiltinMetric::Interval => Some(1.0),
            // p^S is 2|x - y| inside [0, 1), |x - y| above, and max(x, y) across
            BuiltinMetric::Mixed { .. } => Some(1.0),
            // p^S = 2 ||x - y||_2
            BuiltinMetric::Euclidean => Some(0.5),
            BuiltinMetric::SupPair => None,
        }
    }
}

impl fmt::Display for BuiltinMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinMetric::Mixed { k } => write!(f, "mixed_metric(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

type DistanceFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type ContainsFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A user-supplied partial metric built from closures.
#[derive(Clone)]
pub struct FnMetric {
    name: String,
    eval: Arc<DistanceFn>,
    contains: Option<Arc<ContainsFn>>,
}

impl FnMetric {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FnMetric {
            name: name.into(),
            eval: Arc::new(eval),
            contains: None,
        }
    }

    pub fn with_domain(mut self, contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.contains = Some(Arc::new(contains));
        self
    }
}

impl fmt::Debug for FnMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMetric").field("name", &self.name).finish()
    }
}

impl PartialMetric for FnMetric {
    fn name(&self) -> &str {
        &self.name
    }
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.eval)(x, y)
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.contains.as_ref().map_or(true, |c| c(x))
    }
}

fn check_domain<M: PartialMetric + ?Sized>(m: &M, x: &[f64]) -> Result<()> {
    if m.contains(x) {
        Ok(())
    } else {
        Err(Error::DomainMismatch {
            metric: m.name().to_string(),
            point: x.to_vec(),
        })
    }
}

/// `p(x, y)` with domain checks on both arguments.
pub fn eval_p<M: PartialMetric + ?Sized>(m: &M, x: &Point, y: &Point) -> Result<f64> {
    check_domain(m, x)?;
    check_domain(m, y)?;
    let d = m.distance(x, y);
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::invalid(format!("{} returned {d} for {x:?}, {y:?}", m.name())));
    }
    Ok(d)
}

/// `p^S(x, y) = 2p(x, y) - p(x, x) - p(y, y)` without domain checks.
/// Rounding can push an exact zero slightly negative; the result is clamped.
pub fn ps<M: PartialMetric + ?Sized>(m: &M, x: &[f64], y: &[f64]) -> f64 {
    let v = 2.0 * m.distance(x, y) - m.distance(x, x) - m.distance(y, y);
    v.max(0.0)
}

/// The induced metric `p^S(x, y)`, with domain checks.
pub fn induced_ps<M: PartialMetric + ?Sized>(m: &M, x: &Point, y: &Point) -> Result<f64> {
    check_domain(m, x)?;
    check_domain(m, y)?;
    Ok(ps(m, x, y))
}

/// Membership of `y` in the open ball `{y : p(c, y) < p(c, c) + eps}`.
pub fn ball_membership<M: PartialMetric + ?Sized>(m: &M, center: &Point, eps: f64, y: &Point) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("ball radius must be positive, got {eps}")));
    }
    check_domain(m, center)?;
    check_domain(m, y)?;
    Ok(m.distance(center, y) < m.distance(center, center) + eps)
}

/// Shape of a finite sample domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    RealInterval { lo: f64, hi: f64 },
    NonnegReals { hi: f64 },
    IntervalPairs { lo: f64, hi: f64 },
    GridFunctions { nodes: usize, hi: f64 },
}

impl DomainKind {
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            DomainKind::RealInterval { lo, hi } => x.len() == 1 && (lo..=hi).contains(&x[0]),
            DomainKind::NonnegReals { .. } => x.len() == 1 && x[0] >= 0.0,
            DomainKind::IntervalPairs { lo, hi } => x.len() == 2 && lo <= x[0] && x[0] <= x[1] && x[1] <= hi,
            DomainKind::GridFunctions { nodes, hi } => x.len() == nodes && x.iter().all(|&v| (0.0..=hi).contains(&v)),
        }
    }
}

/// A finite, ordered stand-in for the carrier set.
#[derive(Debug, Clone)]
pub struct DomainDescriptor {
    kind: DomainKind,
    sample_grid: Vec<Point>,
}

impl DomainDescriptor {
    /// Validates that the grid is non-empty, duplicate free and in bounds.
    pub fn new(kind: DomainKind, sample_grid: Vec<Point>) -> Result<Self> {
        if sample_grid.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut seen = HashSet::with_capacity(sample_grid.len());
        for p in &sample_grid {
            if !kind.contains(p) {
                return Err(Error::invalid(format!("grid point {p:?} outside {kind:?}")));
            }
            if !seen.insert(exact_key(p)) {
                return Err(Error::invalid(format!("duplicate grid point {p:?}")));
            }
        }
        Ok(DomainDescriptor { kind, sample_grid })
    }

    /// `n` evenly spaced points on `[lo, hi]`.
    pub fn real_interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let grid = linspace(lo, hi, n)?.into_iter().map(Point::scalar).collect();
        DomainDescriptor::new(DomainKind::RealInterval { lo, hi }, grid)
    }

    /// `n` evenly spaced points on `[0, hi]`, viewed as nonnegative reals.
    pub fn nonneg_reals(hi: f64, n: usize) -> Result<Self> {
        let grid = linspace(0.0, hi, n)?.into_iter().map(Point::scalar).collect();
        DomainDescriptor::new(DomainKind::NonnegReals { hi }, grid)
    }

    /// Every interval `[a, b]` with `a <= b` drawn from an `n`-point grid on
    /// `[lo, hi]`: `n (n + 1) / 2` points.
    pub fn interval_pairs(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let base = linspace(lo, hi, n)?;
        let mut grid = Vec::with_capacity(n * (n + 1) / 2);
        for (i, &a) in base.iter().enumerate() {
            for &b in &base[i..] {
                grid.push(Point::from_slice_unchecked(&[a, b]));
            }
        }
        DomainDescriptor::new(DomainKind::IntervalPairs { lo, hi }, grid)
    }

    /// `count` nonnegative functions sampled at `nodes` points of `[0, 1]`.
    ///
    /// Function `j` is amplitude `hi * j / (count - 1)` times one of four
    /// unit-sup profiles (constant, ramp, sine arch, tent). Amplitudes are
    /// distinct, so sups are distinct: `max(sup x, sup y)` only separates
    /// functions with different sups.
    pub fn grid_functions(nodes: usize, count: usize, hi: f64) -> Result<Self> {
        if nodes < 2 || count < 1 {
            return Err(Error::invalid("grid functions need >= 2 nodes and >= 1 sample"));
        }
        let ts = linspace(0.0, 1.0, nodes)?;
        let profiles: [fn(f64) -> f64; 4] = [
            |_| 1.0,
            |t| t,
            |t| (std::f64::consts::PI * t).sin().max(0.0),
            |t| 1.0 - (2.0 * t - 1.0).abs(),
        ];
        let mut grid = Vec::with_capacity(count);
        for j in 0..count {
            let amp = if count == 1 {
                hi
            } else {
                hi * j as f64 / (count - 1) as f64
            };
            let profile = profiles[j % profiles.len()];
            let raw: Vec<f64> = ts.iter().map(|&t| profile(t)).collect();
            let top = raw.iter().copied().fold(0.0, f64::max);
            grid.push(Point::new(raw.iter().map(|v| amp * (v / top)).collect::<Vec<_>>())?);
        }
        DomainDescriptor::new(DomainKind::GridFunctions { nodes, hi }, grid)
    }

    /// Adds evenly spaced points with spacing `step` on
    /// `[center - half_width, center + half_width]` (clipped to the domain),
    /// keeping the grid sorted and duplicate free. One-dimensional kinds only.
    pub fn refined(self, center: f64, half_width: f64, step: f64) -> Result<Self> {
        let (lo, hi) = match self.kind {
            DomainKind::RealInterval { lo, hi } => (lo, hi),
            DomainKind::NonnegReals { hi } => (0.0, hi),
            _ => return Err(Error::invalid("refinement applies to 1-D domains only")),
        };
        let a = (center - half_width).max(lo);
        let b = (center + half_width).min(hi);
        let mut xs: Vec<f64> = self.sample_grid.iter().map(|p| p.x()).collect();
        if b > a && step > 0.0 {
            let n = ((b - a) / step).ceil() as usize + 1;
            xs.extend(linspace(a, b, n)?);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        DomainDescriptor::new(self.kind, xs.into_iter().map(Point::scalar).collect())
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn sample_grid(&self) -> &[Point] {
        &self.sample_grid
    }

    pub fn len(&self) -> usize {
        self.sample_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_grid.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.kind.contains(x)
    }
}

/// `n` evenly spaced values on `[lo, hi]` with both ends exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("bad range [{lo}, {hi}]")));
    }
    match n {
        0 => Err(Error::invalid("grid needs at least one point")),
        1 => Ok(vec![lo]),
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomViolations {
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
    pub p4: usize,
    pub ps_triangle: usize,
}

impl AxiomViolations {
    pub fn total(&self) -> usize {
        self.p1 + self.p2 + self.p3 + self.p4 + self.ps_triangle
    }
}

/// The sampled triple with the smallest slack across the inequality checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstTriple {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub metric: String,
    pub n_triples: usize,
    pub seed: u64,
    pub violations: AxiomViolations,
    pub worst: Option<WorstTriple>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.total() == 0
    }
}

/// Samples `n_triples` triples from the grid with a seeded ChaCha8 stream and
/// checks every axiom on them. Axioms 1-3 are checked on all three pairs of
/// the triple; each triple counts at most once per axiom.
pub fn check_axioms<M: PartialMetric + ?Sized>(
    m: &M,
    dom: &DomainDescriptor,
    n_triples: usize,
    seed: u64,
) -> Result<AxiomReport> {
    if n_triples == 0 {
        return Err(Error::invalid("n_triples must be >= 1"));
    }
    let grid = dom.sample_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exact = m.is_exact();
    let tol_sym = if exact { 0.0 } else { TOL_SYM };
    let tol_self = if exact { 0.0 } else { TOL_TRI };

    let mut v = AxiomViolations::default();
    let mut worst: Option<(f64, [usize; 3])> = None;

    for _ in 0..n_triples {
        let idx = [
            rng.gen_range(0..grid.len()),
            rng.gen_range(0..grid.len()),
            rng.gen_range(0..grid.len()),
        ];
        let [x, y, z] = idx.map(|i| grid[i].coords());
        let mut slack = f64::INFINITY;

        let (mut f1, mut f2, mut f3) = (false, false, false);
        for (a, b) in [(x, y), (y, z), (x, z)] {
            let ab = m.distance(a, b);
            let ba = m.distance(b, a);
            let aa = m.distance(a, a);
            let bb = m.distance(b, b);
            if aa == bb && bb == ab && a != b {
                f1 = true;
            }
            let s2 = (ab - aa).min(ab - bb);
            slack = slack.min(s2);
            f2 |= s2 < -tol_self;
            let s3 = -(ab - ba).abs();
            slack = slack.min(s3);
            f3 |= s3 < -tol_sym;
        }
        v.p1 += f1 as usize;
        v.p2 += f2 as usize;
        v.p3 += f3 as usize;

        let s4 = m.distance(x, y) + m.distance(y, z) - m.distance(y, y) - m.distance(x, z);
        slack = slack.min(s4);
        v.p4 += (s4 < -TOL_TRI) as usize;

        let st = ps(m, x, y) + ps(m, y, z) - ps(m, x, z);
        slack = slack.min(st);
        v.ps_triangle += (st < -TOL_TRI) as usize;

        if worst.map_or(true, |(w, _)| slack < w) {
            worst = Some((slack, idx));
        }
    }

    Ok(AxiomReport {
        metric: m.name().to_string(),
        n_triples,
        seed,
        violations: v,
        worst: worst.map(|(slack, [i, j, k])| WorstTriple {
            x: grid[i].clone(),
            y: grid[j].clone(),
            z: grid[k].clone(),
            slack,
        }),
    })
}

/// Counts grid pairs where `p^S(x, y) = 0` disagrees with `x = y`. Runs over
/// all pairs of the first `limit` grid points.
pub fn check_induced_identity<M: PartialMetric + ?Sized>(m: &M, dom: &DomainDescriptor, limit: usize) -> usize {
    let grid = &dom.sample_grid()[..dom.len().min(limit)];
    let mut bad = 0;
    for a in grid {
        for b in grid {
            if (ps(m, a, b) == 0.0) != (a == b) {
                bad += 1;
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Point {
        Point::scalar(x)
    }

    #[test]
    fn max_metric_values() {
        let m = BuiltinMetric::Max;
        assert_eq!(eval_p(&m, &p(3.0), &p(5.0)).unwrap(), 5.0);
        assert_eq!(eval_p(&m, &p(0.0), &p(0.0)).unwrap(), 0.0);
        assert_eq!(induced_ps(&m, &p(3.0), &p(5.0)).unwrap(), 2.0);
    }

    #[test]
    fn interval_metric_value() {
        let m = BuiltinMetric::Interval;
        let a = Point::interval(1.0, 3.0).unwrap();
        let b = Point::interval(2.0, 5.0).unwrap();
        assert_eq!(eval_p(&m, &a, &b).unwrap(), 4.0);
        // p^S([a,b],[c,d]) = |a - c| + |b - d|
        assert_eq!(induced_ps(&m, &a, &b).unwrap(), 3.0);
    }

    #[test]
    fn mixed_metric_branches() {
        let m = BuiltinMetric::mixed(2.0).unwrap();
        assert!((induced_ps(&m, &p(0.2), &p(0.5)).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(eval_p(&m, &p(0.5), &p(1.5)).unwrap(), 1.5);
        assert_eq!(eval_p(&m, &p(1.0), &p(1.0)).unwrap(), 1.0);
        assert_eq!(eval_p(&m, &p(0.999), &p(0.999)).unwrap(), 0.0);
    }

    #[test]
    fn self_distance_of_induced_metric_is_zero() {
        for (m, x) in [
            (BuiltinMetric::Max, p(7.5)),
            (BuiltinMetric::mixed(2.0).unwrap(), p(1.25)),
            (BuiltinMetric::Interval, Point::interval(-1.0, 4.0).unwrap()),
        ] {
            assert_eq!(induced_ps(&m, &x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let err = eval_p(&BuiltinMetric::Max, &p(-1.0), &p(2.0)).unwrap_err();
        assert!(matches!(err, Error::DomainMismatch { .. }));
        let m = BuiltinMetric::mixed(2.0).unwrap();
        assert!(induced_ps(&m, &p(0.5), &p(2.5)).is_err());
        let bad = Point::new(vec![3.0, 1.0]).unwrap();
        assert!(eval_p(&BuiltinMetric::Interval, &bad, &bad).is_err());
    }

    #[test]
    fn ball_membership_examples() {
        let m = BuiltinMetric::Max;
        assert!(ball_membership(&m, &p(2.0), 0.5, &p(2.3)).unwrap());
        assert!(!ball_membership(&m, &p(2.0), 0.5, &p(3.0)).unwrap());
        assert!(ball_membership(&m, &p(2.0), 1e-9, &p(2.0)).unwrap());
        assert!(ball_membership(&m, &p(2.0), 0.0, &p(2.0)).is_err());
    }

    #[test]
    fn bundled_metrics_pass_axioms() {
        let cases: Vec<(BuiltinMetric, DomainDescriptor)> = vec![
            (BuiltinMetric::Max, DomainDescriptor::nonneg_reals(10.0, 501).unwrap()),
            (
                BuiltinMetric::Interval,
                DomainDescriptor::interval_pairs(-2.0, 3.0, 41).unwrap(),
            ),
            (
                BuiltinMetric::mixed(2.0).unwrap(),
                DomainDescriptor::real_interval(0.0, 2.0, 2001).unwrap(),
            ),
            (
                BuiltinMetric::SupPair,
                DomainDescriptor::grid_functions(21, 64, 3.0).unwrap(),
            ),
        ];
        for (m, dom) in cases {
            let r = check_axioms(&m, &dom, 2000, 42).unwrap();
            assert!(r.is_clean(), "{m}: {:?}", r.violations);
            assert_eq!(check_induced_identity(&m, &dom, 200), 0, "{m}");
        }
    }

    #[test]
    fn broken_metric_is_flagged() {
        // x + y off the diagonal, 0 on it: breaks the small self-distance
        // axiom once negative arguments are sampled.
        let broken = FnMetric::new("broken_sum", |x, y| if x == y { 0.0 } else { x[0] + y[0] });
        let dom = DomainDescriptor::real_interval(-1.0, 1.0, 201).unwrap();
        let r = check_axioms(&broken, &dom, 1000, 7).unwrap();
        assert!(r.violations.p2 > 0);
        assert!(r.worst.unwrap().slack < 0.0);
    }

    #[test]
    fn asymmetric_metric_is_flagged() {
        let skew = FnMetric::new("skew", |x, y| (x[0] - y[0]).abs() + if x[0] < y[0] { 0.1 } else { 0.0 });
        let dom = DomainDescriptor::real_interval(0.0, 1.0, 11).unwrap();
        let r = check_axioms(&skew, &dom, 500, 1).unwrap();
        assert!(r.violations.p3 > 0);
    }

    #[test]
    fn report_is_deterministic() {
        let dom = DomainDescriptor::nonneg_reals(5.0, 101).unwrap();
        let a = check_axioms(&BuiltinMetric::Max, &dom, 300, 9).unwrap();
        let b = check_axioms(&BuiltinMetric::Max, &dom, 300, 9).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_value(&a).unwrap();
        for key in ["p1", "p2", "p3", "p4", "ps_triangle"] {
            assert!(json["violations"][key].is_u64());
        }
        for key in ["x", "y", "z", "slack"] {
            assert!(!json["worst"][key].is_null());
        }
    }

    #[test]
    fn refinement_keeps_grid_sorted_and_unique() {
        let dom = DomainDescriptor::real_interval(0.0, 2.0, 21)
            .unwrap()
            .refined(1.0, 0.05, 1e-3)
            .unwrap();
        let xs: Vec<f64> = dom.sample_grid().iter().map(|p| p.x()).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let near: Vec<f64> = xs.into_iter().filter(|x| (x - 1.0).abs() <= 0.05).collect();
        assert!(near.windows(2).all(|w| w[1] - w[0] <= 1e-3 + 1e-12));
    }

    #[test]
    fn grid_functions_have_distinct_sups() {
        let dom = DomainDescriptor::grid_functions(20, 40, 2.0).unwrap();
        let mut sups: Vec<f64> = dom.sample_grid().iter().map(|f| sup(f)).collect();
        sups.sort_by(f64::total_cmp);
        assert!(sups.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn descriptor_rejects_duplicates_and_out_of_bounds() {
        let kind = DomainKind::RealInterval { lo: 0.0, hi: 1.0 };
        assert!(DomainDescriptor::new(kind.clone(), vec![p(0.5), p(0.5)]).is_err());
        assert!(DomainDescriptor::new(kind.clone(), vec![p(1.5)]).is_err());
        assert!(DomainDescriptor::new(kind, vec![]).is_err());
    }
}
