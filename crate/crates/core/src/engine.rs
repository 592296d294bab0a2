//! Common fixed points of four self-maps `f, g, S, T` on an ordered partial
//! metric space.
//!
//! The contractive condition checked here is
//! `psi(p(fx, gy)) <= psi(M(x, y)) - phi(M(x, y))` for comparable `x, y`, with
//!
//! ```text
//! M(x, y) = max{ p(Sx, Ty), p(fx, Sx), p(gy, Ty), (p(Sx, gy) + p(fx, Ty)) / 2 }.
//! ```
//!
//! The iteration builds `y_{2n+1} = f x_{2n} = T x_{2n+1}` and
//! `y_{2n+2} = g x_{2n+1} = S x_{2n+2}`, resolving the `T` and `S` preimages by
//! an exact oracle when one is supplied and by a grid search otherwise.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::ControlPair;
use crate::error::{Error, Result};
use crate::metric::{ps, DomainDescriptor, PartialMetric};
use crate::point::Point;

/// Slack below which a contractive-inequality evaluation counts as violated.
pub const TOL_SLACK: f64 = 1e-10;
/// Largest accepted residual `p^S(T x, y)` for a resolved preimage.
pub const TOL_PRE: f64 = 1e-9;
/// Violating pairs kept verbatim in a [`ContractionReport`].
pub const VIOLATION_CAP: usize = 100;

pub type PointMap = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
pub type PreimageOracle = Arc<dyn Fn(&[f64]) -> Option<Point> + Send + Sync>;
pub type OrderFn = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum OrderPredicate {
    /// Coordinatewise `<=`; the usual order on the reals.
    UsualLeq,
    Custom {
        name: String,
        leq: OrderFn,
    },
}

impl OrderPredicate {
    pub fn custom(name: impl Into<String>, leq: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static) -> Self {
        OrderPredicate::Custom {
            name: name.into(),
            leq: Arc::new(leq),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "usual-leq" => Ok(OrderPredicate::UsualLeq),
            other => Err(Error::invalid(format!("unknown order `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            OrderPredicate::UsualLeq => "usual-leq",
            OrderPredicate::Custom { name, .. } => name,
        }
    }

    pub fn leq(&self, x: &[f64], y: &[f64]) -> bool {
        match self {
            OrderPredicate::UsualLeq => x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a <= b),
            OrderPredicate::Custom { leq, .. } => leq(x, y),
        }
    }

    pub fn comparable(&self, x: &[f64], y: &[f64]) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }
}

impl fmt::Debug for OrderPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderReport {
    pub reflexivity_failures: usize,
    pub antisymmetry_failures: usize,
    pub transitivity_failures: usize,
}

/// Checks reflexivity and antisymmetry on every grid point and pair, and
/// transitivity on every triple of the first `triple_limit` grid points.
pub fn check_order(order: &OrderPredicate, dom: &DomainDescriptor, triple_limit: usize) -> OrderReport {
    let grid = dom.sample_grid();
    let mut r = OrderReport::default();
    for (i, x) in grid.iter().enumerate() {
        r.reflexivity_failures += !order.leq(x, x) as usize;
        for y in &grid[i + 1..] {
            r.antisymmetry_failures += (order.leq(x, y) && order.leq(y, x)) as usize;
        }
    }
    let head = &grid[..grid.len().min(triple_limit)];
    for x in head {
        for y in head {
            if !order.leq(x, y) {
                continue;
            }
            for z in head {
                r.transitivity_failures += (order.leq(y, z) && !order.leq(x, z)) as usize;
            }
        }
    }
    r
}

/// Declared compatibility of a map pair. Not machine-checked beyond the
/// spot-check recorded along iteration traces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Compatibility {
    Compatible,
    WeaklyCompatible,
    #[default]
    Undeclared,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityMeta {
    pub f_s: Compatibility,
    pub g_t: Compatibility,
}

/// One affine piece `slope * x + intercept` valid up to `upto`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Piece {
    /// Upper end of the piece; `None` covers everything above the previous piece.
    #[serde(default)]
    pub upto: Option<f64>,
    #[serde(default = "yes")]
    pub inclusive: bool,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub intercept: f64,
}

fn yes() -> bool {
    true
}

impl Piece {
    pub fn new(upto: Option<f64>, slope: f64, intercept: f64) -> Self {
        Piece {
            upto,
            inclusive: true,
            slope,
            intercept,
        }
    }

    fn covers(&self, x: f64) -> bool {
        match self.upto {
            None => true,
            Some(u) => x < u || (self.inclusive && x == u),
        }
    }
}

/// Piecewise-affine scalar map. The first piece covering `x` applies; points
/// beyond every piece use the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(transparent)]
pub struct PiecewiseMap {
    pub pieces: Vec<Piece>,
}

impl PiecewiseMap {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("piecewise map needs at least one piece"));
        }
        if pieces
            .iter()
            .any(|p| !p.slope.is_finite() || !p.intercept.is_finite() || p.upto.is_some_and(f64::is_nan))
        {
            return Err(Error::invalid("piecewise map has a non-finite coefficient"));
        }
        Ok(PiecewiseMap { pieces })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let piece = self
            .pieces
            .iter()
            .find(|p| p.covers(x))
            .unwrap_or_else(|| self.pieces.last().expect("validated non-empty"));
        piece.slope * x + piece.intercept
    }

    pub fn into_map(self) -> PointMap {
        Arc::new(move |x: &[f64]| Point::scalar(self.eval(x[0])))
    }
}

#[derive(Clone)]
pub struct MapQuartet {
    name: String,
    f: PointMap,
    g: PointMap,
    s: PointMap,
    t: PointMap,
    preimage_s: Option<PreimageOracle>,
    preimage_t: Option<PreimageOracle>,
    order: OrderPredicate,
    compatibility: CompatibilityMeta,
}

impl fmt::Debug for MapQuartet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapQuartet")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("preimage_s", &self.preimage_s.is_some())
            .field("preimage_t", &self.preimage_t.is_some())
            .field("compatibility", &self.compatibility)
            .finish()
    }
}

fn identity_map() -> PointMap {
    Arc::new(Point::from_slice_unchecked)
}

fn identity_oracle() -> PreimageOracle {
    Arc::new(|y: &[f64]| Some(Point::from_slice_unchecked(y)))
}

impl MapQuartet {
    pub fn new(name: impl Into<String>, f: PointMap, g: PointMap, s: PointMap, t: PointMap) -> Self {
        MapQuartet {
            name: name.into(),
            f,
            g,
            s,
            t,
            preimage_s: None,
            preimage_t: None,
            order: OrderPredicate::UsualLeq,
            compatibility: CompatibilityMeta::default(),
        }
    }

    /// A quartet built from scalar closures.
    pub fn scalar(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        s: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        fn lift(h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> PointMap {
            Arc::new(move |x: &[f64]| Point::scalar(h(x[0])))
        }
        MapQuartet::new(name, lift(f), lift(g), lift(s), lift(t))
    }

    /// `f = g = S = T = id`.
    pub fn identity() -> Self {
        MapQuartet::new(
            "identity",
            identity_map(),
            identity_map(),
            identity_map(),
            identity_map(),
        )
        .with_preimages(Some(identity_oracle()), Some(identity_oracle()))
    }

    /// The four piecewise maps of the worked example on `[0, k]`. Every value
    /// in the ranges of `f` and `g` is fixed by `T` and `S` respectively, so
    /// the identity serves as exact preimage oracle for both.
    pub fn example22(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 1.0 / 3.0) {
            return Err(Error::invalid(format!("example22 needs k > 1/3, got {k}")));
        }
        let [f, g, s, t] = example22_pieces(k);
        Ok(MapQuartet::new(
            format!("example22(k={k})"),
            f.into_map(),
            g.into_map(),
            s.into_map(),
            t.into_map(),
        )
        .with_preimages(Some(identity_oracle()), Some(identity_oracle()))
        .with_compatibility(CompatibilityMeta {
            f_s: Compatibility::Compatible,
            g_t: Compatibility::WeaklyCompatible,
        }))
    }

    pub fn with_preimages(mut self, s: Option<PreimageOracle>, t: Option<PreimageOracle>) -> Self {
        self.preimage_s = s;
        self.preimage_t = t;
        self
    }

    pub fn with_order(mut self, order: OrderPredicate) -> Self {
        self.order = order;
        self
    }

    pub fn with_compatibility(mut self, meta: CompatibilityMeta) -> Self {
        self.compatibility = meta;
        self
    }

    /// `f = g`, `S = T = id`: the single-map specialisation.
    pub fn single(name: impl Into<String>, f: PointMap) -> Self {
        MapQuartet::new(name, f.clone(), f, identity_map(), identity_map())
            .with_preimages(Some(identity_oracle()), Some(identity_oracle()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> &OrderPredicate {
        &self.order
    }

    pub fn compatibility(&self) -> CompatibilityMeta {
        self.compatibility
    }

    pub fn f(&self, x: &[f64]) -> Point {
        (self.f)(x)
    }

    pub fn g(&self, x: &[f64]) -> Point {
        (self.g)(x)
    }

    pub fn s(&self, x: &[f64]) -> Point {
        (self.s)(x)
    }

    pub fn t(&self, x: &[f64]) -> Point {
        (self.t)(x)
    }
}

/// Piecewise descriptions of `[f, g, S, T]` for the worked example.
pub fn example22_pieces(k: f64) -> [PiecewiseMap; 4] {
    const THIRD: f64 = 1.0 / 3.0;
    let pm = |pieces| PiecewiseMap { pieces };
    [
        pm(vec![
            Piece::new(Some(THIRD), 1.0 / 6.0, 0.0),
            Piece::new(None, 0.0, 1.0 / 18.0),
        ]),
        pm(vec![Piece::new(Some(THIRD), 0.0, 0.0), Piece::new(None, 0.0, THIRD)]),
        pm(vec![
            Piece::new(Some(0.0), 0.0, 0.0),
            Piece::new(Some(THIRD), 0.0, THIRD),
            Piece::new(None, 0.0, k),
        ]),
        pm(vec![
            Piece::new(Some(0.0), 0.0, 0.0),
            Piece::new(Some(THIRD), 1.0, 0.0),
            Piece::new(None, 0.0, k),
        ]),
    ]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub grid_size: usize,
    /// Grid points with `f x ⪯ x` false.
    pub f_dominated_failures: usize,
    /// Grid points with `g x ⪯ x` false.
    pub g_dominated_failures: usize,
    /// Grid points with `x ⪯ S x` false.
    pub s_dominating_failures: usize,
    /// Grid points with `x ⪯ T x` false.
    pub t_dominating_failures: usize,
    /// Grid points whose `f` image has no `T` preimage within tolerance.
    pub f_range_failures: usize,
    /// Grid points whose `g` image has no `S` preimage within tolerance.
    pub g_range_failures: usize,
    pub worst_range_residual: f64,
    /// Grid images that left the metric's domain.
    pub out_of_domain: usize,
}

impl HypothesisReport {
    pub fn domination_passes(&self) -> bool {
        self.f_dominated_failures == 0
            && self.g_dominated_failures == 0
            && self.s_dominating_failures == 0
            && self.t_dominating_failures == 0
    }

    pub fn passes(&self) -> bool {
        self.domination_passes() && self.f_range_failures == 0 && self.g_range_failures == 0 && self.out_of_domain == 0
    }
}

/// Resolves preimages under `S` or `T`: the oracle first, then a grid search
/// for the lowest-index minimiser of `p^S(map(x), y)`.
struct Resolver<'a> {
    map: &'a PointMap,
    oracle: Option<&'a PreimageOracle>,
    grid: Option<(&'a [Point], Vec<Point>)>,
    tol: f64,
}

impl<'a> Resolver<'a> {
    fn new(
        map: &'a PointMap,
        oracle: Option<&'a PreimageOracle>,
        grid: Option<&'a DomainDescriptor>,
        tol: f64,
    ) -> Self {
        let grid = grid.map(|d| {
            let pts = d.sample_grid();
            let images = pts.iter().map(|x| map(x)).collect();
            (pts, images)
        });
        Resolver { map, oracle, grid, tol }
    }

    /// Returns the preimage and its residual, or the best residual found.
    fn resolve<M: PartialMetric + ?Sized>(&self, m: &M, y: &[f64]) -> std::result::Result<(Point, f64), f64> {
        let mut best = f64::INFINITY;
        if let Some(x) = self.oracle.and_then(|o| o(y)) {
            let r = ps(m, &(self.map)(&x), y);
            if r <= self.tol {
                return Ok((x, r));
            }
            best = r;
        }
        if let Some((pts, images)) = &self.grid {
            let mut arg = None;
            let mut min = f64::INFINITY;
            for (i, img) in images.iter().enumerate() {
                let r = ps(m, img, y);
                if r < min {
                    min = r;
                    arg = Some(i);
                }
            }
            if let Some(i) = arg.filter(|_| min <= self.tol) {
                return Ok((pts[i].clone(), min));
            }
            best = best.min(min);
        }
        Err(best)
    }
}

/// Checks that `f, g` are dominated, `S, T` dominating, and that
/// `f(grid) ⊆ T(X)` and `g(grid) ⊆ S(X)` up to `tol_pre`.
pub fn check_dominated_dominating<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    dom: &DomainDescriptor,
    tol_pre: f64,
) -> HypothesisReport {
    let order = &q.order;
    let res_t = Resolver::new(&q.t, q.preimage_t.as_ref(), Some(dom), tol_pre);
    let res_s = Resolver::new(&q.s, q.preimage_s.as_ref(), Some(dom), tol_pre);
    let rows: Vec<_> = dom
        .sample_grid()
        .par_iter()
        .map(|x| {
            let (fx, gx, sx, tx) = (q.f(x), q.g(x), q.s(x), q.t(x));
            let outside = [&fx, &gx, &sx, &tx].iter().filter(|p| !m.contains(p)).count();
            let rf = res_t.resolve(m, &fx);
            let rg = res_s.resolve(m, &gx);
            let resid = |r: &std::result::Result<(Point, f64), f64>| match r {
                Ok((_, v)) => *v,
                Err(v) => *v,
            };
            (
                [
                    !order.leq(&fx, x),
                    !order.leq(&gx, x),
                    !order.leq(x, &sx),
                    !order.leq(x, &tx),
                    rf.is_err(),
                    rg.is_err(),
                ],
                resid(&rf).max(resid(&rg)),
                outside,
            )
        })
        .collect();
    let mut r = HypothesisReport {
        grid_size: dom.len(),
        ..Default::default()
    };
    for (flags, resid, outside) in rows {
        r.f_dominated_failures += flags[0] as usize;
        r.g_dominated_failures += flags[1] as usize;
        r.s_dominating_failures += flags[2] as usize;
        r.t_dominating_failures += flags[3] as usize;
        r.f_range_failures += flags[4] as usize;
        r.g_range_failures += flags[5] as usize;
        r.worst_range_residual = r.worst_range_residual.max(resid);
        r.out_of_domain += outside;
    }
    r
}

fn mp_from_images<M: PartialMetric + ?Sized>(m: &M, fx: &[f64], sx: &[f64], gy: &[f64], ty: &[f64]) -> f64 {
    let a = m.distance(sx, ty);
    let b = m.distance(fx, sx);
    let c = m.distance(gy, ty);
    let d = (m.distance(sx, gy) + m.distance(fx, ty)) / 2.0;
    a.max(b).max(c).max(d)
}

fn check_in_domain<M: PartialMetric + ?Sized>(m: &M, x: &[f64]) -> Result<()> {
    if m.contains(x) && x.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::DomainMismatch {
            metric: m.name().to_string(),
            point: x.to_vec(),
        })
    }
}

/// `M(x, y)`, the generalised distance of the contractive condition.
pub fn compute_mp<M: PartialMetric + ?Sized>(m: &M, q: &MapQuartet, x: &Point, y: &Point) -> Result<f64> {
    check_in_domain(m, x)?;
    check_in_domain(m, y)?;
    let (fx, sx, gy, ty) = (q.f(x), q.s(x), q.g(y), q.t(y));
    for img in [&fx, &sx, &gy, &ty] {
        check_in_domain(m, img)?;
    }
    Ok(mp_from_images(m, &fx, &sx, &gy, &ty))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRecord {
    pub x: Point,
    pub y: Point,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub n_pairs: usize,
    pub n_checked: usize,
    pub n_noncomparable: usize,
    pub n_violations: usize,
    pub worst: Option<ContractionRecord>,
    /// The first violating pairs in enumeration order, up to [`VIOLATION_CAP`].
    pub violations: Vec<ContractionRecord>,
}

impl ContractionReport {
    pub fn is_clean(&self) -> bool {
        self.n_violations == 0
    }

    fn absorb(&mut self, other: ContractionReport) {
        self.n_pairs += other.n_pairs;
        self.n_checked += other.n_checked;
        self.n_noncomparable += other.n_noncomparable;
        self.n_violations += other.n_violations;
        if let Some(w) = other.worst {
            if self.worst.as_ref().map_or(true, |cur| w.slack < cur.slack) {
                self.worst = Some(w);
            }
        }
        let room = VIOLATION_CAP - self.violations.len();
        self.violations.extend(other.violations.into_iter().take(room));
    }

    fn record(&mut self, x: &[f64], y: &[f64], lhs: f64, rhs: f64) {
        self.n_checked += 1;
        let slack = rhs - lhs;
        let violated = slack < -TOL_SLACK;
        self.n_violations += violated as usize;
        let keep = violated && self.violations.len() < VIOLATION_CAP;
        let is_worse = self.worst.as_ref().map_or(true, |w| slack < w.slack);
        if !(keep || is_worse) {
            return;
        }
        let rec = ContractionRecord {
            x: Point::from_slice_unchecked(x),
            y: Point::from_slice_unchecked(y),
            lhs,
            rhs,
            slack,
        };
        if keep {
            self.violations.push(rec.clone());
        }
        if is_worse {
            self.worst = Some(rec);
        }
    }
}

fn sides(cp: &ControlPair, p_fg: f64, mp: f64) -> (f64, f64) {
    (cp.psi(p_fg), cp.psi(mp) - cp.phi(mp))
}

/// Evaluates the contractive inequality on explicit pairs. Pairs that are not
/// comparable under the quartet's order are skipped and counted.
pub fn verify_contraction<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    cp: &ControlPair,
    pairs: &[(Point, Point)],
) -> Result<ContractionReport> {
    let mut report = ContractionReport {
        n_pairs: pairs.len(),
        ..Default::default()
    };
    for (x, y) in pairs {
        if !q.order.comparable(x, y) {
            report.n_noncomparable += 1;
            continue;
        }
        let p_fg = m.distance(&q.f(x), &q.g(y));
        let mp = compute_mp(m, q, x, y)?;
        let (lhs, rhs) = sides(cp, p_fg, mp);
        report.record(x, y, lhs, rhs);
    }
    Ok(report)
}

/// Evaluates the contractive inequality on every ordered pair of grid points.
pub fn verify_contraction_grid<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    cp: &ControlPair,
    dom: &DomainDescriptor,
) -> Result<ContractionReport> {
    let grid = dom.sample_grid();
    let mut images = Vec::with_capacity(grid.len());
    for x in grid {
        check_in_domain(m, x)?;
        let img = [q.f(x), q.g(x), q.s(x), q.t(x)];
        for p in &img {
            check_in_domain(m, p)?;
        }
        images.push(img);
    }
    let order = &q.order;
    let partials: Vec<ContractionReport> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut r = ContractionReport {
                n_pairs: grid.len(),
                ..Default::default()
            };
            let x = &grid[i];
            let [fx, _, sx, _] = &images[i];
            for (y, [_, gy, _, ty]) in grid.iter().zip(&images) {
                if !order.comparable(x, y) {
                    r.n_noncomparable += 1;
                    continue;
                }
                let mp = mp_from_images(m, fx, sx, gy, ty);
                let (lhs, rhs) = sides(cp, m.distance(fx, gy), mp);
                r.record(x, y, lhs, rhs);
            }
            r
        })
        .collect();
    let mut report = ContractionReport::default();
    for r in partials {
        report.absorb(r);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct IterateOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub window: usize,
    pub tol_pre: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            tol: 1e-10,
            max_iters: 100_000,
            window: 3,
            tol_pre: TOL_PRE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterationStatus {
    Converged,
    MaxIters,
    HypothesisViolation,
    PreimageFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub f: f64,
    pub g: f64,
    pub s: f64,
    pub t: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.f.max(self.g).max(self.s).max(self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub status: IterationStatus,
    pub x: Vec<Point>,
    pub y: Vec<Point>,
    /// `p^S(y_n, y_{n+1})`.
    pub step_distances: Vec<f64>,
    /// `M` at the comparable pair `(x_n, x_{n+1})`, ordered so that `f` acts
    /// on the even-indexed point.
    pub mp_values: Vec<f64>,
    /// Contractive slack at the same pairs; `None` when not comparable.
    pub slacks: Vec<Option<f64>>,
    /// `p(y_{2n+1}, y_{2n})`, nonincreasing for admissible quartets.
    pub descent: Vec<f64>,
    /// `p^S(f S x_n, S f x_n)` along the trace.
    pub compat_fs: Vec<f64>,
    /// `p^S(g T x_n, T g x_n)` along the trace.
    pub compat_gt: Vec<f64>,
    /// First step of the converged window.
    pub converged_step: Option<usize>,
    pub limit: Option<Point>,
    pub residuals: Option<Residuals>,
    pub self_distance: Option<f64>,
    pub hypotheses: Option<HypothesisReport>,
    pub message: Option<String>,
}

impl IterationTrace {
    fn empty(status: IterationStatus) -> Self {
        IterationTrace {
            status,
            x: Vec::new(),
            y: Vec::new(),
            step_distances: Vec::new(),
            mp_values: Vec::new(),
            slacks: Vec::new(),
            descent: Vec::new(),
            compat_fs: Vec::new(),
            compat_gt: Vec::new(),
            converged_step: None,
            limit: None,
            residuals: None,
            self_distance: None,
            hypotheses: None,
            message: None,
        }
    }

    /// Writes `step, x, y, ps_step, mp, slack` rows; transition columns are
    /// blank on the final row.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "x", "y", "ps_step", "mp", "slack"])?;
        let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (n, y) in self.y.iter().enumerate() {
            let x = self.x.get(n).map(coords_field).unwrap_or_default();
            out.write_record([
                n.to_string(),
                x,
                coords_field(y),
                num(self.step_distances.get(n).copied()),
                num(self.mp_values.get(n).copied()),
                num(self.slacks.get(n).copied().flatten()),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

/// Scalars print as a single number; vectors as `;`-separated coordinates.
pub fn coords_field(p: &Point) -> String {
    p.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Runs the alternating four-map iteration from `x0`. When `grid` is given
/// the hypotheses are checked on it first and it backs the preimage search.
pub fn iterate<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    cp: &ControlPair,
    x0: &Point,
    opts: &IterateOptions,
    grid: Option<&DomainDescriptor>,
) -> Result<IterationTrace> {
    let hypotheses = grid.map(|d| check_dominated_dominating(m, q, d, opts.tol_pre));
    if let Some(h) = hypotheses.as_ref().filter(|h| !h.passes()) {
        let mut trace = IterationTrace::empty(IterationStatus::HypothesisViolation);
        trace.hypotheses = Some(h.clone());
        trace.message = Some("hypothesis check failed on the grid".into());
        return Ok(trace);
    }
    let mut trace = iterate_unchecked(m, q, cp, x0, opts, grid)?;
    trace.hypotheses = hypotheses;
    Ok(trace)
}

fn iterate_unchecked<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    cp: &ControlPair,
    x0: &Point,
    opts: &IterateOptions,
    grid: Option<&DomainDescriptor>,
) -> Result<IterationTrace> {
    if opts.window == 0 || !(opts.tol >= 0.0) {
        return Err(Error::invalid("iteration needs window >= 1 and tol >= 0"));
    }
    check_in_domain(m, x0)?;
    let res_t = Resolver::new(&q.t, q.preimage_t.as_ref(), grid, opts.tol_pre);
    let res_s = Resolver::new(&q.s, q.preimage_s.as_ref(), grid, opts.tol_pre);

    let mut trace = IterationTrace::empty(IterationStatus::MaxIters);
    trace.x.push(x0.clone());
    trace.y.push(q.s(x0));
    let mut small_run = 0usize;
    for n in 0..opts.max_iters {
        let xn = &trace.x[n];
        let (y_next, resolved) = if n % 2 == 0 {
            let y = q.f(xn);
            let r = res_t.resolve(m, &y);
            (y, r)
        } else {
            let y = q.g(xn);
            let r = res_s.resolve(m, &y);
            (y, r)
        };
        check_in_domain(m, &y_next)?;
        let x_next = match resolved {
            Ok((x, _)) => x,
            Err(best) => {
                trace.status = IterationStatus::PreimageFailure;
                trace.message = Some(format!(
                    "no {} preimage of {:?} within {} (best residual {best})",
                    if n % 2 == 0 { "T" } else { "S" },
                    y_next,
                    opts.tol_pre
                ));
                return Ok(trace);
            }
        };

        let (a, b) = if n % 2 == 0 { (xn, &x_next) } else { (&x_next, xn) };
        let (fa, sa, gb, tb) = (q.f(a), q.s(a), q.g(b), q.t(b));
        let mp = mp_from_images(m, &fa, &sa, &gb, &tb);
        trace.mp_values.push(mp);
        trace.slacks.push(q.order.comparable(a, b).then(|| {
            let (lhs, rhs) = sides(cp, m.distance(&fa, &gb), mp);
            rhs - lhs
        }));
        trace.compat_fs.push(ps(m, &q.f(&q.s(xn)), &q.s(&q.f(xn))));
        trace.compat_gt.push(ps(m, &q.g(&q.t(xn)), &q.t(&q.g(xn))));

        let step = ps(m, &trace.y[n], &y_next);
        trace.step_distances.push(step);
        if n % 2 == 0 {
            trace.descent.push(m.distance(&y_next, &trace.y[n]));
        }
        trace.y.push(y_next);
        trace.x.push(x_next);

        small_run = if step <= opts.tol { small_run + 1 } else { 0 };
        if small_run >= opts.window {
            trace.status = IterationStatus::Converged;
            trace.converged_step = Some(n + 1 - opts.window);
            break;
        }
    }

    if trace.status == IterationStatus::Converged {
        let z = trace.y.last().expect("non-empty").clone();
        trace.residuals = Some(Residuals {
            f: ps(m, &q.f(&z), &z),
            g: ps(m, &q.g(&z), &z),
            s: ps(m, &q.s(&z), &z),
            t: ps(m, &q.t(&z), &z),
        });
        trace.self_distance = Some(m.distance(&z, &z));
        trace.limit = Some(z);
    } else {
        trace.message = Some(format!("no convergence within {} steps", opts.max_iters));
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub n_seeds: usize,
    pub statuses: Vec<IterationStatus>,
    pub limits: Vec<Option<Point>>,
    /// Limits pairwise more than `tol` apart in `p^S`, in seed order.
    pub distinct_limits: Vec<Point>,
    /// Every two distinct limits are comparable.
    pub well_ordered: bool,
    pub hypotheses: Option<HypothesisReport>,
}

impl UniquenessReport {
    pub fn unique(&self) -> bool {
        self.distinct_limits.len() == 1 && self.statuses.iter().all(|s| *s == IterationStatus::Converged)
    }
}

/// Iterates from every seed in parallel and compares the limits.
pub fn probe_uniqueness<M: PartialMetric + ?Sized>(
    m: &M,
    q: &MapQuartet,
    cp: &ControlPair,
    seeds: &[Point],
    opts: &IterateOptions,
    grid: Option<&DomainDescriptor>,
) -> Result<UniquenessReport> {
    if seeds.len() < 2 {
        return Err(Error::invalid("uniqueness probe needs at least two seeds"));
    }
    let hypotheses = grid.map(|d| check_dominated_dominating(m, q, d, opts.tol_pre));
    let traces: Vec<IterationTrace> = if hypotheses.as_ref().is_some_and(|h| !h.passes()) {
        seeds
            .iter()
            .map(|_| IterationTrace::empty(IterationStatus::HypothesisViolation))
            .collect()
    } else {
        seeds
            .par_iter()
            .map(|x0| iterate_unchecked(m, q, cp, x0, opts, grid))
            .collect::<Result<_>>()?
    };
    let limits: Vec<Option<Point>> = traces.iter().map(|t| t.limit.clone()).collect();
    let mut distinct: Vec<Point> = Vec::new();
    for z in limits.iter().flatten() {
        if distinct.iter().all(|d| ps(m, d, z) > opts.tol) {
            distinct.push(z.clone());
        }
    }
    let well_ordered = distinct
        .iter()
        .enumerate()
        .all(|(i, a)| distinct[i + 1..].iter().all(|b| q.order.comparable(a, b)));
    Ok(UniquenessReport {
        n_seeds: seeds.len(),
        statuses: traces.iter().map(|t| t.status).collect(),
        limits,
        distinct_limits: distinct,
        well_ordered,
        hypotheses,
    })
}
