//! Iterated function systems over partial metric spaces.
//!
//! The set operator `T(A) = f_1(A) ∪ ... ∪ f_N(A)` is iterated from a seed
//! cloud until consecutive clouds are within `tol` in the partial Hausdorff
//! distance. Clouds are kept bounded by a greedy merge radius.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::ControlPair;
use crate::error::{Error, Result};
use crate::hausdorff::{dedup_radius, h_p, FiniteSet};
use crate::metric::{ps, BuiltinMetric, PartialMetric};
use crate::point::Point;

/// Slack below which a family or contraction inequality counts as violated.
pub const TOL_FAMILY: f64 = 1e-10;

/// `x -> matrix * x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        if d == 0 || matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
            return Err(Error::invalid(format!(
                "affine map needs a {d}x{d} matrix and a length-{d} offset"
            )));
        }
        if matrix.iter().flatten().chain(&offset).any(|c| !c.is_finite()) {
            return Err(Error::invalid("affine map has a non-finite coefficient"));
        }
        Ok(AffineMap { matrix, offset })
    }

    /// `x -> s * x + offset`.
    pub fn scaled(s: f64, offset: Vec<f64>) -> Self {
        let d = offset.len();
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| if i == j { s } else { 0.0 }).collect())
            .collect();
        AffineMap { matrix, offset }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.matrix.iter().zip(&self.offset)) {
            *o = row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
        }
    }
}

pub type RawMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum IfsMap {
    Affine(AffineMap),
    Custom { name: String, dim: usize, map: RawMap },
}

impl fmt::Debug for IfsMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IfsMap::Affine(a) => a.fmt(f),
            IfsMap::Custom { name, dim, .. } => write!(f, "{name} (dim {dim})"),
        }
    }
}

impl IfsMap {
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        map: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        IfsMap::Custom {
            name: name.into(),
            dim,
            map: Arc::new(map),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            IfsMap::Affine(a) => a.dim(),
            IfsMap::Custom { dim, .. } => *dim,
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            IfsMap::Affine(a) => a.apply(x, out),
            IfsMap::Custom { map, .. } => map(x, out),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        Point::from_slice_unchecked(&out)
    }
}

/// The contraction family a system claims to belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `psi(p(fx, fy)) <= psi(M) - phi(M)` with the seven-term `M`.
    PsiPhi,
    /// `d(fx, fy) <= k d(x, y)`, `0 < k < 1`.
    Plain { k: f64 },
    /// `d(fx, fy) exp(d(fx, fy) - d(x, y)) <= exp(-tau) d(x, y)`.
    ExpF { tau: f64 },
    /// `d(fx, fy) (d(fx, fy) + 1) <= exp(-tau) d(x, y) (d(x, y) + 1)`.
    QuadraticF { tau: f64 },
    /// `d(fx, fy) <= d(x, y) / (1 + tau sqrt(d(x, y)))^2`.
    SqrtF { tau: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::PsiPhi => Ok(()),
            Family::Plain { k } if k > 0.0 && k < 1.0 => Ok(()),
            Family::Plain { k } => Err(Error::invalid(format!("plain contraction needs 0 < k < 1, got {k}"))),
            Family::ExpF { tau } | Family::QuadraticF { tau } | Family::SqrtF { tau } if tau > 0.0 => Ok(()),
            _ => Err(Error::invalid("F-contraction families need tau > 0")),
        }
    }

    /// Whether pairs with `fx = fy` are excluded from the check.
    fn skips_collapsed_pairs(&self) -> bool {
        !matches!(self, Family::PsiPhi | Family::Plain { .. })
    }

    /// `rhs - lhs` for image distance `a` and source distance `b`.
    fn slack(&self, a: f64, b: f64) -> f64 {
        match *self {
            Family::PsiPhi => unreachable!("psi-phi slack needs the full pair"),
            Family::Plain { k } => k * b - a,
            Family::ExpF { tau } => (-tau).exp() * b - a * (a - b).exp(),
            Family::QuadraticF { tau } => (-tau).exp() * b * (b + 1.0) - a * (a + 1.0),
            Family::SqrtF { tau } => {
                let den = 1.0 + tau * b.sqrt();
                b / (den * den) - a
            }
        }
    }
}

/// Which distance the family inequalities use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyDistance {
    /// The induced metric `p^S`.
    #[default]
    Induced,
    /// The partial metric `p` itself.
    Partial,
}

#[derive(Clone)]
pub struct IfsSystem {
    name: String,
    dim: usize,
    maps: Vec<IfsMap>,
    metric: Arc<dyn PartialMetric>,
    control: ControlPair,
    family: Family,
}

impl fmt::Debug for IfsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IfsSystem")
            .field("name", &self.name)
            .field("maps", &self.maps)
            .field("metric", &self.metric.name())
            .field("control", &self.control.name())
            .field("family", &self.family)
            .finish()
    }
}

impl IfsSystem {
    pub fn new(
        name: impl Into<String>,
        maps: Vec<IfsMap>,
        metric: Arc<dyn PartialMetric>,
        control: ControlPair,
        family: Family,
    ) -> Result<Self> {
        let dim = maps
            .first()
            .ok_or_else(|| Error::invalid("an IFS needs at least one map"))?
            .dim();
        if let Some(bad) = maps.iter().find(|m| m.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.dim(),
            });
        }
        family.validate()?;
        Ok(IfsSystem {
            name: name.into(),
            dim,
            maps,
            metric,
            control,
            family,
        })
    }

    /// Three half-scale maps towards the corners of the unit equilateral
    /// triangle, under the Euclidean metric.
    pub fn sierpinski() -> Self {
        let h = 3f64.sqrt() / 4.0;
        let maps = [[0.0, 0.0], [0.5, 0.0], [0.25, h]]
            .into_iter()
            .map(|o| IfsMap::Affine(AffineMap::scaled(0.5, o.to_vec())))
            .collect();
        IfsSystem::new(
            "sierpinski",
            maps,
            Arc::new(BuiltinMetric::Euclidean),
            ControlPair::linear(0.5).expect("valid constant"),
            Family::Plain { k: 0.5 },
        )
        .expect("static system is valid")
    }

    /// `{x/2, x/2 + 1/2}` on the line; its attractor is `[0, 1]`.
    pub fn dyadic() -> Self {
        let maps = [0.0, 0.5]
            .into_iter()
            .map(|o| IfsMap::Affine(AffineMap::scaled(0.5, vec![o])))
            .collect();
        IfsSystem::new(
            "dyadic",
            maps,
            Arc::new(BuiltinMetric::Euclidean),
            ControlPair::linear(0.5).expect("valid constant"),
            Family::Plain { k: 0.5 },
        )
        .expect("static system is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> &[IfsMap] {
        &self.maps
    }

    pub fn metric(&self) -> &dyn PartialMetric {
        self.metric.as_ref()
    }

    pub fn control(&self) -> &ControlPair {
        &self.control
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn with_family(mut self, family: Family) -> Result<Self> {
        family.validate()?;
        self.family = family;
        Ok(self)
    }

    pub fn with_control(mut self, control: ControlPair) -> Self {
        self.control = control;
        self
    }

    fn check_set(&self, a: &FiniteSet) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: a.dim(),
            });
        }
        Ok(())
    }
}

/// `T(A)`: every map applied to every point, map-major, then merged greedily
/// within `merge_radius` in `p^S`.
pub fn hutchinson(sys: &IfsSystem, a: &FiniteSet, merge_radius: f64) -> Result<FiniteSet> {
    sys.check_set(a)?;
    let d = sys.dim;
    let n = a.len();
    let mut out = vec![0.0; sys.maps.len() * n * d];
    for (map, block) in sys.maps.iter().zip(out.chunks_mut(n * d)) {
        block
            .par_chunks_mut(4096 * d)
            .zip(a.coords().par_chunks(4096 * d))
            .for_each(|(dst, src)| {
                for (o, x) in dst.chunks_exact_mut(d).zip(src.chunks_exact(d)) {
                    map.apply_into(x, o);
                }
            });
    }
    if let Some(bad) = out.chunks_exact(d).find(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::NonFinite(bad.to_vec()));
    }
    Ok(FiniteSet::from_flat_unchecked(
        d,
        dedup_radius(sys.metric(), d, out, merge_radius),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Defaults to `tol / 10`.
    pub merge_radius: Option<f64>,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            tol: 1e-4,
            max_iters: 60,
            merge_radius: None,
        }
    }
}

impl AttractorOptions {
    pub fn merge_radius(&self) -> f64 {
        self.merge_radius.unwrap_or(self.tol / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractorStatus {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct AttractorRun {
    pub status: AttractorStatus,
    /// `H(A_m, A_{m+1})` for each applied step.
    pub hp_steps: Vec<f64>,
    /// `|A_m|` for `m = 0..=iterations`.
    pub sizes: Vec<usize>,
    /// `A_{m-1}` at exit.
    pub previous: FiniteSet,
    /// `A_m` at exit: the attractor estimate.
    pub last: FiniteSet,
    pub merge_radius: f64,
}

impl AttractorRun {
    pub fn iterations(&self) -> usize {
        self.hp_steps.len()
    }

    pub fn attractor(&self) -> &FiniteSet {
        &self.last
    }

    /// Writes `step, hp, size` rows.
    pub fn write_steps_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "hp", "size"])?;
        for (m, h) in self.hp_steps.iter().enumerate() {
            out.write_record([m.to_string(), h.to_string(), self.sizes[m + 1].to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<hp steps>", e))?;
        Ok(())
    }
}

/// Iterates `T` from `a0` until `H(A_m, A_{m+1}) <= tol` or `max_iters`.
pub fn iterate_attractor(sys: &IfsSystem, a0: &FiniteSet, opts: &AttractorOptions) -> Result<AttractorRun> {
    sys.check_set(a0)?;
    if !(opts.tol >= 0.0) || opts.max_iters == 0 {
        return Err(Error::invalid("attractor iteration needs tol >= 0 and max_iters >= 1"));
    }
    let radius = opts.merge_radius();
    let mut prev = a0.clone();
    let mut cur = a0.clone();
    let mut hp_steps = Vec::new();
    let mut sizes = vec![a0.len()];
    let mut status = AttractorStatus::MaxIters;
    for _ in 0..opts.max_iters {
        let next = hutchinson(sys, &cur, radius)?;
        let h = h_p(sys.metric(), &cur, &next)?;
        hp_steps.push(h);
        sizes.push(next.len());
        prev = std::mem::replace(&mut cur, next);
        if h <= opts.tol {
            status = AttractorStatus::Converged;
            break;
        }
    }
    Ok(AttractorRun {
        status,
        hp_steps,
        sizes,
        previous: prev,
        last: cur,
        merge_radius: radius,
    })
}

/// `T^depth(seed)` with exact-duplicate removal only.
pub fn enumerate_depth(sys: &IfsSystem, seed: &FiniteSet, depth: usize) -> Result<FiniteSet> {
    let mut cur = seed.clone();
    for _ in 0..depth {
        cur = hutchinson(sys, &cur, 0.0)?;
    }
    Ok(cur)
}

/// The seven terms whose maximum is `M_T(A, B)`, in display order:
/// `H(A,B)`, `H(A,TA)`, `H(B,TB)`, `H(T²A,TA)`, `H(T²A,B)`, `H(T²A,TB)`,
/// `(H(A,TB) + H(B,TA)) / 2`.
pub fn mt_terms(sys: &IfsSystem, a: &FiniteSet, b: &FiniteSet) -> Result<[f64; 7]> {
    let m = sys.metric();
    let ta = hutchinson(sys, a, 0.0)?;
    let tb = hutchinson(sys, b, 0.0)?;
    let tta = hutchinson(sys, &ta, 0.0)?;
    Ok([
        h_p(m, a, b)?,
        h_p(m, a, &ta)?,
        h_p(m, b, &tb)?,
        h_p(m, &tta, &ta)?,
        h_p(m, &tta, b)?,
        h_p(m, &tta, &tb)?,
        (h_p(m, a, &tb)? + h_p(m, b, &ta)?) / 2.0,
    ])
}

/// `M_T(A, B)`.
pub fn compute_mt(sys: &IfsSystem, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    Ok(mt_terms(sys, a, b)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetPairRecord {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsContractionReport {
    pub n_pairs: usize,
    pub n_violations: usize,
    pub worst: Option<SetPairRecord>,
    pub violations: Vec<SetPairRecord>,
}

impl IfsContractionReport {
    pub fn is_clean(&self) -> bool {
        self.n_violations == 0
    }
}

/// Evaluates `psi(H(TA, TB)) <= psi(M_T) - phi(M_T)` on each pair.
pub fn verify_ifs_contraction(sys: &IfsSystem, pairs: &[(FiniteSet, FiniteSet)]) -> Result<IfsContractionReport> {
    if pairs.is_empty() {
        return Err(Error::invalid("contraction check needs at least one set pair"));
    }
    let cp = sys.control();
    let records: Vec<SetPairRecord> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (a, b))| {
            let mt = compute_mt(sys, a, b)?;
            let ta = hutchinson(sys, a, 0.0)?;
            let tb = hutchinson(sys, b, 0.0)?;
            let lhs = cp.psi(h_p(sys.metric(), &ta, &tb)?);
            let rhs = cp.psi(mt) - cp.phi(mt);
            Ok(SetPairRecord {
                index,
                lhs,
                rhs,
                slack: rhs - lhs,
            })
        })
        .collect::<Result<_>>()?;
    let worst = records.iter().min_by(|a, b| a.slack.total_cmp(&b.slack)).cloned();
    let violations: Vec<SetPairRecord> = records.into_iter().filter(|r| r.slack < -TOL_FAMILY).collect();
    Ok(IfsContractionReport {
        n_pairs: pairs.len(),
        n_violations: violations.len(),
        worst,
        violations: violations.into_iter().take(crate::engine::VIOLATION_CAP).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub distance: FamilyDistance,
    pub n_maps: usize,
    pub n_pairs: usize,
    pub n_checked: usize,
    /// Pairs excluded because `f_i x = f_i y`.
    pub n_skipped: usize,
    pub n_violations: usize,
    pub violations_per_map: Vec<usize>,
    pub worst_slack: Option<f64>,
}

impl FamilyReport {
    pub fn is_clean(&self) -> bool {
        self.n_violations == 0
    }
}

/// Seven-term distance of the single-map (psi, phi) family condition:
/// `p(x,y)`, `p(fx,x)`, `p(fy,y)`, `p(f²x,fx)`, `p(f²y,y)`, `p(f²y,fy)`,
/// `(p(fx,y) + p(fy,x)) / 2`.
pub fn family_mp<M: PartialMetric + ?Sized>(m: &M, f: &IfsMap, x: &[f64], y: &[f64]) -> f64 {
    let (fx, fy) = (f.apply(x), f.apply(y));
    let ffy = f.apply(&fy);
    let ffx = f.apply(&fx);
    [
        m.distance(x, y),
        m.distance(&fx, x),
        m.distance(&fy, y),
        m.distance(&ffx, &fx),
        m.distance(&ffy, y),
        m.distance(&ffy, &fy),
        (m.distance(&fx, y) + m.distance(&fy, x)) / 2.0,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates the system's family inequality for every map on every sample
/// pair.
pub fn check_family(sys: &IfsSystem, pairs: &[(Point, Point)], distance: FamilyDistance) -> Result<FamilyReport> {
    let m = sys.metric();
    for (x, y) in pairs {
        for p in [x, y] {
            if p.dim() != sys.dim {
                return Err(Error::Dimension {
                    expected: sys.dim,
                    got: p.dim(),
                });
            }
        }
    }
    let dist = |a: &[f64], b: &[f64]| match distance {
        FamilyDistance::Induced => ps(m, a, b),
        FamilyDistance::Partial => m.distance(a, b),
    };
    let family = sys.family;
    let cp = sys.control();
    let mut report = FamilyReport {
        family,
        distance,
        n_maps: sys.maps.len(),
        n_pairs: pairs.len(),
        n_checked: 0,
        n_skipped: 0,
        n_violations: 0,
        violations_per_map: vec![0; sys.maps.len()],
        worst_slack: None,
    };
    for (i, f) in sys.maps.iter().enumerate() {
        for (x, y) in pairs {
            let (fx, fy) = (f.apply(x), f.apply(y));
            if family.skips_collapsed_pairs() && fx == fy {
                report.n_skipped += 1;
                continue;
            }
            let slack = match family {
                Family::PsiPhi => {
                    let mp = family_mp(m, f, x, y);
                    cp.psi(mp) - cp.phi(mp) - cp.psi(m.distance(&fx, &fy))
                }
                _ => family.slack(dist(&fx, &fy), dist(x, y)),
            };
            report.n_checked += 1;
            report.worst_slack = Some(report.worst_slack.map_or(slack, |w| w.min(slack)));
            if slack < -TOL_FAMILY {
                report.n_violations += 1;
                report.violations_per_map[i] += 1;
            }
        }
    }
    Ok(report)
}

/// A binary raster of occupied pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<bool>,
}

impl Image {
    pub fn occupied(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Binary PPM: white points on black.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for &p in &self.pixels {
            let v = if p { 255 } else { 0 };
            out.extend_from_slice(&[v, v, v]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// `[x_min, y_min, x_max, y_max]`; defaults to the cloud's bounds padded
    /// by half a pixel.
    #[serde(default)]
    pub bounds: Option<[f64; 4]>,
}

/// Rasterises a cloud: a pixel is set iff at least one point falls in it.
/// One-dimensional clouds are drawn on the line `y = 0`.
pub fn render_attractor(set: &FiniteSet, raster: &Raster) -> Result<Image> {
    let (w, h) = (raster.width, raster.height);
    if w == 0 || h == 0 {
        return Err(Error::DegenerateBounds(format!("raster size {w}x{h}")));
    }
    let xy = |p: &[f64]| (p[0], p.get(1).copied().unwrap_or(0.0));
    let [x0, y0, x1, y1] = match raster.bounds {
        Some(b) => b,
        None => {
            let (lo, hi) = set.bounds();
            let (lx, ly) = xy(&lo);
            let (hx, hy) = xy(&hi);
            let pad = |lo: f64, hi: f64, n: usize| {
                let ext = hi - lo;
                if ext > 0.0 {
                    ext / (2.0 * (n.max(2) - 1) as f64)
                } else {
                    0.5
                }
            };
            let (px, py) = (pad(lx, hx, w), pad(ly, hy, h));
            [lx - px, ly - py, hx + px, hy + py]
        }
    };
    if !(x1 > x0 && y1 > y0) || [x0, y0, x1, y1].iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateBounds(format!("[{x0}, {y0}] x [{x1}, {y1}]")));
    }
    let mut pixels = vec![false; w * h];
    for p in set.points() {
        let (x, y) = xy(p);
        if x < x0 || x > x1 || y < y0 || y > y1 {
            continue;
        }
        let col = (((x - x0) / (x1 - x0) * w as f64) as usize).min(w - 1);
        let row = (((y1 - y) / (y1 - y0) * h as f64) as usize).min(h - 1);
        pixels[row * w + col] = true;
    }
    Ok(Image {
        width: w,
        height: h,
        pixels,
    })
}
