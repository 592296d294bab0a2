//! Partial Hausdorff distance between finite point clouds.
//!
//! For non-empty finite `A, B`:
//!
//! ```text
//! p(x, A)     = min { p(x, a) : a in A }
//! delta(A, B) = max { p(a, B) : a in A }
//! H(A, B)     = max { delta(A, B), delta(B, A) }
//! ```
//!
//! Large Euclidean clouds in one or two dimensions are searched through a
//! uniform grid index. The index returns exactly the brute-force minimum, so
//! both paths agree bit for bit.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ps, DomainDescriptor, PartialMetric};
use crate::point::Point;

/// Below this many `|A| * |B|` evaluations the brute-force scan is used.
const INDEX_THRESHOLD: usize = 1 << 20;
/// Points per rayon task in the outer max loop.
const CHUNK: usize = 4096;

/// A non-empty finite point set stored as a flat coordinate buffer. Points
/// keep their insertion order; exact duplicates are removed on construction.
#[derive(Clone, PartialEq)]
pub struct FiniteSet {
    dim: usize,
    coords: Vec<f64>,
}

impl std::fmt::Debug for FiniteSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.points()).finish()
    }
}

impl FiniteSet {
    pub fn new(points: &[Point]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet)?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.dim(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(FiniteSet {
            dim,
            coords: dedup_exact(dim, coords),
        })
    }

    /// Builds a set from a flat buffer of `dim`-dimensional points.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "flat buffer of length {} does not hold {dim}-dimensional points",
                coords.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(bad) = coords.chunks_exact(dim).find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite(bad.to_vec()));
        }
        Ok(FiniteSet {
            dim,
            coords: dedup_exact(dim, coords),
        })
    }

    pub fn scalars(values: &[f64]) -> Result<Self> {
        FiniteSet::from_flat(1, values.to_vec())
    }

    pub fn singleton(p: &Point) -> Self {
        FiniteSet {
            dim: p.dim(),
            coords: p.to_vec(),
        }
    }

    /// Wraps an already deduplicated, finite, non-empty buffer.
    pub(crate) fn from_flat_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.len() % dim == 0);
        FiniteSet { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false: sets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.points().map(Point::from_slice_unchecked).collect()
    }

    pub fn contains_exact(&self, x: &[f64]) -> bool {
        self.points().any(|p| p == x)
    }

    /// Every point of `self` also lies in `other`, under exact equality.
    pub fn is_subset_of(&self, other: &FiniteSet) -> bool {
        let mut keys = CellMap::default();
        for (i, p) in other.points().enumerate() {
            keys.entry(exact_hash(p)).or_insert_with(Vec::new).push(i);
        }
        self.points().all(|p| {
            keys.get(&exact_hash(p))
                .is_some_and(|c| c.iter().any(|&i| other.point(i) == p))
        })
    }

    pub fn same_set(&self, other: &FiniteSet) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }

    /// `min { p(c, c) : c in self }`.
    pub fn min_self_distance<M: PartialMetric + ?Sized>(&self, m: &M) -> f64 {
        self.points().map(|c| m.distance(c, c)).fold(f64::INFINITY, f64::min)
    }

    /// `max { p(c, c) : c in self }`.
    pub fn max_self_distance<M: PartialMetric + ?Sized>(&self, m: &M) -> f64 {
        self.points()
            .map(|c| m.distance(c, c))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Axis-aligned bounds `(lo, hi)` per coordinate.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (k, &c) in p.iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        (lo, hi)
    }

    /// Reads one point per row, no header.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut dim = None;
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("bad coordinate in point cloud: {e}")))?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Dimension {
                        expected: d,
                        got: row.len(),
                    })
                }
                _ => {}
            }
            coords.extend(row);
        }
        FiniteSet::from_flat(dim.ok_or(Error::EmptySet)?, coords)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        FiniteSet::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for p in self.points() {
            out.write_record(p.iter().map(f64::to_string))?;
        }
        out.flush().map_err(|e| Error::io("<point cloud>", e))?;
        Ok(())
    }

    pub fn store_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Identity hasher for keys that are already well mixed.
#[derive(Default)]
pub(crate) struct PremixedHasher(u64);

impl Hasher for PremixedHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = mix(self.0 ^ b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

pub(crate) type CellMap<V> = HashMap<u64, V, BuildHasherDefault<PremixedHasher>>;

fn mix(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

fn combine(words: impl Iterator<Item = u64>) -> u64 {
    words.fold(0x9e37_79b9_7f4a_7c15, |h, w| mix(h ^ w))
}

fn exact_hash(p: &[f64]) -> u64 {
    combine(p.iter().map(|c| (c + 0.0).to_bits()))
}

/// Removes exact duplicates, keeping first occurrences in order.
pub(crate) fn dedup_exact(dim: usize, coords: Vec<f64>) -> Vec<f64> {
    let n = coords.len() / dim;
    let mut heads: CellMap<u32> = CellMap::with_capacity_and_hasher(n, Default::default());
    let mut next: Vec<u32> = Vec::with_capacity(n);
    let mut kept: Vec<f64> = Vec::with_capacity(coords.len());
    for p in coords.chunks_exact(dim) {
        let key = exact_hash(p);
        let head = heads.get(&key).copied();
        let mut cur = head;
        let mut dup = false;
        while let Some(i) = cur.filter(|&i| i != u32::MAX) {
            let i = i as usize;
            if &kept[i * dim..(i + 1) * dim] == p {
                dup = true;
                break;
            }
            cur = Some(next[i]);
        }
        if !dup {
            let idx = next.len() as u32;
            next.push(head.unwrap_or(u32::MAX));
            heads.insert(key, idx);
            kept.extend_from_slice(p);
        }
    }
    kept
}

/// Greedy merge: scanning in order, a point is dropped when an already kept
/// point lies within `p^S <= radius`. `radius = 0` removes exact duplicates
/// only.
pub fn dedup_radius<M: PartialMetric + ?Sized>(m: &M, dim: usize, coords: Vec<f64>, radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return dedup_exact(dim, coords);
    }
    let reach = m
        .ps_coordinate_bound()
        .map(|c| c * radius * (1.0 + 1e-9))
        .filter(|c| c.is_finite() && *c > 0.0);
    match reach {
        Some(reach) => dedup_bucketed(m, dim, coords, radius, reach),
        None => dedup_naive(m, dim, &coords, radius),
    }
}

/// Reference quadratic greedy merge.
pub fn dedup_naive<M: PartialMetric + ?Sized>(m: &M, dim: usize, coords: &[f64], radius: f64) -> Vec<f64> {
    let mut kept: Vec<f64> = Vec::new();
    for p in coords.chunks_exact(dim) {
        if !kept.chunks_exact(dim).any(|k| ps(m, k, p) <= radius) {
            kept.extend_from_slice(p);
        }
    }
    kept
}

/// `reach` bounds the per-coordinate offset of any point within `radius`.
/// Cells are `2 reach` wide, so only neighbours on sides closer than `reach`
/// are probed.
fn dedup_bucketed<M: PartialMetric + ?Sized>(m: &M, dim: usize, coords: Vec<f64>, radius: f64, reach: f64) -> Vec<f64> {
    let cell = 2.0 * reach;
    let n = coords.len() / dim;
    let mut heads: CellMap<u32> = CellMap::with_capacity_and_hasher(n, Default::default());
    let mut next: Vec<u32> = Vec::with_capacity(n);
    let mut kept: Vec<f64> = Vec::with_capacity(coords.len());
    let offsets = neighbour_offsets(dim);
    let mut base = vec![0i64; dim];
    let mut probe = vec![0i64; dim];
    let mut need_lo = vec![false; dim];
    let mut need_hi = vec![false; dim];
    for p in coords.chunks_exact(dim) {
        for k in 0..dim {
            let b = (p[k] / cell).floor();
            base[k] = b as i64;
            need_lo[k] = p[k] - b * cell <= reach;
            need_hi[k] = (b + 1.0) * cell - p[k] <= reach;
        }
        let mut near = false;
        'cells: for off in offsets.chunks_exact(dim) {
            for k in 0..dim {
                if (off[k] < 0 && !need_lo[k]) || (off[k] > 0 && !need_hi[k]) {
                    continue 'cells;
                }
                probe[k] = base[k] + off[k];
            }
            let mut cur = heads.get(&cell_key(&probe)).copied().unwrap_or(u32::MAX);
            while cur != u32::MAX {
                let i = cur as usize;
                if ps(m, &kept[i * dim..(i + 1) * dim], p) <= radius {
                    near = true;
                    break 'cells;
                }
                cur = next[i];
            }
        }
        if !near {
            let key = cell_key(&base);
            let idx = next.len() as u32;
            next.push(heads.get(&key).copied().unwrap_or(u32::MAX));
            heads.insert(key, idx);
            kept.extend_from_slice(p);
        }
    }
    kept
}

fn cell_key(cell: &[i64]) -> u64 {
    combine(cell.iter().map(|&c| c as u64))
}

/// All offsets in `{-1, 0, 1}^dim`, flattened.
fn neighbour_offsets(dim: usize) -> Vec<i64> {
    let count = 3usize.pow(dim as u32);
    let mut out = Vec::with_capacity(count * dim);
    for mut code in 0..count {
        for _ in 0..dim {
            out.push((code % 3) as i64 - 1);
            code /= 3;
        }
    }
    out
}

/// Uniform grid over a planar (or linear) bounding box, storing point indices
/// per cell in compressed rows.
struct GridIndex<'a> {
    set: &'a FiniteSet,
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

fn planar(p: &[f64]) -> [f64; 2] {
    [p[0], p.get(1).copied().unwrap_or(0.0)]
}

impl<'a> GridIndex<'a> {
    /// `lo, hi` must cover both the indexed set and every later query.
    fn build(set: &'a FiniteSet, lo: [f64; 2], hi: [f64; 2]) -> Self {
        let n = set.len();
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        let target = (2 * n).max(1) as f64;
        let mut cell = if w > 0.0 && h > 0.0 {
            (w * h / target).sqrt()
        } else if w.max(h) > 0.0 {
            w.max(h) / target
        } else {
            1.0
        };
        let dims = |cell: f64| ((w / cell) as usize + 1, (h / cell) as usize + 1);
        while {
            let (nx, ny) = dims(cell);
            nx.saturating_mul(ny) > 8 * n + 16
        } {
            cell *= 1.5;
        }
        let (nx, ny) = dims(cell);
        let mut idx = GridIndex {
            set,
            origin: lo,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            items: vec![0; n],
        };
        let cells: Vec<usize> = set.points().map(|p| idx.cell_of(planar(p))).collect();
        for &c in &cells {
            idx.starts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            idx.starts[c + 1] += idx.starts[c];
        }
        let mut fill = idx.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            idx.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        idx
    }

    fn coords_of(&self, q: [f64; 2]) -> (usize, usize) {
        let cx = ((q[0] - self.origin[0]) / self.cell).floor().max(0.0) as usize;
        let cy = ((q[1] - self.origin[1]) / self.cell).floor().max(0.0) as usize;
        (cx.min(self.nx - 1), cy.min(self.ny - 1))
    }

    fn cell_of(&self, q: [f64; 2]) -> usize {
        let (cx, cy) = self.coords_of(q);
        cy * self.nx + cx
    }

    /// Lower bound on the distance from `q` to any point of cell `(cx, cy)`.
    fn cell_gap(&self, q: [f64; 2], cx: usize, cy: usize) -> f64 {
        let gap = |v: f64, c: usize, origin: f64| {
            let lo = origin + c as f64 * self.cell;
            (lo - v).max(v - (lo + self.cell)).max(0.0)
        };
        let dx = gap(q[0], cx, self.origin[0]);
        let dy = gap(q[1], cy, self.origin[1]);
        (dx * dx + dy * dy).sqrt() * (1.0 - 1e-9)
    }

    fn scan_cell<M: PartialMetric + ?Sized>(&self, m: &M, q: &[f64], cx: usize, cy: usize, best: &mut f64) {
        let c = cy * self.nx + cx;
        let (lo, hi) = (self.starts[c] as usize, self.starts[c + 1] as usize);
        if lo == hi || self.cell_gap(planar(q), cx, cy) >= *best {
            return;
        }
        for &i in &self.items[lo..hi] {
            let d = m.distance(q, self.set.point(i as usize));
            if d < *best {
                *best = d;
            }
        }
    }

    /// Lower bound on the distance from `q` to any cell outside the block of
    /// cells within `r` of `(cx, cy)`; `None` once the block covers the grid.
    fn outside_gap(&self, q: [f64; 2], cx: usize, cy: usize, r: usize) -> Option<f64> {
        let mut gap = f64::INFINITY;
        if cx > r {
            gap = gap.min(q[0] - (self.origin[0] + (cx - r) as f64 * self.cell));
        }
        if cx + r + 1 < self.nx {
            gap = gap.min(self.origin[0] + (cx + r + 1) as f64 * self.cell - q[0]);
        }
        if cy > r {
            gap = gap.min(q[1] - (self.origin[1] + (cy - r) as f64 * self.cell));
        }
        if cy + r + 1 < self.ny {
            gap = gap.min(self.origin[1] + (cy + r + 1) as f64 * self.cell - q[1]);
        }
        gap.is_finite().then(|| gap.max(0.0) * (1.0 - 1e-9))
    }

    /// Exact `min { m(q, b) }` over the indexed set.
    fn nearest<M: PartialMetric + ?Sized>(&self, m: &M, q: &[f64]) -> f64 {
        let qp = planar(q);
        let (cx, cy) = self.coords_of(qp);
        let mut best = f64::INFINITY;
        for r in 0.. {
            let x0 = cx as isize - r as isize;
            let x1 = cx as isize + r as isize;
            let y0 = cy as isize - r as isize;
            let y1 = cy as isize + r as isize;
            let inx = |x: isize| x >= 0 && (x as usize) < self.nx;
            let iny = |y: isize| y >= 0 && (y as usize) < self.ny;
            if r == 0 {
                self.scan_cell(m, q, cx, cy, &mut best);
            } else {
                for x in x0.max(0)..=x1.min(self.nx as isize - 1) {
                    if iny(y0) {
                        self.scan_cell(m, q, x as usize, y0 as usize, &mut best);
                    }
                    if iny(y1) {
                        self.scan_cell(m, q, x as usize, y1 as usize, &mut best);
                    }
                }
                for y in (y0 + 1).max(0)..=(y1 - 1).min(self.ny as isize - 1) {
                    if inx(x0) {
                        self.scan_cell(m, q, x0 as usize, y as usize, &mut best);
                    }
                    if inx(x1) {
                        self.scan_cell(m, q, x1 as usize, y as usize, &mut best);
                    }
                }
            }
            match self.outside_gap(qp, cx, cy, r) {
                Some(gap) if best > gap => {}
                _ => break,
            }
        }
        best
    }
}

fn check_dims(a: &FiniteSet, b: &FiniteSet) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        })
    }
}

/// `p(x, A)`.
pub fn point_to_set<M: PartialMetric + ?Sized>(m: &M, x: &Point, a: &FiniteSet) -> Result<f64> {
    if x.dim() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: x.dim(),
        });
    }
    if !m.contains(x) {
        return Err(Error::DomainMismatch {
            metric: m.name().to_string(),
            point: x.to_vec(),
        });
    }
    Ok(nearest_brute(m, x, a))
}

fn nearest_brute<M: PartialMetric + ?Sized>(m: &M, x: &[f64], a: &FiniteSet) -> f64 {
    let mut best = f64::INFINITY;
    for p in a.points() {
        let d = m.distance(x, p);
        if d < best {
            best = d;
        }
    }
    best
}

fn par_max(values: impl IndexedParallelIterator<Item = f64>) -> f64 {
    values.reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `delta(A, B)` by exhaustive scan.
pub fn delta_p_brute<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    check_dims(a, b)?;
    Ok(par_max(a.coords().par_chunks(CHUNK * a.dim()).map(|chunk| {
        chunk
            .chunks_exact(a.dim())
            .map(|p| nearest_brute(m, p, b))
            .fold(f64::NEG_INFINITY, f64::max)
    })))
}

fn use_index<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, b: &FiniteSet) -> bool {
    m.is_euclidean() && a.dim() <= 2 && a.len().saturating_mul(b.len()) >= INDEX_THRESHOLD
}

fn joint_bounds(a: &FiniteSet, b: &FiniteSet) -> ([f64; 2], [f64; 2]) {
    let (la, ha) = a.bounds();
    let (lb, hb) = b.bounds();
    let (la, ha, lb, hb) = (planar(&la), planar(&ha), planar(&lb), planar(&hb));
    (
        [la[0].min(lb[0]), la[1].min(lb[1])],
        [ha[0].max(hb[0]), ha[1].max(hb[1])],
    )
}

fn delta_indexed<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, index: &GridIndex<'_>) -> f64 {
    par_max(a.coords().par_chunks(CHUNK * a.dim()).map(|chunk| {
        chunk
            .chunks_exact(a.dim())
            .map(|p| index.nearest(m, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// `delta(A, B) = max_a min_b p(a, b)`.
pub fn delta_p<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    check_dims(a, b)?;
    if !use_index(m, a, b) {
        return delta_p_brute(m, a, b);
    }
    let (lo, hi) = joint_bounds(a, b);
    Ok(delta_indexed(m, a, &GridIndex::build(b, lo, hi)))
}

/// `H(A, B) = max { delta(A, B), delta(B, A) }`.
pub fn h_p<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    check_dims(a, b)?;
    if !use_index(m, a, b) {
        return Ok(delta_p_brute(m, a, b)?.max(delta_p_brute(m, b, a)?));
    }
    let (lo, hi) = joint_bounds(a, b);
    let ab = delta_indexed(m, a, &GridIndex::build(b, lo, hi));
    let ba = delta_indexed(m, b, &GridIndex::build(a, lo, hi));
    Ok(ab.max(ba))
}

/// `H(A, B)` by exhaustive scan.
pub fn h_p_brute<M: PartialMetric + ?Sized>(m: &M, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    Ok(delta_p_brute(m, a, b)?.max(delta_p_brute(m, b, a)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffViolations {
    /// `delta(A, A) = max p(a, a)`.
    pub delta_self: usize,
    /// `delta(A, A) <= delta(A, B)`.
    pub delta_self_bound: usize,
    /// `delta(A, B) = 0` implies `A ⊆ B`.
    pub delta_zero_subset: usize,
    /// `delta(A, B) <= delta(A, C) + delta(C, B) - min p(c, c)`.
    pub delta_triangle: usize,
    /// `H(A, A) <= H(A, B)`.
    pub h_self_bound: usize,
    /// `H(A, B) = H(B, A)`.
    pub h_symmetry: usize,
    /// `H(A, B) <= H(A, C) + H(C, B) - min p(c, c)`.
    pub h_triangle: usize,
    /// `H(A, B) = 0` implies `A = B`.
    pub h_zero_equal: usize,
}

impl HausdorffViolations {
    pub fn total(&self) -> usize {
        self.delta_self
            + self.delta_self_bound
            + self.delta_zero_subset
            + self.delta_triangle
            + self.h_self_bound
            + self.h_symmetry
            + self.h_triangle
            + self.h_zero_equal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausdorffReport {
    pub metric: String,
    pub n_sets: usize,
    pub n_triples: usize,
    pub tol: f64,
    pub violations: HausdorffViolations,
    /// Smallest slack over the inequality checks.
    pub worst_slack: f64,
}

impl HausdorffReport {
    pub fn is_clean(&self) -> bool {
        self.violations.total() == 0
    }
}

/// Tolerance for the inequality checks of [`check_hausdorff_props`].
pub const TOL_PROPS: f64 = 1e-10;

/// Checks the self-distance, symmetry, zero and modified-triangle properties
/// of `delta` and `H` over all ordered pairs and triples drawn from `sets`.
pub fn check_hausdorff_props<M: PartialMetric + ?Sized>(m: &M, sets: &[FiniteSet]) -> Result<HausdorffReport> {
    let n = sets.len();
    if n < 3 {
        return Err(Error::invalid("property check needs at least three sets"));
    }
    for s in &sets[1..] {
        check_dims(&sets[0], s)?;
    }
    let delta: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|ij| delta_p_brute(m, &sets[ij / n], &sets[ij % n]))
        .collect::<Result<_>>()?;
    let d = |i: usize, j: usize| delta[i * n + j];
    let h = |i: usize, j: usize| d(i, j).max(d(j, i));
    let inf_self: Vec<f64> = sets.iter().map(|s| s.min_self_distance(m)).collect();
    let sup_self: Vec<f64> = sets.iter().map(|s| s.max_self_distance(m)).collect();

    let mut v = HausdorffViolations::default();
    let mut worst = f64::INFINITY;
    let mut slack = |s: f64, count: &mut usize| {
        worst = worst.min(s);
        *count += (s < -TOL_PROPS) as usize;
    };
    for i in 0..n {
        slack(-(d(i, i) - sup_self[i]).abs(), &mut v.delta_self);
        for j in 0..n {
            slack(d(i, j) - d(i, i), &mut v.delta_self_bound);
            slack(h(i, j) - h(i, i), &mut v.h_self_bound);
            v.h_symmetry += (h(i, j) != h(j, i)) as usize;
            if d(i, j) == 0.0 && !sets[i].is_subset_of(&sets[j]) {
                v.delta_zero_subset += 1;
            }
            if h(i, j) == 0.0 && !sets[i].same_set(&sets[j]) {
                v.h_zero_equal += 1;
            }
            for (c, &inf_c) in inf_self.iter().enumerate() {
                slack(d(i, c) + d(c, j) - inf_c - d(i, j), &mut v.delta_triangle);
                slack(h(i, c) + h(c, j) - inf_c - h(i, j), &mut v.h_triangle);
            }
        }
    }
    Ok(HausdorffReport {
        metric: m.name().to_string(),
        n_sets: n,
        n_triples: n * n * n,
        tol: TOL_PROPS,
        violations: v,
        worst_slack: worst,
    })
}

/// `count` seeded random subsets of the domain grid with sizes drawn
/// uniformly from `1..=max_size`.
pub fn random_subsets(dom: &DomainDescriptor, count: usize, max_size: usize, seed: u64) -> Vec<FiniteSet> {
    let grid = dom.sample_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let size = rng.gen_range(1..=max_size.min(grid.len()).max(1));
            let picked: Vec<Point> = sample(&mut rng, grid.len(), size)
                .into_iter()
                .map(|i| grid[i].clone())
                .collect();
            FiniteSet::new(&picked).expect("grid subsets are non-empty")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::BuiltinMetric;

    fn set(v: &[f64]) -> FiniteSet {
        FiniteSet::scalars(v).unwrap()
    }

    #[test]
    fn point_to_set_examples() {
        let max = BuiltinMetric::Max;
        assert_eq!(
            point_to_set(&max, &Point::scalar(3.0), &set(&[1.0, 2.0, 5.0])).unwrap(),
            3.0
        );
        let mixed = BuiltinMetric::mixed(2.0).unwrap();
        let v = point_to_set(&mixed, &Point::scalar(0.5), &set(&[0.1, 0.6])).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        assert_eq!(point_to_set(&max, &Point::scalar(2.0), &set(&[1.0, 2.0])).unwrap(), 2.0);
    }

    #[test]
    fn delta_and_h_examples() {
        let max = BuiltinMetric::Max;
        let a = set(&[1.0, 2.0]);
        assert_eq!(delta_p(&max, &a, &a).unwrap(), 2.0);
        assert_eq!(delta_p(&max, &set(&[1.0, 3.0]), &set(&[2.0])).unwrap(), 3.0);
        assert_eq!(delta_p(&max, &set(&[2.0]), &set(&[1.0, 3.0])).unwrap(), 2.0);
        assert_eq!(h_p(&max, &set(&[1.0, 3.0]), &set(&[2.0])).unwrap(), 3.0);

        let e = BuiltinMetric::Euclidean;
        let a = FiniteSet::singleton(&Point::planar(0.0, 0.0));
        let b = FiniteSet::singleton(&Point::planar(3.0, 4.0));
        assert_eq!(h_p(&e, &a, &b).unwrap(), 5.0);
        let c = set(&[0.1, 0.4, 0.9]);
        assert_eq!(h_p(&e, &c, &c).unwrap(), 0.0);
        assert_eq!(delta_p(&e, &set(&[0.1]), &c).unwrap(), 0.0);
    }

    #[test]
    fn construction_dedups_and_validates() {
        let s = set(&[1.0, 2.0, 1.0, -0.0, 0.0]);
        assert_eq!(s.coords(), &[1.0, 2.0, -0.0]);
        assert!(matches!(FiniteSet::new(&[]), Err(Error::EmptySet)));
        assert!(FiniteSet::new(&[Point::scalar(1.0), Point::planar(0.0, 1.0)]).is_err());
        assert!(FiniteSet::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(h_p(
            &BuiltinMetric::Euclidean,
            &set(&[1.0]),
            &FiniteSet::singleton(&Point::planar(0.0, 0.0))
        )
        .is_err());
    }

    #[test]
    fn subset_tests() {
        let a = set(&[1.0, 2.0]);
        let b = set(&[3.0, 2.0, 1.0]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert!(a.same_set(&set(&[2.0, 1.0])));
    }

    #[test]
    fn radius_dedup_matches_naive() {
        let e = BuiltinMetric::Euclidean;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coords: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..1.0)).collect();
        for r in [0.0, 1e-3, 0.01, 0.05] {
            assert_eq!(dedup_radius(&e, 2, coords.clone(), r), {
                if r == 0.0 {
                    dedup_exact(2, coords.clone())
                } else {
                    dedup_naive(&e, 2, &coords, r)
                }
            });
        }
        let max = BuiltinMetric::Max;
        let line: Vec<f64> = (0..3000).map(|_| rng.gen_range(0.0..3.0)).collect();
        assert_eq!(
            dedup_radius(&max, 1, line.clone(), 0.01),
            dedup_naive(&max, 1, &line, 0.01)
        );
    }

    #[test]
    fn index_matches_brute_force() {
        let e = BuiltinMetric::Euclidean;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cloud = |n: usize, spread: f64| {
            let c: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..spread)).collect();
            FiniteSet::from_flat(2, c).unwrap()
        };
        let a = cloud(1500, 1.0);
        let b = cloud(900, 2.0);
        let (lo, hi) = joint_bounds(&a, &b);
        let idx = GridIndex::build(&b, lo, hi);
        for p in a.points() {
            assert_eq!(idx.nearest(&e, p).to_bits(), nearest_brute(&e, p, &b).to_bits());
        }
        assert_eq!(delta_indexed(&e, &a, &idx), delta_p_brute(&e, &a, &b).unwrap());

        let line = FiniteSet::from_flat(1, (0..2000).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let other = FiniteSet::from_flat(1, (0..1000).map(|i| (i as f64 * 0.11).cos() * 1.5).collect()).unwrap();
        assert!(use_index(&e, &line, &other));
        assert_eq!(h_p(&e, &line, &other).unwrap(), h_p_brute(&e, &line, &other).unwrap());
    }

    #[test]
    fn props_hold_for_bundled_metrics() {
        let dom = DomainDescriptor::nonneg_reals(2.0, 401).unwrap();
        for m in [BuiltinMetric::Max, BuiltinMetric::mixed(2.0).unwrap()] {
            let sets = random_subsets(&dom, 8, 20, 3);
            let r = check_hausdorff_props(&m, &sets).unwrap();
            assert!(r.is_clean(), "{r:?}");
        }
    }

    #[test]
    fn degenerate_triple() {
        let m = BuiltinMetric::Max;
        let a = set(&[0.5, 1.5]);
        let r = check_hausdorff_props(&m, &[a.clone(), a.clone(), a]).unwrap();
        assert!(r.is_clean());
        assert_eq!(r.n_triples, 27);
        assert!(check_hausdorff_props(&m, &[set(&[1.0]), set(&[2.0])]).is_err());
    }

    #[test]
    fn nested_pairs_have_zero_delta() {
        let e = BuiltinMetric::Euclidean;
        let a = set(&[0.25, 0.5]);
        let b = set(&[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(delta_p(&e, &a, &b).unwrap(), 0.0);
        let r = check_hausdorff_props(&e, &[a, b, set(&[0.3])]).unwrap();
        assert!(r.is_clean(), "{r:?}");
    }

    #[test]
    fn csv_round_trip() {
        let s = FiniteSet::from_flat(2, vec![0.1, 0.2, 1.0 / 3.0, 1e-20]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('e'));
        assert_eq!(FiniteSet::read_csv(buf.as_slice()).unwrap(), s);
        assert!(FiniteSet::read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(FiniteSet::read_csv("".as_bytes()).is_err());
    }
}
