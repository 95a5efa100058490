//! Sampled paths in `R^n` and their strong p-variation.
//!
//! A [`SampledPath`] is a finite list of `(time, point)` rows. Continuous
//! paths interpolate linearly between rows. Cadlag paths may in addition
//! repeat a time on two consecutive rows: the first row holds the left limit
//! `X(t-)`, the second the value `X(t)`. Between distinct times a cadlag path
//! is linear as well, so every path here is a finite concatenation of
//! straight segments and jumps.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Piecewise linear, no jumps.
    Continuous,
    /// Right-continuous with left limits; jumps stored as double rows.
    Cadlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
    kind: PathKind,
}

/// A p-variation value together with the exponent and interval it refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationNorm {
    pub p: f64,
    pub value: f64,
    pub interval: (f64, f64),
}

impl SampledPath {
    /// Builds a piecewise-linear path. `values` is row-major, `dim` entries per row.
    pub fn continuous(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        let path = Self { times, values, dim, kind: PathKind::Continuous };
        path.validate()?;
        Ok(path)
    }

    /// Builds a cadlag path. A time appearing on two consecutive rows marks a
    /// jump: left limit first, then the value.
    pub fn cadlag(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        let path = Self { times, values, dim, kind: PathKind::Cadlag };
        path.validate()?;
        Ok(path)
    }

    /// Builds a cadlag path from rows that may contain null jumps (a repeated
    /// time with equal values); those collapse to a single row.
    pub fn cadlag_merging_null_jumps(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.len() != times.len() * dim {
            return Self::cadlag(times, values, dim);
        }
        let mut keep_t = Vec::with_capacity(times.len());
        let mut keep_v = Vec::with_capacity(values.len());
        for (i, row) in values.chunks_exact(dim).enumerate() {
            if i > 0 && times[i] == times[i - 1] && row == &keep_v[keep_v.len() - dim..] {
                continue;
            }
            keep_t.push(times[i]);
            keep_v.extend_from_slice(row);
        }
        Self::cadlag(keep_t, keep_v, dim)
    }

    pub fn new(kind: PathKind, times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        match kind {
            PathKind::Continuous => Self::continuous(times, values, dim),
            PathKind::Cadlag => Self::cadlag(times, values, dim),
        }
    }

    /// Scalar continuous path from times and values.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::continuous(times, values, 1)
    }

    /// Samples `f` at the given times.
    pub fn from_fn<F>(times: Vec<f64>, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut values = vec![0.0; times.len() * dim];
        for (t, row) in times.iter().zip(values.chunks_exact_mut(dim.max(1))) {
            f(*t, row);
        }
        Self::continuous(times, values, dim)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if self.times.is_empty() {
            return Err(Error::InvalidPath("path has no samples".into()));
        }
        if self.values.len() != self.times.len() * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.times.len() * self.dim,
                found: self.values.len(),
            });
        }
        if self.times.iter().chain(self.values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 1..self.times.len() {
            let (a, b) = (self.times[i - 1], self.times[i]);
            if b > a {
                continue;
            }
            if b < a || self.kind == PathKind::Continuous {
                return Err(Error::InvalidPath(alloc::format!(
                    "times must be strictly increasing (row {i})"
                )));
            }
            if i == 1 {
                return Err(Error::InvalidPath("a jump cannot sit on the first row".into()));
            }
            if i >= 2 && self.times[i - 2] == b {
                return Err(Error::InvalidPath(alloc::format!(
                    "more than two rows share time {b}"
                )));
            }
            if self.point(i - 1) == self.point(i) {
                return Err(Error::ZeroJump(i));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Row-major sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// Row indices holding the post-jump value `X(t)`; the left limit is on the row before.
    pub fn jump_indices(&self) -> Vec<usize> {
        (1..self.len()).filter(|&i| self.times[i] == self.times[i - 1]).collect()
    }

    pub fn has_jumps(&self) -> bool {
        self.times.windows(2).any(|w| w[0] == w[1])
    }

    /// Jump vector `X(t) - X(t-)` stored at row `i` (which must be a jump row).
    pub fn jump_at(&self, i: usize) -> Vec<f64> {
        self.point(i).iter().zip(self.point(i - 1)).map(|(a, b)| a - b).collect()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time()
    }

    fn check_interval(&self, s: f64, t: f64) -> Result<()> {
        if !(s <= t) || !self.contains_time(s) || !self.contains_time(t) {
            return Err(Error::IntervalOutOfRange {
                s,
                t,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        Ok(())
    }

    /// Right-continuous evaluation: at a jump time the post-jump value is returned.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_interval(t, t)?;
        let k = self.times.partition_point(|&x| x <= t);
        if self.times[k - 1] == t {
            return Ok(self.point(k - 1).to_vec());
        }
        Ok(self.interpolate(k - 1, t))
    }

    /// Left limit `X(t-)`; equals [`value_at`](Self::value_at) away from jumps.
    pub fn left_value_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_interval(t, t)?;
        let k = self.times.partition_point(|&x| x < t);
        if k < self.len() && self.times[k] == t {
            return Ok(self.point(k).to_vec());
        }
        Ok(self.interpolate(k - 1, t))
    }

    // Linear interpolation on the cell starting at row `i`.
    fn interpolate(&self, i: usize, t: f64) -> Vec<f64> {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.point(i)
            .iter()
            .zip(self.point(i + 1))
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// The path restricted to `[s, t]`, with interpolated rows added at the
    /// ends when they fall inside a cell. A jump at `s` is excluded (the
    /// restriction starts at `X(s)`); a jump at `t` is kept.
    pub fn restrict(&self, s: f64, t: f64) -> Result<SampledPath> {
        self.check_interval(s, t)?;
        let mut times = Vec::new();
        let mut values = Vec::new();

        let after_s = self.times.partition_point(|&x| x <= s);
        let first_row = if self.times[after_s - 1] == s {
            after_s - 1
        } else {
            times.push(s);
            values.extend(self.interpolate(after_s - 1, s));
            after_s
        };
        let upto_t = self.times.partition_point(|&x| x <= t);
        for i in first_row..upto_t {
            times.push(self.times[i]);
            values.extend_from_slice(self.point(i));
        }
        if self.times[upto_t - 1] != t {
            times.push(t);
            values.extend(self.interpolate(upto_t - 1, t));
        }
        let kind = if times.windows(2).any(|w| w[0] == w[1]) {
            PathKind::Cadlag
        } else {
            self.kind
        };
        Ok(SampledPath { times, values, dim: self.dim, kind })
    }

    /// Inserts `factor - 1` equally spaced rows inside every cell of positive
    /// length. The interpolated path is unchanged.
    pub fn refine(&self, factor: usize) -> SampledPath {
        let factor = factor.max(1);
        let mut times = Vec::with_capacity(self.len() * factor);
        let mut values = Vec::with_capacity(self.values.len() * factor);
        for i in 0..self.len() {
            if i > 0 && self.times[i] > self.times[i - 1] {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                for k in 1..factor {
                    let w = k as f64 / factor as f64;
                    times.push(t0 + w * (t1 - t0));
                    values.extend(
                        self.point(i - 1).iter().zip(self.point(i)).map(|(a, b)| a + w * (b - a)),
                    );
                }
            }
            times.push(self.times[i]);
            values.extend_from_slice(self.point(i));
        }
        SampledPath { times, values, dim: self.dim, kind: self.kind }
    }

    /// Pointwise map of the sample values into a path of dimension `dim`.
    pub fn map_values<F>(&self, dim: usize, mut f: F) -> Result<SampledPath>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut values = vec![0.0; self.len() * dim];
        for (src, dst) in self.points().zip(values.chunks_exact_mut(dim)) {
            f(src, dst);
        }
        SampledPath::new(self.kind, self.times.clone(), values, dim)
    }

    /// Difference of two paths sampled on identical grids.
    pub fn sub(&self, other: &SampledPath) -> Result<SampledPath> {
        if self.times != other.times || self.dim != other.dim {
            return Err(Error::GridMismatch("paths must share time grid and dimension".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(SampledPath { times: self.times.clone(), values, dim: self.dim, kind: self.kind })
    }
}

/// Euclidean distance between two points.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn euclidean_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Exact strong p-variation of `path` over `[s, t]`.
///
/// Every path here is piecewise linear (plus jumps), and for `p >= 1` the sum
/// over a partition is convex in each partition point along a straight
/// segment, so the supremum over all partitions is attained on a subset of the
/// rows. Jump rows contribute both `X(t-)` and `X(t)` as candidate points.
pub fn p_variation_exact(path: &SampledPath, p: f64, interval: (f64, f64)) -> Result<VariationNorm> {
    check_exponent(p)?;
    let sub = path.restrict(interval.0, interval.1)?;
    let value = p_variation_sum(sub.values(), sub.dim(), p).powf(1.0 / p);
    Ok(VariationNorm { p, value, interval })
}

/// p-variation over the full time range of `path`.
pub fn p_variation(path: &SampledPath, p: f64) -> Result<f64> {
    p_variation_exact(path, p, (path.start_time(), path.end_time())).map(|v| v.value)
}

/// `(sum over the given partition of |dX|^p)^(1/p)`, a lower bound for the
/// exact value. `partition` lists strictly increasing row indices.
pub fn p_variation_lower_bound(path: &SampledPath, p: f64, partition: &[usize]) -> Result<f64> {
    check_exponent(p)?;
    if partition.is_empty() {
        return Err(Error::InvalidPartition("empty partition".into()));
    }
    if let Some(&bad) = partition.iter().find(|&&i| i >= path.len()) {
        return Err(Error::InvalidPartition(alloc::format!("index {bad} out of range")));
    }
    if partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidPartition("indices must be strictly increasing".into()));
    }
    let sum: f64 = partition
        .windows(2)
        .map(|w| distance(path.point(w[0]), path.point(w[1])).powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// `sup` over vertex subsets (first vertex fixed) of `sum |x_j - x_i|^p`,
/// without the outer `1/p` power.
///
/// The recursion `best[j] = max_{m<j} best[m] + |x_j - x_m|^p` is evaluated
/// with dyadic-block pruning: `best` is nondecreasing, so a block `[lo, m]`
/// whose points all lie within `r` of its centre `c` cannot beat the current
/// candidate once `best[m] + (r + |x_c - x_j|)^p` does not exceed it.
/// Worst case O(n^2), typically far less.
pub(crate) fn p_variation_sum(points: &[f64], dim: usize, p: f64) -> f64 {
    let reduced = drop_straight_vertices(points, dim);
    let points = &reduced[..];
    let n = points.len() / dim;
    if n < 2 {
        return 0.0;
    }
    let pt = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut levels = 0usize;
    while (1usize << (levels + 1)) <= n {
        levels += 1;
    }
    // radius[l - 1][b]: max distance from the centre of block b at level l to
    // the points of that block visited so far.
    let mut radius: Vec<Vec<f64>> =
        (1..=levels).map(|l| vec![0.0; n.div_ceil(1 << l)]).collect();
    let mut best = vec![0.0; n];

    for j in 0..n {
        for l in 1..=levels {
            let b = j >> l;
            let centre = (b << l) + (1 << (l - 1));
            if centre < n {
                let r = &mut radius[l - 1][b];
                *r = r.max(distance(pt(centre), pt(j)));
            }
        }
        if j == 0 {
            continue;
        }

        let mut current = best[j - 1] + distance(pt(j - 1), pt(j)).powf(p);
        // Scan candidates m = j-2 down to 0.
        let mut top = j - 1; // number of candidates left: indices 0..top
        while top > 0 {
            let m = top - 1;
            let mut skipped = false;
            let mut l = levels;
            while l >= 1 {
                let size = 1usize << l;
                if (m + 1) % size == 0 {
                    let b = m >> l;
                    let centre = (b << l) + (size >> 1);
                    let bound = best[m] + (radius[l - 1][b] + distance(pt(centre), pt(j))).powf(p);
                    if bound <= current {
                        top = m + 1 - size;
                        skipped = true;
                        break;
                    }
                }
                l -= 1;
            }
            if !skipped {
                let cand = best[m] + distance(pt(m), pt(j)).powf(p);
                if cand > current {
                    current = cand;
                }
                top = m;
            }
        }
        best[j] = current;
    }
    best[n - 1]
}

/// Removes repeated points and vertices lying on the straight segment between
/// their neighbours (`1 - cos` of the turning angle below `1e-12`). For
/// `p >= 1` this leaves the p-variation unchanged; for scalar paths it keeps
/// exactly the local extrema.
fn drop_straight_vertices(points: &[f64], dim: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    let mut a = vec![0.0; dim];
    for x in points.chunks_exact(dim) {
        let kept = out.len() / dim;
        if kept >= 1 && &out[(kept - 1) * dim..] == x {
            continue;
        }
        if kept >= 2 {
            let (prev, last) = (&out[(kept - 2) * dim..(kept - 1) * dim], &out[(kept - 1) * dim..]);
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for k in 0..dim {
                a[k] = last[k] - prev[k];
                let b = x[k] - last[k];
                dot += a[k] * b;
                na += a[k] * a[k];
                nb += b * b;
            }
            let norms = (na * nb).sqrt();
            if norms - dot <= 1e-12 * norms {
                out.truncate((kept - 1) * dim);
            }
        }
        out.extend_from_slice(x);
    }
    out
}

/// Joins `a` and `b` at `a.end_time() == b.start_time()`. Matching endpoint
/// values merge into one row; mismatched values are kept as a jump, which is
/// only allowed when either input is cadlag.
pub fn concat(a: &SampledPath, b: &SampledPath) -> Result<SampledPath> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    let (ta, tb) = (a.end_time(), b.start_time());
    if tb < ta {
        return Err(Error::Concat(alloc::format!("time ranges overlap ({tb} < {ta})")));
    }
    if tb > ta {
        return Err(Error::Concat(alloc::format!("gap between {ta} and {tb}")));
    }
    let either_cadlag = a.kind == PathKind::Cadlag || b.kind == PathKind::Cadlag;
    let matching = a.last() == b.first();
    if !matching && !either_cadlag {
        return Err(Error::Concat("endpoint values differ and no jump is declared".into()));
    }
    if !matching && a.len() >= 2 && a.times[a.len() - 2] == ta {
        return Err(Error::Concat("a already jumps at the junction".into()));
    }
    let skip = usize::from(matching);
    let mut times = a.times.clone();
    times.extend_from_slice(&b.times[skip..]);
    let mut values = a.values.clone();
    values.extend_from_slice(&b.values[skip * b.dim..]);
    let kind = if either_cadlag { PathKind::Cadlag } else { PathKind::Continuous };
    SampledPath::new(kind, times, values, a.dim)
}

/// `u -> X(T - u)` reindexed onto the same time range.
pub fn time_reverse(path: &SampledPath) -> Result<SampledPath> {
    if path.kind == PathKind::Cadlag {
        return Err(Error::CadlagUnsupported("time reversal"));
    }
    let (t0, t1) = (path.start_time(), path.end_time());
    let times = path.times.iter().rev().map(|&t| t0 + (t1 - t)).collect();
    let mut values = Vec::with_capacity(path.values.len());
    for row in path.points().rev() {
        values.extend_from_slice(row);
    }
    SampledPath::continuous(times, values, path.dim)
}
