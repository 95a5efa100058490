//! Drivers with jumps.
//!
//! A jump `J` at `t_n` is given fictitious duration `delta * |J|^p`: the time
//! change `tau(t) = t + delta * sum_{t_n <= t} |J(t_n)|^p` opens an interval at
//! every jump, and the stretched path crosses it linearly from `X(t_n-)` to
//! `X(t_n)`. Solving the continuous equation on the stretched path and then
//! deleting the fictitious time gives the geometric solution: at each jump the
//! state follows the integral curve of `z' = f(z) J` for unit time.
//!
//! The forward-jump solution, `Y(t) = Y(t-) + f(Y(t-)) J`, is provided for
//! comparison.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{LipschitzField, WorkingBox};
use crate::flow::{run_flow_checks, FlowCheckSummary, FlowTolerances};
use crate::path::{euclidean_norm, p_variation, PathKind, SampledPath};
use crate::solver::{solve, solve_with_jacobian, SolverConfig, Trajectory};

/// Grid used to cross a jump: `max(min_segments, ceil(per_unit * |J|^p))`
/// cells. The count does not involve `delta`, so every `delta` produces the
/// same sequence of driver increments.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct Traversal {
    pub per_unit: f64,
    pub min_segments: usize,
}

impl Default for Traversal {
    fn default() -> Self {
        Self { per_unit: 1000.0, min_segments: 8 }
    }
}

impl Traversal {
    fn segments(&self, weight: f64) -> usize {
        let n = (self.per_unit * weight).ceil();
        if n.is_finite() && n > self.min_segments as f64 {
            n as usize
        } else {
            self.min_segments.max(1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    /// Row of the original path holding `X(t_n)`; the left limit is the row before.
    pub row: usize,
    pub jump: Vec<f64>,
    pub magnitude: f64,
    /// 1 for the largest jump; ties go to the earlier jump.
    pub rank: usize,
    /// Fictitious interval `[tau(t_n-), tau(t_n)]` in stretched time.
    pub stretch: (f64, f64),
    /// Stretched rows at both ends of the traversal.
    pub stretched_rows: (usize, usize),
    /// Accumulated stretch after this jump, so `tau(t) = t + offset` up to the next jump.
    pub offset: f64,
}

/// Where a stretched time falls in the original parametrisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginalTime {
    Time(f64),
    /// Inside the traversal of jump `jump` (chronological index), `fraction` in `[0, 1]`.
    InJump { jump: usize, fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpParametrisation {
    pub delta: f64,
    pub p: f64,
    pub original: SampledPath,
    pub stretched: SampledPath,
    /// Chronological.
    pub jumps: Vec<JumpRecord>,
    /// Original row `i` sits at stretched row `index_map[i]`.
    pub index_map: Vec<usize>,
}

/// Builds `(tau, X^delta)` for a cadlag path. A path without jumps is
/// returned unchanged with `tau` the identity.
pub fn parametrise(path: &SampledPath, p: f64, delta: f64, traversal: Traversal) -> Result<JumpParametrisation> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let n = path.dim();
    let times = path.times();
    let mut s_times = Vec::with_capacity(path.len());
    let mut s_values = Vec::with_capacity(path.values().len());
    let mut index_map = Vec::with_capacity(path.len());
    let mut jumps = Vec::new();
    let mut offset = 0.0;
    for i in 0..path.len() {
        if i > 0 && times[i] == times[i - 1] {
            let jump = path.jump_at(i);
            let magnitude = euclidean_norm(&jump);
            if magnitude == 0.0 {
                return Err(Error::ZeroJump(i));
            }
            let weight = magnitude.powf(p);
            let length = delta * weight;
            let cells = traversal.segments(weight);
            let start = times[i] + offset;
            let start_row = s_times.len() - 1;
            let left = path.point(i - 1);
            for k in 1..cells {
                let w = k as f64 / cells as f64;
                s_times.push(start + w * length);
                s_values.extend(left.iter().zip(&jump).map(|(x, j)| x + w * j));
            }
            offset += length;
            jumps.push(JumpRecord {
                time: times[i],
                row: i,
                jump,
                magnitude,
                rank: 0,
                stretch: (start, times[i] + offset),
                stretched_rows: (start_row, s_times.len()),
                offset,
            });
        }
        index_map.push(s_times.len());
        s_times.push(times[i] + offset);
        s_values.extend_from_slice(path.point(i));
    }
    let mut order: Vec<usize> = (0..jumps.len()).collect();
    order.sort_by(|&a, &b| jumps[b].magnitude.total_cmp(&jumps[a].magnitude).then(a.cmp(&b)));
    for (r, &j) in order.iter().enumerate() {
        jumps[j].rank = r + 1;
    }
    let stretched = SampledPath::continuous(s_times, s_values, n).map_err(|e| match e {
        Error::InvalidPath(_) => Error::InvalidParameter(
            "jump traversal grid is finer than floating-point time resolution".into(),
        ),
        other => other,
    })?;
    Ok(JumpParametrisation { delta, p, original: path.clone(), stretched, jumps, index_map })
}

impl JumpParametrisation {
    /// `tau(t)`: right-continuous, so a jump at `t` is already crossed.
    pub fn tau(&self, t: f64) -> f64 {
        t + self.offset_before(self.jumps.partition_point(|j| j.time <= t))
    }

    /// `tau(t-)`: the start of the traversal when a jump sits at `t`.
    pub fn tau_left(&self, t: f64) -> f64 {
        t + self.offset_before(self.jumps.partition_point(|j| j.time < t))
    }

    /// `tau(T) - T = delta * sum |J|^p`.
    pub fn total_stretch(&self) -> f64 {
        self.offset_before(self.jumps.len())
    }

    fn offset_before(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.jumps[k - 1].offset }
    }

    /// Maps a stretched time back to original time, or to a point inside a traversal.
    pub fn locate(&self, u: f64) -> OriginalTime {
        let k = self.jumps.partition_point(|j| j.stretch.0 <= u);
        if k > 0 && u < self.jumps[k - 1].stretch.1 {
            let j = &self.jumps[k - 1];
            let fraction = (u - j.stretch.0) / (j.stretch.1 - j.stretch.0);
            return OriginalTime::InJump { jump: k - 1, fraction };
        }
        OriginalTime::Time(u - self.offset_before(k))
    }

    /// Jumps ordered by magnitude, largest first.
    pub fn by_rank(&self) -> Vec<&JumpRecord> {
        let mut v: Vec<&JumpRecord> = self.jumps.iter().collect();
        v.sort_by_key(|j| j.rank);
        v
    }

    /// Picks the rows of a path on the stretched grid that correspond to
    /// original rows, dropping null jumps.
    pub fn to_original_time(&self, stretched: &SampledPath) -> Result<SampledPath> {
        if stretched.times() != self.stretched.times() {
            return Err(Error::GridMismatch("path does not live on the stretched grid".into()));
        }
        let dim = stretched.dim();
        let mut values = Vec::with_capacity(self.index_map.len() * dim);
        for &r in &self.index_map {
            values.extend_from_slice(stretched.point(r));
        }
        let times = self.original.times().to_vec();
        if self.jumps.is_empty() {
            SampledPath::continuous(times, values, dim)
        } else {
            SampledPath::cadlag_merging_null_jumps(times, values, dim)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreservationReport {
    pub p: f64,
    pub delta: f64,
    pub original: f64,
    pub stretched: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the p-variation of the stretched path with that of the original
/// cadlag path (left limits and jump values both count as partition points).
pub fn pvariation_preservation_check(param: &JumpParametrisation, p: f64) -> Result<PreservationReport> {
    let tolerance = 1e-10;
    let original = p_variation(&param.original, p)?;
    let stretched = p_variation(&param.stretched, p)?;
    let scale = original.abs().max(stretched.abs());
    let relative_error = if scale == 0.0 { 0.0 } else { (original - stretched).abs() / scale };
    Ok(PreservationReport {
        p,
        delta: param.delta,
        original,
        stretched,
        relative_error,
        tolerance,
        passed: relative_error <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JumpLogEntry {
    pub time: f64,
    pub rank: usize,
    pub jump: Vec<f64>,
    /// `Y(t-)`.
    pub start: Vec<f64>,
    /// `Y(t)`.
    pub end: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GeometricTrajectory {
    /// On the original times; cadlag when the solution jumps.
    pub trajectory: Trajectory,
    /// The continuous solve on the stretched grid.
    pub stretched_trajectory: Trajectory,
    pub parametrisation: JumpParametrisation,
    pub jump_log: Vec<JumpLogEntry>,
}

/// Parameters of the geometric solution besides the solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeometricOptions {
    pub delta: f64,
    pub traversal: Traversal,
    pub with_jacobian: bool,
}

impl Default for GeometricOptions {
    fn default() -> Self {
        Self { delta: 1.0, traversal: Traversal::default(), with_jacobian: false }
    }
}

/// The geometric solution over `interval`, using the solver's exponent `cfg.p`
/// in the time change.
pub fn solve_geometric(
    driver: &SampledPath,
    field: &LipschitzField,
    x0: &[f64],
    interval: (f64, f64),
    cfg: &SolverConfig,
    opts: &GeometricOptions,
) -> Result<GeometricTrajectory> {
    cfg.validate()?;
    let grid = driver.restrict(interval.0, interval.1)?;
    let param = parametrise(&grid, cfg.p, opts.delta, opts.traversal)?;
    let span = (param.stretched.start_time(), param.stretched.end_time());
    let stretched = if opts.with_jacobian {
        solve_with_jacobian(&param.stretched, field, x0, span, cfg)?
    } else {
        solve(&param.stretched, field, x0, span, cfg)?
    };
    let path = param.to_original_time(&stretched.path)?;
    let jacobian = stretched.jacobian.as_ref().map(|k| param.to_original_time(k)).transpose()?;
    let jump_log = param
        .jumps
        .iter()
        .map(|j| JumpLogEntry {
            time: j.time,
            rank: j.rank,
            jump: j.jump.clone(),
            start: stretched.path.point(j.stretched_rows.0).to_vec(),
            end: stretched.path.point(j.stretched_rows.1).to_vec(),
        })
        .collect();
    let trajectory = Trajectory {
        path,
        jacobian,
        interval,
        start: x0.to_vec(),
        iterations_used: stretched.iterations_used,
        windows: Vec::new(),
    };
    Ok(GeometricTrajectory { trajectory, stretched_trajectory: stretched, parametrisation: param, jump_log })
}

/// Solves between jumps and applies `Y(t) = Y(t-) + f(Y(t-)) J` at each jump;
/// with `with_jacobian` the Jacobian jumps by `K(t) = (I + grad f(Y(t-))[J]) K(t-)`.
pub fn solve_forward_jump(
    driver: &SampledPath,
    field: &LipschitzField,
    x0: &[f64],
    interval: (f64, f64),
    cfg: &SolverConfig,
    with_jacobian: bool,
) -> Result<(Trajectory, Vec<JumpLogEntry>)> {
    cfg.validate()?;
    let grid = driver.restrict(interval.0, interval.1)?;
    let (d, n) = (field.state_dim(), field.driver_dim());
    if grid.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: grid.dim() });
    }
    let mut times = Vec::with_capacity(grid.len());
    let mut y_rows: Vec<f64> = Vec::with_capacity(grid.len() * d);
    let mut k_rows: Vec<f64> = Vec::new();
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut state = x0.to_vec();
    let mut k_state = identity(d);
    let mut rank_of = vec![0usize; grid.len()];
    {
        let jumps = grid.jump_indices();
        let mut order: Vec<usize> = (0..jumps.len()).collect();
        let mags: Vec<f64> = jumps.iter().map(|&i| euclidean_norm(&grid.jump_at(i))).collect();
        order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
        for (r, &k) in order.iter().enumerate() {
            rank_of[jumps[k]] = r + 1;
        }
    }
    let mut first = 0;
    loop {
        // continuous rows [first, last]
        let mut last = first;
        while last + 1 < grid.len() && grid.times()[last + 1] > grid.times()[last] {
            last += 1;
        }
        let segment = SampledPath::continuous(
            grid.times()[first..=last].to_vec(),
            grid.values()[first * n..(last + 1) * n].to_vec(),
            n,
        )?;
        let span = (segment.start_time(), segment.end_time());
        if with_jacobian {
            let traj = solve_with_jacobian(&segment, field, &state, span, cfg)?;
            let k = traj.jacobian.as_ref().expect("paired solve returns a Jacobian");
            for row in k.points() {
                k_rows.extend(matmul(row, &k_state, d));
            }
            k_state = matmul(k.last(), &k_state, d);
            iterations += traj.iterations_used;
            times.extend_from_slice(traj.path.times());
            y_rows.extend_from_slice(traj.path.values());
            state = traj.end_point().to_vec();
        } else {
            let traj = solve(&segment, field, &state, span, cfg)?;
            iterations += traj.iterations_used;
            times.extend_from_slice(traj.path.times());
            y_rows.extend_from_slice(traj.path.values());
            state = traj.end_point().to_vec();
        }
        if last + 1 >= grid.len() {
            break;
        }
        // rows last (left limit) and last + 1 (value) share a time
        let row = last + 1;
        let jump = grid.jump_at(row);
        let f = field.eval(&state)?;
        let mut next = state.clone();
        for i in 0..d {
            for a in 0..n {
                next[i] += f[i * n + a] * jump[a];
            }
        }
        if with_jacobian {
            let g = field.grad(&state)?;
            let mut m = identity(d);
            for i in 0..d {
                for j in 0..d {
                    for a in 0..n {
                        m[i * d + j] += g[(i * n + a) * d + j] * jump[a];
                    }
                }
            }
            k_state = matmul(&m, &k_state, d);
        }
        log.push(JumpLogEntry {
            time: grid.times()[row],
            rank: rank_of[row],
            jump,
            start: state.clone(),
            end: next.clone(),
        });
        state = next;
        first = row;
        // the segment after the jump starts from the post-jump row
    }
    let kind_cadlag = grid.kind() == PathKind::Cadlag && !log.is_empty();
    let build = |t: Vec<f64>, v: Vec<f64>, dim: usize| {
        if kind_cadlag {
            SampledPath::cadlag_merging_null_jumps(t, v, dim)
        } else {
            SampledPath::continuous(t, v, dim)
        }
    };
    let path = build(times.clone(), y_rows, d)?;
    let jacobian = if with_jacobian { Some(build(times, k_rows, d * d)?) } else { None };
    Ok((
        Trajectory { path, jacobian, interval, start: x0.to_vec(), iterations_used: iterations, windows: Vec::new() },
        log,
    ))
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeometricFlowReport {
    pub delta: f64,
    pub jumps: usize,
    pub stretched_interval: (f64, f64, f64),
    pub summary: FlowCheckSummary,
}

impl GeometricFlowReport {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

/// Runs the flow checks on the stretched flow between the original times
/// `s <= t <= u` (mapped through `tau`).
#[allow(clippy::too_many_arguments)]
pub fn geometric_flow_check(
    driver: &SampledPath,
    field: &LipschitzField,
    domain: &WorkingBox,
    per_axis: usize,
    (s, t, u): (f64, f64, f64),
    cfg: &SolverConfig,
    opts: &GeometricOptions,
    tols: &FlowTolerances,
) -> Result<GeometricFlowReport> {
    if !(s <= t && t <= u) {
        return Err(Error::ParameterMismatch(format!("need s <= t <= u, got {s}, {t}, {u}")));
    }
    let grid = driver.restrict(s, u)?;
    let param = parametrise(&grid, cfg.p, opts.delta, opts.traversal)?;
    let times = (param.tau(s), param.tau(t), param.tau(u));
    let summary = run_flow_checks(&param.stretched, field, domain, per_axis, times, cfg, tols)?;
    Ok(GeometricFlowReport { delta: opts.delta, jumps: param.jumps.len(), stretched_interval: times, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field;

    fn one_jump(j: f64) -> SampledPath {
        SampledPath::cadlag(vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 0.0, j, j], 1).unwrap()
    }

    #[test]
    fn no_jumps_is_identity() {
        let x = SampledPath::scalar(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, -1.0]).unwrap();
        let param = parametrise(&x, 1.5, 1.0, Traversal::default()).unwrap();
        assert_eq!(param.stretched, x);
        assert_eq!(param.tau(0.7), 0.7);
        assert_eq!(param.locate(0.7), OriginalTime::Time(0.7));
    }

    #[test]
    fn single_unit_jump_adds_unit_length() {
        let param = parametrise(&one_jump(1.0), 1.5, 1.0, Traversal::default()).unwrap();
        assert_eq!(param.tau(2.0), 3.0);
        assert_eq!(param.stretched.end_time(), 3.0);
        assert_eq!(param.tau_left(1.0), 1.0);
        assert_eq!(param.tau(1.0), 2.0);
        assert_eq!(param.jumps[0].stretch, (1.0, 2.0));
        // linear traversal with slope J / (delta |J|^p)
        let v = param.stretched.value_at(1.25).unwrap()[0];
        assert!((v - 0.25).abs() < 1e-15);
        assert_eq!(param.locate(1.5), OriginalTime::InJump { jump: 0, fraction: 0.5 });
        assert_eq!(param.locate(2.5), OriginalTime::Time(1.5));
    }

    #[test]
    fn total_stretch_sums_weighted_jumps() {
        let x = SampledPath::cadlag(vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0, 3.0, 3.0], 1).unwrap();
        for delta in [0.5, 1.0, 2.0] {
            let param = parametrise(&x, 1.0, delta, Traversal::default()).unwrap();
            assert!((param.total_stretch() - 3.0 * delta).abs() < 1e-12);
            let ranks: Vec<usize> = param.jumps.iter().map(|j| j.rank).collect();
            assert_eq!(ranks, vec![2, 1]);
        }
    }

    #[test]
    fn equal_jumps_rank_by_time() {
        let x = SampledPath::cadlag(vec![0.0, 1.0, 1.0, 2.0, 2.0], vec![0.0, 0.0, 1.0, 1.0, 0.0], 1).unwrap();
        let param = parametrise(&x, 1.0, 1.0, Traversal::default()).unwrap();
        assert_eq!(param.by_rank().iter().map(|j| j.time).collect::<Vec<_>>(), vec![1.0, 2.0]);
    }

    #[test]
    fn original_values_survive_at_original_times() {
        let x = SampledPath::cadlag(vec![0.0, 0.3, 0.3, 1.0], vec![0.2, -0.1, 0.9, 0.4], 1).unwrap();
        let param = parametrise(&x, 1.2, 0.7, Traversal::default()).unwrap();
        for (i, &r) in param.index_map.iter().enumerate() {
            assert_eq!(param.stretched.point(r), x.point(i));
        }
        assert_eq!(param.to_original_time(&param.stretched).unwrap(), x);
    }

    #[test]
    fn pure_jump_variation_is_one() {
        for p in [1.0, 1.3, 1.9] {
            let param = parametrise(&one_jump(1.0), p, 1.0, Traversal::default()).unwrap();
            let r = pvariation_preservation_check(&param, p).unwrap();
            assert!(r.passed && (r.original - 1.0).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn additive_field_rules_agree() {
        let f = field::identity(1);
        let cfg = SolverConfig::new(1.5);
        let geo = solve_geometric(&one_jump(-0.7), &f, &[0.4], (0.0, 2.0), &cfg, &GeometricOptions::default()).unwrap();
        let (fwd, _) = solve_forward_jump(&one_jump(-0.7), &f, &[0.4], (0.0, 2.0), &cfg, false).unwrap();
        assert_eq!(geo.trajectory.path.times(), fwd.path.times());
        for (a, b) in geo.trajectory.path.values().iter().zip(fwd.path.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((geo.jump_log[0].end[0] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_field_stays_put_under_both_rules() {
        let f = field::zero(1, 1);
        let cfg = SolverConfig::new(1.5);
        let geo = solve_geometric(&one_jump(2.0), &f, &[0.4], (0.0, 2.0), &cfg, &GeometricOptions::default()).unwrap();
        let (fwd, _) = solve_forward_jump(&one_jump(2.0), &f, &[0.4], (0.0, 2.0), &cfg, true).unwrap();
        assert!(geo.trajectory.path.values().iter().all(|&v| v == 0.4));
        assert!(fwd.path.values().iter().all(|&v| v == 0.4));
        // null jumps merge away
        assert_eq!(fwd.path.kind(), PathKind::Cadlag);
        assert!(!fwd.path.has_jumps());
    }

    #[test]
    fn zero_magnitude_jumps_are_rejected() {
        // the path constructor already refuses them; parametrise sees only valid paths
        assert_eq!(
            SampledPath::cadlag(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0], 1),
            Err(Error::ZeroJump(2))
        );
    }
}
