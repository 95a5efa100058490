//! Picard iteration for `dY = f(Y) dX` on the driver's sample grid.
//!
//! On a window of cells the Picard map is
//! `Y'_{k+1} = Y'_k + (f(Y_k) + f(Y_{k+1})) / 2 * (X_{k+1} - X_k)`, i.e. the
//! Young integral of the interpolated iterate against the interpolated driver.
//! Its fixed point is the implicit trapezoid scheme, which is symmetric in
//! time and commutes with linearisation: the Jacobian block of the paired
//! system is exactly the derivative of the discrete solution map.
//!
//! A window is accepted once successive iterates differ by at most
//! `picard_tol`. It is shrunk when the observed contraction ratio reaches
//! `contraction_limit`, when iterates blow up, or when `max_iters` runs out.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{make_paired_field, LipschitzField, VectorField};
use crate::path::{PathKind, SampledPath};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct SolverConfig {
    /// Variation exponent of the driver, `1 <= p < 2`.
    pub p: f64,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub window_shrink: f64,
    /// A window is shrunk once `|Y^{m+1} - Y^m| >= contraction_limit * |Y^m - Y^{m-1}|`.
    pub contraction_limit: f64,
    /// Iterates with sup norm above `divergence_factor * (1 + |x0|)` abort the window.
    pub divergence_factor: f64,
    /// Refuse fields with `alpha <= p`.
    pub enforce_hypothesis: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            picard_tol: 1e-10,
            max_iters: 60,
            window_shrink: 0.5,
            contraction_limit: 0.9,
            divergence_factor: 1e6,
            enforce_hypothesis: true,
        }
    }
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p < 2.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "driver exponent must lie in [1, 2), got {}",
                self.p
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidParameter("picard_tol must be positive".into()));
        }
        if !(self.window_shrink > 0.0 && self.window_shrink < 1.0) {
            return Err(Error::InvalidParameter("window_shrink must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }

    fn check_field(&self, field: &LipschitzField) -> Result<()> {
        self.validate()?;
        if self.enforce_hypothesis && !(field.alpha() > self.p) {
            return Err(Error::Hypothesis { alpha: field.alpha(), p: self.p });
        }
        Ok(())
    }
}

/// A solution on the driver's grid over `interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: SampledPath,
    /// `K`, row-major `d x d` per sample, when solved with the Jacobian.
    pub jacobian: Option<SampledPath>,
    pub interval: (f64, f64),
    pub start: Vec<f64>,
    pub iterations_used: usize,
    /// Accepted windows as `(first node, last node)` pairs.
    pub windows: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn windows_used(&self) -> usize {
        self.windows.len()
    }

    pub fn end_point(&self) -> &[f64] {
        self.path.last()
    }

    pub fn end_jacobian(&self) -> Option<&[f64]> {
        self.jacobian.as_ref().map(|k| k.last())
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Stats {
    iterations: usize,
}

enum WindowOutcome {
    Accepted(usize),
    Shrink { diverged: bool, residual: f64 },
}

/// Integrates over a continuous grid. `driver` holds `times.len() * n`
/// values; the returned state values are `times.len() * dim` long.
struct Integrator<'a> {
    field: &'a dyn VectorField,
    cfg: &'a SolverConfig,
    increments: Vec<f64>,
    cells: usize,
    n: usize,
    dim: usize,
}

impl<'a> Integrator<'a> {
    fn new(field: &'a dyn VectorField, cfg: &'a SolverConfig, driver: &SampledPath) -> Self {
        let n = driver.dim();
        let increments = driver
            .values()
            .windows(2 * n)
            .step_by(n)
            .flat_map(|w| (0..n).map(move |a| w[n + a] - w[a]))
            .collect::<Vec<f64>>();
        Self { field, cfg, cells: driver.len() - 1, increments, n, dim: field.state_dim() }
    }

    // One Picard application on nodes [start, start + cells]: reads `current`,
    // writes `next`, both (cells + 1) * dim long with node 0 equal to the start value.
    fn picard_step(&self, start: usize, cells: usize, fvals: &mut [f64], current: &[f64], next: &mut [f64]) {
        let (dim, n) = (self.dim, self.n);
        let width = dim * n;
        for k in 0..=cells {
            self.field.eval_into(&current[k * dim..(k + 1) * dim], &mut fvals[k * width..(k + 1) * width]);
        }
        next[..dim].copy_from_slice(&current[..dim]);
        for k in 0..cells {
            let dx = &self.increments[(start + k) * n..(start + k + 1) * n];
            let (fa, fb) = (&fvals[k * width..(k + 1) * width], &fvals[(k + 1) * width..(k + 2) * width]);
            for i in 0..dim {
                let mut inc = 0.0;
                for a in 0..n {
                    inc += 0.5 * (fa[i * n + a] + fb[i * n + a]) * dx[a];
                }
                next[(k + 1) * dim + i] = next[k * dim + i] + inc;
            }
        }
    }

    fn window(&self, start: usize, cells: usize, out: &mut [f64]) -> WindowOutcome {
        let dim = self.dim;
        let x0 = out[start * dim..(start + 1) * dim].to_vec();
        let bound = self.cfg.divergence_factor * (1.0 + x0.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let mut current: Vec<f64> = x0.iter().copied().cycle().take((cells + 1) * dim).collect();
        let mut next = vec![0.0; (cells + 1) * dim];
        let mut fvals = vec![0.0; (cells + 1) * dim * self.n];
        let mut prev_dist = f64::INFINITY;
        let mut dist = f64::INFINITY;
        for m in 1..=self.cfg.max_iters {
            self.picard_step(start, cells, &mut fvals, &current, &mut next);
            dist = 0.0;
            let mut size = 0.0f64;
            for (a, b) in next.iter().zip(&current) {
                dist = dist.max((a - b).abs());
                size = size.max(a.abs());
            }
            if !dist.is_finite() || !(size <= bound) {
                return WindowOutcome::Shrink { diverged: true, residual: dist };
            }
            core::mem::swap(&mut current, &mut next);
            if dist <= self.cfg.picard_tol {
                out[start * dim..(start + cells + 1) * dim].copy_from_slice(&current);
                return WindowOutcome::Accepted(m);
            }
            if m >= 2 && dist >= self.cfg.contraction_limit * prev_dist {
                return WindowOutcome::Shrink { diverged: false, residual: dist };
            }
            prev_dist = dist;
        }
        WindowOutcome::Shrink { diverged: false, residual: dist }
    }

    fn run(&self, times: &[f64], x0: &[f64]) -> Result<(Vec<f64>, Stats, Vec<(usize, usize)>)> {
        let dim = self.dim;
        let mut out = vec![0.0; (self.cells + 1) * dim];
        out[..dim].copy_from_slice(x0);
        let mut stats = Stats::default();
        let mut windows = Vec::new();
        let mut start = 0;
        let mut span = self.cells.max(1);
        while start < self.cells {
            let cells = span.min(self.cells - start);
            match self.window(start, cells, &mut out) {
                WindowOutcome::Accepted(iters) => {
                    stats.iterations += iters;
                    windows.push((start, start + cells));
                    start += cells;
                    span = ((cells as f64 / self.cfg.window_shrink).ceil() as usize).max(1);
                }
                WindowOutcome::Shrink { diverged, residual } => {
                    if cells == 1 {
                        let time = times[start];
                        return Err(if diverged {
                            Error::Divergence { time }
                        } else {
                            Error::NonConvergence { time, residual }
                        });
                    }
                    span = ((cells as f64 * self.cfg.window_shrink).floor() as usize).clamp(1, cells - 1);
                }
            }
        }
        Ok((out, stats, windows))
    }
}

fn check_inputs(driver: &SampledPath, field: &LipschitzField, x0: &[f64]) -> Result<()> {
    if driver.kind() == PathKind::Cadlag && driver.has_jumps() {
        return Err(Error::CadlagUnsupported(
            "continuous solve (use the cadlag module for jump drivers)",
        ));
    }
    if driver.dim() != field.driver_dim() {
        return Err(Error::DimensionMismatch { expected: field.driver_dim(), found: driver.dim() });
    }
    if x0.len() != field.state_dim() {
        return Err(Error::DimensionMismatch { expected: field.state_dim(), found: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Solves `Y_t = x0 + int_s^t f(Y) dX` on the driver's grid over `interval`.
pub fn solve(
    driver: &SampledPath,
    field: &LipschitzField,
    x0: &[f64],
    interval: (f64, f64),
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.check_field(field)?;
    check_inputs(driver, field, x0)?;
    let grid = driver.restrict(interval.0, interval.1)?;
    let integrator = Integrator::new(field.inner(), cfg, &grid);
    let (values, stats, windows) = integrator.run(grid.times(), x0)?;
    Ok(Trajectory {
        path: SampledPath::continuous(grid.times().to_vec(), values, field.state_dim())?,
        jacobian: None,
        interval,
        start: x0.to_vec(),
        iterations_used: stats.iterations,
        windows,
    })
}

/// Solves the paired system for `(Y, K)` with `K_s = I`, returning both.
pub fn solve_with_jacobian(
    driver: &SampledPath,
    field: &LipschitzField,
    x0: &[f64],
    interval: (f64, f64),
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.check_field(field)?;
    check_inputs(driver, field, x0)?;
    let paired = make_paired_field(field)?;
    let grid = driver.restrict(interval.0, interval.1)?;
    let integrator = Integrator::new(&paired, cfg, &grid);
    let (values, stats, windows) = integrator.run(grid.times(), &paired.initial_state(x0))?;
    let (path, jacobian) = split_paired(grid.times(), &values, field.state_dim())?;
    Ok(Trajectory {
        path,
        jacobian: Some(jacobian),
        interval,
        start: x0.to_vec(),
        iterations_used: stats.iterations,
        windows,
    })
}

pub(crate) fn split_paired(times: &[f64], values: &[f64], d: usize) -> Result<(SampledPath, SampledPath)> {
    let width = d + d * d;
    let mut y = Vec::with_capacity(times.len() * d);
    let mut k = Vec::with_capacity(times.len() * d * d);
    for row in values.chunks_exact(width) {
        y.extend_from_slice(&row[..d]);
        k.extend_from_slice(&row[d..]);
    }
    Ok((
        SampledPath::continuous(times.to_vec(), y, d)?,
        SampledPath::continuous(times.to_vec(), k, d * d)?,
    ))
}

/// The constant path `Y = x0` on the driver's grid: the usual first Picard guess.
pub fn initial_guess(driver: &SampledPath, x0: &[f64], interval: (f64, f64), with_jacobian: bool) -> Result<Trajectory> {
    let grid = driver.restrict(interval.0, interval.1)?;
    let d = x0.len();
    let path = SampledPath::continuous(
        grid.times().to_vec(),
        x0.iter().copied().cycle().take(grid.len() * d).collect(),
        d,
    )?;
    let jacobian = if with_jacobian {
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        Some(SampledPath::continuous(
            grid.times().to_vec(),
            eye.iter().copied().cycle().take(grid.len() * d * d).collect(),
            d * d,
        )?)
    } else {
        None
    };
    Ok(Trajectory { path, jacobian, interval, start: x0.to_vec(), iterations_used: 0, windows: Vec::new() })
}

/// One application of the Picard map over the whole interval, starting from
/// `previous`. When `previous` carries a Jacobian the paired map is applied.
pub fn picard_iterate(
    driver: &SampledPath,
    field: &LipschitzField,
    x0: &[f64],
    interval: (f64, f64),
    previous: &Trajectory,
) -> Result<Trajectory> {
    check_inputs(driver, field, x0)?;
    let grid = driver.restrict(interval.0, interval.1)?;
    if grid.times() != previous.path.times() {
        return Err(Error::GridMismatch("previous iterate lives on a different grid".into()));
    }
    let d = field.state_dim();
    let cfg = SolverConfig::default();
    let cells = grid.len() - 1;
    match &previous.jacobian {
        None => {
            let integrator = Integrator::new(field.inner(), &cfg, &grid);
            let mut current = previous.path.values().to_vec();
            current[..d].copy_from_slice(x0);
            let mut next = vec![0.0; current.len()];
            let mut fvals = vec![0.0; grid.len() * d * field.driver_dim()];
            integrator.picard_step(0, cells, &mut fvals, &current, &mut next);
            Ok(Trajectory {
                path: SampledPath::continuous(grid.times().to_vec(), next, d)?,
                jacobian: None,
                interval,
                start: x0.to_vec(),
                iterations_used: previous.iterations_used + 1,
                windows: vec![(0, cells)],
            })
        }
        Some(k) => {
            if k.times() != grid.times() {
                return Err(Error::GridMismatch("Jacobian iterate lives on a different grid".into()));
            }
            let paired = make_paired_field(field)?;
            let integrator = Integrator::new(&paired, &cfg, &grid);
            let width = d + d * d;
            let mut current = vec![0.0; grid.len() * width];
            for (i, row) in current.chunks_exact_mut(width).enumerate() {
                row[..d].copy_from_slice(previous.path.point(i));
                row[d..].copy_from_slice(k.point(i));
            }
            current[..width].copy_from_slice(&paired.initial_state(x0));
            let mut next = vec![0.0; current.len()];
            let mut fvals = vec![0.0; grid.len() * width * field.driver_dim()];
            integrator.picard_step(0, cells, &mut fvals, &current, &mut next);
            let (path, jacobian) = split_paired(grid.times(), &next, d)?;
            Ok(Trajectory {
                path,
                jacobian: Some(jacobian),
                interval,
                start: x0.to_vec(),
                iterations_used: previous.iterations_used + 1,
                windows: vec![(0, cells)],
            })
        }
    }
}

/// `sup_t |Y_t - x0 - int_s^t f(Y) dX|` for a trajectory on the driver's grid.
pub fn fixed_point_residual(driver: &SampledPath, field: &LipschitzField, traj: &Trajectory) -> Result<f64> {
    let next = picard_iterate(driver, field, &traj.start, traj.interval, traj)?;
    let mut r = next
        .path
        .values()
        .iter()
        .zip(traj.path.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if let (Some(a), Some(b)) = (&next.jacobian, &traj.jacobian) {
        r = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(r, f64::max);
    }
    Ok(r)
}

/// Sup-norm distance between two trajectories on the same grid.
pub fn sup_distance(a: &SampledPath, b: &SampledPath) -> Result<f64> {
    if a.times() != b.times() || a.dim() != b.dim() {
        return Err(Error::GridMismatch("trajectories differ in grid or dimension".into()));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
