//! The two-parameter flow `x -> Y_{s,t}(x)` sampled on a set of anchors, and
//! numerical checks of the flow properties: identity at `s = t`, composition,
//! Jacobian versus finite differences, inversion by time reversal, continuity
//! of the Jacobian in space and non-degeneracy of `det K`.
//!
//! Composition re-solves from image points instead of interpolating a flow
//! between anchors.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{LipschitzField, WorkingBox};
use crate::par::map_indexed;
use crate::path::{distance, euclidean_norm, p_variation, time_reverse, SampledPath};
use crate::solver::{solve, solve_with_jacobian, SolverConfig};

/// Relative Jacobian errors are measured against `max(|K e_j|, JACOBIAN_FLOOR)`.
pub const JACOBIAN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub s: f64,
    pub t: f64,
    pub anchors: Vec<Vec<f64>>,
    pub images: Vec<Vec<f64>>,
    /// `K_{s,t}(x)` per anchor, row-major `d x d`.
    pub jacobians: Vec<Vec<f64>>,
    /// `u -> K_{s,u}(x)` per anchor, kept only when requested.
    pub jacobian_paths: Option<Vec<SampledPath>>,
    pub driver_id: String,
    /// Box that finite-difference stencils must stay inside.
    pub domain: Option<WorkingBox>,
}

impl FlowMap {
    /// Solves the paired system from every anchor over `[s, t]`.
    pub fn build(
        driver: &SampledPath,
        field: &LipschitzField,
        anchors: &[Vec<f64>],
        interval: (f64, f64),
        cfg: &SolverConfig,
        driver_id: &str,
    ) -> Result<Self> {
        build(driver, field, anchors, interval, cfg, driver_id, false)
    }

    /// As [`build`](Self::build), also keeping the Jacobian paths `u -> K_{s,u}`.
    pub fn build_with_paths(
        driver: &SampledPath,
        field: &LipschitzField,
        anchors: &[Vec<f64>],
        interval: (f64, f64),
        cfg: &SolverConfig,
        driver_id: &str,
    ) -> Result<Self> {
        build(driver, field, anchors, interval, cfg, driver_id, true)
    }

    pub fn with_domain(mut self, domain: WorkingBox) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.anchors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

fn build(
    driver: &SampledPath,
    field: &LipschitzField,
    anchors: &[Vec<f64>],
    interval: (f64, f64),
    cfg: &SolverConfig,
    driver_id: &str,
    keep_paths: bool,
) -> Result<FlowMap> {
    if anchors.is_empty() {
        return Err(Error::InvalidParameter("a flow needs at least one anchor".into()));
    }
    let solved = map_indexed(anchors.len(), |i| solve_with_jacobian(driver, field, &anchors[i], interval, cfg));
    let mut images = Vec::with_capacity(anchors.len());
    let mut jacobians = Vec::with_capacity(anchors.len());
    let mut paths = Vec::new();
    for traj in solved {
        let traj = traj?;
        images.push(traj.end_point().to_vec());
        jacobians.push(traj.end_jacobian().unwrap_or_default().to_vec());
        if keep_paths {
            paths.extend(traj.jacobian);
        }
    }
    Ok(FlowMap {
        s: interval.0,
        t: interval.1,
        anchors: anchors.to_vec(),
        images,
        jacobians,
        jacobian_paths: keep_paths.then_some(paths),
        driver_id: driver_id.into(),
        domain: None,
    })
}

/// Outcome of a check with a single scalar discrepancy.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckReport {
    pub check: String,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Anchor at which the maximum was attained.
    pub worst_anchor: Option<usize>,
}

impl CheckReport {
    fn from_discrepancies(check: &str, values: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let mut worst = None;
        let mut max = 0.0f64;
        for (i, v) in values.into_iter().enumerate() {
            if v.is_nan() {
                // must fail the check
                max = v;
                worst = Some(i);
                break;
            }
            if worst.is_none() || v > max {
                max = v;
                worst = Some(i);
            }
        }
        Self {
            check: check.into(),
            max_discrepancy: max,
            tolerance,
            passed: max <= tolerance,
            worst_anchor: worst,
        }
    }
}

/// `Y_{s,s} = id` and `K_{s,s} = I` on the anchors, required exactly.
pub fn identity_check(
    driver: &SampledPath,
    field: &LipschitzField,
    anchors: &[Vec<f64>],
    s: f64,
    cfg: &SolverConfig,
) -> Result<CheckReport> {
    let flow = FlowMap::build(driver, field, anchors, (s, s), cfg, "identity")?;
    let d = flow.dim();
    let values = flow.anchors.iter().zip(&flow.images).zip(&flow.jacobians).map(|((x, y), k)| {
        let dy = distance(x, y);
        let dk = (0..d * d)
            .map(|e| (k[e] - if e / d == e % d { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        dy.max(dk)
    });
    Ok(CheckReport::from_discrepancies("identity", values, 0.0))
}

/// `max_x |Y_{s,u}(x) - Y_{t,u}(Y_{s,t}(x))|`. The anchors of `flow_tu` must be
/// the images of `flow_st`.
pub fn flow_compose_check(flow_su: &FlowMap, flow_st: &FlowMap, flow_tu: &FlowMap, tol: f64) -> Result<CheckReport> {
    if flow_su.driver_id != flow_st.driver_id || flow_st.driver_id != flow_tu.driver_id {
        return Err(Error::ParameterMismatch("flows are driven by different paths".into()));
    }
    if !(flow_su.s == flow_st.s && flow_st.t == flow_tu.s && flow_tu.t == flow_su.t) {
        return Err(Error::ParameterMismatch(format!(
            "intervals [{}, {}], [{}, {}], [{}, {}] do not chain",
            flow_su.s, flow_su.t, flow_st.s, flow_st.t, flow_tu.s, flow_tu.t
        )));
    }
    if !(flow_st.s <= flow_st.t && flow_tu.s <= flow_tu.t) {
        return Err(Error::ParameterMismatch("composition needs s <= t <= u".into()));
    }
    if flow_su.anchors != flow_st.anchors {
        return Err(Error::ParameterMismatch("outer flows use different anchors".into()));
    }
    if flow_tu.anchors != flow_st.images {
        return Err(Error::ParameterMismatch("second flow is not anchored at the first flow's images".into()));
    }
    let values = flow_su.images.iter().zip(&flow_tu.images).map(|(a, b)| distance(a, b));
    Ok(CheckReport::from_discrepancies("composition", values, tol))
}

/// Builds `Y_{s,u}`, `Y_{s,t}` and `Y_{t,u}` (anchored at the images of
/// `Y_{s,t}`) and compares them.
pub fn composition_check(
    driver: &SampledPath,
    field: &LipschitzField,
    anchors: &[Vec<f64>],
    (s, t, u): (f64, f64, f64),
    cfg: &SolverConfig,
    tol: f64,
) -> Result<CheckReport> {
    let su = FlowMap::build(driver, field, anchors, (s, u), cfg, "driver")?;
    let st = FlowMap::build(driver, field, anchors, (s, t), cfg, "driver")?;
    let tu = FlowMap::build(driver, field, &st.images, (t, u), cfg, "driver")?;
    flow_compose_check(&su, &st, &tu, tol)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinementLevel {
    pub cells: usize,
    pub discrepancy: f64,
}

/// Composition discrepancy across driver grids, with observed orders
/// `log2(e_k / e_{k+1})` between consecutive levels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositionStudy {
    pub levels: Vec<RefinementLevel>,
    pub orders: Vec<f64>,
    pub min_order: f64,
    pub required_order: f64,
    pub passed: bool,
}

/// Runs [`composition_check`] on drivers produced by `make_driver(level)` and
/// measures how fast the discrepancy decays. Each level should halve the grid
/// spacing of the previous one. `t` should avoid the grid nodes: at a node the
/// discrete flow composes exactly and there is nothing to measure.
pub fn composition_refinement_study<F>(
    make_driver: F,
    levels: usize,
    field: &LipschitzField,
    anchors: &[Vec<f64>],
    times: (f64, f64, f64),
    cfg: &SolverConfig,
    required_order: f64,
) -> Result<CompositionStudy>
where
    F: Fn(usize) -> Result<SampledPath>,
{
    if levels < 2 {
        return Err(Error::InvalidParameter("a refinement study needs at least two levels".into()));
    }
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let driver = make_driver(level)?;
        let report = composition_check(&driver, field, anchors, times, cfg, f64::INFINITY)?;
        out.push(RefinementLevel { cells: driver.len() - 1, discrepancy: report.max_discrepancy });
    }
    let orders: Vec<f64> = out.windows(2).map(|w| (w[0].discrepancy / w[1].discrepancy).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CompositionStudy { levels: out, orders, min_order, required_order, passed: min_order >= required_order })
}

/// Compares `K_{s,t}(x) e_j` with `(Y(x + h e_j) - Y(x - h e_j)) / 2h`, relative
/// to `max(|K e_j|, JACOBIAN_FLOOR)`.
pub fn jacobian_flow_check(
    flow: &FlowMap,
    driver: &SampledPath,
    field: &LipschitzField,
    h: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<CheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let d = flow.dim();
    if let Some(domain) = &flow.domain {
        for (i, x) in flow.anchors.iter().enumerate() {
            let inside = (0..d).all(|j| x[j] - h >= domain.lo[j] && x[j] + h <= domain.hi[j]);
            if !inside {
                return Err(Error::StencilOutsideBox { anchor: i });
            }
        }
    }
    let errors = map_indexed(flow.len(), |i| -> Result<f64> {
        let x = &flow.anchors[i];
        let k = &flow.jacobians[i];
        let mut worst = 0.0f64;
        for j in 0..d {
            let mut up = x.clone();
            let mut down = x.clone();
            up[j] += h;
            down[j] -= h;
            let yu = solve(driver, field, &up, (flow.s, flow.t), cfg)?;
            let yd = solve(driver, field, &down, (flow.s, flow.t), cfg)?;
            let column: Vec<f64> = (0..d).map(|r| k[r * d + j]).collect();
            let diff: Vec<f64> = (0..d)
                .map(|r| (yu.end_point()[r] - yd.end_point()[r]) / (2.0 * h) - column[r])
                .collect();
            let rel = euclidean_norm(&diff) / euclidean_norm(&column).max(JACOBIAN_FLOOR);
            worst = if rel.is_nan() { rel } else { worst.max(rel) };
        }
        Ok(worst)
    });
    let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_discrepancies("jacobian", errors, tol))
}

/// The flow of the time-reversed driver over the mirrored interval
/// `[t0 + T - t, t0 + T - s]`: the candidate inverse of `Y_{s,t}`.
pub fn inverse_flow(
    driver: &SampledPath,
    field: &LipschitzField,
    interval: (f64, f64),
    anchors: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<FlowMap> {
    let reversed = time_reverse(driver)?;
    let (t0, t1) = (driver.start_time(), driver.end_time());
    let mirrored = (t0 + (t1 - interval.1), t0 + (t1 - interval.0));
    FlowMap::build(&reversed, field, anchors, mirrored, cfg, "reversed")
}

/// `max_x |Y^{rev}(Y_{s,t}(x)) - x|` for the anchors of `forward`.
pub fn round_trip_check(
    forward: &FlowMap,
    driver: &SampledPath,
    field: &LipschitzField,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<CheckReport> {
    let back = inverse_flow(driver, field, (forward.s, forward.t), &forward.images, cfg)?;
    let values = back.images.iter().zip(&forward.anchors).map(|(a, b)| distance(a, b));
    Ok(CheckReport::from_discrepancies("inverse", values, tol))
}

/// Empirical modulus `max_{a != b} |K_{s,.}(a) - K_{s,.}(b)|_p / |a - b|^gamma`,
/// where `|.|_p` is the p-variation of the difference of the Jacobian paths.
pub fn space_modulus(flow: &FlowMap, p: f64, gamma: f64) -> Result<f64> {
    let paths = flow
        .jacobian_paths
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("flow was built without Jacobian paths".into()))?;
    if flow.len() < 2 {
        return Err(Error::InvalidParameter("the modulus needs at least two anchors".into()));
    }
    let pairs: Vec<(usize, usize)> =
        (0..flow.len()).flat_map(|a| (a + 1..flow.len()).map(move |b| (a, b))).collect();
    let values = map_indexed(pairs.len(), |k| -> Result<f64> {
        let (a, b) = pairs[k];
        let diff = paths[a].sub(&paths[b])?;
        Ok(p_variation(&diff, p)? / distance(&flow.anchors[a], &flow.anchors[b]).powf(gamma))
    });
    let mut max = 0.0f64;
    for v in values {
        max = max.max(v?);
    }
    Ok(max)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuityReport {
    pub p: f64,
    pub gamma: f64,
    pub modulus: f64,
    pub coarse_modulus: f64,
    /// Largest admissible `modulus / coarse_modulus`.
    pub modulus_tol: f64,
    pub passed: bool,
}

/// Passes when the modulus on `fine` is finite and grows by at most a factor
/// `modulus_tol` over the modulus on `coarse` (a coarser anchor set in the same box).
pub fn continuity_in_space_check(
    fine: &FlowMap,
    coarse: &FlowMap,
    p: f64,
    gamma: f64,
    modulus_tol: f64,
) -> Result<ContinuityReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("probe exponent must lie in (0, 1], got {gamma}")));
    }
    if fine.driver_id != coarse.driver_id || fine.s != coarse.s || fine.t != coarse.t {
        return Err(Error::ParameterMismatch("fine and coarse flows differ in driver or interval".into()));
    }
    let modulus = space_modulus(fine, p, gamma)?;
    let coarse_modulus = space_modulus(coarse, p, gamma)?;
    let stable = modulus <= modulus_tol * coarse_modulus || modulus <= f64::EPSILON;
    Ok(ContinuityReport {
        p,
        gamma,
        modulus,
        coarse_modulus,
        modulus_tol,
        passed: modulus.is_finite() && coarse_modulus.is_finite() && stable,
    })
}

pub fn determinant(k: &[f64], d: usize) -> f64 {
    DMatrix::from_row_slice(d, d, k).determinant()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeterminantReport {
    pub min_abs_det: f64,
    pub threshold: f64,
    pub passed: bool,
    pub worst_anchor: Option<usize>,
}

/// Smallest `|det K|` over anchors, and over the whole Jacobian path when the
/// flow keeps one. Passes when it exceeds `threshold`.
pub fn determinant_check(flow: &FlowMap, threshold: f64) -> DeterminantReport {
    let d = flow.dim();
    let mut min = f64::INFINITY;
    let mut worst = None;
    for (i, k) in flow.jacobians.iter().enumerate() {
        let mut m = determinant(k, d).abs();
        if let Some(paths) = &flow.jacobian_paths {
            m = paths[i].points().map(|row| determinant(row, d).abs()).fold(m, f64::min);
        }
        if m < min || m.is_nan() {
            min = m;
            worst = Some(i);
        }
    }
    DeterminantReport { min_abs_det: min, threshold, passed: min > threshold, worst_anchor: worst }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct FlowTolerances {
    pub composition: f64,
    pub jacobian: f64,
    pub inverse: f64,
    pub fd_step: f64,
    pub min_det: f64,
    pub gamma: f64,
    pub modulus_growth: f64,
    pub continuity: bool,
}

impl Default for FlowTolerances {
    fn default() -> Self {
        Self {
            composition: 1e-6,
            jacobian: 1e-3,
            inverse: 1e-5,
            fd_step: 1e-5,
            min_det: 1e-8,
            gamma: 1.0,
            modulus_growth: 2.0,
            continuity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowCheckSummary {
    pub interval: (f64, f64),
    pub midpoint: f64,
    pub anchors: usize,
    pub grid_points: usize,
    pub identity: CheckReport,
    pub composition: CheckReport,
    pub jacobian: CheckReport,
    pub inverse: CheckReport,
    pub determinant: DeterminantReport,
    pub continuity: Option<ContinuityReport>,
}

impl FlowCheckSummary {
    pub fn passed(&self) -> bool {
        self.identity.passed
            && self.composition.passed
            && self.jacobian.passed
            && self.inverse.passed
            && self.determinant.passed
            && self.continuity.as_ref().is_none_or(|c| c.passed)
    }
}

/// Runs every flow check over `[s, u]` with split point `t`, anchors on the
/// cell-centred lattice of `domain` with `per_axis` points per coordinate.
/// The continuity check compares against the midpoint-refined lattice of
/// [`refined_centres`]; it is skipped for a single anchor or when disabled in `tols`.
pub fn run_flow_checks(
    driver: &SampledPath,
    field: &LipschitzField,
    domain: &WorkingBox,
    per_axis: usize,
    (s, t, u): (f64, f64, f64),
    cfg: &SolverConfig,
    tols: &FlowTolerances,
) -> Result<FlowCheckSummary> {
    let anchors = cell_centres(domain, per_axis);
    let identity = identity_check(driver, field, &anchors, s, cfg)?;
    let flow = FlowMap::build_with_paths(driver, field, &anchors, (s, u), cfg, "driver")?.with_domain(domain.clone());
    let st = FlowMap::build(driver, field, &anchors, (s, t), cfg, "driver")?;
    let tu = FlowMap::build(driver, field, &st.images, (t, u), cfg, "driver")?;
    let composition = flow_compose_check(&flow, &st, &tu, tols.composition)?;
    let jacobian = jacobian_flow_check(&flow, driver, field, tols.fd_step, tols.jacobian, cfg)?;
    let inverse = round_trip_check(&flow, driver, field, cfg, tols.inverse)?;
    let determinant = determinant_check(&flow, tols.min_det);
    let continuity = if tols.continuity && per_axis >= 2 {
        let fine = FlowMap::build_with_paths(driver, field, &refined_centres(domain, per_axis), (s, u), cfg, "driver")?;
        Some(continuity_in_space_check(&fine, &flow, cfg.p, tols.gamma, tols.modulus_growth)?)
    } else {
        None
    };
    Ok(FlowCheckSummary {
        interval: (s, u),
        midpoint: t,
        anchors: anchors.len(),
        grid_points: driver.restrict(s, u)?.len(),
        identity,
        composition,
        jacobian,
        inverse,
        determinant,
        continuity,
    })
}

/// Centres of the `per_axis^d` equal cells of `domain`: an anchor lattice that
/// keeps a margin of half a cell to the boundary for difference stencils.
pub fn cell_centres(domain: &WorkingBox, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(1);
    let half: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (b - a) / per_axis as f64).collect();
    let inner = WorkingBox {
        lo: domain.lo.iter().zip(&half).map(|(a, h)| a + h).collect(),
        hi: domain.hi.iter().zip(&half).map(|(b, h)| b - h).collect(),
    };
    if per_axis == 1 {
        return vec![inner.lo];
    }
    inner.lattice(per_axis)
}

/// [`cell_centres`] with a midpoint inserted between neighbours on every axis:
/// same hull, half the spacing.
pub fn refined_centres(domain: &WorkingBox, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(1);
    if per_axis == 1 {
        return cell_centres(domain, 1);
    }
    let half: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (b - a) / per_axis as f64).collect();
    let inner = WorkingBox {
        lo: domain.lo.iter().zip(&half).map(|(a, h)| a + h).collect(),
        hi: domain.hi.iter().zip(&half).map(|(b, h)| b - h).collect(),
    };
    inner.lattice(2 * per_axis - 1)
}
