//! Config-driven pipeline: sample the driver, solve, run the selected checks,
//! and collect the report plus the numeric series to write next to it.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::Serialize;
use youngflow_core::cadlag::{
    geometric_flow_check, parametrise, pvariation_preservation_check, solve_forward_jump, solve_geometric,
    GeometricOptions, JumpLogEntry, Traversal,
};
use youngflow_core::drivers::fbm::dyadic_trend;
use youngflow_core::drivers::{bretagnolle_check, levy_variation_probe, rng, FbmSampler, Trend, TrendRule};
use youngflow_core::flow::{cell_centres, composition_refinement_study, determinant, run_flow_checks, FlowCheckSummary};
use youngflow_core::{p_variation, solve_with_jacobian, LipschitzField, SampledPath, SolverConfig, Trajectory};

use crate::config::{Check, DriverConfig, ExperimentConfig, Expectation, JumpRule};
use crate::error::{CliError, CliResult};
use crate::fields::build_field;
use crate::io::{fmt_f64, trajectory_to_csv, write_atomic};
use crate::report::{CheckOutcome, Report, Timing, SCHEMA_VERSION};

/// Sup-norm tolerance of the `linear_exact` check.
pub const LINEAR_EXACT_TOL: f64 = 1e-6;
/// Tolerance of the `jump_law` check.
pub const JUMP_LAW_TOL: f64 = 1e-8;
/// Runge-Kutta steps per unit of `|J|` in the `jump_law` oracle.
const JUMP_LAW_STEPS: usize = 4000;

/// A finished run: the report and the files that belong next to it.
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    /// Writes every file and then the report, each atomically.
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        for (name, text) in &self.files {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        let report = dir.join("report.json");
        write_atomic(&report, self.report.to_json().as_bytes())?;
        Ok(report)
    }
}

/// Inputs resolved from a config before any check runs.
struct Prepared {
    /// Absent when every selected check samples its own drivers.
    driver: Option<SampledPath>,
    field: Option<LipschitzField>,
    solver: SolverConfig,
    interval: (f64, f64),
    x0: Vec<f64>,
    warnings: Vec<String>,
}

/// Validates `cfg` and resolves driver files relative to `base`. All errors
/// here are validation errors.
fn prepare(cfg: &ExperimentConfig, base: &Path) -> CliResult<Prepared> {
    if !(cfg.p >= 1.0 && cfg.p < 2.0) {
        return Err(CliError::Config(format!("p must lie in [1, 2), got {}", cfg.p)));
    }
    if cfg.checks.is_empty() {
        return Err(CliError::Config("no checks selected".into()));
    }
    let mut warnings = Vec::new();
    let mut solver = SolverConfig { p: cfg.p, ..cfg.solver.clone() };
    solver.validate()?;
    let needs_driver = cfg.checks.iter().any(|c| match c {
        Check::VariationProbe | Check::PvarOracle => false,
        Check::PvarPreservation => cfg.samples.unwrap_or(1) == 1,
        _ => true,
    });
    let driver = if needs_driver {
        cfg.driver().sample(base)?
    } else {
        // only the dimension and span are consulted below
        SampledPath::scalar(vec![0.0, 1.0], vec![0.0, 0.0])?
    };
    let field = if cfg.needs_field() {
        let spec = cfg.field.as_ref().ok_or_else(|| CliError::Config("the selected checks need a field".into()))?;
        let field = build_field(spec)?;
        if field.driver_dim() != driver.dim() {
            return Err(CliError::Config(format!(
                "field `{}` takes a {}-dimensional driver, the driver has {} coordinates",
                spec.name,
                field.driver_dim(),
                driver.dim()
            )));
        }
        if !(field.alpha() > cfg.p) {
            if !cfg.allow_hypothesis_violation {
                return Err(CliError::Hypothesis { alpha: field.alpha(), p: cfg.p });
            }
            warnings.push(format!(
                "field alpha = {} does not exceed p = {}; results are outside the theory",
                field.alpha(),
                cfg.p
            ));
            solver.enforce_hypothesis = false;
        }
        Some(field)
    } else {
        None
    };
    let interval = cfg.interval.unwrap_or((driver.start_time(), driver.end_time()));
    if !(interval.0 < interval.1) || !driver.contains_time(interval.0) || !driver.contains_time(interval.1) {
        return Err(CliError::Config(format!(
            "interval ({}, {}) must be increasing and inside [{}, {}]",
            interval.0,
            interval.1,
            driver.start_time(),
            driver.end_time()
        )));
    }
    let d = field.as_ref().map_or(1, |f| f.state_dim());
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![1.0; d]);
    if field.is_some() && x0.len() != d {
        return Err(CliError::Config(format!("x0 has {} coordinates, the field has {d}", x0.len())));
    }
    let needs_anchors = cfg.checks.iter().any(|c| c.is_flow() || *c == Check::CompositionOrder);
    if needs_anchors {
        let a = cfg.anchors.as_ref().ok_or_else(|| CliError::Config("flow checks need `anchors`".into()))?;
        if a.domain.dim() != d || a.per_axis == 0 {
            return Err(CliError::Config("anchor box dimension must match the field, per_axis >= 1".into()));
        }
        if let Some(t) = a.midpoint {
            if !(interval.0 <= t && t <= interval.1) {
                return Err(CliError::Config(format!("midpoint {t} lies outside the interval")));
            }
        }
    }
    if cfg.checks.contains(&Check::CompositionOrder) {
        if !matches!(cfg.driver, DriverConfig::Smooth(_)) {
            return Err(CliError::Config("composition_order needs a smooth driver".into()));
        }
        if cfg.refinement.is_none() {
            return Err(CliError::Config("composition_order needs `refinement`".into()));
        }
    }
    if cfg.checks.contains(&Check::VariationProbe) && cfg.probe.is_none() {
        return Err(CliError::Config("variation_probe needs `probe`".into()));
    }
    if cfg.checks.contains(&Check::PvarOracle) && cfg.oracle.is_none() {
        return Err(CliError::Config("pvar_oracle needs `oracle`".into()));
    }
    let driver = needs_driver.then_some(driver);
    Ok(Prepared { driver, field, solver, interval, x0, warnings })
}

/// Runs `cfg` with driver files resolved against `base`.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> CliResult<RunOutput> {
    let started = Instant::now();
    let prep = prepare(cfg, base)?;
    let mut ctx = Context { cfg, prep: &prep, base, files: Vec::new(), flow: None };
    let mut checks = Vec::new();
    let mut timing = Timing::default();
    for &check in &cfg.checks {
        let t0 = Instant::now();
        let outcome = ctx.run(check).unwrap_or_else(|e| CheckOutcome::failed(check, e));
        timing.checks_ms.insert(format!("{check:?}"), t0.elapsed().as_secs_f64() * 1e3);
        checks.push(outcome);
    }
    timing.total_ms = started.elapsed().as_secs_f64() * 1e3;
    timing.generated_at_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let files = ctx.files;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: format!("youngflow {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        outputs: files.iter().map(|(n, _)| n.clone()).collect(),
        warnings: prep.warnings.clone(),
        timing,
    };
    Ok(RunOutput { report, files })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    prep: &'a Prepared,
    base: &'a Path,
    files: Vec<(String, String)>,
    flow: Option<FlowCheckSummary>,
}

impl Context<'_> {
    fn driver(&self) -> &SampledPath {
        self.prep.driver.as_ref().expect("validated: checks that reach here have a driver")
    }

    fn field(&self) -> &LipschitzField {
        self.prep.field.as_ref().expect("validated: checks that reach here have a field")
    }

    fn geometric_options(&self, delta: Option<f64>) -> CliResult<GeometricOptions> {
        match self.cfg.jump_rule {
            JumpRule::Geometric { delta: d, traversal } => {
                Ok(GeometricOptions { delta: delta.unwrap_or(d), traversal, with_jacobian: true })
            }
            JumpRule::Forward => Err(CliError::Config("this check needs the geometric jump rule".into())),
        }
    }

    fn traversal(&self) -> Traversal {
        match self.cfg.jump_rule {
            JumpRule::Geometric { traversal, .. } => traversal,
            JumpRule::Forward => Traversal::default(),
        }
    }

    fn deltas(&self) -> Vec<f64> {
        if self.cfg.deltas.is_empty() {
            vec![0.5, 1.0, 2.0]
        } else {
            self.cfg.deltas.clone()
        }
    }

    fn run(&mut self, check: Check) -> CliResult<CheckOutcome> {
        match check {
            Check::Solve => self.solve(),
            Check::LinearExact => self.linear_exact(),
            c if c.is_flow() => self.flow_check(c),
            Check::CompositionOrder => self.composition_order(),
            Check::JumpContrast => self.jump_contrast(),
            Check::JumpLaw => self.jump_law(),
            Check::DeltaInvariance => self.delta_invariance(),
            Check::PvarPreservation => self.pvar_preservation(),
            Check::PvarOracle => self.pvar_oracle(),
            Check::VariationProbe => self.variation_probe(),
            _ => unreachable!("flow checks are matched above"),
        }
    }

    /// Solves with the Jacobian, through jumps by the configured rule.
    fn trajectory(&self) -> CliResult<(Trajectory, Vec<JumpLogEntry>)> {
        let p = self.prep;
        if self.driver().restrict(p.interval.0, p.interval.1)?.has_jumps() {
            match self.cfg.jump_rule {
                JumpRule::Geometric { .. } => {
                    let g = solve_geometric(
                        self.driver(),
                        self.field(),
                        &p.x0,
                        p.interval,
                        &p.solver,
                        &self.geometric_options(None)?,
                    )?;
                    Ok((g.trajectory, g.jump_log))
                }
                JumpRule::Forward => Ok(solve_forward_jump(self.driver(), self.field(), &p.x0, p.interval, &p.solver, true)?),
            }
        } else {
            Ok((solve_with_jacobian(self.driver(), self.field(), &p.x0, p.interval, &p.solver)?, Vec::new()))
        }
    }

    fn solve(&mut self) -> CliResult<CheckOutcome> {
        let (traj, log) = self.trajectory()?;
        self.files.push(("trajectory.csv".into(), trajectory_to_csv(&traj)));
        if !log.is_empty() {
            let mut text = serde_json::to_string_pretty(&log).expect("plain data");
            text.push('\n');
            self.files.push(("jump_log.json".into(), text));
        }
        #[derive(Serialize)]
        struct Detail<'a> {
            end_point: &'a [f64],
            end_jacobian: Option<&'a [f64]>,
            samples: usize,
            iterations: usize,
            windows: usize,
            jumps: usize,
        }
        let finite = traj.path.values().iter().all(|v| v.is_finite());
        Ok(CheckOutcome::new(Check::Solve, finite).with_detail(&Detail {
            end_point: traj.end_point(),
            end_jacobian: traj.end_jacobian(),
            samples: traj.path.len(),
            iterations: traj.iterations_used,
            windows: traj.windows_used(),
            jumps: log.len(),
        }))
    }

    fn linear_exact(&mut self) -> CliResult<CheckOutcome> {
        let spec = self.cfg.field.as_ref().expect("validated");
        let d = spec.params.get("d").copied().unwrap_or(1.0);
        if spec.name != "linear" || d != 1.0 {
            return Err(CliError::Config("linear_exact needs the scalar `linear` field".into()));
        }
        let c = spec.params.get("c").copied().unwrap_or(1.0);
        let p = self.prep;
        let traj = solve_with_jacobian(self.driver(), self.field(), &p.x0, p.interval, &p.solver)?;
        let k = traj.jacobian.as_ref().expect("solved with the Jacobian");
        let x_s = self.driver().value_at(p.interval.0)?[0];
        let (mut err_y, mut err_k) = (0.0f64, 0.0f64);
        for (i, &t) in traj.path.times().iter().enumerate() {
            let growth = (c * (self.driver().value_at(t)?[0] - x_s)).exp();
            err_y = err_y.max((traj.path.point(i)[0] - p.x0[0] * growth).abs());
            err_k = err_k.max((k.point(i)[0] - growth).abs());
        }
        let worst = err_y.max(err_k);
        #[derive(Serialize)]
        struct Detail {
            sup_error_y: f64,
            sup_error_k: f64,
            samples: usize,
        }
        Ok(CheckOutcome::new(Check::LinearExact, worst <= LINEAR_EXACT_TOL)
            .measured(worst, LINEAR_EXACT_TOL)
            .with_detail(&Detail { sup_error_y: err_y, sup_error_k: err_k, samples: traj.path.len() }))
    }

    fn flow_summary(&mut self) -> CliResult<FlowCheckSummary> {
        if let Some(s) = &self.flow {
            return Ok(s.clone());
        }
        let p = self.prep;
        let anchors = self.cfg.anchors.as_ref().expect("validated");
        let (s, u) = p.interval;
        let t = anchors.midpoint.unwrap_or(0.5 * (s + u));
        let mut tols = self.cfg.tolerances.clone();
        tols.continuity = self.cfg.checks.contains(&Check::Continuity);
        let summary = if self.driver().restrict(s, u)?.has_jumps() {
            let opts = self.geometric_options(None)?;
            geometric_flow_check(self.driver(), self.field(), &anchors.domain, anchors.per_axis, (s, t, u), &p.solver, &opts, &tols)?
                .summary
        } else {
            run_flow_checks(self.driver(), self.field(), &anchors.domain, anchors.per_axis, (s, t, u), &p.solver, &tols)?
        };
        self.flow = Some(summary.clone());
        Ok(summary)
    }

    fn flow_check(&mut self, check: Check) -> CliResult<CheckOutcome> {
        let s = self.flow_summary()?;
        let report = match check {
            Check::Identity => &s.identity,
            Check::Composition => &s.composition,
            Check::Jacobian => &s.jacobian,
            Check::Inverse => &s.inverse,
            Check::Determinant => {
                let d = &s.determinant;
                return Ok(CheckOutcome::new(check, d.passed).measured(d.min_abs_det, d.threshold).with_detail(d));
            }
            Check::Continuity => {
                let c = s.continuity.as_ref().ok_or_else(|| {
                    CliError::Config("the continuity check needs per_axis >= 2".into())
                })?;
                let ratio = c.modulus / c.coarse_modulus;
                return Ok(CheckOutcome::new(check, c.passed).measured(ratio, c.modulus_tol).with_detail(c));
            }
            _ => unreachable!("only flow checks reach here"),
        };
        Ok(CheckOutcome::new(check, report.passed).measured(report.max_discrepancy, report.tolerance).with_detail(report))
    }

    fn composition_order(&mut self) -> CliResult<CheckOutcome> {
        let DriverConfig::Smooth(smooth) = &self.cfg.driver else {
            unreachable!("validated: smooth driver")
        };
        let refinement = self.cfg.refinement.as_ref().expect("validated");
        let anchors = self.cfg.anchors.as_ref().expect("validated");
        let p = self.prep;
        let (s, u) = p.interval;
        let t = anchors.midpoint.unwrap_or(0.5 * (s + u));
        let study = composition_refinement_study(
            |level| smooth.with_cells(smooth.cells << level).sample().map_err(|e| match e {
                CliError::Core(c) => c,
                other => youngflow_core::Error::InvalidParameter(other.to_string()),
            }),
            refinement.levels,
            self.field(),
            &cell_centres(&anchors.domain, anchors.per_axis),
            (s, t, u),
            &p.solver,
            refinement.required_order,
        )?;
        let mut csv = String::from("cells,discrepancy\n");
        for l in &study.levels {
            csv.push_str(&format!("{},{}\n", l.cells, fmt_f64(l.discrepancy)));
        }
        self.files.push(("composition_order.csv".into(), csv));
        let finest = study.levels.last().map_or(f64::NAN, |l| l.discrepancy);
        let within = finest <= self.cfg.tolerances.composition;
        Ok(CheckOutcome::new(Check::CompositionOrder, study.passed && within)
            .measured(finest, self.cfg.tolerances.composition)
            .with_detail(&study))
    }

    fn jump_contrast(&mut self) -> CliResult<CheckOutcome> {
        let p = self.prep;
        if !self.driver().restrict(p.interval.0, p.interval.1)?.has_jumps() {
            return Err(CliError::Config("jump_contrast needs a driver with jumps".into()));
        }
        let d = self.field().state_dim();
        let min_det = |k: &SampledPath| k.points().map(|row| determinant(row, d).abs()).fold(f64::INFINITY, f64::min);
        let (forward, _) = solve_forward_jump(self.driver(), self.field(), &p.x0, p.interval, &p.solver, true)?;
        let geometric =
            solve_geometric(self.driver(), self.field(), &p.x0, p.interval, &p.solver, &self.geometric_options(None)?)?;
        let forward_det = min_det(forward.jacobian.as_ref().expect("with Jacobian"));
        let geometric_det = min_det(geometric.trajectory.jacobian.as_ref().expect("with Jacobian"));
        let threshold = self.cfg.tolerances.min_det;
        #[derive(Serialize)]
        struct Detail {
            forward_min_abs_det: f64,
            geometric_min_abs_det: f64,
            threshold: f64,
            forward_singular: bool,
            geometric_regular: bool,
        }
        let detail = Detail {
            forward_min_abs_det: forward_det,
            geometric_min_abs_det: geometric_det,
            threshold,
            forward_singular: forward_det < threshold,
            geometric_regular: geometric_det > threshold,
        };
        Ok(CheckOutcome::new(Check::JumpContrast, detail.forward_singular && detail.geometric_regular)
            .measured(geometric_det, threshold)
            .with_detail(&detail))
    }

    fn jump_law(&mut self) -> CliResult<CheckOutcome> {
        let p = self.prep;
        let g = solve_geometric(self.driver(), self.field(), &p.x0, p.interval, &p.solver, &self.geometric_options(None)?)?;
        if g.jump_log.is_empty() {
            return Err(CliError::Config("jump_law needs a driver with jumps".into()));
        }
        let field = self.field();
        let mut worst = 0.0f64;
        for entry in &g.jump_log {
            let oracle = rk4_jump(field, &entry.start, &entry.jump)?;
            let err = entry.end.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        #[derive(Serialize)]
        struct Detail {
            jumps: usize,
            max_endpoint_error: f64,
        }
        Ok(CheckOutcome::new(Check::JumpLaw, worst <= JUMP_LAW_TOL)
            .measured(worst, JUMP_LAW_TOL)
            .with_detail(&Detail { jumps: g.jump_log.len(), max_endpoint_error: worst }))
    }

    fn delta_invariance(&mut self) -> CliResult<CheckOutcome> {
        let p = self.prep;
        let deltas = self.deltas();
        let mut paths = Vec::with_capacity(deltas.len());
        for &delta in &deltas {
            let opts = self.geometric_options(Some(delta))?;
            paths.push(solve_geometric(self.driver(), self.field(), &p.x0, p.interval, &p.solver, &opts)?.trajectory.path);
        }
        let mut worst = 0.0f64;
        for other in &paths[1..] {
            let diff = paths[0].values().iter().zip(other.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(diff);
        }
        let tol = 10.0 * p.solver.picard_tol;
        #[derive(Serialize)]
        struct Detail<'a> {
            deltas: &'a [f64],
            max_difference: f64,
        }
        Ok(CheckOutcome::new(Check::DeltaInvariance, worst <= tol)
            .measured(worst, tol)
            .with_detail(&Detail { deltas: &deltas, max_difference: worst }))
    }

    fn pvar_preservation(&mut self) -> CliResult<CheckOutcome> {
        let samples = self.cfg.samples.unwrap_or(1);
        let driver = self.cfg.driver();
        let deltas = self.deltas();
        let mut worst = 0.0f64;
        let mut tolerance = 0.0;
        let mut jumps = 0;
        for k in 0..samples {
            let path = if samples == 1 { self.driver().clone() } else { driver.with_stream(k).sample(self.base)? };
            for &delta in &deltas {
                let param = parametrise(&path, self.cfg.p, delta, self.traversal())?;
                jumps += param.jumps.len();
                let r = pvariation_preservation_check(&param, self.cfg.p)?;
                worst = worst.max(r.relative_error);
                tolerance = r.tolerance;
            }
        }
        #[derive(Serialize)]
        struct Detail<'a> {
            samples: u64,
            deltas: &'a [f64],
            jumps_seen: usize,
            max_relative_error: f64,
        }
        Ok(CheckOutcome::new(Check::PvarPreservation, worst <= tolerance)
            .measured(worst, tolerance)
            .with_detail(&Detail { samples, deltas: &deltas, jumps_seen: jumps, max_relative_error: worst }))
    }

    fn pvar_oracle(&mut self) -> CliResult<CheckOutcome> {
        let o = self.cfg.oracle.as_ref().expect("validated");
        if o.max_len < 2 || o.max_len > 20 || o.dim == 0 {
            return Err(CliError::Config("oracle paths need 2 <= max_len <= 20 and dim >= 1".into()));
        }
        let mut r = rng(self.cfg.seed.unwrap_or(0), 0);
        let mut worst = 0.0f64;
        for _ in 0..o.paths {
            let len = r.random_range(2..=o.max_len);
            let values: Vec<f64> = (0..len * o.dim).map(|_| r.random_range(-1.0..1.0)).collect();
            let path = SampledPath::continuous((0..len).map(|i| i as f64).collect(), values, o.dim)?;
            let exact = p_variation(&path, self.cfg.p)?;
            let brute = brute_force_pvar(&path, self.cfg.p);
            worst = worst.max((exact - brute).abs() / brute.max(f64::MIN_POSITIVE));
        }
        #[derive(Serialize)]
        struct Detail {
            paths: usize,
            max_relative_error: f64,
        }
        Ok(CheckOutcome::new(Check::PvarOracle, worst <= o.tolerance)
            .measured(worst, o.tolerance)
            .with_detail(&Detail { paths: o.paths, max_relative_error: worst }))
    }

    fn variation_probe(&mut self) -> CliResult<CheckOutcome> {
        let probe = self.cfg.probe.as_ref().expect("validated");
        let p = self.cfg.p;
        let driver = self.cfg.driver();
        let mut trends: Vec<Trend> = Vec::with_capacity(probe.runs as usize);
        let mut criterion = None;
        match &driver {
            DriverConfig::Fbm(spec) => {
                let k = match probe.refinements {
                    Some(k) => k,
                    None if spec.cells.is_power_of_two() => spec.cells.trailing_zeros(),
                    None => return Err(CliError::Config("fBm probes need `refinements` or power-of-two cells".into())),
                };
                let sampler = FbmSampler::new(spec.hurst, 1usize << k, spec.horizon)?;
                for run in 0..probe.runs {
                    let path = sampler.sample(spec.seed, run)?;
                    trends.push(dyadic_trend(&path, p, TrendRule::FBM)?);
                }
            }
            DriverConfig::Levy(l) => {
                if probe.levels.len() < 2 {
                    return Err(CliError::Config("Lévy probes need at least two truncation `levels`".into()));
                }
                criterion = Some(bretagnolle_check(&l.spec(), p)?);
                for run in 0..probe.runs {
                    let spec = youngflow_core::drivers::LevySpec { stream: run, ..l.spec() };
                    trends.push(levy_variation_probe(&spec, p, l.horizon, &probe.levels)?);
                }
            }
            _ => return Err(CliError::Config("variation_probe needs an fbm or levy driver".into())),
        }
        let hits = trends
            .iter()
            .filter(|t| match probe.expect {
                Expectation::Plateau => t.plateau,
                Expectation::Diverge => t.diverges,
            })
            .count() as u64;
        let mut csv = String::from("run,level,value\n");
        for (run, t) in trends.iter().enumerate() {
            for (level, value) in t.levels.iter().zip(&t.values) {
                csv.push_str(&format!("{run},{},{}\n", fmt_f64(*level), fmt_f64(*value)));
            }
        }
        self.files.push(("probe.csv".into(), csv));
        #[derive(Serialize)]
        struct Detail {
            expect: Expectation,
            runs: u64,
            required: u64,
            hits: u64,
            #[serde(skip_serializing_if = "Option::is_none")]
            finite_variation_criterion: Option<bool>,
        }
        Ok(CheckOutcome::new(Check::VariationProbe, hits >= probe.required).with_detail(&Detail {
            expect: probe.expect,
            runs: probe.runs,
            required: probe.required,
            hits,
            finite_variation_criterion: criterion,
        }))
    }
}

/// Classical RK4 for `dz/du = f(z) J` on `u in [0, 1]`.
pub fn rk4_jump(field: &LipschitzField, start: &[f64], jump: &[f64]) -> CliResult<Vec<f64>> {
    let (d, n) = (field.state_dim(), field.driver_dim());
    let size = jump.iter().map(|j| j * j).sum::<f64>().sqrt();
    let steps = ((JUMP_LAW_STEPS as f64 * size).ceil() as usize).max(64);
    let h = 1.0 / steps as f64;
    let rhs = |z: &[f64]| -> CliResult<Vec<f64>> {
        let m = field.eval(z)?;
        Ok((0..d).map(|i| (0..n).map(|a| m[i * n + a] * jump[a]).sum()).collect())
    };
    let mut z = start.to_vec();
    for _ in 0..steps {
        let k1 = rhs(&z)?;
        let k2 = rhs(&z.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect::<Vec<_>>())?;
        let k3 = rhs(&z.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect::<Vec<_>>())?;
        let k4 = rhs(&z.iter().zip(&k3).map(|(a, k)| a + h * k).collect::<Vec<_>>())?;
        for i in 0..d {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(z)
}

/// `||X||_p` by enumerating every subset of interior samples.
pub fn brute_force_pvar(path: &SampledPath, p: f64) -> f64 {
    let n = path.len();
    let interior = n.saturating_sub(2);
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << interior) {
        let mut prev = 0;
        let mut sum = 0.0;
        for i in 1..n {
            if i == n - 1 || mask >> (i - 1) & 1 == 1 {
                let inc: f64 =
                    path.point(i).iter().zip(path.point(prev)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                sum += inc.powf(p);
                prev = i;
            }
        }
        best = best.max(sum);
    }
    best.powf(1.0 / p)
}
