//! Acceptance suite. Each criterion runs its bundled config through the
//! pipeline and compares against an oracle computed here. One line per
//! criterion; the process fails if any criterion does.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use youngflow::config::{DriverConfig, JumpRule};
use youngflow::fields::build_field;
use youngflow::{run_experiment, Check, ExperimentConfig, Report};
use youngflow_core::cadlag::{parametrise, solve_forward_jump, solve_geometric, GeometricOptions, Traversal};
use youngflow_core::drivers::{bretagnolle_check, rng, sample_levy, LevySpec};
use youngflow_core::{p_variation, solve, solve_with_jacobian, LipschitzField, SampledPath, SolverConfig};

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(format!("{name}.json"))).expect("bundled config loads")
}

fn run(cfg: &ExperimentConfig) -> Result<Report, String> {
    let out = run_experiment(cfg, &configs()).map_err(|e| format!("{}: {e}", cfg.name))?;
    let report = out.report;
    if !report.passed {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| format!("{:?}", c.check)).collect();
        return Err(format!("{}: pipeline checks failed: {}", cfg.name, failed.join(", ")));
    }
    Ok(report)
}

/// Pipeline runs of the flow configs, shared by criteria 3 to 5.
fn flow_reports() -> Result<&'static [Report], String> {
    static REPORTS: OnceLock<Result<Vec<Report>, String>> = OnceLock::new();
    REPORTS
        .get_or_init(|| FLOW_CONFIGS.iter().map(|name| run(&load(name))).collect())
        .as_deref()
        .map_err(Clone::clone)
}

struct Setup {
    driver: SampledPath,
    field: LipschitzField,
    solver: SolverConfig,
    interval: (f64, f64),
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, String> {
    let driver = cfg.driver().sample(&configs()).map_err(|e| e.to_string())?;
    let field = build_field(cfg.field.as_ref().ok_or("config has no field")?).map_err(|e| e.to_string())?;
    let solver = SolverConfig { p: cfg.p, ..cfg.solver.clone() };
    let interval = cfg.interval.unwrap_or((driver.start_time(), driver.end_time()));
    Ok(Setup { driver, field, solver, interval })
}

fn anchors(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    let a = cfg.anchors.as_ref().expect("flow config has anchors");
    let (lo, hi, m) = (&a.domain.lo, &a.domain.hi, a.per_axis);
    let mut out = vec![Vec::new()];
    for k in 0..lo.len() {
        let h = (hi[k] - lo[k]) / m as f64;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..m).map(move |i| {
                    let mut x = prefix.clone();
                    x.push(lo[k] + (i as f64 + 0.5) * h);
                    x
                })
            })
            .collect();
    }
    out
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn flow_end(s: &Setup, x: &[f64], interval: (f64, f64)) -> Result<Vec<f64>, String> {
    Ok(solve(&s.driver, &s.field, x, interval, &s.solver).map_err(|e| e.to_string())?.end_point().to_vec())
}

/// The driver run backwards in time over `interval`.
fn reversed(path: &SampledPath, interval: (f64, f64)) -> SampledPath {
    let sub = path.restrict(interval.0, interval.1).expect("interval inside the driver");
    let (a, b) = interval;
    let times = sub.times().iter().rev().map(|t| a + b - t).collect();
    let values = sub.points().rev().flat_map(|x| x.to_vec()).collect();
    SampledPath::continuous(times, values, sub.dim()).expect("smooth drivers reverse to valid paths")
}

const FLOW_CONFIGS: &[&str] = &[
    "zero_field",
    "flow_constant",
    "flow_identity",
    "flow_linear",
    "flow_sine",
    "flow_rotation",
    "flow_coupled",
    "flow_polynomial",
];

/// Sum over all partitions that use a subset of the rows, by enumeration.
fn brute_force(values: &[f64], dim: usize, p: f64) -> f64 {
    let n = values.len() / dim;
    let row = |i: usize| &values[i * dim..(i + 1) * dim];
    let mut best = 0.0f64;
    for mask in 0u32..(1 << (n - 2)) {
        let mut prev = 0;
        let mut sum = 0.0;
        for i in 1..n {
            if i == n - 1 || mask & (1 << (i - 1)) != 0 {
                let inc: f64 = row(i).iter().zip(row(prev)).map(|(a, b)| (a - b) * (a - b)).sum();
                sum += inc.sqrt().powf(p);
                prev = i;
            }
        }
        best = best.max(sum);
    }
    best
}

fn criterion_1() -> Outcome {
    let mut r = rng(2024, 0);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = r.random_range(2..=14);
        let dim = r.random_range(1..=3);
        let p = r.random_range(1.0..2.0);
        let mut times = vec![0.0];
        for _ in 1..n {
            let last = *times.last().unwrap();
            // every fifth path repeats some times, making it cadlag
            let step = if k % 5 == 0 && r.random_bool(0.3) { 0.0 } else { r.random_range(0.01..1.0) };
            times.push(last + step);
        }
        if times.windows(3).any(|w| w[0] == w[2]) || times[n - 1] == times[n - 2] || times[0] == times[1] {
            for (i, t) in times.iter_mut().enumerate() {
                *t = i as f64;
            }
        }
        let values: Vec<f64> = (0..n * dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let cadlag = times.windows(2).any(|w| w[0] == w[1]);
        let path = if cadlag {
            SampledPath::cadlag(times, values.clone(), dim)
        } else {
            SampledPath::continuous(times, values.clone(), dim)
        }
        .map_err(|e| e.to_string())?;
        let exact = p_variation(&path, p).map_err(|e| e.to_string())?;
        let oracle = brute_force(&values, dim, p).powf(1.0 / p);
        let rel = (exact - oracle).abs() / oracle.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    run(&load("pvar_oracle"))?;
    if worst > 1e-12 {
        return Err(format!("max relative error {worst:.2e} > 1e-12"));
    }
    Ok(format!("200 paths, max relative error {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let cfg = load("linear_exact");
    run(&cfg)?;
    let s = setup(&cfg)?;
    let c = cfg.field.as_ref().unwrap().params["c"];
    let x0 = cfg.x0.clone().unwrap();
    let traj = solve_with_jacobian(&s.driver, &s.field, &x0, s.interval, &s.solver).map_err(|e| e.to_string())?;
    let k = traj.jacobian.as_ref().ok_or("no Jacobian")?;
    let x_s = s.driver.value_at(s.interval.0).map_err(|e| e.to_string())?[0];
    let (mut err_y, mut err_k) = (0.0f64, 0.0f64);
    for (i, &t) in traj.path.times().iter().enumerate() {
        let growth = (c * (s.driver.value_at(t).map_err(|e| e.to_string())?[0] - x_s)).exp();
        err_y = err_y.max((traj.path.point(i)[0] - x0[0] * growth).abs());
        err_k = err_k.max((k.point(i)[0] - growth).abs());
    }
    if traj.path.len() < 10_000 {
        return Err(format!("grid has {} points", traj.path.len()));
    }
    if err_y > 1e-6 || err_k > 1e-6 {
        return Err(format!("sup error y {err_y:.2e}, K {err_k:.2e} > 1e-6"));
    }
    Ok(format!("{} points, sup error y {err_y:.1e}, K {err_k:.1e}", traj.path.len()))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for (name, report) in FLOW_CONFIGS.iter().zip(flow_reports()?) {
        let cfg = load(name);
        let s = setup(&cfg)?;
        let t = cfg.anchors.as_ref().unwrap().midpoint.unwrap_or(0.5 * (s.interval.0 + s.interval.1));
        for x in anchors(&cfg) {
            let direct = flow_end(&s, &x, s.interval)?;
            let mid = flow_end(&s, &x, (s.interval.0, t))?;
            let composed = flow_end(&s, &mid, (t, s.interval.1))?;
            worst = worst.max(sup(&direct, &composed));
        }
        let reported = report.outcome(Check::Composition).and_then(|c| c.max_discrepancy).unwrap_or(f64::NAN);
        if !(reported <= 1e-6) {
            return Err(format!("{name}: reported composition discrepancy {reported:.2e}"));
        }
    }
    if worst > 1e-6 {
        return Err(format!("composition discrepancy {worst:.2e} > 1e-6"));
    }
    let cfg = load("composition_order");
    run(&cfg)?;
    let DriverConfig::Smooth(smooth) = &cfg.driver else { return Err("composition_order needs a smooth driver".into()) };
    let levels = cfg.refinement.as_ref().unwrap().levels;
    let mut defects = Vec::new();
    for level in 0..levels {
        let driver = smooth.with_cells(smooth.cells << level).sample().map_err(|e| e.to_string())?;
        let s = Setup { driver, ..setup(&cfg)? };
        let t = cfg.anchors.as_ref().unwrap().midpoint.unwrap();
        let mut d = 0.0f64;
        for x in anchors(&cfg) {
            let direct = flow_end(&s, &x, s.interval)?;
            let mid = flow_end(&s, &x, (s.interval.0, t))?;
            d = d.max(sup(&direct, &flow_end(&s, &mid, (t, s.interval.1))?));
        }
        defects.push(d);
    }
    let orders: Vec<f64> = defects.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_order >= 1.0) || *defects.last().unwrap() > 1e-6 {
        return Err(format!("defects {defects:?}, orders {orders:.2?}"));
    }
    Ok(format!(
        "{} configs, max discrepancy {worst:.1e}; off-grid split defects {:.1e} -> {:.1e}, min order {min_order:.2}",
        FLOW_CONFIGS.len(),
        defects[0],
        defects.last().unwrap()
    ))
}

fn criterion_4() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    flow_reports()?;
    for name in FLOW_CONFIGS {
        let cfg = load(name);
        let s = setup(&cfg)?;
        let d = s.field.state_dim();
        let exact = matches!(cfg.field.as_ref().unwrap().name.as_str(), "zero" | "constant" | "identity");
        for x in anchors(&cfg) {
            let traj = solve_with_jacobian(&s.driver, &s.field, &x, s.interval, &s.solver).map_err(|e| e.to_string())?;
            let k = traj.end_jacobian().ok_or("no Jacobian")?.to_vec();
            if exact {
                let id: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect();
                if k != id {
                    return Err(format!("{name}: K = {k:?} is not the identity"));
                }
                continue;
            }
            let mut fd = vec![0.0; d * d];
            for j in 0..d {
                let (mut up, mut down) = (x.clone(), x.clone());
                up[j] += h;
                down[j] -= h;
                let (yu, yd) = (flow_end(&s, &up, s.interval)?, flow_end(&s, &down, s.interval)?);
                for i in 0..d {
                    fd[i * d + j] = (yu[i] - yd[i]) / (2.0 * h);
                }
            }
            let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(sup(&k, &fd) / scale);
        }
    }
    if worst > 1e-3 {
        return Err(format!("relative Jacobian error {worst:.2e} > 1e-3"));
    }
    Ok(format!("{} fields, max relative error {worst:.1e}; zero and constant fields exact", FLOW_CONFIGS.len()))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    flow_reports()?;
    for name in FLOW_CONFIGS {
        let cfg = load(name);
        let s = setup(&cfg)?;
        let back = Setup { driver: reversed(&s.driver, s.interval), ..setup(&cfg)? };
        for x in anchors(&cfg) {
            let y = flow_end(&s, &x, s.interval)?;
            let z = flow_end(&back, &y, s.interval)?;
            worst = worst.max(sup(&x, &z));
        }
    }
    if worst > 1e-5 {
        return Err(format!("round-trip error {worst:.2e} > 1e-5"));
    }
    Ok(format!("{} configs, max round-trip error {worst:.1e}", FLOW_CONFIGS.len()))
}

fn levy_spec(cfg: &ExperimentConfig) -> Result<(LevySpec, f64), String> {
    match cfg.driver() {
        DriverConfig::Levy(l) => Ok((l.spec(), l.horizon)),
        _ => Err(format!("{}: expected a Lévy driver", cfg.name)),
    }
}

fn criterion_6() -> Outcome {
    let cfg = load("pvar_preservation");
    run(&cfg)?;
    let (spec, horizon) = levy_spec(&cfg)?;
    let samples = cfg.samples.unwrap_or(50);
    let mut worst = 0.0f64;
    for stream in 0..samples {
        let path = sample_levy(&LevySpec { stream, ..spec.clone() }, horizon).map_err(|e| e.to_string())?.path;
        let original = p_variation(&path, cfg.p).map_err(|e| e.to_string())?;
        for &delta in &cfg.deltas {
            let param = parametrise(&path, cfg.p, delta, Traversal::default()).map_err(|e| e.to_string())?;
            let stretched = p_variation(&param.stretched, cfg.p).map_err(|e| e.to_string())?;
            worst = worst.max((stretched - original).abs() / original);
        }
    }
    if samples < 50 || cfg.deltas != [0.5, 1.0, 2.0] {
        return Err("config must cover 50 samples and deltas 0.5, 1, 2".into());
    }
    if worst > 1e-10 {
        return Err(format!("relative p-variation change {worst:.2e} > 1e-10"));
    }
    Ok(format!("{samples} samples x {} deltas, max relative change {worst:.1e}", cfg.deltas.len()))
}

/// Classical fourth-order Runge-Kutta for `dz/du = f(z) J`, `u in [0, 1]`.
fn rk4(field: &LipschitzField, start: &[f64], jump: &[f64], steps: usize) -> Result<Vec<f64>, String> {
    let n = field.driver_dim();
    let rhs = |z: &[f64]| -> Result<Vec<f64>, String> {
        let m = field.eval(z).map_err(|e| e.to_string())?;
        Ok((0..z.len()).map(|i| (0..n).map(|a| m[i * n + a] * jump[a]).sum()).collect())
    };
    let h = 1.0 / steps as f64;
    let axpy = |z: &[f64], k: &[f64], c: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let mut z = start.to_vec();
    for _ in 0..steps {
        let k1 = rhs(&z)?;
        let k2 = rhs(&axpy(&z, &k1, h / 2.0))?;
        let k3 = rhs(&axpy(&z, &k2, h / 2.0))?;
        let k4 = rhs(&axpy(&z, &k3, h))?;
        for i in 0..z.len() {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(z)
}

fn criterion_7() -> Outcome {
    let cfg = load("jump_law");
    run(&cfg)?;
    let s = setup(&cfg)?;
    let JumpRule::Geometric { delta, traversal } = cfg.jump_rule else { return Err("expected the geometric rule".into()) };
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![1.0; s.field.state_dim()]);
    let opts = GeometricOptions { delta, traversal, with_jacobian: false };
    let g = solve_geometric(&s.driver, &s.field, &x0, s.interval, &s.solver, &opts).map_err(|e| e.to_string())?;
    let mut law = 0.0f64;
    for entry in &g.jump_log {
        let size = entry.jump.iter().map(|v| v * v).sum::<f64>().sqrt();
        let steps = ((8000.0 * size).ceil() as usize).max(200);
        law = law.max(sup(&entry.end, &rk4(&s.field, &entry.start, &entry.jump, steps)?));
    }
    if g.jump_log.is_empty() {
        return Err("the driver has no jumps".into());
    }
    let mut invariance = 0.0f64;
    for &d in &cfg.deltas {
        let other = GeometricOptions { delta: d, ..opts };
        let h = solve_geometric(&s.driver, &s.field, &x0, s.interval, &s.solver, &other).map_err(|e| e.to_string())?;
        invariance = invariance.max(sup(h.trajectory.path.values(), g.trajectory.path.values()));
    }
    let bound = 10.0 * s.solver.picard_tol;
    if law > 1e-8 || invariance > bound {
        return Err(format!("jump law {law:.2e} (tol 1e-8), delta invariance {invariance:.2e} (tol {bound:.0e})"));
    }
    Ok(format!("{} jumps, endpoint error {law:.1e}; delta invariance {invariance:.1e}", g.jump_log.len()))
}

fn det(k: &[f64]) -> f64 {
    match k.len() {
        1 => k[0],
        4 => k[0] * k[3] - k[1] * k[2],
        _ => f64::NAN,
    }
}

fn criterion_8() -> Outcome {
    let cfg = load("jump_contrast");
    run(&cfg)?;
    let s = setup(&cfg)?;
    let x0 = cfg.x0.clone().unwrap();
    let (forward, _) =
        solve_forward_jump(&s.driver, &s.field, &x0, s.interval, &s.solver, true).map_err(|e| e.to_string())?;
    let opts = GeometricOptions { with_jacobian: true, ..GeometricOptions::default() };
    let g = solve_geometric(&s.driver, &s.field, &x0, s.interval, &s.solver, &opts).map_err(|e| e.to_string())?;
    let forward_det = det(forward.end_jacobian().ok_or("no forward Jacobian")?);
    let geometric_det = det(g.trajectory.end_jacobian().ok_or("no geometric Jacobian")?);
    // f(y) = y: the forward rule multiplies K by 1 + J, the geometric one by exp(J)
    let c = cfg.field.as_ref().unwrap().params["c"];
    let total = s.driver.last()[0] - s.driver.first()[0];
    let expected = (c * total).exp();
    if forward_det.abs() >= 1e-8 || geometric_det <= 1e-8 || (geometric_det - expected).abs() > 1e-6 {
        return Err(format!("forward det {forward_det:.2e}, geometric det {geometric_det:.6} (expected {expected:.6})"));
    }
    Ok(format!("forward det {forward_det:.1e}, geometric det {geometric_det:.6} = exp({total})"))
}

fn probe_hits(report: &Report) -> Result<(u64, u64), String> {
    let outcome = report.outcome(Check::VariationProbe).ok_or("no probe outcome")?;
    let hits = outcome.detail["hits"].as_u64().ok_or("probe detail lacks hits")?;
    let runs = outcome.detail["runs"].as_u64().ok_or("probe detail lacks runs")?;
    Ok((hits, runs))
}

fn probe_pair(plateau: &str, diverge: &str) -> Outcome {
    let mut parts = Vec::new();
    for name in [plateau, diverge] {
        let cfg = load(name);
        let probe = cfg.probe.as_ref().ok_or("config has no probe")?;
        if probe.runs != 20 || probe.required < 15 {
            return Err(format!("{name}: must require 15 of 20 runs"));
        }
        let (hits, runs) = probe_hits(&run(&cfg)?)?;
        parts.push(format!("{name} {hits}/{runs}"));
    }
    Ok(parts.join(", "))
}

fn criterion_9() -> Outcome {
    probe_pair("fbm_probe_plateau", "fbm_probe_diverge")
}

fn criterion_10() -> Outcome {
    let summary = probe_pair("levy_probe_plateau", "levy_probe_diverge")?;
    let mut cases = 0;
    for i in 1..20 {
        let alpha = 0.1 * i as f64;
        for j in 0..20 {
            let p = 1.0 + 0.05 * j as f64;
            let spec = LevySpec::stable(alpha, 1.0, 1e-3, 0);
            let finite = bretagnolle_check(&spec, p).map_err(|e| e.to_string())?;
            if finite != (p > alpha) {
                return Err(format!("bretagnolle_check(alpha = {alpha}, p = {p}) = {finite}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{summary}; finite-variation rule agrees on {cases} (alpha, p) pairs"))
}

fn criterion_11() -> Outcome {
    let cfg = load("corollary45");
    let (spec, _) = levy_spec(&cfg)?;
    let alpha = cfg.field.as_ref().and_then(|f| f.alpha).ok_or("field alpha must be set")?;
    if spec.truncation != 1e-3 || alpha != 1.6 || cfg.anchors.as_ref().map(|a| a.domain.dim()) != Some(2) {
        return Err("scenario must be stable 1.3 at 1e-3 with a Lip(1.6) field on a 2-D box".into());
    }
    let t = &cfg.tolerances;
    if t.composition > 1e-6 || t.jacobian > 1e-3 || t.inverse > 1e-5 {
        return Err("flow tolerances looser than criteria 3-5".into());
    }
    let report = run(&cfg)?;
    for check in [Check::Composition, Check::Jacobian, Check::Inverse, Check::Determinant] {
        if !report.outcome(check).is_some_and(|c| c.passed) {
            return Err(format!("{check:?} missing or failed"));
        }
    }
    // composition recomputed from separate geometric solves
    let s = setup(&cfg)?;
    let mid = cfg.anchors.as_ref().unwrap().midpoint.unwrap_or(0.5 * (s.interval.0 + s.interval.1));
    let opts = match cfg.jump_rule {
        JumpRule::Geometric { delta, traversal } => GeometricOptions { delta, traversal, with_jacobian: false },
        JumpRule::Forward => return Err("expected the geometric rule".into()),
    };
    let end = |x: &[f64], iv: (f64, f64)| -> Result<Vec<f64>, String> {
        let g = solve_geometric(&s.driver, &s.field, x, iv, &s.solver, &opts).map_err(|e| e.to_string())?;
        Ok(g.trajectory.path.last().to_vec())
    };
    let mut worst = 0.0f64;
    for x in anchors(&cfg) {
        let direct = end(&x, s.interval)?;
        let composed = end(&end(&x, (s.interval.0, mid))?, (mid, s.interval.1))?;
        worst = worst.max(sup(&direct, &composed));
    }
    if worst > 1e-6 {
        return Err(format!("recomputed composition discrepancy {worst:.2e} > 1e-6"));
    }
    let num = |c: Check| report.outcome(c).and_then(|o| o.max_discrepancy).unwrap_or(f64::NAN);
    Ok(format!(
        "{} jumps; composition {worst:.1e}, Jacobian {:.1e}, inverse {:.1e}",
        s.driver.jump_indices().len(),
        num(Check::Jacobian),
        num(Check::Inverse)
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<f64>); 11] = [
        ("exact p-variation against enumeration", criterion_1, Some(10.0)),
        ("linear field closed form", criterion_2, Some(5.0)),
        ("flow composition", criterion_3, None),
        ("Jacobian against finite differences", criterion_4, None),
        ("inverse via time reversal", criterion_5, None),
        ("p-variation preserved by the time change", criterion_6, None),
        ("geometric jump law and delta invariance", criterion_7, None),
        ("forward versus geometric jump Jacobian", criterion_8, None),
        ("fBm refinement probe", criterion_9, Some(60.0)),
        ("Lévy truncation probe", criterion_10, None),
        ("stable driver end to end", criterion_11, Some(120.0)),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let secs = start.elapsed().as_secs_f64();
        if let (Ok(msg), Some(limit)) = (&outcome, limit) {
            if secs > *limit {
                outcome = Err(format!("{msg}; took {secs:.1} s, limit {limit} s"));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.2} s)", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
