//! Command-line front end. `run` executes a config file; the other
//! subcommands cover single steps of the pipeline.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use youngflow_core::cadlag::Traversal;
use youngflow_core::drivers::{
    levy_variation_probe, sample_fbm, sample_levy, FbmSampler, FbmSpec, JumpLaw, LevySpec, TrendRule,
};
use youngflow_core::drivers::fbm::dyadic_trend;
use youngflow_core::young::{young_integral_report, Rule};
use youngflow_core::{p_variation_exact, FlowTolerances, SampledPath, SolverConfig, WorkingBox};

use crate::config::{AnchorConfig, Check, DriverConfig, ExperimentConfig, JumpRule, SmoothDriver};
use crate::error::{CliError, CliResult, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_PASS};
use crate::experiment::run_experiment;
use crate::fields::{parse_params, FieldSpec, REGISTRY};
use crate::io::{fmt_f64, load_path, save_path, write_atomic};
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "youngflow", version, about = "Young differential equations, flows, and jump drivers")]
pub struct Cli {
    /// Plain PASS/FAIL output (also implied by NO_COLOR or a non-terminal stdout)
    #[arg(long, global = true)]
    pub no_color: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a driver and write it as CSV or JSON (by extension)
    Sample {
        #[command(subcommand)]
        driver: SampleDriver,
    },
    /// Exact p-variation of a path file
    Pvar {
        path: PathBuf,
        #[arg(long)]
        p: f64,
        /// Restrict to `s,t` (default: the whole path)
        #[arg(long, value_parser = parse_pair)]
        interval: Option<(f64, f64)>,
    },
    /// Young integral of a matrix path against a vector path
    YoungIntegrate {
        #[arg(long)]
        integrand: PathBuf,
        #[arg(long)]
        integrator: PathBuf,
        /// Variation exponent of the integrator
        #[arg(long)]
        p: f64,
        /// Variation exponent of the integrand
        #[arg(long)]
        q: f64,
        #[arg(long, value_parser = parse_pair)]
        interval: Option<(f64, f64)>,
        #[arg(long, value_enum, default_value_t = RuleArg::Trapezoid)]
        rule: RuleArg,
    },
    /// Solve on a continuous driver; writes t, y and K columns
    Solve(SolveArgs),
    /// Solve on a driver with jumps
    SolveCadlag {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_enum, default_value_t = JumpRuleArg::Geometric)]
        jump_rule: JumpRuleArg,
        /// Fictitious time per unit |J|^p (geometric rule)
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Traversal cells per unit |J|^p (geometric rule)
        #[arg(long, default_value_t = 1000.0)]
        per_unit: f64,
        /// Jump endpoints as JSON
        #[arg(long)]
        jump_log: Option<PathBuf>,
    },
    /// Flow checks (identity, composition, Jacobian, inverse, determinant) on an anchor box
    FlowCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Lower corner of the anchor box, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lo: Vec<f64>,
        /// Upper corner of the anchor box, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hi: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        per_axis: usize,
        /// Split point of the composition check (default: middle of the interval)
        #[arg(long)]
        midpoint: Option<f64>,
        /// Also compare the space modulus on a refined lattice
        #[arg(long)]
        continuity: bool,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Refinement trend of the p-variation over independent runs; CSV `run,level,value`
    Probe {
        #[command(subcommand)]
        driver: ProbeDriver,
    },
    /// Run an experiment config; writes report.json and CSV series to the output directory
    Run {
        config: PathBuf,
        /// Default: the config's `output_dir`, else `out/<name>`
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replace the seed of a random driver
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_hypothesis_violation: bool,
    },
    /// List the field registry
    Fields,
}

#[derive(Debug, Subcommand)]
pub enum SampleDriver {
    /// Fractional Brownian motion on a uniform grid
    Fbm {
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 1024)]
        cells: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[command(flatten)]
        rng: RngArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Symmetric stable jumps above a truncation level, compensated
    Stable {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Uniform grid cells added to the jump times
        #[arg(long, default_value_t = 0)]
        grid: usize,
        #[arg(long)]
        no_compensate: bool,
        #[command(flatten)]
        rng: RngArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compound Poisson with uniform jump sizes on [lo, hi]
    Poisson {
        #[arg(long)]
        rate: f64,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        grid: usize,
        #[arg(long)]
        compensate: bool,
        #[command(flatten)]
        rng: RngArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// x_k(t) = drift_k t + amplitude_k sin(frequency_k t)
    Smooth {
        #[arg(long, default_value_t = 1000)]
        cells: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        amplitude: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        frequency: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        drift: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProbeDriver {
    /// Dyadic refinements of one fBm sample per run
    Fbm {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        refinements: u32,
        #[arg(long, default_value_t = 20)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Coupled truncation sweep of a compensated stable driver per run
    Stable {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        p: f64,
        /// Truncation levels, coarse to fine
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.03,0.01,0.003,0.001")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 20)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RngArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Driver path file (CSV or JSON)
    #[arg(long)]
    pub driver: PathBuf,
    /// Field name from the registry (see `youngflow fields`)
    #[arg(long)]
    pub field: String,
    /// Field parameter as key=value; repeatable
    #[arg(long = "field-param")]
    pub field_params: Vec<String>,
    /// Polynomial coefficients (JSON) for `--field polynomial`
    #[arg(long)]
    pub field_file: Option<PathBuf>,
    /// Override the field's regularity exponent
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Variation exponent of the driver, in [1, 2)
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_parser = parse_pair)]
    pub interval: Option<(f64, f64)>,
    #[arg(long, default_value_t = 1e-10)]
    pub picard_tol: f64,
    /// Run even when the field's alpha does not exceed p
    #[arg(long)]
    pub allow_hypothesis_violation: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial point, comma separated (default: all ones)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    /// Trajectory CSV
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Trapezoid,
    Left,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum JumpRuleArg {
    Geometric,
    Forward,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `s,t`")?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

struct Style {
    color: bool,
}

impl Style {
    fn new(no_color: bool) -> Self {
        let color = !no_color && std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
        Self { color }
    }

    fn verdict(&self, passed: bool) -> &'static str {
        match (passed, self.color) {
            (true, true) => "\x1b[32mPASS\x1b[0m",
            (false, true) => "\x1b[31mFAIL\x1b[0m",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
        }
    };
    let style = Style::new(cli.no_color);
    match execute(cli.command, &style) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn experiment_from(common: &CommonArgs, name: &str, checks: Vec<Check>) -> CliResult<ExperimentConfig> {
    let field = FieldSpec {
        params: parse_params(&common.field_params)?,
        alpha: common.alpha,
        file: common.field_file.clone(),
        ..FieldSpec::named(&common.field)
    };
    Ok(ExperimentConfig {
        name: name.into(),
        description: String::new(),
        driver: DriverConfig::File { path: common.driver.clone() },
        field: Some(field),
        p: common.p,
        interval: common.interval,
        x0: None,
        solver: SolverConfig { picard_tol: common.picard_tol, ..SolverConfig::default() },
        jump_rule: JumpRule::default(),
        anchors: None,
        tolerances: FlowTolerances::default(),
        checks,
        refinement: None,
        probe: None,
        oracle: None,
        deltas: Vec::new(),
        samples: None,
        seed: None,
        output_dir: None,
        allow_hypothesis_violation: common.allow_hypothesis_violation,
    })
}

fn warn_all(report: &Report) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn print_checks(report: &Report, style: &Style) {
    for c in &report.checks {
        let numbers = match (c.max_discrepancy, c.tolerance) {
            (Some(d), Some(t)) => format!("  {d:.3e} (tol {t:.1e})"),
            _ => String::new(),
        };
        let err = c.error.as_deref().map(|e| format!("  error: {e}")).unwrap_or_default();
        println!("{} {:?}{numbers}{err}", style.verdict(c.passed), c.check);
    }
}

fn solve_command(
    args: SolveArgs,
    rule: JumpRule,
    jump_log: Option<PathBuf>,
    require_jumps: bool,
) -> CliResult<i32> {
    let mut cfg = experiment_from(&args.common, "solve", vec![Check::Solve])?;
    cfg.jump_rule = rule;
    if !args.x0.is_empty() {
        cfg.x0 = Some(args.x0.clone());
    }
    let driver = load_path(&args.common.driver)?;
    if !require_jumps && driver.has_jumps() {
        return Err(CliError::Config("the driver has jumps; use `solve-cadlag`".into()));
    }
    let out = run_experiment(&cfg, Path::new(""))?;
    warn_all(&out.report);
    let outcome = &out.report.checks[0];
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
        return Ok(EXIT_CHECK_FAILED);
    }
    for (name, text) in &out.files {
        match name.as_str() {
            "trajectory.csv" => write_atomic(&args.output, text.as_bytes())?,
            "jump_log.json" => {
                if let Some(path) = &jump_log {
                    write_atomic(path, text.as_bytes())?;
                }
            }
            _ => {}
        }
    }
    println!("{}", serde_json::to_string_pretty(&outcome.detail).expect("plain data"));
    Ok(if outcome.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn write_or_print(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn execute(command: Command, style: &Style) -> CliResult<i32> {
    match command {
        Command::Sample { driver } => {
            let (path, output): (SampledPath, PathBuf) = match driver {
                SampleDriver::Fbm { hurst, cells, horizon, rng, output } => {
                    let spec = FbmSpec { stream: rng.stream, ..FbmSpec::new(hurst, cells, horizon, rng.seed) };
                    (sample_fbm(&spec)?, output)
                }
                SampleDriver::Stable { alpha, c, eps, horizon, grid, no_compensate, rng, output } => {
                    let spec = LevySpec {
                        compensate: !no_compensate,
                        grid,
                        stream: rng.stream,
                        ..LevySpec::stable(alpha, c, eps, rng.seed)
                    };
                    (sample_levy(&spec, horizon)?.path, output)
                }
                SampleDriver::Poisson { rate, lo, hi, horizon, grid, compensate, rng, output } => {
                    let spec = LevySpec {
                        compensate,
                        grid,
                        stream: rng.stream,
                        ..LevySpec::compound_poisson(rate, JumpLaw::Uniform { lo, hi }, rng.seed)
                    };
                    (sample_levy(&spec, horizon)?.path, output)
                }
                SampleDriver::Smooth { cells, horizon, amplitude, frequency, drift, output } => {
                    (SmoothDriver { cells, horizon, amplitude, frequency, drift }.sample()?, output)
                }
            };
            save_path(&output, &path)?;
            eprintln!("wrote {} samples to {}", path.len(), output.display());
            Ok(EXIT_PASS)
        }
        Command::Pvar { path, p, interval } => {
            let x = load_path(&path)?;
            let interval = interval.unwrap_or((x.start_time(), x.end_time()));
            let v = p_variation_exact(&x, p, interval)?;
            println!(
                "{}",
                serde_json::json!({ "p": p, "interval": [interval.0, interval.1], "p_variation": v.value })
            );
            Ok(EXIT_PASS)
        }
        Command::YoungIntegrate { integrand, integrator, p, q, interval, rule } => {
            let f = load_path(&integrand)?;
            let g = load_path(&integrator)?;
            let interval = interval.unwrap_or((g.start_time(), g.end_time()));
            let rule = match rule {
                RuleArg::Trapezoid => Rule::Trapezoid,
                RuleArg::Left => Rule::LeftPoint,
            };
            let r = young_integral_report(&f, &g, interval, (p, q), rule)?;
            println!(
                "{}",
                serde_json::json!({
                    "value": r.value,
                    "integrand_variation": r.integrand_variation,
                    "integrator_variation": r.integrator_variation,
                    "p": r.p,
                    "q": r.q,
                    "theta": r.theta,
                    "bound_constant": r.bound_constant,
                })
            );
            Ok(EXIT_PASS)
        }
        Command::Solve(args) => solve_command(args, JumpRule::default(), None, false),
        Command::SolveCadlag { solve, jump_rule, delta, per_unit, jump_log } => {
            let rule = match jump_rule {
                JumpRuleArg::Geometric => {
                    JumpRule::Geometric { delta, traversal: Traversal { per_unit, ..Traversal::default() } }
                }
                JumpRuleArg::Forward => JumpRule::Forward,
            };
            solve_command(solve, rule, jump_log, true)
        }
        Command::FlowCheck { common, lo, hi, per_axis, midpoint, continuity, report } => {
            let mut checks = vec![Check::Identity, Check::Composition, Check::Jacobian, Check::Inverse, Check::Determinant];
            if continuity {
                checks.push(Check::Continuity);
            }
            let mut cfg = experiment_from(&common, "flow-check", checks)?;
            let domain = WorkingBox::new(lo, hi)?;
            cfg.anchors = Some(AnchorConfig { domain, per_axis, midpoint });
            let out = run_experiment(&cfg, Path::new(""))?;
            warn_all(&out.report);
            print_checks(&out.report, style);
            if let Some(path) = &report {
                write_atomic(path, out.report.to_json().as_bytes())?;
            }
            Ok(if out.report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Command::Probe { driver } => probe_command(driver),
        Command::Run { config, output_dir, seed, allow_hypothesis_violation } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            cfg.allow_hypothesis_violation |= allow_hypothesis_violation;
            let base = config.parent().unwrap_or(Path::new("")).to_path_buf();
            let out = run_experiment(&cfg, &base)?;
            warn_all(&out.report);
            let dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let report = out.write(&dir)?;
            print_checks(&out.report, style);
            eprintln!("report: {}", report.display());
            Ok(if out.report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Command::Fields => {
            for e in REGISTRY {
                let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<11} {}  [{}]", e.name, e.summary, params.join(", "));
            }
            Ok(EXIT_PASS)
        }
    }
}

fn probe_command(driver: ProbeDriver) -> CliResult<i32> {
    let mut csv = String::from("run,level,value,plateau,diverges\n");
    let mut push = |run: u64, t: &youngflow_core::drivers::Trend| {
        for (l, v) in t.levels.iter().zip(&t.values) {
            csv.push_str(&format!("{run},{},{},{},{}\n", fmt_f64(*l), fmt_f64(*v), t.plateau, t.diverges));
        }
        (t.plateau, t.diverges)
    };
    let (mut plateaus, mut divergent) = (0, 0);
    let (output, runs) = match driver {
        ProbeDriver::Fbm { hurst, p, refinements, runs, seed, output } => {
            if !(1..=13).contains(&refinements) {
                return Err(CliError::Config("refinements must lie in 1..=13".into()));
            }
            let sampler = FbmSampler::new(hurst, 1usize << refinements, 1.0)?;
            for run in 0..runs {
                let (pl, dv) = push(run, &dyadic_trend(&sampler.sample(seed, run)?, p, TrendRule::FBM)?);
                plateaus += pl as u64;
                divergent += dv as u64;
            }
            (output, runs)
        }
        ProbeDriver::Stable { alpha, c, p, levels, horizon, runs, seed, output } => {
            for run in 0..runs {
                let spec = LevySpec { stream: run, ..LevySpec::stable(alpha, c, levels[0], seed) };
                let (pl, dv) = push(run, &levy_variation_probe(&spec, p, horizon, &levels)?);
                plateaus += pl as u64;
                divergent += dv as u64;
            }
            (output, runs)
        }
    };
    write_or_print(output.as_deref(), &csv)?;
    eprintln!("{plateaus}/{runs} plateau, {divergent}/{runs} diverge");
    Ok(EXIT_PASS)
}
