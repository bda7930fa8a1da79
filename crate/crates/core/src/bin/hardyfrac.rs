use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hardyfrac::fode::{blowup_time, FodeProblem};
use hardyfrac::harness::output::{summary_json, table_csv, trajectory_csv};
use hardyfrac::harness::{self, Artifacts, ExperimentConfig, ExperimentKind, HardyCriteria};
use hardyfrac::radial::RadialGrid;
use hardyfrac::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hardyfrac",
    version,
    about = "Time-fractional p-Laplacian blow-up experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set pde.mu_ratio=2`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root (default: $HARDYFRAC_OUT or ./hardyfrac-out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock time in the manifest
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Clone, Default)]
struct FodeArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    u0: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct PdeArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// mu / Lambda(n, p)
    #[arg(long)]
    mu_ratio: Option<f64>,
    /// W_N level (`inf` for the untruncated weight)
    #[arg(long)]
    truncation: Option<f64>,
    /// Radial cells
    #[arg(long)]
    m: Option<usize>,
    /// Time steps
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    grading: Option<f64>,
    /// Multiple of the unit-mass bump
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate D^a u = u^q and check the closed-form lower bound
    FodeSolve {
        #[command(flatten)]
        fode: FodeArgs,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        grading: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Case, delta and closed-form blow-up time of D^a u = u^q
    FodeBlowupTime {
        #[command(flatten)]
        fode: FodeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded scalar comparison campaign
    FodeCompare {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the truncated radial problem
    PdeSolve {
        #[command(flatten)]
        pde: PdeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded ordered pairs of truncated radial runs
    PdeCompare {
        #[command(flatten)]
        pde: PdeArgs,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// First weighted eigenvalue for each truncation level
    Eigen {
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated levels, `inf` allowed
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Bounded vs blow-up classification across mu / Lambda
    Sweep {
        #[command(flatten)]
        pde: PdeArgs,
        #[arg(long, value_delimiter = ',')]
        mu_ratios: Option<Vec<f64>>,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence of u_N as the truncation level grows
    Truncation {
        #[command(flatten)]
        pde: PdeArgs,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run below the threshold and check the a priori bounds
    VerifyApriori {
        #[command(flatten)]
        pde: PdeArgs,
        /// Multiplier on A_1, A_2
        #[arg(long)]
        slack: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Hardy inequality on seeded random profiles
    VerifyHardy {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Discrete fundamental identity for u = sin t
    IdentityCheck {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
}

struct Overrides(Vec<String>);

impl Overrides {
    fn put<T: ToString>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.push(format!("{key}={}", v.to_string()));
        }
    }

    fn float(&mut self, key: &str, v: Option<f64>) {
        self.put(key, v.map(toml_float));
    }

    fn floats(&mut self, key: &str, v: Option<Vec<f64>>) {
        self.put(
            key,
            v.map(|xs| format!("[{}]", xs.into_iter().map(toml_float).collect::<Vec<_>>().join(", "))),
        );
    }

    fn fode(&mut self, a: &FodeArgs) {
        self.float("fode.alpha", a.alpha);
        self.float("fode.q", a.q);
        self.float("fode.u0", a.u0);
    }

    fn pde(&mut self, a: &PdeArgs) {
        self.float("pde.alpha", a.alpha);
        self.float("pde.mu_ratio", a.mu_ratio);
        self.float("pde.truncation", a.truncation);
        self.put("pde.m", a.m);
        self.put("pde.steps", a.steps);
        self.float("pde.horizon", a.horizon);
        self.float("pde.grading", a.grading);
        self.float("pde.amplitude", a.amplitude);
    }
}

fn toml_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter { .. } | Error::Config(_) | Error::Regime(_) | Error::Shape { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn load(common: &Common, kind: ExperimentKind, mut flags: Overrides) -> Result<ExperimentConfig, Failure> {
    let base = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig {
            kind,
            ..ExperimentConfig::default()
        },
    };
    flags.put("seed", common.seed);
    // file, then --set, then typed flags
    let mut pairs = common.set.clone();
    pairs.extend(flags.0);
    let mut config = base.with_overrides(&pairs)?;
    if let Some(out) = &common.out {
        config.output_dir = Some(out.clone());
    }
    config.timing |= common.timing;
    config.validate()?;
    Ok(config)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    summary_json(value).map_err(Failure::from)
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    let started = Instant::now();
    let (name, config, artifacts) = match command {
        Command::FodeSolve {
            fode,
            steps,
            horizon,
            grading,
            common,
        } => {
            let mut o = Overrides(Vec::new());
            o.fode(&fode);
            o.put("fode.steps", steps);
            o.float("fode.horizon", horizon);
            o.float("fode.grading", grading);
            let config = load(&common, ExperimentKind::Fode, o)?;
            let run = harness::run_fode(&config)?;
            let mut a = Artifacts::new();
            let rows = run
                .trajectory
                .times()
                .iter()
                .zip(run.trajectory.values())
                .enumerate()
                .map(|(k, (t, u))| vec![k as f64, *t, *u]);
            a.add("trajectory.csv", table_csv(&["step", "time", "u"], rows)?);
            a.add("summary.json", json(&run)?);
            a.verdict("blowup_detected_before_bound", run.detected_before_bound);
            a.verdict("lower_bound", run.lower_bound.passed);
            ("fode-solve", config, a)
        }
        Command::FodeBlowupTime { fode, common } => {
            let mut o = Overrides(Vec::new());
            o.fode(&fode);
            let config = load(&common, ExperimentKind::Fode, o)?;
            let f = &config.fode;
            let est = blowup_time(&FodeProblem::new(f.alpha, f.q, f.u0)?);
            let mut a = Artifacts::new();
            a.add("summary.json", json(&est)?);
            ("fode-blowup-time", config, a)
        }
        Command::FodeCompare {
            alpha,
            pairs,
            tol,
            common,
        } => {
            let mut o = Overrides(Vec::new());
            o.float("fode.alpha", alpha);
            o.put("fode.pairs", pairs);
            let config = load(&common, ExperimentKind::Fode, o)?;
            let r = harness::run_scalar_comparison(&config, tol)?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&r)?);
            a.verdict("comparison", r.passed);
            ("fode-compare", config, a)
        }
        Command::PdeSolve { pde, common } => {
            let mut o = Overrides(Vec::new());
            o.pde(&pde);
            let config = load(&common, ExperimentKind::Pde, o)?;
            let run = harness::run_pde(&config)?;
            let mut a = Artifacts::new();
            a.add("trajectory.csv", trajectory_csv(&run.report.records)?);
            a.add("summary.json", json(&run)?);
            if let Some(c) = &run.certificate {
                a.verdict("subsolution_certificate", c.passed);
            }
            ("pde-solve", config, a)
        }
        Command::PdeCompare {
            pde,
            pairs,
            tol,
            common,
        } => {
            let mut o = Overrides(Vec::new());
            o.pde(&pde);
            o.put("pde.pairs", pairs);
            let config = load(&common, ExperimentKind::Pde, o)?;
            let r = harness::run_pde_comparison(&config, tol)?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&r)?);
            a.verdict("comparison", r.passed);
            ("pde-compare", config, a)
        }
        Command::Eigen { m, levels, common } => {
            let mut o = Overrides(Vec::new());
            o.put("pde.m", m);
            o.floats("truncation.levels", levels);
            let config = load(&common, ExperimentKind::Eigen, o)?;
            let study = harness::run_eigen(&config)?;
            let grid = config.radial_grid()?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&study)?);
            a.add("profiles.csv", profiles_csv(&grid, &study)?);
            a.verdict("nonincreasing", study.nonincreasing);
            a.verdict("above_hardy", study.above_hardy);
            a.verdict("gap_shrinking", study.gap_shrinking);
            ("eigen", config, a)
        }
        Command::Sweep {
            pde,
            mu_ratios,
            workers,
            common,
        } => {
            let mut o = Overrides(Vec::new());
            o.pde(&pde);
            o.floats("sweep.mu_ratios", mu_ratios);
            o.put("sweep.workers", workers);
            let config = load(&common, ExperimentKind::Sweep, o)?;
            let report = harness::run_threshold_sweep(&config)?;
            let mut a = Artifacts::new();
            for cell in &report.cells {
                if let Some(run) = &cell.run {
                    a.add(
                        format!("trajectory_mu{}.csv", cell.mu_ratio),
                        trajectory_csv(&run.report.records)?,
                    );
                }
            }
            a.add("summary.json", json(&report)?);
            a.verdict("dichotomy", report.all_agree);
            ("sweep", config, a)
        }
        Command::Truncation { pde, levels, common } => {
            let mut o = Overrides(Vec::new());
            o.pde(&pde);
            o.floats("truncation.levels", levels);
            let config = load(&common, ExperimentKind::Truncation, o)?;
            let report = harness::run_truncation_study(&config)?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&report)?);
            a.verdict("distances_decreasing", report.distances_decreasing_beyond_minimum);
            a.verdict("monotone_in_level", report.monotone);
            ("truncation", config, a)
        }
        Command::VerifyApriori { pde, slack, common } => {
            let mut o = Overrides(Vec::new());
            o.pde(&pde);
            o.float("verify.apriori_slack", slack);
            let config = load(&common, ExperimentKind::Verify, o)?;
            if !(config.pde.mu_ratio < 1.0) {
                return Err(Failure::Usage(format!(
                    "verify-apriori needs mu < Lambda, got mu / Lambda = {}",
                    config.pde.mu_ratio
                )));
            }
            let run = harness::run_pde(&config)?;
            let verdict = run
                .apriori
                .clone()
                .expect("subcritical run carries the a priori verdict");
            let mut a = Artifacts::new();
            a.add("trajectory.csv", trajectory_csv(&run.report.records)?);
            a.add("summary.json", json(&run)?);
            a.verdict("apriori", verdict.passed);
            ("verify-apriori", config, a)
        }
        Command::VerifyHardy { trials, m, common } => {
            let mut o = Overrides(Vec::new());
            o.put("verify.trials", trials);
            o.put("verify.hardy_m", m);
            let config = load(&common, ExperimentKind::Verify, o)?;
            let spec = config.spec(0.0)?;
            let grid = RadialGrid::new(config.verify.hardy_m, &config.domain()?)?;
            let criteria = HardyCriteria {
                slack: config.verify.hardy_slack,
                extremal_factor: config.verify.extremal_factor,
            };
            let v = harness::verify_hardy(&spec, &grid, config.verify.trials, config.seed, &criteria)?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&v)?);
            a.verdict("random_profiles", v.random_passed);
            a.verdict("near_extremal", v.extremal_passed);
            ("verify-hardy", config, a)
        }
        Command::IdentityCheck { alpha, steps, common } => {
            let mut o = Overrides(Vec::new());
            o.float("verify.identity_alpha", alpha);
            o.put(
                "verify.identity_steps",
                steps.map(|s| format!("[{}]", s.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "))),
            );
            let config = load(&common, ExperimentKind::Verify, o)?;
            let v = &config.verify;
            let r = harness::identity_check(v.identity_alpha, &v.identity_steps, v.identity_min_order)?;
            let mut a = Artifacts::new();
            a.add("summary.json", json(&r)?);
            a.verdict("identity_order", r.passed);
            ("identity-check", config, a)
        }
    };
    let passed = artifacts.all_passed();
    let summary = artifacts_summary(&artifacts);
    let dir = artifacts.commit(
        &config.output_root(),
        name,
        &config,
        Some(started.elapsed().as_secs_f64()),
    )?;
    println!("{summary}");
    eprintln!("outputs written to {}", dir.display());
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERDICT)
    })
}

fn artifacts_summary(a: &Artifacts) -> String {
    a.file("summary.json")
        .map(|b| String::from_utf8_lossy(b).trim_end().to_string())
        .unwrap_or_default()
}

fn profiles_csv(grid: &RadialGrid, study: &harness::EigenStudy) -> hardyfrac::Result<Vec<u8>> {
    let header: Vec<String> = std::iter::once("r".to_string())
        .chain(study.entries.iter().map(|e| format!("level_{}", e.level)))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..grid.len()).map(|j| {
        std::iter::once(grid.nodes()[j])
            .chain(study.profiles.iter().map(|p| p[j]))
            .collect()
    });
    table_csv(&header, rows)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
