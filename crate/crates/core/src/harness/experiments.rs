//! Experiments behind the CLI subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{unit_bump, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fode::{
    blowup_time, comparison_check, l1_solve, lower_bound_check, volterra_solve, BlowupEstimate, FnRhs, FodeProblem,
    LowerBoundReport, Trajectory,
};
use crate::fracops::{fundamental_identity_residual, FracParams, TimeGrid};
use crate::potential::{apriori_constants, AprioriConstants, PotentialSpec};
use crate::radial::{
    auto_eps_scale, blowup_detect, eigen_first, pde_comparison_check, positive_profile_x, rayleigh_quotient,
    separable_subsolution, solve, BlowupVerdict, PdeComparisonReport, PdeProblem, RadialGrid, ResidualScan, RunReport,
};

/// Tolerance for `T X <= u_N`.
pub const SUBSOLUTION_ORDER_TOL: f64 = 1e-6;
/// Tolerance on the relative residual of `T X`.
pub const SUBSOLUTION_RESIDUAL_TOL: f64 = 1e-6;

/// Discrete problem for the configured domain with `u0 = amplitude * bump`.
pub fn pde_problem(config: &ExperimentConfig, mu_ratio: f64, amplitude: f64, truncation: f64) -> Result<PdeProblem> {
    let spec = config.spec(mu_ratio)?;
    let grid = config.radial_grid()?;
    let (n, radius) = (config.domain.n, config.domain.radius);
    let u0 = grid.sample(|r| amplitude * unit_bump(r, n, radius));
    let problem = PdeProblem::new(spec, config.pde.alpha, truncation, grid, config.pde_time_grid()?, u0)?;
    Ok(match config.pde.sigma {
        Some(s) => problem.with_sigma(s),
        None => problem,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FodeRun {
    pub estimate: BlowupEstimate,
    pub horizon: f64,
    pub steps: usize,
    pub detected_time: Option<f64>,
    pub detected_before_bound: bool,
    pub lower_bound: LowerBoundReport,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Volterra run of the configured scalar problem with the closed-form checks.
pub fn run_fode(config: &ExperimentConfig) -> Result<FodeRun> {
    let f = &config.fode;
    let problem = FodeProblem::new(f.alpha, f.q, f.u0)?;
    let estimate = blowup_time(&problem);
    let horizon = f.horizon.unwrap_or(1.05 * estimate.t_m);
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!(
            "horizon {horizon:e} is not usable; set fode.horizon explicitly"
        )));
    }
    let grid = TimeGrid::graded(horizon, f.steps, f.grading)?;
    let trajectory = volterra_solve(&problem, &grid, f.threshold)?;
    let lower_bound = lower_bound_check(&trajectory, &estimate, &problem, 1e-6);
    let detected_time = trajectory.blowup_time();
    Ok(FodeRun {
        detected_before_bound: detected_time.is_some_and(|t| t <= 1.05 * estimate.t_m),
        estimate,
        horizon,
        steps: f.steps,
        detected_time,
        lower_bound,
        trajectory,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarComparisonCampaign {
    pub pairs: usize,
    pub precondition_failures: usize,
    pub violations: usize,
    pub max_excess: f64,
    pub passed: bool,
}

/// Seeded pairs `D^a u = f - s1`, `D^a v = f + s2` with `u(0) <= v(0)` and the
/// bounded-slope right-hand side `f = a sin u + b u + c cos t`. Exact L1
/// solutions of the shifted problems are sub- and supersolutions of `f`.
pub fn run_scalar_comparison(config: &ExperimentConfig, tol: f64) -> Result<ScalarComparisonCampaign> {
    let params = FracParams::new(config.fode.alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let grid = TimeGrid::uniform(2.0, 400)?;
    let mut out = ScalarComparisonCampaign {
        pairs: config.fode.pairs,
        precondition_failures: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        passed: true,
    };
    for _ in 0..config.fode.pairs {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let c: f64 = rng.gen_range(-1.0..1.0);
        let s1: f64 = rng.gen_range(0.0..0.5);
        let s2: f64 = rng.gen_range(0.0..0.5);
        let lo: f64 = rng.gen_range(-2.0..2.0);
        let hi = lo + rng.gen_range(0.0..1.0);
        let lip = a.abs() + b.abs();
        let f = move |t: f64, u: f64| a * u.sin() + b * u + c * t.cos();
        let df = move |_: f64, u: f64| a * u.cos() + b;
        let rhs = FnRhs::new(f, df, lip);
        let sub = l1_solve(&FnRhs::new(move |t, u| f(t, u) - s1, df, lip), lo, &grid, &params)?;
        let sup = l1_solve(&FnRhs::new(move |t, u| f(t, u) + s2, df, lip), hi, &grid, &params)?;
        let r = comparison_check(&rhs, &sub, &sup, &params, tol)?;
        if r.precondition.is_some() {
            out.precondition_failures += 1;
        } else if r.first_violation.is_some() {
            out.violations += 1;
        }
        out.max_excess = out.max_excess.max(r.max_excess);
    }
    out.passed = out.precondition_failures == 0 && out.violations == 0;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub alpha: f64,
    pub steps: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `log2` ratios of consecutive residuals (steps are expected to double).
    pub orders: Vec<f64>,
    pub passed: bool,
}

/// Discrete fundamental identity for `u = sin t` on `[0, 1]`.
pub fn identity_check(alpha: f64, steps: &[usize], min_order: f64) -> Result<IdentityReport> {
    let params = FracParams::new(alpha)?;
    let mut residuals = Vec::with_capacity(steps.len());
    for &k in steps {
        let grid = TimeGrid::uniform(1.0, k)?;
        let u: Vec<f64> = grid.nodes().iter().map(|t| t.sin()).collect();
        residuals.push(fundamental_identity_residual(&u, &grid, &params)?);
    }
    let orders: Vec<f64> = residuals
        .windows(2)
        .zip(steps.windows(2))
        .map(|(r, k)| (r[0] / r[1]).ln() / (k[1] as f64 / k[0] as f64).ln())
        .collect();
    let passed = residuals.windows(2).all(|r| r[1] < r[0]) && orders.iter().all(|o| *o >= min_order);
    Ok(IdentityReport {
        alpha,
        steps: steps.to_vec(),
        residuals,
        orders,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriVerdict {
    pub grad_integral: f64,
    pub lp_integral: f64,
    pub a1: f64,
    pub a2: f64,
    /// Achieved `int int |u'|^p / A_1`; zero when both vanish.
    pub grad_ratio: f64,
    pub lp_ratio: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Checks the cumulative integrals of a run against `slack * A_1`, `slack * A_2`.
pub fn verify_apriori(report: &RunReport, constants: &AprioriConstants, slack: f64) -> AprioriVerdict {
    let last = report.records.last();
    let grad = last.map_or(0.0, |r| r.cumulative_grad_p);
    let lp = last.map_or(0.0, |r| r.cumulative_lp_p);
    let ratio = |x: f64, bound: f64| if x == 0.0 { 0.0 } else { x / bound };
    AprioriVerdict {
        grad_integral: grad,
        lp_integral: lp,
        a1: constants.a1,
        a2: constants.a2,
        grad_ratio: ratio(grad, constants.a1),
        lp_ratio: ratio(lp, constants.a2),
        slack,
        passed: grad <= slack * constants.a1 && lp <= slack * constants.a2 && report.divergence.is_none(),
    }
}

/// A priori constants for a problem, read off its initial data and horizon.
pub fn apriori_for(problem: &PdeProblem) -> Result<AprioriConstants> {
    let u0_sq: Vec<f64> = problem.u0.iter().map(|x| x * x).collect();
    apriori_constants(
        &problem.spec,
        problem.alpha,
        problem.time.horizon(),
        problem.grid.integrate(&u0_sq),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionCertificate {
    pub lambda_n: f64,
    pub eps_scale: f64,
    /// Closed-form blow-up time of `T`: an upper bound for the PDE blow-up time.
    pub t_max: f64,
    /// Step at which the discrete `T` left the divergence threshold.
    pub t_discrete_blowup: Option<f64>,
    pub residual: ResidualScan,
    pub ordering: PdeComparisonReport,
    pub passed: bool,
}

/// Builds `T X` for a supercritical problem and checks it against a run.
pub fn certify_blowup(problem: &PdeProblem, report: &RunReport) -> Result<SubsolutionCertificate> {
    let eigen = eigen_first(&problem.spec, problem.truncation, &problem.grid)?;
    let x = positive_profile_x(&problem.spec, problem.truncation, &problem.grid, &eigen, problem.sigma)?;
    let eps = auto_eps_scale(&problem.u0, &x)?;
    let sub = separable_subsolution(problem, &x, eps)?;
    let steps = report.states.len().saturating_sub(1);
    let residual = sub.residual_scan(problem, Some(steps), SUBSOLUTION_RESIDUAL_TOL)?;
    let ordering = pde_comparison_check(&sub.states(), &report.states, problem, SUBSOLUTION_ORDER_TOL)?;
    Ok(SubsolutionCertificate {
        lambda_n: eigen.lambda,
        eps_scale: eps,
        t_max: sub.estimate.t_m,
        t_discrete_blowup: sub.time_factor.blowup_time(),
        passed: residual.passed && ordering.holds(),
        residual,
        ordering,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeRun {
    pub mu_ratio: f64,
    pub truncation: f64,
    pub lambda_hardy: f64,
    pub verdict: BlowupVerdict,
    pub final_time: f64,
    pub newton_iterations: usize,
    pub divergence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apriori: Option<AprioriVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SubsolutionCertificate>,
    /// Why no certificate could be built above the threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_error: Option<String>,
    #[serde(skip)]
    pub report: RunReport,
}

/// One PDE run with the regime-appropriate checks: a priori bounds below the
/// Hardy constant, the separable subsolution above it.
pub fn run_pde_cell(config: &ExperimentConfig, mu_ratio: f64, amplitude: f64) -> Result<PdeRun> {
    let problem = pde_problem(config, mu_ratio, amplitude, config.pde.truncation)?;
    let report = solve(&problem)?;
    let verdict = blowup_detect(&report, &config.thresholds(), problem.spec.p);
    let apriori = if mu_ratio < 1.0 {
        Some(verify_apriori(
            &report,
            &apriori_for(&problem)?,
            config.verify.apriori_slack,
        ))
    } else {
        None
    };
    let (certificate, certificate_error) = if mu_ratio > 1.0 {
        match certify_blowup(&problem, &report) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    Ok(PdeRun {
        mu_ratio,
        truncation: problem.truncation,
        lambda_hardy: problem.spec.lambda(),
        final_time: report.final_time(),
        newton_iterations: report.newton_iterations,
        divergence: report
            .divergence
            .as_ref()
            .map(|d| format!("step {} (t = {:e}): {}", d.step, d.time, d.reason)),
        verdict,
        apriori,
        certificate,
        certificate_error,
        report,
    })
}

pub fn run_pde(config: &ExperimentConfig) -> Result<PdeRun> {
    run_pde_cell(config, config.pde.mu_ratio, config.pde.amplitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Bounded,
    BlowUp,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub mu_ratio: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    /// What the dichotomy predicts; `None` at `mu = Lambda`.
    pub expected: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<PdeRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepCell {
    pub fn agrees(&self) -> bool {
        self.error.is_none() && (self.expected.is_none() || self.expected == self.classification)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub lambda_hardy: f64,
    pub cells: Vec<SweepCell>,
    pub all_agree: bool,
}

/// Runs every `mu / Lambda` cell on at most `sweep.workers` threads; cells are
/// reported sorted by their ratio. Failed cells carry their error.
pub fn run_threshold_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    let lambda_hardy = config.spec(0.0)?.lambda();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.sweep.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut ratios = config.sweep.mu_ratios.clone();
    ratios.sort_by(f64::total_cmp);
    let mut cells: Vec<SweepCell> = pool.install(|| {
        ratios
            .par_iter()
            .map(|&ratio| {
                let mut cell_config = config.clone();
                if ratio > 1.0 {
                    cell_config.pde.amplitude = config.sweep.supercritical_amplitude;
                    cell_config.pde.grading = config.sweep.supercritical_grading;
                }
                let amplitude = cell_config.pde.amplitude;
                let expected = match ratio.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Less) => Some(Classification::Bounded),
                    Some(std::cmp::Ordering::Greater) => Some(Classification::BlowUp),
                    _ => None,
                };
                match run_pde_cell(&cell_config, ratio, amplitude) {
                    Ok(run) => SweepCell {
                        mu_ratio: ratio,
                        amplitude,
                        classification: Some(if run.verdict.blown_up {
                            Classification::BlowUp
                        } else {
                            Classification::Bounded
                        }),
                        expected,
                        run: Some(run),
                        error: None,
                    },
                    Err(e) => SweepCell {
                        mu_ratio: ratio,
                        amplitude,
                        classification: None,
                        expected,
                        run: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    cells.sort_by(|a, b| a.mu_ratio.total_cmp(&b.mu_ratio));
    Ok(SweepReport {
        lambda_hardy,
        all_agree: cells.iter().all(SweepCell::agrees),
        cells,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationRun {
    pub level: f64,
    pub final_time: f64,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationPair {
    pub from: f64,
    pub to: f64,
    /// `||u_N - u_N'||` in discrete `L^2(Q)`.
    pub l2_distance: f64,
    /// Same in `L^p(Q)`.
    pub lp_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub levels: Vec<f64>,
    pub runs: Vec<TruncationRun>,
    pub pairs: Vec<TruncationPair>,
    /// `min W`: below it `W_N = N` is constant and the potential does not yet
    /// see the singular layers.
    pub weight_minimum: f64,
    /// Consecutive distances decrease over all pairs.
    pub distances_decreasing: bool,
    /// Same over the pairs whose lower level exceeds `min W`.
    pub distances_decreasing_beyond_minimum: bool,
    /// `u_N <= u_N'` pointwise for consecutive levels, up to `1e-8`.
    pub monotone: bool,
}

/// Space-time norm `(int_0^T int |d|^s r^{n-1} dr dt)^{1/s}` by the trapezoid rule in time.
fn space_time_norm(a: &[Vec<f64>], b: &[Vec<f64>], grid: &RadialGrid, time: &TimeGrid, s: f64) -> f64 {
    let t = time.nodes();
    let slice = |k: usize| {
        grid.integrate(
            &a[k]
                .iter()
                .zip(&b[k])
                .map(|(x, y)| (x - y).abs().powf(s))
                .collect::<Vec<_>>(),
        )
    };
    let n = a.len().min(b.len());
    let mut total = 0.0;
    for k in 1..n {
        total += 0.5 * (t[k] - t[k - 1]) * (slice(k - 1) + slice(k));
    }
    total.powf(1.0 / s)
}

/// Solves for each truncation level (in order) and compares consecutive levels.
pub fn run_truncation_study(config: &ExperimentConfig) -> Result<TruncationReport> {
    if !(config.pde.mu_ratio < 1.0) {
        return Err(Error::Config(format!(
            "truncation study needs mu < Lambda, got mu / Lambda = {}",
            config.pde.mu_ratio
        )));
    }
    let levels = config.truncation.levels.clone();
    let results: Vec<(f64, Result<RunReport>, Option<PdeProblem>)> = levels
        .par_iter()
        .map(
            |&level| match pde_problem(config, config.pde.mu_ratio, config.pde.amplitude, level) {
                Ok(pr) => (level, solve(&pr), Some(pr)),
                Err(e) => (level, Err(e), None),
            },
        )
        .collect();
    let mut runs = Vec::new();
    for (level, rep, _) in &results {
        runs.push(match rep {
            Ok(r) => TruncationRun {
                level: *level,
                final_time: r.final_time(),
                diverged: r.divergence.is_some(),
                error: None,
            },
            Err(e) => TruncationRun {
                level: *level,
                final_time: 0.0,
                diverged: false,
                error: Some(e.to_string()),
            },
        });
    }
    let mut pairs = Vec::new();
    let mut monotone = true;
    for w in results.windows(2) {
        let ((l0, Ok(r0), Some(pr)), (l1, Ok(r1), _)) = (&w[0], &w[1]) else {
            continue;
        };
        pairs.push(TruncationPair {
            from: *l0,
            to: *l1,
            l2_distance: space_time_norm(&r0.states, &r1.states, &pr.grid, &pr.time, 2.0),
            lp_distance: space_time_norm(&r0.states, &r1.states, &pr.grid, &pr.time, pr.spec.p),
        });
        if *l0 <= *l1 {
            monotone &= r0
                .states
                .iter()
                .zip(&r1.states)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x <= *y + 1e-8));
        }
    }
    let weight_minimum = crate::potential::omega0(&config.spec(config.pde.mu_ratio)?);
    let decreasing = |ps: &[TruncationPair]| ps.windows(2).all(|p| p[1].l2_distance < p[0].l2_distance);
    let tail: Vec<TruncationPair> = pairs.iter().filter(|p| p.from > weight_minimum).cloned().collect();
    Ok(TruncationReport {
        distances_decreasing: decreasing(&pairs),
        distances_decreasing_beyond_minimum: decreasing(&tail),
        weight_minimum,
        levels,
        runs,
        pairs,
        monotone,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenEntry {
    pub level: f64,
    pub lambda: f64,
    pub ratio_to_hardy: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenStudy {
    pub lambda_hardy: f64,
    pub m: usize,
    pub entries: Vec<EigenEntry>,
    /// `lambda_N` nonincreasing within `1e-9` relative.
    pub nonincreasing: bool,
    pub above_hardy: bool,
    pub gap_shrinking: bool,
    #[serde(skip)]
    pub profiles: Vec<Vec<f64>>,
}

/// `lambda_N` for every configured truncation level on the `pde.m` grid.
pub fn run_eigen(config: &ExperimentConfig) -> Result<EigenStudy> {
    let spec = config.spec(0.0)?;
    let grid = config.radial_grid()?;
    let lambda_hardy = spec.lambda();
    let results: Vec<Result<_>> = config
        .truncation
        .levels
        .par_iter()
        .map(|&level| eigen_first(&spec, level, &grid).map(|e| (level, e)))
        .collect();
    let mut entries = Vec::new();
    let mut profiles = Vec::new();
    for r in results {
        let (level, e) = r?;
        entries.push(EigenEntry {
            level,
            lambda: e.lambda,
            ratio_to_hardy: e.lambda / lambda_hardy,
            residual: e.residual,
            iterations: e.iterations,
        });
        profiles.push(e.profile);
    }
    Ok(EigenStudy {
        lambda_hardy,
        m: grid.len(),
        nonincreasing: entries.windows(2).all(|w| w[1].lambda <= w[0].lambda * (1.0 + 1e-9)),
        above_hardy: entries.iter().all(|e| e.lambda >= 0.99 * lambda_hardy),
        gap_shrinking: entries
            .windows(2)
            .all(|w| w[1].lambda - lambda_hardy < w[0].lambda - lambda_hardy),
        entries,
        profiles,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeComparisonCampaign {
    pub pairs: usize,
    pub precondition_failures: usize,
    pub violations: usize,
    /// Largest `sub - sup` over all pairs and checked steps.
    pub max_excess: f64,
    pub reports: Vec<PdeComparisonReport>,
    pub passed: bool,
}

/// Seeded ordered pairs `u0 <= v0` built from [`random_profile`], each solved
/// on the configured truncated problem and checked with
/// [`pde_comparison_check`].
pub fn run_pde_comparison(config: &ExperimentConfig, tol: f64) -> Result<PdeComparisonCampaign> {
    let base = pde_problem(config, config.pde.mu_ratio, 0.0, config.pde.truncation)?;
    if !base.truncation.is_finite() {
        return Err(Error::Config(
            "the comparison campaign needs a finite pde.truncation".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..config.pde.pairs)
        .map(|_| {
            let scale = config.pde.amplitude * rng.gen_range(0.2..1.0);
            let lo: Vec<f64> = random_profile(&base.grid, &mut rng).iter().map(|x| scale * x).collect();
            let gap = rng.gen_range(0.0..0.5) * config.pde.amplitude;
            let hi = random_profile(&base.grid, &mut rng)
                .iter()
                .zip(&lo)
                .map(|(d, l)| l + gap * d)
                .collect();
            (lo, hi)
        })
        .collect();
    let reports = data
        .into_par_iter()
        .map(|(lo, hi)| {
            let sub = solve(&base.with_initial(lo)?)?;
            let sup = solve(&base.with_initial(hi)?)?;
            pde_comparison_check(&sub.states, &sup.states, &base, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let precondition_failures = reports.iter().filter(|r| r.precondition.is_some()).count();
    let violations = reports
        .iter()
        .filter(|r| r.precondition.is_none() && r.first_violation.is_some())
        .count();
    Ok(PdeComparisonCampaign {
        pairs: reports.len(),
        precondition_failures,
        violations,
        max_excess: reports.iter().map(|r| r.max_excess).fold(f64::NEG_INFINITY, f64::max),
        passed: precondition_failures == 0 && violations == 0,
        reports,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyVerdict {
    pub trials: usize,
    pub lambda_hardy: f64,
    pub min_ratio: f64,
    pub min_ratio_over_lambda: f64,
    /// Ratio of the discrete minimizer of the untruncated quotient.
    pub extremal_ratio_over_lambda: f64,
    pub random_passed: bool,
    pub extremal_passed: bool,
}

impl HardyVerdict {
    pub fn passed(&self) -> bool {
        self.random_passed && self.extremal_passed
    }
}

/// Thresholds for [`verify_hardy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyCriteria {
    /// Random profiles must reach `(1 - slack) Lambda`.
    pub slack: f64,
    /// The near-extremal profile must stay below `extremal_factor * Lambda`.
    pub extremal_factor: f64,
}

impl Default for HardyCriteria {
    fn default() -> Self {
        Self {
            slack: 0.01,
            extremal_factor: 1.05,
        }
    }
}

/// Sum of 3 to 6 Gaussian bumps times `1 - (r/R)^2`.
pub fn random_profile(grid: &RadialGrid, rng: &mut impl Rng) -> Vec<f64> {
    let big_r = grid.radius();
    let count = rng.gen_range(3..=6);
    let bumps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.0..big_r),
                rng.gen_range(0.05 * big_r..0.5 * big_r),
            )
        })
        .collect();
    grid.sample(|r| {
        let s: f64 = bumps.iter().map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum();
        s * (1.0 - (r / big_r).powi(2))
    })
}

/// Rayleigh ratios `int |u'|^p / int W |u|^p` of seeded random profiles and of
/// the discrete extremal (untruncated first eigenfunction).
pub fn verify_hardy(
    spec: &PotentialSpec,
    grid: &RadialGrid,
    trials: usize,
    seed: u64,
    criteria: &HardyCriteria,
) -> Result<HardyVerdict> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let w = grid.potential_values(spec, f64::INFINITY)?;
    let lambda_hardy = spec.lambda();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..trials {
        let u = random_profile(grid, &mut rng);
        min_ratio = min_ratio.min(rayleigh_quotient(&u, grid, &w, spec.p));
    }
    let extremal = eigen_first(spec, f64::INFINITY, grid)?;
    let extremal_ratio = rayleigh_quotient(&extremal.profile, grid, &w, spec.p);
    Ok(HardyVerdict {
        trials,
        lambda_hardy,
        min_ratio,
        min_ratio_over_lambda: min_ratio / lambda_hardy,
        extremal_ratio_over_lambda: extremal_ratio / lambda_hardy,
        random_passed: min_ratio >= (1.0 - criteria.slack) * lambda_hardy,
        extremal_passed: extremal_ratio <= criteria.extremal_factor * lambda_hardy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::default()
            .with_overrides(&["pde.m=40", "pde.steps=40", "pde.horizon=0.2", "pde.truncation=1000.0"])
            .unwrap()
    }

    #[test]
    fn apriori_with_zero_data() {
        let c = small();
        let pr = pde_problem(&c, 0.5, 0.0, 1e3).unwrap();
        let rep = solve(&pr).unwrap();
        let v = verify_apriori(&rep, &apriori_for(&pr).unwrap(), 1.0);
        assert_eq!((v.grad_integral, v.lp_integral, v.a1, v.a2), (0.0, 0.0, 0.0, 0.0));
        assert!(v.passed);
    }

    #[test]
    fn apriori_regime_mismatch() {
        let pr = pde_problem(&small(), 1.5, 1.0, 1e3).unwrap();
        assert!(matches!(apriori_for(&pr), Err(Error::Regime(_))));
    }

    #[test]
    fn comparison_campaign() {
        let c = small()
            .with_overrides(&["pde.pairs=3", "pde.truncation=100.0"])
            .unwrap();
        let r = run_pde_comparison(&c, 1e-8).unwrap();
        assert_eq!(r.pairs, 3);
        assert!(r.passed, "{r:?}");
        let inf = small().with_overrides(&["pde.truncation=inf"]).unwrap();
        assert!(matches!(run_pde_comparison(&inf, 1e-8), Err(Error::Config(_))));
    }

    #[test]
    fn empty_sweep() {
        let c = small().with_overrides(&["sweep.mu_ratios=[]"]).unwrap();
        let r = run_threshold_sweep(&c).unwrap();
        assert!(r.cells.is_empty() && r.all_agree);
    }

    #[test]
    fn sweep_is_sorted_and_classified() {
        let c = small()
            .with_overrides(&["sweep.mu_ratios=[2.0, 0.25, 0.5]", "sweep.workers=2"])
            .unwrap();
        let r = run_threshold_sweep(&c).unwrap();
        let ratios: Vec<f64> = r.cells.iter().map(|c| c.mu_ratio).collect();
        assert_eq!(ratios, vec![0.25, 0.5, 2.0]);
        assert!(
            r.all_agree,
            "{:#?}",
            r.cells
                .iter()
                .map(|c| (&c.classification, &c.error))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_level_truncation_study() {
        let c = small().with_overrides(&["truncation.levels=[100.0]"]).unwrap();
        let r = run_truncation_study(&c).unwrap();
        assert!(r.pairs.is_empty() && r.monotone);
        assert!(run_truncation_study(&c.with_overrides(&["pde.mu_ratio=2.0"]).unwrap()).is_err());
    }

    #[test]
    fn hardy_trials_and_bump() {
        let c = small();
        let spec = c.spec(0.0).unwrap();
        let g = c.radial_grid().unwrap();
        assert!(verify_hardy(&spec, &g, 0, 1, &HardyCriteria::default()).is_err());
        let v = verify_hardy(&spec, &g, 20, 1, &HardyCriteria::default()).unwrap();
        assert!(v.random_passed && v.min_ratio_over_lambda > 1.0);
    }

    #[test]
    fn identity_orders() {
        let r = identity_check(0.5, &[64, 128, 256], 0.8).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.orders.len(), 2);
    }

    #[test]
    fn scalar_campaign() {
        let c = small().with_overrides(&["fode.pairs=5"]).unwrap();
        let r = run_scalar_comparison(&c, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
