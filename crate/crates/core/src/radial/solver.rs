//! Time stepping of `D^alpha u = Delta_p u + mu W_N |u|^{p-2} u` on the ball.
//!
//! Each L1 step is the stationarity condition of
//! `J(u) = sum v (a/2 u^2 - b u) + Phi(u) - (mu/p) sum v W_N |u|^p`
//! (`v` the cell volumes, `Phi` the p-energy), minimized by Newton's method on
//! the tridiagonal Hessian with Armijo backtracking. Where the Hessian is
//! indefinite the potential block is dropped, which keeps a descent direction.

use std::time::Instant;

use serde::Serialize;

use super::grid::RadialGrid;
use super::tridiag::solve_spd;
use crate::error::{Error, Result};
use crate::fracops::{l1_weights, FracParams, L1Weights, TimeGrid};
use crate::potential::PotentialSpec;

/// Newton controls for one implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    /// Relative tolerance on the equation residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Values above this count as divergence.
    pub divergence: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 50,
            divergence: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeProblem {
    pub spec: PotentialSpec,
    pub alpha: f64,
    /// `W_N` level; `f64::INFINITY` evaluates `W` directly at the nodes.
    pub truncation: f64,
    pub grid: RadialGrid,
    pub time: TimeGrid,
    pub u0: Vec<f64>,
    /// Gradient regularization in `(|u'|^2 + sigma^2)^{(p-2)/2}`.
    pub sigma: f64,
    pub control: StepControl,
}

impl PdeProblem {
    pub fn new(
        spec: PotentialSpec,
        alpha: f64,
        truncation: f64,
        grid: RadialGrid,
        time: TimeGrid,
        u0: Vec<f64>,
    ) -> Result<Self> {
        FracParams::new(alpha)?;
        grid.check(&u0)?;
        if !(truncation >= 1.0) {
            return Err(Error::param("truncation", format!("must be >= 1, got {truncation}")));
        }
        if let Some(j) = u0.iter().position(|x| !x.is_finite()) {
            return Err(Error::param("u0", format!("non-finite value at node {j}")));
        }
        let sigma = 1e-8 * grid.radius();
        Ok(Self {
            spec,
            alpha,
            truncation,
            grid,
            time,
            u0,
            sigma,
            control: StepControl::default(),
        })
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Same data with the initial profile replaced.
    pub fn with_initial(&self, u0: Vec<f64>) -> Result<Self> {
        self.grid.check(&u0)?;
        Ok(Self { u0, ..self.clone() })
    }

    /// Residual `D^alpha u - Delta_p u - mu W_N |u|^{p-2} u` at every node of
    /// every step `1..states.len()-1`, with the scheme's own operators.
    pub fn residuals(&self, states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(self.scaled_residuals(states)?.into_iter().map(|(r, _)| r).collect())
    }

    /// As [`residuals`](Self::residuals), paired with the size of the largest
    /// term at each step.
    pub(crate) fn scaled_residuals(&self, states: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, f64)>> {
        for s in states {
            self.grid.check(s)?;
        }
        if states.len() > self.time.nodes().len() {
            return Err(Error::Shape {
                expected: self.time.nodes().len(),
                got: states.len(),
            });
        }
        let disc = Discretization::new(self)?;
        let p = self.spec.p;
        let mut incs: Vec<Vec<f64>> = Vec::with_capacity(states.len());
        let mut out = Vec::with_capacity(states.len().saturating_sub(1));
        for k in 1..states.len() {
            incs.push(states[k].iter().zip(&states[k - 1]).map(|(a, b)| a - b).collect());
            let mut d = vec![0.0; self.grid.len()];
            for (i, inc) in incs.iter().enumerate() {
                let c = disc.weights.coeff(k, i + 1);
                for (dj, x) in d.iter_mut().zip(inc) {
                    *dj += c * x;
                }
            }
            let lap = self.grid.apply_p_laplacian(&states[k], p, self.sigma);
            let mut scale: f64 = 0.0;
            let r = (0..self.grid.len())
                .map(|j| {
                    let u = states[k][j];
                    let pot = self.spec.mu * disc.wn[j] * u.abs().powf(p - 2.0) * u;
                    scale = scale.max(d[j].abs() + lap[j].abs() + pot.abs());
                    d[j] - lap[j] - pot
                })
                .collect();
            out.push((r, scale));
        }
        Ok(out)
    }
}

/// Per-step quantities of a run. Cumulative integrals use the trapezoid rule in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub l2_norm: f64,
    pub w1p_seminorm: f64,
    pub lp_norm: f64,
    /// `mu int W_N |u|^p`
    pub potential_energy: f64,
    /// `int_0^t ||u||_2^2`
    pub cumulative_l2_sq: f64,
    /// `int_0^t int |u'|^p`
    pub cumulative_grad_p: f64,
    /// `int_0^t int |u|^p`
    pub cumulative_lp_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowupCause {
    L2Cumulative,
    W1pCumulative,
    SolverDiverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub records: Vec<StepRecord>,
    /// Set when the step solver failed, which ends the run.
    pub divergence: Option<Divergence>,
    pub newton_iterations: usize,
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time)
    }
}

/// Precomputed operators shared by the steps of one run.
pub(crate) struct Discretization {
    pub(crate) weights: L1Weights,
    pub(crate) wn: Vec<f64>,
}

impl Discretization {
    pub(crate) fn new(problem: &PdeProblem) -> Result<Self> {
        let params = FracParams::new(problem.alpha)?;
        Ok(Self {
            weights: l1_weights(&problem.time, &params)?,
            wn: problem.grid.potential_values(&problem.spec, problem.truncation)?,
        })
    }
}

/// Mutable state of a run: the current node values and all increments.
pub struct PdeState {
    disc: Discretization,
    k: usize,
    current: Vec<f64>,
    increments: Vec<Vec<f64>>,
}

impl PdeState {
    pub fn new(problem: &PdeProblem) -> Result<Self> {
        Ok(Self {
            disc: Discretization::new(problem)?,
            k: 0,
            current: problem.u0.clone(),
            increments: Vec::new(),
        })
    }

    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Converged {
        iterations: usize,
    },
    /// No acceptable root near the previous state; a blow-up precursor.
    Diverged {
        reason: String,
    },
}

/// Advances `state` by one L1 step.
pub fn step(state: &mut PdeState, problem: &PdeProblem) -> Result<StepOutcome> {
    let k = state.k + 1;
    if k > problem.time.steps() {
        return Err(Error::Precondition("time grid exhausted".into()));
    }
    let m = problem.grid.len();
    let w = &state.disc.weights;
    let a = w.diag(k);
    let mut b: Vec<f64> = state.current.iter().map(|u| a * u).collect();
    for (i, inc) in state.increments.iter().enumerate() {
        let c = w.coeff(k, i + 1);
        for (bj, x) in b.iter_mut().zip(inc) {
            *bj -= c * x;
        }
    }
    let solver = StepSolver {
        grid: &problem.grid,
        wn: &state.disc.wn,
        p: problem.spec.p,
        mu: problem.spec.mu,
        sigma: problem.sigma,
        a,
        b: &b,
        control: &problem.control,
    };
    match solver.solve(&state.current) {
        Ok((u, iterations)) => {
            state
                .increments
                .push(u.iter().zip(&state.current).map(|(x, y)| x - y).collect());
            state.current = u;
            state.k = k;
            debug_assert_eq!(state.current.len(), m);
            Ok(StepOutcome::Converged { iterations })
        }
        Err(reason) => Ok(StepOutcome::Diverged { reason }),
    }
}

struct StepSolver<'a> {
    grid: &'a RadialGrid,
    wn: &'a [f64],
    p: f64,
    mu: f64,
    sigma: f64,
    a: f64,
    b: &'a [f64],
    control: &'a StepControl,
}

impl StepSolver<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        let v = self.grid.volumes();
        let mut e = self.grid.p_energy(u, self.p, self.sigma);
        for j in 0..u.len() {
            e += v[j]
                * (0.5 * self.a * u[j] * u[j]
                    - self.b[j] * u[j]
                    - self.mu / self.p * self.wn[j] * u[j].abs().powf(self.p));
        }
        e
    }

    /// Gradient of `J` and the pointwise residual scale.
    fn gradient(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let v = self.grid.volumes();
        let mut g = self.grid.neg_energy_gradient(u, self.p, self.sigma);
        let mut worst: f64 = 0.0;
        for j in 0..u.len() {
            let pot = self.mu * self.wn[j] * u[j].abs().powf(self.p - 2.0) * u[j];
            g[j] = v[j] * (self.a * u[j] - self.b[j] - pot) - g[j];
            worst = worst.max((g[j] / v[j]).abs());
        }
        (g, worst)
    }

    fn solve(&self, start: &[f64]) -> std::result::Result<(Vec<f64>, usize), String> {
        let m = start.len();
        let v = self.grid.volumes();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let mut u = start.to_vec();
        let mut e = self.energy(&u);
        for it in 0..self.control.max_iterations {
            let (g, res) = self.gradient(&u);
            if res <= self.control.tol * scale {
                return Ok((u, it));
            }
            let mut diag: Vec<f64> = v.iter().map(|vj| self.a * vj).collect();
            let mut off = vec![0.0; m - 1];
            self.grid
                .add_energy_hessian(&u, self.p, self.sigma, &mut diag, &mut off);
            let mut full = diag.clone();
            for j in 0..m {
                full[j] -= v[j] * self.mu * (self.p - 1.0) * self.wn[j] * u[j].abs().powf(self.p - 2.0);
            }
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            let dir = solve_spd(&full, &off, &neg)
                .or_else(|| solve_spd(&diag, &off, &neg))
                .ok_or("singular step Hessian")?;
            // residual decrease first: cells near the centre carry tiny volume
            // and are invisible to the energy at rounding level
            let mut accepted = false;
            let mut t = 1.0;
            for _ in 0..30 {
                let trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                let (_, rt) = self.gradient(&trial);
                if rt.is_finite() && rt < res {
                    e = self.energy(&trial);
                    u = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let mut t = 1.0;
                for _ in 0..60 {
                    let trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                    let et = self.energy(&trial);
                    if et.is_finite() && et <= e + 1e-4 * t * slope {
                        u = trial;
                        e = et;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
            if !accepted {
                return Err(format!("line search failed (residual {res:.3e})"));
            }
            let peak = u.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            if !(peak <= self.control.divergence) {
                return Err(format!("iterate exceeded {:.1e}", self.control.divergence));
            }
        }
        let (_, res) = self.gradient(&u);
        if res <= self.control.tol * scale {
            Ok((u, self.control.max_iterations))
        } else {
            Err(format!(
                "no convergence in {} iterations (residual {res:.3e})",
                self.control.max_iterations
            ))
        }
    }
}

fn record(problem: &PdeProblem, wn: &[f64], step: usize, u: &[f64], prev: Option<&StepRecord>) -> StepRecord {
    let g = &problem.grid;
    let p = problem.spec.p;
    let l2_sq: f64 = g.integrate(&u.iter().map(|x| x * x).collect::<Vec<_>>());
    let grad_p = g.gradient_p_integral(u, p);
    let abs_p: Vec<f64> = u.iter().map(|x| x.abs().powf(p)).collect();
    let lp_p = g.integrate(&abs_p);
    let pot = problem.spec.mu * g.integrate(&abs_p.iter().zip(wn).map(|(a, w)| a * w).collect::<Vec<_>>());
    let time = problem.time.nodes()[step];
    let (cl2, cg, clp) = match prev {
        None => (0.0, 0.0, 0.0),
        Some(r) => {
            let dt = time - r.time;
            let half = 0.5 * dt;
            (
                r.cumulative_l2_sq + half * (r.l2_norm.powi(2) + l2_sq),
                r.cumulative_grad_p + half * (r.w1p_seminorm.powf(p) + grad_p),
                r.cumulative_lp_p + half * (r.lp_norm.powf(p) + lp_p),
            )
        }
    };
    StepRecord {
        step,
        time,
        l2_norm: l2_sq.sqrt(),
        w1p_seminorm: grad_p.powf(1.0 / p),
        lp_norm: lp_p.powf(1.0 / p),
        potential_energy: pot,
        cumulative_l2_sq: cl2,
        cumulative_grad_p: cg,
        cumulative_lp_p: clp,
    }
}

/// Runs to the horizon or to the first diverging step.
pub fn solve(problem: &PdeProblem) -> Result<RunReport> {
    let started = Instant::now();
    let mut state = PdeState::new(problem)?;
    let mut records = vec![record(problem, &state.disc.wn, 0, &problem.u0, None)];
    let mut states = vec![problem.u0.clone()];
    let mut divergence = None;
    let mut newton_iterations = 0;
    for k in 1..=problem.time.steps() {
        match step(&mut state, problem)? {
            StepOutcome::Converged { iterations } => {
                newton_iterations += iterations;
                let r = record(problem, &state.disc.wn, k, state.current(), records.last());
                records.push(r);
                states.push(state.current.clone());
            }
            StepOutcome::Diverged { reason } => {
                divergence = Some(Divergence {
                    step: k,
                    time: problem.time.nodes()[k],
                    reason,
                });
                break;
            }
        }
    }
    Ok(RunReport {
        records,
        divergence,
        newton_iterations,
        states,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupThresholds {
    /// Bound on `||u||_{L^2(Q_t)}`.
    pub l2_cumulative: f64,
    /// Bound on `||u||_{L^p(0,t; W^{1,p})}`.
    pub w1p_cumulative: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            l2_cumulative: 1e6,
            w1p_cumulative: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupVerdict {
    pub blown_up: bool,
    pub cause: Option<BlowupCause>,
    pub step: Option<usize>,
    pub time: Option<f64>,
    pub thresholds: BlowupThresholds,
}

/// Earliest step at which a cumulative norm crosses its threshold, or the
/// step at which the solver diverged.
pub fn blowup_detect(report: &RunReport, thresholds: &BlowupThresholds, p: f64) -> BlowupVerdict {
    let mut verdict = BlowupVerdict {
        blown_up: false,
        cause: None,
        step: None,
        time: None,
        thresholds: *thresholds,
    };
    for r in &report.records {
        let l2 = r.cumulative_l2_sq.sqrt();
        let w1p = (r.cumulative_grad_p + r.cumulative_lp_p).powf(1.0 / p);
        let cause = if l2 > thresholds.l2_cumulative {
            Some(BlowupCause::L2Cumulative)
        } else if w1p > thresholds.w1p_cumulative {
            Some(BlowupCause::W1pCumulative)
        } else {
            None
        };
        if cause.is_some() {
            verdict.blown_up = true;
            verdict.cause = cause;
            verdict.step = Some(r.step);
            verdict.time = Some(r.time);
            return verdict;
        }
    }
    if let Some(d) = &report.divergence {
        verdict.blown_up = true;
        verdict.cause = Some(BlowupCause::SolverDiverged);
        verdict.step = Some(d.step);
        verdict.time = Some(d.time);
    }
    verdict
}
