//! L1 stepping of `D^alpha u = f(t, u)`.
//!
//! Each step solves `a_kk u_k - f(t_k, u_k) = a_kk u_{k-1} - H_k`, where `H_k` is
//! the L1 memory. The discrete derivative of the returned samples then equals
//! the right-hand side up to root-finding tolerance, which makes these
//! trajectories usable as exact discrete sub- and supersolutions.

use super::volterra::implicit_power_root;
use super::Trajectory;
use crate::error::{Error, Result};
use crate::fracops::{l1_weights, FracParams, TimeGrid};

/// Right-hand side with a global Lipschitz bound in `u`.
pub trait ScalarRhs {
    fn value(&self, t: f64, u: f64) -> f64;
    fn du(&self, t: f64, u: f64) -> f64;
    fn lipschitz(&self) -> f64;
}

/// [`ScalarRhs`] assembled from closures.
pub struct FnRhs<F, G> {
    f: F,
    df: G,
    lipschitz: f64,
}

impl<F, G> FnRhs<F, G>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    pub fn new(f: F, df: G, lipschitz: f64) -> Self {
        Self { f, df, lipschitz }
    }
}

impl<F, G> ScalarRhs for FnRhs<F, G>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    fn value(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }
    fn du(&self, t: f64, u: f64) -> f64 {
        (self.df)(t, u)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Solves a Lipschitz problem. Requires `a_kk > L` at every step, which makes
/// each implicit equation uniquely solvable and the scheme order-preserving.
pub fn l1_solve(rhs: &impl ScalarRhs, u0: f64, grid: &TimeGrid, params: &FracParams) -> Result<Trajectory> {
    let weights = l1_weights(grid, params)?;
    let lip = rhs.lipschitz();
    let mut u = vec![u0];
    for k in 1..=grid.steps() {
        let a = weights.diag(k);
        if !(a > lip) {
            return Err(Error::param(
                "steps",
                format!("step {k}: L1 diagonal {a:.4e} does not dominate the Lipschitz bound {lip:.4e}"),
            ));
        }
        let t = grid.nodes()[k];
        let b = a * u[k - 1] - weights.history(k, &u);
        let h = |x: f64| a * x - rhs.value(t, x) - b;
        // h is increasing with slope >= a - L, so the root sits within
        // |h(x0)| / (a - L) of any x0
        let x0 = u[k - 1];
        let h0 = h(x0);
        let width = h0.abs() / (a - lip);
        let (mut lo, mut hi) = if h0 > 0.0 { (x0 - width, x0) } else { (x0, x0 + width) };
        let mut x = x0;
        let mut converged = h0 == 0.0;
        for _ in 0..100 {
            if converged {
                break;
            }
            let hx = h(x);
            if hx == 0.0 {
                break;
            }
            if hx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - hx / (a - rhs.du(t, x));
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            converged = (next - x).abs() <= 1e-15 * (1.0 + next.abs()) || hi - lo <= 1e-15 * (1.0 + hi.abs());
            x = next;
        }
        if !x.is_finite() {
            return Err(Error::Solver {
                node: k,
                reason: "non-finite iterate".into(),
            });
        }
        u.push(x);
    }
    Ok(Trajectory::new(grid.clone(), u, None))
}

/// Solves `D^alpha u = u^q`, stopping where the step has no root or the value
/// exceeds `divergence_threshold`.
pub fn l1_solve_power(
    q: f64,
    u0: f64,
    grid: &TimeGrid,
    params: &FracParams,
    divergence_threshold: f64,
) -> Result<Trajectory> {
    if !(q > 1.0) {
        return Err(Error::param("q", format!("must exceed 1, got {q}")));
    }
    if !(u0 > 0.0) {
        return Err(Error::param("u0", format!("must be positive, got {u0}")));
    }
    let weights = l1_weights(grid, params)?;
    let mut u = vec![u0];
    for k in 1..=grid.steps() {
        let a = weights.diag(k);
        // a u - u^q = b  <=>  u - b/a - u^q / a = 0
        let b = a * u[k - 1] - weights.history(k, &u);
        let root = implicit_power_root(b / a, 1.0 / a, q).map_err(|e| Error::Solver {
            node: k,
            reason: e.to_string(),
        })?;
        match root {
            Some(x) if x <= divergence_threshold => u.push(x),
            _ => return Ok(Trajectory::new(grid.clone(), u, Some(k))),
        }
    }
    Ok(Trajectory::new(grid.clone(), u, None))
}
