//! Product-trapezoid integration of `u(t) = u0 + I^alpha[u^q](t)`.

use super::{FodeProblem, Trajectory};
use crate::error::{Error, Result};
use crate::fracops::{FracParams, ProductTrapezoid, TimeGrid};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e9;

const NEWTON_MAX: usize = 100;

/// Smaller root of `u - c - w u^q = 0`, `c > 0`, `w > 0`, or `None` when the
/// concave left side stays negative (the step cannot be continued).
pub(crate) fn implicit_power_root(c: f64, w: f64, q: f64) -> Result<Option<f64>> {
    let g = |u: f64| u - c - w * u.powf(q);
    if w == 0.0 {
        return Ok(Some(c));
    }
    // g is increasing on [c, u_star] and decreasing beyond
    let u_star = (1.0 / (q * w)).powf(1.0 / (q - 1.0));
    if u_star <= c || g(u_star) < 0.0 {
        return Ok(None);
    }
    // tangents of a concave function overshoot nothing from the left: Newton
    // from c climbs monotonically to the root
    let mut u = c;
    for _ in 0..NEWTON_MAX {
        let gu = g(u);
        let d = 1.0 - q * w * u.powf(q - 1.0);
        if !(d > 0.0) {
            break;
        }
        let next = u - gu / d;
        if !(next.is_finite()) {
            break;
        }
        if (next - u).abs() <= 1e-15 * next.abs() {
            return Ok(Some(next.min(u_star)));
        }
        u = next.min(u_star);
    }
    // slow near a double root: bisect on [c, u_star]
    let (mut lo, mut hi) = (c.max(u.min(u_star)), u_star);
    if g(lo) > 0.0 {
        lo = c;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            return Ok(Some(hi));
        }
    }
    let r = g(hi);
    if r.abs() <= 1e-12 * hi {
        Ok(Some(hi))
    } else {
        Err(Error::Convergence {
            method: "implicit Volterra step",
            iterations: NEWTON_MAX + 200,
            residual: r.abs(),
        })
    }
}

/// Integrates the problem on `grid`, stopping at the first node whose value
/// exceeds `divergence_threshold` or whose implicit equation has no root.
pub fn volterra_solve(problem: &FodeProblem, grid: &TimeGrid, divergence_threshold: f64) -> Result<Trajectory> {
    if !(divergence_threshold > problem.u0) {
        return Err(Error::param(
            "divergence_threshold",
            format!("must exceed u0 = {}", problem.u0),
        ));
    }
    let params = FracParams::new(problem.alpha)?;
    let pt = ProductTrapezoid::new(grid, &params);
    let q = problem.q;
    let mut values = vec![problem.u0];
    let mut powers = vec![problem.u0.powf(q)];
    let mut row = Vec::with_capacity(grid.steps() + 1);
    for k in 1..=grid.steps() {
        pt.row(k, &mut row);
        let history: f64 = row[..k].iter().zip(&powers).map(|(w, f)| w * f).sum();
        let c = problem.u0 + history;
        let root = implicit_power_root(c, row[k], q).map_err(|e| Error::Solver {
            node: k,
            reason: e.to_string(),
        })?;
        match root {
            Some(u) if u <= divergence_threshold => {
                values.push(u);
                powers.push(u.powf(q));
            }
            _ => return Ok(Trajectory::new(grid.clone(), values, Some(k))),
        }
    }
    Ok(Trajectory::new(grid.clone(), values, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_root_cases() {
        let r = implicit_power_root(1.0, 0.1, 2.0).unwrap().unwrap();
        // u - 1 - 0.1 u^2 = 0
        assert!((r - (1.0 - (1.0f64 - 0.4).sqrt()) / 0.2).abs() < 1e-14);
        assert_eq!(implicit_power_root(1.0, 0.3, 2.0).unwrap(), None);
        // double root at u = 2 for c = 1, w = 1/4
        let r = implicit_power_root(1.0, 0.25, 2.0).unwrap().unwrap();
        assert!((r - 2.0).abs() < 1e-6);
    }

    #[test]
    fn classical_limit_small_steps() {
        // alpha close to 1 behaves like u' = u^2 with blow-up at 1
        let pr = FodeProblem::new(0.999, 2.0, 1.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 4000).unwrap();
        let tr = volterra_solve(&pr, &grid, 1e9).unwrap();
        let t = tr.blowup_time().unwrap();
        assert!((t - 1.0).abs() < 0.05, "{t}");
    }

    #[test]
    fn trajectory_is_nondecreasing() {
        let pr = FodeProblem::new(0.4, 1.7, 0.3).unwrap();
        let grid = TimeGrid::graded(3.0, 600, 1.5).unwrap();
        let tr = volterra_solve(&pr, &grid, 1e9).unwrap();
        assert!(tr.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_threshold_below_data() {
        let pr = FodeProblem::new(0.5, 2.0, 3.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        assert!(volterra_solve(&pr, &grid, 2.0).is_err());
    }
}
