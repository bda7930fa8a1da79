//! First weighted eigenpair `-Delta_p v = lambda W_N |v|^{p-2} v` and the
//! positive profile `-Delta_p X - mu W_N X^{p-1} + X = 0`.

use serde::Serialize;

use super::grid::RadialGrid;
use super::tridiag::{solve_general, solve_spd};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Positive, normalized to `int W_N X^p r^{n-1} dr = 1`.
    pub profile: Vec<f64>,
    /// Max-norm residual of the eigen equation relative to `max |lambda W_N v^{p-1}|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Controls for [`eigen_first_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenControl {
    pub sigma: f64,
    pub max_iterations: usize,
    /// Target for the relative eigen-equation residual.
    pub tol: f64,
}

impl Default for EigenControl {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            max_iterations: 5000,
            tol: 1e-9,
        }
    }
}

/// `int |v'|^p / int W_N |v|^p` on the grid.
pub fn rayleigh_quotient(v: &[f64], grid: &RadialGrid, wn: &[f64], p: f64) -> f64 {
    let num = grid.gradient_p_integral(v, p);
    let den: f64 = v
        .iter()
        .zip(wn)
        .zip(grid.volumes())
        .map(|((x, w), vol)| w * x.abs().powf(p) * vol)
        .sum();
    num / den
}

fn normalize(v: &mut [f64], grid: &RadialGrid, wn: &[f64], p: f64) {
    let den: f64 = v
        .iter()
        .zip(wn)
        .zip(grid.volumes())
        .map(|((x, w), vol)| w * x.abs().powf(p) * vol)
        .sum();
    let s = den.powf(-1.0 / p);
    v.iter_mut().for_each(|x| *x *= s);
}

/// Solves `-Delta_p z = f`, the stationarity condition of the convex energy
/// `Phi(z) - sum vol f z`, by Newton. Steps are accepted when they reduce the
/// pointwise residual; otherwise Armijo backtracking on the energy applies.
/// The residual is measured per node, so cells near the centre (tiny volume)
/// count fully even when their energy contribution is at rounding level.
fn solve_p_poisson(grid: &RadialGrid, p: f64, sigma: f64, f: &[f64], start: &[f64]) -> Result<Vec<f64>> {
    let m = grid.len();
    let vol = grid.volumes();
    let energy =
        |z: &[f64]| grid.p_energy(z, p, sigma) - z.iter().zip(f).zip(vol).map(|((a, b), c)| a * b * c).sum::<f64>();
    let gradient = |z: &[f64]| {
        let mut g = grid.neg_energy_gradient(z, p, sigma);
        let mut res: f64 = 0.0;
        for j in 0..m {
            g[j] = -g[j] - f[j] * vol[j];
            res = res.max((g[j] / vol[j]).abs());
        }
        (g, res)
    };
    let step = |z: &[f64], dir: &[f64], t: f64| -> Vec<f64> { z.iter().zip(dir).map(|(a, b)| a + t * b).collect() };
    let fscale = f.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let mut z = start.to_vec();
    let (mut g, mut res) = gradient(&z);
    let max_iter = 200;
    for _ in 0..max_iter {
        if res <= 1e-12 * fscale {
            return Ok(z);
        }
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        grid.add_energy_hessian(&z, p, sigma, &mut diag, &mut off);
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        // a relative floor per row only matters where the gradient vanishes
        let dir = [0.0, 1e-12, 1e-8, 1e-4]
            .iter()
            .find_map(|floor| {
                let shifted: Vec<f64> = diag
                    .iter()
                    .zip(vol)
                    .map(|(d, v)| d + floor * (d + v * fscale))
                    .collect();
                solve_spd(&shifted, &off, &neg)
            })
            .ok_or(Error::Convergence {
                method: "p-Poisson Newton",
                iterations: 0,
                residual: res / fscale,
            })?;
        let mut next = None;
        let mut t = 1.0;
        for _ in 0..40 {
            let trial = step(&z, &dir, t);
            let (gt, rt) = gradient(&trial);
            if rt < res {
                next = Some((trial, gt, rt));
                break;
            }
            t *= 0.5;
        }
        if next.is_none() {
            let e = energy(&z);
            let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            for _ in 0..60 {
                let trial = step(&z, &dir, t);
                if energy(&trial) < e + 1e-4 * t * slope {
                    let (gt, rt) = gradient(&trial);
                    next = Some((trial, gt, rt));
                    break;
                }
                t *= 0.5;
            }
        }
        match next {
            Some((zn, gn, rn)) => {
                z = zn;
                g = gn;
                res = rn;
            }
            None => break,
        }
    }
    if res <= 1e-8 * fscale {
        return Ok(z);
    }
    Err(Error::Convergence {
        method: "p-Poisson Newton",
        iterations: max_iter,
        residual: res / fscale,
    })
}

/// Initial profile `(1 - r/R)^{(p-1)/p}`, the boundary behaviour of Hardy
/// extremals, kept bounded at the centre.
fn seed(grid: &RadialGrid, p: f64) -> Vec<f64> {
    let big_r = grid.radius();
    grid.sample(|r| (1.0 - r / big_r).powf((p - 1.0) / p))
}

/// Eigen-equation residual `-Delta_p v - lambda W_N v^{p-1}`, relative.
pub fn eigen_residual(v: &[f64], lambda: f64, grid: &RadialGrid, wn: &[f64], p: f64, sigma: f64) -> f64 {
    let lap = grid.apply_p_laplacian(v, p, sigma);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..v.len() {
        let rhs = lambda * wn[j] * v[j].abs().powf(p - 2.0) * v[j];
        worst = worst.max((-lap[j] - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    worst / scale
}

/// First eigenpair by inverse power iteration: `-Delta_p z = W_N v^{p-1}`,
/// then `v <- z / ||z||`.
pub fn eigen_first(spec: &PotentialSpec, level: f64, grid: &RadialGrid) -> Result<EigenResult> {
    eigen_first_with(spec, level, grid, &EigenControl::default())
}

pub fn eigen_first_with(
    spec: &PotentialSpec,
    level: f64,
    grid: &RadialGrid,
    control: &EigenControl,
) -> Result<EigenResult> {
    let p = spec.p;
    let wn = grid.potential_values(spec, level)?;
    let mut v = seed(grid, p);
    normalize(&mut v, grid, &wn, p);
    let mut lambda = rayleigh_quotient(&v, grid, &wn, p);
    let mut z;
    for it in 1..=control.max_iterations {
        let f: Vec<f64> = v.iter().zip(&wn).map(|(x, w)| w * x.powf(p - 1.0)).collect();
        // exact when v is already the eigenfunction
        let guess: Vec<f64> = v.iter().map(|x| x * lambda.powf(-1.0 / (p - 1.0))).collect();
        z = solve_p_poisson(grid, p, control.sigma, &f, &guess)?;
        if z.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Convergence {
                method: "inverse power iteration",
                iterations: it,
                residual: f64::NAN,
            });
        }
        let mut next = z.clone();
        normalize(&mut next, grid, &wn, p);
        let next_lambda = rayleigh_quotient(&next, grid, &wn, p);
        let change = (lambda - next_lambda).abs() / next_lambda;
        v = next;
        lambda = next_lambda;
        let residual = eigen_residual(&v, lambda, grid, &wn, p, control.sigma);
        // the quotient converges quadratically faster than the vector; a
        // stalled quotient means the residual is at its rounding floor
        if residual <= control.tol || (change <= 1e-15 && residual <= 1e3 * control.tol) {
            return Ok(EigenResult {
                lambda,
                profile: v,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        method: "inverse power iteration",
        iterations: control.max_iterations,
        residual: eigen_residual(&v, lambda, grid, &wn, p, control.sigma),
    })
}

/// Positive solution of `-Delta_p X - mu W_N X^{p-1} + X = 0` for `mu > lambda_N`.
///
/// The seed `c phi` solves the equation projected on the eigenfunction `phi`:
/// `c^{p-2} = int phi^2 / (mu - lambda_N)`. Newton on the full system follows,
/// halving steps that would leave the positive cone or raise the residual.
pub fn positive_profile_x(
    spec: &PotentialSpec,
    level: f64,
    grid: &RadialGrid,
    eigen: &EigenResult,
    sigma: f64,
) -> Result<Vec<f64>> {
    let p = spec.p;
    let mu = spec.mu;
    if !(mu > eigen.lambda) {
        return Err(Error::Regime(format!(
            "a positive profile needs mu > lambda_N = {:.6e}, got mu = {mu:.6e}",
            eigen.lambda
        )));
    }
    let wn = grid.potential_values(spec, level)?;
    let m = grid.len();
    let vol = grid.volumes();
    let phi = &eigen.profile;
    let phi2 = grid.integrate(&phi.iter().map(|x| x * x).collect::<Vec<_>>());
    let c = (phi2 / (mu - eigen.lambda)).powf(1.0 / (p - 2.0));
    let mut x: Vec<f64> = phi.iter().map(|v| c * v).collect();

    let residual = |x: &[f64]| -> Vec<f64> {
        let lap = grid.apply_p_laplacian(x, p, sigma);
        (0..m)
            .map(|j| -lap[j] - mu * wn[j] * x[j].powf(p - 1.0) + x[j])
            .collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for it in 0..200 {
        if rn <= 1e-10 {
            return Ok(x);
        }
        let mut diag: Vec<f64> = vol.to_vec();
        let mut off = vec![0.0; m - 1];
        grid.add_energy_hessian(&x, p, sigma, &mut diag, &mut off);
        for j in 0..m {
            diag[j] -= vol[j] * mu * (p - 1.0) * wn[j] * x[j].powf(p - 2.0);
        }
        // Jacobian of the volume-weighted residual
        let rhs: Vec<f64> = (0..m).map(|j| -r[j] * vol[j]).collect();
        let dir = solve_general(&off, &diag, &off, &rhs).ok_or(Error::Convergence {
            method: "positive profile Newton",
            iterations: it,
            residual: rn,
        })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            if trial.iter().all(|v| *v > 0.0) {
                let rt = residual(&trial);
                let nt = norm(&rt);
                if nt < rn || (t == 1.0 && nt <= 1e-10) {
                    x = trial;
                    r = rt;
                    rn = nt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= 1e-8 {
        return Ok(x);
    }
    Err(Error::Convergence {
        method: "positive profile Newton",
        iterations: 200,
        residual: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialDomain;

    fn spec(mu_ratio: f64) -> (PotentialSpec, RadialGrid) {
        let d = RadialDomain::new(4.0, 1.0).unwrap();
        let s = PotentialSpec::new(3.0, 0.0, d).unwrap();
        (s.with_mu(mu_ratio * s.lambda()), RadialGrid::new(200, &d).unwrap())
    }

    #[test]
    fn eigenvalues_decrease_toward_hardy_constant() {
        let (s, g) = spec(0.0);
        let mut prev = f64::INFINITY;
        for level in [10.0, 1e2, 1e3, 1e4] {
            let e = eigen_first(&s, level, &g).unwrap();
            assert!(e.lambda >= 0.99 * s.lambda());
            assert!(e.lambda <= prev * (1.0 + 1e-9));
            assert!(e.profile.iter().all(|x| *x > 0.0));
            assert!(e.residual <= 1e-6);
            prev = e.lambda;
        }
    }

    #[test]
    fn eigenpair_satisfies_the_equation() {
        let (s, g) = spec(0.0);
        let e = eigen_first(&s, 100.0, &g).unwrap();
        let wn = g.potential_values(&s, 100.0).unwrap();
        let norm: f64 = g.integrate(
            &e.profile
                .iter()
                .zip(&wn)
                .map(|(x, w)| w * x.powi(3))
                .collect::<Vec<_>>(),
        );
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((rayleigh_quotient(&e.profile, &g, &wn, 3.0) - e.lambda).abs() < 1e-12 * e.lambda);
        assert!(eigen_residual(&e.profile, e.lambda, &g, &wn, 3.0, 0.0) < 1e-6);
    }

    #[test]
    fn positive_profile() {
        let (s, g) = spec(2.0);
        let e = eigen_first(&s, 1e3, &g).unwrap();
        let x = positive_profile_x(&s, 1e3, &g, &e, 0.0).unwrap();
        assert!(x.iter().all(|v| *v > 0.0));
        let wn = g.potential_values(&s, 1e3).unwrap();
        let lap = g.apply_p_laplacian(&x, 3.0, 0.0);
        let res = (0..x.len())
            .map(|j| (-lap[j] - s.mu * wn[j] * x[j] * x[j] + x[j]).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn profile_needs_supercritical_coupling() {
        let (s, g) = spec(1.5);
        // lambda_10 is far above 1.5 Lambda
        let e = eigen_first(&s, 10.0, &g).unwrap();
        assert!(matches!(
            positive_profile_x(&s, 10.0, &g, &e, 0.0),
            Err(Error::Regime(_))
        ));
    }
}
