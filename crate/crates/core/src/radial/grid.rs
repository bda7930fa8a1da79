//! Cell-centred radial grid and the flux-form p-Laplacian.
//!
//! Cells `[j h, (j+1) h]` with `h = R/m` carry unknowns at `r_j = (j + 1/2) h`.
//! Fluxes live on faces: zero at `r = 0` (symmetry), `r_f^{n-1} phi(g)` at
//! interior faces, and at `r = R` the gradient `(0 - u_{m-1}) / (h/2)` imposes the
//! Dirichlet value through a half cell. The discrete operator is the exact
//! gradient of the discrete energy, so summation by parts holds to rounding.

use crate::error::{Error, Result};
use crate::potential::{PotentialSpec, RadialDomain};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    m: usize,
    n: f64,
    radius: f64,
    h: f64,
    nodes: Vec<f64>,
    /// `r_j^{n-1} h`
    volumes: Vec<f64>,
    /// `r_f^{n-1}` at faces `1..m` (index `m` is the boundary `r = R`)
    face_area: Vec<f64>,
}

impl RadialGrid {
    pub fn new(m: usize, domain: &RadialDomain) -> Result<Self> {
        if m < 2 {
            return Err(Error::param("m", "need at least 2 radial cells"));
        }
        let radius = domain.radius;
        let n = domain.n;
        let h = radius / m as f64;
        let nodes: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * h).collect();
        let volumes = nodes.iter().map(|r| r.powf(n - 1.0) * h).collect();
        let face_area = (0..=m).map(|f| (f as f64 * h).powf(n - 1.0)).collect();
        Ok(Self {
            m,
            n,
            radius,
            h,
            nodes,
            volumes,
            face_area,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dimension(&self) -> f64 {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights `r_j^{n-1} h`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// `sum_j f_j r_j^{n-1} h`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.volumes).map(|(a, b)| a * b).sum()
    }

    /// `W_N` at the nodes; `level = f64::INFINITY` gives `W` itself.
    pub fn potential_values(&self, spec: &PotentialSpec, level: f64) -> Result<Vec<f64>> {
        if (spec.domain.radius - self.radius).abs() > 1e-12 * self.radius
            || (spec.domain.n - self.n).abs() > 1e-12 * self.n
        {
            return Err(Error::Precondition(
                "potential and grid describe different balls".into(),
            ));
        }
        if !(level >= 1.0) {
            return Err(Error::param("truncation", format!("must be >= 1, got {level}")));
        }
        Ok(self.nodes.iter().map(|&r| spec.w_unchecked(r).min(level)).collect())
    }

    pub(crate) fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::Shape {
                expected: self.m,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Face gradients: `g[f - 1]` for interior faces `f = 1..m-1`, then the
    /// boundary gradient at `r = R` last. Length `m`.
    pub fn gradients(&self, u: &[f64]) -> Vec<f64> {
        let h = self.h;
        let mut g: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        g.push(-u[self.m - 1] / (0.5 * h));
        g
    }

    /// Face weights `r_f^{n-1} h` matching [`gradients`](Self::gradients); the
    /// boundary face carries `R^{n-1} h/2`.
    fn face_weights(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.h;
        (1..=self.m).map(move |f| {
            if f == self.m {
                self.face_area[f] * 0.5 * h
            } else {
                self.face_area[f] * h
            }
        })
    }

    /// `sum_faces w_f |g_f|^p`, the discrete `int |u'|^p r^{n-1} dr`.
    pub fn gradient_p_integral(&self, u: &[f64], p: f64) -> f64 {
        self.gradients(u)
            .iter()
            .zip(self.face_weights())
            .map(|(g, w)| w * g.abs().powf(p))
            .sum()
    }

    /// Regularized energy `sum_faces w_f (g^2 + sigma^2)^{p/2} / p`.
    pub fn p_energy(&self, u: &[f64], p: f64, sigma: f64) -> f64 {
        let s2 = sigma * sigma;
        self.gradients(u)
            .iter()
            .zip(self.face_weights())
            .map(|(g, w)| w * (g * g + s2).powf(0.5 * p) / p)
            .sum()
    }

    /// Face fluxes `F_f = r_f^{n-1} (g^2 + sigma^2)^{(p-2)/2} g`, `f = 0..m`
    /// (`F_0 = 0` at the centre).
    pub fn fluxes(&self, u: &[f64], p: f64, sigma: f64) -> Vec<f64> {
        let s2 = sigma * sigma;
        let g = self.gradients(u);
        let mut flux = Vec::with_capacity(self.m + 1);
        flux.push(0.0);
        for (f, gf) in (1..=self.m).zip(&g) {
            flux.push(self.face_area[f] * (gf * gf + s2).powf(0.5 * p - 1.0) * gf);
        }
        flux
    }

    /// `(F_{j+1/2} - F_{j-1/2}) / (r_j^{n-1} h)`.
    pub fn apply_p_laplacian(&self, u: &[f64], p: f64, sigma: f64) -> Vec<f64> {
        let flux = self.fluxes(u, p, sigma);
        (0..self.m).map(|j| (flux[j + 1] - flux[j]) / self.volumes[j]).collect()
    }

    /// `-grad` of the energy, i.e. `(Delta_p u)_j r_j^{n-1} h`.
    pub(crate) fn neg_energy_gradient(&self, u: &[f64], p: f64, sigma: f64) -> Vec<f64> {
        let flux = self.fluxes(u, p, sigma);
        (0..self.m).map(|j| flux[j + 1] - flux[j]).collect()
    }

    /// Adds the Hessian of [`p_energy`](Self::p_energy) to a symmetric
    /// tridiagonal matrix (`diag[j]`, `off[j]` couples `j` and `j+1`).
    pub(crate) fn add_energy_hessian(&self, u: &[f64], p: f64, sigma: f64, diag: &mut [f64], off: &mut [f64]) {
        let s2 = sigma * sigma;
        let h = self.h;
        let second = |g: f64| (g * g + s2).powf(0.5 * p - 2.0) * ((p - 1.0) * g * g + s2);
        for j in 0..self.m - 1 {
            let g = (u[j + 1] - u[j]) / h;
            let c = self.face_area[j + 1] * second(g) / h;
            diag[j] += c;
            diag[j + 1] += c;
            off[j] -= c;
        }
        let g = -u[self.m - 1] / (0.5 * h);
        diag[self.m - 1] += self.face_area[self.m] * second(g) * 2.0 / h;
    }
}

/// Discrete radial p-Laplacian at the nodes.
pub fn p_laplacian_radial(u: &[f64], grid: &RadialGrid, p: f64, sigma: f64) -> Result<Vec<f64>> {
    grid.check(u)?;
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    Ok(grid.apply_p_laplacian(u, p, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(m: usize, n: f64) -> RadialGrid {
        RadialGrid::new(m, &RadialDomain::new(n, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn nodes_avoid_singularities() {
        let g = grid(10, 4.0);
        assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() < 1.0);
        assert!((g.nodes()[0] - 0.05).abs() < 1e-15);
        // sum of r^{n-1} h approximates 1/n
        let total: f64 = grid(2000, 4.0).volumes().iter().sum();
        assert!((total - 0.25).abs() < 1e-6);
    }

    #[test]
    fn constants_in_the_interior() {
        // only the boundary cell sees the Dirichlet value
        let g = grid(50, 4.0);
        let lap = g.apply_p_laplacian(&vec![2.0; 50], 3.0, 0.0);
        assert!(lap[..49].iter().all(|&x| x == 0.0));
        assert!(lap[49] < 0.0);
    }

    #[test]
    fn converges_on_a_polynomial() {
        // u = 1 - r^2, p = 3, n = 4: Delta_p u = -2^{p-1} (n + p - 2) r^{p-2} = -20 r.
        // The half-cell Dirichlet closure has an O(1) local error in the last
        // cell only, so it is measured in the volume-weighted L1 norm.
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for m in [100, 200, 400] {
            let g = grid(m, 4.0);
            let u = g.sample(|r| 1.0 - r * r);
            let lap = g.apply_p_laplacian(&u, 3.0, 0.0);
            let err: Vec<f64> = g.nodes().iter().zip(&lap).map(|(r, l)| (l + 20.0 * r).abs()).collect();
            let interior = err[..m - 1].iter().cloned().fold(0.0, f64::max);
            let l1 = g.integrate(&err);
            assert!(interior < prev.0 && l1 < 0.6 * prev.1);
            prev = (interior, l1);
        }
        assert!(prev.0 < 0.1, "{prev:?}");
    }

    #[test]
    fn divergence_form_total() {
        let g = grid(64, 3.5);
        let u = g.sample(|r| (1.0 - r).powi(2) + 0.3 * r.sin());
        let lap = g.apply_p_laplacian(&u, 2.7, 1e-8);
        let total = g.integrate(&lap);
        let flux = g.fluxes(&u, 2.7, 1e-8);
        assert!((total - flux[64]).abs() < 1e-12 * flux[64].abs().max(1.0));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let g = grid(12, 4.0);
        let u = g.sample(|r| (1.0 - r * r) * (1.0 + r));
        let (p, sigma) = (3.0, 1e-3);
        let mut diag = vec![0.0; 12];
        let mut off = vec![0.0; 11];
        g.add_energy_hessian(&u, p, sigma, &mut diag, &mut off);
        let eps = 1e-6;
        for j in 0..12 {
            let mut up = u.clone();
            up[j] += eps;
            let mut dn = u.clone();
            dn[j] -= eps;
            let gp = g.neg_energy_gradient(&up, p, sigma);
            let gm = g.neg_energy_gradient(&dn, p, sigma);
            let col: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| -(a - b) / (2.0 * eps)).collect();
            assert!((col[j] - diag[j]).abs() < 1e-5 * diag[j].abs().max(1.0));
            if j + 1 < 12 {
                assert!((col[j + 1] - off[j]).abs() < 1e-5 * off[j].abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn summation_by_parts(coef in proptest::collection::vec(-1.0f64..1.0, 4), phase in 0.0f64..3.0) {
            let g = grid(40, 4.0);
            let u = g.sample(|r| coef[0] + coef[1] * r + coef[2] * (3.0 * r + phase).sin());
            let phi = g.sample(|r| (1.0 - r) * (coef[3] + r * r));
            let (p, sigma) = (3.0, 1e-8);
            let lap = g.apply_p_laplacian(&u, p, sigma);
            let lhs: f64 = lap.iter().zip(&phi).zip(g.volumes()).map(|((l, f), v)| l * f * v).sum();
            let flux = g.fluxes(&u, p, sigma);
            let gphi = g.gradients(&phi);
            let h = g.h();
            let mut rhs = 0.0;
            for f in 1..=40 {
                let width = if f == 40 { 0.5 * h } else { h };
                rhs -= flux[f] * gphi[f - 1] * width;
            }
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn homogeneity_without_regularization(c in 0.01f64..50.0, a in 0.1f64..2.0) {
            let g = grid(30, 4.5);
            let u = g.sample(|r| a * (1.0 - r * r) + 0.2 * r);
            let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
            let l1 = g.apply_p_laplacian(&cu, 3.0, 0.0);
            let l2 = g.apply_p_laplacian(&u, 3.0, 0.0);
            // interior values cancel, so compare against the largest entry
            let scale = 1.0 + c * c * l2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in l1.iter().zip(&l2) {
                prop_assert!((x - c * c * y).abs() <= 1e-12 * scale);
            }
        }
    }
}
