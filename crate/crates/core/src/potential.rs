//! Ball domain, the doubly singular weight `W`, its truncation and the constants
//! of the global-existence estimates.
//!
//! Radial integrals throughout the crate use the measure `r^{n-1} dr` without
//! the area of the unit sphere; all quantities compared against each other
//! share that convention.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::gamma;

/// Exponent `beta` in `W(r) = r^{-p} [1 - (r/R)^beta]^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum WeightExponent {
    /// `beta = (n - p) / (p - 1)`, the exponent of the p-harmonic function
    /// `r^{-beta} - R^{-beta}`. With it `Lambda(n, p) = ((n-p)/p)^p` bounds the
    /// Rayleigh quotient from below.
    #[default]
    PHarmonic,
    /// `beta = (n - p) / p`. Near `r = R` this weight is too strong by the factor
    /// `((p-1)/p)^{-p}` relative to the sharp boundary constant, and the
    /// Rayleigh quotient drops below `Lambda(n, p)`.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialDomain {
    pub n: f64,
    pub radius: f64,
}

impl RadialDomain {
    pub fn new(n: f64, radius: f64) -> Result<Self> {
        if !(n > 1.0 && n.is_finite()) {
            return Err(Error::param("n", format!("must exceed 1, got {n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self { n, radius })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub p: f64,
    pub mu: f64,
    pub domain: RadialDomain,
    pub exponent: WeightExponent,
}

impl PotentialSpec {
    pub fn new(p: f64, mu: f64, domain: RadialDomain) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::param("p", format!("must exceed 2, got {p}")));
        }
        if !(domain.n > p) {
            return Err(Error::param("n", format!("must exceed p = {p}, got {}", domain.n)));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("must be nonnegative, got {mu}")));
        }
        Ok(Self {
            p,
            mu,
            domain,
            exponent: WeightExponent::default(),
        })
    }

    pub fn with_exponent(mut self, exponent: WeightExponent) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn beta(&self) -> f64 {
        let (n, p) = (self.domain.n, self.p);
        match self.exponent {
            WeightExponent::PHarmonic => (n - p) / (p - 1.0),
            WeightExponent::Printed => (n - p) / p,
        }
    }

    pub fn lambda(&self) -> f64 {
        ((self.domain.n - self.p) / self.p).powf(self.p)
    }

    /// `W(r)` without range checks; callers guarantee `0 < r < R`.
    #[inline]
    pub(crate) fn w_unchecked(&self, r: f64) -> f64 {
        let x = (r / self.domain.radius).powf(self.beta());
        (r * (1.0 - x)).powf(-self.p)
    }
}

/// Optimal Hardy constant `((n - p) / p)^p`.
pub fn hardy_constant(n: f64, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    if !(n > p) {
        return Err(Error::param("n", format!("must exceed p = {p}, got {n}")));
    }
    Ok(((n - p) / p).powf(p))
}

pub fn potential_w(r: f64, spec: &PotentialSpec) -> Result<f64> {
    let big_r = spec.domain.radius;
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Domain(format!(
            "W is singular outside 0 < r < {big_r}, got r = {r}"
        )));
    }
    Ok(spec.w_unchecked(r))
}

/// `min(N, W(r))`; `N = f64::INFINITY` means no truncation.
pub fn potential_w_truncated(r: f64, spec: &PotentialSpec, level: f64) -> Result<f64> {
    if !(level >= 1.0) {
        return Err(Error::param("truncation", format!("must be >= 1, got {level}")));
    }
    Ok(potential_w(r, spec)?.min(level))
}

/// Minimizer and minimum of `W` on `(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightMinimum {
    pub r_star: f64,
    pub omega0: f64,
}

/// Golden-section search on `ln W` (unimodal on `(0, R)`), refined by bisection
/// on the sign of `d ln W / dr`.
pub fn weight_minimum(spec: &PotentialSpec) -> WeightMinimum {
    let big_r = spec.domain.radius;
    let beta = spec.beta();
    let p = spec.p;
    let f = |r: f64| spec.w_unchecked(r).ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (big_r * 1e-9, big_r * (1.0 - 1e-12));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // d ln W / dr = (p / r) [beta x / (1 - x) - 1], x = (r/R)^beta
    let slope = |r: f64| {
        let x = (r / big_r).powf(beta);
        p / r * (beta * x / (1.0 - x) - 1.0)
    };
    let (mut lo, mut hi) = (a, b);
    if slope(lo) > 0.0 || slope(hi) < 0.0 {
        // bracket lost to rounding; widen to the full interval
        lo = big_r * 1e-9;
        hi = big_r * (1.0 - 1e-12);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let r_star = 0.5 * (lo + hi);
    WeightMinimum {
        r_star,
        omega0: spec.w_unchecked(r_star),
    }
}

/// `omega_0 = min W > 0`.
pub fn omega0(spec: &PotentialSpec) -> f64 {
    weight_minimum(spec).omega0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriConstants {
    pub epsilon: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub c3: f64,
    pub a1: f64,
    pub a2: f64,
}

impl AprioriConstants {
    /// Re-checks the defining relations from the fields alone.
    pub fn check(&self, lambda: f64, mu: f64, alpha: f64) -> bool {
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        self.epsilon > 0.0
            && self.epsilon < self.omega0.min(lambda - mu)
            && rel(self.gamma, 2.0 * (1.0 - (mu + self.epsilon) / lambda))
            && self.gamma > 0.0
            && rel(self.a1, self.c3 / self.gamma)
            && rel(
                self.a2,
                self.c3 / (2.0 * self.epsilon * self.omega0 * gamma(1.0 - alpha)),
            )
    }
}

/// Constants with the midpoint choice `epsilon = min(omega0, Lambda - mu) / 2`.
pub fn apriori_constants(
    spec: &PotentialSpec,
    alpha: f64,
    horizon: f64,
    u0_l2_squared: f64,
) -> Result<AprioriConstants> {
    apriori_constants_with_fraction(spec, alpha, horizon, u0_l2_squared, 0.5)
}

/// As [`apriori_constants`] with `epsilon = fraction * min(omega0, Lambda - mu)`.
pub fn apriori_constants_with_fraction(
    spec: &PotentialSpec,
    alpha: f64,
    horizon: f64,
    u0_l2_squared: f64,
    fraction: f64,
) -> Result<AprioriConstants> {
    let lambda = spec.lambda();
    if !(spec.mu < lambda) {
        return Err(Error::Regime(format!(
            "a priori bounds need mu < Lambda = {lambda:.6e}, got mu = {:.6e}",
            spec.mu
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    if !(u0_l2_squared >= 0.0) {
        return Err(Error::param("u0_l2_squared", "must be nonnegative"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("epsilon_fraction", "must lie in (0, 1)"));
    }
    let omega0 = omega0(spec);
    let epsilon = fraction * omega0.min(lambda - spec.mu);
    let g = 2.0 * (1.0 - (spec.mu + epsilon) / lambda);
    let c3 = 3.0 * horizon.powf(1.0 - alpha) / (1.0 - alpha) * u0_l2_squared;
    Ok(AprioriConstants {
        epsilon,
        omega0,
        gamma: g,
        c3,
        a1: c3 / g,
        a2: c3 / (2.0 * epsilon * omega0 * gamma(1.0 - alpha)),
    })
}
