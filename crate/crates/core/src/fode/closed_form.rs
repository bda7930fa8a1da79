//! Explicit subsolution `w` of the transformed problem and its blow-up time.
//!
//! With `v(t) = (t + delta)^{1-alpha} u(t)` the scalar problem admits the
//! subsolution `w' = w^q / (Gamma(alpha) (t + delta)^{q(1-alpha)})`, integrated in
//! closed form through `F(t, delta) = w(t)^{1-q}`.

use serde::Serialize;

use super::FodeProblem;
use crate::error::{Error, Result};
use crate::special::gamma;

/// Band around `1 - q(1 - alpha) = 0` treated as the logarithmic case.
pub const CASE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseTag {
    /// `1 - q(1 - alpha) > 0`
    I1,
    /// `1 - q(1 - alpha) = 0`
    I2,
    /// `1 - q(1 - alpha) < 0`
    II,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseTag::I1 => "I1",
            CaseTag::I2 => "I2",
            CaseTag::II => "II",
        })
    }
}

pub fn classify_case(alpha: f64, q: f64) -> CaseTag {
    let e = 1.0 - q * (1.0 - alpha);
    if e.abs() <= CASE_TOLERANCE {
        CaseTag::I2
    } else if e > 0.0 {
        CaseTag::I1
    } else {
        CaseTag::II
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsolutionParams {
    pub delta: f64,
    /// `w(0) = delta^{1-alpha} u0 / 2`
    pub w0: f64,
    /// `(q - 1) / (Gamma(alpha) (q(1-alpha) - 1))`, case II only.
    pub a: Option<f64>,
    pub case: CaseTag,
}

fn case_two_a(problem: &FodeProblem) -> f64 {
    let e = problem.q * (1.0 - problem.alpha) - 1.0;
    (problem.q - 1.0) / (gamma(problem.alpha) * e)
}

/// Shift `delta` and initial value `w0`.
///
/// Case II takes `delta^{q(1-alpha)-1} = (A/2) w0^{q-1}`, which places the root of
/// `F(., delta)` exactly at `(2^{1/(q(1-alpha)-1)} - 1) delta`. Combined with
/// `w0 = delta^{1-alpha} u0 / 2` this gives `delta = [(A/2)(u0/2)^{q-1}]^{-1/alpha}`.
pub fn choose_delta(problem: &FodeProblem) -> SubsolutionParams {
    let case = classify_case(problem.alpha, problem.q);
    match case {
        CaseTag::I1 | CaseTag::I2 => SubsolutionParams {
            delta: 1.0,
            w0: problem.u0 / 2.0,
            a: None,
            case,
        },
        CaseTag::II => {
            let a = case_two_a(problem);
            let delta = delta_with_factor(problem, a / 2.0);
            SubsolutionParams {
                delta,
                w0: delta.powf(1.0 - problem.alpha) * problem.u0 / 2.0,
                a: Some(a),
                case,
            }
        }
    }
}

fn delta_with_factor(problem: &FodeProblem, factor: f64) -> f64 {
    (factor * (problem.u0 / 2.0).powf(problem.q - 1.0)).powf(-1.0 / problem.alpha)
}

/// Case II shift with the factor `3A/2`; `F` then stays positive and the
/// subsolution does not blow up. Kept for reporting.
pub fn printed_case_two_delta(problem: &FodeProblem) -> Option<f64> {
    (classify_case(problem.alpha, problem.q) == CaseTag::II)
        .then(|| delta_with_factor(problem, 1.5 * case_two_a(problem)))
}

/// `F(t, delta)` for cases I1 and II, `F_0(t, delta)` for case I2. The
/// subsolution is `w = F^{1/(1-q)}` while `F > 0`.
pub fn f_value(t: f64, params: &SubsolutionParams, problem: &FodeProblem) -> f64 {
    let (q, alpha) = (problem.q, problem.alpha);
    let d = params.delta;
    let base = params.w0.powf(1.0 - q);
    match params.case {
        CaseTag::I2 => base - (q - 1.0) / gamma(alpha) * ((t + d) / d).ln(),
        CaseTag::I1 | CaseTag::II => {
            let e = problem.exponent();
            base + (q - 1.0) * (d.powf(e) - (t + d).powf(e)) / (gamma(alpha) * e)
        }
    }
}

/// Closed-form subsolution `w(t)` on `[0, t_m)`.
pub fn subsolution_w(t: f64, params: &SubsolutionParams, problem: &FodeProblem) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("w is defined for t >= 0, got {t}")));
    }
    let f = f_value(t, params, problem);
    if !(f > 0.0) {
        return Err(Error::Domain(format!(
            "t = {t} is at or beyond the blow-up time of w (F = {f:e})"
        )));
    }
    Ok(f.powf(1.0 / (1.0 - problem.q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupEstimate {
    pub t_m: f64,
    pub case: CaseTag,
    pub params: SubsolutionParams,
    /// Case I1: the boxed closed form `(X - 1)^{1/(q(1-alpha)-1)} - 1` with
    /// `X = w0^{1-q} Gamma(alpha) (1 - q(1-alpha)) / (q-1)`, NaN where undefined;
    /// it disagrees with the root of `F`. Case II: `(2^{-1/e} - 1)` times the
    /// printed `3A/2` shift. NaN in case I2.
    pub printed_t_m: f64,
    /// Case II: the `3A/2` shift, which admits no blow-up.
    pub printed_delta: Option<f64>,
}

pub fn blowup_time(problem: &FodeProblem) -> BlowupEstimate {
    let params = choose_delta(problem);
    let (q, alpha) = (problem.q, problem.alpha);
    let e = problem.exponent();
    let mut printed_t_m = f64::NAN;
    let t_m = match params.case {
        CaseTag::I1 => {
            let x = params.w0.powf(1.0 - q) * gamma(alpha) * e / (q - 1.0);
            printed_t_m = (x - 1.0).powf(-1.0 / e) - 1.0;
            (x + 1.0).powf(1.0 / e) - 1.0
        }
        CaseTag::I2 => (params.w0.powf(1.0 - q) * gamma(alpha) / (q - 1.0)).exp() - 1.0,
        CaseTag::II => (2f64.powf(-1.0 / e) - 1.0) * params.delta,
    };
    let printed_delta = printed_case_two_delta(problem);
    if let Some(d) = printed_delta {
        printed_t_m = (2f64.powf(-1.0 / e) - 1.0) * d;
    }
    BlowupEstimate {
        t_m,
        case: params.case,
        params,
        printed_t_m,
        printed_delta,
    }
}
