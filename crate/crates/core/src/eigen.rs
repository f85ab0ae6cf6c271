//! Radial Neumann eigenvalues of `-(r^{N-1} u')' = lambda r^{N-1} u` on
//! `(R1, R2)`, computed from the Prüfer angle
//!
//! ```text
//! theta' = sin^2(theta) / r^{N-1} + mu r^{N-1} cos^2(theta),   theta(R1) = 0.
//! ```
//!
//! `theta_mu(R2)` is strictly increasing in `mu`, and `lambda_k` is the
//! unique `mu` with `theta_mu(R2) = (k - 1) pi`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::curvature::{f_prime_at_s0, Geometry, Nonlinearity};
use crate::dopri::Dopri5;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MU_MAX: f64 = 1e12;

/// Tightest tolerance handed to the angle integrator.
const ODE_TOL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleShot {
    pub mu: f64,
    pub theta_end: f64,
    pub tol: f64,
}

/// Integrates the angle equation for `mu >= 0` and returns `theta_mu(R2)`.
///
/// `tol` is the relative/absolute tolerance of the integrator. Near the
/// centre of a ball (`N >= 2`) the solution is started at a small radius
/// from its series `mu r^N / N + mu^2 r^{N+2} / (N^2 (N+2))`.
pub fn theta_mu_at_r2(geom: &Geometry, mu: f64, tol: f64) -> Result<f64> {
    Ok(shoot_angle(geom, mu, tol)?.theta_end)
}

pub fn shoot_angle(geom: &Geometry, mu: f64, tol: f64) -> Result<AngleShot> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu = {mu} must be non-negative")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol:e} out of range")));
    }
    let tol = tol.max(ODE_TOL_FLOOR);
    if mu == 0.0 {
        return Ok(AngleShot { mu, theta_end: 0.0, tol });
    }
    let width = geom.width();
    let n = geom.dim() as f64;
    let (x0, theta0) = if geom.is_ball() && geom.dim() >= 2 {
        let h0 = (1e-8 * width)
            .max(tol.cbrt() * width * 1e-2)
            .min(1e-2 / mu.sqrt());
        let lead = mu * h0.powi(geom.dim() as i32) / n;
        let next = mu * mu * h0.powi(geom.dim() as i32 + 2) / (n * n * (n + 2.0));
        (h0, lead + next)
    } else {
        (geom.r1(), 0.0)
    };
    let stepper = Dopri5 {
        rtol: tol,
        atol: tol,
        h_max: width / 8.0,
        h_min: 1e-14 * width,
        max_steps: 50_000_000,
    };
    let field = |r: f64, y: &[f64; 1]| -> [f64; 1] {
        let w = geom.weight(r);
        let (s, c) = y[0].sin_cos();
        [s * s / w + mu * w * c * c]
    };
    let sol = stepper
        .integrate(field, x0, [theta0], geom.r2(), |_, _| true)
        .map_err(|e| Error::IntegrationFailure {
            r: e.position(),
            reason: e.reason(),
        })?;
    let theta_end = sol.ys.last().expect("non-empty solution")[0];
    Ok(AngleShot { mu, theta_end, tol })
}

/// `k`-th radial Neumann eigenvalue (`k >= 1`), bisected until the bracket
/// is narrower than `tol * max(1, mu)`.
pub fn eigenvalue(geom: &Geometry, k: usize, tol: f64) -> Result<f64> {
    eigenvalue_bounded(geom, k, tol, DEFAULT_MU_MAX)
}

/// As [`eigenvalue`], giving up once the bracket search passes `mu_max`.
pub fn eigenvalue_bounded(geom: &Geometry, k: usize, tol: f64, mu_max: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("eigenvalue index starts at 1".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol:e} out of range")));
    }
    if k == 1 {
        return Ok(0.0);
    }
    let target = (k - 1) as f64 * PI;
    let ode_tol = (tol * 1e-2).clamp(ODE_TOL_FLOOR, 1e-6);
    let theta = |mu: f64| theta_mu_at_r2(geom, mu, ode_tol);

    let mut lo = 0.0;
    let mut hi = (1.0 / geom.width().powi(2)).min(mu_max);
    loop {
        if theta(hi)? > target {
            break;
        }
        lo = hi;
        if hi >= mu_max {
            return Err(Error::EigenBracketNotFound { k, mu_max });
        }
        hi = (hi * 4.0).min(mu_max);
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta(mid)? > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of testing `f'(s0) > lambda_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub k: usize,
    pub holds: bool,
    /// `f'(s0) - lambda_{k+1}`.
    pub margin: f64,
    pub f_prime: f64,
    pub eigenvalue: f64,
}

pub fn check_hypothesis<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    k: usize,
) -> Result<HypothesisCheck> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let lambda = eigenvalue(geom, k + 1, DEFAULT_TOL)?;
    Ok(hypothesis_from(k, f_prime_at_s0(nl), lambda))
}

pub(crate) fn hypothesis_from(k: usize, f_prime: f64, lambda: f64) -> HypothesisCheck {
    let margin = f_prime - lambda;
    HypothesisCheck {
        k,
        holds: margin > 0.0,
        margin,
        f_prime,
        eigenvalue: lambda,
    }
}
