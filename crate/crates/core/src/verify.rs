//! Independent a-posteriori checks of a computed solution.

use serde::Serialize;

use crate::curvature::{phi, Geometry, Nonlinearity};
use crate::ivp::{IvpIntegrator, Trajectory, MIN_TOL};
use crate::polar::to_polar;
use crate::shooting::SolutionProfile;

/// Largest accepted `|u'(R2)|`.
pub const ENDPOINT_LIMIT: f64 = 1e-7;

/// Largest accepted curvature residual, relative to the size of the terms
/// it balances. The interpolant slope at mid-step carries an error near the
/// integrator tolerance, magnified by `phi'(u')` when `|u'|` is close to one
/// and by the division by the half-step width.
pub const RESIDUAL_LIMIT: f64 = 1e-4;

/// Points of the sign-change scan.
pub const SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub d: f64,
    /// Tolerance of the re-integration.
    pub tol: f64,
    pub endpoint_slope: f64,
    pub min_u: f64,
    /// Largest mean of `(r^{N-1} phi(u'))' + r^{N-1} f(u)` over half steps.
    pub curvature_residual: f64,
    /// [`Self::curvature_residual`] divided by `max(1, max |r^{N-1} f(u)|)`.
    pub relative_residual: f64,
    pub crossings_angle: usize,
    pub crossings_scan: usize,
    pub endpoint_ok: bool,
    pub positive: bool,
    pub residual_ok: bool,
    pub crossings_agree: bool,
    /// Set when the re-integration itself failed.
    pub error: Option<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.endpoint_ok
            && self.positive
            && self.residual_ok
            && self.crossings_agree
    }
}

/// Re-integrates `profile.d` at a hundredth of the original tolerance and
/// checks the boundary condition, positivity, the equation itself and the
/// crossing count.
pub fn verify_solution<N: Nonlinearity + ?Sized>(
    profile: &SolutionProfile,
    geom: &Geometry,
    nl: &N,
) -> VerificationReport {
    let tol = (profile.traj.tol() * 1e-2).max(MIN_TOL);
    let mut report = VerificationReport {
        d: profile.d,
        tol,
        endpoint_slope: f64::NAN,
        min_u: profile.min_u,
        curvature_residual: f64::NAN,
        relative_residual: f64::NAN,
        crossings_angle: profile.crossings,
        crossings_scan: usize::MAX,
        endpoint_ok: false,
        positive: false,
        residual_ok: false,
        crossings_agree: false,
        error: None,
    };
    let traj = match IvpIntegrator::new(tol).and_then(|i| i.integrate(geom, nl, profile.d)) {
        Ok(t) => t,
        Err(e) => {
            report.error = Some(e.to_string());
            report.positive = profile.min_u > 0.0;
            return report;
        }
    };
    let s0 = nl.s0();

    report.endpoint_slope = traj.slope_at(geom.r2()).abs();
    report.endpoint_ok = report.endpoint_slope <= ENDPOINT_LIMIT;

    report.min_u = profile.min_u.min(traj.min_u());
    report.positive = report.min_u > 0.0;

    let (abs, scale) = curvature_residual(&traj, nl);
    report.curvature_residual = abs;
    report.relative_residual = abs / scale.max(1.0);
    report.residual_ok = report.relative_residual <= RESIDUAL_LIMIT;

    let angle = if profile.d == s0 {
        Ok(0)
    } else {
        to_polar(&traj, s0, 1.0).map(|p| p.crossings().count)
    };
    report.crossings_scan = sign_changes(&traj, s0, SCAN_POINTS);
    match angle {
        Ok(count) => {
            report.crossings_angle = count;
            report.crossings_agree =
                count == report.crossings_scan && count == profile.crossings;
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// Sign changes of `u - s0` on `n + 1` equispaced radii of the dense output.
/// Exact zeros inherit the previous sign.
pub fn sign_changes(traj: &Trajectory, s0: f64, n: usize) -> usize {
    let geom = traj.geometry();
    let (a, b) = (geom.r1(), geom.r2());
    let mut count = 0;
    let mut prev = 0.0f64;
    for i in 0..=n {
        let r = a + (b - a) * i as f64 / n as f64;
        let du = traj.state_at(r).u - s0;
        if du != 0.0 {
            if prev != 0.0 && du.signum() != prev.signum() {
                count += 1;
            }
            prev = du;
        }
    }
    count
}

/// Weak form of the equation on each half of every recorded step:
/// `|z(b) - z(a) + int_a^b s^{N-1} f_hat(u(s)) ds| / (b - a)` with
/// `z = r^{N-1} phi(u')` and `u'` taken from the interpolant derivative.
///
/// Returns the maximum and the largest `|r^{N-1} f_hat(u)|` seen.
fn curvature_residual<N: Nonlinearity + ?Sized>(traj: &Trajectory, nl: &N) -> (f64, f64) {
    // five-point Gauss-Legendre on [0, 1]
    const NODES: [f64; 5] = [
        0.046_910_077_030_668,
        0.230_765_344_947_158_5,
        0.5,
        0.769_234_655_052_841_5,
        0.953_089_922_969_332,
    ];
    const WEIGHTS: [f64; 5] = [
        0.118_463_442_528_094_5,
        0.239_314_335_249_683_2,
        0.284_444_444_444_444_4,
        0.239_314_335_249_683_2,
        0.118_463_442_528_094_5,
    ];
    let geom = traj.geometry();
    let z = |r: f64| -> f64 {
        let slope = traj.interpolant_slope(r);
        geom.weight(r) * phi(slope).unwrap_or(f64::INFINITY.copysign(slope))
    };
    let source = |r: f64| geom.weight(r) * nl.f_hat(traj.state_at(r).u);

    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let start = traj.start_radius();
    let radii: Vec<f64> = traj
        .samples()
        .iter()
        .map(|s| s.r)
        .filter(|&r| r >= start)
        .collect();
    for w in radii.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        for (a, b) in [(w[0], mid), (mid, w[1])] {
            let h = b - a;
            if !(h > 0.0) {
                continue;
            }
            let mut integral = 0.0;
            for (x, wt) in NODES.iter().zip(WEIGHTS) {
                let f = source(a + x * h);
                scale = scale.max(f.abs());
                integral += wt * f;
            }
            let res = ((z(b) - z(a)) / h + integral).abs();
            worst = worst.max(res);
        }
    }
    (worst, scale)
}
