//! The shooting Cauchy problem
//!
//! ```text
//! u' = phi^{-1}(v / r^{N-1}),   v' = -r^{N-1} f_hat(u),   u(R1) = d,  v(R1) = 0
//! ```
//!
//! integrated from `R1` to `R2` with dense output. On a ball the equation is
//! singular at the origin, so the integration starts at a small radius `h0`
//! from the state obtained by freezing `f_hat(u) = f_hat(d)` on `[0, h0]`,
//! which agrees with the second-order Taylor start and stays valid when
//! `f_hat(d)` is so large that the slope saturates inside `[0, h0]`.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::Serialize;

use crate::curvature::{phi, phi_inv, Geometry, Nonlinearity};
use crate::dopri::{DenseStep, Dopri5};
use crate::error::{Error, Result};
use crate::output::fmt_num;

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

/// Radius of the frozen-coefficient start layer used when the slope
/// saturates on a scale the step-size controller cannot resolve.
const LAYER_FRACTION: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

/// Right-hand side `(u', v')` of the first-order system at `r > 0`.
pub fn rhs<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    r: f64,
    (u, v): (f64, f64),
) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let w = geom.weight(r);
    Ok((phi_inv(v / w), -w * nl.f_hat(u)))
}

/// State at `r = R1 + h` of the start layer, with `f_hat(u)` frozen at
/// `f_hat(d) = f_d`.
fn layer_state(geom: &Geometry, d: f64, f_d: f64, h: f64) -> (f64, f64) {
    let n = geom.dim() as f64;
    if geom.is_ball() {
        let c = f_d / n;
        let u = d - c * h * h / ((1.0 + (c * h).powi(2)).sqrt() + 1.0);
        let v = -f_d * h.powi(geom.dim() as i32) / n;
        (u, v)
    } else {
        let r1 = geom.r1();
        // (R1 + h)^N - R1^N without cancellation
        let shell = r1.powi(geom.dim() as i32) * (n * (h / r1).ln_1p()).exp_m1();
        let u = d - f_d * h * h / ((1.0 + (f_d * h).powi(2)).sqrt() + 1.0);
        (u, -f_d * shell / n)
    }
}

/// Start state at `r = h0` for a ball.
///
/// `u(h0) = d - f(d) h0^2 / (2N) + O(h0^4)` and `v(h0) = -f(d) h0^N / N +
/// O(h0^{N+2})`; the slope is obtained exactly for constant `f`, so `h0` may
/// exceed the Taylor radius `N / (2 |f(d)|)`.
pub fn origin_start<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    d: f64,
    h0: f64,
) -> Result<PhaseState> {
    if !geom.is_ball() {
        return Err(Error::OriginStartOnAnnulus(geom.r1()));
    }
    if !(h0 > 0.0 && h0 < geom.r2()) {
        return Err(Error::InvalidArgument(format!(
            "start radius h0 = {h0} must lie in (0, R2)"
        )));
    }
    check_datum(d)?;
    let (u, v) = layer_state(geom, d, nl.f_hat(d), h0);
    Ok(PhaseState { r: h0, u, v })
}

fn check_datum(d: f64) -> Result<()> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial datum d = {d} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Offset of the first integrator node from `R1`.
fn start_offset(geom: &Geometry, f_d: f64, tol: f64) -> f64 {
    let width = geom.width();
    let c = if geom.is_ball() {
        f_d.abs() / geom.dim() as f64
    } else {
        f_d.abs()
    };
    let layer = LAYER_FRACTION * width;
    let saturating = c > 0.0 && 0.5 / c < layer;
    if geom.is_ball() {
        let h = (1e-8 * width).max(tol.cbrt() * width * 1e-2);
        if c * h < 0.5 {
            h
        } else if saturating {
            layer
        } else {
            0.5 / c
        }
    } else if saturating {
        layer
    } else {
        0.0
    }
}

/// Dense numerical solution of the shooting problem on `[R1, R2]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    geom: Geometry,
    d: f64,
    tol: f64,
    /// Frozen value `f_hat(d)` and width of the start layer.
    f_d: f64,
    h0: f64,
    samples: Vec<PhaseState>,
    slopes: Vec<f64>,
    steps: Vec<DenseStep<2>>,
}

impl Trajectory {
    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn samples(&self) -> &[PhaseState] {
        &self.samples
    }

    /// `u'` at each sample.
    pub fn slope_samples(&self) -> &[f64] {
        &self.slopes
    }

    pub fn start_radius(&self) -> f64 {
        self.geom.r1() + self.h0
    }

    pub fn end(&self) -> PhaseState {
        *self.samples.last().expect("trajectory has samples")
    }

    /// Interpolated state at any `r` in `[R1, R2]` (clamped).
    pub fn state_at(&self, r: f64) -> PhaseState {
        let r = r.clamp(self.geom.r1(), self.geom.r2());
        if self.h0 > 0.0 && r <= self.start_radius() {
            let (u, v) = layer_state(&self.geom, self.d, self.f_d, r - self.geom.r1());
            return PhaseState { r, u, v };
        }
        let [u, v] = self.step_containing(r).eval(r);
        PhaseState { r, u, v }
    }

    fn step_containing(&self, r: f64) -> &DenseStep<2> {
        let idx = self.steps.partition_point(|st| st.x1() < r);
        &self.steps[idx.min(self.steps.len() - 1)]
    }

    /// `u'(r) = phi^{-1}(v / r^{N-1})` from the interpolated momentum.
    pub fn slope_at(&self, r: f64) -> f64 {
        let st = self.state_at(r);
        if st.r == 0.0 {
            0.0
        } else {
            phi_inv(st.v / self.geom.weight(st.r))
        }
    }

    /// `u'(r)` taken from the derivative of the interpolating polynomial.
    pub fn interpolant_slope(&self, r: f64) -> f64 {
        if self.h0 > 0.0 && r <= self.start_radius() {
            return self.slope_at(r);
        }
        self.step_containing(r).eval_derivative(r)[0]
    }

    pub fn min_u(&self) -> f64 {
        self.samples.iter().map(|s| s.u).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// CSV with header `r,u,v,uprime`, one row per accepted step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,u,v,uprime")?;
        for (s, du) in self.samples.iter().zip(&self.slopes) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_num(s.r),
                fmt_num(s.u),
                fmt_num(s.v),
                fmt_num(*du)
            )?;
        }
        Ok(())
    }

    /// Builds a trajectory directly from samples, with linear interpolation
    /// between them. Intended for synthetic inputs in checks.
    pub fn from_samples(geom: Geometry, d: f64, tol: f64, samples: Vec<PhaseState>) -> Self {
        let slopes = samples
            .iter()
            .map(|s| if s.r == 0.0 { 0.0 } else { phi_inv(s.v / geom.weight(s.r)) })
            .collect();
        let steps = samples
            .windows(2)
            .map(|w| DenseStep::linear(w[0].r, w[1].r, [w[0].u, w[0].v], [w[1].u, w[1].v]))
            .collect();
        Self {
            geom,
            d,
            tol,
            f_d: 0.0,
            h0: 0.0,
            samples,
            slopes,
            steps,
        }
    }
}

/// Adaptive 5(4) integrator for the shooting problem.
#[derive(Debug, Clone, Copy)]
pub struct IvpIntegrator {
    tol: f64,
    max_steps: usize,
}

impl IvpIntegrator {
    pub fn new(tol: f64) -> Result<Self> {
        if !(MIN_TOL..=MAX_TOL).contains(&tol) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {tol:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]"
            )));
        }
        Ok(Self {
            tol,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps.max(1);
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn integrate<N: Nonlinearity + ?Sized>(
        &self,
        geom: &Geometry,
        nl: &N,
        d: f64,
    ) -> Result<Trajectory> {
        check_datum(d)?;
        let tol = self.tol;
        let s0 = nl.s0();
        let r1 = geom.r1();
        let width = geom.width();
        let f_d = nl.f_hat(d);
        let h0 = start_offset(geom, f_d, tol);

        let mut samples = vec![PhaseState { r: r1, u: d, v: 0.0 }];
        let (x0, y0) = if h0 > 0.0 {
            let (u, v) = layer_state(geom, d, f_d, h0);
            samples.push(PhaseState { r: r1 + h0, u, v });
            (r1 + h0, [u, v])
        } else {
            (r1, [d, 0.0])
        };

        let v_bound = momentum_bound(geom, nl, d);
        let stepper = Dopri5 {
            rtol: tol,
            atol: tol,
            h_max: width / 16.0,
            h_min: 1e-14 * width,
            max_steps: self.max_steps,
        };
        let field = |r: f64, y: &[f64; 2]| -> [f64; 2] {
            let w = geom.weight(r);
            [phi_inv(y[1] / w), -w * nl.f_hat(y[0])]
        };
        let admissible = |old: &[f64; 2], new: &[f64; 2]| -> bool {
            if !(new[1].abs() <= v_bound) {
                return false;
            }
            let a0 = (-old[1]).atan2(old[0] - s0);
            let a1 = (-new[1]).atan2(new[0] - s0);
            wrap_angle(a1 - a0).abs() < FRAC_PI_2
        };
        let sol = stepper
            .integrate(field, x0, y0, geom.r2(), admissible)
            .map_err(|e| Error::IntegrationFailure {
                r: e.position(),
                reason: e.reason(),
            })?;

        samples.extend(
            sol.xs
                .iter()
                .zip(&sol.ys)
                .skip(1)
                .map(|(&r, y)| PhaseState { r, u: y[0], v: y[1] }),
        );
        let slopes = samples
            .iter()
            .map(|s| if s.r == 0.0 { 0.0 } else { phi_inv(s.v / geom.weight(s.r)) })
            .collect();
        Ok(Trajectory {
            geom: *geom,
            d,
            tol,
            f_d,
            h0,
            samples,
            slopes,
            steps: sol.steps,
        })
    }
}

/// Integrates the shooting problem with initial datum `d` at relative
/// tolerance `tol`.
pub fn integrate_ivp<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    d: f64,
    tol: f64,
) -> Result<Trajectory> {
    IvpIntegrator::new(tol)?.integrate(geom, nl, d)
}

/// A priori bound on `|v|`: `|u|` stays below `d + R2 - R1`, so
/// `|v(r)| <= (R2^N - R1^N)/N * max |f_hat|` over that range. Returned with
/// a safety factor, as the rejection threshold for trial steps.
fn momentum_bound<N: Nonlinearity + ?Sized>(geom: &Geometry, nl: &N, d: f64) -> f64 {
    const SAMPLES: usize = 2048;
    let top = d + geom.width();
    let max_f = (0..=SAMPLES)
        .map(|i| nl.f_hat(top * i as f64 / SAMPLES as f64).abs())
        .fold(0.0, f64::max);
    let n = geom.dim() as f64;
    let shell = (geom.r2().powi(geom.dim() as i32) - geom.r1().powi(geom.dim() as i32)) / n;
    4.0 * shell * max_f + 1e-12
}

/// Wraps an angle difference into `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Conserved quantity for `N = 1`: `1/sqrt(1 - u'^2) + F(u)` written as
/// `sqrt(1 + v^2) + F(u)`.
pub fn energy_1d(state: &PhaseState, primitive: impl Fn(f64) -> f64) -> f64 {
    (1.0 + state.v * state.v).sqrt() + primitive(state.u)
}

/// Momentum `r^{N-1} phi(u')` for a given slope; errors if `|u'| >= 1`.
pub fn momentum(geom: &Geometry, r: f64, slope: f64) -> Result<f64> {
    Ok(geom.weight(r) * phi(slope)?)
}
