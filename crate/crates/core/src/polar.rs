//! Scaled polar coordinates around the equilibrium `(s0, 0)`:
//!
//! ```text
//! u - s0 = rho cos(theta),   v = -alpha rho sin(theta)
//! ```
//!
//! Solutions turn clockwise in the `(u, v)` plane, so `theta` increases
//! along every non-constant trajectory. Zeros of `u - s0` sit at
//! `theta = (m + 1/2) pi`, zeros of `v` at multiples of `pi`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::curvature::{phi_inv, Geometry, Nonlinearity};
use crate::error::{Error, Result};
use crate::ivp::{wrap_angle, PhaseState, Trajectory};
use crate::output::fmt_num;

/// Largest tolerated decrease of the unwrapped angle between samples.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Distance below which `theta(R2)` counts as sitting on a crossing angle.
pub const TIE_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PolarPath {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: f64,
    pub s0: f64,
}

/// Number of interior zeros of `u - s0`, with a flag raised when the end
/// angle lands within [`TIE_WINDOW`] of a crossing angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossings {
    pub count: usize,
    pub tie: bool,
}

impl PolarPath {
    pub fn theta_start(&self) -> f64 {
        self.theta[0]
    }

    pub fn theta_end(&self) -> f64 {
        *self.theta.last().expect("non-empty path")
    }

    pub fn winding(&self) -> f64 {
        (self.theta_end() - self.theta_start()).max(0.0)
    }

    pub fn half_turns(&self) -> usize {
        (self.winding() / PI).floor() as usize
    }

    pub fn crossings(&self) -> Crossings {
        crossings_between(self.theta_start(), self.theta_end())
    }

    /// CSV with header `r,theta,rho`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,theta,rho")?;
        for ((r, t), p) in self.r.iter().zip(&self.theta).zip(&self.rho) {
            writeln!(out, "{},{},{}", fmt_num(*r), fmt_num(*t), fmt_num(*p))?;
        }
        Ok(())
    }
}

/// Angle of a single state, in `(-pi, pi]`.
pub fn raw_angle(state: &PhaseState, s0: f64, alpha: f64) -> f64 {
    // `+ 0.0` turns -0.0 into +0.0 so that v = 0, u < s0 gives +pi
    (-state.v / alpha + 0.0).atan2(state.u - s0)
}

pub fn to_polar(traj: &Trajectory, s0: f64, alpha: f64) -> Result<PolarPath> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    if traj.d() == s0 {
        return Err(Error::InvalidArgument(
            "the equilibrium datum d = s0 has no polar angle".into(),
        ));
    }
    let samples = traj.samples();
    let mut path = PolarPath {
        r: Vec::with_capacity(samples.len()),
        theta: Vec::with_capacity(samples.len()),
        rho: Vec::with_capacity(samples.len()),
        alpha,
        s0,
    };
    let mut prev_raw = 0.0;
    for (index, st) in samples.iter().enumerate() {
        let rho = (st.u - s0).hypot(st.v / alpha);
        if !(rho > 0.0) {
            return Err(Error::DegeneratePath { index, r: st.r });
        }
        let raw = raw_angle(st, s0, alpha);
        let theta = if index == 0 {
            if raw < 0.0 {
                raw + TAU
            } else {
                raw
            }
        } else {
            let step = wrap_angle(raw - prev_raw);
            if step < -MONOTONE_SLACK {
                return Err(Error::NonMonotoneAngle {
                    index,
                    r: st.r,
                    decrement: -step,
                });
            }
            path.theta[index - 1] + step
        };
        prev_raw = raw;
        path.r.push(st.r);
        path.theta.push(theta);
        path.rho.push(rho);
    }
    Ok(path)
}

/// Total angle `theta(R2) - theta(R1)` swept with `alpha = 1`.
pub fn winding(traj: &Trajectory, s0: f64) -> Result<f64> {
    Ok(to_polar(traj, s0, 1.0)?.winding())
}

/// `floor(winding / pi)`: the number of zeros of `v` in `(R1, R2]`.
pub fn half_turns(traj: &Trajectory, s0: f64) -> Result<usize> {
    half_turns_scaled(traj, s0, 1.0)
}

pub fn half_turns_scaled(traj: &Trajectory, s0: f64, alpha: f64) -> Result<usize> {
    Ok(to_polar(traj, s0, alpha)?.half_turns())
}

pub fn crossing_count(traj: &Trajectory, s0: f64) -> Result<Crossings> {
    Ok(to_polar(traj, s0, 1.0)?.crossings())
}

/// Counts the integers `m` with `start < (m + 1/2) pi < end`.
pub fn crossings_between(start: f64, end: f64) -> Crossings {
    let lo = (start / PI - 0.5).floor() + 1.0;
    let hi = (end / PI - 0.5).ceil() - 1.0;
    let count = if hi >= lo { (hi - lo) as usize + 1 } else { 0 };
    let nearest = ((end / PI - 0.5).round() + 0.5) * PI;
    Crossings {
        count,
        tie: (end - nearest).abs() <= TIE_WINDOW,
    }
}

/// Angular velocity `theta'` from the polar form of the system, used as an
/// independent cross-check of the unwrapped angle.
pub fn angle_rate<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    state: &PhaseState,
    alpha: f64,
) -> f64 {
    let s0 = nl.s0();
    let w = geom.weight(state.r);
    let du = state.u - s0;
    let rho2 = du * du + (state.v / alpha).powi(2);
    (phi_inv(state.v / w) * state.v + w * nl.f_hat(state.u) * du) / (alpha * rho2)
}
