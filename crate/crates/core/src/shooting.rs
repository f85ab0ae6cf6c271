//! Shooting on the initial datum `d`.
//!
//! For `d < s0` the angle starts at `pi` and a Neumann solution with `j`
//! interior crossings of `s0` corresponds to `theta_d(R2) = (j + 1) pi`; for
//! `d > s0` the angle starts at `0` and the target is `j pi`. Roots of
//! `d -> theta_d(R2) - target` are bracketed on a graded grid and bisected.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{Geometry, Nonlinearity};
use crate::eigen::check_hypothesis;
use crate::error::{Error, IncompleteSolve, Result};
use crate::ivp::{IvpIntegrator, Trajectory, DEFAULT_MAX_STEPS};
use crate::polar::to_polar;

/// Lower end of the below-side scan; `d = 0` is the trivial solution.
pub const D_MIN: f64 = 1e-8;

/// Gap left around `s0`, relative to `s0`.
pub const D_GAP_FRACTION: f64 = 1e-6;

pub const DEFAULT_GRID_SIZE: usize = 256;
pub const DEFAULT_ACCEPT_TOL: f64 = 1e-8;

/// Growth ratio of the grid spacing away from `s0`.
const CLUSTER_RATIO: f64 = 1.2;

/// Bisection stops as soon as `|theta_d(R2) - target|` falls below this.
const CONVERGED_ANGLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

impl Side {
    pub fn of(d: f64, s0: f64) -> Side {
        if d < s0 {
            Side::Below
        } else {
            Side::Above
        }
    }

    pub fn theta_start(self) -> f64 {
        match self {
            Side::Below => PI,
            Side::Above => 0.0,
        }
    }

    /// Angle `theta(R2)` of a solution with `j` interior crossings.
    pub fn target(self, j: usize) -> f64 {
        self.theta_start() + j as f64 * PI
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Below => "below",
            Side::Above => "above",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ShotResult {
    pub d: f64,
    pub side: Side,
    pub theta_start: f64,
    pub theta_end: f64,
    pub half_turns: usize,
    pub crossings: usize,
    pub traj: Trajectory,
}

impl ShotResult {
    pub fn summary(&self) -> ShotSummary {
        ShotSummary {
            d: self.d,
            side: self.side,
            theta_end: self.theta_end,
            half_turns: self.half_turns,
        }
    }
}

/// A shot without its trajectory, as kept by [`scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotSummary {
    pub d: f64,
    pub side: Side,
    pub theta_end: f64,
    pub half_turns: usize,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Integrator tolerance for every shot.
    pub tol: f64,
    /// Scan points per side.
    pub grid_size: usize,
    /// Largest accepted `|v(R2)|`.
    pub accept_tol: f64,
    /// Upper end of the above-side scan when it should pass `d*`.
    pub extended_range: Option<f64>,
    /// Extra scan points, typically roots from a nearby problem.
    pub seeds: Vec<f64>,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            grid_size: DEFAULT_GRID_SIZE,
            accept_tol: DEFAULT_ACCEPT_TOL,
            extended_range: None,
            seeds: Vec::new(),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    fn integrator(&self) -> Result<IvpIntegrator> {
        Ok(IvpIntegrator::new(self.tol)?.with_max_steps(self.max_steps))
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(1e-10)
    }
}

/// A Neumann solution found by [`solve_all`].
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub d: f64,
    pub side: Side,
    pub crossings: usize,
    /// `|v(R2)|`.
    pub endpoint_residual: f64,
    pub min_u: f64,
    pub max_slope: f64,
    pub traj: Trajectory,
}

/// `s0 + R2 - R1`: above this datum the angle cannot reach `pi`.
pub fn d_star<N: Nonlinearity + ?Sized>(geom: &Geometry, nl: &N) -> f64 {
    nl.s0() + geom.width()
}

pub fn shoot<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    d: f64,
    tol: f64,
) -> Result<ShotResult> {
    shoot_with(&IvpIntegrator::new(tol)?, geom, nl, d)
}

pub(crate) fn shoot_with<N: Nonlinearity + ?Sized>(
    integ: &IvpIntegrator,
    geom: &Geometry,
    nl: &N,
    d: f64,
) -> Result<ShotResult> {
    let s0 = nl.s0();
    if d == s0 {
        return Err(Error::InvalidArgument(format!(
            "d = {d} is the equilibrium s0 and cannot be shot"
        )));
    }
    let traj = integ.integrate(geom, nl, d)?;
    let path = to_polar(&traj, s0, 1.0)?;
    Ok(ShotResult {
        d,
        side: Side::of(d, s0),
        theta_start: path.theta_start(),
        theta_end: path.theta_end(),
        half_turns: path.half_turns(),
        crossings: path.crossings().count,
        traj,
    })
}

/// Scan data `d` for one side, ordered by `d`.
pub fn scan_grid<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    side: Side,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    if config.grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "scan grid needs at least 2 points, got {}",
            config.grid_size
        )));
    }
    let s0 = nl.s0();
    let gap = D_GAP_FRACTION * s0;
    let end = match side {
        Side::Below => D_MIN,
        Side::Above => config.extended_range.unwrap_or_else(|| d_star(geom, nl)),
    };
    let span = (end - s0).abs();
    if !(span > gap) {
        return Ok(Vec::new());
    }
    let sign = match side {
        Side::Below => -1.0,
        Side::Above => 1.0,
    };

    let to_d = |delta: f64| if delta == span { end } else { s0 + sign * delta };
    let mut grid: Vec<f64> = graded_offsets(gap, span, config.grid_size)
        .into_iter()
        .map(to_d)
        .collect();
    for &seed in &config.seeds {
        let delta = sign * (seed - s0);
        if delta > gap && delta < span {
            grid.push(seed);
            grid.extend([0.99 * delta, 1.01 * delta].map(|x| to_d(x.clamp(gap, span))));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// `n` distances from `gap` to `span`: steps grow geometrically with ratio
/// [`CLUSTER_RATIO`] until they reach a uniform cap chosen to use all `n`.
fn graded_offsets(gap: f64, span: f64, n: usize) -> Vec<f64> {
    let ratio = CLUSTER_RATIO - 1.0;
    let walk = |cap: f64, limit: usize| -> Vec<f64> {
        let mut out = vec![gap];
        let mut delta = gap;
        while delta < span && out.len() <= limit {
            delta = (delta + (ratio * delta).min(cap)).min(span);
            out.push(delta);
        }
        out
    };
    let geometric = walk(f64::INFINITY, n);
    if geometric.len() >= n {
        let growth = (span / gap).powf(1.0 / (n - 1) as f64);
        let mut out: Vec<f64> = (0..n).map(|i| gap * growth.powi(i as i32)).collect();
        out[n - 1] = span;
        return out;
    }
    // the count decreases with the cap; find the smallest cap that fits
    let (mut lo, mut hi) = (0.5 * span / n as f64, span);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if walk(mid, n).len() <= n {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    walk(hi, n)
}

/// Shoots every grid point of one side, in parallel, ordered by `d`.
pub fn scan<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    side: Side,
    config: &SolverConfig,
) -> Result<Vec<ShotSummary>> {
    let integ = config.integrator()?;
    let grid = scan_grid(geom, nl, side, config)?;
    grid.par_iter()
        .map(|&d| shoot_with(&integ, geom, nl, d).map(|s| s.summary()))
        .collect()
}

/// Consecutive scan entries on opposite sides of `target`. A value exactly
/// on the target counts as above it.
pub fn brackets(shots: &[ShotSummary], target: f64) -> Vec<(f64, f64)> {
    shots
        .windows(2)
        .filter(|w| (w[0].theta_end >= target) != (w[1].theta_end >= target))
        .map(|w| (w[0].d, w[1].d))
        .collect()
}

/// Bisects `theta_d(R2) = target_angle` inside `bracket` until its width is
/// at most `tol * max(1, s0)`.
pub fn refine_root<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    bracket: (f64, f64),
    target_angle: f64,
    tol: f64,
) -> Result<f64> {
    refine_with(&IvpIntegrator::new(tol)?, geom, nl, bracket, target_angle)
}

fn refine_with<N: Nonlinearity + ?Sized>(
    integ: &IvpIntegrator,
    geom: &Geometry,
    nl: &N,
    (lo, hi): (f64, f64),
    target: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let g = |d: f64| -> Result<f64> { Ok(shoot_with(integ, geom, nl, d)?.theta_end - target) };
    let invalid = || Error::InvalidBracket { lo, hi, target };
    let s0 = nl.s0();
    if lo < s0 && hi >= s0 || !(lo >= 0.0) {
        return Err(invalid());
    }
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    let lo_above = g_lo >= 0.0;
    if lo_above == (g_hi >= 0.0) {
        return Err(invalid());
    }
    let width = integ.tol() * s0.max(1.0);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid)?;
        if g_mid.abs() <= CONVERGED_ANGLE {
            return Ok(mid);
        }
        if (g_mid >= 0.0) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Re-shoots a root and accepts it if it is a positive, non-constant
/// Neumann solution with `j` crossings.
fn accept_root<N: Nonlinearity + ?Sized>(
    integ: &IvpIntegrator,
    geom: &Geometry,
    nl: &N,
    d: f64,
    j: usize,
    accept_tol: f64,
) -> Result<Option<SolutionProfile>> {
    let shot = shoot_with(integ, geom, nl, d)?;
    let traj = shot.traj;
    let s0 = nl.s0();
    let endpoint_residual = traj.end().v.abs();
    let min_u = traj.min_u();
    let max_slope = traj.max_abs_slope();
    let amplitude = traj
        .samples()
        .iter()
        .map(|s| (s.u - s0).abs())
        .fold(0.0, f64::max);
    let ok = endpoint_residual <= accept_tol
        && min_u > 0.0
        && max_slope < 1.0
        && shot.crossings == j
        && amplitude > 10.0 * integ.tol();
    Ok(ok.then_some(SolutionProfile {
        d,
        side: shot.side,
        crossings: j,
        endpoint_residual,
        min_u,
        max_slope,
        traj,
    }))
}

/// Finds Neumann solutions with `1..=k` crossings on both sides of `s0`.
///
/// Fails with [`Error::HypothesisFailed`] unless `f'(s0) > lambda_{k+1}`,
/// and with [`Error::Incomplete`] if some `(side, j)` has no root.
pub fn solve_all<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    k: usize,
    config: &SolverConfig,
) -> Result<Vec<SolutionProfile>> {
    let check = check_hypothesis(geom, nl, k)?;
    if !check.holds {
        return Err(Error::HypothesisFailed {
            k,
            margin: check.margin,
        });
    }
    solve_unchecked(geom, nl, k, config)
}

/// [`solve_all`] without the eigenvalue test.
pub(crate) fn solve_unchecked<N: Nonlinearity + ?Sized>(
    geom: &Geometry,
    nl: &N,
    k: usize,
    config: &SolverConfig,
) -> Result<Vec<SolutionProfile>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let integ = config.integrator()?;
    let (below, above) = rayon::join(
        || scan(geom, nl, Side::Below, config),
        || scan(geom, nl, Side::Above, config),
    );
    let (below, above) = (below?, above?);

    let jobs: Vec<(Side, usize, (f64, f64))> = [(Side::Below, &below), (Side::Above, &above)]
        .into_iter()
        .flat_map(|(side, shots)| {
            (1..=k).flat_map(move |j| {
                brackets(shots, side.target(j))
                    .into_iter()
                    .map(move |b| (side, j, b))
            })
        })
        .collect();

    let found: Vec<Option<SolutionProfile>> = jobs
        .par_iter()
        .map(|&(side, j, bracket)| {
            let d = refine_with(&integ, geom, nl, bracket, side.target(j))?;
            accept_root(&integ, geom, nl, d, j, config.accept_tol)
        })
        .collect::<Result<_>>()?;

    let mut profiles: Vec<SolutionProfile> = found.into_iter().flatten().collect();
    profiles.sort_by(|a, b| {
        (a.side, a.crossings)
            .cmp(&(b.side, b.crossings))
            .then(a.d.total_cmp(&b.d))
    });
    let merge = 10.0 * config.tol;
    profiles.dedup_by(|b, a| a.side == b.side && a.crossings == b.crossings && (b.d - a.d).abs() < merge);

    let missing: Vec<(Side, usize)> = [Side::Below, Side::Above]
        .into_iter()
        .flat_map(|side| (1..=k).map(move |j| (side, j)))
        .filter(|&(side, j)| !profiles.iter().any(|p| p.side == side && p.crossings == j))
        .collect();
    if !missing.is_empty() {
        let scan = below.into_iter().chain(above).collect();
        return Err(Error::Incomplete(Box::new(IncompleteSolve {
            k,
            missing,
            profiles,
            scan,
        })));
    }
    Ok(profiles)
}
