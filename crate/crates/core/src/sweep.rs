//! Natural-parameter sweep in the exponent `q` of `f(s) = s^{q-1} - s^{r-1}`.
//!
//! At each grid value the number of guaranteed branches `k` is the largest
//! `k <= k_max` with `q - r > lambda_{k+1}`; the solver then looks for roots
//! with `1..=k` crossings on both sides of `s0 = 1`, seeded with the roots
//! of the previous grid value.

use std::io::Write;

use serde::Serialize;

use crate::curvature::{Geometry, PowerNonlinearity};
use crate::eigen::{eigenvalue, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::output::fmt_num;
use crate::shooting::{solve_unchecked, Side, SolverConfig};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// The exponent `r` of the absorption term.
    pub r_exp: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    /// Number of grid values, endpoints included.
    pub q_steps: usize,
    pub k_max: usize,
    pub tol: f64,
    /// Scan points per side for every solve.
    pub grid_size: usize,
    pub max_steps: usize,
}

impl SweepConfig {
    pub fn new(r_exp: f64, q_lo: f64, q_hi: f64) -> Self {
        let base = SolverConfig::default();
        Self {
            r_exp,
            q_lo,
            q_hi,
            q_steps: 200,
            k_max: 2,
            tol: base.tol,
            grid_size: base.grid_size,
            max_steps: base.max_steps,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.q_steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.q_hi
                } else {
                    self.q_lo + (self.q_hi - self.q_lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.q_lo > self.r_exp) {
            return Err(Error::InvalidArgument(format!(
                "q_lo = {} must exceed r = {}",
                self.q_lo, self.r_exp
            )));
        }
        if !(self.q_hi >= self.q_lo && self.q_hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need q_lo <= q_hi, got [{}, {}]",
                self.q_lo, self.q_hi
            )));
        }
        if self.q_steps < 2 {
            return Err(Error::InvalidArgument("q_steps must be at least 2".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub q: f64,
    pub d: f64,
    pub side: Side,
    pub crossings: usize,
    pub u_at_r1: f64,
}

/// A grid value where the solve was incomplete or failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGap {
    pub q: f64,
    pub k: usize,
    pub missing: Vec<(Side, usize)>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    /// Branch count `k` attempted at each grid value (0 = none admissible).
    pub k: Vec<usize>,
    pub points: Vec<BranchPoint>,
    pub gaps: Vec<SweepGap>,
}

/// Where branch `j` first shows up on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Onset {
    /// First grid value `hi` with a point, and the grid value before it.
    Interval { lo: Option<f64>, hi: f64 },
    Absent,
}

impl Onset {
    pub fn contains(&self, q: f64) -> bool {
        match *self {
            Onset::Interval { lo, hi } => lo.is_none_or(|lo| lo < q) && q <= hi,
            Onset::Absent => false,
        }
    }
}

impl SweepResult {
    pub fn onset(&self, j: usize) -> Onset {
        detect_branch_onset(&self.grid, &self.points, j)
    }

    /// Grid values where a solve was attempted.
    pub fn attempted(&self) -> usize {
        self.k.iter().filter(|&&k| k > 0).count()
    }

    /// True when a solve was attempted and every attempt failed.
    pub fn all_failed(&self) -> bool {
        let attempted = self.attempted();
        attempted > 0 && self.gaps.len() >= attempted
    }

    /// CSV with header `q,side,crossings,d`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q,side,crossings,d")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", fmt_num(p.q), p.side, p.crossings, fmt_num(p.d))?;
        }
        Ok(())
    }

    /// One block of `q u(R1)` rows per `(side, crossings)` branch, blocks
    /// separated by two blank lines for gnuplot's `index`.
    pub fn write_gnuplot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut keys: Vec<(Side, usize)> = self.points.iter().map(|p| (p.side, p.crossings)).collect();
        keys.sort();
        keys.dedup();
        for (i, (side, j)) in keys.into_iter().enumerate() {
            if i > 0 {
                writeln!(out, "\n")?;
            }
            writeln!(out, "# side={side} crossings={j}")?;
            for p in self.points.iter().filter(|p| p.side == side && p.crossings == j) {
                writeln!(out, "{} {}", fmt_num(p.q), fmt_num(p.u_at_r1))?;
            }
        }
        Ok(())
    }

    pub fn write_gaps<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for g in &self.gaps {
            writeln!(out, "q={} k={}: {}", fmt_num(g.q), g.k, g.message)?;
        }
        Ok(())
    }
}

/// Smallest grid value carrying a point with `j` crossings, with the
/// preceding grid value as the lower end.
pub fn detect_branch_onset(grid: &[f64], points: &[BranchPoint], j: usize) -> Onset {
    let first = grid
        .iter()
        .position(|&q| points.iter().any(|p| p.q == q && p.crossings == j));
    match first {
        Some(i) => Onset::Interval {
            lo: i.checked_sub(1).map(|p| grid[p]),
            hi: grid[i],
        },
        None => Onset::Absent,
    }
}

pub fn sweep_q(geom: &Geometry, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    // lambda_2 .. lambda_{k_max + 1}
    let lambdas: Vec<f64> = (2..=config.k_max + 1)
        .map(|k| eigenvalue(geom, k, DEFAULT_TOL))
        .collect::<Result<_>>()?;

    let grid = config.grid();
    let mut result = SweepResult {
        grid: grid.clone(),
        k: Vec::with_capacity(grid.len()),
        points: Vec::new(),
        gaps: Vec::new(),
    };
    let mut seeds: Vec<f64> = Vec::new();
    for &q in &grid {
        let nl = PowerNonlinearity::new(q, config.r_exp)?;
        let margin = q - config.r_exp;
        let k = lambdas.iter().take_while(|&&l| margin > l).count();
        result.k.push(k);
        if k == 0 {
            continue;
        }
        let solver = SolverConfig {
            tol: config.tol,
            grid_size: config.grid_size,
            seeds: std::mem::take(&mut seeds),
            max_steps: config.max_steps,
            ..SolverConfig::default()
        };
        let profiles = match solve_unchecked(geom, &nl, k, &solver) {
            Ok(p) => p,
            Err(e) => {
                let message = e.to_string();
                let (missing, partial) = match e {
                    Error::Incomplete(inc) => (inc.missing, inc.profiles),
                    _ => (Vec::new(), Vec::new()),
                };
                result.gaps.push(SweepGap { q, k, missing, message });
                partial
            }
        };
        seeds = profiles.iter().map(|p| p.d).collect();
        result.points.extend(profiles.iter().map(|p| BranchPoint {
            q,
            d: p.d,
            side: p.side,
            crossings: p.crossings,
            u_at_r1: p.traj.samples()[0].u,
        }));
    }
    Ok(result)
}
