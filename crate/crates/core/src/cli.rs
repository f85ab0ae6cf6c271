//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::curvature::{Geometry, Nonlinearity, PowerNonlinearity};
use crate::eigen::eigenvalue_bounded;
use crate::error::{Error, Result};
use crate::ivp::{IvpIntegrator, DEFAULT_MAX_STEPS};
use crate::output::ensure_dir;
use crate::polar::to_polar;
use crate::shooting::{shoot_with, solve_all, Side, SolutionProfile, SolverConfig};
use crate::sweep::{sweep_q, SweepConfig};
use crate::verify::verify_solution;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EIGEN: i32 = 2;
pub const EXIT_INTEGRATION: i32 = 3;
pub const EXIT_HYPOTHESIS: i32 = 4;
pub const EXIT_INCOMPLETE: i32 = 5;
pub const EXIT_SWEEP_FAILED: i32 = 6;
pub const EXIT_VERIFY_FAILED: i32 = 7;

#[derive(Debug, Parser)]
#[command(
    name = "minkshoot",
    version,
    about = "Radial Neumann solutions of the Minkowski-curvature equation by shooting",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Space dimension [default: 1]
    #[arg(long = "N", global = true)]
    pub n: Option<u32>,
    /// Inner radius, 0 for a ball [default: 0]
    #[arg(long = "R1", global = true)]
    pub r1: Option<f64>,
    /// Outer radius [default: 1]
    #[arg(long = "R2", global = true)]
    pub r2: Option<f64>,
    /// Exponent q of f(s) = s^(q-1) - s^(r-1) [default: 15]
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Exponent r of f(s) = s^(q-1) - s^(r-1) [default: 3]
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Integrator and bisection tolerance [default: 1e-10]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for CSV and data files
    #[arg(long, global = true, default_value = "minkshoot-out")]
    pub out: PathBuf,
    /// JSON file with keys N, R1, R2, q, r, tol; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Step limit per integration
    #[arg(long = "max-steps", global = true)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the radial Neumann eigenvalues lambda_1..lambda_kmax
    Eigen {
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        #[arg(long = "mu-max", default_value_t = 1e12)]
        mu_max: f64,
    },
    /// Integrate from u(R1) = d and report the winding
    Shoot {
        #[arg(long)]
        d: f64,
    },
    /// Find the 2k guaranteed solutions
    Solve {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long = "accept-tol", default_value_t = 1e-8)]
        accept_tol: f64,
        /// Scan points per side
        #[arg(long, env = "MINKSHOOT_SEED_GRID")]
        grid: Option<usize>,
        /// Scan the above side up to this datum instead of s0 + R2 - R1
        #[arg(long = "extended-range")]
        extended_range: Option<f64>,
    },
    /// Re-check the solution through u(R1) = d
    Verify {
        #[arg(long)]
        d: f64,
    },
    /// Sweep q and write bifurcation data
    Sweep {
        #[arg(long = "q-lo", default_value_t = 4.0)]
        q_lo: f64,
        #[arg(long = "q-hi", default_value_t = 50.0)]
        q_hi: f64,
        #[arg(long = "q-steps", default_value_t = 200)]
        q_steps: usize,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        /// Scan points per side
        #[arg(long, env = "MINKSHOOT_SEED_GRID")]
        grid: Option<usize>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "N")]
    n: Option<u32>,
    #[serde(rename = "R1")]
    r1: Option<f64>,
    #[serde(rename = "R2")]
    r2: Option<f64>,
    q: Option<f64>,
    r: Option<f64>,
    tol: Option<f64>,
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geom: Geometry,
    pub q: f64,
    pub r: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str::<FileConfig>(&text)?
            }
            None => FileConfig::default(),
        };
        let geom = Geometry::new(
            args.n.or(file.n).unwrap_or(1),
            args.r1.or(file.r1).unwrap_or(0.0),
            args.r2.or(file.r2).unwrap_or(1.0),
        )?;
        let q = args.q.or(file.q).unwrap_or(15.0);
        let r = args.r.or(file.r).unwrap_or(3.0);
        PowerNonlinearity::new(q, r)?;
        let tol = args.tol.or(file.tol).unwrap_or(1e-10);
        IvpIntegrator::new(tol)?;
        let max_steps = args.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        if max_steps == 0 {
            return Err(Error::InvalidArgument("--max-steps must be positive".into()));
        }
        Ok(Self {
            geom,
            q,
            r,
            tol,
            max_steps,
            out: args.out.clone(),
        })
    }

    pub fn nonlinearity(&self) -> Result<PowerNonlinearity> {
        PowerNonlinearity::new(self.q, self.r)
    }

    fn integrator(&self) -> Result<IvpIntegrator> {
        Ok(IvpIntegrator::new(self.tol)?.with_max_steps(self.max_steps))
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::EigenBracketNotFound { .. } => EXIT_EIGEN,
        Error::IntegrationFailure { .. }
        | Error::DegeneratePath { .. }
        | Error::NonMonotoneAngle { .. }
        | Error::NonPositiveRadius(_) => EXIT_INTEGRATION,
        Error::HypothesisFailed { .. } => EXIT_HYPOTHESIS,
        Error::Incomplete(_) => EXIT_INCOMPLETE,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(jobs) = cli.global.jobs {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<i32> {
    let cfg = RunConfig::resolve(&cli.global)?;
    match &cli.command {
        Command::Eigen { kmax, mu_max } => cmd_eigen(&cfg, *kmax, *mu_max, out),
        Command::Shoot { d } => cmd_shoot(&cfg, *d, out),
        Command::Solve {
            k,
            accept_tol,
            grid,
            extended_range,
        } => {
            let mut solver = SolverConfig {
                tol: cfg.tol,
                accept_tol: *accept_tol,
                extended_range: *extended_range,
                max_steps: cfg.max_steps,
                ..SolverConfig::default()
            };
            if let Some(g) = grid {
                solver.grid_size = *g;
            }
            cmd_solve(&cfg, *k, &solver, out)
        }
        Command::Verify { d } => cmd_verify(&cfg, *d, out),
        Command::Sweep {
            q_lo,
            q_hi,
            q_steps,
            kmax,
            grid,
        } => {
            let mut sweep = SweepConfig {
                q_steps: *q_steps,
                k_max: *kmax,
                tol: cfg.tol,
                max_steps: cfg.max_steps,
                ..SweepConfig::new(cfg.r, *q_lo, *q_hi)
            };
            if let Some(g) = grid {
                sweep.grid_size = *g;
            }
            cmd_sweep(&cfg, &sweep, out)
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn emit<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_eigen<W: Write>(cfg: &RunConfig, kmax: usize, mu_max: f64, out: &mut W) -> Result<i32> {
    if kmax == 0 {
        return Err(Error::InvalidArgument("--kmax must be at least 1".into()));
    }
    let tol = cfg.tol.min(1e-6);
    for k in 1..=kmax {
        let lambda = eigenvalue_bounded(&cfg.geom, k, tol, mu_max)?;
        writeln!(out, "{k},{}", crate::output::fmt_num(lambda))
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(0)
}

pub fn cmd_shoot<W: Write>(cfg: &RunConfig, d: f64, out: &mut W) -> Result<i32> {
    let nl = cfg.nonlinearity()?;
    let shot = shoot_with(&cfg.integrator()?, &cfg.geom, &nl, d)?;
    ensure_dir(&cfg.out)?;
    let csv = cfg.out.join("shot.csv");
    write_with(&csv, |w| shot.traj.write_csv(w))?;
    emit(
        out,
        &json!({
            "d": d,
            "theta_end": shot.theta_end,
            "half_turns": shot.half_turns,
            "crossings": shot.crossings,
            "csv_path": csv.display().to_string(),
        }),
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct ProfileSummary {
    d: f64,
    side: Side,
    crossings: usize,
    endpoint_residual: f64,
    min_u: f64,
    profile_csv_path: String,
}

fn write_profiles(dir: &Path, profiles: &[SolutionProfile]) -> Result<Vec<ProfileSummary>> {
    ensure_dir(dir)?;
    let mut summaries = Vec::with_capacity(profiles.len());
    for (i, p) in profiles.iter().enumerate() {
        let ordinal = profiles[..i]
            .iter()
            .filter(|o| o.side == p.side && o.crossings == p.crossings)
            .count();
        let path = dir.join(format!("solution_{}_{}_{}.csv", p.side, p.crossings, ordinal));
        write_with(&path, |w| p.traj.write_csv(w))?;
        summaries.push(ProfileSummary {
            d: p.d,
            side: p.side,
            crossings: p.crossings,
            endpoint_residual: p.endpoint_residual,
            min_u: p.min_u,
            profile_csv_path: path.display().to_string(),
        });
    }
    Ok(summaries)
}

pub fn cmd_solve<W: Write>(
    cfg: &RunConfig,
    k: usize,
    solver: &SolverConfig,
    out: &mut W,
) -> Result<i32> {
    let nl = cfg.nonlinearity()?;
    match solve_all(&cfg.geom, &nl, k, solver) {
        Ok(profiles) => {
            emit(out, &write_profiles(&cfg.out, &profiles)?)?;
            Ok(0)
        }
        Err(Error::Incomplete(inc)) => {
            emit(out, &write_profiles(&cfg.out, &inc.profiles)?)?;
            Err(Error::Incomplete(inc))
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_verify<W: Write>(cfg: &RunConfig, d: f64, out: &mut W) -> Result<i32> {
    let nl = cfg.nonlinearity()?;
    let traj = cfg.integrator()?.integrate(&cfg.geom, &nl, d)?;
    let s0 = nl.s0();
    let crossings = if d == s0 {
        0
    } else {
        to_polar(&traj, s0, 1.0)?.crossings().count
    };
    let profile = SolutionProfile {
        d,
        side: Side::of(d, s0),
        crossings,
        endpoint_residual: traj.end().v.abs(),
        min_u: traj.min_u(),
        max_slope: traj.max_abs_slope(),
        traj,
    };
    let report = verify_solution(&profile, &cfg.geom, &nl);
    emit(out, &report)?;
    Ok(if report.passed() { 0 } else { EXIT_VERIFY_FAILED })
}

pub fn cmd_sweep<W: Write>(cfg: &RunConfig, sweep: &SweepConfig, out: &mut W) -> Result<i32> {
    let result = sweep_q(&cfg.geom, sweep)?;
    ensure_dir(&cfg.out)?;
    let csv = cfg.out.join("sweep.csv");
    let dat = cfg.out.join("sweep_branches.dat");
    let log = cfg.out.join("sweep_gaps.log");
    write_with(&csv, |w| result.write_csv(w))?;
    write_with(&dat, |w| result.write_gnuplot(w))?;
    write_with(&log, |w| result.write_gaps(w))?;
    let onsets: Vec<_> = (1..=sweep.k_max)
        .map(|j| json!({ "crossings": j, "onset": result.onset(j) }))
        .collect();
    emit(
        out,
        &json!({
            "attempted": result.attempted(),
            "points": result.points.len(),
            "gaps": result.gaps.len(),
            "onsets": onsets,
            "csv_path": csv.display().to_string(),
            "branches_path": dat.display().to_string(),
            "gaps_path": log.display().to_string(),
        }),
    )?;
    if result.all_failed() {
        eprintln!("error: every admissible q failed; see {}", log.display());
        return Ok(EXIT_SWEEP_FAILED);
    }
    Ok(0)
}
