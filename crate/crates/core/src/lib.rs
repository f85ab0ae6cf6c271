//! Positive radial Neumann solutions of the Lorentz-Minkowski mean curvature
//! equation
//!
//! ```text
//! -div(grad u / sqrt(1 - |grad u|^2)) = f(u)   in a ball or annulus,
//! du/dn = 0                                   on the boundary,
//! ```
//!
//! found by shooting on the initial value `u(R1) = d` and counting the
//! half-turns of `(u, v)` around the constant solution `u = s0`.

pub mod curvature;
pub mod dopri;
pub mod eigen;
pub mod error;
pub mod ivp;
pub mod output;
pub mod polar;
pub mod shooting;
pub mod sweep;
pub mod verify;

pub mod cli;

pub use curvature::{
    f_hat, f_prime_at_s0, phi, phi_inv, CallbackNonlinearity, Geometry, Nonlinearity,
    PowerNonlinearity,
};
pub use eigen::{check_hypothesis, eigenvalue, theta_mu_at_r2, AngleShot, HypothesisCheck};
pub use error::{Error, Result};
pub use ivp::{integrate_ivp, origin_start, rhs, IvpIntegrator, PhaseState, Trajectory};
pub use polar::{crossing_count, half_turns, to_polar, winding, PolarPath};
pub use shooting::{
    d_star, refine_root, scan, shoot, solve_all, ShotResult, Side, SolutionProfile, SolverConfig,
};
pub use sweep::{detect_branch_onset, sweep_q, BranchPoint, Onset, SweepConfig, SweepResult};
pub use verify::{verify_solution, VerificationReport};
