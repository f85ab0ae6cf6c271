//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerics.

#![allow(dead_code)]

use std::io::Write;

use minkshoot::Trajectory;

/// `J_n(x)` from its power series; accurate to about 1e-12 for `x <= 15`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..200 {
        let m = m as f64;
        term *= -half * half / (m * (m + n as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `k`-th positive zero of `J_1`, by Newton from the McMahon estimate
/// `(k + 1/4) pi`, with `J_1' = J_0 - J_1 / x`.
pub fn bessel_j1_zero(k: usize) -> f64 {
    let mut x = (k as f64 + 0.25) * std::f64::consts::PI;
    for _ in 0..50 {
        let j1 = bessel_j(1, x);
        let dj1 = bessel_j(0, x) - j1 / x;
        let step = j1 / dj1;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// `k`-th positive root of `tan x = x`, which gives the radial Neumann
/// spectrum of the unit ball in three dimensions.
pub fn tan_root(k: usize) -> f64 {
    use std::f64::consts::PI;
    // the root lies in (k pi, k pi + pi/2); bisect g(x) = sin x - x cos x
    let g = |x: f64| x.sin() - x * x.cos();
    let (mut lo, mut hi) = (k as f64 * PI + 1e-9, k as f64 * PI + 0.5 * PI - 1e-12);
    let s_lo = g(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign changes of `u - s0` on `n + 1` equispaced radii of the dense output.
pub fn sign_changes(traj: &Trajectory, s0: f64, n: usize) -> usize {
    let geom = traj.geometry();
    let (a, b) = (geom.r1(), geom.r2());
    let signs: Vec<bool> = (0..=n)
        .map(|i| traj.state_at(a + (b - a) * i as f64 / n as f64).u - s0)
        .filter(|du| *du != 0.0)
        .map(|du| du > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Primitive of `s^{q-1} - s^{r-1}` vanishing at zero.
pub fn primitive(q: f64, r: f64, s: f64) -> f64 {
    s.powf(q) / q - s.powf(r) / r
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Writes one verdict line straight to the process stderr so that it shows
/// up even when the harness captures test output.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {id:>2} {:<4} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}
