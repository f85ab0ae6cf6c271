//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{bessel_j1_zero, log_space, primitive, sign_changes, verdict};
use minkshoot::polar::half_turns_scaled;
use minkshoot::shooting::Side;
use minkshoot::{
    crossing_count, d_star, eigenvalue, integrate_ivp, solve_all, sweep_q, theta_mu_at_r2,
    verify_solution, winding, Geometry, Nonlinearity, PowerNonlinearity, SolutionProfile,
    SolverConfig, SweepConfig,
};

fn unit(dim: u32) -> Geometry {
    Geometry::ball(dim, 1.0).unwrap()
}

fn proto(q: f64) -> PowerNonlinearity {
    PowerNonlinearity::new(q, 3.0).unwrap()
}

fn check(id: u32, name: &str, failures: &[String], detail: String, elapsed: Duration, limit: Option<Duration>) {
    let slow = limit.is_some_and(|l| elapsed >= l);
    let pass = failures.is_empty() && !slow;
    let mut detail = format!("{detail}; {:.3} s", elapsed.as_secs_f64());
    if let Some(l) = limit {
        detail.push_str(&format!(" (limit {} s)", l.as_secs_f64()));
    }
    verdict(id, name, pass, &detail);
    assert!(failures.is_empty(), "criterion {id} failed: {failures:#?}");
    assert!(!slow, "criterion {id} too slow: {elapsed:?}");
}

#[test]
fn c01_eigenvalues_closed_form_1d() {
    let t0 = Instant::now();
    let geom = unit(1);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for k in 1..=6 {
        let exact = ((k - 1) as f64 * PI).powi(2);
        let got = eigenvalue(&geom, k, 1e-12).unwrap();
        let err = (got - exact).abs();
        worst = worst.max(err);
        if err > 1e-8 {
            failures.push(format!("k={k}: {got} vs {exact}"));
        }
    }
    check(
        1,
        "eigenvalues N=1 closed form",
        &failures,
        format!("max |err| = {worst:.2e} (tol 1e-8)"),
        t0.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn c02_eigenvalues_bessel_2d() {
    let t0 = Instant::now();
    let zeros: Vec<f64> = (1..=3).map(bessel_j1_zero).collect();
    assert!((zeros[0] - 3.831_705_970_2).abs() < 1e-9);
    assert!((zeros[1] - 7.015_586_669_8).abs() < 1e-9);
    let geom = unit(2);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for k in 2..=4 {
        let exact = zeros[k - 2].powi(2);
        let got = eigenvalue(&geom, k, 1e-10).unwrap();
        let rel = (got - exact).abs() / exact;
        worst = worst.max(rel);
        if rel > 1e-6 {
            failures.push(format!("k={k}: {got} vs {exact}"));
        }
    }
    check(
        2,
        "eigenvalues N=2 Bessel oracle",
        &failures,
        format!("max rel err = {worst:.2e} (tol 1e-6)"),
        t0.elapsed(),
        Some(Duration::from_secs(5)),
    );
}

#[test]
fn c03_angle_monotone_in_mu() {
    let t0 = Instant::now();
    let mus = log_space(1e-3, 1e4, 50);
    let mut failures = Vec::new();
    let mut smallest = f64::INFINITY;
    for dim in 1..=3 {
        for geom in [unit(dim), Geometry::annulus(dim, 1.0, 2.0).unwrap()] {
            let thetas: Vec<f64> = mus
                .iter()
                .map(|&mu| theta_mu_at_r2(&geom, mu, 1e-12).unwrap())
                .collect();
            for (i, w) in thetas.windows(2).enumerate() {
                smallest = smallest.min(w[1] - w[0]);
                if !(w[1] > w[0]) {
                    failures.push(format!("{geom:?}: mu {} -> {}", mus[i], mus[i + 1]));
                }
            }
        }
    }
    check(
        3,
        "angle strictly increasing in mu",
        &failures,
        format!("6 geometries x 50 mu, smallest increment {smallest:.2e}"),
        t0.elapsed(),
        None,
    );
}

#[test]
fn c04_energy_conservation_1d() {
    let t0 = Instant::now();
    let (q, r) = (15.0, 3.0);
    let p = proto(q);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for d in [0.3, 0.9, 1.5] {
        let traj = integrate_ivp(&unit(1), &p, d, 1e-10).unwrap();
        let energy = |u: f64, v: f64| (1.0 + v * v).sqrt() + primitive(q, r, u);
        let e0 = energy(d, 0.0);
        let drift = traj
            .samples()
            .iter()
            .map(|s| (energy(s.u, s.v) - e0).abs() / e0.abs())
            .fold(0.0, f64::max);
        worst = worst.max(drift);
        if drift > 1e-7 {
            failures.push(format!("d={d}: drift {drift:e}"));
        }
    }
    check(
        4,
        "N=1 conserved energy",
        &failures,
        format!("max rel drift = {worst:.2e} (tol 1e-7)"),
        t0.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

/// Checks shared by criteria 5 and 6; returns failure messages.
fn audit_profiles(geom: &Geometry, nl: &PowerNonlinearity, profiles: &[SolutionProfile]) -> Vec<String> {
    let s0 = nl.s0();
    let mut failures = Vec::new();
    for p in profiles {
        let tag = format!("{} d={}", p.side, p.d);
        let scan = sign_changes(&p.traj, s0, 10_000);
        if scan != p.crossings {
            failures.push(format!("{tag}: {} crossings by scan, {} claimed", scan, p.crossings));
        }
        let expected_side = if p.d < s0 { Side::Below } else { Side::Above };
        if p.side != expected_side {
            failures.push(format!("{tag}: wrong side"));
        }
        let amplitude = p.traj.samples().iter().map(|s| (s.u - s0).abs()).fold(0.0, f64::max);
        if !(amplitude > 1e-9) {
            failures.push(format!("{tag}: constant"));
        }
        let report = verify_solution(p, geom, nl);
        if !(report.endpoint_slope <= 1e-7) {
            failures.push(format!("{tag}: |u'(R2)| = {}", report.endpoint_slope));
        }
        if !(report.min_u > 0.0) {
            failures.push(format!("{tag}: min u = {}", report.min_u));
        }
        let max_slope = p.traj.slope_samples().iter().map(|s| s.abs()).fold(0.0, f64::max);
        if !(max_slope < 1.0) {
            failures.push(format!("{tag}: max |u'| = {max_slope}"));
        }
    }
    failures
}

fn crossing_table(profiles: &[SolutionProfile]) -> Vec<(Side, usize)> {
    let mut t: Vec<(Side, usize)> = profiles.iter().map(|p| (p.side, p.crossings)).collect();
    t.sort();
    t
}

#[test]
fn c05_two_solutions_k1() {
    let t0 = Instant::now();
    let geom = unit(1);
    let p = proto(15.0);
    let profiles = solve_all(&geom, &p, 1, &SolverConfig::new(1e-10)).unwrap();
    let mut failures = audit_profiles(&geom, &p, &profiles);
    if profiles.len() < 2 {
        failures.push(format!("only {} profiles", profiles.len()));
    }
    for side in [Side::Below, Side::Above] {
        if !profiles.iter().any(|pr| pr.side == side && pr.crossings == 1) {
            failures.push(format!("no {side} profile with one crossing"));
        }
    }
    if profiles.iter().any(|pr| pr.crossings != 1) {
        failures.push("profile with a crossing count other than 1".into());
    }
    check(
        5,
        "k=1: two solutions, one per side",
        &failures,
        format!("{} profiles {:?}", profiles.len(), crossing_table(&profiles)),
        t0.elapsed(),
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn c06_four_solutions_k2() {
    let t0 = Instant::now();
    let geom = unit(1);
    let p = proto(45.0);
    let profiles = solve_all(&geom, &p, 2, &SolverConfig::new(1e-10)).unwrap();
    let mut failures = audit_profiles(&geom, &p, &profiles);
    if profiles.len() < 4 {
        failures.push(format!("only {} profiles", profiles.len()));
    }
    for side in [Side::Below, Side::Above] {
        for j in 1..=2 {
            if !profiles.iter().any(|pr| pr.side == side && pr.crossings == j) {
                failures.push(format!("no {side} profile with {j} crossings"));
            }
        }
    }
    check(
        6,
        "k=2: four solutions {1,1,2,2}",
        &failures,
        format!("{} profiles {:?}", profiles.len(), crossing_table(&profiles)),
        t0.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn c07_d_star_ceiling() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut largest = 0.0f64;
    for q in [15.0, 30.0, 45.0] {
        for dim in [1, 2] {
            let geom = unit(dim);
            let p = proto(q);
            let top = d_star(&geom, &p);
            assert_eq!(top, 2.0);
            let traj = integrate_ivp(&geom, &p, top, 1e-10).unwrap();
            let w = winding(&traj, 1.0).unwrap();
            largest = largest.max(w);
            if !(w < PI) {
                failures.push(format!("q={q} N={dim}: winding {w}"));
            }
        }
    }
    check(
        7,
        "winding at d* below pi",
        &failures,
        format!("largest winding {largest:.6}"),
        t0.elapsed(),
        None,
    );
}

#[test]
fn c08_winding_near_equilibrium() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (q, need) in [(15.0, PI), (45.0, 2.0 * PI)] {
        let p = proto(q);
        for d in [1.0 - 1e-3, 1.0 + 1e-3] {
            let traj = integrate_ivp(&unit(1), &p, d, 1e-10).unwrap();
            let w = winding(&traj, 1.0).unwrap();
            details.push(format!("q={q} d={d}: {:.4} pi", w / PI));
            if !(w > need) {
                failures.push(format!("q={q} d={d}: winding {w} <= {need}"));
            }
        }
    }
    check(
        8,
        "winding near s0 exceeds k pi",
        &failures,
        details.join(", "),
        t0.elapsed(),
        None,
    );
}

#[test]
fn c09_half_turns_independent_of_alpha() {
    let t0 = Instant::now();
    let p = proto(15.0);
    let data: Vec<f64> = (1..=10)
        .map(|i| 0.095 * i as f64)
        .chain((1..=10).map(|i| 1.0 + 0.1 * i as f64))
        .collect();
    let mut failures = Vec::new();
    let mut max_turns = 0;
    for dim in [1, 2] {
        for &d in &data {
            let traj = integrate_ivp(&unit(dim), &p, d, 1e-10).unwrap();
            let counts: Vec<usize> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&alpha| half_turns_scaled(&traj, 1.0, alpha).unwrap())
                .collect();
            max_turns = max_turns.max(counts[1]);
            if counts.iter().any(|&c| c != counts[0]) {
                failures.push(format!("N={dim} d={d}: {counts:?}"));
            }
        }
    }
    check(
        9,
        "half-turns independent of alpha",
        &failures,
        format!("20 data x 2 dims, up to {max_turns} half-turns"),
        t0.elapsed(),
        None,
    );
}

/// True if every branch present at some grid value is present at every
/// later one.
fn persistence_failures(result: &minkshoot::SweepResult) -> Vec<String> {
    let mut failures = Vec::new();
    for side in [Side::Below, Side::Above] {
        for j in 1..=2 {
            let present: Vec<bool> = result
                .grid
                .iter()
                .map(|&q| result.points.iter().any(|p| p.q == q && p.side == side && p.crossings == j))
                .collect();
            if let Some(first) = present.iter().position(|&x| x) {
                if let Some(miss) = present[first..].iter().position(|&x| !x) {
                    failures.push(format!(
                        "{side} j={j} appears at q={} but is missing at q={}",
                        result.grid[first],
                        result.grid[first + miss]
                    ));
                }
            }
        }
    }
    failures
}

#[test]
fn c10_bifurcation_structure() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let cfg = SweepConfig {
        q_steps: 200,
        k_max: 2,
        ..SweepConfig::new(3.0, 4.0, 50.0)
    };
    let one = sweep_q(&unit(1), &cfg).unwrap();
    let onsets = [one.onset(1), one.onset(2)];
    for (j, threshold) in [(1, 3.0 + PI * PI), (2, 3.0 + 4.0 * PI * PI)] {
        if !onsets[j - 1].contains(threshold) {
            failures.push(format!("j={j}: onset {:?} misses {threshold}", onsets[j - 1]));
        }
        for side in [Side::Below, Side::Above] {
            if !one.points.iter().any(|p| p.q == 50.0 && p.side == side && p.crossings == j) {
                failures.push(format!("N=1: {side} j={j} absent at q=50"));
            }
        }
    }
    failures.extend(persistence_failures(&one).into_iter().map(|f| format!("N=1: {f}")));

    // two dimensions: presence only, beyond the eigenvalue threshold plus 0.5
    let cfg2 = SweepConfig {
        q_steps: 61,
        k_max: 2,
        ..SweepConfig::new(3.0, 10.0, 70.0)
    };
    let two = sweep_q(&unit(2), &cfg2).unwrap();
    for j in 1..=2 {
        let threshold = 3.0 + bessel_j1_zero(j).powi(2) + 0.5;
        for &q in two.grid.iter().filter(|&&q| q > threshold) {
            for side in [Side::Below, Side::Above] {
                if !two.points.iter().any(|p| p.q == q && p.side == side && p.crossings == j) {
                    failures.push(format!("N=2: {side} j={j} absent at q={q}"));
                }
            }
        }
    }
    check(
        10,
        "bifurcation diagram structure",
        &failures,
        format!(
            "N=1 onsets {:?} / {:?}; N=2 {} points at {} grid values",
            onsets[0],
            onsets[1],
            two.points.len(),
            two.grid.len()
        ),
        t0.elapsed(),
        Some(Duration::from_secs(600)),
    );
}

/// Sup distances between the solutions from `d` and `d + 1e-6`: the curves
/// `u` and `u'` in absolute terms, the momentum `v` relative to `sup |v|`
/// (its sensitivity to `d` grows like `f'(d)`, reaching ~1e4 near `d = 2`).
#[test]
fn c11_continuous_dependence() {
    let t0 = Instant::now();
    let p = proto(15.0);
    let mut failures = Vec::new();
    let (mut worst_u, mut worst_slope, mut worst_v) = (0.0f64, 0.0f64, 0.0f64);
    for dim in [1, 2] {
        for i in 0..10 {
            let d = 0.1 + 0.2 * i as f64;
            let a = integrate_ivp(&unit(dim), &p, d, 1e-10).unwrap();
            let b = integrate_ivp(&unit(dim), &p, d + 1e-6, 1e-10).unwrap();
            let (mut du, mut ds, mut dv, mut v_scale) = (0.0f64, 0.0f64, 0.0f64, 1.0f64);
            for k in 0..=4000 {
                let r = k as f64 / 4000.0;
                let (x, y) = (a.state_at(r), b.state_at(r));
                du = du.max((x.u - y.u).abs());
                dv = dv.max((x.v - y.v).abs());
                v_scale = v_scale.max(x.v.abs());
                ds = ds.max((a.slope_at(r) - b.slope_at(r)).abs());
            }
            let dv_rel = dv / v_scale;
            worst_u = worst_u.max(du);
            worst_slope = worst_slope.max(ds);
            worst_v = worst_v.max(dv_rel);
            if du > 1e-4 || ds > 1e-4 || dv_rel > 1e-4 {
                failures.push(format!("N={dim} d={d}: u {du:e}, u' {ds:e}, v/sup|v| {dv_rel:e}"));
            }
        }
    }
    check(
        11,
        "continuous dependence on d",
        &failures,
        format!(
            "max sup |du| {worst_u:.2e}, |du'| {worst_slope:.2e}, |dv|/sup|v| {worst_v:.2e} (tol 1e-4)"
        ),
        t0.elapsed(),
        None,
    );
}

#[test]
fn c12_crossing_count_oracle() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut total = 0;
    for (dim, q, k) in [(1, 15.0, 1), (1, 45.0, 2), (2, 70.0, 2)] {
        let geom = unit(dim);
        let p = proto(q);
        let profiles = solve_all(&geom, &p, k, &SolverConfig::new(1e-10)).unwrap();
        for prof in &profiles {
            total += 1;
            let angle = crossing_count(&prof.traj, 1.0).unwrap().count;
            let scan = sign_changes(&prof.traj, 1.0, 10_000);
            if angle != scan || angle != prof.crossings {
                failures.push(format!(
                    "N={dim} q={q} d={}: angle {angle}, scan {scan}, claimed {}",
                    prof.d, prof.crossings
                ));
            }
        }
    }
    check(
        12,
        "angle crossings match sign-change scan",
        &failures,
        format!("{total} accepted profiles"),
        t0.elapsed(),
        None,
    );
}
