//! Acceptance criteria, one verdict line each.
//!
//! Runs without the libtest harness so every line is printed. The process
//! fails when a criterion fails, unless that exact failure is listed in
//! `KNOWN_RED` together with its analysis in the project notes.

use std::time::{Duration, Instant};

use hotelling_core::deviation::MIN_GRID;
use hotelling_core::{
    approximation_factor, placement, potential, quality_pair, rho_small, sc_opt, social_cost,
    solve_client_equilibrium, Borders, Placement, PlacementKind, DEFAULT_GRID, DEFAULT_TOL,
};
use hotelling_experiments::sweep::evaluate_positions;
use hotelling_experiments::{
    evaluate_cell, run_sweep, scan_n3_lower_bound, validate_closed_forms, verify_conjectures,
    EngineKind, PrecisionRule, SweepSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> (bool, String);

struct Verdict {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

/// Failures reproduced exactly and analysed; any other failure is an error.
const KNOWN_RED: &[(u8, &str)] = &[(
    8,
    "failing cells: pair n=10 alpha=0.1 argmax [5]; pair n=20 alpha=0.1 argmax [11]",
)];

fn bound3() -> f64 {
    0.25 * (1.0 + 17f64.sqrt())
}

fn run(id: u8, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = f();
    Verdict {
        id,
        title,
        pass,
        detail,
        elapsed: start.elapsed(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn ac1() -> (bool, String) {
    let start = Instant::now();
    let s1 = (17f64.sqrt() - 3.0) / 4.0;
    let pos = vec![s1, 0.5, 1.0 - s1];
    let cont = approximation_factor(&Placement::new(pos.clone()).unwrap(), 0.0, DEFAULT_GRID, DEFAULT_TOL)
        .unwrap();
    let disc = evaluate_positions(&pos, 0.0, Some(3000)).unwrap().rho;
    let (fast, t) = within(Duration::from_secs(10), start);
    let ok = (cont - bound3()).abs() <= 1e-6 && (disc - bound3()).abs() <= 5e-3 && fast;
    (
        ok,
        format!(
            "continuous {cont:.9} (err {:.1e}), discrete P=3000 {disc:.6} (err {:.1e}), {t}",
            (cont - bound3()).abs(),
            (disc - bound3()).abs()
        ),
    )
}

fn ac2() -> (bool, String) {
    let start = Instant::now();
    let r = scan_n3_lower_bound(0.01, 0.0, 0).unwrap();
    let target = [0.2808, 0.5, 0.7192];
    let dist = r
        .argmin
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (fast, t) = within(Duration::from_secs(300), start);
    (
        r.min_rho >= 1.27 && dist <= 0.02 && fast,
        format!("min {:.8} at {:?} (distance {dist:.4}), {t}", r.min_rho, r.argmin),
    )
}

fn ac3() -> (bool, String) {
    let start = Instant::now();
    let alphas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let report = validate_closed_forms(&alphas).unwrap();
    let table = report.table();
    let listed = report.corrupted().all(|c| {
        table.rows.iter().any(|row| {
            row[0] == c.kind.name().into() && row[1] == c.n.into() && row[2] == "corrupted".into()
        })
    });
    let bad: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.corrupted && !c.pass)
        .map(|c| format!("{} n={} err {:.2e}", c.kind, c.n, c.max_error))
        .collect();
    let worst = report
        .checks
        .iter()
        .filter(|c| !c.corrupted)
        .map(|c| c.max_error)
        .fold(0.0, f64::max);
    let corrupted: Vec<String> = report.corrupted().map(|c| format!("{} n={}", c.kind, c.n)).collect();
    let (fast, t) = within(Duration::from_secs(600), start);
    (
        bad.is_empty() && listed && fast,
        format!(
            "worst verbatim error {worst:.2e}; corrupted and listed: {}; failures: {bad:?}; {t}",
            corrupted.join(", ")
        ),
    )
}

fn ac4() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for n in (2..=20).step_by(2) {
        let p = placement(PlacementKind::Pair, n).unwrap();
        for a in [0.0, 1.0] {
            let rho = approximation_factor(&p, a, DEFAULT_GRID, DEFAULT_TOL).unwrap();
            worst = worst.max((rho - 1.0).abs());
        }
    }
    (worst <= 1e-8, format!("largest |rho - 1| = {worst:.2e}"))
}

fn ac5() -> (bool, String) {
    let exact = rho_small(PlacementKind::Pair, 4, 0.5).unwrap();
    let disc = evaluate_cell(PlacementKind::Pair, 4, 0.5, EngineKind::Discrete, PrecisionRule::Fixed(2000))
        .unwrap()
        .rho;
    (
        exact == 1.0625 && (disc - 1.0625).abs() <= 5e-3,
        format!("closed form {exact}, discrete P=2000 {disc:.6}"),
    )
}

fn ac6() -> (bool, String) {
    let exact = rho_small(PlacementKind::Opt, 4, 0.0).unwrap();
    let cont = approximation_factor(&placement(PlacementKind::Opt, 4).unwrap(), 0.0, DEFAULT_GRID, DEFAULT_TOL)
        .unwrap();
    (
        (exact - 1.5).abs() <= 1e-12 && (cont - 1.5).abs() <= 1e-4,
        format!("closed form {exact}, continuous {cont:.9}"),
    )
}

fn ac7() -> (bool, String) {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [0.1, 0.5, 0.9] {
        let exact = evaluate_cell(PlacementKind::Pair, 10, a, EngineKind::Continuous, PrecisionRule::Scaled(50))
            .unwrap()
            .rho;
        let errors: Vec<f64> = [50, 100, 250, 500]
            .iter()
            .map(|&c| {
                let r = evaluate_cell(PlacementKind::Pair, 10, a, EngineKind::Discrete, PrecisionRule::Scaled(c))
                    .unwrap()
                    .rho;
                (r - exact).abs()
            })
            .collect();
        let last = errors[3] <= 0.005;
        let monotone = errors.windows(2).all(|w| w[1] <= w[0] + 1e-3);
        ok &= last && monotone;
        parts.push(format!(
            "alpha={a}: [{}]",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    let (fast, t) = within(Duration::from_secs(900), start);
    (ok && fast, format!("{}; {t}", parts.join("; ")))
}

fn ac8() -> (bool, String) {
    let mut failing = Vec::new();
    let mut cells = 0;
    for kind in [PlacementKind::Pair, PlacementKind::Opt] {
        let r = verify_conjectures(kind, &[8, 10, 20], &[0.1, 0.5, 0.9], PrecisionRule::Scaled(500), 0)
            .unwrap();
        cells += r.cells.len();
        for c in r.cells.iter().filter(|c| !c.pass) {
            failing.push(format!("{kind} n={} alpha={} argmax {:?}", c.n, c.alpha, c.argmax));
        }
    }
    if failing.is_empty() {
        (true, format!("{cells} cells, zero failures"))
    } else {
        (false, format!("failing cells: {}", failing.join("; ")))
    }
}

fn ac9() -> (bool, String) {
    let spec = SweepSpec {
        n_values: vec![10, 20, 30],
        alphas: (0..=20).map(|k| k as f64 / 20.0).collect(),
        precision: PrecisionRule::Scaled(250),
        kind: PlacementKind::Pair,
        engine: EngineKind::Discrete,
        workers: 0,
        timing: false,
    };
    let rows = run_sweep(&spec).unwrap();
    let mut ok = rows.iter().all(|r| r.is_ok());
    let mut parts = Vec::new();
    for n in [10, 20, 30] {
        let (alpha, rho) = rows
            .iter()
            .filter(|r| r.n == n && r.is_summary())
            .fold((f64::NAN, f64::NEG_INFINITY), |best, r| {
                let v = r.rho.unwrap_or(f64::NEG_INFINITY);
                if v > best.1 {
                    (r.alpha, v)
                } else {
                    best
                }
            });
        ok &= (1.06..=1.09).contains(&rho) && (0.45..=0.65).contains(&alpha);
        parts.push(format!("n={n}: {rho:.5} at alpha {alpha}"));
    }
    (ok, parts.join("; "))
}

fn ac10() -> (bool, String) {
    let mut worst_sc: f64 = 0.0;
    for n in 1..=20 {
        let p = placement(PlacementKind::Opt, n).unwrap();
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            let sol = solve_client_equilibrium(&p, a, DEFAULT_TOL).unwrap();
            let numeric = social_cost(&p, &sol.borders, a).unwrap();
            worst_sc = worst_sc.max((sc_opt(n, a).unwrap() - numeric).abs());
        }
    }
    let quality_ok = (2..=20)
        .step_by(2)
        .all(|n| quality_pair(n, 0.0).unwrap().0 == 2.0 && quality_pair(n, 1.0).unwrap().0 == 1.0);
    let q5 = quality_pair(5, 0.0).unwrap().0;
    (
        worst_sc <= 1e-10 && quality_ok && (q5 - 50.0 / 9.0).abs() <= 1e-12,
        format!("social cost gap {worst_sc:.2e}; even quality endpoints exact: {quality_ok}; odd n=5 {q5:.15}"),
    )
}

fn random_positions(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.1) {
                0.5
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    if n >= 2 && rng.gen_bool(0.2) {
        v[1] = v[0];
    }
    v.sort_by(f64::total_cmp);
    v
}

fn ac11() -> (bool, String) {
    const INSTANCES: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let mut failures: Vec<String> = Vec::new();
    let mut note = |what: &str, i: usize, pos: &[f64], a: f64| {
        if failures.len() < 5 {
            failures.push(format!("{what} #{i} {pos:?} alpha={a}"));
        }
    };
    for i in 0..INSTANCES {
        let n = rng.gen_range(1..=6);
        let pos = random_positions(&mut rng, n);
        let a = if rng.gen_bool(0.1) { 0.5 } else { rng.gen::<f64>() };
        let p = Placement::new(pos.clone()).unwrap();

        let sol = solve_client_equilibrium(&p, a, DEFAULT_TOL).unwrap();
        let beta = sol.borders.as_slice().to_vec();
        let phi = potential(&p, &sol.borders, a).unwrap();
        for _ in 0..8 {
            let mut q = beta.clone();
            for b in q[1..n].iter_mut() {
                *b = (*b + rng.gen_range(-1e-3..1e-3)).clamp(0.0, 1.0);
            }
            q[1..n].sort_by(f64::total_cmp);
            let other = potential(&p, &Borders::new(q).unwrap(), a).unwrap();
            if other < phi - 1e-12 {
                note("local minimum", i, &pos, a);
            }
        }

        let mirrored: Vec<f64> = pos.iter().rev().map(|x| 1.0 - x).collect();
        let msol = solve_client_equilibrium(&Placement::new(mirrored).unwrap(), a, DEFAULT_TOL).unwrap();
        let reflected = msol.borders.reflect();
        if beta.iter().zip(reflected.as_slice()).any(|(x, y)| (x - y).abs() > 1e-8) {
            note("reflection", i, &pos, a);
        }

        let zero = solve_client_equilibrium(&p, 0.0, DEFAULT_TOL).unwrap();
        let zb = zero.borders.as_slice();
        for k in 1..n {
            if pos[k] - pos[k - 1] > 1e-9 && (zb[k] - 0.5 * (pos[k - 1] + pos[k])).abs() > 1e-8 {
                note("midpoint", i, &pos, 0.0);
            }
        }

        let one = solve_client_equilibrium(&p, 1.0, DEFAULT_TOL).unwrap();
        if one.borders.as_slice().iter().enumerate().any(|(k, b)| (b - k as f64 / n as f64).abs() > 1e-8) {
            note("uniform", i, &pos, 1.0);
        }

        let rho = approximation_factor(&p, a, MIN_GRID, DEFAULT_TOL).unwrap();
        if rho.is_nan() || rho < 1.0 {
            note("rho >= 1", i, &pos, a);
        }

        let size = Some(20 * n.max(3));
        let s = serial.install(|| evaluate_positions(&pos, a, size)).unwrap();
        let m = parallel.install(|| evaluate_positions(&pos, a, size)).unwrap();
        if s.factors.iter().map(|f| f.to_bits()).ne(m.factors.iter().map(|f| f.to_bits())) {
            note("parallel determinism", i, &pos, a);
        }
    }
    if failures.is_empty() {
        (true, format!("{INSTANCES} instances, six properties each, all hold"))
    } else {
        (false, format!("violations: {}", failures.join("; ")))
    }
}

fn main() {
    let criteria: [(u8, &str, Criterion); 11] = [
        (1, "three-facility construction", ac1),
        (2, "three-facility lower bound scan", ac2),
        (3, "closed forms against the solver", ac3),
        (4, "paired placement exact at alpha 0 and 1", ac4),
        (5, "paired placement n=4 peak", ac5),
        (6, "spread placement n=4 at alpha 0", ac6),
        (7, "precision study", ac7),
        (8, "largest gain at an outer facility", ac8),
        (9, "peak sweep", ac9),
        (10, "social cost and quality", ac10),
        (11, "randomized properties", ac11),
    ];
    let mut passed = 0;
    let mut unexpected = 0;
    for (id, title, f) in criteria {
        let v = run(id, title, f);
        let known = KNOWN_RED.iter().any(|&(k, d)| k == v.id && d == v.detail);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if v.pass {
            passed += 1;
        } else if !known {
            unexpected += 1;
        }
        println!(
            "AC{:<2} {tag:<12} {} [{:.1}s]: {}",
            v.id,
            v.title,
            v.elapsed.as_secs_f64(),
            v.detail
        );
    }
    println!("{passed} of {} criteria pass", criteria.len());
    if unexpected > 0 {
        eprintln!("{unexpected} criterion/criteria failed outside the documented set");
        std::process::exit(1);
    }
}
