//! Square-root LASSO solver: `min_x ‖y − Ax‖ + (λ/√m)‖x‖₁`.
//!
//! The core iteration is a primal-dual hybrid gradient method on the saddle
//! form `min_x max_{‖u‖ ≤ 1} uᵀ(y − Ax) + μ‖x‖₁` with `μ = λ/√m`. Both proximal
//! maps are exact: soft thresholding in `x` and projection onto the unit ball
//! in `u`. The primal and dual step sizes are rebalanced from the iterates'
//! residuals while their product stays below `1/‖A‖²`.
//!
//! Every `check_every` iterations the current iterate is tested with the
//! first-order [`certificate`], and exact finishing steps are attempted:
//! a closed-form solve on the current support, and, when the iterate looks
//! interpolating, a simplex solve of the minimum-ℓ1 interpolation problem.
//! A run is `converged` only when a returned point passes the certificate.

mod certificate;
mod polish;
mod prox;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytics::check_positive;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

pub use certificate::{certificate, certificate_with_hint, Certificate, ZERO_RESIDUAL_RTOL};
pub use prox::{clip_to_threshold, clipped_residual_sq, soft_threshold};

use polish::{l1_interpolant, support_of, support_polish, Interpolant};
use prox::project_unit_ball;

const STEP_SCALE: f64 = 0.95;
const ADAPT_ALPHA0: f64 = 0.5;
const ADAPT_ETA: f64 = 0.95;
const ADAPT_DELTA: f64 = 1.5;
const POWER_ITERS: usize = 200;
/// `‖u‖` below this, with a support of at least `m/2`, suggests `y = Ax̂`.
const INTERPOLATION_DUAL_NORM: f64 = 1.0 - 1e-3;
const SIMPLEX_PIVOTS_PER_ROW: usize = 8;

/// Iteration budget and stopping tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Certificate tolerance: converged iff residual ≤ `tol·(1 + ‖x̂‖)`.
    pub tol: f64,
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 50_000,
            tol: 1e-9,
            check_every: 50,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        check_positive("tol", self.tol)?;
        for (name, v) in [("max_iters", self.max_iters), ("check_every", self.check_every)] {
            if v == 0 {
                return Err(Error::InvalidArgument {
                    name,
                    value: 0.0,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

/// Primal and dual starting points, typically the solution at a nearby λ.
/// The dual is oriented like the residual `y − Ax`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
}

/// How the returned point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Finish {
    /// The starting point was already certified.
    Start,
    Iterate,
    SupportPolish,
    Simplex,
    /// Budget exhausted; the iterate with the smallest certificate residual is returned.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub x_hat: DVector<f64>,
    /// Dual witness `u` of the certificate.
    pub dual: DVector<f64>,
    /// `‖y − Ax̂‖ + (λ/√m)‖x̂‖₁`.
    pub objective_eq1: f64,
    /// `√m · objective_eq1`.
    pub objective_eq4: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_residual: f64,
    /// Lowest objective seen so far, recorded at each checkpoint.
    pub objective_trace: Vec<f64>,
    pub finish: Finish,
}

impl LassoSolution {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            x: self.x_hat.clone(),
            u: self.dual.clone(),
        }
    }
}

/// `(eq1, eq4)` with `eq1 = ‖y − Ax‖ + (λ/√m)‖x‖₁` and `eq4 = √m·eq1`.
pub fn objective(x: &DVector<f64>, instance: &ProblemInstance, lambda: f64) -> (f64, f64) {
    objective_system(&instance.a, &instance.y, x, lambda)
}

/// [`objective`] for a raw system.
pub fn objective_system(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> (f64, f64) {
    let sqrt_m = (a.nrows() as f64).sqrt();
    let eq1 = (y - a * x).norm() + lambda / sqrt_m * x.lp_norm(1);
    (eq1, sqrt_m * eq1)
}

/// Solves the instance from `x = 0`.
pub fn solve(instance: &ProblemInstance, lambda: f64, opts: &SolverOptions) -> Result<LassoSolution> {
    solve_system(&instance.a, &instance.y, lambda, opts, None)
}

/// Solves the instance from an optional warm start.
pub fn solve_from(
    instance: &ProblemInstance,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<LassoSolution> {
    solve_system(&instance.a, &instance.y, lambda, opts, warm)
}

/// Largest singular value of `A` by power iteration on `AᵀA`.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let prev = est;
        est = norm.sqrt();
        if (est - prev).abs() <= 1e-10 * est {
            break;
        }
    }
    est
}

/// Solves `min_x ‖y − Ax‖ + (λ/√m)‖x‖₁` for an arbitrary `m × n` system.
///
/// Fails only on invalid arguments; running out of iterations yields
/// `converged = false` with the best point found.
pub fn solve_system(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<LassoSolution> {
    check_positive("lambda", lambda)?;
    opts.validate()?;
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::InvalidArgument {
            name: "y",
            value: y.len() as f64,
            reason: "length must equal the number of rows of A",
        });
    }
    if let Some(w) = warm {
        if w.x.len() != n || w.u.len() != m {
            return Err(Error::InvalidArgument {
                name: "warm start",
                value: w.x.len() as f64,
                reason: "dimensions do not match the system",
            });
        }
    }
    let mu = lambda / (m as f64).sqrt();
    let mut run = Run::new(a, y, lambda, mu, opts);

    let x0 = warm.map_or_else(|| DVector::zeros(n), |w| w.x.clone());
    let warm_dual = warm.map(|w| &w.u);
    if run.consider(&x0, Finish::Start, warm_dual) {
        return Ok(run.finish(0));
    }
    if warm.is_some() {
        if let Some(p) = support_polish(a, y, &x0, mu) {
            if run.consider(&p, Finish::SupportPolish, warm_dual) {
                return Ok(run.finish(0));
            }
        }
    }

    let l = operator_norm(a);
    let (mut tau, mut sigma) = (STEP_SCALE / l, STEP_SCALE / l);
    let mut alpha = ADAPT_ALPHA0;

    let mut x = x0;
    let mut u = warm.map_or_else(|| DVector::zeros(m), |w| w.u.clone());
    project_unit_ball(&mut u);
    let mut ax = a * &x;
    let mut atu = a.tr_mul(&u);
    let (mut x_old, mut u_old) = (x.clone(), u.clone());
    let (mut ax_old, mut atu_old) = (ax.clone(), atu.clone());

    let mut last_pattern: Vec<(usize, bool)> = Vec::new();
    let mut next_simplex = 0;
    let mut simplex_backoff = opts.check_every;

    for it in 1..=opts.max_iters {
        std::mem::swap(&mut x, &mut x_old);
        std::mem::swap(&mut u, &mut u_old);
        std::mem::swap(&mut ax, &mut ax_old);
        std::mem::swap(&mut atu, &mut atu_old);

        for j in 0..n {
            x[j] = soft_threshold(x_old[j] + tau * atu_old[j], tau * mu);
        }
        ax.fill(0.0);
        for j in (0..n).filter(|&j| x[j] != 0.0) {
            ax.axpy(x[j], &a.column(j), 1.0);
        }
        for i in 0..m {
            u[i] = u_old[i] + sigma * (y[i] - 2.0 * ax[i] + ax_old[i]);
        }
        project_unit_ball(&mut u);
        atu.gemv_tr(1.0, a, &u, 0.0);

        // Residual balancing of the two step sizes.
        let primal = (0..n)
            .map(|j| {
                let e = (x_old[j] - x[j]) / tau + (atu_old[j] - atu[j]);
                e * e
            })
            .sum::<f64>()
            .sqrt();
        let dual = (0..m)
            .map(|i| {
                let e = (u_old[i] - u[i]) / sigma + (ax_old[i] - ax[i]);
                e * e
            })
            .sum::<f64>()
            .sqrt();
        if primal > ADAPT_DELTA * dual {
            tau /= 1.0 - alpha;
            sigma *= 1.0 - alpha;
            alpha *= ADAPT_ETA;
        } else if primal * ADAPT_DELTA < dual {
            tau *= 1.0 - alpha;
            sigma /= 1.0 - alpha;
            alpha *= ADAPT_ETA;
        }

        if it % opts.check_every != 0 {
            continue;
        }
        if run.consider(&x, Finish::Iterate, Some(&u)) {
            return Ok(run.finish(it));
        }
        let pattern: Vec<(usize, bool)> = support_of(&x).into_iter().map(|j| (j, x[j] > 0.0)).collect();
        if pattern != last_pattern {
            if let Some(p) = support_polish(a, y, &x, mu) {
                if run.consider(&p, Finish::SupportPolish, Some(&u)) {
                    return Ok(run.finish(it));
                }
            }
        }
        let looks_interpolating = u.norm() < INTERPOLATION_DUAL_NORM && 2 * pattern.len() >= m;
        // A support of size m is also where the interpolation regime begins.
        let saturated = pattern.len() >= m;
        last_pattern = pattern;
        if (looks_interpolating || saturated) && it >= next_simplex {
            let start = initial_basis(&x, &atu, m);
            if let Some(Interpolant { x: p, w }) = l1_interpolant(a, y, &start, SIMPLEX_PIVOTS_PER_ROW * m) {
                if run.consider(&p, Finish::Simplex, Some(&(w * mu))) {
                    return Ok(run.finish(it));
                }
            }
            next_simplex = it + simplex_backoff;
            simplex_backoff *= 2;
        }
    }
    log::debug!(
        "solver budget exhausted at lambda = {lambda}: residual {:.3e}",
        run.best.as_ref().map_or(f64::NAN, |b| b.cert.residual)
    );
    Ok(run.finish(opts.max_iters))
}

/// The `m` columns with the largest `|x_j|`, ties broken by `|(Aᵀu)_j|`, then index.
fn initial_basis(x: &DVector<f64>, atu: &DVector<f64>, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| {
        x[j].abs()
            .total_cmp(&x[i].abs())
            .then(atu[j].abs().total_cmp(&atu[i].abs()))
            .then(i.cmp(&j))
    });
    order.truncate(m);
    order
}

struct Candidate {
    x: DVector<f64>,
    cert: Certificate,
    finish: Finish,
}

/// Bookkeeping shared by all candidate points of one solve.
struct Run<'a> {
    a: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    lambda: f64,
    mu: f64,
    tol: f64,
    best: Option<Candidate>,
    lowest_objective: f64,
    trace: Vec<f64>,
    certified: bool,
}

impl<'a> Run<'a> {
    fn new(a: &'a DMatrix<f64>, y: &'a DVector<f64>, lambda: f64, mu: f64, opts: &SolverOptions) -> Self {
        Run {
            a,
            y,
            lambda,
            mu,
            tol: opts.tol,
            best: None,
            lowest_objective: f64::INFINITY,
            trace: Vec::new(),
            certified: false,
        }
    }

    /// Records `x`; returns `true` if it passes the certificate. `dual` is a
    /// candidate witness for the interpolating case.
    fn consider(&mut self, x: &DVector<f64>, finish: Finish, dual: Option<&DVector<f64>>) -> bool {
        let cert = certificate_with_hint(self.a, self.y, x, self.mu, dual);
        let (eq1, _) = objective_system(self.a, self.y, x, self.lambda);
        self.lowest_objective = self.lowest_objective.min(eq1);
        if finish == Finish::Iterate || finish == Finish::Start {
            self.trace.push(self.lowest_objective);
        }
        let passes = cert.residual <= self.tol * (1.0 + x.norm());
        let better = self.best.as_ref().is_none_or(|b| cert.residual < b.cert.residual);
        if passes || better {
            self.best = Some(Candidate {
                x: x.clone(),
                cert,
                finish,
            });
        }
        self.certified = passes;
        passes
    }

    fn finish(self, iterations: usize) -> LassoSolution {
        let best = self.best.expect("at least the starting point is considered");
        let (eq1, eq4) = objective_system(self.a, self.y, &best.x, self.lambda);
        LassoSolution {
            objective_eq1: eq1,
            objective_eq4: eq4,
            iterations,
            converged: self.certified,
            optimality_residual: best.cert.residual,
            objective_trace: self.trace,
            finish: if self.certified { best.finish } else { Finish::Incomplete },
            dual: best.cert.u,
            x_hat: best.x,
        }
    }
}
