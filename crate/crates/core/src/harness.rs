//! Monte Carlo sweeps over (λ, σ²) with aggregated errors and matching
//! predictions.
//!
//! Every trial index `t` uses the instance seeded by
//! `derive_trial_seed(base_seed, t)`; the same seeds are reused for every
//! noise level, so all cells share the design matrices. Within one noise level
//! a trial solves its λ values in decreasing order, optionally warm-starting
//! each solve from the previous one. Trials run in parallel; statistics are
//! always accumulated in trial-index order, so results do not depend on the
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::check_positive;
use crate::dims::{Dims, NoiseLevel};
use crate::error::{Error, Result};
use crate::gordon::solve_minmax;
use crate::instance::{derive_trial_seed, ProblemInstance};
use crate::prediction::{
    lambda_crit_sigma, lambda_crit_zero, lambda_max, predict_nse, predict_nse_zero_noise, Prediction,
};
use crate::solver::{solve_from, SolverOptions, WarmStart};

/// Noise levels at or below this use the zero-noise prediction.
pub const ZERO_NOISE_ROUTING_SIGMA2: f64 = 1e-4;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "SQRTLASSO_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dims: Dims,
    pub sigma2_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    /// Extra λ values per noise level, as multiples of that level's λ_crit^σ.
    pub critical_multiples: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver_opts: SolverOptions,
    pub warm_start: bool,
    /// Worker threads; `None` reads [`THREADS_ENV`], else all logical cores.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sigma2_list.is_empty() {
            return Err(Error::Config("sigma2 list is empty".into()));
        }
        if self.lambda_list.is_empty() && self.critical_multiples.is_empty() {
            return Err(Error::Config("lambda list is empty".into()));
        }
        for &s2 in &self.sigma2_list {
            check_positive("sigma2", s2).map_err(|_| {
                Error::Config(format!("sigma2 = {s2}: sweeps need strictly positive noise"))
            })?;
        }
        for &l in self.lambda_list.iter().chain(&self.critical_multiples) {
            check_positive("lambda", l)?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        self.solver_opts.validate()
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lambda: f64,
    pub sigma2: f64,
    /// `‖x̂ − x₀‖²/σ²`.
    pub nse: f64,
    /// `‖x̂ − x₀‖/(σ√m)`.
    pub nse_norm: f64,
    /// Rescaled objective `√m·(‖y − Ax̂‖ + (λ/√m)‖x̂‖₁)`.
    pub objective: f64,
    pub converged: bool,
    pub optimality_residual: f64,
    pub iterations: usize,
}

/// Mean and unbiased standard deviation over converged trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub nse_mean: f64,
    pub nse_std: f64,
    pub nse_norm_mean: f64,
    pub nse_norm_std: f64,
    pub obj_mean: f64,
    pub obj_std: f64,
    pub converged: usize,
    pub total: usize,
}

/// Aggregates trial records in increasing trial-index order. Only converged
/// trials enter the statistics; a single trial has standard deviation 0.
pub fn aggregate(records: &[TrialRecord]) -> Result<Stats> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.trial);
    let kept: Vec<&TrialRecord> = sorted.into_iter().filter(|r| r.converged).collect();
    if kept.is_empty() {
        return Err(Error::AllTrialsDiverged { trials: records.len() });
    }
    let moments = |f: fn(&TrialRecord) -> f64| mean_std(kept.iter().map(|r| f(r)));
    let (nse_mean, nse_std) = moments(|r| r.nse);
    let (nse_norm_mean, nse_norm_std) = moments(|r| r.nse_norm);
    let (obj_mean, obj_std) = moments(|r| r.objective);
    Ok(Stats {
        nse_mean,
        nse_std,
        nse_norm_mean,
        nse_norm_std,
        obj_mean,
        obj_std,
        converged: kept.len(),
        total: records.len(),
    })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (count - 1) as f64).sqrt())
}

/// One aggregated (λ, σ²) cell next to its predictions. Empirical fields are
/// `None` when no trial converged; predicted fields are `None` when the
/// prediction diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub sigma2: f64,
    pub nse_mean: Option<f64>,
    pub nse_std: Option<f64>,
    pub nse_norm_mean: Option<f64>,
    pub obj_mean: Option<f64>,
    /// Predicted `‖x̂ − x₀‖/(σ√m)`.
    pub predicted_nse: Option<f64>,
    /// Optimal value 𝒟* of the min-max.
    pub predicted_obj: Option<f64>,
    pub clamped: bool,
    pub divergent: bool,
    pub trials_converged: usize,
    pub seed: u64,
}

/// 25 log-spaced points over `[0.3·λ_crit^0, 1.1·λ_max]`.
pub fn default_lambda_grid(dims: Dims) -> Result<Vec<f64>> {
    let lo = 0.3 * lambda_crit_zero(dims);
    let hi = 1.1 * lambda_max(dims)?;
    let steps = 24;
    Ok((0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect())
}

/// Prediction used in sweeps: zero-noise formula for `σ² ≤ 1e-4`, the fixed
/// point otherwise.
pub fn sweep_prediction(lambda: f64, dims: Dims, noise: NoiseLevel) -> Result<Prediction> {
    if noise.sigma2() <= ZERO_NOISE_ROUTING_SIGMA2 {
        predict_nse_zero_noise(lambda, dims)
    } else {
        predict_nse(lambda, dims, noise)
    }
}

/// Runs the sweep and returns every row.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    run_sweep_with(config, |block| {
        rows.extend_from_slice(block);
        Ok(())
    })?;
    Ok(rows)
}

/// Runs the sweep, handing each noise level's rows (λ ascending) to `sink`
/// as soon as they are complete.
pub fn run_sweep_with<F>(config: &SweepConfig, mut sink: F) -> Result<()>
where
    F: FnMut(&[SweepRow]) -> Result<()>,
{
    config.validate()?;
    let threads = config.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    for &s2 in &config.sigma2_list {
        let noise = NoiseLevel::new(s2)?;
        let lambdas = block_lambdas(config, noise)?;
        let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_trial(config, noise, &lambdas, t))
                .collect::<Result<Vec<_>>>()
        })?;
        let block = lambdas
            .iter()
            .enumerate()
            .rev()
            .map(|(j, &lambda)| {
                let records: Vec<TrialRecord> = per_trial.iter().map(|recs| recs[j]).collect();
                build_row(config, noise, lambda, &records)
            })
            .collect::<Result<Vec<_>>>()?;
        sink(&block)?;
    }
    Ok(())
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// λ values of one noise level, sorted decreasing and deduplicated.
fn block_lambdas(config: &SweepConfig, noise: NoiseLevel) -> Result<Vec<f64>> {
    let mut lambdas = config.lambda_list.clone();
    if !config.critical_multiples.is_empty() {
        let crit = lambda_crit_sigma(config.dims, noise)?;
        lambdas.extend(config.critical_multiples.iter().map(|c| c * crit));
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();
    Ok(lambdas)
}

fn run_trial(config: &SweepConfig, noise: NoiseLevel, lambdas: &[f64], trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = derive_trial_seed(config.base_seed, trial as u64);
    let instance = ProblemInstance::generate(config.dims, noise, seed);
    let sigma = noise.sigma();
    let sqrt_m = (config.dims.m() as f64).sqrt();
    let mut warm: Option<WarmStart> = None;
    lambdas
        .iter()
        .map(|&lambda| {
            let sol = solve_from(&instance, lambda, &config.solver_opts, warm.as_ref())?;
            if !sol.converged {
                log::warn!(
                    "trial {trial} (seed {seed}), lambda {lambda}, sigma2 {}: no certificate, residual {:.3e}",
                    noise.sigma2(),
                    sol.optimality_residual
                );
            }
            let err = instance.error_norm(&sol.x_hat);
            let record = TrialRecord {
                trial,
                seed,
                lambda,
                sigma2: noise.sigma2(),
                nse: err * err / noise.sigma2(),
                nse_norm: err / (sigma * sqrt_m),
                objective: sol.objective_eq4,
                converged: sol.converged,
                optimality_residual: sol.optimality_residual,
                iterations: sol.iterations,
            };
            if config.warm_start {
                warm = Some(sol.warm_start());
            }
            Ok(record)
        })
        .collect()
}

fn build_row(config: &SweepConfig, noise: NoiseLevel, lambda: f64, records: &[TrialRecord]) -> Result<SweepRow> {
    let stats = match aggregate(records) {
        Ok(s) => Some(s),
        Err(Error::AllTrialsDiverged { .. }) => None,
        Err(e) => return Err(e),
    };
    let prediction = sweep_prediction(lambda, config.dims, noise)?;
    let predicted_obj = match solve_minmax(config.dims, noise, lambda) {
        Ok(s) => Some(s.d_star),
        Err(Error::Diverged { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        lambda,
        sigma2: noise.sigma2(),
        nse_mean: stats.map(|s| s.nse_mean),
        nse_std: stats.map(|s| s.nse_std),
        nse_norm_mean: stats.map(|s| s.nse_norm_mean),
        obj_mean: stats.map(|s| s.obj_mean),
        predicted_nse: prediction.nse_norm,
        predicted_obj,
        clamped: prediction.clamped,
        divergent: prediction.divergent,
        trials_converged: stats.map_or(0, |s| s.converged),
        seed: config.base_seed,
    })
}
