//! Seeded Monte-Carlo sweeps over sample sizes with bound-dominance checks.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{constrained_bound, penalized_bound, BoundReport, LinearProblemParams};
use crate::error::{ensure, Error, Result};
use crate::estimators::{
    constrained_lse_moments, measure_excess_risk, ridge_fit_moments, AffineFunction, RiskMethod, SampleMoments,
    DEFAULT_TOL,
};
use crate::problems::{LossSpec, ProblemSpec, Sampler};
use crate::rng::derive_seed;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const MC_EVAL: usize = 1_000_000;
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    Fixed { lambda: f64 },
    SqrtDOverN,
    DOverN,
}

impl LambdaRule {
    pub fn lambda(&self, d: usize, n: usize) -> f64 {
        let ratio = d as f64 / n as f64;
        match *self {
            LambdaRule::Fixed { lambda } => lambda,
            LambdaRule::SqrtDOverN => ratio.sqrt(),
            LambdaRule::DOverN => ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Constrained { radius: f64 },
    Ridge { lambda_rule: LambdaRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundSpec {
    Constrained,
    /// `l_star` defaults to the norm of the target slope.
    Penalized {
        #[serde(default)]
        l_star: Option<f64>,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub estimator: EstimatorSpec,
    #[serde(default = "LossSpec::squared")]
    pub loss: LossSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub gamma: f64,
    pub master_seed: u64,
    #[serde(default = "default_bound")]
    pub bound: BoundSpec,
}

fn default_bound() -> BoundSpec {
    BoundSpec::None
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.problem.validate()?;
        self.loss.validate()?;
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return cfg("n_grid must be nonempty with positive entries".into());
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return cfg("n_grid must be strictly increasing".into());
        }
        if self.trials == 0 {
            return cfg("trials must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return cfg(format!("gamma = {} outside (0,1)", self.gamma));
        }
        match (self.estimator, self.bound) {
            (EstimatorSpec::Constrained { radius }, b) => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return cfg("constrained radius must be positive".into());
                }
                if matches!(b, BoundSpec::Penalized { .. }) {
                    return cfg("the penalized bound applies to ridge estimators".into());
                }
            }
            (EstimatorSpec::Ridge { lambda_rule }, b) => {
                if let LambdaRule::Fixed { lambda } = lambda_rule {
                    if !(lambda >= 0.0 && lambda.is_finite()) {
                        return cfg("fixed lambda must be finite and ≥ 0".into());
                    }
                    if lambda == 0.0 && matches!(b, BoundSpec::Penalized { .. }) {
                        return cfg("the penalized bound needs lambda > 0".into());
                    }
                }
                if matches!(b, BoundSpec::Constrained) {
                    return cfg("the constrained bound applies to constrained estimators".into());
                }
            }
        }
        Ok(())
    }

    /// Bound evaluated at sample size `n`, if one is configured.
    pub fn bound_at(&self, n: usize) -> Result<Option<BoundReport>> {
        let params = LinearProblemParams::of(&self.problem);
        match (self.bound, self.estimator) {
            (BoundSpec::None, _) => Ok(None),
            (BoundSpec::Constrained, EstimatorSpec::Constrained { radius }) => {
                constrained_bound(&params, radius, self.gamma, n).map(Some)
            }
            (BoundSpec::Penalized { l_star }, EstimatorSpec::Ridge { lambda_rule }) => {
                let l_star = l_star.unwrap_or_else(|| self.problem.target_slope.iter().map(|v| v * v).sum::<f64>().sqrt());
                penalized_bound(&params, lambda_rule.lambda(self.problem.dim, n), l_star, self.gamma, n).map(Some)
            }
            _ => Err(Error::Config("bound does not match estimator".into())),
        }
    }
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub excess_risk: f64,
    pub slope_norm: f64,
    pub alpha: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub successes: usize,
    pub failures: usize,
    pub median: f64,
    pub quantile: f64,
    #[serde(default, with = "crate::serde_ext::option")]
    pub bound: Option<f64>,
    pub dominated: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
    pub per_n: Vec<PerN>,
    pub rate_fit: Option<RateFit>,
    pub tool_version: String,
}

/// Median, with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// The `⌈level·k⌉`-th order statistic.
pub fn conservative_quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    // Shave rounding noise so 0.9·500 selects the 450th value, not the 451st.
    let rank = ((level * k as f64) - 1e-9).ceil().max(1.0) as usize;
    v[rank.min(k) - 1]
}

struct TrialOutcome {
    function: AffineFunction,
    alpha: f64,
}

fn fit(cfg: &ExperimentConfig, moments: &SampleMoments, n: usize) -> Result<TrialOutcome> {
    match cfg.estimator {
        EstimatorSpec::Constrained { radius } => {
            let f = constrained_lse_moments(moments, radius, DEFAULT_TOL)?;
            Ok(TrialOutcome { function: f.function, alpha: f.alpha })
        }
        EstimatorSpec::Ridge { lambda_rule } => {
            let f = ridge_fit_moments(moments, lambda_rule.lambda(cfg.problem.dim, n))?;
            Ok(TrialOutcome { function: f, alpha: 0.0 })
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, sampler: &Sampler, reference: &AffineFunction, n: usize, trial: usize) -> TrialRecord {
    let seed = derive_seed(cfg.master_seed, &[n as u64, trial as u64]);
    let attempt = || -> Result<TrialRecord> {
        let data = sampler.sample(n, seed)?;
        let moments = SampleMoments::from_dataset(&data)?;
        let out = fit(cfg, &moments, n)?;
        if !out.function.is_finite() {
            return Err(Error::Experiment("non-finite estimate".into()));
        }
        let method = if cfg.loss.is_squared() {
            RiskMethod::Analytic
        } else {
            RiskMethod::MonteCarlo { n_eval: MC_EVAL, seed: derive_seed(seed, &[0x5eed]) }
        };
        let risk = measure_excess_risk(&out.function, &cfg.problem, &cfg.loss, reference, method)?;
        Ok(TrialRecord {
            n,
            trial,
            seed,
            excess_risk: risk.value,
            slope_norm: out.function.slope_norm(),
            alpha: out.alpha,
            failed: false,
        })
    };
    attempt().unwrap_or(TrialRecord {
        n,
        trial,
        seed,
        excess_risk: f64::NAN,
        slope_norm: f64::NAN,
        alpha: f64::NAN,
        failed: true,
    })
}

/// Runs every `(n, trial)` pair; output is independent of the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_workers(cfg, None)
}

pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let sampler = cfg.problem.sampler()?;
    let reference = cfg.problem.regression_function();
    let jobs: Vec<(usize, usize)> = cfg.n_grid.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter().map(|&(n, t)| run_trial(cfg, &sampler, &reference, n, t)).collect()
    };
    let records = match workers {
        Some(w) => {
            ensure(w >= 1, || "workers must be at least 1".into())?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(work)
        }
        None => work(),
    };
    let failures = records.iter().filter(|r| r.failed).count();
    if failures as f64 > MAX_FAILURE_RATE * records.len() as f64 {
        return Err(Error::Experiment(format!("{failures} of {} trials failed", records.len())));
    }
    let mut bounds = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        bounds.push(cfg.bound_at(n)?.map(|b| b.total));
    }
    let per_n = summarize(&records, &cfg.n_grid, cfg.gamma, &bounds);
    let rate_fit = fit_medians(&per_n).ok();
    Ok(ExperimentResult { config: cfg.clone(), trials: records, per_n, rate_fit, tool_version: TOOL_VERSION.to_string() })
}

/// Per-`n` medians, conservative quantiles and dominance flags.
pub fn summarize(records: &[TrialRecord], n_grid: &[usize], gamma: f64, bounds: &[Option<f64>]) -> Vec<PerN> {
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let ok: Vec<f64> = records.iter().filter(|r| r.n == n && !r.failed).map(|r| r.excess_risk).collect();
            let failures = records.iter().filter(|r| r.n == n && r.failed).count();
            let quantile = conservative_quantile(&ok, 1.0 - gamma);
            let bound = bounds.get(i).copied().flatten();
            PerN {
                n,
                successes: ok.len(),
                failures,
                median: median(&ok),
                quantile,
                bound,
                dominated: bound.map(|b| quantile <= b),
            }
        })
        .collect()
}

fn fit_medians(per_n: &[PerN]) -> Result<RateFit> {
    let ns: Vec<f64> = per_n.iter().map(|p| p.n as f64).collect();
    let meds: Vec<f64> = per_n.iter().map(|p| p.median).collect();
    rate_fit(&ns, &meds)
}

/// Least squares fit of `ln(median)` on `ln(n)`.
pub fn rate_fit(ns: &[f64], medians: &[f64]) -> Result<RateFit> {
    ensure(ns.len() == medians.len(), || "grid and medians differ in length".into())?;
    ensure(ns.len() >= 3, || "rate fit needs at least 3 grid points".into())?;
    if medians.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(Error::Experiment("rate fit needs positive finite medians".into()));
    }
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    ensure(sxx > 0.0, || "rate fit needs distinct sample sizes".into())?;
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept, r2 })
}

/// Rate fit recomputed from trial records alone.
pub fn rate_fit_from_records(records: &[TrialRecord]) -> Result<RateFit> {
    let mut grid: Vec<usize> = records.iter().map(|r| r.n).collect();
    grid.sort_unstable();
    grid.dedup();
    let per_n = summarize(records, &grid, 0.5, &[]);
    fit_medians(&per_n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub per_n: Vec<PerN>,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub note: String,
}

pub const MIN_TRIALS_FOR_QUANTILE: usize = 30;

/// Checks `(1−γ)`-quantile ≤ bound at every grid point.
pub fn dominance_check(result: &ExperimentResult) -> Result<DominanceReport> {
    let cfg = &result.config;
    if matches!(cfg.bound, BoundSpec::None) {
        return Err(Error::Config("no bound configured".into()));
    }
    if cfg.trials < MIN_TRIALS_FOR_QUANTILE {
        return Err(Error::Config(format!(
            "{} trials cannot support a quantile check; need at least {MIN_TRIALS_FOR_QUANTILE}",
            cfg.trials
        )));
    }
    let mut warnings = Vec::new();
    let mut passed = true;
    for p in &result.per_n {
        match p.bound {
            Some(b) if b.is_infinite() => warnings.push(format!("n = {}: bound is infinite, check is vacuous", p.n)),
            Some(_) => passed &= p.dominated.unwrap_or(false),
            None => passed = false,
        }
    }
    let k = cfg.trials as f64;
    let g = cfg.gamma;
    let note = format!(
        "quantile is the ⌈{:.3}·{}⌉-th order statistic; exceedances of the true {:.3}-quantile are Binomial({}, {g}), mean {:.1} ± {:.1}",
        1.0 - g,
        cfg.trials,
        1.0 - g,
        cfg.trials,
        k * g,
        (k * g * (1.0 - g)).sqrt()
    );
    Ok(DominanceReport { per_n: result.per_n.clone(), passed, warnings, note })
}

pub fn write_results_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_summary_json(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(result)?)?;
    Ok(())
}

pub fn read_summary_json(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
