//! Property suite run by `chainrisk verify`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::concentration::{
    validate_chaining_tail_mc, validate_finite_max_moment_mc, validate_finite_max_subgaussian_mc, validate_sup_bound_mc,
    FiniteMaxFamily, MomentFamily, SupValidatorConfig, ValidationOutcome,
};
use crate::covering::{entropy_ball, euclidean, greedy_cover};
use crate::error::{Error, Result};
use crate::estimators::lsenorm_check;
use crate::orlicz::{gaussian_psi2, moment_bound, orlicz_norm_scalar, tail_bound, DEFAULT_TOL};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Repetitions for the Monte-Carlo validators.
    pub reps: usize,
    pub gamma: f64,
    /// Samples for the Orlicz checks.
    pub orlicz_samples: usize,
    pub finite_class_size: usize,
    pub sup_n: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 2024, reps: 2000, gamma: 0.1, orlicz_samples: 200_000, finite_class_size: 50, sup_n: 500 }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma = {} outside (0,1)", self.gamma)));
        }
        if self.orlicz_samples < 1000 || self.finite_class_size == 0 || self.sup_n == 0 {
            return Err(Error::Config("sample sizes too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_outcome(o: &ValidationOutcome) -> Self {
        CheckResult {
            name: o.name.clone(),
            passed: o.passed,
            detail: format!(
                "{} violations in {} reps, frequency {:.4} vs threshold {:.4}",
                o.violations, o.reps, o.frequency, o.threshold
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn orlicz_checks(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut rng = stream(cfg.seed, &[0x0c]);
    let xs: Vec<f64> = (0..cfg.orlicz_samples).map(|_| rng.sample(StandardNormal)).collect();
    let est = orlicz_norm_scalar(&xs, 2.0, DEFAULT_TOL)?;
    let target = gaussian_psi2(1.0);
    let tol = 10.0 / (cfg.orlicz_samples as f64).sqrt();
    let norm = CheckResult {
        name: "orlicz psi_2 of N(0,1)".into(),
        passed: (est.value - target).abs() <= tol,
        detail: format!("{:.5} vs {:.5} ± {:.3}", est.value, target, tol),
    };
    let k = xs.len() as f64;
    let mut worst_tail = f64::NEG_INFINITY;
    for i in 1..=6 {
        let t = 0.5 * i as f64;
        let freq = xs.iter().filter(|x| x.abs() >= t).count() as f64 / k;
        worst_tail = worst_tail.max(freq - tail_bound(target, 2.0, t)?);
    }
    let tails = CheckResult {
        name: "orlicz tail bound".into(),
        passed: worst_tail <= 0.0,
        detail: format!("max(empirical − bound) = {worst_tail:.3e}"),
    };
    let mut worst_moment = f64::NEG_INFINITY;
    for s in [1.0, 2.0, 4.0] {
        let emp = xs.iter().map(|x| x.abs().powf(s)).sum::<f64>() / k;
        worst_moment = worst_moment.max(emp - moment_bound(target, 2.0, s)?);
    }
    let moments = CheckResult {
        name: "orlicz moment bound".into(),
        passed: worst_moment <= 0.0,
        detail: format!("max(empirical − bound) = {worst_moment:.3e}"),
    };
    Ok(vec![norm, tails, moments])
}

fn lsenorm_checks(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut rng = stream(cfg.seed, &[0x15]);
    let mut worst = f64::NEG_INFINITY;
    let mut all = true;
    for _ in 0..100 {
        let rows = rng.random_range(1..=20);
        let cols = rng.random_range(1..=10);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r = (rng.random::<f64>() * 8.0 - 4.0).exp();
        let c = lsenorm_check(&a, &b, r)?;
        all &= c.holds;
        worst = worst.max(c.lhs / c.rhs);
    }
    Ok(CheckResult { name: "lsenorm".into(), passed: all, detail: format!("max lhs/rhs = {worst:.6}") })
}

/// Uniform points in the unit ball of `R^d`.
pub fn uniform_ball_points(d: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            g.into_iter().map(|v| v * radius / norm).collect()
        })
        .collect()
}

fn covering_checks(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut worst = f64::NEG_INFINITY;
    for d in 1..=3usize {
        let points = uniform_ball_points(d, 4000, &mut stream(cfg.seed, &[0xc0, d as u64]));
        for eps in [0.25, 0.5, 1.0] {
            let size = greedy_cover(&points, eps, euclidean).len() as f64;
            worst = worst.max(size.ln() - entropy_ball(eps, 1.0, d)?);
        }
    }
    Ok(CheckResult {
        name: "greedy cover vs ball entropy".into(),
        passed: worst <= 0.0,
        detail: format!("max(ln size − entropy) = {worst:.4}"),
    })
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifySummary> {
    cfg.validate()?;
    let mut checks = orlicz_checks(cfg)?;
    let m = cfg.finite_class_size;
    for family in [FiniteMaxFamily::Gaussian, FiniteMaxFamily::Laplace] {
        checks.push(CheckResult::from_outcome(&validate_finite_max_subgaussian_mc(family, m, cfg.gamma, cfg.reps, cfg.seed)?));
    }
    let s = (2.0 * (m as f64 / cfg.gamma).ln()).sqrt();
    checks.push(CheckResult::from_outcome(&validate_finite_max_moment_mc(
        MomentFamily::GaussianTilt { s },
        m,
        cfg.gamma,
        cfg.reps,
        cfg.seed,
    )?));
    let sup = SupValidatorConfig { n: cfg.sup_n, gamma: cfg.gamma, reps: cfg.reps, seed: cfg.seed, ..Default::default() };
    checks.push(CheckResult::from_outcome(&validate_sup_bound_mc(&sup)?));
    checks.push(CheckResult::from_outcome(&validate_chaining_tail_mc(&sup)?));
    checks.push(lsenorm_checks(cfg)?);
    checks.push(covering_checks(cfg)?);
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifySummary { config: cfg.clone(), checks, passed })
}
