//! Named experiment configurations.

use crate::error::{Error, Result};
use crate::harness::{BoundSpec, EstimatorSpec, ExperimentConfig, LambdaRule};
use crate::problems::{LossSpec, ProblemSpec};

pub const NAMES: [&str; 4] = ["constrained-gaussian", "ridge-dn", "ridge-sqrt", "mbg-skew"];

const DEFAULT_SEED: u64 = 20240601;

/// Gaussian design in `R³`, ball-constrained least squares with `L = 1`.
pub fn constrained_gaussian() -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        problem: ProblemSpec::isotropic_gaussian(vec![0.3, 0.4, 0.0], 1.0, 1.0)?,
        estimator: EstimatorSpec::Constrained { radius: 1.0 },
        loss: LossSpec::squared(),
        n_grid: vec![100, 400, 1600, 6400],
        trials: 500,
        gamma: 0.1,
        master_seed: DEFAULT_SEED,
        bound: BoundSpec::Constrained,
    })
}

/// Rademacher design in `R¹` with `κ = ln 2` and ridge at `λ = d/n`.
pub fn ridge_dn() -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        problem: ProblemSpec::rademacher(1, 1.0, vec![0.5], 1.0, 1.0)?,
        estimator: EstimatorSpec::Ridge { lambda_rule: LambdaRule::DOverN },
        loss: LossSpec::squared(),
        n_grid: vec![200, 800, 3200, 12800],
        trials: 500,
        gamma: 0.1,
        master_seed: DEFAULT_SEED,
        bound: BoundSpec::Penalized { l_star: None },
    })
}

/// Gaussian design in `R³` declared with `κ = 0`, ridge at `λ = √(d/n)`.
pub fn ridge_sqrt() -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        problem: ProblemSpec::isotropic_gaussian(vec![0.3, 0.4, 0.0], 1.0, 1.0)?.with_kappa(0.0)?,
        estimator: EstimatorSpec::Ridge { lambda_rule: LambdaRule::SqrtDOverN },
        loss: LossSpec::squared(),
        n_grid: vec![200, 800, 3200, 12800],
        trials: 300,
        gamma: 0.1,
        master_seed: DEFAULT_SEED,
        bound: BoundSpec::Penalized { l_star: None },
    })
}

/// Heavy-kurtosis skewed Bernoulli design, ball radius `1/2`.
pub fn mbg_skew() -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        problem: ProblemSpec::skewed_bernoulli(0.01)?,
        estimator: EstimatorSpec::Constrained { radius: 0.5 },
        loss: LossSpec::squared(),
        n_grid: vec![400, 1600, 6400, 25600],
        trials: 300,
        gamma: 0.1,
        master_seed: DEFAULT_SEED,
        bound: BoundSpec::None,
    })
}

pub fn by_name(name: &str) -> Result<ExperimentConfig> {
    match name {
        "constrained-gaussian" => constrained_gaussian(),
        "ridge-dn" => ridge_dn(),
        "ridge-sqrt" => ridge_sqrt(),
        "mbg-skew" => mbg_skew(),
        other => Err(Error::Config(format!("unknown preset {other:?}; known: {}", NAMES.join(", ")))),
    }
}
