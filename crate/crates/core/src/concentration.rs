//! Maximal inequalities for finite classes, chaining bounds for suprema of
//! empirical processes, and Monte-Carlo checks of their failure rates.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, BoundTerms};
use crate::covering::{entropy_integral_with, EntropyFunction, IntegrandForm};
use crate::error::{ensure, Result};
use crate::orlicz::{gaussian_psi2, laplace_psi1};
use crate::problems::ProblemSpec;
use crate::rng::stream;

/// `σ (ln(2m/γ))^{1/q}`.
pub fn finite_max_bound_subgaussian(sigma: f64, m: usize, gamma: f64, q: f64) -> Result<f64> {
    ensure(m >= 1, || "class size must be at least 1".into())?;
    ensure(gamma > 0.0 && sigma >= 0.0, || "need gamma > 0 and sigma ≥ 0".into())?;
    ensure(q == 1.0 || q == 2.0, || format!("q = {q} must be 1 or 2"))?;
    Ok(sigma * (2.0 * m as f64 / gamma).ln().powf(1.0 / q))
}

/// `θ ln(m/γ)`.
pub fn finite_max_bound_moment(theta: f64, m: usize, gamma: f64) -> Result<f64> {
    ensure(m >= 1, || "class size must be at least 1".into())?;
    ensure(theta > 0.0 && gamma > 0.0, || "need theta > 0 and gamma > 0".into())?;
    Ok(theta * (m as f64 / gamma).ln())
}

/// Constants of an empirical-process supremum bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessBoundInput {
    pub q: f64,
    #[serde(with = "crate::serde_ext")]
    pub s: f64,
    pub t_env: f64,
    pub theta: f64,
    pub gamma: f64,
    pub entropy: EntropyFunction,
    pub eps: f64,
    pub delta: f64,
    /// Radius of the class around the anchor function.
    pub beta: f64,
}

impl ProcessBoundInput {
    fn check(&self, upper: f64) -> Result<()> {
        ensure(self.gamma > 0.0 && self.gamma < 1.0, || format!("gamma = {} outside (0,1)", self.gamma))?;
        ensure(self.q == 1.0 || self.q == 2.0, || format!("q = {} must be 1 or 2", self.q))?;
        ensure(self.s >= 0.0 && self.t_env >= 0.0, || "S and T must be nonnegative".into())?;
        ensure(self.delta >= 0.0 && self.delta <= upper, || format!("need 0 ≤ δ = {} ≤ {upper}", self.delta))?;
        ensure(self.s.is_finite() || self.delta == upper, || "S = ∞ requires δ at the upper limit".into())?;
        self.entropy.validate()
    }
}

/// `4S ∫_δ^{β/2} (H(z) + ln(4β/(zγ)))^{1/q} dz + 4δT`.
pub fn chaining_tail_bound(input: &ProcessBoundInput) -> Result<f64> {
    ensure(input.beta >= 0.0 && input.beta.is_finite(), || "beta must be finite and nonnegative".into())?;
    let upper = input.beta / 2.0;
    input.check(upper)?;
    let integral = if input.delta == upper || input.s == 0.0 {
        0.0
    } else {
        4.0 * input.s * entropy_integral_with(&input.entropy, input.delta, upper, input.q, input.gamma, IntegrandForm::SUP_SQRT_N)?
    };
    Ok(integral + 4.0 * input.delta * input.t_env)
}

/// `θ(H(ε) + ln(2/γ)) + 8S ∫_δ^ε (2H(z) + ln(16ε/(zγ)))^{1/q} dz + 8δT`.
pub fn sup_process_bound(input: &ProcessBoundInput) -> Result<BoundReport> {
    ensure(input.eps > 0.0 && input.eps.is_finite(), || "eps must be positive".into())?;
    ensure(input.theta > 0.0, || "theta must be positive".into())?;
    input.check(input.eps)?;
    let moment_term = input.theta * (input.entropy.eval(input.eps)? + (2.0 / input.gamma).ln());
    let integral_term = if input.delta == input.eps || input.s == 0.0 {
        0.0
    } else {
        8.0 * input.s * entropy_integral_with(&input.entropy, input.delta, input.eps, input.q, input.gamma, IntegrandForm::SUP_N)?
    };
    let delta_t_term = 8.0 * input.delta * input.t_env;
    let mut inputs = serde_json::Map::new();
    inputs.insert("process".into(), serde_json::to_value(input).unwrap_or_default());
    Ok(BoundReport {
        total: moment_term + integral_term + delta_t_term,
        terms: BoundTerms { moment_term, integral_term, delta_t_term, approx_term: 0.0, floor_term: 0.0, penalty_term: None },
        inputs,
    })
}

/// Outcome of a Monte-Carlo failure-rate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub name: String,
    pub reps: usize,
    pub violations: usize,
    pub frequency: f64,
    pub gamma: f64,
    /// `γ + 3√(γ(1−γ)/reps)`.
    pub threshold: f64,
    #[serde(with = "crate::serde_ext")]
    pub bound: f64,
    pub passed: bool,
}

impl ValidationOutcome {
    fn new(name: &str, reps: usize, violations: usize, gamma: f64, bound: f64) -> Self {
        let frequency = violations as f64 / reps as f64;
        let threshold = gamma + 3.0 * (gamma * (1.0 - gamma) / reps as f64).sqrt();
        ValidationOutcome {
            name: name.to_string(),
            reps,
            violations,
            frequency,
            gamma,
            threshold,
            bound,
            passed: frequency <= threshold,
        }
    }
}

fn count_parallel<F>(reps: usize, seed: u64, tag: u64, exceeds: F) -> usize
where
    F: Fn(&mut crate::rng::SimRng) -> bool + Sync,
{
    (0..reps)
        .into_par_iter()
        .filter(|&rep| exceeds(&mut stream(seed, &[tag, rep as u64])))
        .count()
}

/// Distribution family for the finite-class sub-Gaussian check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteMaxFamily {
    /// `N(0,1)` with ψ₂ norm `√(8/3)`.
    Gaussian,
    /// Laplace(1) with ψ₁ norm 2.
    Laplace,
}

/// Frequency with which the max of `m` iid variables exceeds the ψ_q bound.
pub fn validate_finite_max_subgaussian_mc(family: FiniteMaxFamily, m: usize, gamma: f64, reps: usize, seed: u64) -> Result<ValidationOutcome> {
    ensure(reps >= 1, || "reps must be positive".into())?;
    let (q, sigma) = match family {
        FiniteMaxFamily::Gaussian => (2.0, gaussian_psi2(1.0)),
        FiniteMaxFamily::Laplace => (1.0, laplace_psi1(1.0)),
    };
    let bound = finite_max_bound_subgaussian(sigma, m, gamma, q)?;
    let draw = move |rng: &mut crate::rng::SimRng| -> f64 {
        match family {
            FiniteMaxFamily::Gaussian => rng.sample(StandardNormal),
            FiniteMaxFamily::Laplace => {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() { e } else { -e }
            }
        }
    };
    let violations = count_parallel(reps, seed, 1 + q as u64, |rng| (0..m).map(|_| draw(rng)).fold(f64::NEG_INFINITY, f64::max) > bound);
    let name = format!("finite max, psi_{q}");
    Ok(ValidationOutcome::new(&name, reps, violations, gamma, bound))
}

/// Variables with `E e^{W/θ} = 1` for the moment-form check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentFamily {
    /// `W/θ = sX − s²/2` with `X ~ N(0,1)`.
    GaussianTilt { s: f64 },
    /// `W/θ = ln(2U)` with `U ~ Uniform(0,1)`.
    LogUniform,
}

pub fn validate_finite_max_moment_mc(family: MomentFamily, m: usize, gamma: f64, reps: usize, seed: u64) -> Result<ValidationOutcome> {
    ensure(reps >= 1, || "reps must be positive".into())?;
    let theta = 1.0;
    let bound = finite_max_bound_moment(theta, m, gamma)?;
    let draw = move |rng: &mut crate::rng::SimRng| -> f64 {
        match family {
            MomentFamily::GaussianTilt { s } => {
                let x: f64 = rng.sample(StandardNormal);
                theta * (s * x - s * s / 2.0)
            }
            MomentFamily::LogUniform => theta * (2.0 * (1.0 - rng.random::<f64>())).ln(),
        }
    };
    let violations = count_parallel(reps, seed, 7, |rng| (0..m).map(|_| draw(rng)).fold(f64::NEG_INFINITY, f64::max) > bound);
    Ok(ValidationOutcome::new("finite max, moment form", reps, violations, gamma, bound))
}

/// Quadratic regression process over a ball of slopes under an isotropic
/// Gaussian design, with the population means treated as known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupValidatorConfig {
    pub n: usize,
    pub gamma: f64,
    pub reps: usize,
    pub seed: u64,
    /// Slope-ball radius `L`.
    pub radius: f64,
    pub target_slope: Vec<f64>,
    pub noise_sd: f64,
    /// Multiplier `r` in `rE[Z] − E_n[Z]`; `0` gives the plain process.
    pub r: f64,
    pub eps: f64,
    pub delta: f64,
    /// Net spacing as a fraction of `eps`.
    pub net_fraction: f64,
}

impl Default for SupValidatorConfig {
    fn default() -> Self {
        SupValidatorConfig {
            n: 500,
            gamma: 0.1,
            reps: 2000,
            seed: 2024,
            radius: 1.0,
            target_slope: vec![0.3, 0.4],
            noise_sd: 1.0,
            r: 0.5,
            eps: 0.1,
            delta: 0.05,
            net_fraction: 0.25,
        }
    }
}

/// Certified constants of the regression process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionProcessConstants {
    pub b: f64,
    pub r_env: f64,
    pub r0: f64,
    pub theta_sample: f64,
    pub s_process: f64,
    pub t_env: f64,
}

impl SupValidatorConfig {
    fn problem(&self) -> Result<ProblemSpec> {
        ProblemSpec::isotropic_gaussian(self.target_slope.clone(), 0.0, self.noise_sd)
    }

    fn validate(&self) -> Result<()> {
        ensure(self.n >= 1 && self.reps >= 1, || "n and reps must be positive".into())?;
        ensure(!self.target_slope.is_empty() && self.target_slope.len() <= 3, || "validator supports 1 ≤ d ≤ 3".into())?;
        ensure(self.r >= 0.0 && self.r < 1.0, || "r must lie in [0,1)".into())?;
        ensure(self.radius > 0.0 && self.eps > 0.0 && self.net_fraction > 0.0, || "radius, eps and net fraction must be positive".into())?;
        let a: f64 = self.target_slope.iter().map(|v| v * v).sum::<f64>().sqrt();
        ensure(a <= self.radius, || "target slope must lie in the slope ball".into())
    }

    /// Constants for the process `r E[Z_a] − E_n[Z_a]`, `Z_a = (Y − f_a)² − (Y − f*)²`.
    pub fn constants(&self) -> Result<RegressionProcessConstants> {
        self.validate()?;
        let spec = self.problem()?;
        let d = spec.dim as f64;
        let (bx, by, l) = (spec.b_x, spec.b_y, self.radius);
        let a_norm = self.target_slope.iter().map(|v| v * v).sum::<f64>().sqrt();
        let reach = l + a_norm;
        let b = reach * bx;
        let r_env = reach * bx + 2.0 * by;
        let r0 = d * b * r_env;
        let theta_sample = crate::bounds::theta_from_constants(b, r_env, 2.0, self.r, 2.0, 2.0, 3.0, self.n, r0)?;
        // ‖UV‖_ψ1 ≤ ‖U‖_ψ2 ‖V‖_ψ2, centering costs 1 + 2/(e ln 2), sums of n cost 4/√n.
        let centering = 1.0 + 2.0 / (std::f64::consts::E * std::f64::consts::LN_2);
        let s_process = 4.0 * centering * bx * (2.0 * l * bx + 2.0 * by) / (self.n as f64).sqrt();
        let m1 = (2.0 * l + 1.0) * bx * bx + by * by;
        let t_env = m1 * (2.0 / std::f64::consts::E + (4.0 / self.gamma).ln());
        Ok(RegressionProcessConstants { b, r_env, r0, theta_sample, s_process, t_env })
    }

    pub fn sup_bound(&self) -> Result<BoundReport> {
        let c = self.constants()?;
        sup_process_bound(&ProcessBoundInput {
            q: 1.0,
            s: c.s_process,
            t_env: c.t_env,
            theta: c.theta_sample / self.n as f64,
            gamma: self.gamma,
            entropy: EntropyFunction::ball(self.target_slope.len(), self.radius),
            eps: self.eps,
            delta: self.delta,
            beta: 2.0 * self.radius,
        })
    }

    pub fn chaining_bound(&self) -> Result<f64> {
        let c = self.constants()?;
        let beta = self.radius + self.target_slope.iter().map(|v| v * v).sum::<f64>().sqrt();
        chaining_tail_bound(&ProcessBoundInput {
            q: 1.0,
            s: c.s_process,
            t_env: c.t_env,
            theta: 1.0,
            gamma: self.gamma,
            entropy: EntropyFunction::ball(self.target_slope.len(), self.radius),
            eps: beta / 2.0,
            delta: self.delta.min(beta / 2.0),
            beta,
        })
    }

    /// Grid of slopes in the ball with the given spacing.
    fn net(&self) -> Vec<Vec<f64>> {
        let d = self.target_slope.len();
        let h = self.eps * self.net_fraction;
        let k = (self.radius / h).floor() as i64;
        let mut out = Vec::new();
        let mut idx = vec![-k; d];
        loop {
            let a: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
            if a.iter().map(|v| v * v).sum::<f64>() <= self.radius * self.radius * (1.0 + 1e-12) {
                out.push(a);
            }
            let mut j = 0;
            loop {
                if j == d {
                    return out;
                }
                idx[j] += 1;
                if idx[j] <= k {
                    break;
                }
                idx[j] = -k;
                j += 1;
            }
        }
    }

    /// Differences `a − a*` over the net, optionally restricted to excess risk above `r₀/n`.
    fn deltas(&self, floor: Option<f64>) -> Vec<Vec<f64>> {
        self.net()
            .into_iter()
            .map(|a| a.iter().zip(&self.target_slope).map(|(x, s)| x - s).collect::<Vec<f64>>())
            .filter(|dl| floor.is_none_or(|f| dl.iter().map(|v| v * v).sum::<f64>() > f))
            .collect()
    }

    /// `(Σ̂₀, ĉ₀)` with known means: `(1/n)Σ xxᵀ` and `(1/n)Σ x e`.
    fn empirical(&self, rng: &mut crate::rng::SimRng) -> (Vec<f64>, Vec<f64>) {
        let d = self.target_slope.len();
        let mut cov = vec![0.0; d * d];
        let mut cross = vec![0.0; d];
        let mut x = vec![0.0; d];
        for _ in 0..self.n {
            for xi in x.iter_mut() {
                *xi = rng.sample(StandardNormal);
            }
            let e: f64 = self.noise_sd * rng.sample::<f64, _>(StandardNormal);
            for i in 0..d {
                cross[i] += x[i] * e;
                for j in 0..d {
                    cov[i * d + j] += x[i] * x[j];
                }
            }
        }
        let nf = self.n as f64;
        (cov.iter().map(|v| v / nf).collect(), cross.iter().map(|v| v / nf).collect())
    }
}

fn process_value(r: f64, dl: &[f64], cov: &[f64], cross: &[f64]) -> f64 {
    let d = dl.len();
    let pop: f64 = dl.iter().map(|v| v * v).sum();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += dl[i] * cov[i * d + j] * dl[j];
        }
    }
    let lin: f64 = dl.iter().zip(cross).map(|(a, b)| a * b).sum();
    r * pop - (quad - 2.0 * lin)
}

/// Frequency with which the net supremum of `r E[Z] − E_n[Z]` exceeds the sup-process bound.
pub fn validate_sup_bound_mc(cfg: &SupValidatorConfig) -> Result<ValidationOutcome> {
    let c = cfg.constants()?;
    let bound = cfg.sup_bound()?.total;
    let deltas = cfg.deltas(Some(c.r0 / cfg.n as f64));
    let violations = if deltas.is_empty() {
        0
    } else {
        count_parallel(cfg.reps, cfg.seed, 11, |rng| {
            let (cov, cross) = cfg.empirical(rng);
            deltas.iter().any(|dl| process_value(cfg.r, dl, &cov, &cross) > bound)
        })
    };
    Ok(ValidationOutcome::new("sup-process bound", cfg.reps, violations, cfg.gamma, bound))
}

/// Same check for the centered process against the chaining tail bound.
pub fn validate_chaining_tail_mc(cfg: &SupValidatorConfig) -> Result<ValidationOutcome> {
    let bound = cfg.chaining_bound()?;
    let deltas = cfg.deltas(None);
    let violations = count_parallel(cfg.reps, cfg.seed, 13, |rng| {
        let (cov, cross) = cfg.empirical(rng);
        deltas.iter().any(|dl| process_value(1.0, dl, &cov, &cross) > bound)
    });
    Ok(ValidationOutcome::new("chaining tail bound", cfg.reps, violations, cfg.gamma, bound))
}
