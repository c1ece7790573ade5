//! Least-squares estimators over affine classes and excess-risk measurement.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::problems::{analytic_excess_risk, Dataset, LossKind, LossSpec, ProblemSpec};
use crate::rng::rng_from_seed;

/// `x ↦ slopeᵀx + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub slope: Vec<f64>,
    pub bias: f64,
}

impl AffineFunction {
    pub fn new(slope: Vec<f64>, bias: f64) -> Self {
        AffineFunction { slope, bias }
    }

    pub fn zero(dim: usize) -> Self {
        AffineFunction { slope: vec![0.0; dim], bias: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn slope_norm(&self) -> f64 {
        self.slope.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.slope.iter().all(|v| v.is_finite())
    }
}

/// Centered second-order statistics of a sample.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub n: usize,
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    /// `(1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ`
    pub cov: DMatrix<f64>,
    /// `(1/n) Σ (xᵢ − x̄) yᵢ`
    pub cross: DVector<f64>,
    /// `(1/n) Σ (yᵢ − ȳ)²`
    pub y_var: f64,
}

impl SampleMoments {
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        ensure(!data.is_empty(), || "empty dataset".into())?;
        let d = data.dim;
        let n = data.len();
        let nf = n as f64;
        let mut x_mean = DVector::zeros(d);
        let mut y_mean = 0.0;
        for (x, y) in data.rows() {
            for j in 0..d {
                x_mean[j] += x[j];
            }
            y_mean += y;
        }
        x_mean /= nf;
        y_mean /= nf;
        let mut cov = DMatrix::zeros(d, d);
        let mut cross = DVector::zeros(d);
        let mut y_var = 0.0;
        let mut xc = vec![0.0; d];
        for (x, y) in data.rows() {
            for j in 0..d {
                xc[j] = x[j] - x_mean[j];
            }
            let yc = y - y_mean;
            for i in 0..d {
                cross[i] += xc[i] * yc;
                for j in 0..=i {
                    cov[(i, j)] += xc[i] * xc[j];
                }
            }
            y_var += yc * yc;
        }
        for i in 0..d {
            for j in 0..i {
                cov[(j, i)] = cov[(i, j)];
            }
        }
        Ok(SampleMoments { n, x_mean, y_mean, cov: cov / nf, cross: cross / nf, y_var: y_var / nf })
    }

    fn intercept(&self, slope: &DVector<f64>) -> f64 {
        self.y_mean - slope.dot(&self.x_mean)
    }

    /// Empirical squared risk of `(slope, ȳ − slopeᵀx̄)`.
    pub fn centered_risk(&self, slope: &DVector<f64>) -> f64 {
        self.y_var - 2.0 * slope.dot(&self.cross) + (slope.transpose() * &self.cov * slope)[(0, 0)]
    }
}

const PIVOT_REL: f64 = 1e-12;

/// Ridge regression with an unpenalized intercept.
pub fn ridge_fit(data: &Dataset, lambda: f64) -> Result<AffineFunction> {
    ridge_fit_moments(&SampleMoments::from_dataset(data)?, lambda)
}

pub fn ridge_fit_moments(m: &SampleMoments, lambda: f64) -> Result<AffineFunction> {
    ensure(lambda >= 0.0 && lambda.is_finite(), || format!("lambda = {lambda} must be finite and ≥ 0"))?;
    let d = m.cov.nrows();
    let system = &m.cov + DMatrix::identity(d, d) * lambda;
    let scale = system.diagonal().max().max(f64::MIN_POSITIVE);
    let chol = Cholesky::new(system.clone()).ok_or_else(|| {
        Error::RankDeficient(format!("centered Gram matrix is not positive definite at lambda = {lambda}"))
    })?;
    let pivot = chol.l_dirty().diagonal().iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    if lambda == 0.0 && pivot < PIVOT_REL * scale {
        return Err(Error::RankDeficient(format!("pivot {pivot:e} below {PIVOT_REL:e} × {scale:e}")));
    }
    let slope = chol.solve(&m.cross);
    let bias = m.intercept(&slope);
    Ok(AffineFunction::new(slope.iter().copied().collect(), bias))
}

/// `√(s_yy/(4λ))`, the a-priori cap on ridge slope norms.
pub fn ridge_slope_norm_cap(m: &SampleMoments, lambda: f64) -> f64 {
    (m.y_var / (4.0 * lambda)).sqrt()
}

/// Result of minimizing `aᵀMa − 2cᵀa` over `‖a‖ ≤ L`.
#[derive(Debug, Clone)]
pub struct BallSolution {
    pub slope: DVector<f64>,
    pub lambda: f64,
    /// Duality gap `λ(L² − ‖a‖²)`.
    pub gap: f64,
    pub iterations: usize,
}

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_BISECTION: usize = 200;

/// Norm-constrained quadratic via bisection on the multiplier.
///
/// Directions in the null space of `M` are dropped, so the λ = 0 candidate is
/// the minimum-norm minimizer.
pub fn ball_constrained_quadratic(m: &DMatrix<f64>, c: &DVector<f64>, radius: f64, tol: f64) -> Result<BallSolution> {
    ensure(radius > 0.0 && radius.is_finite(), || format!("radius {radius} must be positive"))?;
    ensure(tol > 0.0, || "tolerance must be positive".into())?;
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = PIVOT_REL * top.max(f64::MIN_POSITIVE);
    let rotated = eig.eigenvectors.transpose() * c;
    let active: Vec<bool> = eig.eigenvalues.iter().map(|&l| l > floor).collect();
    let coeffs = |lam: f64| -> DVector<f64> {
        DVector::from_iterator(
            rotated.len(),
            (0..rotated.len()).map(|i| if active[i] { rotated[i] / (eig.eigenvalues[i] + lam) } else { 0.0 }),
        )
    };
    let norm_at = |lam: f64| coeffs(lam).norm();
    let unconstrained = norm_at(0.0);
    if unconstrained <= radius {
        return Ok(BallSolution { slope: &eig.eigenvectors * coeffs(0.0), lambda: 0.0, gap: 0.0, iterations: 0 });
    }
    let mut lo = 0.0;
    let mut hi = c.norm() / radius;
    for it in 1..=MAX_BISECTION {
        let norm_hi = norm_at(hi);
        if radius - norm_hi <= tol {
            let slope = &eig.eigenvectors * coeffs(hi);
            let gap = hi * (radius * radius - slope.norm_squared()).max(0.0);
            return Ok(BallSolution { slope, lambda: hi, gap, iterations: it });
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        // Guard the geometric midpoint against a stalled bracket.
        let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
        if norm_at(mid) <= radius {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_BISECTION,
        detail: format!("multiplier bracket [{lo:e}, {hi:e}], norm {} vs radius {radius}", norm_at(hi)),
    })
}

#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    pub function: AffineFunction,
    pub lambda: f64,
    /// Optimization slack of the returned estimate.
    pub alpha: f64,
    pub iterations: usize,
}

/// Least squares over `{‖slope‖ ≤ L}` with a free intercept.
pub fn constrained_lse(data: &Dataset, radius: f64, tol: f64) -> Result<ConstrainedFit> {
    constrained_lse_moments(&SampleMoments::from_dataset(data)?, radius, tol)
}

pub fn constrained_lse_moments(m: &SampleMoments, radius: f64, tol: f64) -> Result<ConstrainedFit> {
    let sol = ball_constrained_quadratic(&m.cov, &m.cross, radius, tol)?;
    let bias = m.intercept(&sol.slope);
    Ok(ConstrainedFit {
        function: AffineFunction::new(sol.slope.iter().copied().collect(), bias),
        lambda: sol.lambda,
        alpha: sol.gap,
        iterations: sol.iterations,
    })
}

/// Best affine predictor with `‖slope‖ ≤ radius` under the population law.
pub fn population_reference(spec: &ProblemSpec, radius: Option<f64>) -> Result<AffineFunction> {
    let unconstrained = spec.regression_function();
    let Some(radius) = radius else {
        return Ok(unconstrained);
    };
    let sigma = spec.covariance();
    let a_star = DVector::from_vec(spec.target_slope.clone());
    let c = &sigma * &a_star;
    let sol = ball_constrained_quadratic(&sigma, &c, radius, 1e-13 * radius.max(1.0))?;
    let mean = DVector::from_vec(spec.mean());
    let bias = spec.mean_response() - sol.slope.dot(&mean);
    Ok(AffineFunction::new(sol.slope.iter().copied().collect(), bias))
}

/// `(1/n) Σ ℓ(yᵢ, f(xᵢ))`.
pub fn empirical_risk(f: &AffineFunction, data: &Dataset, loss: &LossSpec) -> Result<f64> {
    ensure(!data.is_empty(), || "empty dataset".into())?;
    ensure(f.slope.len() == data.dim, || "function and data dimensions differ".into())?;
    if let LossKind::CrossEntropy { .. } = loss.kind {
        ensure(data.targets.iter().all(|y| (0.0..=1.0).contains(y)), || "cross-entropy targets must lie in [0,1]".into())?;
    }
    Ok(data.rows().map(|(x, y)| loss.eval(y, f.eval(x))).sum::<f64>() / data.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMethod {
    Analytic,
    MonteCarlo { n_eval: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `L(f) − L(reference)`.
pub fn measure_excess_risk(
    f: &AffineFunction,
    spec: &ProblemSpec,
    loss: &LossSpec,
    reference: &AffineFunction,
    method: RiskMethod,
) -> Result<RiskEstimate> {
    match method {
        RiskMethod::Analytic => {
            if !loss.is_squared() {
                return Err(Error::UnsupportedOracle(format!("{:?} loss", loss.kind)));
            }
            Ok(RiskEstimate { value: analytic_excess_risk(spec, f, reference)?, std_error: 0.0 })
        }
        RiskMethod::MonteCarlo { n_eval, seed } => {
            ensure(n_eval >= 2, || "Monte-Carlo evaluation needs at least 2 draws".into())?;
            let sampler = spec.sampler()?;
            let mut rng = rng_from_seed(seed);
            let mut x = vec![0.0; spec.dim];
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..n_eval {
                let y = sampler.draw(&mut rng, &mut x);
                let diff = loss.eval(y, f.eval(&x)) - loss.eval(y, reference.eval(&x));
                sum += diff;
                sum2 += diff * diff;
            }
            let n = n_eval as f64;
            let mean = sum / n;
            let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(RiskEstimate { value: mean, std_error: (var / n).sqrt() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseNormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖(rI + AᵀA)⁻¹Aᵀb‖` with `‖b‖/(2√r)`.
pub fn lsenorm_check(a: &DMatrix<f64>, b: &DVector<f64>, r: f64) -> Result<LseNormCheck> {
    ensure(r > 0.0, || format!("r = {r} must be positive"))?;
    ensure(a.nrows() == b.len(), || "A and b have incompatible shapes".into())?;
    let k = a.ncols();
    let system = DMatrix::identity(k, k) * r + a.transpose() * a;
    let chol = Cholesky::new(system).ok_or_else(|| Error::Domain("rI + AᵀA not positive definite".into()))?;
    let lhs = chol.solve(&(a.transpose() * b)).norm();
    let rhs = b.norm() / (2.0 * r.sqrt());
    Ok(LseNormCheck { lhs, rhs, holds: lhs <= rhs + 1e-12 })
}
