//! Generative regression problems, samplers and closed-form risk oracles.
//!
//! A problem draws `X` from a design distribution and sets
//! `Y = a*ᵀ(X − EX) + b + σξ` with standard Gaussian `ξ`. Every constructor
//! also declares certified sub-Gaussian constants: `b_x ≥ ‖X − EX‖_ψ2`,
//! `b_y ≥ ‖Y − EY‖_ψ2` and an eigenvalue floor `kappa` with
//! `kappa · b_x² ≤ λ_min(Σ)`.
//!
//! The certified constants use one route for every design. If a centered
//! variable `U` satisfies `E e^{tU} ≤ e^{t²v/2}` (variance proxy `v`), then
//! `E e^{λU²} ≤ (1 − 2λv)^{-1/2}`, and for independent coordinates the product
//! of those factors stays below 2 once `B² = (8/3) Σ v_j`. Gaussian coordinates
//! have `v = σ²`, a centered variable in an interval of length `w` has
//! `v = w²/4`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::estimators::AffineFunction;
use crate::rng::rng_from_seed;

const PSI2_GAUSS: f64 = 8.0 / 3.0;

/// Design distribution of the covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Design {
    /// `X ~ N(mean, covariance)`.
    Gaussian { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    /// `X = [W, Z, 1]` with `W ~ N(0,1)` and `Z ∈ {−p, 1−p}`, `P{Z = 1−p} = p`.
    SkewedBernoulli { p: f64 },
    /// Independent coordinates `±scale` with equal probability.
    Rademacher { scale: f64 },
}

impl Design {
    pub fn kind(&self) -> &'static str {
        match self {
            Design::Gaussian { .. } => "gaussian",
            Design::SkewedBernoulli { .. } => "skewed_bernoulli",
            Design::Rademacher { .. } => "rademacher",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dim: usize,
    pub design: Design,
    pub target_slope: Vec<f64>,
    pub target_bias: f64,
    pub noise_sd: f64,
    pub b_x: f64,
    pub b_y: f64,
    pub kappa: f64,
}

/// A training sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub seed: u64,
    pub problem_id: String,
}

impl Dataset {
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        ensure(!rows.is_empty(), || "dataset needs at least one row".into())?;
        ensure(rows.len() == targets.len(), || "row and target counts differ".into())?;
        let dim = rows[0].len();
        ensure(rows.iter().all(|r| r.len() == dim), || "ragged feature rows".into())?;
        let features: Vec<f64> = rows.iter().flatten().copied().collect();
        ensure(features.iter().chain(targets).all(|v| v.is_finite()), || "non-finite entry".into())?;
        Ok(Dataset { dim, features, targets: targets.to_vec(), seed: 0, problem_id: "manual".into() })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks_exact(self.dim).zip(self.targets.iter().copied())
    }

    /// Concatenates two datasets over the same feature space.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        ensure(self.dim == other.dim, || "dimension mismatch".into())?;
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.targets.extend_from_slice(&other.targets);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Absolute,
    /// Cross-entropy on `(0,1)` targets with predictions clipped to `[clip, 1 − clip]`.
    CrossEntropy { clip: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub lipschitz_r: Option<f64>,
    pub strong_convexity_kappa: Option<f64>,
}

impl LossSpec {
    pub fn squared() -> Self {
        LossSpec { kind: LossKind::Squared, lipschitz_r: None, strong_convexity_kappa: Some(2.0) }
    }

    pub fn absolute() -> Self {
        LossSpec { kind: LossKind::Absolute, lipschitz_r: Some(1.0), strong_convexity_kappa: None }
    }

    pub fn cross_entropy(clip: f64) -> Result<Self> {
        ensure(clip > 0.0 && clip < 0.5, || format!("cross-entropy clip {clip} outside (0, 1/2)"))?;
        Ok(LossSpec {
            kind: LossKind::CrossEntropy { clip },
            lipschitz_r: Some(1.0 / clip),
            strong_convexity_kappa: Some((1.0 - clip).powi(-2)),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            LossKind::Squared => LossSpec::squared(),
            LossKind::Absolute => LossSpec::absolute(),
            LossKind::CrossEntropy { clip } => LossSpec::cross_entropy(clip)?,
        };
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * b.abs().max(1.0),
            (None, None) => true,
            _ => false,
        };
        if !close(self.lipschitz_r, expected.lipschitz_r)
            || !close(self.strong_convexity_kappa, expected.strong_convexity_kappa)
        {
            return Err(Error::Config(format!("loss constants inconsistent with {:?}", self.kind)));
        }
        Ok(())
    }

    pub fn is_squared(&self) -> bool {
        matches!(self.kind, LossKind::Squared)
    }

    /// Loss of predicting `yhat` for target `y`.
    pub fn eval(&self, y: f64, yhat: f64) -> f64 {
        match self.kind {
            LossKind::Squared => (y - yhat) * (y - yhat),
            LossKind::Absolute => (y - yhat).abs(),
            LossKind::CrossEntropy { clip } => {
                let z = yhat.clamp(clip, 1.0 - clip);
                xlogx_ratio(y, z) + xlogx_ratio(1.0 - y, 1.0 - z)
            }
        }
    }
}

fn xlogx_ratio(y: f64, z: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y * (y / z).ln()
    }
}

/// Precomputed sampling state for a validated problem.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: ProblemSpec,
    mean: Vec<f64>,
    factor: Option<DMatrix<f64>>,
    id: String,
}

impl ProblemSpec {
    /// Gaussian design with certified `b_x = √(8/3 · tr Σ)`.
    pub fn gaussian(
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        target_slope: Vec<f64>,
        target_bias: f64,
        noise_sd: f64,
    ) -> Result<Self> {
        let dim = mean.len();
        let sigma = to_matrix(&covariance, dim)?;
        let a = DVector::from_vec(target_slope.clone());
        ensure(a.len() == dim, || "target slope length differs from dimension".into())?;
        let trace = sigma.trace();
        let b_x = (PSI2_GAUSS * trace).sqrt();
        let explained = (a.transpose() * &sigma * &a)[(0, 0)];
        let b_y = (PSI2_GAUSS * (explained + noise_sd * noise_sd)).sqrt();
        let lam_min = min_eigenvalue(&sigma);
        let kappa = if b_x > 0.0 { (lam_min / (b_x * b_x)).max(0.0) } else { 0.0 };
        let spec = ProblemSpec {
            dim,
            design: Design::Gaussian { mean, covariance },
            target_slope,
            target_bias,
            noise_sd,
            b_x,
            b_y,
            kappa,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Standard isotropic Gaussian design `N(0, I_d)`.
    pub fn isotropic_gaussian(target_slope: Vec<f64>, target_bias: f64, noise_sd: f64) -> Result<Self> {
        let d = target_slope.len();
        let cov = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::gaussian(vec![0.0; d], cov, target_slope, target_bias, noise_sd)
    }

    /// The skewed three-coordinate family with `Y = 1 + ξ`.
    ///
    /// `b_x` uses proxies 1 for `W` and 1/4 for `Z` (range 1), so it does not
    /// depend on `p`.
    pub fn skewed_bernoulli(p: f64) -> Result<Self> {
        Self::skewed_bernoulli_with(p, vec![0.0; 3], 1.0, 1.0)
    }

    pub fn skewed_bernoulli_with(p: f64, target_slope: Vec<f64>, target_bias: f64, noise_sd: f64) -> Result<Self> {
        ensure(target_slope.len() == 3, || "skewed design has dimension 3".into())?;
        let b_x = (PSI2_GAUSS * 1.25).sqrt();
        let proxy = target_slope[0].powi(2) + target_slope[1].powi(2) / 4.0 + noise_sd * noise_sd;
        let spec = ProblemSpec {
            dim: 3,
            design: Design::SkewedBernoulli { p },
            target_slope,
            target_bias,
            noise_sd,
            b_x,
            b_y: (PSI2_GAUSS * proxy).sqrt(),
            kappa: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric `±scale` coordinates. `‖X‖ = scale·√d` is constant, so
    /// `b_x = scale·√(d/ln 2)` is exact and `kappa = ln 2 / d`.
    pub fn rademacher(dim: usize, scale: f64, target_slope: Vec<f64>, target_bias: f64, noise_sd: f64) -> Result<Self> {
        ensure(target_slope.len() == dim, || "target slope length differs from dimension".into())?;
        let b_x = scale * (dim as f64 / std::f64::consts::LN_2).sqrt();
        let a2: f64 = target_slope.iter().map(|v| v * v).sum();
        let b_y = (PSI2_GAUSS * (scale * scale * a2 + noise_sd * noise_sd)).sqrt();
        let kappa = if scale > 0.0 { std::f64::consts::LN_2 / dim as f64 } else { 0.0 };
        let spec = ProblemSpec {
            dim,
            design: Design::Rademacher { scale },
            target_slope,
            target_bias,
            noise_sd,
            b_x,
            b_y,
            kappa,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the declared eigenvalue floor, e.g. with 0 to disable it.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn id(&self) -> String {
        format!("{}-d{}", self.design.kind(), self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        match &self.design {
            Design::Gaussian { mean, .. } => mean.clone(),
            Design::SkewedBernoulli { .. } => vec![0.0, 0.0, 1.0],
            Design::Rademacher { .. } => vec![0.0; self.dim],
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.design {
            Design::Gaussian { covariance, .. } => {
                DMatrix::from_fn(self.dim, self.dim, |i, j| covariance[i][j])
            }
            Design::SkewedBernoulli { p } => DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, p * (1.0 - p), 0.0])),
            Design::Rademacher { scale } => DMatrix::identity(self.dim, self.dim) * (scale * scale),
        }
    }

    pub fn mean_response(&self) -> f64 {
        self.target_bias
    }

    /// The regression function as an affine map of the raw features.
    pub fn regression_function(&self) -> AffineFunction {
        let mean = self.mean();
        let offset: f64 = self.target_slope.iter().zip(&mean).map(|(a, m)| a * m).sum();
        AffineFunction::new(self.target_slope.clone(), self.target_bias - offset)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return cfg("dimension must be positive".into());
        }
        if self.target_slope.len() != self.dim {
            return cfg(format!("target_slope has length {} but dim is {}", self.target_slope.len(), self.dim));
        }
        let scalars = [self.target_bias, self.noise_sd, self.b_x, self.b_y, self.kappa];
        if self.target_slope.iter().chain(&scalars).any(|v| !v.is_finite()) {
            return cfg("non-finite problem parameter".into());
        }
        if self.noise_sd < 0.0 || self.b_x < 0.0 || self.b_y < 0.0 || self.kappa < 0.0 {
            return cfg("noise_sd, b_x, b_y and kappa must be nonnegative".into());
        }
        match &self.design {
            Design::Gaussian { mean, covariance } => {
                if mean.len() != self.dim {
                    return cfg("mean length differs from dimension".into());
                }
                let sigma = to_matrix(covariance, self.dim).map_err(|e| Error::Config(e.to_string()))?;
                let scale = sigma.amax().max(1.0);
                for i in 0..self.dim {
                    for j in 0..i {
                        if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                            return cfg("covariance is not symmetric".into());
                        }
                    }
                }
                if min_eigenvalue(&sigma) < -1e-10 * scale {
                    return cfg("covariance is not positive semidefinite".into());
                }
            }
            Design::SkewedBernoulli { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return cfg(format!("skewed design needs p in (0,1), got {p}"));
                }
                if self.dim != 3 {
                    return cfg("skewed design has dimension 3".into());
                }
            }
            Design::Rademacher { scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return cfg("rademacher scale must be nonnegative".into());
                }
            }
        }
        let lam_min = min_eigenvalue(&self.covariance());
        if self.kappa * self.b_x * self.b_x > lam_min * (1.0 + 1e-9) + 1e-12 {
            return cfg(format!(
                "declared kappa {} exceeds smallest covariance eigenvalue {} / b_x²",
                self.kappa, lam_min
            ));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let factor = match &self.design {
            Design::Gaussian { covariance, .. } => {
                let sigma = to_matrix(covariance, self.dim)?;
                let eig = SymmetricEigen::new(sigma);
                let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                Some(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
            }
            _ => None,
        };
        Ok(Sampler { mean: self.mean(), spec: self.clone(), factor, id: self.id() })
    }
}

impl Sampler {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// Draws one `(x, y)` pair into `x`, returning `y`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> f64 {
        let d = self.spec.dim;
        match &self.spec.design {
            Design::Gaussian { .. } => {
                let factor = self.factor.as_ref().expect("gaussian sampler has a factor");
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = self.mean[i] + (0..d).map(|k| factor[(i, k)] * z[k]).sum::<f64>();
                }
            }
            Design::SkewedBernoulli { p } => {
                x[0] = rng.sample(StandardNormal);
                x[1] = if rng.random::<f64>() < *p { 1.0 - p } else { -p };
                x[2] = 1.0;
            }
            Design::Rademacher { scale } => {
                for xi in x.iter_mut() {
                    *xi = if rng.random::<bool>() { *scale } else { -*scale };
                }
            }
        }
        let signal: f64 = self.spec.target_slope.iter().zip(x.iter().zip(&self.mean)).map(|(a, (xi, m))| a * (xi - m)).sum();
        let noise: f64 = rng.sample(StandardNormal);
        signal + self.spec.target_bias + self.spec.noise_sd * noise
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        ensure(n >= 1, || "sample size must be at least 1".into())?;
        let d = self.spec.dim;
        let mut rng = rng_from_seed(seed);
        let mut features = vec![0.0; n * d];
        let mut targets = Vec::with_capacity(n);
        for row in features.chunks_exact_mut(d) {
            targets.push(self.draw(&mut rng, row));
        }
        Ok(Dataset { dim: d, features, targets, seed, problem_id: self.id.clone() })
    }
}

/// Draws `n` pairs from `spec`; identical inputs give identical datasets.
pub fn sample(spec: &ProblemSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.sampler()?.sample(n, seed)
}

/// Squared-loss risk `E(Y − f(X))²` in closed form.
pub fn analytic_risk(spec: &ProblemSpec, f: &AffineFunction) -> Result<f64> {
    ensure(f.slope.len() == spec.dim, || "function dimension differs from problem".into())?;
    let sigma = spec.covariance();
    let diff = DVector::from_iterator(spec.dim, f.slope.iter().zip(&spec.target_slope).map(|(a, s)| a - s));
    let quad = (diff.transpose() * &sigma * &diff)[(0, 0)];
    let mean_pred: f64 = f.slope.iter().zip(spec.mean()).map(|(a, m)| a * m).sum::<f64>() + f.bias;
    let offset = mean_pred - spec.mean_response();
    Ok(quad + offset * offset + spec.noise_sd * spec.noise_sd)
}

/// `L(f) − L(reference)` under the squared loss.
pub fn analytic_excess_risk(spec: &ProblemSpec, f: &AffineFunction, reference: &AffineFunction) -> Result<f64> {
    // The noise variance cancels; drop it before subtracting.
    let noise = spec.noise_sd * spec.noise_sd;
    Ok((analytic_risk(spec, f)? - noise) - (analytic_risk(spec, reference)? - noise))
}

/// Raw moments `E[W^k]`, `k = 1..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments([f64; 4]);

impl Moments {
    fn constant(c: f64) -> Self {
        Moments([c, c * c, c.powi(3), c.powi(4)])
    }

    fn gaussian(mu: f64, var: f64) -> Self {
        Moments([
            mu,
            mu * mu + var,
            mu.powi(3) + 3.0 * mu * var,
            mu.powi(4) + 6.0 * mu * mu * var + 3.0 * var * var,
        ])
    }

    fn two_point(a: f64, b: f64, pb: f64) -> Self {
        let m = |k: i32| (1.0 - pb) * a.powi(k) + pb * b.powi(k);
        Moments([m(1), m(2), m(3), m(4)])
    }

    /// Moments of the sum of independent variables.
    fn add(self, other: Moments) -> Moments {
        let a = |k: usize| if k == 0 { 1.0 } else { self.0[k - 1] };
        let b = |k: usize| if k == 0 { 1.0 } else { other.0[k - 1] };
        let binom = [[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0, 0.0], [1.0, 3.0, 3.0, 1.0, 0.0], [1.0, 4.0, 6.0, 4.0, 1.0]];
        let mut out = [0.0; 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let k = k + 1;
            *slot = (0..=k).map(|i| binom[k][i] * a(i) * b(k - i)).sum();
        }
        Moments(out)
    }
}

/// `K₀[W] = E[W⁴]/E[W²]²` from samples.
pub fn kurtosis_from_samples(samples: &[f64]) -> Result<f64> {
    ensure(!samples.is_empty(), || "no samples".into())?;
    ensure(samples.iter().all(|v| v.is_finite()), || "non-finite sample".into())?;
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|w| w * w).sum::<f64>() / n;
    let m4 = samples.iter().map(|w| w.powi(4)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(Error::DegenerateMoment("all samples are zero".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// `K₀[f(X)]` for the affine direction `f` in closed form.
pub fn kurtosis_analytic(spec: &ProblemSpec, direction: &AffineFunction) -> Result<f64> {
    ensure(direction.slope.len() == spec.dim, || "direction dimension differs from problem".into())?;
    let a = &direction.slope;
    let m = match &spec.design {
        Design::Gaussian { mean, covariance } => {
            let sigma = to_matrix(covariance, spec.dim)?;
            let av = DVector::from_vec(a.clone());
            let var = (av.transpose() * sigma * &av)[(0, 0)];
            let mu: f64 = a.iter().zip(mean).map(|(x, y)| x * y).sum::<f64>() + direction.bias;
            Moments::gaussian(mu, var)
        }
        Design::SkewedBernoulli { p } => Moments::gaussian(0.0, a[0] * a[0])
            .add(Moments::two_point(-a[1] * p, a[1] * (1.0 - p), *p))
            .add(Moments::constant(a[2] + direction.bias)),
        Design::Rademacher { scale } => a
            .iter()
            .fold(Moments::constant(direction.bias), |acc, &aj| acc.add(Moments::two_point(-aj * scale, aj * scale, 0.5))),
    };
    if m.0[1] <= 0.0 {
        return Err(Error::DegenerateMoment("direction has zero second moment".into()));
    }
    Ok(m.0[3] / (m.0[1] * m.0[1]))
}

pub(crate) fn to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    ensure(rows.len() == dim && rows.iter().all(|r| r.len() == dim), || {
        format!("covariance must be {dim}×{dim}")
    })?;
    ensure(rows.iter().flatten().all(|v| v.is_finite()), || "non-finite covariance entry".into())?;
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn noiseless_constant_target() {
        let spec = ProblemSpec::isotropic_gaussian(vec![0.0, 0.0], 1.0, 0.0).unwrap();
        let data = sample(&spec, 50, 3).unwrap();
        assert!(data.targets.iter().all(|&y| y == 1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ProblemSpec::skewed_bernoulli(0.2).unwrap();
        assert_eq!(sample(&spec, 200, 11).unwrap(), sample(&spec, 200, 11).unwrap());
        assert_ne!(sample(&spec, 200, 11).unwrap(), sample(&spec, 200, 12).unwrap());
    }

    #[test]
    fn skewed_mean_is_zero() {
        // E Z = (1−p)(−p) + p(1−p) = 0
        let spec = ProblemSpec::skewed_bernoulli(0.1).unwrap();
        let data = sample(&spec, 1_000_000, 5).unwrap();
        let mean_z = data.rows().map(|(x, _)| x[1]).sum::<f64>() / data.len() as f64;
        assert!(mean_z.abs() < 3e-3, "{mean_z}");
        let second = data.rows().map(|(x, _)| x[1] * x[1]).sum::<f64>() / data.len() as f64;
        // CLT band for E Z² = p(1−p)
        let p: f64 = 0.1;
        let sd = ((p * (1.0 - p).powi(4) + (1.0 - p) * p.powi(4)) - (p * (1.0 - p)).powi(2)).sqrt();
        assert!((second - p * (1.0 - p)).abs() < 3.0 * sd / 1000.0);
    }

    #[test]
    fn non_psd_covariance_is_config_error() {
        let err = ProblemSpec::gaussian(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.0, 0.0], 0.0, 1.0);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn kappa_above_floor_rejected() {
        let spec = ProblemSpec::isotropic_gaussian(vec![0.0, 0.0], 0.0, 1.0).unwrap();
        assert!(spec.clone().with_kappa(0.0).is_ok());
        assert!(matches!(spec.with_kappa(1.0), Err(Error::Config(_))));
    }

    #[test]
    fn excess_risk_of_reference_is_zero() {
        let spec = ProblemSpec::isotropic_gaussian(vec![0.3, -0.2], 0.5, 1.0).unwrap();
        let f = AffineFunction::new(vec![1.0, 2.0], -1.0);
        assert_eq!(analytic_excess_risk(&spec, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn skewed_constant_direction_excess_risk() {
        // Y = 1 + ξ; f_a(x) = a·x₃ against x₃/2 gives (1−a)² − 1/4.
        let spec = ProblemSpec::skewed_bernoulli(0.3).unwrap();
        let reference = AffineFunction::new(vec![0.0, 0.0, 0.5], 0.0);
        for a in [0.0, 0.25, 0.5, 0.9] {
            let f = AffineFunction::new(vec![0.0, 0.0, a], 0.0);
            let got = analytic_excess_risk(&spec, &f, &reference).unwrap();
            assert!(close(got, (1.0 - a).powi(2) - 0.25, 1e-14), "{a}: {got}");
        }
    }

    #[test]
    fn unit_slope_error_under_identity_covariance() {
        let spec = ProblemSpec::isotropic_gaussian(vec![0.0, 0.0, 0.0], 0.7, 1.0).unwrap();
        let f = AffineFunction::new(vec![1.0, 0.0, 0.0], 0.7);
        let reference = spec.regression_function();
        assert!(close(analytic_excess_risk(&spec, &f, &reference).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn kurtosis_of_constant_magnitude_is_one() {
        let w: Vec<f64> = (0..100).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        assert!(close(kurtosis_from_samples(&w).unwrap(), 1.0, 1e-15));
        assert!(matches!(kurtosis_from_samples(&[0.0, 0.0]), Err(Error::DegenerateMoment(_))));
    }

    #[test]
    fn gaussian_kurtosis_is_three() {
        let spec = ProblemSpec::isotropic_gaussian(vec![0.0], 0.0, 0.0).unwrap();
        let data = sample(&spec, 1_000_000, 9).unwrap();
        let w: Vec<f64> = data.rows().map(|(x, _)| x[0]).collect();
        assert!(close(kurtosis_from_samples(&w).unwrap(), 3.0, 0.1));
        let k = kurtosis_analytic(&spec, &AffineFunction::new(vec![2.0], 0.0)).unwrap();
        assert!(close(k, 3.0, 1e-14));
    }

    #[test]
    fn skewed_kurtosis_blows_up() {
        for p in [0.1, 0.01, 0.001] {
            let spec = ProblemSpec::skewed_bernoulli(p).unwrap();
            for a in [0.1, 0.5, -0.5] {
                let k = kurtosis_analytic(&spec, &AffineFunction::new(vec![0.0, a, 0.0], 0.0)).unwrap();
                // closed form (p³ + (1−p)³)/(p(1−p))
                let exact = (p.powi(3) + (1.0 - p).powi(3)) / (p * (1.0 - p));
                assert!(close(k, exact, 1e-9 * exact));
                assert!(k >= (1.0 - p).powi(2) / p);
            }
        }
    }

    #[test]
    fn rademacher_moments_match_enumeration() {
        let spec = ProblemSpec::rademacher(3, 0.5, vec![0.0; 3], 0.0, 1.0).unwrap();
        let dir = AffineFunction::new(vec![1.0, -2.0, 0.5], 0.3);
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for mask in 0..8u32 {
            let x: Vec<f64> = (0..3).map(|j| if mask >> j & 1 == 1 { 0.5 } else { -0.5 }).collect();
            let w = dir.eval(&x);
            m2 += w * w / 8.0;
            m4 += w.powi(4) / 8.0;
        }
        assert!(close(kurtosis_analytic(&spec, &dir).unwrap(), m4 / (m2 * m2), 1e-12));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ProblemSpec::gaussian(vec![1.0, 0.0], vec![vec![2.0, 0.5], vec![0.5, 1.0]], vec![0.1, 0.2], 0.3, 0.4).unwrap();
        let json = serde_json::to_value(&spec).unwrap();
        for key in ["dim", "design", "target_slope", "target_bias", "noise_sd", "b_x", "b_y", "kappa"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["design"]["kind"], "gaussian");
        assert!(json["design"]["params"]["covariance"].is_array());
        let back: ProblemSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn cross_entropy_constants() {
        let loss = LossSpec::cross_entropy(0.25).unwrap();
        assert_eq!(loss.lipschitz_r, Some(4.0));
        assert!(close(loss.strong_convexity_kappa.unwrap(), 1.0 / 0.5625, 1e-14));
        assert!(loss.validate().is_ok());
        assert!(LossSpec::cross_entropy(0.5).is_err());
        let mut bad = LossSpec::squared();
        bad.strong_convexity_kappa = Some(1.0);
        assert!(bad.validate().is_err());
    }
}
