//! ψ_q Orlicz norms and the tail, moment and MGF inequalities built on them.
//!
//! `ψ_q(x) = e^{|x|^q} − 1` and `‖W‖_ψq = inf{B > 0 : E ψ_q(‖W‖/B) ≤ 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrliczMethod {
    Analytic,
    EmpiricalBisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrliczEstimate {
    pub q: f64,
    pub value: f64,
    pub method: OrliczMethod,
    pub n_samples: usize,
}

impl OrliczEstimate {
    pub fn analytic(q: f64, value: f64) -> Self {
        OrliczEstimate { q, value, method: OrliczMethod::Analytic, n_samples: 0 }
    }
}

pub const DEFAULT_TOL: f64 = 1e-6;
const MAX_ITER: usize = 200;

/// ψ₂ norm of `N(0, σ²)`: solves `(1 − 2σ²/B²)^{-1/2} = 2`.
pub fn gaussian_psi2(sigma: f64) -> f64 {
    sigma.abs() * (8.0f64 / 3.0).sqrt()
}

/// ψ₁ norm of a Laplace variable with scale `b`: `E e^{|W|/B} = 1/(1 − b/B) = 2`.
pub fn laplace_psi1(b: f64) -> f64 {
    2.0 * b.abs()
}

/// Empirical ψ_q norm of vector samples under the Euclidean norm.
pub fn orlicz_norm_empirical(samples: &[Vec<f64>], q: f64, tol: f64) -> Result<OrliczEstimate> {
    let mags: Vec<f64> = samples.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    ensure(samples.iter().flatten().all(|v| v.is_finite()), || "non-finite sample".into())?;
    orlicz_norm_scalar(&mags, q, tol)
}

/// Empirical ψ_q norm of scalar samples.
pub fn orlicz_norm_scalar(samples: &[f64], q: f64, tol: f64) -> Result<OrliczEstimate> {
    ensure(!samples.is_empty(), || "at least one sample is required".into())?;
    ensure(q >= 1.0 && q.is_finite(), || format!("q = {q} must be a finite real ≥ 1"))?;
    ensure(tol > 0.0 && tol <= 0.1, || format!("tol = {tol} outside (0, 0.1]"))?;
    ensure(samples.iter().all(|v| v.is_finite()), || "non-finite sample".into())?;
    let mags: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    let n = mags.len();
    let max = mags.iter().copied().fold(0.0, f64::max);
    let estimate = |value| OrliczEstimate { q, value, method: OrliczMethod::EmpiricalBisection, n_samples: n };
    if max == 0.0 {
        return Ok(estimate(0.0));
    }
    // log E e^{(|w|/B)^q}, nonincreasing in B.
    let log_mean = |b: f64| {
        let terms: Vec<f64> = mags.iter().map(|m| (m / b).powf(q)).collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + (terms.iter().map(|t| (t - top).exp()).sum::<f64>() / n as f64).ln()
    };
    let target = std::f64::consts::LN_2;
    let floor = (2.0 - tol).ln();
    // max/(ln 2n)^{1/q} is infeasible or exact; max/(ln 2)^{1/q} is feasible.
    let mut lo = max / (2.0 * n as f64).ln().powf(1.0 / q);
    let mut hi = max / target.powf(1.0 / q);
    let mut grow = 0;
    while log_mean(hi) > target {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NonConvergence { iterations: grow, detail: "bracket growth".into() });
        }
    }
    for _ in 0..MAX_ITER {
        if log_mean(hi) >= floor || hi - lo <= f64::EPSILON * hi {
            return Ok(estimate(hi));
        }
        let mid = 0.5 * (lo + hi);
        if log_mean(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITER, detail: "orlicz bisection".into() })
}

/// `P{‖W‖ ≥ t} ≤ min(1, 2 e^{−(t/norm)^q})`.
pub fn tail_bound(norm: f64, q: f64, t: f64) -> Result<f64> {
    ensure(norm >= 0.0 && t >= 0.0 && q >= 1.0, || "tail_bound needs norm ≥ 0, t ≥ 0, q ≥ 1".into())?;
    if norm == 0.0 {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    Ok((2.0 * (-(t / norm).powf(q)).exp()).min(1.0))
}

/// `E‖W‖^s ≤ 2 (s/(eq))^{s/q} ‖W‖_ψq^s`.
pub fn moment_bound(norm: f64, q: f64, s: f64) -> Result<f64> {
    ensure(s > 0.0, || format!("moment order s = {s} must be positive"))?;
    ensure(norm >= 0.0 && q >= 1.0, || "moment_bound needs norm ≥ 0 and q ≥ 1".into())?;
    Ok(2.0 * (s / (std::f64::consts::E * q)).powf(s / q) * norm.powf(s))
}

/// ψ_q bound for a sum of independent centered vectors in `R^d`.
pub fn sum_independent_norm_bound(norms: &[f64], q: f64, d: usize) -> Result<f64> {
    ensure(q == 1.0 || q == 2.0, || format!("q = {q} must be 1 or 2"))?;
    ensure(d >= 1, || "d must be positive".into())?;
    ensure(norms.iter().all(|v| v.is_finite() && *v >= 0.0), || "norms must be finite and nonnegative".into())?;
    if norms.is_empty() {
        return Ok(0.0);
    }
    let ss: f64 = norms.iter().map(|v| v * v).sum();
    Ok(4.0 * (d as f64).powf(1.0 / q) * ss.sqrt())
}

/// `ln E e^{s(EW − W)} ≤ s²v²/(2(1 − |s|c))` under Bernstein moment conditions.
pub fn bernstein_mgf_bound(s: f64, v: f64, c: f64) -> Result<f64> {
    ensure(v >= 0.0 && c >= 0.0, || "v and c must be nonnegative".into())?;
    if s.abs() * c >= 1.0 {
        return Err(Error::Domain(format!("|s|·c = {} must be below 1", s.abs() * c)));
    }
    Ok(s * s * v * v / (2.0 * (1.0 - s.abs() * c)))
}

/// Constants for `E|WZ|^k ≤ (k!/2) E[W²] v_factor scale^{k−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductMomentConstants {
    pub c: f64,
    pub v_factor: f64,
    pub scale: f64,
}

/// `c^{min(p,q)} = 2 ln(64 K₀)`, `v_factor = (2cR)²`, `scale = c²BR`.
pub fn product_moment_constants(b: f64, r: f64, p: f64, q: f64, kurtosis: f64) -> Result<ProductMomentConstants> {
    ensure(kurtosis.is_finite() && kurtosis >= 1.0, || format!("kurtosis {kurtosis} must be ≥ 1"))?;
    ensure(p >= 1.0 && q >= 1.0, || "p, q must be ≥ 1".into())?;
    ensure(1.0 / p + 1.0 / q <= 1.0 + 1e-12, || "1/p + 1/q must not exceed 1".into())?;
    ensure(b > 0.0 && r > 0.0, || "B and R must be positive".into())?;
    let m = p.min(q);
    let c = if m.is_infinite() { 1.0 } else { (2.0 * (64.0 * kurtosis).ln()).powf(1.0 / m) };
    Ok(ProductMomentConstants { c, v_factor: (2.0 * c * r).powi(2), scale: c * c * b * r })
}
