//! Metric entropy functions, greedy internal covers and truncated entropy integrals.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// User-supplied `z ↦ H(z)`.
#[derive(Clone)]
pub struct CustomEntropy(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for CustomEntropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomEntropy(..)")
    }
}

/// `z ↦ H(z) = ln N(z)`, nonnegative and nonincreasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyFunction {
    Zero,
    /// Subset of a radius-`radius` ball in `R^dim` under an ℓ_p norm
    /// (`norm_index = None` is ℓ_∞).
    Ball { dim: usize, radius: f64, norm_index: Option<u32> },
    /// Step function through `(z[i], h[i])`: `H(z) = h[i]` for the largest `z[i] ≤ z`,
    /// and `+∞` below `z[0]`.
    Tabulated { z: Vec<f64>, h: Vec<f64> },
    #[serde(skip)]
    Custom(CustomEntropy),
}

impl EntropyFunction {
    pub fn ball(dim: usize, radius: f64) -> Self {
        EntropyFunction::Ball { dim, radius, norm_index: Some(2) }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        EntropyFunction::Custom(CustomEntropy(Arc::new(f)))
    }

    pub fn tabulated(z: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let table = EntropyFunction::Tabulated { z, h };
        table.validate()?;
        Ok(table)
    }

    /// Loads a table with header `z,H`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Config(format!("entropy table lacks a `{name}` column")))
        };
        let (iz, ih) = (col("z")?, col("h")?);
        let mut z = Vec::new();
        let mut h = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad entropy table entry in row {:?}", record.position())))
            };
            z.push(parse(iz)?);
            h.push(parse(ih)?);
        }
        Self::tabulated(z, h).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EntropyFunction::Zero | EntropyFunction::Custom(_) => Ok(()),
            EntropyFunction::Ball { dim, radius, .. } => {
                ensure(*dim >= 1, || "ball entropy needs dim ≥ 1".into())?;
                ensure(radius.is_finite() && *radius > 0.0, || "ball radius must be positive".into())
            }
            EntropyFunction::Tabulated { z, h } => {
                ensure(!z.is_empty() && z.len() == h.len(), || "entropy table needs equal, nonempty columns".into())?;
                ensure(z.iter().all(|v| v.is_finite() && *v > 0.0), || "table z values must be positive".into())?;
                ensure(h.iter().all(|v| v.is_finite() && *v >= 0.0), || "table H values must be nonnegative".into())?;
                ensure(z.windows(2).all(|w| w[0] < w[1]), || "table z values must be increasing".into())?;
                ensure(h.windows(2).all(|w| w[0] >= w[1]), || "table H must be nonincreasing".into())
            }
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        match self {
            EntropyFunction::Zero => Ok(0.0),
            EntropyFunction::Ball { dim, radius, .. } => entropy_ball(z, *radius, *dim),
            EntropyFunction::Tabulated { z: grid, h } => {
                ensure(z > 0.0, || format!("entropy evaluated at z = {z}"))?;
                let k = grid.partition_point(|&g| g <= z);
                Ok(if k == 0 { f64::INFINITY } else { h[k - 1] })
            }
            EntropyFunction::Custom(f) => {
                ensure(z > 0.0, || format!("entropy evaluated at z = {z}"))?;
                let v = (f.0)(z);
                ensure(!v.is_nan() && v >= 0.0, || format!("custom entropy returned {v} at {z}"))?;
                Ok(v)
            }
        }
    }

    /// Points where `H` is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            EntropyFunction::Ball { radius, .. } => vec![3.0 * radius],
            EntropyFunction::Tabulated { z, .. } => z.clone(),
            _ => Vec::new(),
        }
    }

    /// Checks nonnegativity and monotonicity on a log grid over `[lo, hi]`.
    pub fn check_monotone(&self, lo: f64, hi: f64, points: usize) -> Result<()> {
        ensure(lo > 0.0 && hi >= lo && points >= 2, || "bad monotonicity grid".into())?;
        let mut prev = f64::INFINITY;
        for i in 0..points {
            let z = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
            let v = self.eval(z)?;
            if v > prev {
                return Err(Error::Config(format!("entropy increases at z = {z}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `d ln(3R/ε)` for `ε ≤ 3R`, else 0.
pub fn entropy_ball(eps: f64, radius: f64, d: usize) -> Result<f64> {
    ensure(eps > 0.0, || format!("covering radius {eps} must be positive"))?;
    ensure(radius >= 0.0, || "ball radius must be nonnegative".into())?;
    if eps >= 3.0 * radius {
        return Ok(0.0);
    }
    Ok(d as f64 * (3.0 * radius / eps).ln())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Indices of an internal `eps`-cover by farthest-first traversal from the
/// first point.
///
/// The traversal does not depend on `eps`, so covers at larger radii are
/// prefixes of covers at smaller ones. Centers are pairwise more than `eps`
/// apart.
pub fn greedy_cover<M>(points: &[Vec<f64>], eps: f64, metric: M) -> Vec<usize>
where
    M: Fn(&[f64], &[f64]) -> f64,
{
    if points.is_empty() {
        return Vec::new();
    }
    let mut centers = vec![0];
    let mut dist: Vec<f64> = points.iter().map(|p| metric(&points[0], p)).collect();
    loop {
        // First index attaining the maximum keeps ties deterministic.
        let (far, radius) = dist.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        if radius <= eps {
            return centers;
        }
        centers.push(far);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(metric(&points[far], p));
        }
    }
}

/// Shape of the entropy integrand `(m·H(z) + ln(κ·ε/(zγ)))^{1/q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandForm {
    pub entropy_multiplier: f64,
    pub kappa_log: f64,
}

impl IntegrandForm {
    /// `2H + ln(32ε/(zγ))`, the excess-risk form.
    pub const ERM: IntegrandForm = IntegrandForm { entropy_multiplier: 2.0, kappa_log: 32.0 };
    /// `2H + ln(16ε/(zγ))`, the sup-process form.
    pub const SUP_N: IntegrandForm = IntegrandForm { entropy_multiplier: 2.0, kappa_log: 16.0 };
    /// `H + ln(4β/(zγ))` with upper limit `ε = β/2`.
    pub const SUP_SQRT_N: IntegrandForm = IntegrandForm { entropy_multiplier: 1.0, kappa_log: 8.0 };
}

/// `∫_δ^ε (2H(z) + ln(κ ε/(zγ)))^{1/q} dz`.
pub fn entropy_integral(h: &EntropyFunction, delta: f64, eps: f64, q: f64, gamma: f64, kappa_log: f64) -> Result<f64> {
    entropy_integral_with(h, delta, eps, q, gamma, IntegrandForm { entropy_multiplier: 2.0, kappa_log })
}

pub fn entropy_integral_with(
    h: &EntropyFunction,
    delta: f64,
    eps: f64,
    q: f64,
    gamma: f64,
    form: IntegrandForm,
) -> Result<f64> {
    ensure(delta >= 0.0 && delta <= eps && eps.is_finite(), || format!("need 0 ≤ δ = {delta} ≤ ε = {eps}"))?;
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma = {gamma} outside (0,1)"))?;
    ensure(q == 1.0 || q == 2.0, || format!("q = {q} must be 1 or 2"))?;
    ensure(form.kappa_log >= 1.0 && form.entropy_multiplier >= 0.0, || "bad integrand constants".into())?;
    if delta == eps {
        return Ok(0.0);
    }
    h.validate()?;
    if let EntropyFunction::Tabulated { z, .. } = h {
        if delta < z[0] {
            return Ok(f64::INFINITY);
        }
    }
    let base = (form.kappa_log / gamma).ln();
    let mut failure: Option<Error> = None;
    // z = ε e^{−u}, dz = z du.
    let mut integrand = |u: f64| -> f64 {
        let z = eps * (-u).exp();
        if z <= 0.0 {
            return 0.0;
        }
        match h.eval(z) {
            Ok(hz) if hz.is_infinite() => f64::INFINITY,
            Ok(hz) => {
                let inner = form.entropy_multiplier * hz + base + u;
                z * if q == 1.0 { inner } else { inner.sqrt() }
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let tol = Tolerance { abs: 1e-15 * eps, rel: 1e-10, max_intervals: 20_000 };
    let u_max = if delta == 0.0 { f64::INFINITY } else { (eps / delta).ln() };
    let mut cuts: Vec<f64> = h
        .breakpoints()
        .into_iter()
        .filter(|&b| b > delta && b < eps)
        .map(|b| (eps / b).ln())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = 0.0;
    for cut in cuts {
        total += integrate(&mut integrand, lo, cut, tol)?.value;
        lo = cut;
    }
    total += if u_max.is_infinite() {
        integrate_to_infinity(&mut integrand, lo, tol)?.value
    } else {
        integrate(&mut integrand, lo, u_max, tol)?.value
    };
    if let Some(e) = failure {
        return Err(e);
    }
    if total.is_nan() {
        return Ok(f64::INFINITY);
    }
    Ok(total)
}
