//! Excess-risk bound compositions: the generic chaining bound, the constants
//! that instantiate its conditions, and the explicit linear least-squares bounds.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::covering::{entropy_integral_with, EntropyFunction, IntegrandForm};
use crate::error::{ensure, Error, Result};
use crate::problems::{LossKind, LossSpec, ProblemSpec};

/// Constants for the five conditions of the chaining bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionConstants {
    pub gamma: f64,
    /// Approximation slack `B`.
    pub b_apx: f64,
    /// Envelope bound `T`.
    pub t_env: f64,
    /// Increment coefficient; may be `+∞` when `delta == eps`.
    #[serde(with = "crate::serde_ext")]
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub theta: f64,
    pub r0: f64,
    pub entropy: EntropyFunction,
    pub eps: f64,
    pub delta: f64,
}

impl ConditionConstants {
    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma > 0.0 && self.gamma < 1.0, || format!("gamma = {} outside (0,1)", self.gamma))?;
        ensure(self.b_apx >= 0.0 && self.t_env >= 0.0 && self.r0 >= 0.0, || "B, T and r0 must be nonnegative".into())?;
        ensure(self.s >= 0.0, || "S must be nonnegative".into())?;
        ensure(self.q == 1.0 || self.q == 2.0, || format!("q = {} must be 1 or 2", self.q))?;
        ensure(self.r > 0.0 && self.r <= 1.0, || format!("r = {} outside (0,1]", self.r))?;
        ensure(self.theta > 0.0 && self.theta.is_finite(), || "theta must be positive and finite".into())?;
        ensure(self.eps > 0.0 && self.eps.is_finite(), || "eps must be positive and finite".into())?;
        ensure(self.delta >= 0.0 && self.delta <= self.eps, || format!("need 0 ≤ δ = {} ≤ ε = {}", self.delta, self.eps))?;
        ensure(self.s.is_finite() || self.delta == self.eps, || "S = ∞ requires delta == eps".into())?;
        self.entropy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    #[serde(with = "crate::serde_ext")]
    pub moment_term: f64,
    #[serde(with = "crate::serde_ext")]
    pub integral_term: f64,
    #[serde(rename = "delta_T_term", with = "crate::serde_ext")]
    pub delta_t_term: f64,
    #[serde(with = "crate::serde_ext")]
    pub approx_term: f64,
    #[serde(with = "crate::serde_ext")]
    pub floor_term: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serde_ext::option")]
    pub penalty_term: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(with = "crate::serde_ext")]
    pub total: f64,
    pub terms: BoundTerms,
    pub inputs: Map<String, Value>,
}

impl BoundReport {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Generic excess-risk bound holding with probability `1 − γ`.
pub fn erm_bound(c: &ConditionConstants, n: usize) -> Result<BoundReport> {
    ensure(n >= 1, || "n must be at least 1".into())?;
    c.validate()?;
    let nf = n as f64;
    let h_eps = c.entropy.eval(c.eps)?;
    let moment_term = c.theta * (h_eps + (4.0 / c.gamma).ln()) / nf;
    let integral_term = if c.delta == c.eps || c.s == 0.0 {
        0.0
    } else {
        let integral = entropy_integral_with(&c.entropy, c.delta, c.eps, c.q, c.gamma, IntegrandForm::ERM)?;
        32.0 * c.s / nf.sqrt() * integral
    };
    let delta_t_term = 8.0 * c.delta * c.t_env;
    let approx_term = c.b_apx;
    let floor_term = c.r0 / nf;
    let total = (moment_term + integral_term + delta_t_term + approx_term) / c.r + floor_term;
    let mut inputs = Map::new();
    inputs.insert("n".into(), json!(n));
    inputs.insert("constants".into(), serde_json::to_value(c).unwrap_or(Value::Null));
    Ok(BoundReport {
        total,
        terms: BoundTerms { moment_term, integral_term, delta_t_term, approx_term, floor_term, penalty_term: None },
        inputs,
    })
}

/// `θ = nB²/(2(1 − r)r₀)` for losses with range `B`.
pub fn moment_param_bounded(b_range: f64, r: f64, r0: f64, n: usize) -> Result<f64> {
    ensure(b_range >= 0.0 && b_range.is_finite(), || "B must be finite and nonnegative".into())?;
    ensure(r > 0.0 && r <= 1.0, || format!("r = {r} outside (0,1)"))?;
    if r0 <= 0.0 || r >= 1.0 {
        return Err(Error::Divergence(format!("theta is unbounded at r0 = {r0}, r = {r}")));
    }
    Ok(n as f64 * b_range * b_range / (2.0 * (1.0 - r) * r0))
}

/// `r₀ = c·B·√(nH)`, which balances the moment and floor terms.
pub fn balanced_r0(b_range: f64, n: usize, entropy_at_eps: f64, constant: f64) -> f64 {
    constant * b_range * (n as f64 * entropy_at_eps).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParamInput {
    /// ψ_q bound on `W_f`.
    pub b: f64,
    /// ψ_p bound on `Z_f / W_f`.
    pub r_env: f64,
    /// Bernstein constant.
    pub bernstein_c: f64,
    pub r: f64,
    pub t: f64,
    #[serde(with = "crate::serde_ext")]
    pub p: f64,
    #[serde(with = "crate::serde_ext")]
    pub q: f64,
    /// `sup_f K₀[W_f]`, possibly `+∞`.
    #[serde(with = "crate::serde_ext")]
    pub kurt_sup: f64,
    pub n: usize,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParam {
    pub theta: f64,
    pub k_n: f64,
}

/// Smallest admissible `θ` from the Bernstein route, with `K_n`.
pub fn moment_param_general(i: &MomentParamInput) -> Result<MomentParam> {
    ensure(i.r > 0.0 && i.r < 1.0, || format!("r = {} outside (0,1)", i.r))?;
    general_impl(i)
}

/// The same `θ` with `r = 0` admitted, for the plain centered process.
#[allow(clippy::too_many_arguments)]
pub(crate) fn theta_from_constants(
    b: f64,
    r_env: f64,
    bernstein_c: f64,
    r: f64,
    t: f64,
    p: f64,
    kurt_sup: f64,
    n: usize,
    r0: f64,
) -> Result<f64> {
    ensure((0.0..1.0).contains(&r), || format!("r = {r} outside [0,1)"))?;
    let i = MomentParamInput { b, r_env, bernstein_c, r, t, p, q: p, kurt_sup, n, r0 };
    Ok(general_impl(&i)?.theta)
}

fn general_impl(i: &MomentParamInput) -> Result<MomentParam> {
    ensure(i.t > 1.0, || format!("t = {} must exceed 1", i.t))?;
    ensure(i.p >= 1.0 && i.q >= 1.0 && 1.0 / i.p + 1.0 / i.q <= 1.0 + 1e-12, || "need p, q ≥ 1 and 1/p + 1/q ≤ 1".into())?;
    ensure(i.r0 > 0.0, || "r0 must be positive".into())?;
    ensure(i.n >= 1, || "n must be at least 1".into())?;
    ensure(i.b > 0.0 && i.r_env > 0.0 && i.bernstein_c > 0.0, || "B, R and C must be positive".into())?;
    ensure(i.kurt_sup >= 1.0, || "kurtosis is at least 1".into())?;
    let br = i.b * i.r_env;
    let core = (4.0 * i.r_env * i.r_env * i.bernstein_c / ((i.t - 1.0) * (1.0 - i.r))).max(br);
    let m = i.p.min(i.q);
    if m.is_infinite() {
        return Ok(MomentParam { theta: 4.0 * i.t * core, k_n: 1.0 });
    }
    let inner = i.kurt_sup.powf(0.25).min(i.n as f64 * br / i.r0);
    let k_n = 4.0 * (4.0 * inner).ln();
    if k_n <= 0.0 {
        return Err(Error::Input(format!("K_n = {k_n} is not positive; r0 is too large relative to nBR")));
    }
    Ok(MomentParam { theta: 4.0 * i.t * k_n.powf(2.0 / m) * core, k_n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BernsteinMode {
    Lipschitz { b: f64, n: usize, r0: f64 },
    StronglyConvex,
}

/// Bernstein-condition constant `C`.
pub fn bernstein_constant(loss: &LossSpec, mode: BernsteinMode) -> Result<f64> {
    match mode {
        BernsteinMode::Lipschitz { b, n, r0 } => {
            ensure(b > 0.0 && n >= 1 && r0 > 0.0, || "Lipschitz mode needs B, n, r0 > 0".into())?;
            Ok(2.0 * n as f64 * b * b / r0)
        }
        BernsteinMode::StronglyConvex => {
            if let LossKind::CrossEntropy { clip } = loss.kind {
                return Ok(4.0 * (1.0 - clip).powi(2));
            }
            let kappa = loss
                .strong_convexity_kappa
                .ok_or_else(|| Error::Input(format!("{:?} loss is not strongly convex", loss.kind)))?;
            ensure(kappa > 0.0, || "strong convexity constant must be positive".into())?;
            Ok(4.0 / kappa)
        }
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Expected-risk bound `b + m!·c/n` from a tail bound `b + c·ln^m(1/γ)/n`.
pub fn expected_bound(b: f64, c: f64, m: u32, n: usize) -> Result<f64> {
    ensure(m >= 1 && n >= 1, || "m and n must be at least 1".into())?;
    Ok(b + factorial(m) * c / n as f64)
}

/// Sub-Gaussian and eigenvalue parameters of a linear least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearProblemParams {
    pub d: usize,
    pub b_x: f64,
    pub b_y: f64,
    pub kappa: f64,
}

impl LinearProblemParams {
    pub fn of(spec: &ProblemSpec) -> Self {
        LinearProblemParams { d: spec.dim, b_x: spec.b_x, b_y: spec.b_y, kappa: spec.kappa }
    }

    fn validate(&self) -> Result<()> {
        ensure(self.d >= 1, || "d must be positive".into())?;
        ensure(self.b_x > 0.0 && self.b_y >= 0.0 && self.kappa >= 0.0, || "need B_X > 0, B_Y ≥ 0, κ ≥ 0".into())?;
        ensure([self.b_x, self.b_y, self.kappa].iter().all(|v| v.is_finite()), || "non-finite parameter".into())
    }
}

/// High-probability radius of the estimated slope.
pub fn r_lip(l: f64, gamma: f64, d: usize, n: usize, kappa: f64, b_x: f64, b_y: f64) -> Result<f64> {
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma = {gamma} outside (0,1)"))?;
    ensure(l >= 0.0 && d >= 1 && n >= 1, || "need L ≥ 0, d ≥ 1, n ≥ 1".into())?;
    if kappa <= 0.0 {
        return Ok(l);
    }
    if kappa >= 23.0 {
        return Err(Error::Domain(format!("kappa = {kappa} makes ln(23/kappa) nonpositive")));
    }
    let (df, nf) = (d as f64, n as f64);
    let log_factor = 10.0 * (11.0 * (23.0 / kappa).ln() * (3.0 * nf / df.min(nf)).ln() + 6.0) * (6.0 / gamma).ln();
    let ratio = if b_x > 0.0 { b_y * b_y / (b_x * b_x) } else { f64::INFINITY };
    let second = (ratio + df * l * l / nf) * log_factor / kappa;
    Ok((l * l).min(second).sqrt())
}

/// Logarithmic factor of the linear bounds.
pub fn c_gamma(n: usize, d: usize, gamma: f64) -> Result<f64> {
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma = {gamma} outside (0,1)"))?;
    ensure(n >= 1 && d >= 1, || "n and d must be positive".into())?;
    let ratio = (std::f64::consts::E * n as f64 / (d.min(n)) as f64).ln();
    Ok((ratio + (std::f64::consts::E / gamma).ln().ln()) * ratio * (1.0 / gamma).ln())
}

/// Confidence allocation across the events of a composed bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaBudget {
    pub total: f64,
    pub entries: Vec<(String, f64)>,
}

impl GammaBudget {
    pub fn new(total: f64) -> Self {
        GammaBudget { total, entries: Vec::new() }
    }

    pub fn spent(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn spend(&mut self, label: &str, amount: f64) -> Result<f64> {
        ensure(amount > 0.0, || format!("budget entry `{label}` must be positive"))?;
        if self.spent() + amount > self.total * (1.0 + 1e-12) {
            return Err(Error::Budget(format!(
                "`{label}` asks {amount} with {} of {} already allocated",
                self.spent(),
                self.total
            )));
        }
        self.entries.push((label.to_string(), amount));
        Ok(amount)
    }
}

/// Explicit bound for affine least squares with `P{‖a_n‖ > L} ≤ γ/2`.
pub fn linear_erm_bound_explicit(p: &LinearProblemParams, l: f64, gamma: f64, n: usize, b_apx: f64) -> Result<BoundReport> {
    p.validate()?;
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma = {gamma} outside (0,1)"))?;
    ensure(l > 0.0 && l.is_finite(), || "L must be positive".into())?;
    ensure(n >= 1, || "n must be at least 1".into())?;
    ensure(b_apx >= 0.0, || "B_apx must be nonnegative".into())?;
    let mut budget = GammaBudget::new(gamma);
    budget.spend("slope outside L", gamma / 2.0)?;
    let gamma_ref = budget.spend("slope refinement", gamma / 4.0)?;
    let gamma_chain = budget.spend("chaining conditions", gamma / 4.0)?;

    let (df, nf) = (p.d as f64, n as f64);
    let m = p.d.min(n) as f64;
    let l_hat = r_lip(l, gamma_ref, p.d, n, p.kappa, p.b_x, p.b_y)?;
    let t0 = 2.0 * (l_hat * p.b_x).max(p.b_y);
    let t_n = t0 * (32.0 / gamma).ln().sqrt();
    let r_tilde = 4.0 * (l_hat * p.b_x).max(t_n);
    let r_env = 2.0 * (l_hat * p.b_x + p.b_y);
    let r = 0.5;
    let r0 = m * r_tilde * r_env;
    let bern = bernstein_constant(&LossSpec::squared(), BernsteinMode::StronglyConvex)?;
    let mp = moment_param_general(&MomentParamInput {
        b: r_tilde,
        r_env,
        bernstein_c: bern,
        r,
        t: 9.0,
        p: 2.0,
        q: 2.0,
        kurt_sup: f64::INFINITY,
        n,
        r0,
    })?;
    let eps = m / nf;
    let constants = ConditionConstants {
        gamma: gamma_chain,
        b_apx,
        t_env: 128.0 * t_n * t_n,
        s: f64::INFINITY,
        q: 2.0,
        r,
        theta: mp.theta,
        r0,
        entropy: EntropyFunction::Ball { dim: p.d + 1, radius: (32.0 / gamma).ln(), norm_index: Some(2) },
        eps,
        delta: eps,
    };
    let mut report = erm_bound(&constants, n)?;
    let extra = json!({
        "d": df, "n": n, "L": l, "gamma": gamma, "b_x": p.b_x, "b_y": p.b_y, "kappa": p.kappa,
        "L_hat": l_hat, "t0": t0, "t_n": t_n, "R_tilde": r_tilde, "R": r_env, "K_n": mp.k_n,
        "bernstein_c": bern, "gamma_budget": budget,
    });
    if let Value::Object(map) = extra {
        report.inputs.extend(map);
    }
    Ok(report)
}

/// Bound for least squares constrained to `‖slope‖ ≤ L`.
pub fn constrained_bound(p: &LinearProblemParams, l: f64, gamma: f64, n: usize) -> Result<BoundReport> {
    ensure(n >= 1, || "n must be at least 1".into())?;
    let b_apx = p.b_y * p.b_y * (16.0 / gamma).ln() / n as f64;
    linear_erm_bound_explicit(p, l, gamma, n, b_apx)
}

/// Bound for ridge regression with penalty `λ‖a‖²` and `‖a*‖ ≤ L*`.
pub fn penalized_bound(p: &LinearProblemParams, lambda: f64, l_star: f64, gamma: f64, n: usize) -> Result<BoundReport> {
    ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda = {lambda} must be positive"))?;
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma = {gamma} outside (0,1)"))?;
    ensure(l_star >= 0.0, || "L* must be nonnegative".into())?;
    let l_lambda = (l_star * l_star).max(p.b_y * p.b_y * (4.0 / gamma).ln() / (4.0 * lambda)).sqrt();
    let penalty = lambda * l_star * l_star;
    let mut report = linear_erm_bound_explicit(p, l_lambda, gamma, n, penalty)?;
    report.terms.penalty_term = Some(penalty);
    report.inputs.insert("lambda".into(), json!(lambda));
    report.inputs.insert("L_star".into(), json!(l_star));
    report.inputs.insert("L_lambda".into(), json!(l_lambda));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(theta: f64) -> ConditionConstants {
        ConditionConstants {
            gamma: 0.1,
            b_apx: 0.0,
            t_env: 2.0,
            s: 1.0,
            q: 2.0,
            r: 0.5,
            theta,
            r0: 0.0,
            entropy: EntropyFunction::Zero,
            eps: 0.3,
            delta: 0.3,
        }
    }

    #[test]
    fn direct_evaluation() {
        let rep = erm_bound(&base(3.0), 50).unwrap();
        let expected = (3.0 * (40.0f64).ln() / 50.0 + 8.0 * 0.3 * 2.0) / 0.5;
        assert!((rep.total - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn floor_adds_r0_over_n() {
        let mut c = base(1.0);
        let a = erm_bound(&c, 40).unwrap().total;
        c.r0 = 8.0;
        let b = erm_bound(&c, 40).unwrap().total;
        assert!((b - a - 0.2).abs() < 1e-14);
    }

    #[test]
    fn infinite_s_needs_equal_radii() {
        let mut c = base(1.0);
        c.s = f64::INFINITY;
        assert!(erm_bound(&c, 10).unwrap().total.is_finite());
        c.delta = 0.1;
        assert!(matches!(erm_bound(&c, 10), Err(Error::Input(_))));
    }

    #[test]
    fn bounded_examples() {
        assert_eq!(moment_param_bounded(0.0, 0.5, 1.0, 10).unwrap(), 0.0);
        assert!((moment_param_bounded(1.0, 0.5, 10.0, 100).unwrap() - 10.0).abs() < 1e-14);
        assert!(matches!(moment_param_bounded(1.0, 0.5, 0.0, 10), Err(Error::Divergence(_))));
        assert!(matches!(moment_param_bounded(1.0, 1.0, 1.0, 10), Err(Error::Divergence(_))));
    }

    #[test]
    fn balanced_r0_equalizes_terms() {
        let (b, n, h) = (2.0, 400, 5.0);
        let r0 = balanced_r0(b, n, h, 1.0);
        let theta = moment_param_bounded(b, 0.5, r0, n).unwrap();
        let ratio = (theta * h / n as f64) / (r0 / n as f64);
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }

    fn general(p: f64, kurt: f64) -> MomentParamInput {
        MomentParamInput { b: 1.0, r_env: 1.0, bernstein_c: 1.0, r: 0.5, t: 2.0, p, q: p, kurt_sup: kurt, n: 100, r0: 1.0 }
    }

    #[test]
    fn general_bounded_case_drops_k_n() {
        let mp = moment_param_general(&general(f64::INFINITY, 10.0)).unwrap();
        assert_eq!(mp.k_n, 1.0);
        assert!((mp.theta - 8.0 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn general_branches() {
        // kurtosis branch: 100^{1/4} < nBR/r0 = 100
        let mp = moment_param_general(&general(2.0, 100.0)).unwrap();
        let k = 4.0 * (4.0 * 100f64.powf(0.25)).ln();
        assert!((mp.k_n - k).abs() < 1e-12);
        assert!((mp.theta - 64.0 * k).abs() < 1e-10);
        // infinite kurtosis falls back to nBR/r0
        let mp = moment_param_general(&general(2.0, f64::INFINITY)).unwrap();
        let k = 4.0 * (400f64).ln();
        assert!((mp.k_n - k).abs() < 1e-12);
        assert!((mp.theta - 64.0 * k).abs() < 1e-10);
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(bernstein_constant(&LossSpec::squared(), BernsteinMode::StronglyConvex).unwrap(), 2.0);
        let ce = LossSpec::cross_entropy(0.25).unwrap();
        assert!((bernstein_constant(&ce, BernsteinMode::StronglyConvex).unwrap() - 2.25).abs() < 1e-14);
        let lip = BernsteinMode::Lipschitz { b: 1.0, n: 100, r0: 10.0 };
        assert_eq!(bernstein_constant(&LossSpec::absolute(), lip).unwrap(), 20.0);
        assert!(bernstein_constant(&LossSpec::absolute(), BernsteinMode::StronglyConvex).is_err());
    }

    #[test]
    fn expected_examples() {
        assert_eq!(expected_bound(1.5, 0.0, 3, 10).unwrap(), 1.5);
        assert!((expected_bound(1.0, 3.0, 2, 10).unwrap() - 1.6).abs() < 1e-15);
    }

    #[test]
    fn r_lip_examples() {
        assert_eq!(r_lip(2.0, 0.1, 3, 100, 0.0, 1.0, 1.0).unwrap(), 2.0);
        let v = r_lip(1.0, 0.1, 1, 100_000_000, 1.0, 1.0, 1e-4).unwrap();
        assert!(v < 0.1);
        assert!(r_lip(1.0, 0.1, 1, 100, 30.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn c_gamma_at_n_equal_d() {
        let g: f64 = 0.1;
        let expected = (1.0 + (std::f64::consts::E / g).ln().ln()) * (1.0 / g).ln();
        assert!((c_gamma(5, 5, g).unwrap() - expected).abs() < 1e-13);
        assert!(c_gamma(5, 5, 1.0 - 1e-12).unwrap() < 1e-9);
    }

    #[test]
    fn budget_overflow() {
        let mut b = GammaBudget::new(0.1);
        b.spend("a", 0.05).unwrap();
        b.spend("b", 0.05).unwrap();
        assert!(matches!(b.spend("c", 0.001), Err(Error::Budget(_))));
    }

    #[test]
    fn linear_bound_adds_b_apx_twice() {
        let p = LinearProblemParams { d: 3, b_x: 1.0, b_y: 1.0, kappa: 0.0 };
        let a = linear_erm_bound_explicit(&p, 1.0, 0.1, 100, 0.0).unwrap();
        let b = linear_erm_bound_explicit(&p, 1.0, 0.1, 100, 0.25).unwrap();
        assert!(a.total.is_finite() && a.total > 0.0);
        assert!((b.total - a.total - 0.5).abs() < 1e-9 * a.total);
    }

    #[test]
    fn penalized_reports_penalty() {
        let p = LinearProblemParams { d: 2, b_x: 1.0, b_y: 1.0, kappa: 0.1 };
        let rep = penalized_bound(&p, 0.2, 1.5, 0.1, 200).unwrap();
        assert!((rep.terms.penalty_term.unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(rep.terms.approx_term, rep.terms.penalty_term.unwrap());
        assert!(penalized_bound(&p, 0.0, 1.0, 0.1, 200).is_err());
    }
}
