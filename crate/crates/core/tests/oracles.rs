//! Closed forms and independent solvers checked against the library.

use chainrisk::bounds::{
    c_gamma, erm_bound, expected_bound, moment_param_bounded, moment_param_general, penalized_bound, r_lip,
    ConditionConstants, LinearProblemParams, MomentParamInput,
};
use chainrisk::covering::{entropy_ball, entropy_integral, entropy_integral_with, EntropyFunction, IntegrandForm};
use chainrisk::estimators::{constrained_lse, ridge_fit, AffineFunction, SampleMoments};
use chainrisk::orlicz::{gaussian_psi2, laplace_psi1, moment_bound, tail_bound};
use chainrisk::problems::{sample, Dataset, ProblemSpec};
use nalgebra::{DMatrix, DVector};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn orlicz_closed_forms() {
    // E e^{X²/B²} = (1 − 2/B²)^{−1/2} = 2 at B² = 8/3.
    let b: f64 = gaussian_psi2(1.0);
    assert!(close((1.0 - 2.0 / (b * b)).powf(-0.5), 2.0, 1e-14));
    // Laplace(1): E e^{|X|/B} = B/(B − 1) = 2 at B = 2.
    let b = laplace_psi1(1.0);
    assert!(close(b / (b - 1.0), 2.0, 1e-14));
    assert!(close(tail_bound(1.0, 2.0, 2.0).unwrap(), 2.0 * (-4.0f64).exp(), 1e-14));
    assert!(tail_bound(1.0, 2.0, 0.1).unwrap() <= 1.0);
    // E|W|² ≤ 2 (2/(2e))^{1} B² = 2B²/e for q = 2, s = 2.
    assert!(close(moment_bound(1.0, 2.0, 2.0).unwrap(), 2.0 / std::f64::consts::E, 1e-12));
}

#[test]
fn entropy_closed_forms() {
    assert_eq!(entropy_ball(3.0, 1.0, 4).unwrap(), 0.0);
    assert!(close(entropy_ball(1.0, 1.0, 2).unwrap(), 2.0 * 3.0f64.ln(), 1e-15));
    assert!(close(entropy_ball(1.0, 1.0, 2).unwrap(), 2.197_224_577_336_219_6, 1e-15));
    assert!(entropy_ball(0.0, 1.0, 2).is_err());

    let (delta, eps, gamma) = (0.5, 1.0, 0.5);
    let anti = |z: f64| z * (32.0 * eps / (z * gamma)).ln() + z;
    let exact = anti(eps) - anti(delta);
    let got = entropy_integral(&EntropyFunction::Zero, delta, eps, 1.0, gamma, 32.0).unwrap();
    assert!(close(got, exact, 1e-12), "{got} vs {exact}");
    assert_eq!(entropy_integral(&EntropyFunction::ball(2, 1.0), 0.3, 0.3, 2.0, 0.1, 32.0).unwrap(), 0.0);

    // q = 1, H = d ln(3R/z) on (0, ε] with ε ≤ 3R has antiderivative
    // z(2d ln(3R/z) + ln(κε/(zγ)) + 2d + 1).
    let (d, r, eps, kappa, gamma) = (3.0, 1.0, 0.5, 16.0, 0.2);
    let anti = |z: f64| z * (2.0 * d * (3.0 * r / z).ln() + (kappa * eps / (z * gamma)).ln() + 2.0 * d + 1.0);
    let got = entropy_integral_with(&EntropyFunction::ball(3, r), 0.0, eps, 1.0, gamma, IntegrandForm::SUP_N).unwrap();
    assert!(close(got, anti(eps), 1e-9), "{got} vs {}", anti(eps));
}

#[test]
fn tabulated_entropy_below_grid_is_infinite() {
    let h = EntropyFunction::tabulated(vec![0.1, 0.5, 1.0], vec![3.0, 1.0, 0.0]).unwrap();
    assert!(entropy_integral(&h, 0.05, 1.0, 2.0, 0.1, 32.0).unwrap().is_infinite());
    assert!(entropy_integral(&h, 0.1, 1.0, 2.0, 0.1, 32.0).unwrap().is_finite());
}

fn constants(theta: f64) -> ConditionConstants {
    ConditionConstants {
        gamma: 0.1,
        b_apx: 0.25,
        t_env: 2.0,
        s: 1.5,
        q: 1.0,
        r: 0.5,
        theta,
        r0: 3.0,
        entropy: EntropyFunction::Zero,
        eps: 1.0,
        delta: 0.5,
    }
}

#[test]
fn erm_bound_by_hand() {
    let c = constants(2.0);
    let n = 100usize;
    let nf = n as f64;
    let anti = |z: f64| z * (32.0 / (z * 0.1)).ln() + z;
    let integral = anti(1.0) - anti(0.5);
    let expected = (2.0 * (40.0f64).ln() / nf + 32.0 * 1.5 / nf.sqrt() * integral + 8.0 * 0.5 * 2.0 + 0.25) / 0.5 + 3.0 / nf;
    let got = erm_bound(&c, n).unwrap();
    assert!(close(got.total, expected, 1e-12), "{} vs {expected}", got.total);

    let mut inf = constants(2.0);
    inf.s = f64::INFINITY;
    assert!(erm_bound(&inf, n).is_err());
    inf.delta = inf.eps;
    assert!(erm_bound(&inf, n).unwrap().total.is_finite());
}

#[test]
fn moment_parameters_by_hand() {
    let (n, r0) = (100usize, 1.0);
    let input = MomentParamInput { b: 1.0, r_env: 1.0, bernstein_c: 1.0, r: 0.5, t: 2.0, p: 2.0, q: 2.0, kurt_sup: f64::INFINITY, n, r0 };
    let k_n = 4.0 * (4.0 * 100.0f64).ln();
    let got = moment_param_general(&input).unwrap();
    assert!(close(got.k_n, k_n, 1e-14));
    assert!(close(got.theta, 64.0 * k_n, 1e-14));

    let finite_kurt = MomentParamInput { kurt_sup: 81.0, ..input };
    let k3 = 4.0 * (4.0 * 3.0f64).ln();
    assert!(close(moment_param_general(&finite_kurt).unwrap().theta, 64.0 * k3, 1e-14));

    let bounded = MomentParamInput { p: f64::INFINITY, q: f64::INFINITY, ..input };
    let got = moment_param_general(&bounded).unwrap();
    assert_eq!((got.theta, got.k_n), (64.0, 1.0));

    assert!(close(moment_param_bounded(2.0, 0.5, 4.0, 10).unwrap(), 10.0 * 4.0 / 4.0, 1e-15));
    assert!(moment_param_bounded(2.0, 0.5, 0.0, 10).is_err());
}

#[test]
fn small_helpers_by_hand() {
    assert!(close(expected_bound(0.5, 2.0, 3, 40).unwrap(), 0.5 + 6.0 * 2.0 / 40.0, 1e-15));
    let g: f64 = 0.05;
    let ratio = (std::f64::consts::E * 200.0 / 4.0).ln();
    let expected = (ratio + (std::f64::consts::E / g).ln().ln()) * ratio * (1.0 / g).ln();
    assert!(close(c_gamma(200, 4, g).unwrap(), expected, 1e-14));
    // L² = 100 is the smaller branch here.
    assert_eq!(r_lip(10.0, 0.1, 1, 10_000, 1.0, 1.0, 1.0).unwrap(), 10.0);
    let log = 10.0 * (11.0 * 23.0f64.ln() * 3e6f64.ln() + 6.0) * 60.0f64.ln();
    let second = (0.25 + 1.0) * log;
    assert!(second < 1e6);
    assert!(close(r_lip(1000.0, 0.1, 1, 1_000_000, 1.0, 2.0, 1.0).unwrap(), second.sqrt(), 1e-13));
}

#[test]
fn penalized_reports_penalty() {
    let spec = ProblemSpec::rademacher(1, 1.0, vec![0.5], 1.0, 1.0).unwrap();
    let p = LinearProblemParams::of(&spec);
    let rep = penalized_bound(&p, 0.01, 0.5, 0.1, 100).unwrap();
    assert_eq!(rep.terms.penalty_term, Some(0.01 * 0.25));
    assert!(penalized_bound(&p, 0.0, 0.5, 0.1, 100).is_err());
}

/// Ridge via the normal equations of the augmented design, penalizing only the slope.
fn ridge_oracle(data: &Dataset, lambda: f64) -> Vec<f64> {
    let (n, d) = (data.len(), data.dim);
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j < d { data.row(i)[j] } else { 1.0 });
    let y = DVector::from_vec(data.targets.clone());
    let mut gram = x.transpose() * &x / n as f64;
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    let rhs = x.transpose() * y / n as f64;
    gram.lu().solve(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn ridge_matches_normal_equations() {
    let spec = ProblemSpec::gaussian(vec![1.0, 0.0, -1.0], vec![vec![1.0, 0.3, 0.0], vec![0.3, 2.0, 0.1], vec![0.0, 0.1, 0.5]], vec![0.2, -0.4, 1.0], 2.0, 0.7)
        .unwrap();
    let data = sample(&spec, 300, 4).unwrap();
    for lambda in [0.0, 0.01, 1.0] {
        let f = ridge_fit(&data, lambda).unwrap();
        let oracle = ridge_oracle(&data, lambda);
        for j in 0..3 {
            assert!((f.slope[j] - oracle[j]).abs() < 1e-9, "lambda {lambda}: {:?} vs {:?}", f.slope, oracle);
        }
        assert!((f.bias - oracle[3]).abs() < 1e-9);
    }
}

fn empirical_objective(data: &Dataset, f: &AffineFunction) -> f64 {
    data.rows().map(|(x, y)| (y - f.eval(x)).powi(2)).sum::<f64>() / data.len() as f64
}

/// Projected gradient descent on the centered problem.
fn projected_gradient(m: &SampleMoments, radius: f64) -> DVector<f64> {
    let step = 0.5 / m.cov.symmetric_eigenvalues().max().max(1e-12);
    let mut a = DVector::zeros(m.cov.nrows());
    for _ in 0..200_000 {
        let grad = (&m.cov * &a - &m.cross) * 2.0;
        let mut next = &a - grad * step;
        let norm = next.norm();
        if norm > radius {
            next *= radius / norm;
        }
        if (&next - &a).norm() < 1e-15 {
            return next;
        }
        a = next;
    }
    a
}

#[test]
fn constrained_lse_matches_projected_gradient() {
    let spec = ProblemSpec::isotropic_gaussian(vec![1.5, -1.0, 0.5], 0.0, 0.5).unwrap();
    let data = sample(&spec, 200, 12).unwrap();
    let m = SampleMoments::from_dataset(&data).unwrap();
    for radius in [0.3, 1.0, 1.9, 10.0] {
        let fit = constrained_lse(&data, radius, 1e-10).unwrap();
        assert!(fit.function.slope_norm() <= radius * (1.0 + 1e-9));
        let a = projected_gradient(&m, radius);
        let oracle = AffineFunction::new(a.iter().copied().collect(), m.y_mean - a.dot(&m.x_mean));
        let diff = empirical_objective(&data, &fit.function) - empirical_objective(&data, &oracle);
        assert!(diff <= 1e-9, "radius {radius}: objective gap {diff}");
        assert!(fit.alpha >= 0.0);
    }
}
