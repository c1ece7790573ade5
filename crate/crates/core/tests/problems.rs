use chainrisk::estimators::{measure_excess_risk, AffineFunction, RiskMethod};
use chainrisk::orlicz::{orlicz_norm_empirical, orlicz_norm_scalar, DEFAULT_TOL};
use chainrisk::problems::{analytic_excess_risk, kurtosis_from_samples, sample, Dataset, LossSpec, ProblemSpec};
use chainrisk::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

fn specs() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::isotropic_gaussian(vec![0.3, 0.4, 0.0], 1.0, 1.0).unwrap(),
        ProblemSpec::gaussian(
            vec![1.0, -2.0],
            vec![vec![2.0, 0.6], vec![0.6, 0.5]],
            vec![1.0, -0.5],
            0.3,
            0.5,
        )
        .unwrap(),
        ProblemSpec::skewed_bernoulli(0.1).unwrap(),
        ProblemSpec::skewed_bernoulli(0.01).unwrap(),
        ProblemSpec::rademacher(2, 1.5, vec![0.5, -0.2], 0.0, 1.0).unwrap(),
    ]
}

fn centered_columns(data: &Dataset, spec: &ProblemSpec) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mean = spec.mean();
    let ey = spec.mean_response();
    let xs = data.rows().map(|(x, _)| x.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    let ys = data.rows().map(|(_, y)| y - ey).collect();
    (xs, ys)
}

#[test]
fn declared_psi2_constants_cover_empirical_estimates() {
    for (i, spec) in specs().iter().enumerate() {
        let data = sample(spec, 100_000, 40 + i as u64).unwrap();
        let (xs, ys) = centered_columns(&data, spec);
        let bx = orlicz_norm_empirical(&xs, 2.0, DEFAULT_TOL).unwrap().value;
        let by = orlicz_norm_scalar(&ys, 2.0, DEFAULT_TOL).unwrap().value;
        assert!(bx <= 1.1 * spec.b_x, "{}: empirical B_X {bx} vs declared {}", spec.id(), spec.b_x);
        assert!(by <= 1.1 * spec.b_y, "{}: empirical B_Y {by} vs declared {}", spec.id(), spec.b_y);
    }
}

#[test]
fn sampler_is_deterministic() {
    for spec in specs() {
        assert_eq!(sample(&spec, 500, 9).unwrap(), sample(&spec, 500, 9).unwrap());
        assert_ne!(sample(&spec, 500, 9).unwrap().targets, sample(&spec, 500, 10).unwrap().targets);
    }
}

#[test]
fn noiseless_constant_target() {
    let spec = ProblemSpec::isotropic_gaussian(vec![0.0; 3], 1.0, 0.0).unwrap();
    assert!(sample(&spec, 1000, 1).unwrap().targets.iter().all(|&y| y == 1.0));
}

#[test]
fn skewed_coordinate_moments() {
    for p in [0.1, 0.01] {
        let data = sample(&ProblemSpec::skewed_bernoulli(p).unwrap(), 1_000_000, 3).unwrap();
        let z: Vec<f64> = data.rows().map(|(x, _)| x[1]).collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let second = z.iter().map(|v| v * v).sum::<f64>() / n;
        let var = p * (1.0 - p);
        assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "p = {p}: mean {mean}");
        let fourth = p * (1.0 - p).powi(4) + (1.0 - p) * p.powi(4);
        assert!((second - var).abs() <= 3.0 * ((fourth - var * var) / n).sqrt(), "p = {p}: second moment {second}");
        assert!(data.rows().all(|(x, _)| x[2] == 1.0));
        if p == 0.1 {
            assert!(mean.abs() <= 3e-3);
        }
    }
}

#[test]
fn analytic_excess_risk_examples() {
    let skew = ProblemSpec::skewed_bernoulli(0.1).unwrap();
    let reference = AffineFunction::new(vec![0.0, 0.0, 0.5], 0.0);
    for a in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let f = AffineFunction::new(vec![0.0, 0.0, a], 0.0);
        let v = analytic_excess_risk(&skew, &f, &reference).unwrap();
        assert!((v - ((1.0 - a) * (1.0 - a) - 0.25)).abs() < 1e-12);
    }
    let iso = ProblemSpec::isotropic_gaussian(vec![0.0; 3], 0.7, 1.0).unwrap();
    let f = AffineFunction::new(vec![1.0, 0.0, 0.0], 0.7);
    let star = iso.regression_function();
    assert!((analytic_excess_risk(&iso, &f, &star).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(analytic_excess_risk(&iso, &star, &star).unwrap(), 0.0);
}

#[test]
fn analytic_matches_monte_carlo() {
    let loss = LossSpec::squared();
    for (s, spec) in specs().iter().enumerate() {
        let star = spec.regression_function();
        let mut rng = stream(77, &[s as u64]);
        let funcs: Vec<AffineFunction> = (0..20)
            .map(|_| {
                let slope = (0..spec.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                AffineFunction::new(slope, rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        funcs.par_iter().enumerate().for_each(|(i, f)| {
            let exact = analytic_excess_risk(spec, f, &star).unwrap();
            let mc = measure_excess_risk(f, spec, &loss, &star, RiskMethod::MonteCarlo { n_eval: 1_000_000, seed: 1000 + i as u64 })
                .unwrap();
            assert!(
                (exact - mc.value).abs() <= 3.0 * mc.std_error,
                "{} f{i}: exact {exact} vs MC {} ± {}",
                spec.id(),
                mc.value,
                mc.std_error
            );
        });
    }
}

#[test]
fn kurtosis_examples() {
    let signs: Vec<f64> = (0..1000).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    assert_eq!(kurtosis_from_samples(&signs).unwrap(), 1.0);
    let mut rng = stream(5, &[]);
    let g: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
    assert!((kurtosis_from_samples(&g).unwrap() - 3.0).abs() <= 0.1);
    assert!(kurtosis_from_samples(&[0.0, 0.0]).is_err());
}

#[test]
fn spec_json_schema() {
    let spec = ProblemSpec::skewed_bernoulli(0.1).unwrap();
    let v = serde_json::to_value(&spec).unwrap();
    for key in ["dim", "design", "target_slope", "target_bias", "noise_sd", "b_x", "b_y", "kappa"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["design"]["kind"], "skewed_bernoulli");
    assert_eq!(v["design"]["params"]["p"], 0.1);
    let back: ProblemSpec = serde_json::from_value(v).unwrap();
    assert_eq!(back, spec);
}
