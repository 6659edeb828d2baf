//! Monte-Carlo checks with fixed seeds.

mod common;

use common::{mean_se, progress_draws, Direction};
use convotron::distributions::{
    covariance_rng, empirical_covariance, random_covariance, random_unit_vector, teacher_rng, trial_rng, InputSampler,
    LabelOracle, NoiseModel,
};
use convotron::learners::{convotron_train, input_moments, theoretical_eta, theoretical_iterations, ScheduleParams};
use convotron::numerics::{dot, extreme_eigenvalues, norm_sq, sym_eigenvalues, SymMatrix};
use convotron::patches::{build_1d, sigma_gram};
use convotron::{Activation, ConvNet, Init, TrainConfig};

fn samplers(n: usize) -> Vec<(&'static str, InputSampler)> {
    let sigma = random_covariance(n, 10.0, &mut covariance_rng(1)).unwrap();
    vec![
        ("gaussian", InputSampler::standard_gaussian(n, false)),
        ("normalized gaussian", InputSampler::standard_gaussian(n, true)),
        ("correlated gaussian", InputSampler::gaussian(sigma.clone(), false).unwrap()),
        ("normalized correlated gaussian", InputSampler::gaussian(sigma, true).unwrap()),
        ("rademacher", InputSampler::rademacher(n)),
        ("sphere", InputSampler::uniform_sphere(n)),
    ]
}

#[test]
fn sampler_means_vanish() {
    let n = 6;
    let m = 100_000;
    for (name, s) in samplers(n) {
        let mut rng = trial_rng(21);
        let draws: Vec<Vec<f64>> = (0..m).map(|_| s.sample(&mut rng)).collect();
        let mean: Vec<f64> = (0..n).map(|j| draws.iter().map(|x| x[j]).sum::<f64>() / m as f64).collect();
        let std = {
            let all: Vec<f64> = draws.iter().flatten().copied().collect();
            mean_se(&all).1 * ((n * m) as f64).sqrt()
        };
        let bound = 5.0 * std / (m as f64).sqrt() * (n as f64).sqrt();
        assert!(norm_sq(&mean).sqrt() <= bound, "{name}: |mean| = {} > {bound}", norm_sq(&mean).sqrt());
    }
}

#[test]
fn closed_form_moments_match_samples() {
    let n = 5;
    let m = 200_000;
    for (name, s) in samplers(n) {
        let (Some(second), Some(fourth)) = (s.exact_second_moment(), s.exact_fourth_moment()) else {
            continue;
        };
        let mut rng = trial_rng(4);
        let draws: Vec<Vec<f64>> = (0..m).map(|_| s.sample(&mut rng)).collect();
        let emp = empirical_covariance(&draws).unwrap();
        let scale = second.as_matrix().frobenius_norm();
        assert!(emp.as_matrix().max_abs_diff(second.as_matrix()) < 0.02 * scale, "{name}: second moment");
        let quartic: Vec<f64> = draws.iter().map(|x| norm_sq(x).powi(2)).collect();
        let (mean, se) = mean_se(&quartic);
        assert!((mean - fourth).abs() <= 5.0 * se + 1e-12, "{name}: fourth moment {mean} vs {fourth}");
    }
}

#[test]
fn normalized_correlated_gaussian_has_no_closed_form_covariance() {
    let sigma = random_covariance(5, 10.0, &mut covariance_rng(1)).unwrap();
    let s = InputSampler::gaussian(sigma, true).unwrap();
    assert!(s.exact_second_moment().is_none());
    let m = input_moments(&s, &mut trial_rng(0)).unwrap();
    assert_eq!(m.fourth, 1.0);
    assert!((m.second.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn noise_fourth_moment_is_bounded_by_rho() {
    for noise in [
        NoiseModel::Gaussian { std: 0.1 },
        NoiseModel::Gaussian { std: 2.0 },
        NoiseModel::ScaledRademacher { scale: 0.7 },
    ] {
        let mut rng = trial_rng(17);
        let quartic: Vec<f64> = (0..100_000).map(|_| noise.sample(&mut rng).powi(4)).collect();
        let (mean, se) = mean_se(&quartic);
        assert!(mean <= noise.rho() * (1.0 + 1e-12) + 5.0 * se, "{noise:?}: {mean} vs rho {}", noise.rho());
        let (mean, se) = mean_se(&(0..100_000).map(|_| noise.sample(&mut rng)).collect::<Vec<_>>());
        assert!(mean.abs() <= 5.0 * se.max(1e-15), "{noise:?} not centred");
    }
    assert_eq!(NoiseModel::None.rho(), 0.0);
}

#[test]
fn random_covariance_hits_condition_target() {
    for (n, target) in [(8, 60.0), (4, 5.0), (10, 1000.0)] {
        let s = random_covariance(n, target, &mut covariance_rng(n as u64)).unwrap();
        let (lo, hi) = extreme_eigenvalues(&s);
        assert!(lo > 0.0);
        assert!(((hi / lo) / target - 1.0).abs() <= 0.1, "n = {n}: condition {}", hi / lo);
    }
    assert!(random_covariance(1, 10.0, &mut covariance_rng(0)).is_err());
    assert!(random_covariance(4, 0.5, &mut covariance_rng(0)).is_err());
}

#[test]
fn activation_correlation_halves_for_symmetric_inputs() {
    let n = 5;
    for (name, s) in
        [("gaussian", InputSampler::standard_gaussian(n, false)), ("rademacher", InputSampler::rademacher(n))]
    {
        for alpha in [0.0, 0.2, 1.0] {
            let act = Activation::leaky_relu(alpha).unwrap();
            for pair in 0..3u64 {
                let a = random_unit_vector(n, &mut teacher_rng(100 + pair));
                let b = random_unit_vector(n, &mut teacher_rng(200 + pair));
                let mut rng = trial_rng(pair);
                let diffs: Vec<f64> = (0..100_000)
                    .map(|_| {
                        let x = s.sample(&mut rng);
                        let (ax, bx) = (dot(&a, &x), dot(&b, &x));
                        act.activate(ax) * bx - 0.5 * (1.0 + alpha) * ax * bx
                    })
                    .collect();
                let (mean, se) = mean_se(&diffs);
                assert!(mean.abs() <= 4.0 * se.max(1e-15), "{name}, alpha = {alpha}: {mean} ± {se}");
            }
        }
    }
}

#[test]
fn expected_progress_with_disjoint_patch() {
    // identity covariance, one patch overlapping nothing: bound uses 1 in place of λ_min(P_Σ)
    let ps = build_1d(8, 4, 4).unwrap();
    let k = ps.k() as f64;
    let sampler = InputSampler::standard_gaussian(8, false);
    for alpha in [0.0, 0.5] {
        let act = Activation::leaky_relu(alpha).unwrap();
        let w_star = random_unit_vector(4, &mut teacher_rng(3));
        for i in 0..3u64 {
            let w = random_unit_vector(4, &mut teacher_rng(50 + i));
            let draws =
                progress_draws(&ps, act, &sampler, &w, &w_star, Direction::Single(0), 100_000, &mut trial_rng(i));
            let (mean, se) = mean_se(&draws);
            let bound = (1.0 + alpha) / (2.0 * k) * convotron::numerics::dist_sq(&w, &w_star);
            assert!(mean >= bound - 4.0 * se, "alpha = {alpha}: {mean} < {bound}");
        }
    }
}

#[test]
fn realizable_error_decays_geometrically() {
    let ps = build_1d(5, 2, 1).unwrap();
    let sampler = InputSampler::standard_gaussian(5, false);
    let w_star = random_unit_vector(2, &mut teacher_rng(9));
    let teacher = ConvNet::new(w_star.clone(), ps.clone(), Activation::relu()).unwrap();
    let oracle = LabelOracle::new(teacher, sampler.clone(), NoiseModel::None).unwrap();

    let moments = input_moments(&sampler, &mut trial_rng(0)).unwrap();
    let params = ScheduleParams::from_setup(&ps, &moments, 0.0, 0.0, 0.1, 0.1, 1.0).unwrap();
    let eta = theoretical_eta(&params).unwrap();
    let t = theoretical_iterations(&params, eta).unwrap();
    assert!(t < 500_000);

    let cfg = TrainConfig::new(eta, t, Init::Zero).unwrap().recording();
    let runs: Vec<Vec<f64>> = (0..20)
        .map(|seed| convotron_train(&oracle, &ps, &cfg, &mut trial_rng(seed)).unwrap().trajectory.unwrap())
        .collect();
    let median: Vec<f64> = (0..t)
        .map(|i| {
            let mut col: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            0.5 * (col[9] + col[10])
        })
        .collect();
    let blocks: Vec<f64> = median.chunks_exact(50).map(|c| c.iter().sum::<f64>() / 50.0).collect();
    for (i, pair) in blocks.windows(2).enumerate() {
        assert!(pair[1] <= pair[0], "block {i}: {} -> {}", pair[0], pair[1]);
    }
    assert!(*median.last().unwrap() <= 1.0 / 100.0, "final median {}", median.last().unwrap());
}

#[test]
fn sigma_gram_of_scaled_identity() {
    let ps = build_1d(8, 4, 1).unwrap();
    let p = sigma_gram(&ps, &SymMatrix::identity(8).scale(0.125)).unwrap();
    let values = sym_eigenvalues(&p);
    let s2 = 2f64.sqrt();
    assert!((values[0] - (2.0 - s2) / 8.0).abs() < 1e-12);
}
