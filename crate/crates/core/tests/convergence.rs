//! Convergence runs on the reference setups: at the theoretical step size with
//! the iteration count the analysis asks for, and at practical step sizes with
//! short fixed budgets.

use convotron::distributions::NoiseModel;
use convotron::harness::{CovarianceSpec, Experiment, Geometry, SamplerSpec, SweepConfig, TeacherSpec};
use convotron::Algorithm;

fn baseline_1d() -> SweepConfig {
    SweepConfig {
        geometry: Geometry::Stride1D { n: 8, r: 4, d: 1 },
        teacher: TeacherSpec::Adversarial1D,
        sampler: SamplerSpec::Gaussian { covariance: CovarianceSpec::Identity, normalize: true },
        noise: NoiseModel::None,
        theta: 0.1,
        iterations: 6000,
        base_seed: 2024,
        ..SweepConfig::default()
    }
}

fn failures(exp: &Experiment, algorithm: Algorithm, eta: f64, iterations: usize, trials: u64) -> usize {
    (0..trials).filter(|&t| !exp.run_trial_for(algorithm, eta, iterations, t).unwrap().success).count()
}

#[test]
fn theoretical_schedule_1d() {
    let exp = Experiment::prepare(&baseline_1d()).unwrap();
    // θ = 0.1 on the distance is ε = 0.01 on the relative squared error
    let (eta, t) = exp.theoretical_schedule(0.01, 0.1).unwrap();
    assert!(t > 4_000_000);
    assert_eq!(failures(&exp, Algorithm::Convotron, eta, t, 5), 0);
}

#[test]
fn theoretical_schedule_ill_conditioned() {
    let cfg = SweepConfig {
        teacher: TeacherSpec::RandomUnit(2024),
        sampler: SamplerSpec::Gaussian {
            covariance: CovarianceSpec::Random { condition: 60.0, seed: 2024 },
            normalize: true,
        },
        ..baseline_1d()
    };
    let exp = Experiment::prepare(&cfg).unwrap();
    let (eta, t) = exp.theoretical_schedule(0.01, 0.1).unwrap();
    assert!(t < 60_000_000, "T = {t}");
    assert_eq!(failures(&exp, Algorithm::Convotron, eta, t, 2), 0);
}

#[test]
fn practical_step_sizes_with_short_budgets() {
    let exp = Experiment::prepare(&baseline_1d()).unwrap();
    assert_eq!(failures(&exp, Algorithm::Convotron, 0.1, 6000, 50), 0);

    let cfg_2d = SweepConfig {
        geometry: Geometry::Stride2D { n1: 5, n2: 5, r1: 3, r2: 3, d1: 1, d2: 1 },
        teacher: TeacherSpec::RandomUnit(2024),
        ..baseline_1d()
    };
    let exp_2d = Experiment::prepare(&cfg_2d).unwrap();
    assert_eq!(failures(&exp_2d, Algorithm::Convotron, 0.5, 15_000, 20), 0);

    let cfg_cond = SweepConfig {
        teacher: TeacherSpec::RandomUnit(2024),
        sampler: SamplerSpec::Gaussian {
            covariance: CovarianceSpec::Random { condition: 60.0, seed: 2024 },
            normalize: true,
        },
        ..baseline_1d()
    };
    let exp_cond = Experiment::prepare(&cfg_cond).unwrap();
    assert_eq!(failures(&exp_cond, Algorithm::Convotron, 0.1, 6000, 50), 0);
}

#[test]
fn sgd_fails_often_on_adversarial_teacher() {
    let exp = Experiment::prepare(&baseline_1d()).unwrap();
    let sgd = failures(&exp, Algorithm::Sgd, 0.1, 6000, 50);
    assert!(sgd >= 10, "{sgd}/50");
}
