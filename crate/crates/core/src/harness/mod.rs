//! Experiment runner: single trials, failure-probability sweeps over a grid
//! of step sizes, and the verification suites behind the CLI.

pub mod config;
pub mod csv;
pub mod verify;

use rayon::prelude::*;

use crate::distributions::{
    covariance_rng, pilot_rng, random_covariance, random_unit_vector, teacher_rng, trial_rng, InputSampler,
    LabelOracle, NoiseModel,
};
use crate::error::{Error, Result};
use crate::learners::{
    input_moments, theoretical_eta, theoretical_iterations, train, Algorithm, ScheduleParams, TrainConfig,
};
use crate::model::{Activation, ConvNet};
use crate::numerics::{dist_sq, norm_sq, SymMatrix};
use crate::patches::{build_1d, build_2d, PatchStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Stride1D { n: usize, r: usize, d: usize },
    Stride2D { n1: usize, n2: usize, r1: usize, r2: usize, d1: usize, d2: usize },
}

impl Geometry {
    pub fn build(&self) -> Result<PatchStructure> {
        match *self {
            Geometry::Stride1D { n, r, d } => build_1d(n, r, d),
            Geometry::Stride2D { n1, n2, r1, r2, d1, d2 } => build_2d(n1, n2, r1, r2, d1, d2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TeacherSpec {
    /// `[1, −1, 1, −1] / 2`; needs `r = 4`.
    Adversarial1D,
    /// Uniform on the unit sphere, drawn from `teacher_rng(seed)`.
    RandomUnit(u64),
    Explicit(Vec<f64>),
}

impl TeacherSpec {
    pub fn weights(&self, r: usize) -> Result<Vec<f64>> {
        let w = match self {
            TeacherSpec::Adversarial1D => vec![0.5, -0.5, 0.5, -0.5],
            TeacherSpec::RandomUnit(seed) => random_unit_vector(r, &mut teacher_rng(*seed)),
            TeacherSpec::Explicit(w) => w.clone(),
        };
        if w.len() != r {
            return Err(Error::DimensionMismatch { expected: r, actual: w.len() });
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceSpec {
    Identity,
    /// [`random_covariance`] with the given condition number, drawn from
    /// `covariance_rng(seed)`.
    Random {
        condition: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerSpec {
    Gaussian { covariance: CovarianceSpec, normalize: bool },
    Rademacher,
    UniformSphere,
}

impl SamplerSpec {
    pub fn build(&self, n: usize) -> Result<InputSampler> {
        match *self {
            SamplerSpec::Gaussian { covariance: CovarianceSpec::Identity, normalize } => {
                Ok(InputSampler::standard_gaussian(n, normalize))
            }
            SamplerSpec::Gaussian { covariance: CovarianceSpec::Random { condition, seed }, normalize } => {
                let sigma = random_covariance(n, condition, &mut covariance_rng(seed))?;
                InputSampler::gaussian(sigma, normalize)
            }
            SamplerSpec::Rademacher => Ok(InputSampler::rademacher(n)),
            SamplerSpec::UniformSphere => Ok(InputSampler::uniform_sphere(n)),
        }
    }
}

/// Inclusive grid `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EtaGrid {
    pub fn single(eta: f64) -> Self {
        EtaGrid { start: eta, stop: eta, step: 1.0 }
    }

    pub fn points(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // rounding keeps 0.07 from printing as 0.07000000000000001
        (0..count).map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub geometry: Geometry,
    pub teacher: TeacherSpec,
    pub sampler: SamplerSpec,
    pub noise: NoiseModel,
    pub alpha: f64,
    pub eta_grid: EtaGrid,
    pub trials_per_eta: usize,
    /// A trial succeeds when `‖w_T − w*‖ ≤ theta`.
    pub theta: f64,
    pub iterations: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            geometry: Geometry::Stride1D { n: 8, r: 4, d: 1 },
            teacher: TeacherSpec::Adversarial1D,
            sampler: SamplerSpec::Gaussian { covariance: CovarianceSpec::Identity, normalize: true },
            noise: NoiseModel::None,
            alpha: 0.0,
            eta_grid: EtaGrid { start: 0.01, stop: 1.0, step: 0.01 },
            trials_per_eta: 50,
            theta: 0.1,
            iterations: 6000,
            algorithms: vec![Algorithm::Convotron, Algorithm::Sgd],
            base_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_grid.step > 0.0) {
            return Err(Error::InvalidConfig("eta grid step must be positive".into()));
        }
        if self.eta_grid.points().is_empty() {
            return Err(Error::InvalidConfig("eta grid is empty".into()));
        }
        if self.trials_per_eta < 1 {
            return Err(Error::InvalidConfig("need at least one trial per eta".into()));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidConfig(format!("theta must be positive and finite, got {}", self.theta)));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        Activation::leaky_relu(self.alpha)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// `‖w_T − w*‖`.
    pub final_error_norm: f64,
    /// `‖w_T − w*‖² / ‖w*‖²`.
    pub relative_error: f64,
    pub success: bool,
}

/// A configuration with its patch structure, teacher and sampler built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: SweepConfig,
    pub patches: PatchStructure,
    pub oracle: LabelOracle,
}

impl Experiment {
    pub fn prepare(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let patches = config.geometry.build()?;
        let teacher =
            ConvNet::new(config.teacher.weights(patches.r())?, patches.clone(), Activation::leaky_relu(config.alpha)?)?;
        if norm_sq(teacher.weights()) == 0.0 {
            return Err(Error::ZeroTeacher);
        }
        let sampler = config.sampler.build(patches.n())?;
        let oracle = LabelOracle::new(teacher, sampler, config.noise)?;
        Ok(Experiment { config: config.clone(), patches, oracle })
    }

    /// Trial `t` draws data from `trial_rng(base_seed + t)`; SGD starts from
    /// a unit vector drawn from `init_rng(base_seed + t)`.
    pub fn run_trial(&self, algorithm: Algorithm, eta: f64, trial_index: u64) -> Result<TrialOutcome> {
        self.run_trial_for(algorithm, eta, self.config.iterations, trial_index)
    }

    pub fn run_trial_for(
        &self,
        algorithm: Algorithm,
        eta: f64,
        iterations: usize,
        trial_index: u64,
    ) -> Result<TrialOutcome> {
        let seed = self.config.base_seed.wrapping_add(trial_index);
        let cfg = TrainConfig::new(eta, iterations, algorithm.default_init(seed))?;
        let res = train(algorithm, &self.oracle, &self.patches, &cfg, &mut trial_rng(seed))?;
        let final_error_norm = dist_sq(&res.final_weights, self.oracle.teacher.weights()).sqrt();
        Ok(TrialOutcome {
            final_error_norm,
            relative_error: res.final_relative_error,
            success: final_error_norm <= self.config.theta,
        })
    }

    /// Step-size inputs for this setup. Moments come from closed forms where
    /// available, otherwise from a pilot sample drawn from `pilot_rng(base_seed)`.
    pub fn schedule_params(&self, epsilon: f64, delta: f64) -> Result<ScheduleParams> {
        let moments = input_moments(&self.oracle.sampler, &mut pilot_rng(self.config.base_seed))?;
        ScheduleParams::from_setup(
            &self.patches,
            &moments,
            self.config.alpha,
            self.config.noise.rho(),
            epsilon,
            delta,
            norm_sq(self.oracle.teacher.weights()),
        )
    }

    /// Theoretical `(η, T)` for accuracy `epsilon` and confidence `1 − delta`.
    pub fn theoretical_schedule(&self, epsilon: f64, delta: f64) -> Result<(f64, usize)> {
        let params = self.schedule_params(epsilon, delta)?;
        let eta = theoretical_eta(&params)?;
        Ok((eta, theoretical_iterations(&params, eta)?))
    }

    /// `E[xxᵀ]` used for the step size.
    pub fn second_moment(&self) -> Result<SymMatrix> {
        Ok(input_moments(&self.oracle.sampler, &mut pilot_rng(self.config.base_seed))?.second)
    }
}

pub fn run_trial(cfg: &SweepConfig, algorithm: Algorithm, eta: f64, trial_index: u64) -> Result<TrialOutcome> {
    Experiment::prepare(cfg)?.run_trial(algorithm, eta, trial_index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_prob: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |row| row.algorithm == algorithm)
    }
}

/// Runs every (algorithm, η, trial) combination in parallel. Rows come out
/// in grid order: algorithms as listed, η ascending.
pub fn failure_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep(cfg, true)
}

/// Single-threaded [`failure_sweep`]; produces the same result.
pub fn failure_sweep_sequential(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep(cfg, false)
}

fn sweep(cfg: &SweepConfig, parallel: bool) -> Result<SweepResult> {
    let exp = Experiment::prepare(cfg)?;
    let etas = cfg.eta_grid.points();
    let trials = cfg.trials_per_eta;
    let jobs: Vec<(Algorithm, f64, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|&a| etas.iter().flat_map(move |&eta| (0..trials as u64).map(move |t| (a, eta, t))))
        .collect();

    let run = |&(a, eta, t): &(Algorithm, f64, u64)| exp.run_trial(a, eta, t).map(|o| o.success);
    let successes: Vec<bool> = if parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };

    let rows = jobs
        .chunks(trials)
        .zip(successes.chunks(trials))
        .map(|(batch, ok)| {
            let failures = ok.iter().filter(|s| !**s).count();
            SweepRow {
                algorithm: batch[0].0,
                eta: batch[0].1,
                trials,
                failures,
                failure_prob: failures as f64 / trials as f64,
            }
        })
        .collect();
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SweepConfig {
        SweepConfig {
            eta_grid: EtaGrid { start: 0.1, stop: 0.3, step: 0.1 },
            trials_per_eta: 3,
            iterations: 200,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn grid_points() {
        let g = EtaGrid { start: 0.01, stop: 1.0, step: 0.01 }.points();
        assert_eq!(g.len(), 100);
        assert_eq!(g[6], 0.07);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(EtaGrid::single(0.25).points(), vec![0.25]);
        assert!(EtaGrid { start: 1.0, stop: 0.5, step: 0.1 }.points().is_empty());
    }

    #[test]
    fn adversarial_teacher_is_unit() {
        let w = TeacherSpec::Adversarial1D.weights(4).unwrap();
        assert_eq!(norm_sq(&w), 1.0);
        assert!(TeacherSpec::Adversarial1D.weights(9).is_err());
        let random = TeacherSpec::RandomUnit(3).weights(9).unwrap();
        assert!((norm_sq(&random) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_theta_always_succeeds() {
        let cfg = SweepConfig { theta: 1e6, ..quick() };
        let exp = Experiment::prepare(&cfg).unwrap();
        for a in [Algorithm::Convotron, Algorithm::Sgd] {
            assert!(exp.run_trial(a, 0.5, 0).unwrap().success);
        }
    }

    #[test]
    fn zero_eta_convotron_fails() {
        let out = run_trial(&quick(), Algorithm::Convotron, 0.0, 0).unwrap();
        assert_eq!(out.final_error_norm, 1.0);
        assert!(!out.success);
    }

    #[test]
    fn empty_algorithm_list() {
        let cfg = SweepConfig { algorithms: vec![], trials_per_eta: 1, ..quick() };
        assert!(failure_sweep(&cfg).unwrap().rows.is_empty());
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let cfg = quick();
        let a = failure_sweep(&cfg).unwrap();
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.rows[0].algorithm, Algorithm::Convotron);
        assert_eq!(a.rows[3].algorithm, Algorithm::Sgd);
        assert_eq!(a.rows[4].eta, 0.2);
        assert!(a.rows.iter().all(|r| r.trials == 3 && (0.0..=1.0).contains(&r.failure_prob)));
        assert_eq!(a, failure_sweep(&cfg).unwrap());
        assert_eq!(a, failure_sweep_sequential(&cfg).unwrap());
    }

    #[test]
    fn invalid_configs() {
        assert!(Experiment::prepare(&SweepConfig { theta: 0.0, ..quick() }).is_err());
        assert!(Experiment::prepare(&SweepConfig { trials_per_eta: 0, ..quick() }).is_err());
        assert!(Experiment::prepare(&SweepConfig { alpha: 2.0, ..quick() }).is_err());
        let grid = EtaGrid { start: 0.1, stop: 0.2, step: 0.0 };
        assert!(Experiment::prepare(&SweepConfig { eta_grid: grid, ..quick() }).is_err());
        let zero = SweepConfig { teacher: TeacherSpec::Explicit(vec![0.0; 4]), ..quick() };
        assert!(matches!(Experiment::prepare(&zero), Err(Error::ZeroTeacher)));
    }

    #[test]
    fn schedule_for_default_setup() {
        let exp = Experiment::prepare(&SweepConfig::default()).unwrap();
        let (eta, t) = exp.theoretical_schedule(0.01, 0.02).unwrap();
        // λ_min(P)/8 / (3·5) / λ_max(P) with the exact spectrum of the (8,4,1) Gram matrix
        let s2 = 2f64.sqrt();
        let expected = (2.0 - s2) / 8.0 / 15.0 / (8.0 + 5.0 * s2);
        assert!((eta - expected).abs() < 1e-15);
        assert!(t > 1_000_000);
    }
}
