//! Input samplers, label noise and the labeled-data oracle
//! `y = f_{w*}(x) + ξ`.
//!
//! Randomness comes from ChaCha8, a counter-based generator. A seed selects
//! the key and a fixed stream id separates the independent uses of that seed:
//!
//! | stream | use                                  |
//! |--------|--------------------------------------|
//! | 0      | data draws (`trial_rng`)             |
//! | 1      | learner initialization (`init_rng`)  |
//! | 2      | random teachers (`teacher_rng`)      |
//! | 3      | random covariances (`covariance_rng`)|
//! | 4      | moment estimation (`pilot_rng`)      |
//!
//! Trial `t` of a sweep uses seed `base_seed + t`.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::ConvNet;
use crate::numerics::{cholesky, extreme_eigenvalues, norm, Matrix, SymMatrix};

pub type Rng = ChaCha8Rng;

fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn trial_rng(seed: u64) -> Rng {
    stream(seed, 0)
}

pub fn init_rng(seed: u64) -> Rng {
    stream(seed, 1)
}

pub fn teacher_rng(seed: u64) -> Rng {
    stream(seed, 2)
}

pub fn covariance_rng(seed: u64) -> Rng {
    stream(seed, 3)
}

/// Draws used to estimate moments before a run.
pub fn pilot_rng(seed: u64) -> Rng {
    stream(seed, 4)
}

/// Uniformly random unit vector: a standard normal draw, normalized.
pub fn random_unit_vector(dim: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&v);
        if len > 0.0 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    /// `x = L z`, `z ~ N(0, I)`, `L Lᵀ = Σ`; optionally rescaled to `‖x‖ = 1`.
    GaussianCov { sigma: SymMatrix, normalize: bool },
    /// Independent ±1 coordinates.
    Rademacher,
    /// Uniform on the unit sphere.
    UniformSphere,
}

/// Origin-symmetric input distribution.
#[derive(Debug, Clone)]
pub struct InputSampler {
    kind: SamplerKind,
    dim: usize,
    // None when Σ is the identity.
    chol: Option<Matrix>,
}

impl InputSampler {
    pub fn gaussian(sigma: SymMatrix, normalize: bool) -> Result<Self> {
        let dim = sigma.dim();
        let chol = if sigma == SymMatrix::identity(dim) { None } else { Some(cholesky(&sigma)?) };
        Ok(InputSampler { kind: SamplerKind::GaussianCov { sigma, normalize }, dim, chol })
    }

    pub fn standard_gaussian(dim: usize, normalize: bool) -> Self {
        InputSampler { kind: SamplerKind::GaussianCov { sigma: SymMatrix::identity(dim), normalize }, dim, chol: None }
    }

    pub fn rademacher(dim: usize) -> Self {
        InputSampler { kind: SamplerKind::Rademacher, dim, chol: None }
    }

    pub fn uniform_sphere(dim: usize) -> Self {
        InputSampler { kind: SamplerKind::UniformSphere, dim, chol: None }
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes one draw into `out` (length `dim`).
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            SamplerKind::Rademacher => {
                for v in out.iter_mut() {
                    *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
            SamplerKind::UniformSphere => {
                fill_normal(rng, out);
                normalize_in_place(out);
            }
            SamplerKind::GaussianCov { normalize, .. } => {
                fill_normal(rng, out);
                if let Some(l) = &self.chol {
                    // x = L z in place: row i only reads z_j for j <= i.
                    for i in (0..self.dim).rev() {
                        out[i] = (0..=i).map(|j| l.get(i, j) * out[j]).sum();
                    }
                }
                if *normalize {
                    normalize_in_place(out);
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.sample_into(rng, &mut x);
        x
    }

    /// `E[xxᵀ]` when it is known in closed form.
    pub fn exact_second_moment(&self) -> Option<SymMatrix> {
        let n = self.dim;
        match &self.kind {
            SamplerKind::Rademacher => Some(SymMatrix::identity(n)),
            SamplerKind::UniformSphere => Some(SymMatrix::identity(n).scale(1.0 / n as f64)),
            SamplerKind::GaussianCov { sigma, normalize: false } => Some(sigma.clone()),
            SamplerKind::GaussianCov { sigma, normalize: true } => {
                // Normalizing an isotropic Gaussian gives the uniform sphere.
                let c = sigma.get(0, 0);
                let isotropic = (0..n).all(|i| (0..n).all(|j| sigma.get(i, j) == if i == j { c } else { 0.0 }));
                isotropic.then(|| SymMatrix::identity(n).scale(1.0 / n as f64))
            }
        }
    }

    /// `E‖x‖⁴` when it is known in closed form.
    pub fn exact_fourth_moment(&self) -> Option<f64> {
        let n = self.dim as f64;
        match &self.kind {
            SamplerKind::Rademacher => Some(n * n),
            SamplerKind::UniformSphere | SamplerKind::GaussianCov { normalize: true, .. } => Some(1.0),
            SamplerKind::GaussianCov { sigma, normalize: false } => {
                // (tr Σ)² + 2 tr(Σ²)
                let tr = sigma.trace();
                let tr_sq: f64 = sigma.as_matrix().as_slice().iter().map(|v| v * v).sum();
                Some(tr * tr + 2.0 * tr_sq)
            }
        }
    }
}

fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

fn normalize_in_place(x: &mut [f64]) {
    let len = norm(x);
    if len > 0.0 {
        for v in x.iter_mut() {
            *v /= len;
        }
    }
}

/// Zero-mean label noise with a bounded conditional fourth moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Gaussian {
        std: f64,
    },
    /// `±scale` with equal probability.
    ScaledRademacher {
        scale: f64,
    },
}

impl NoiseModel {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
            NoiseModel::ScaledRademacher { scale } => {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }
        }
    }

    /// Bound on `E[ξ⁴ | x]`. Exact for every variant.
    pub fn rho(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { std } => 3.0 * std.powi(4),
            NoiseModel::ScaledRademacher { scale } => scale.powi(4),
        }
    }
}

/// Source of labeled examples `(x, f_{w*}(x) + ξ)`.
#[derive(Debug, Clone)]
pub struct LabelOracle {
    pub teacher: ConvNet,
    pub sampler: InputSampler,
    pub noise: NoiseModel,
}

impl LabelOracle {
    pub fn new(teacher: ConvNet, sampler: InputSampler, noise: NoiseModel) -> Result<Self> {
        if sampler.dim() != teacher.patches().n() {
            return Err(Error::DimensionMismatch { expected: teacher.patches().n(), actual: sampler.dim() });
        }
        Ok(LabelOracle { teacher, sampler, noise })
    }

    /// Draws `x` into the buffer and returns its label.
    #[inline]
    pub fn draw_into(&self, rng: &mut Rng, x: &mut [f64]) -> f64 {
        self.sampler.sample_into(rng, x);
        let clean = crate::model::forward_unchecked(
            self.teacher.patches(),
            self.teacher.activation(),
            self.teacher.weights(),
            x,
        );
        clean + self.noise.sample(rng)
    }

    pub fn draw_labeled(&self, rng: &mut Rng) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.sampler.dim()];
        let y = self.draw_into(rng, &mut x);
        (x, y)
    }

    /// Deterministic infinite stream of labeled examples for `seed`.
    pub fn samples(&self, seed: u64) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let mut rng = trial_rng(seed);
        std::iter::repeat_with(move || self.draw_labeled(&mut rng))
    }
}

/// `(1/m) Σ xxᵀ`, without mean subtraction.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<SymMatrix> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    let n = samples[0].len();
    let mut acc = vec![0.0; n * n];
    for x in samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
        }
        for i in 0..n {
            for j in i..n {
                acc[i * n + j] += x[i] * x[j];
            }
        }
    }
    let m = samples.len() as f64;
    Ok(SymMatrix::from_fn(n, |i, j| acc[i * n + j] / m))
}

const COVARIANCE_BISECTION_STEPS: usize = 200;

/// Random positive-definite covariance with condition number near
/// `condition_target`: symmetrize a standard normal matrix, then add `cI`
/// with `c` found by bisection. The achieved ratio `λ_max/λ_min` is within
/// 10% of the target.
pub fn random_covariance(n: usize, condition_target: f64, rng: &mut Rng) -> Result<SymMatrix> {
    let unreachable = || Error::ConditionUnreachable { target: condition_target, steps: COVARIANCE_BISECTION_STEPS };
    if !(condition_target > 1.0) || !condition_target.is_finite() || n < 2 {
        return Err(unreachable());
    }
    let a = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let s = SymMatrix::symmetrize(&a)?;
    let (lo_eig, hi_eig) = extreme_eigenvalues(&s);
    if hi_eig <= lo_eig {
        return Err(unreachable());
    }
    let ratio = |c: f64| (hi_eig + c) / (lo_eig + c);

    // ratio is decreasing on (-λ_min, ∞): bracket with an offset above -λ_min
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 0;
    while ratio(-lo_eig + hi) > condition_target {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps >= COVARIANCE_BISECTION_STEPS {
            return Err(unreachable());
        }
    }
    while steps < COVARIANCE_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ratio(-lo_eig + mid) > condition_target {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let out = s.shift(-lo_eig + 0.5 * (lo + hi));
    let (emin, emax) = extreme_eigenvalues(&out);
    if emin <= 0.0 || ((emax / emin) / condition_target - 1.0).abs() > 0.1 {
        return Err(unreachable());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Activation;
    use crate::patches::build_1d;

    #[test]
    fn normalized_gaussian_is_unit() {
        let s = InputSampler::standard_gaussian(6, true);
        let mut rng = trial_rng(1);
        for _ in 0..100 {
            assert!((norm(&s.sample(&mut rng)) - 1.0).abs() < 1e-12);
        }
        let sigma = SymMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
        let s = InputSampler::gaussian(sigma, true).unwrap();
        assert!((norm(&s.sample(&mut rng)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rademacher_coordinates() {
        let s = InputSampler::rademacher(4);
        let mut rng = trial_rng(2);
        for _ in 0..100 {
            assert!(s.sample(&mut rng).iter().all(|&v| v == 1.0 || v == -1.0));
        }
    }

    #[test]
    fn gaussian_rejects_indefinite() {
        let bad = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(InputSampler::gaussian(bad, false), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let s = InputSampler::standard_gaussian(5, false);
        let mut rng = trial_rng(9);
        let a: Vec<Vec<f64>> = (0..10).map(|_| s.sample(&mut rng)).collect();
        let mut rng = trial_rng(9);
        let b: Vec<Vec<f64>> = (0..10).map(|_| s.sample(&mut rng)).collect();
        assert_eq!(a, b);
        let mut other = init_rng(9);
        assert_ne!(s.sample(&mut other), a[0]);
    }

    #[test]
    fn oracle_labels() {
        let ps = build_1d(8, 4, 1).unwrap();
        let teacher = ConvNet::new(vec![0.5, -0.5, 0.5, -0.5], ps.clone(), Activation::relu()).unwrap();
        let oracle =
            LabelOracle::new(teacher.clone(), InputSampler::standard_gaussian(8, true), NoiseModel::None).unwrap();
        for (x, y) in oracle.samples(3).take(50) {
            assert_eq!(y, teacher.forward(&x).unwrap());
        }

        let zero = ConvNet::new(vec![0.0; 4], ps, Activation::relu()).unwrap();
        let noisy =
            LabelOracle::new(zero, InputSampler::rademacher(8), NoiseModel::ScaledRademacher { scale: 0.3 }).unwrap();
        for (_, y) in noisy.samples(4).take(50) {
            assert_eq!(y.abs(), 0.3);
        }
        assert!(LabelOracle::new(teacher, InputSampler::rademacher(7), NoiseModel::None).is_err());
    }

    #[test]
    fn covariance_cases() {
        let c = empirical_covariance(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(c, SymMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap());
        let x = vec![1.0, -2.0, 0.5];
        let c = empirical_covariance(&[x.clone(), x.clone(), x.clone()]).unwrap();
        assert_eq!(c, SymMatrix::from_fn(3, |i, j| x[i] * x[j]));
        assert!(matches!(empirical_covariance(&[x]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn random_covariance_hits_target() {
        let mut rng = covariance_rng(11);
        let sigma = random_covariance(8, 60.0, &mut rng).unwrap();
        let (lo, hi) = extreme_eigenvalues(&sigma);
        assert!(lo > 0.0);
        assert!((54.0..=66.0).contains(&(hi / lo)), "{}", hi / lo);
        assert!(cholesky(&sigma).is_ok());

        let near_one = random_covariance(5, 1.0 + 1e-9, &mut rng).unwrap();
        let (lo, hi) = extreme_eigenvalues(&near_one);
        assert!(hi / lo < 1.0 + 1e-6);

        assert!(random_covariance(5, 1.0, &mut rng).is_err());
        assert!(random_covariance(5, 0.5, &mut rng).is_err());
    }

    #[test]
    fn rho_values() {
        assert_eq!(NoiseModel::None.rho(), 0.0);
        assert!((NoiseModel::Gaussian { std: 0.1 }.rho() - 3e-4).abs() < 1e-18);
        assert_eq!(NoiseModel::ScaledRademacher { scale: 2.0 }.rho(), 16.0);
    }

    #[test]
    fn exact_moments() {
        assert_eq!(InputSampler::standard_gaussian(8, false).exact_fourth_moment(), Some(80.0));
        assert_eq!(InputSampler::standard_gaussian(8, true).exact_fourth_moment(), Some(1.0));
        assert_eq!(InputSampler::rademacher(3).exact_fourth_moment(), Some(9.0));
        assert_eq!(
            InputSampler::standard_gaussian(4, true).exact_second_moment(),
            Some(SymMatrix::identity(4).scale(0.25))
        );
        let sigma = SymMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
        assert!(InputSampler::gaussian(sigma, true).unwrap().exact_second_moment().is_none());
    }
}
