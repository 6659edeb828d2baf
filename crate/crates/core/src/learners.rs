//! Iterative learners for the filter `w`, and the step size / iteration count
//! prescribed by the convergence analysis.
//!
//! All three learners draw one labeled example per step and move along
//! `w ← w + η·G`. They differ only in `G`:
//!
//! * Convotron: `G = (y − f_w(x)) Σᵢ Pᵢx`
//! * Convotron, single disjoint patch: `G = (y − f_w(x)) P_j x`
//! * SGD: `G = (y − f_w(x)) Σᵢ σ′(wᵀPᵢx) Pᵢx`
//!
//! Convotron has no activation derivative and no `1/k` factor in `G`; SGD as
//! compared here leaves the `1/k` out as well.

use crate::distributions::{init_rng, random_unit_vector, InputSampler, LabelOracle, Rng};
use crate::error::{Error, Result};
use crate::model::{forward, forward_unchecked, relative_param_error, Activation};
use crate::numerics::{extreme_eigenvalues, SymMatrix};
use crate::patches::{find_disjoint_patch, gram, sigma_gram, PatchStructure};

/// Number of draws used to estimate `E[xxᵀ]` or `E‖x‖⁴` when no closed form
/// is available.
pub const PILOT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Convotron,
    ConvotronNoOverlap,
    Sgd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Convotron => "convotron",
            Algorithm::ConvotronNoOverlap => "convotron_no_overlap",
            Algorithm::Sgd => "sgd",
        }
    }

    /// The initialization each algorithm is defined with; `seed` only
    /// matters for SGD.
    pub fn default_init(&self, seed: u64) -> Init {
        match self {
            Algorithm::Sgd => Init::RandomUnit(seed),
            _ => Init::Zero,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "convotron" => Ok(Algorithm::Convotron),
            "convotron_no_overlap" | "no-overlap" | "no_overlap" => Ok(Algorithm::ConvotronNoOverlap),
            "sgd" => Ok(Algorithm::Sgd),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zero,
    /// Uniform on the unit sphere, drawn from `init_rng(seed)`.
    RandomUnit(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub iterations: usize,
    pub init: Init,
    pub record_trajectory: bool,
}

impl TrainConfig {
    pub fn new(eta: f64, iterations: usize, init: Init) -> Result<Self> {
        // η = 0 is accepted so that "no movement" runs can be expressed.
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidConfig(format!("step size must be finite and non-negative, got {eta}")));
        }
        if iterations < 1 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        Ok(TrainConfig { eta, iterations, init, record_trajectory: false })
    }

    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub final_weights: Vec<f64>,
    /// `‖w − w*‖² / ‖w*‖²`.
    pub final_relative_error: f64,
    /// Relative error after each iteration.
    pub trajectory: Option<Vec<f64>>,
}

fn check_dims(ps: &PatchStructure, w: &[f64], x: &[f64]) -> Result<()> {
    if w.len() != ps.r() {
        return Err(Error::DimensionMismatch { expected: ps.r(), actual: w.len() });
    }
    if x.len() != ps.n() {
        return Err(Error::DimensionMismatch { expected: ps.n(), actual: x.len() });
    }
    Ok(())
}

/// One Convotron step.
pub fn convotron_update(
    ps: &PatchStructure,
    act: Activation,
    w: &[f64],
    x: &[f64],
    y: f64,
    eta: f64,
) -> Result<Vec<f64>> {
    check_dims(ps, w, x)?;
    let scale = eta * (y - forward(ps, act, w, x)?);
    Ok(w.iter().zip(ps.summed_patches(x)).map(|(wi, g)| wi + scale * g).collect())
}

/// One Convotron step that moves only along the disjoint patch `disjoint_index`.
pub fn convotron_no_overlap_update(
    ps: &PatchStructure,
    act: Activation,
    w: &[f64],
    x: &[f64],
    y: f64,
    eta: f64,
    disjoint_index: usize,
) -> Result<Vec<f64>> {
    check_dims(ps, w, x)?;
    if find_disjoint_patch(ps).is_none() {
        return Err(Error::NoDisjointPatch);
    }
    if disjoint_index >= ps.k() {
        return Err(Error::InvalidConfig(format!("patch index {disjoint_index} out of range")));
    }
    let scale = eta * (y - forward(ps, act, w, x)?);
    Ok(w.iter().zip(ps.patch_columns(disjoint_index)).map(|(wi, &c)| wi + scale * x[c]).collect())
}

/// One SGD step, gating each patch by `σ′(wᵀPᵢx)`.
pub fn sgd_update(ps: &PatchStructure, act: Activation, w: &[f64], x: &[f64], y: f64, eta: f64) -> Result<Vec<f64>> {
    check_dims(ps, w, x)?;
    let mut g = vec![0.0; ps.r()];
    let residual = y - sgd_direction(ps, act, w, x, &mut g);
    Ok(w.iter().zip(&g).map(|(wi, gi)| wi + eta * residual * gi).collect())
}

/// Fills `dir` with `Σᵢ σ′(wᵀPᵢx) Pᵢx` and returns `f_w(x)`.
#[inline]
fn sgd_direction(ps: &PatchStructure, act: Activation, w: &[f64], x: &[f64], dir: &mut [f64]) -> f64 {
    dir.iter_mut().for_each(|v| *v = 0.0);
    let mut out = 0.0;
    for i in 0..ps.k() {
        let cols = ps.patch_columns(i);
        let z: f64 = cols.iter().zip(w).map(|(&c, wi)| wi * x[c]).sum();
        out += act.activate(z);
        let gate = act.derivative(z);
        if gate != 0.0 {
            for (d, &c) in dir.iter_mut().zip(cols) {
                *d += gate * x[c];
            }
        }
    }
    out / ps.k() as f64
}

#[derive(Clone, Copy)]
enum Direction {
    AllPatches,
    Patch(usize),
    Gated,
}

fn initial_weights(init: Init, r: usize) -> Vec<f64> {
    match init {
        Init::Zero => vec![0.0; r],
        Init::RandomUnit(seed) => random_unit_vector(r, &mut init_rng(seed)),
    }
}

fn run(
    oracle: &LabelOracle,
    ps: &PatchStructure,
    cfg: &TrainConfig,
    rng: &mut Rng,
    direction: Direction,
) -> Result<TrainResult> {
    let teacher = &oracle.teacher;
    if ps.r() != teacher.patches().r() || ps.n() != teacher.patches().n() {
        return Err(Error::DimensionMismatch { expected: teacher.patches().r(), actual: ps.r() });
    }
    let w_star = teacher.weights();
    let act = teacher.activation();
    let eta = cfg.eta;

    let mut w = initial_weights(cfg.init, ps.r());
    let mut x = vec![0.0; ps.n()];
    let mut dir = vec![0.0; ps.r()];
    let mut trajectory = cfg.record_trajectory.then(|| Vec::with_capacity(cfg.iterations));

    for _ in 0..cfg.iterations {
        let y = oracle.draw_into(rng, &mut x);
        let prediction = match direction {
            Direction::AllPatches => {
                dir.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..ps.k() {
                    for (d, &c) in dir.iter_mut().zip(ps.patch_columns(i)) {
                        *d += x[c];
                    }
                }
                forward_unchecked(ps, act, &w, &x)
            }
            Direction::Patch(j) => {
                for (d, &c) in dir.iter_mut().zip(ps.patch_columns(j)) {
                    *d = x[c];
                }
                forward_unchecked(ps, act, &w, &x)
            }
            Direction::Gated => sgd_direction(ps, act, &w, &x, &mut dir),
        };
        let scale = eta * (y - prediction);
        for (wi, d) in w.iter_mut().zip(&dir) {
            *wi += scale * d;
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(relative_param_error(&w, w_star)?);
        }
    }

    let final_relative_error = relative_param_error(&w, w_star)?;
    Ok(TrainResult { final_weights: w, final_relative_error, trajectory })
}

/// Convotron from `w = 0`. The learner uses the teacher's activation.
pub fn convotron_train(
    oracle: &LabelOracle,
    ps: &PatchStructure,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainResult> {
    if cfg.init != Init::Zero {
        return Err(Error::InvalidConfig("Convotron starts from w = 0".into()));
    }
    run(oracle, ps, cfg, rng, Direction::AllPatches)
}

/// Convotron restricted to the first patch that overlaps no other patch.
pub fn convotron_no_overlap_train(
    oracle: &LabelOracle,
    ps: &PatchStructure,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainResult> {
    if cfg.init != Init::Zero {
        return Err(Error::InvalidConfig("Convotron starts from w = 0".into()));
    }
    let j = find_disjoint_patch(ps).ok_or(Error::NoDisjointPatch)?;
    run(oracle, ps, cfg, rng, Direction::Patch(j))
}

/// SGD from a random unit vector.
pub fn sgd_train(oracle: &LabelOracle, ps: &PatchStructure, cfg: &TrainConfig, rng: &mut Rng) -> Result<TrainResult> {
    if !matches!(cfg.init, Init::RandomUnit(_)) {
        return Err(Error::InvalidConfig("SGD needs a random unit initialization".into()));
    }
    run(oracle, ps, cfg, rng, Direction::Gated)
}

pub fn train(
    algorithm: Algorithm,
    oracle: &LabelOracle,
    ps: &PatchStructure,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainResult> {
    match algorithm {
        Algorithm::Convotron => convotron_train(oracle, ps, cfg, rng),
        Algorithm::ConvotronNoOverlap => convotron_no_overlap_train(oracle, ps, cfg, rng),
        Algorithm::Sgd => sgd_train(oracle, ps, cfg, rng),
    }
}

/// Every quantity the step-size and iteration formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub lambda_min_p_sigma: f64,
    pub lambda_max_p: f64,
    pub k: usize,
    pub alpha: f64,
    /// `E‖x‖⁴`.
    pub fourth_moment: f64,
    /// Bound on `E[ξ⁴ | x]`.
    pub rho: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub w_star_norm_sq: f64,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_min_p_sigma", self.lambda_min_p_sigma),
            ("lambda_max_p", self.lambda_max_p),
            ("fourth_moment", self.fourth_moment),
            ("w_star_norm_sq", self.w_star_norm_sq),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::InvalidConfig(format!("rho must be non-negative, got {}", self.rho)));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// `β = (1 + α) λ_min(P_Σ) / (3k)`.
    pub fn beta(&self) -> f64 {
        (1.0 + self.alpha) * self.lambda_min_p_sigma / (3.0 * self.k as f64)
    }

    /// `γ = λ_max(P) E‖x‖⁴`.
    pub fn gamma(&self) -> f64 {
        self.lambda_max_p * self.fourth_moment
    }

    /// `B = λ_max(P) √(ρ E‖x‖⁴)`.
    pub fn noise_term(&self) -> f64 {
        self.lambda_max_p * (self.rho * self.fourth_moment).sqrt()
    }
}

/// `η = β · min(1/γ, ε‖w*‖²/B)`; the second term is dropped when `ρ = 0`.
pub fn theoretical_eta(p: &ScheduleParams) -> Result<f64> {
    p.validate()?;
    let b = p.noise_term();
    let noise_cap = if b > 0.0 { p.epsilon * p.w_star_norm_sq / b } else { f64::INFINITY };
    Ok(p.beta() * (1.0 / p.gamma()).min(noise_cap))
}

/// Step size for the single-disjoint-patch learner with identity covariance:
/// `η = (1 + α)/(3k) · min(1/E‖x‖⁴, ε‖w*‖²/√(ρ E‖x‖⁴))`. The spectral
/// fields of `p` are not used.
pub fn no_overlap_eta(p: &ScheduleParams) -> Result<f64> {
    p.validate()?;
    let noise = (p.rho * p.fourth_moment).sqrt();
    let noise_cap = if noise > 0.0 { p.epsilon * p.w_star_norm_sq / noise } else { f64::INFINITY };
    Ok((1.0 + p.alpha) / (3.0 * p.k as f64) * (1.0 / p.fourth_moment).min(noise_cap))
}

/// `T = ⌈ln(1/(εδ)) / (ηβ)⌉`.
pub fn theoretical_iterations(p: &ScheduleParams, eta: f64) -> Result<usize> {
    p.validate()?;
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {eta}")));
    }
    let exact = (1.0 / (p.epsilon * p.delta)).ln() / (eta * p.beta());
    // absorb last-bit rounding so that exact integers are not bumped up
    let t = (exact * (1.0 - 1e-12)).ceil();
    if !t.is_finite() || t > usize::MAX as f64 {
        return Err(Error::InvalidConfig(format!("iteration count overflows: {exact}")));
    }
    Ok((t as usize).max(1))
}

/// `E[xxᵀ]` and `E‖x‖⁴` for a sampler: closed forms where known, otherwise a
/// [`PILOT_SAMPLES`]-draw estimate.
#[derive(Debug, Clone)]
pub struct InputMoments {
    pub second: SymMatrix,
    pub fourth: f64,
}

pub fn input_moments(sampler: &InputSampler, rng: &mut Rng) -> Result<InputMoments> {
    let exact_second = sampler.exact_second_moment();
    let exact_fourth = sampler.exact_fourth_moment();
    if let (Some(second), Some(fourth)) = (exact_second.clone(), exact_fourth) {
        return Ok(InputMoments { second, fourth });
    }
    let pilot: Vec<Vec<f64>> = (0..PILOT_SAMPLES).map(|_| sampler.sample(rng)).collect();
    let second = match exact_second {
        Some(s) => s,
        None => crate::distributions::empirical_covariance(&pilot)?,
    };
    let fourth = match exact_fourth {
        Some(f) => f,
        None => pilot.iter().map(|x| crate::numerics::norm_sq(x).powi(2)).sum::<f64>() / pilot.len() as f64,
    };
    Ok(InputMoments { second, fourth })
}

impl ScheduleParams {
    /// Assembles the parameters for a patch structure and input moments.
    #[allow(clippy::too_many_arguments)]
    pub fn from_setup(
        ps: &PatchStructure,
        moments: &InputMoments,
        alpha: f64,
        rho: f64,
        epsilon: f64,
        delta: f64,
        w_star_norm_sq: f64,
    ) -> Result<Self> {
        let lambda_min_p_sigma = extreme_eigenvalues(&sigma_gram(ps, &moments.second)?).0;
        let lambda_max_p = extreme_eigenvalues(&gram(ps)).1;
        let p = ScheduleParams {
            lambda_min_p_sigma,
            lambda_max_p,
            k: ps.k(),
            alpha,
            fourth_moment: moments.fourth,
            rho,
            epsilon,
            delta,
            w_star_norm_sq,
        };
        p.validate()?;
        Ok(p)
    }
}
