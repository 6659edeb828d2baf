#![allow(dead_code)]

use convotron::distributions::{InputSampler, Rng};
use convotron::model::forward;
use convotron::numerics::dot;
use convotron::{Activation, PatchStructure};

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Which patches the update direction sums over.
pub enum Direction {
    All,
    Single(usize),
}

#[allow(clippy::too_many_arguments)]
/// Draws of `(w* − w)ᵀ G` for the noise-free Convotron direction `G`.
pub fn progress_draws(
    ps: &PatchStructure,
    act: Activation,
    sampler: &InputSampler,
    w: &[f64],
    w_star: &[f64],
    direction: Direction,
    draws: usize,
    rng: &mut Rng,
) -> Vec<f64> {
    let diff: Vec<f64> = w_star.iter().zip(w).map(|(a, b)| a - b).collect();
    (0..draws)
        .map(|_| {
            let x = sampler.sample(rng);
            let residual = forward(ps, act, w_star, &x).unwrap() - forward(ps, act, w, &x).unwrap();
            let g: Vec<f64> = match direction {
                Direction::All => ps.summed_patches(&x),
                Direction::Single(j) => ps.patch_columns(j).iter().map(|&c| x[c]).collect(),
            };
            residual * dot(&diff, &g)
        })
        .collect()
}
