//! The one-hidden-layer convolutional network
//! `f_w(x) = (1/k) Σᵢ σ(wᵀPᵢx)` with a leaky-ReLU `σ`.

use crate::error::{Error, Result};
use crate::numerics::{dist_sq, norm_sq};
use crate::patches::PatchStructure;

/// Leaky ReLU: `σ(z) = z` for `z ≥ 0`, `αz` otherwise, with `α ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    alpha: f64,
}

impl Activation {
    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("leak alpha = {alpha} outside [0, 1]")));
        }
        Ok(Activation { alpha })
    }

    pub fn relu() -> Self {
        Activation { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn activate(&self, z: f64) -> f64 {
        if z >= 0.0 {
            z
        } else {
            self.alpha * z
        }
    }

    /// Derivative, taking `σ′(0) = 1`.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        if z >= 0.0 {
            1.0
        } else {
            self.alpha
        }
    }
}

/// `(1/k) Σᵢ σ(wᵀPᵢx)` without dimension checks.
#[inline]
pub(crate) fn forward_unchecked(ps: &PatchStructure, act: Activation, w: &[f64], x: &[f64]) -> f64 {
    let k = ps.k();
    let mut acc = 0.0;
    for i in 0..k {
        let z: f64 = ps.patch_columns(i).iter().zip(w).map(|(&c, wi)| wi * x[c]).sum();
        acc += act.activate(z);
    }
    acc / k as f64
}

/// Network output for filter `w` on input `x`.
pub fn forward(ps: &PatchStructure, act: Activation, w: &[f64], x: &[f64]) -> Result<f64> {
    if w.len() != ps.r() {
        return Err(Error::DimensionMismatch { expected: ps.r(), actual: w.len() });
    }
    if x.len() != ps.n() {
        return Err(Error::DimensionMismatch { expected: ps.n(), actual: x.len() });
    }
    Ok(forward_unchecked(ps, act, w, x))
}

/// A filter together with the patch structure and activation it runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvNet {
    weights: Vec<f64>,
    patches: PatchStructure,
    activation: Activation,
}

impl ConvNet {
    pub fn new(weights: Vec<f64>, patches: PatchStructure, activation: Activation) -> Result<Self> {
        if weights.len() != patches.r() {
            return Err(Error::DimensionMismatch { expected: patches.r(), actual: weights.len() });
        }
        Ok(ConvNet { weights, patches, activation })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn patches(&self) -> &PatchStructure {
        &self.patches
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        ConvNet::new(weights, self.patches.clone(), self.activation)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        forward(&self.patches, self.activation, &self.weights, x)
    }

    /// Per-patch pre-activations `wᵀPᵢx`.
    pub fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.patches.k())
            .map(|i| self.patches.patch_columns(i).iter().zip(&self.weights).map(|(&c, w)| w * x[c]).sum())
            .collect()
    }
}

/// Mean squared residual `(1/m) Σ (y − f(x))²`.
pub fn empirical_loss(net: &ConvNet, samples: &[(Vec<f64>, f64)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = 0.0;
    for (x, y) in samples {
        total += (y - net.forward(x)?).powi(2);
    }
    Ok(total / samples.len() as f64)
}

/// `‖w − w*‖² / ‖w*‖²`.
pub fn relative_param_error(w: &[f64], w_star: &[f64]) -> Result<f64> {
    if w.len() != w_star.len() {
        return Err(Error::DimensionMismatch { expected: w_star.len(), actual: w.len() });
    }
    let denom = norm_sq(w_star);
    if denom == 0.0 {
        return Err(Error::ZeroTeacher);
    }
    Ok(dist_sq(w, w_star) / denom)
}
