//! Classical iterative recovery baselines: IHT over a DCT sparsity basis,
//! soft-threshold AMP with the Onsager correction, and anisotropic TV
//! minimization via a primal-dual scheme.
//!
//! All solvers are deterministic given `(y, Φ, config)` and measure their
//! own wall time so the harness can reproduce the runtime tables.

mod amp;
mod dct;
mod iht;
mod tv;

pub use amp::{amp_recover, amp_recover_traced};
pub use dct::{dct2, idct2, Dct2};
pub use iht::iht_recover;
pub use tv::{tv_recover, tv_recover_traced};

use crate::numerics::Image;
use crate::scalar::Real;

/// Orthonormal sparsity basis Ψ: the signal is `x = Ψs` with `s` sparse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Dct2d,
    Identity,
}

#[derive(Debug, Clone)]
pub struct SparsityBasis<T> {
    n1: usize,
    n2: usize,
    kind: BasisKind,
    dct: Option<Dct2<T>>,
}

impl<T: Real> SparsityBasis<T> {
    pub fn new(n1: usize, n2: usize, kind: BasisKind) -> Self {
        let dct = match kind {
            BasisKind::Dct2d => Some(Dct2::new(n1, n2)),
            BasisKind::Identity => None,
        };
        SparsityBasis { n1, n2, kind, dct }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Synthesis `x = Ψs`.
    pub fn synthesize(&self, coeffs: &Image<T>) -> Image<T> {
        match &self.dct {
            Some(plan) => plan.inverse(coeffs),
            None => coeffs.clone(),
        }
    }

    /// Analysis `s = Ψᵀx`.
    pub fn analyze(&self, image: &Image<T>) -> Image<T> {
        match &self.dct {
            Some(plan) => plan.forward(image),
            None => image.clone(),
        }
    }
}

/// Iterative-solver knobs. Fields are read by the solvers that use them and
/// ignored otherwise.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative-change stopping threshold; 0 disables early stopping.
    pub tolerance: f64,
    /// Number of coefficients IHT keeps.
    pub sparsity_k: usize,
    /// TV regularization weight λ.
    pub lambda: f64,
    /// AMP threshold multiplier: τ = α·‖z‖/√m.
    pub amp_alpha: f64,
    /// Disables the Onsager term when false (for ablation only).
    pub amp_onsager: bool,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 100,
            tolerance: 1e-7,
            sparsity_k: 8,
            lambda: 0.01,
            amp_alpha: 1.1,
            amp_onsager: true,
            verbose: false,
        }
    }
}

/// Elementwise soft threshold: `sign(v)·max(|v| - tau, 0)`.
pub fn soft_threshold<T: Real>(values: &[T], tau: T) -> Vec<T> {
    values
        .iter()
        .map(|&v| {
            let mag = v.abs() - tau;
            if mag > T::zero() {
                mag * v.signum()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Keeps the `k` largest-magnitude entries and zeroes the rest. Ties break
/// toward the lower index so the result is deterministic.
pub fn hard_threshold_k<T: Real>(values: &[T], k: usize) -> Vec<T> {
    if k >= values.len() {
        return values.to_vec();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![T::zero(); values.len()];
    for &i in &order[..k] {
        out[i] = values[i];
    }
    out
}
