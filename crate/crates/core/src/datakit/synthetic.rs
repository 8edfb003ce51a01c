//! Synthetic oracle instances: DCT-sparse signals and piecewise-constant
//! images.

use crate::baselines::Dct2;
use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::rng::Rng;
use crate::scalar::{real, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// `k` DCT coefficients at uniformly chosen positions, values uniform
    /// in `[-1, 1]`.
    DctSparse { k: usize },
    /// Axis-aligned random rectangles of constant value on a constant
    /// background.
    PiecewiseConstant { regions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n1: usize,
    pub n2: usize,
    pub kind: SyntheticKind,
    pub seed: u64,
}

/// Raw DCT-sparse signal: exactly `k` nonzero DCT coefficients (almost
/// surely), not rescaled, so solver oracles get instances whose sparsity is
/// exact. Pixel values are unconstrained.
pub fn dct_sparse_signal<T: Real>(n1: usize, n2: usize, k: usize, seed: u64) -> Result<Image<T>> {
    let n = n1 * n2;
    if k >= n {
        return Err(Error::domain(format!("sparsity k={k} must be below n={n}")));
    }
    let mut rng = Rng::new(seed);
    let positions = rng.distinct_indices(n, k);
    let mut coeffs = Image::<T>::zeros(n1, n2);
    for &p in &positions {
        // Keep magnitudes away from zero so the support is unambiguous.
        let mut v = rng.uniform(-1.0, 1.0);
        while v.abs() < 1e-3 {
            v = rng.uniform(-1.0, 1.0);
        }
        coeffs.as_mut_slice()[p] = real(v);
    }
    Ok(Dct2::new(n1, n2).inverse(&coeffs))
}

fn rescale_unit<T: Real>(img: &Image<T>) -> Image<T> {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    let mut out = img.clone();
    if span <= T::zero() {
        for v in out.as_mut_slice() {
            *v = real(0.5);
        }
        return out;
    }
    for v in out.as_mut_slice() {
        *v = (*v - lo) / span;
    }
    out
}

fn piecewise_constant<T: Real>(n1: usize, n2: usize, regions: usize, seed: u64) -> Image<T> {
    let mut rng = Rng::new(seed);
    let mut img = Image::zeros(n1, n2);
    let background = rng.uniform(0.0, 1.0);
    for v in img.as_mut_slice() {
        *v = real(background);
    }
    for _ in 0..regions {
        let r0 = rng.below(n1);
        let r1 = r0 + 1 + rng.below(n1 - r0);
        let c0 = rng.below(n2);
        let c1 = c0 + 1 + rng.below(n2 - c0);
        let value = real::<T>(rng.uniform(0.0, 1.0));
        for r in r0..r1 {
            for c in c0..c1 {
                img.set(r, c, value);
            }
        }
    }
    img
}

/// Builds the synthetic image described by `spec`, rescaled to `[0, 1]`.
///
/// Note the rescale of a DCT-sparse signal is affine and therefore touches
/// only the DC coefficient: the output has at most `k + 1` nonzero
/// coefficients. Oracles that need exact sparsity use
/// [`dct_sparse_signal`] directly.
pub fn make_synthetic<T: Real>(spec: &SyntheticSpec) -> Result<Image<T>> {
    match spec.kind {
        SyntheticKind::DctSparse { k } => {
            let raw = dct_sparse_signal::<T>(spec.n1, spec.n2, k, spec.seed)?;
            Ok(rescale_unit(&raw))
        }
        SyntheticKind::PiecewiseConstant { regions } => {
            Ok(piecewise_constant(spec.n1, spec.n2, regions, spec.seed))
        }
    }
}
