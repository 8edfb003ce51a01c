//! Metrics, recovery-method dispatch, Monte-Carlo sweeps, and report
//! emission.
//!
//! The success indicator follows the benchmark convention exactly: a
//! recovery succeeds when `‖x̂-x‖²/‖x‖² ≤ 0.1`, boundary included. PSNR uses
//! the per-ground-truth peak (`max` over the truth image), not a fixed
//! dynamic range.

mod sweep;

pub use sweep::{
    bench_runtime, measurements_for_ratio, noise_experiment, ratio_phi_seed, sweep,
    write_bench_csv, write_noise_csv, BenchRow, EvalReport, NoiseRow, PhiMode, ReportRow,
    SweepConfig, TrialRecord,
};

use std::time::Instant;

use crate::baselines::{self, BasisKind, SolverConfig, SparsityBasis};
use crate::error::{Error, Result};
use crate::net::{self, NetworkParams};
use crate::numerics::Image;
use crate::scalar::{to_f64, Real};
use crate::sensing::{MeasurementEnsemble, MeasurementVector};

/// NMSE threshold below which a recovery counts as successful.
pub const SUCCESS_NMSE: f64 = 0.1;

/// Outcome of one recovery: the estimate plus bookkeeping for the harness.
#[derive(Debug, Clone)]
pub struct RecoveryResult<T> {
    pub estimate: Image<T>,
    /// Wall-clock seconds spent inside the recovery call.
    pub wall_time: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: String,
}

/// Peak signal-to-noise ratio in dB: `10·log10(peak² / mse)` with `peak`
/// the maximum pixel of the ground truth. Returns `+∞` when the estimate is
/// exact.
pub fn psnr<T: Real>(estimate: &Image<T>, truth: &Image<T>) -> Result<f64> {
    if estimate.height() != truth.height() || estimate.width() != truth.width() {
        return Err(Error::dimension(format!(
            "estimate {}x{} vs truth {}x{}",
            estimate.height(),
            estimate.width(),
            truth.height(),
            truth.width()
        )));
    }
    let (_, peak) = truth.min_max();
    let peak = to_f64(peak);
    if peak <= 0.0 {
        return Err(Error::domain("psnr needs a truth image with positive peak"));
    }
    let mut se = 0.0;
    for (&e, &t) in estimate.as_slice().iter().zip(truth.as_slice()) {
        let d = to_f64(e) - to_f64(t);
        se += d * d;
    }
    let mse = se / truth.pixels() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Normalized squared error `‖x̂-x‖² / ‖x‖²`.
pub fn nmse<T: Real>(estimate: &Image<T>, truth: &Image<T>) -> Result<f64> {
    if estimate.height() != truth.height() || estimate.width() != truth.width() {
        return Err(Error::dimension(format!(
            "estimate {}x{} vs truth {}x{}",
            estimate.height(),
            estimate.width(),
            truth.height(),
            truth.width()
        )));
    }
    let energy = to_f64(truth.norm_sq());
    if energy <= 0.0 {
        return Err(Error::domain("nmse needs a nonzero truth image"));
    }
    let mut se = 0.0;
    for (&e, &t) in estimate.as_slice().iter().zip(truth.as_slice()) {
        let d = to_f64(e) - to_f64(t);
        se += d * d;
    }
    Ok(se / energy)
}

/// Success indicator: NMSE at most [`SUCCESS_NMSE`], boundary inclusive.
pub fn success<T: Real>(estimate: &Image<T>, truth: &Image<T>) -> Result<bool> {
    Ok(nmse(estimate, truth)? <= SUCCESS_NMSE)
}

/// A recovery method the harness can run. Real methods ignore `truth`; the
/// `Zero` and `Identity` debug methods exist to pin the harness down in
/// tests (`Identity` returns the truth, `Zero` always fails).
#[derive(Debug, Clone)]
pub enum Method<T> {
    Zero,
    Identity,
    /// The trivial estimator `x̃ = Φᵀy`.
    Proxy,
    Iht(SolverConfig),
    Amp(SolverConfig),
    Tv(SolverConfig),
    DeepInverse(Box<NetworkParams<T>>),
}

impl<T: Real> Method<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Zero => "zero",
            Method::Identity => "identity",
            Method::Proxy => "proxy",
            Method::Iht(_) => "iht",
            Method::Amp(_) => "amp",
            Method::Tv(_) => "tv",
            Method::DeepInverse(_) => "deepinverse",
        }
    }

    /// Runs the method on one instance. `shape` is the image shape `(h, w)`
    /// with `h·w = n`.
    pub fn recover(
        &self,
        y: &MeasurementVector<T>,
        phi: &MeasurementEnsemble<T>,
        truth: &Image<T>,
        shape: (usize, usize),
    ) -> Result<RecoveryResult<T>> {
        let (h, w) = shape;
        match self {
            Method::Zero => {
                let start = Instant::now();
                let estimate = Image::zeros(h, w);
                Ok(RecoveryResult {
                    estimate,
                    wall_time: start.elapsed().as_secs_f64(),
                    iterations: 0,
                    converged: true,
                    method: "zero".into(),
                })
            }
            Method::Identity => {
                let start = Instant::now();
                let estimate = truth.clone();
                Ok(RecoveryResult {
                    estimate,
                    wall_time: start.elapsed().as_secs_f64(),
                    iterations: 0,
                    converged: true,
                    method: "identity".into(),
                })
            }
            Method::Proxy => {
                let start = Instant::now();
                let estimate = phi.proxy(y, h, w)?;
                Ok(RecoveryResult {
                    estimate,
                    wall_time: start.elapsed().as_secs_f64(),
                    iterations: 0,
                    converged: true,
                    method: "proxy".into(),
                })
            }
            Method::Iht(config) => {
                let basis = SparsityBasis::new(h, w, BasisKind::Dct2d);
                baselines::iht_recover(y, phi, &basis, config)
            }
            Method::Amp(config) => baselines::amp_recover(y, phi, shape, config),
            Method::Tv(config) => baselines::tv_recover(y, phi, shape, config),
            Method::DeepInverse(params) => {
                let start = Instant::now();
                let estimate = net::infer(y, phi, params)?;
                Ok(RecoveryResult {
                    estimate,
                    wall_time: start.elapsed().as_secs_f64(),
                    iterations: 0,
                    converged: true,
                    method: "deepinverse".into(),
                })
            }
        }
    }
}

/// Histogram with left-closed bins of width `bin_width` starting at
/// `floor(min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub first_left_edge: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn left_edge(&self, bin: usize) -> f64 {
        self.first_left_edge + bin as f64 * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins samples into a [`Histogram`]. Samples must be finite and nonempty.
pub fn emit_histogram(samples: &[f64], bin_width: f64) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::domain("histogram needs at least one sample"));
    }
    if bin_width.is_nan() || bin_width <= 0.0 {
        return Err(Error::domain("bin width must be positive"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("histogram samples must be finite"));
    }
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = min.floor();
    let nbins = ((max - first) / bin_width).floor() as usize + 1;
    let mut counts = vec![0u64; nbins];
    for &s in samples {
        let mut bin = ((s - first) / bin_width).floor() as usize;
        if bin >= nbins {
            bin = nbins - 1;
        }
        counts[bin] += 1;
    }
    Ok(Histogram {
        bin_width,
        first_left_edge: first,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(h: usize, w: usize, data: Vec<f64>) -> Image<f64> {
        Image::from_vec(h, w, data).unwrap()
    }

    #[test]
    fn psnr_exact_match_is_infinite() {
        let t = image(2, 2, vec![0.1, 0.5, 0.9, 1.0]);
        assert_eq!(psnr(&t, &t).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_direct_formula() {
        // peak = 1, uniform error 0.1 per pixel: mse = 0.01 -> 20 dB.
        let truth = image(1, 2, vec![1.0, 0.0]);
        let est = image(1, 2, vec![0.9, 0.1]);
        let p = psnr(&est, &truth).unwrap();
        assert!((p - 20.0).abs() < 1e-12, "psnr {p}");
        // mse = 0.0001 -> 40 dB.
        let est = image(1, 2, vec![0.99, 0.01]);
        let p = psnr(&est, &truth).unwrap();
        assert!((p - 40.0).abs() < 1e-12, "psnr {p}");
    }

    #[test]
    fn psnr_uses_truth_peak() {
        // Same mse, truth peak 0.5 instead of 1.0.
        let truth = image(1, 2, vec![0.5, 0.0]);
        let est = image(1, 2, vec![0.4, 0.1]);
        let p = psnr(&est, &truth).unwrap();
        assert!((p - 10.0 * (0.25f64 / 0.01).log10()).abs() < 1e-12);
    }

    #[test]
    fn nmse_basics() {
        let t = image(1, 3, vec![1.0, 2.0, 2.0]);
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        let zero = image(1, 3, vec![0.0; 3]);
        assert!((nmse(&zero, &t).unwrap() - 1.0).abs() < 1e-15);
        let double = image(1, 3, vec![2.0, 4.0, 4.0]);
        assert!((nmse(&double, &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nmse_rejects_zero_truth() {
        let z = image(1, 2, vec![0.0, 0.0]);
        assert!(nmse(&z, &z).is_err());
    }

    #[test]
    fn success_boundary_is_inclusive() {
        // ‖t‖² = 10 and a unit error give NMSE = 1/10, which is exactly the
        // f64 value 0.1, landing on the inclusive boundary.
        let truth = image(1, 2, vec![1.0, 3.0]);
        let at_boundary = image(1, 2, vec![2.0, 3.0]);
        let just_above = image(1, 2, vec![2.0 + 1e-9, 3.0]);
        let n = nmse(&at_boundary, &truth).unwrap();
        assert_eq!(n, 0.1, "constructed nmse {n}");
        assert!(success(&at_boundary, &truth).unwrap());
        assert!(!success(&just_above, &truth).unwrap());
        assert!(success(&truth, &truth).unwrap());
    }

    #[test]
    fn psnr_monotone_in_mse() {
        let truth = image(1, 4, vec![1.0, 0.2, 0.8, 0.4]);
        let mut last = f64::INFINITY;
        for step in 1..6 {
            let eps = step as f64 * 0.02;
            let est = image(1, 4, vec![1.0 - eps, 0.2 + eps, 0.8 - eps, 0.4 + eps]);
            let p = psnr(&est, &truth).unwrap();
            assert!(p < last, "psnr should fall as mse grows");
            last = p;
        }
    }

    #[test]
    fn histogram_single_sample() {
        let h = emit_histogram(&[3.7], 1.0).unwrap();
        assert_eq!(h.counts, vec![1]);
        assert_eq!(h.first_left_edge, 3.0);
    }

    #[test]
    fn histogram_binning_arithmetic() {
        let h = emit_histogram(&[10.1, 10.9, 12.0], 1.0).unwrap();
        assert_eq!(h.first_left_edge, 10.0);
        assert_eq!(h.counts, vec![2, 0, 1]);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn histogram_conserves_count() {
        let samples: Vec<f64> = (0..57).map(|i| (i as f64) * 0.37 - 3.0).collect();
        let h = emit_histogram(&samples, 0.5).unwrap();
        assert_eq!(h.total(), 57);
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(emit_histogram(&[], 1.0).is_err());
        assert!(emit_histogram(&[1.0], 0.0).is_err());
        assert!(emit_histogram(&[f64::INFINITY], 1.0).is_err());
    }
}
