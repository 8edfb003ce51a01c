//! Approximate message passing with a soft-threshold denoiser in the DCT
//! domain.

use std::time::Instant;

use super::{soft_threshold, Dct2, SolverConfig};
use crate::error::{Error, Result};
use crate::eval::RecoveryResult;
use crate::numerics::Image;
use crate::scalar::{real, to_f64, Real};
use crate::sensing::{MeasurementEnsemble, MeasurementVector};

/// AMP iteration. With `s_t` the current DCT coefficients and
/// `x_t = Ψ s_t`:
///
/// ```text
/// τ_t     = α · ‖z_t‖ / √m
/// s_{t+1} = soft(s_t + Ψᵀ Φᵀ z_t, τ_t)
/// z_{t+1} = y - Φ x_{t+1} + (‖s_{t+1}‖₀ / m) · z_t      (Onsager term)
/// ```
///
/// The Onsager correction keeps the effective noise at the denoiser input
/// approximately Gaussian; `config.amp_onsager = false` drops it (ablation
/// only). Expects the ensemble to carry variance `1/m` so the threshold
/// policy is calibrated.
pub fn amp_recover<T: Real>(
    y: &MeasurementVector<T>,
    phi: &MeasurementEnsemble<T>,
    shape: (usize, usize),
    config: &SolverConfig,
) -> Result<RecoveryResult<T>> {
    Ok(amp_recover_traced(y, phi, shape, config, None)?.0)
}

/// As [`amp_recover`], additionally returning the per-iteration NMSE
/// against `truth` when a truth image is supplied.
pub fn amp_recover_traced<T: Real>(
    y: &MeasurementVector<T>,
    phi: &MeasurementEnsemble<T>,
    shape: (usize, usize),
    config: &SolverConfig,
    truth: Option<&Image<T>>,
) -> Result<(RecoveryResult<T>, Vec<f64>)> {
    let (h, w) = shape;
    if h * w != phi.n() {
        return Err(Error::dimension(format!(
            "shape {h}x{w} does not match n={}",
            phi.n()
        )));
    }
    if y.len() != phi.m() {
        return Err(Error::dimension(format!(
            "measurement vector has {} entries, ensemble expects m={}",
            y.len(),
            phi.m()
        )));
    }
    let start = Instant::now();
    let m = phi.m();
    let plan = Dct2::<T>::new(h, w);

    let mut coeffs = Image::<T>::zeros(h, w);
    let mut estimate = Image::<T>::zeros(h, w);
    let mut residual: Vec<T> = y.values.clone();
    let initial_res = norm(&residual);
    let mut nmse_trace = Vec::new();
    let mut converged = false;
    let mut aborted = false;
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        iterations += 1;
        let res_norm = norm(&residual);
        if initial_res > 0.0 && res_norm > 10.0 * initial_res {
            aborted = true;
            break;
        }
        let tau = real::<T>(config.amp_alpha * res_norm / (m as f64).sqrt());

        // Pseudo-data in the coefficient domain: s + Ψᵀ Φᵀ z.
        let back = phi.proxy(&MeasurementVector::noiseless(residual.clone()), h, w)?;
        let step = plan.forward(&back);
        let pseudo: Vec<T> = coeffs
            .as_slice()
            .iter()
            .zip(step.as_slice())
            .map(|(&s, &g)| s + g)
            .collect();
        let next_vec = soft_threshold(&pseudo, tau);
        let nonzeros = next_vec.iter().filter(|&&v| v != T::zero()).count();
        let next = Image::from_vec(h, w, next_vec)?;

        let change = diff_norm(&next, &coeffs);
        let scale = to_f64(coeffs.norm_sq()).sqrt().max(1e-12);
        coeffs = next;
        estimate = plan.inverse(&coeffs);

        let phix = phi.measure(&estimate)?;
        let onsager = if config.amp_onsager {
            real::<T>(nonzeros as f64 / m as f64)
        } else {
            T::zero()
        };
        residual = y
            .values
            .iter()
            .zip(&phix.values)
            .zip(&residual)
            .map(|((&yv, &pv), &zv)| yv - pv + onsager * zv)
            .collect();

        if let Some(t) = truth {
            nmse_trace.push(crate::eval::nmse(&estimate, t)?);
        }
        if change / scale < config.tolerance {
            converged = true;
            break;
        }
    }

    let result = RecoveryResult {
        estimate,
        wall_time: start.elapsed().as_secs_f64(),
        iterations,
        converged: converged && !aborted,
        method: "amp".into(),
    };
    Ok((result, nmse_trace))
}

fn norm<T: Real>(values: &[T]) -> f64 {
    to_f64(values.iter().map(|&v| v * v).sum::<T>()).sqrt()
}

fn diff_norm<T: Real>(a: &Image<T>, b: &Image<T>) -> f64 {
    let mut acc = T::zero();
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        acc += (x - y) * (x - y);
    }
    to_f64(acc).sqrt()
}
