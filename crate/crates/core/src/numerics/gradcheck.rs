//! Finite-difference checking of analytic gradients.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Compares an analytic gradient against central finite differences of `f`
/// at `point`, returning the maximum relative error over all coordinates:
/// `|analytic - central| / max(1e-8, |analytic| + |central|)`.
///
/// `f` must be a scalar function of the full parameter vector; it is called
/// twice per coordinate with the coordinate displaced by `±step`.
pub fn grad_check<T, F>(mut f: F, analytic: &[T], point: &[T], step: T) -> Result<T>
where
    T: Real,
    F: FnMut(&[T]) -> Result<T>,
{
    if step <= T::zero() {
        return Err(Error::domain("grad_check step must be positive"));
    }
    if analytic.len() != point.len() {
        return Err(Error::dimension(format!(
            "analytic gradient has {} entries, point has {}",
            analytic.len(),
            point.len()
        )));
    }
    let mut probe = point.to_vec();
    let mut worst = T::zero();
    let floor: T = real(1e-8);
    let two = real::<T>(2.0);
    for i in 0..point.len() {
        let x = point[i];
        probe[i] = x + step;
        let up = f(&probe)?;
        probe[i] = x - step;
        let down = f(&probe)?;
        probe[i] = x;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite loss while probing coordinate {i}"
            )));
        }
        let central = (up - down) / (two * step);
        let denom = floor.max(analytic[i].abs() + central.abs());
        let err = (analytic[i] - central).abs() / denom;
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}
