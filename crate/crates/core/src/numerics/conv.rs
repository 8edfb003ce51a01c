//! Full 2-D convolution and its exact gradients.

use super::{FilterBank, Tensor3};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_channels<T: Real>(input: &Tensor3<T>, filters: &FilterBank<T>) -> Result<()> {
    if input.channels() != filters.in_channels() {
        return Err(Error::dimension(format!(
            "input has {} channels, filters expect {}",
            input.channels(),
            filters.in_channels()
        )));
    }
    Ok(())
}

/// Full (zero-padded) true convolution:
/// `out[o][i][j] = Σ_c Σ_{u,v} w[o][c][u][v] · x[c][i-u][j-v]`,
/// with `x` taken as zero outside its bounds. The output of a `h × w` input
/// under `k1 × k2` kernels is `(h+k1-1) × (w+k2-1)`.
pub fn conv2d_full<T: Real>(input: &Tensor3<T>, filters: &FilterBank<T>) -> Result<Tensor3<T>> {
    check_channels(input, filters)?;
    let (h, w) = (input.height(), input.width());
    let (k1, k2) = (filters.k1(), filters.k2());
    let (oh, ow) = (h + k1 - 1, w + k2 - 1);
    let mut out = Tensor3::zeros(filters.out_channels(), oh, ow);

    // Gather one output row at a time into a hot accumulator: with
    // i = u + r, output row i collects the axpy of every input row
    // r = i - u against kernel row u, shifted by the kernel column v.
    let mut acc = vec![T::zero(); ow];
    for o in 0..filters.out_channels() {
        for i in 0..oh {
            for a in acc.iter_mut() {
                *a = T::zero();
            }
            for c in 0..input.channels() {
                let kernel = filters.kernel(o, c);
                let u_lo = (i + 1).saturating_sub(h);
                let u_hi = k1.min(i + 1);
                for u in u_lo..u_hi {
                    let src = input.row(c, i - u);
                    let k_row = &kernel[u * k2..u * k2 + k2];
                    for (v, &weight) in k_row.iter().enumerate() {
                        if weight == T::zero() {
                            continue;
                        }
                        for (a, &s) in acc[v..v + w].iter_mut().zip(src) {
                            *a += weight * s;
                        }
                    }
                }
            }
            out.row_mut(o, i).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Gradients of a scalar loss through [`conv2d_full`]: given
/// `grad_out = ∂L/∂out`, returns `(∂L/∂input, ∂L/∂filters)`.
pub fn conv2d_backward<T: Real>(
    input: &Tensor3<T>,
    filters: &FilterBank<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, FilterBank<T>)> {
    check_channels(input, filters)?;
    let (h, w) = (input.height(), input.width());
    let (k1, k2) = (filters.k1(), filters.k2());
    let (oh, ow) = (h + k1 - 1, w + k2 - 1);
    if grad_out.channels() != filters.out_channels()
        || grad_out.height() != oh
        || grad_out.width() != ow
    {
        return Err(Error::dimension(format!(
            "grad_out is {}x{}x{}, expected {}x{oh}x{ow}",
            grad_out.channels(),
            grad_out.height(),
            grad_out.width(),
            filters.out_channels()
        )));
    }

    // out[o][u+r][v+s] += w[o][c][u][v] · x[c][r][s] implies
    //   dL/dx[c][r][s]    = Σ_{o,u,v} w[o][c][u][v] · g[o][r+u][s+v]
    //   dL/dw[o][c][u][v] = Σ_{r,s}   x[c][r][s]   · g[o][r+u][s+v]
    // and every shifted index stays in bounds of the full output.
    let mut grad_input = Tensor3::zeros(input.channels(), h, w);
    let mut grad_filters =
        FilterBank::zeros(filters.out_channels(), filters.in_channels(), k1, k2)?;

    for o in 0..filters.out_channels() {
        for c in 0..input.channels() {
            let kernel = filters.kernel(o, c);
            for u in 0..k1 {
                for v in 0..k2 {
                    let weight = kernel[u * k2 + v];
                    let mut wgrad = T::zero();
                    for r in 0..h {
                        let g_row = &grad_out.row(o, r + u)[v..v + w];
                        let x_row = input.row(c, r);
                        if weight != T::zero() {
                            let gi_row = grad_input.row_mut(c, r);
                            for ((gi, &g), &x) in gi_row.iter_mut().zip(g_row).zip(x_row) {
                                *gi += weight * g;
                                wgrad += x * g;
                            }
                        } else {
                            for (&g, &x) in g_row.iter().zip(x_row) {
                                wgrad += x * g;
                            }
                        }
                    }
                    grad_filters.set(o, c, u, v, wgrad);
                }
            }
        }
    }
    Ok((grad_input, grad_filters))
}
