//! The learned inverse map: a fixed adjoint lifting `x̃ = Φᵀy` followed by
//! three convolutional layers trained by backpropagation.
//!
//! Each layer computes `crop(ReLU(conv_full(input, W) + b))`: the full
//! convolution grows the map to `(h+k1-1) × (w+k2-1)`, the bias (by default
//! a full map of exactly that size, one value per output pixel) is added at
//! the padded size, ReLU is applied, and the centered crop restores the
//! original `h × w`. Every layer therefore preserves the signal dimension;
//! there is no pooling. The adjoint lifting has no trainable parameters.

mod io;
mod train;

pub use io::{load_params, save_params};
pub use train::{train, TrainConfig, TrainLogRow, TrainingLog};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{
    conv2d_backward, conv2d_full, crop_to, pad_to, BiasMap, FilterBank, Image, Tensor3,
};
use crate::rng::{self, Rng};
use crate::scalar::{real, to_f64, Real};
use crate::sensing::{MeasurementEnsemble, MeasurementVector};

/// Bias layout per feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// One bias value per output pixel of the padded convolution (default).
    FullMap,
    /// One bias value per filter, broadcast over the map.
    Scalar,
}

/// Architecture description: three conv layers with channel chain
/// `1 → filters1 → filters2 → 1`, all sharing one kernel size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub filters1: usize,
    pub filters2: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub input_h: usize,
    pub input_w: usize,
    pub bias_mode: BiasMode,
}

impl NetConfig {
    /// Desk-scale default: 8/4/1 filters of 7×7, for CI-speed experiments.
    pub fn desk(input_h: usize, input_w: usize) -> Self {
        NetConfig {
            filters1: 8,
            filters2: 4,
            kernel_h: 7,
            kernel_w: 7,
            input_h,
            input_w,
            bias_mode: BiasMode::FullMap,
        }
    }

    /// Full-scale preset: 64/32/1 filters of 11×11 on 64×64 inputs.
    pub fn full() -> Self {
        NetConfig {
            filters1: 64,
            filters2: 32,
            kernel_h: 11,
            kernel_w: 11,
            input_h: 64,
            input_w: 64,
            bias_mode: BiasMode::FullMap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters1 == 0 || self.filters2 == 0 {
            return Err(Error::domain("layer widths must be positive"));
        }
        if self.kernel_h.is_multiple_of(2)
            || self.kernel_w.is_multiple_of(2)
            || self.kernel_h == 0
            || self.kernel_w == 0
        {
            return Err(Error::domain(format!(
                "kernel must be odd and >= 1, got {}x{}",
                self.kernel_h, self.kernel_w
            )));
        }
        if self.input_h == 0 || self.input_w == 0 {
            return Err(Error::domain("input dimensions must be positive"));
        }
        Ok(())
    }

    /// `(out_channels, in_channels)` per layer.
    pub fn layer_channels(&self) -> [(usize, usize); 3] {
        [
            (self.filters1, 1),
            (self.filters2, self.filters1),
            (1, self.filters2),
        ]
    }

    /// Bias dimensions for a layer under this config.
    pub fn bias_dims(&self) -> (usize, usize) {
        match self.bias_mode {
            BiasMode::FullMap => (
                self.input_h + self.kernel_h - 1,
                self.input_w + self.kernel_w - 1,
            ),
            BiasMode::Scalar => (1, 1),
        }
    }

    pub fn signal_len(&self) -> usize {
        self.input_h * self.input_w
    }
}

/// One convolutional layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub filters: FilterBank<T>,
    pub bias: BiasMap<T>,
}

/// The full parameter set Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub config: NetConfig,
    pub layers: [LayerParams<T>; 3],
}

/// Gradient of the loss with respect to every parameter; same shape as the
/// parameters themselves.
pub type Gradients<T> = NetworkParams<T>;

impl<T: Real> NetworkParams<T> {
    /// All-zero parameters (also the shape of gradient and momentum
    /// buffers).
    pub fn zeros(config: &NetConfig) -> Result<Self> {
        config.validate()?;
        let (bh, bw) = config.bias_dims();
        let mut layers = Vec::with_capacity(3);
        for (out_c, in_c) in config.layer_channels() {
            layers.push(LayerParams {
                filters: FilterBank::zeros(out_c, in_c, config.kernel_h, config.kernel_w)?,
                bias: BiasMap::zeros(out_c, bh, bw),
            });
        }
        Ok(NetworkParams {
            config: *config,
            layers: layers
                .try_into()
                .map_err(|_| Error::domain("layer count"))?,
        })
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.filters.as_slice().len() + l.bias.as_slice().len())
            .sum()
    }

    /// Flattens all parameters (filters then bias, layer by layer); the
    /// inverse of [`NetworkParams::assign_flat`].
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.filters.as_slice());
            out.extend_from_slice(layer.bias.as_slice());
        }
        out
    }

    /// Writes a flat parameter vector back into the structured layout.
    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::dimension(format!(
                "flat vector has {} entries, network has {}",
                flat.len(),
                self.parameter_count()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let fw = layer.filters.as_mut_slice();
            fw.copy_from_slice(&flat[offset..offset + fw.len()]);
            offset += fw.len();
            let bv = layer.bias.as_mut_slice();
            bv.copy_from_slice(&flat[offset..offset + bv.len()]);
            offset += bv.len();
        }
        Ok(())
    }

    /// Converts the parameters to a different scalar type (through `f64`),
    /// e.g. to run inference in `f32`.
    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        let convert_layer = |l: &LayerParams<T>| LayerParams {
            filters: FilterBank::from_vec(
                l.filters.out_channels(),
                l.filters.in_channels(),
                l.filters.k1(),
                l.filters.k2(),
                l.filters
                    .as_slice()
                    .iter()
                    .map(|&v| real(to_f64(v)))
                    .collect(),
            )
            .expect("shape preserved"),
            bias: BiasMap::from_vec(
                l.bias.out_channels(),
                l.bias.height(),
                l.bias.width(),
                l.bias.as_slice().iter().map(|&v| real(to_f64(v))).collect(),
            )
            .expect("shape preserved"),
        };
        NetworkParams {
            config: self.config,
            layers: [
                convert_layer(&self.layers[0]),
                convert_layer(&self.layers[1]),
                convert_layer(&self.layers[2]),
            ],
        }
    }
}

/// Initializes parameters: filter weights uniform in
/// `±sqrt(6 / (fan_in + fan_out))`, biases zero. Deterministic per seed.
pub fn init_params<T: Real>(config: &NetConfig, seed: u64) -> Result<NetworkParams<T>> {
    let mut params = NetworkParams::zeros(config)?;
    let mut rng = Rng::new(rng::derive(seed, 0x494e4954)); // "INIT"
    for layer in &mut params.layers {
        let fan_in = layer.filters.in_channels() * layer.filters.k1() * layer.filters.k2();
        let fan_out = layer.filters.out_channels() * layer.filters.k1() * layer.filters.k2();
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in layer.filters.as_mut_slice() {
            *w = real(rng.uniform(-bound, bound));
        }
    }
    Ok(params)
}

fn add_bias<T: Real>(z: &mut Tensor3<T>, bias: &BiasMap<T>) -> Result<()> {
    if bias.out_channels() != z.channels() {
        return Err(Error::dimension(format!(
            "bias has {} channels, activation has {}",
            bias.out_channels(),
            z.channels()
        )));
    }
    if bias.is_scalar() {
        for c in 0..z.channels() {
            let b = bias.channel(c)[0];
            for v in z.channel_mut(c) {
                *v += b;
            }
        }
        return Ok(());
    }
    if bias.height() != z.height() || bias.width() != z.width() {
        return Err(Error::dimension(format!(
            "bias map is {}x{}, activation is {}x{}",
            bias.height(),
            bias.width(),
            z.height(),
            z.width()
        )));
    }
    for c in 0..z.channels() {
        let b = bias.channel(c);
        for (v, &bv) in z.channel_mut(c).iter_mut().zip(b) {
            *v += bv;
        }
    }
    Ok(())
}

/// One layer: `crop(ReLU(conv_full(input, W) + b))` back to
/// `out_h × out_w`.
pub fn layer_forward<T: Real>(
    input: &Tensor3<T>,
    layer: &LayerParams<T>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor3<T>> {
    let mut z = conv2d_full(input, &layer.filters)?;
    add_bias(&mut z, &layer.bias)?;
    for v in z.as_mut_slice() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    crop_to(&z, out_h, out_w)
}

/// Network output for a proxy tensor (the part after the adjoint lifting).
pub fn forward_from_proxy<T: Real>(
    proxy: &Tensor3<T>,
    omega: &NetworkParams<T>,
) -> Result<Tensor3<T>> {
    let (h, w) = (omega.config.input_h, omega.config.input_w);
    let a1 = layer_forward(proxy, &omega.layers[0], h, w)?;
    let a2 = layer_forward(&a1, &omega.layers[1], h, w)?;
    layer_forward(&a2, &omega.layers[2], h, w)
}

/// Full inverse map `x̂ = M(y, Ω)`: adjoint proxy then three layers.
pub fn forward<T: Real>(
    y: &MeasurementVector<T>,
    phi: &MeasurementEnsemble<T>,
    omega: &NetworkParams<T>,
) -> Result<Image<T>> {
    let (h, w) = (omega.config.input_h, omega.config.input_w);
    let proxy = phi.proxy(y, h, w)?;
    forward_from_proxy(&Tensor3::from_image(&proxy), omega)?.into_image()
}

/// Low-latency inference path: same map as [`forward`], but each layer
/// computes only the centered window that survives the crop, fuses the
/// bias add and ReLU into the accumulation pass, and splits output rows
/// across threads. Per output pixel the operations and their order are
/// identical to the reference path, so results match [`forward`] exactly;
/// a unit test pins the two paths together.
pub fn infer<T: Real>(
    y: &MeasurementVector<T>,
    phi: &MeasurementEnsemble<T>,
    omega: &NetworkParams<T>,
) -> Result<Image<T>> {
    let (h, w) = (omega.config.input_h, omega.config.input_w);
    let proxy = phi.proxy(y, h, w)?;
    let mut current = Tensor3::from_image(&proxy);
    for layer in &omega.layers {
        current = layer_infer(&current, layer, h, w)?;
    }
    current.into_image()
}

fn layer_infer<T: Real>(
    input: &Tensor3<T>,
    layer: &LayerParams<T>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor3<T>> {
    let (h, w) = (input.height(), input.width());
    if h != out_h || w != out_w {
        return Err(Error::dimension("inference layers preserve the input size"));
    }
    if input.channels() != layer.filters.in_channels() {
        return Err(Error::dimension(format!(
            "input has {} channels, filters expect {}",
            input.channels(),
            layer.filters.in_channels()
        )));
    }
    let (k1, k2) = (layer.filters.k1(), layer.filters.k2());
    let (off_r, off_c) = ((k1 - 1) / 2, (k2 - 1) / 2);
    let out_c = layer.filters.out_channels();
    let bias = &layer.bias;
    let scalar_bias = bias.is_scalar();
    let bias_w = bias.width();

    // Per-tap column windows, hoisted out of the hot loops: for kernel
    // column v the output window is 0 <= j + off_c - v < w.
    let vtab: Vec<(usize, usize, usize)> = (0..k2)
        .map(|v| {
            let j_lo = v.saturating_sub(off_c);
            let j_hi = (w + v).saturating_sub(off_c).min(out_w);
            (j_lo, j_hi.max(j_lo), j_lo + off_c - v)
        })
        .collect();

    let total_rows = out_c * out_h;
    let grain = (total_rows / (2 * rayon::current_num_threads().max(1))).max(8);
    let mut out = Tensor3::zeros(out_c, out_h, out_w);
    out.as_mut_slice()
        .par_chunks_mut(out_w)
        .with_min_len(grain)
        .enumerate()
        .for_each(|(idx, row)| {
            let o = idx / out_h;
            let i = idx % out_h;
            let i_full = i + off_r;
            for c in 0..input.channels() {
                let kernel = layer.filters.kernel(o, c);
                let u_lo = (i_full + 1).saturating_sub(h);
                let u_hi = k1.min(i_full + 1);
                for u in u_lo..u_hi {
                    let x_row = input.row(c, i_full - u);
                    let k_row = &kernel[u * k2..u * k2 + k2];
                    for (v, &(j_lo, j_hi, s0)) in vtab.iter().enumerate() {
                        let weight = k_row[v];
                        let src = &x_row[s0..s0 + (j_hi - j_lo)];
                        for (a, &s) in row[j_lo..j_hi].iter_mut().zip(src) {
                            *a += weight * s;
                        }
                    }
                }
            }
            if scalar_bias {
                let b = bias.channel(o)[0];
                for a in row.iter_mut() {
                    *a += b;
                }
            } else {
                let b_row =
                    &bias.channel(o)[i_full * bias_w + off_c..i_full * bias_w + off_c + out_w];
                for (a, &b) in row.iter_mut().zip(b_row) {
                    *a += b;
                }
            }
            for a in row.iter_mut() {
                if *a < T::zero() {
                    *a = T::zero();
                }
            }
        });
    Ok(out)
}

/// Mean over the batch of the squared Euclidean distance between the
/// network output and the truth.
pub fn loss<T: Real>(
    batch: &[(MeasurementVector<T>, Image<T>)],
    phi: &MeasurementEnsemble<T>,
    omega: &NetworkParams<T>,
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::domain("loss needs a nonempty batch"));
    }
    let mut total = T::zero();
    for (y, x) in batch {
        let estimate = forward(y, phi, omega)?;
        if estimate.height() != x.height() || estimate.width() != x.width() {
            return Err(Error::dimension(format!(
                "truth is {}x{}, network produces {}x{}",
                x.height(),
                x.width(),
                estimate.height(),
                estimate.width()
            )));
        }
        let mut se = T::zero();
        for (&e, &t) in estimate.as_slice().iter().zip(x.as_slice()) {
            se += (e - t) * (e - t);
        }
        total += se;
    }
    Ok(total / real(batch.len() as f64))
}

/// Exact gradient of [`loss`] with respect to every filter weight and bias
/// entry. The adjoint lifting is fixed and contributes no parameters.
pub fn backward<T: Real>(
    batch: &[(MeasurementVector<T>, Image<T>)],
    phi: &MeasurementEnsemble<T>,
    omega: &NetworkParams<T>,
) -> Result<Gradients<T>> {
    let (h, w) = (omega.config.input_h, omega.config.input_w);
    let proxies = batch
        .iter()
        .map(|(y, x)| Ok((Tensor3::from_image(&phi.proxy(y, h, w)?), x.clone())))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&Tensor3<T>, &Image<T>)> = proxies.iter().map(|(p, x)| (p, x)).collect();
    backward_from_proxies(&refs, omega).map(|(_, grads)| grads)
}

/// Forward pass retaining what backpropagation needs: the layer inputs and
/// the pre-activations (conv + bias at padded size).
struct SampleTrace<T> {
    inputs: [Tensor3<T>; 3],
    preacts: [Tensor3<T>; 3],
    estimate: Tensor3<T>,
}

fn forward_trace<T: Real>(proxy: &Tensor3<T>, omega: &NetworkParams<T>) -> Result<SampleTrace<T>> {
    let (h, w) = (omega.config.input_h, omega.config.input_w);
    let mut inputs = Vec::with_capacity(3);
    let mut preacts = Vec::with_capacity(3);
    let mut current = proxy.clone();
    for layer in &omega.layers {
        let mut z = conv2d_full(&current, &layer.filters)?;
        add_bias(&mut z, &layer.bias)?;
        let mut a = z.clone();
        for v in a.as_mut_slice() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        let cropped = crop_to(&a, h, w)?;
        inputs.push(current);
        preacts.push(z);
        current = cropped;
    }
    Ok(SampleTrace {
        inputs: inputs
            .try_into()
            .map_err(|_| Error::domain("layer count"))?,
        preacts: preacts
            .try_into()
            .map_err(|_| Error::domain("layer count"))?,
        estimate: current,
    })
}

/// Per-sample backpropagation; returns the sample's squared error and its
/// parameter gradient (without the `1/l` batch factor).
fn backward_sample<T: Real>(
    trace: &SampleTrace<T>,
    truth: &Image<T>,
    omega: &NetworkParams<T>,
) -> Result<(T, Gradients<T>)> {
    if truth.height() != trace.estimate.height() || truth.width() != trace.estimate.width() {
        return Err(Error::dimension(format!(
            "truth is {}x{}, network produces {}x{}",
            truth.height(),
            truth.width(),
            trace.estimate.height(),
            trace.estimate.width()
        )));
    }
    let mut grads = NetworkParams::zeros(&omega.config)?;
    let two = real::<T>(2.0);

    let mut se = T::zero();
    let mut g_data = Vec::with_capacity(truth.pixels());
    for (&e, &t) in trace.estimate.as_slice().iter().zip(truth.as_slice()) {
        se += (e - t) * (e - t);
        g_data.push(two * (e - t));
    }
    let mut grad: Tensor3<T> = Tensor3::from_vec(1, truth.height(), truth.width(), g_data)?;

    for l in (0..3).rev() {
        let preact = &trace.preacts[l];
        let mut g_pad = pad_to(&grad, preact.height(), preact.width())?;
        // ReLU gate: pass gradient only where the pre-activation was
        // strictly positive.
        for (g, &z) in g_pad.as_mut_slice().iter_mut().zip(preact.as_slice()) {
            if z <= T::zero() {
                *g = T::zero();
            }
        }
        // Bias gradient: the bias enters additively at the padded size.
        let bias_grad = grads.layers[l].bias.as_mut_slice();
        if omega.config.bias_mode == BiasMode::Scalar {
            let plane = g_pad.height() * g_pad.width();
            for (c, b) in bias_grad.iter_mut().enumerate().take(g_pad.channels()) {
                let sum: T = g_pad.as_slice()[c * plane..(c + 1) * plane]
                    .iter()
                    .copied()
                    .sum();
                *b += sum;
            }
        } else {
            for (b, &g) in bias_grad.iter_mut().zip(g_pad.as_slice()) {
                *b += g;
            }
        }
        let (g_input, g_filters) =
            conv2d_backward(&trace.inputs[l], &omega.layers[l].filters, &g_pad)?;
        grads.layers[l]
            .filters
            .as_mut_slice()
            .copy_from_slice(g_filters.as_slice());
        grad = g_input;
    }
    Ok((se, grads))
}

/// Batch loss and gradient from precomputed proxies; the heart of the
/// training loop. Per-sample work runs in parallel, and the reduction is in
/// fixed batch order so results do not depend on scheduling.
pub(crate) fn backward_from_proxies<T: Real>(
    batch: &[(&Tensor3<T>, &Image<T>)],
    omega: &NetworkParams<T>,
) -> Result<(T, Gradients<T>)> {
    if batch.is_empty() {
        return Err(Error::domain("backward needs a nonempty batch"));
    }
    let per_sample: Vec<Result<(T, Gradients<T>)>> = batch
        .par_iter()
        .map(|(proxy, truth)| {
            let trace = forward_trace(proxy, omega)?;
            backward_sample(&trace, truth, omega)
        })
        .collect();

    let inv_l = real::<T>(1.0 / batch.len() as f64);
    let mut total_loss = T::zero();
    let mut acc = NetworkParams::<T>::zeros(&omega.config)?;
    for item in per_sample {
        let (se, grads) = item?;
        total_loss += se;
        for (al, gl) in acc.layers.iter_mut().zip(&grads.layers) {
            for (a, &g) in al
                .filters
                .as_mut_slice()
                .iter_mut()
                .zip(gl.filters.as_slice())
            {
                *a += g * inv_l;
            }
            for (a, &g) in al.bias.as_mut_slice().iter_mut().zip(gl.bias.as_slice()) {
                *a += g * inv_l;
            }
        }
    }
    Ok((total_loss * inv_l, acc))
}
