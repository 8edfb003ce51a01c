//! Tensor containers, 2-D convolution with its gradients, elementwise
//! nonlinearities, and a finite-difference gradient checker.
//!
//! Convolution here is true convolution (the kernel is flipped, matching the
//! `∗` operator), produces the full zero-padded output of size
//! `(h+k1-1) × (w+k2-1)`, and [`crop_to`] restores the original size by
//! discarding the padded borders. Everything is a pure function of its
//! inputs and safe to call from many threads.

mod conv;
mod gradcheck;

pub use conv::{conv2d_backward, conv2d_full};
pub use gradcheck::grad_check;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-channel 2-D signal, row-major. Corpus images keep values in
/// `[0, 1]`; the container itself is also used for coefficient grids and
/// proxies, which are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Image {
            height,
            width,
            data: vec![T::zero(); height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::dimension(format!(
                "image data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn min_max(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Squared Euclidean norm of the pixel vector.
    pub fn norm_sq(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    /// Converts into a different scalar type (through `f64`), e.g. for the
    /// `f32` inference path.
    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|&v| crate::real(crate::scalar::to_f64(v)))
                .collect(),
        }
    }
}

/// Stack of `channels` feature maps of size `height × width`, row-major in
/// `(channel, row, col)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor3 {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::dimension(format!(
                "tensor data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Tensor3 {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_image(image: &Image<T>) -> Self {
        Tensor3 {
            channels: 1,
            height: image.height(),
            width: image.width(),
            data: image.as_slice().to_vec(),
        }
    }

    /// Extracts a single-channel tensor as an image.
    pub fn into_image(self) -> Result<Image<T>> {
        if self.channels != 1 {
            return Err(Error::dimension(format!(
                "cannot view {}-channel tensor as an image",
                self.channels
            )));
        }
        Ok(Image {
            height: self.height,
            width: self.width,
            data: self.data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn at(&self, c: usize, r: usize, col: usize) -> T {
        self.data[(c * self.height + r) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, c: usize, r: usize, col: usize, value: T) {
        self.data[(c * self.height + r) * self.width + col] = value;
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let plane = self.height * self.width;
        &mut self.data[c * plane..(c + 1) * plane]
    }

    #[inline]
    pub fn row(&self, c: usize, r: usize) -> &[T] {
        let start = (c * self.height + r) * self.width;
        &self.data[start..start + self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, c: usize, r: usize) -> &mut [T] {
        let start = (c * self.height + r) * self.width;
        &mut self.data[start..start + self.width]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Bank of convolution filters: `out_channels × in_channels` kernels of size
/// `k1 × k2`, row-major in `(out, in, row, col)` order. Kernel sides must be
/// odd so the centered crop after a full convolution is well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T> {
    out_channels: usize,
    in_channels: usize,
    k1: usize,
    k2: usize,
    weights: Vec<T>,
}

impl<T: Real> FilterBank<T> {
    pub fn zeros(out_channels: usize, in_channels: usize, k1: usize, k2: usize) -> Result<Self> {
        Self::from_vec(
            out_channels,
            in_channels,
            k1,
            k2,
            vec![T::zero(); out_channels * in_channels * k1 * k2],
        )
    }

    pub fn from_vec(
        out_channels: usize,
        in_channels: usize,
        k1: usize,
        k2: usize,
        weights: Vec<T>,
    ) -> Result<Self> {
        if k1 == 0 || k2 == 0 || k1.is_multiple_of(2) || k2.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "kernel sides must be odd and >= 1, got {k1}x{k2}"
            )));
        }
        if weights.len() != out_channels * in_channels * k1 * k2 {
            return Err(Error::dimension(format!(
                "filter weights length {} does not match {out_channels}x{in_channels}x{k1}x{k2}",
                weights.len()
            )));
        }
        Ok(FilterBank {
            out_channels,
            in_channels,
            k1,
            k2,
            weights,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    #[inline]
    pub fn at(&self, o: usize, c: usize, u: usize, v: usize) -> T {
        self.weights[((o * self.in_channels + c) * self.k1 + u) * self.k2 + v]
    }

    #[inline]
    pub fn set(&mut self, o: usize, c: usize, u: usize, v: usize, value: T) {
        self.weights[((o * self.in_channels + c) * self.k1 + u) * self.k2 + v] = value;
    }

    pub fn kernel(&self, o: usize, c: usize) -> &[T] {
        let len = self.k1 * self.k2;
        let start = (o * self.in_channels + c) * len;
        &self.weights[start..start + len]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.weights
    }

    /// Centered delta kernel: convolution with it reproduces the input in
    /// the interior of the full output.
    pub fn delta(out_channels: usize, in_channels: usize, k1: usize, k2: usize) -> Result<Self> {
        let mut bank = Self::zeros(out_channels, in_channels, k1, k2)?;
        for o in 0..out_channels {
            for c in 0..in_channels {
                bank.set(o, c, k1 / 2, k2 / 2, T::one());
            }
        }
        Ok(bank)
    }
}

/// Per-feature-map additive bias. In the default full-map mode the bias has
/// one value per output pixel of the padded convolution, i.e. dimensions
/// `(input_h + k1 - 1) × (input_w + k2 - 1)`; in scalar mode it is a single
/// value per channel stored as a 1×1 map.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasMap<T> {
    out_channels: usize,
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Real> BiasMap<T> {
    pub fn zeros(out_channels: usize, height: usize, width: usize) -> Self {
        BiasMap {
            out_channels,
            height,
            width,
            values: vec![T::zero(); out_channels * height * width],
        }
    }

    pub fn from_vec(
        out_channels: usize,
        height: usize,
        width: usize,
        values: Vec<T>,
    ) -> Result<Self> {
        if values.len() != out_channels * height * width {
            return Err(Error::dimension(format!(
                "bias length {} does not match {out_channels}x{height}x{width}",
                values.len()
            )));
        }
        Ok(BiasMap {
            out_channels,
            height,
            width,
            values,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let plane = self.height * self.width;
        &self.values[c * plane..(c + 1) * plane]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn is_scalar(&self) -> bool {
        self.height == 1 && self.width == 1
    }
}

/// Elementwise `max(0, x)`.
pub fn relu<T: Real>(input: &Tensor3<T>) -> Tensor3<T> {
    let mut out = input.clone();
    for v in out.as_mut_slice() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// Centered crop of every channel to `target_h × target_w`; the inverse of
/// the zero-padding a full convolution introduces.
pub fn crop_to<T: Real>(
    input: &Tensor3<T>,
    target_h: usize,
    target_w: usize,
) -> Result<Tensor3<T>> {
    let (h, w) = (input.height(), input.width());
    if target_h > h || target_w > w {
        return Err(Error::dimension(format!(
            "crop target {target_h}x{target_w} exceeds input {h}x{w}"
        )));
    }
    if !(h - target_h).is_multiple_of(2) || !(w - target_w).is_multiple_of(2) {
        return Err(Error::dimension(format!(
            "crop from {h}x{w} to {target_h}x{target_w} is not centered"
        )));
    }
    let off_r = (h - target_h) / 2;
    let off_c = (w - target_w) / 2;
    let mut out = Tensor3::zeros(input.channels(), target_h, target_w);
    for c in 0..input.channels() {
        for r in 0..target_h {
            let src = &input.row(c, r + off_r)[off_c..off_c + target_w];
            out.row_mut(c, r).copy_from_slice(src);
        }
    }
    Ok(out)
}

/// Centered zero-padding to `target_h × target_w`; the adjoint of
/// [`crop_to`].
pub fn pad_to<T: Real>(input: &Tensor3<T>, target_h: usize, target_w: usize) -> Result<Tensor3<T>> {
    let (h, w) = (input.height(), input.width());
    if target_h < h || target_w < w {
        return Err(Error::dimension(format!(
            "pad target {target_h}x{target_w} smaller than input {h}x{w}"
        )));
    }
    if !(target_h - h).is_multiple_of(2) || !(target_w - w).is_multiple_of(2) {
        return Err(Error::dimension(format!(
            "pad from {h}x{w} to {target_h}x{target_w} is not centered"
        )));
    }
    let off_r = (target_h - h) / 2;
    let off_c = (target_w - w) / 2;
    let mut out = Tensor3::zeros(input.channels(), target_h, target_w);
    for c in 0..input.channels() {
        for r in 0..h {
            out.row_mut(c, r + off_r)[off_c..off_c + w].copy_from_slice(input.row(c, r));
        }
    }
    Ok(out)
}
