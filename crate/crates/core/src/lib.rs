//! Recovery of images from undersampled linear measurements `y = Φx`.
//!
//! The crate provides three recovery routes and the machinery to compare
//! them:
//!
//! * a small convolutional network that maps the adjoint proxy `x̃ = Φᵀy`
//!   back to the image, trained by backpropagation ([`net`]),
//! * classical iterative solvers: iterative hard thresholding, approximate
//!   message passing with the Onsager correction, and total-variation
//!   minimization via a primal-dual scheme ([`baselines`]),
//! * a Monte-Carlo evaluation harness producing success-probability, PSNR,
//!   runtime, and noise-robustness tables as CSV ([`eval`]).
//!
//! All numeric kernels are generic over the scalar type through the
//! [`Real`] trait. Training, the solvers, and every oracle test run in
//! `f64`; `f32` is available as a faster inference-only path. Concrete
//! aliases for both precisions live at the crate root.

pub mod baselines;
pub mod datakit;
pub mod error;
pub mod eval;
pub mod net;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod sensing;

pub use error::{Error, Result};
pub use scalar::{real, Real};

/// Double-precision aliases: the training and solver path.
pub type Image64 = numerics::Image<f64>;
pub type Tensor64 = numerics::Tensor3<f64>;
pub type Ensemble64 = sensing::MeasurementEnsemble<f64>;
pub type Net64 = net::NetworkParams<f64>;

/// Single-precision aliases: the optional inference path.
pub type Image32 = numerics::Image<f32>;
pub type Tensor32 = numerics::Tensor3<f32>;
pub type Ensemble32 = sensing::MeasurementEnsemble<f32>;
pub type Net32 = net::NetworkParams<f32>;
