//! SGD-with-momentum training over shuffled mini-batches.

use std::io::Write;
use std::path::PathBuf;

use super::{backward_from_proxies, forward_from_proxy, init_params, NetConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::eval::psnr;
use crate::numerics::{Image, Tensor3};
use crate::rng::{self, Rng};
use crate::scalar::{real, to_f64, Real};
use crate::sensing::MeasurementEnsemble;

/// Training knobs. The optimizer is plain SGD with momentum; all defaults
/// are deliberate, documented choices since nothing beyond
/// "backpropagation" is prescribed.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds both the parameter initialization and the shuffling.
    pub seed: u64,
    /// Iterations between test-set PSNR evaluations; 0 disables them.
    pub eval_every: usize,
    /// Iterations between checkpoint writes; 0 disables checkpointing.
    pub checkpoint_every: usize,
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 16,
            epochs: 10,
            seed: 0,
            eval_every: 50,
            checkpoint_every: 0,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::domain("learning rate must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::domain("momentum must be in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::domain("epochs must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub train_mse: f64,
    /// Average test-set PSNR when this iteration was an evaluation point.
    pub test_psnr_db: Option<f64>,
}

/// Per-iteration training record; the data behind the convergence curve.
#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub rows: Vec<TrainLogRow>,
    pub diverged: bool,
    pub message: Option<String>,
}

impl TrainingLog {
    /// CSV with header `iteration,train_mse,test_psnr_db`; the PSNR column
    /// is empty on iterations without an evaluation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,train_mse,test_psnr_db")?;
        for row in &self.rows {
            match row.test_psnr_db {
                Some(p) => writeln!(out, "{},{},{}", row.iteration, row.train_mse, p)?,
                None => writeln!(out, "{},{},", row.iteration, row.train_mse)?,
            }
        }
        Ok(())
    }

    pub fn final_train_mse(&self) -> Option<f64> {
        self.rows.last().map(|r| r.train_mse)
    }
}

/// Trains a fresh network on `(Φx, x)` pairs generated from the training
/// images. Measurements and proxies are computed once up front; `Φ` itself
/// is fixed and never trained.
///
/// On a non-finite batch loss the run aborts with `diverged = true` and the
/// parameters from the last finite iteration are returned.
pub fn train<T: Real>(
    train_images: &[Image<T>],
    test_images: &[Image<T>],
    phi: &MeasurementEnsemble<T>,
    net_config: &NetConfig,
    config: &TrainConfig,
) -> Result<(NetworkParams<T>, TrainingLog)> {
    config.validate()?;
    net_config.validate()?;
    if train_images.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    let (h, w) = (net_config.input_h, net_config.input_w);
    for img in train_images.iter().chain(test_images) {
        if img.height() != h || img.width() != w {
            return Err(Error::dimension(format!(
                "corpus image is {}x{}, network expects {h}x{w}",
                img.height(),
                img.width()
            )));
        }
    }
    if phi.n() != h * w {
        return Err(Error::dimension(format!(
            "ensemble n={} does not match image size {}",
            phi.n(),
            h * w
        )));
    }

    let make_pairs = |images: &[Image<T>]| -> Result<Vec<(Tensor3<T>, Image<T>)>> {
        images
            .iter()
            .map(|x| {
                let y = phi.measure(x)?;
                let proxy = phi.proxy(&y, h, w)?;
                Ok((Tensor3::from_image(&proxy), x.clone()))
            })
            .collect()
    };
    let train_pairs = make_pairs(train_images)?;
    let test_pairs = make_pairs(test_images)?;

    let mut params: NetworkParams<T> = init_params(net_config, config.seed)?;
    let mut velocity = NetworkParams::<T>::zeros(net_config)?;
    let mut last_good = params.clone();
    let mut log = TrainingLog::default();

    let mut shuffle_rng = Rng::new(rng::derive(config.seed, 0x53485546)); // "SHUF"
    let lr = real::<T>(config.learning_rate);
    let momentum = real::<T>(config.momentum);

    let l = train_pairs.len();
    let iters_per_epoch = l.div_ceil(config.batch_size);
    let mut iteration = 0usize;

    'epochs: for _epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..l).collect();
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            iteration += 1;
            let batch: Vec<(&Tensor3<T>, &Image<T>)> = chunk
                .iter()
                .map(|&i| (&train_pairs[i].0, &train_pairs[i].1))
                .collect();
            let (batch_loss, grads) = backward_from_proxies(&batch, &params)?;
            let loss_f64 = to_f64(batch_loss);
            if !loss_f64.is_finite() {
                log.diverged = true;
                log.message = Some(format!(
                    "aborted: non-finite training loss at iteration {iteration}; \
                     returning the last finite parameters"
                ));
                return Ok((last_good, log));
            }
            last_good = params.clone();

            // v ← μ·v − η·g;  θ ← θ + v
            for (pl, (vl, gl)) in params
                .layers
                .iter_mut()
                .zip(velocity.layers.iter_mut().zip(&grads.layers))
            {
                for ((p, v), &g) in pl
                    .filters
                    .as_mut_slice()
                    .iter_mut()
                    .zip(vl.filters.as_mut_slice())
                    .zip(gl.filters.as_slice())
                {
                    *v = momentum * *v - lr * g;
                    *p += *v;
                }
                for ((p, v), &g) in pl
                    .bias
                    .as_mut_slice()
                    .iter_mut()
                    .zip(vl.bias.as_mut_slice())
                    .zip(gl.bias.as_slice())
                {
                    *v = momentum * *v - lr * g;
                    *p += *v;
                }
            }

            let test_psnr_db = if config.eval_every > 0
                && iteration.is_multiple_of(config.eval_every)
                && !test_pairs.is_empty()
            {
                Some(average_test_psnr(&test_pairs, &params)?)
            } else {
                None
            };
            log.rows.push(TrainLogRow {
                iteration,
                train_mse: loss_f64,
                test_psnr_db,
            });

            if config.checkpoint_every > 0 && iteration.is_multiple_of(config.checkpoint_every) {
                if let Some(path) = &config.checkpoint_path {
                    write_checkpoint(&params, path)?;
                }
            }

            if iteration >= iters_per_epoch * config.epochs {
                break 'epochs;
            }
        }
    }
    Ok((params, log))
}

/// Average PSNR of the network over precomputed test pairs.
fn average_test_psnr<T: Real>(
    test_pairs: &[(Tensor3<T>, Image<T>)],
    params: &NetworkParams<T>,
) -> Result<f64> {
    let mut total = 0.0;
    for (proxy, truth) in test_pairs {
        let estimate = forward_from_proxy(proxy, params)?.into_image()?;
        total += psnr(&estimate, truth)?;
    }
    Ok(total / test_pairs.len() as f64)
}

/// Atomic checkpoint: write to a temporary sibling, then rename, so an
/// interrupted run always leaves the previous checkpoint intact.
fn write_checkpoint<T: Real>(params: &NetworkParams<T>, path: &PathBuf) -> Result<()> {
    let tmp = path.with_extension("tmp");
    super::save_params(params, &tmp)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::BiasMode;
    use crate::rng::Rng;

    fn tiny_config() -> NetConfig {
        NetConfig {
            filters1: 2,
            filters2: 2,
            kernel_h: 3,
            kernel_w: 3,
            input_h: 6,
            input_w: 6,
            bias_mode: BiasMode::FullMap,
        }
    }

    fn random_images(seed: u64, count: usize, h: usize, w: usize) -> Vec<Image<f64>> {
        let mut rng = Rng::new(seed);
        (0..count)
            .map(|_| {
                Image::from_vec(h, w, (0..h * w).map(|_| rng.uniform(0.0, 1.0)).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_at_init() {
        let net_config = tiny_config();
        let images = random_images(1, 4, 6, 6);
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 2).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            batch_size: 2,
            seed: 7,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (params, log) = train(&images, &[], &phi, &net_config, &config).unwrap();
        let init: NetworkParams<f64> = init_params(&net_config, 7).unwrap();
        assert_eq!(params, init);
        assert!(!log.diverged);
    }

    #[test]
    fn log_length_is_epochs_times_batches() {
        let net_config = tiny_config();
        let images = random_images(2, 5, 6, 6);
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 3).unwrap();
        let config = TrainConfig {
            learning_rate: 1e-5,
            epochs: 4,
            batch_size: 2, // ceil(5/2) = 3 iterations per epoch
            seed: 1,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (_, log) = train(&images, &[], &phi, &net_config, &config).unwrap();
        assert_eq!(log.rows.len(), 4 * 3);
        for (i, row) in log.rows.iter().enumerate() {
            assert_eq!(row.iteration, i + 1);
        }
    }

    #[test]
    fn full_batch_no_momentum_is_deterministic_gd() {
        let net_config = tiny_config();
        let images = random_images(3, 4, 6, 6);
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 4).unwrap();
        let config = TrainConfig {
            learning_rate: 1e-4,
            momentum: 0.0,
            epochs: 5,
            batch_size: 4,
            seed: 11,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (a, log_a) = train(&images, &[], &phi, &net_config, &config).unwrap();
        let (b, log_b) = train(&images, &[], &phi, &net_config, &config).unwrap();
        assert_eq!(a, b);
        let losses_a: Vec<f64> = log_a.rows.iter().map(|r| r.train_mse).collect();
        let losses_b: Vec<f64> = log_b.rows.iter().map(|r| r.train_mse).collect();
        assert_eq!(losses_a, losses_b);
    }

    #[test]
    fn training_reduces_loss() {
        let net_config = tiny_config();
        let images = random_images(4, 4, 6, 6);
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 5).unwrap();
        let config = TrainConfig {
            learning_rate: 2e-4,
            momentum: 0.9,
            epochs: 100,
            batch_size: 4,
            seed: 3,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (_, log) = train(&images, &[], &phi, &net_config, &config).unwrap();
        let first = log.rows.first().unwrap().train_mse;
        let last = log.rows.last().unwrap().train_mse;
        assert!(last < 0.5 * first, "loss {first} -> {last}");
    }

    #[test]
    fn divergence_aborts_with_last_finite_params() {
        let net_config = tiny_config();
        // Pixel magnitudes near 1e200 overflow the squared-error loss to
        // infinity on the very first batch, forcing the abort path.
        let mut images = random_images(5, 4, 6, 6);
        for img in &mut images {
            for v in img.as_mut_slice() {
                *v *= 1e200;
            }
        }
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 6).unwrap();
        let config = TrainConfig {
            learning_rate: 1e-4,
            epochs: 3,
            batch_size: 4,
            seed: 9,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (params, log) = train(&images, &[], &phi, &net_config, &config).unwrap();
        assert!(log.diverged);
        assert!(log.message.as_deref().unwrap_or("").contains("non-finite"));
        assert!(params.flatten().iter().all(|v| v.is_finite()));
        // The last finite checkpoint is the untouched initialization.
        let init: NetworkParams<f64> = init_params(&net_config, 9).unwrap();
        assert_eq!(params, init);
    }

    #[test]
    fn eval_rows_carry_test_psnr() {
        let net_config = tiny_config();
        let images = random_images(6, 4, 6, 6);
        let tests = random_images(7, 2, 6, 6);
        let phi = MeasurementEnsemble::<f64>::gaussian(12, 36, 7).unwrap();
        let config = TrainConfig {
            learning_rate: 1e-4,
            epochs: 4,
            batch_size: 4,
            seed: 2,
            eval_every: 2,
            ..TrainConfig::default()
        };
        let (_, log) = train(&images, &tests, &phi, &net_config, &config).unwrap();
        for row in &log.rows {
            assert_eq!(row.test_psnr_db.is_some(), row.iteration % 2 == 0);
        }
    }

    #[test]
    fn csv_shape() {
        let log = TrainingLog {
            rows: vec![
                TrainLogRow {
                    iteration: 1,
                    train_mse: 2.5,
                    test_psnr_db: None,
                },
                TrainLogRow {
                    iteration: 2,
                    train_mse: 1.25,
                    test_psnr_db: Some(17.5),
                },
            ],
            diverged: false,
            message: None,
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "iteration,train_mse,test_psnr_db\n1,2.5,\n2,1.25,17.5\n"
        );
    }
}
