//! Monte-Carlo sweeps over undersampling ratios, runtime benchmarking, and
//! the noise experiment, with CSV emission for every figure/table analog.

use std::io::Write;

use rayon::prelude::*;

use super::{nmse, psnr, Method, SUCCESS_NMSE};
use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::rng;
use crate::scalar::Real;
use crate::sensing::{add_noise, MeasurementEnsemble};

/// Whether each trial draws a fresh ensemble or all trials at a ratio share
/// one. Fresh-Φ is the default Monte-Carlo reading; fixed-Φ exists because
/// a learned network is trained against one specific ensemble and fresh
/// draws are unfair to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    Fresh,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: u64,
    pub phi_mode: PhiMode,
}

/// One (ratio, method, trial) outcome.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub m_over_n: f64,
    pub method: String,
    pub trial: usize,
    pub psnr_db: f64,
    pub nmse: f64,
    pub success: bool,
    pub wall_time: f64,
    pub converged: bool,
}

/// Per-(ratio, method) aggregate.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub m_over_n: f64,
    pub method: String,
    pub success_rate: f64,
    /// Mean over trials with a finite PSNR (an aborted method can produce
    /// non-finite estimates; those trials still count as failures).
    pub mean_psnr_db: f64,
    pub mean_time_s: f64,
    pub trial_count: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub trials: Vec<TrialRecord>,
}

/// Number of measurements for a ratio: `max(1, round(ratio · n))`.
pub fn measurements_for_ratio(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n)
}

/// Ensemble seed for a given undersampling ratio, keyed by the ratio's
/// value rather than its position in a list. Training, single-image
/// recovery, and fixed-Φ sweeps all derive Φ through this, so a network
/// trained with some `(seed, ratio)` is evaluated against the very
/// ensemble it was trained for.
pub fn ratio_phi_seed(seed: u64, ratio: f64) -> u64 {
    rng::derive(seed, ratio.to_bits())
}

impl EvalReport {
    /// Per-trial PSNRs of one method at one ratio (finite values only), for
    /// the histogram outputs.
    pub fn psnrs(&self, method: &str, m_over_n: f64) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.method == method && t.m_over_n == m_over_n && t.psnr_db.is_finite())
            .map(|t| t.psnr_db)
            .collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for t in &self.rows {
            if !out.contains(&t.m_over_n) {
                out.push(t.m_over_n);
            }
        }
        out
    }

    /// Success-probability table (`fig2_success.csv`).
    pub fn write_success_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m_over_n,method,success_rate,trial_count")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.m_over_n, r.method, r.success_rate, r.trial_count
            )?;
        }
        Ok(())
    }

    /// Mean-PSNR table (`fig3_psnr.csv`).
    pub fn write_psnr_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m_over_n,method,mean_psnr_db,trial_count")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.m_over_n, r.method, r.mean_psnr_db, r.trial_count
            )?;
        }
        Ok(())
    }
}

/// Runs every method on identical instances for each (ratio, trial) and
/// aggregates. Trials run in parallel; records are assembled in
/// deterministic (ratio, trial, method) order, so reports reproduce exactly
/// for a fixed seed regardless of scheduling. A method failure counts as an
/// unsuccessful trial and never halts the sweep.
pub fn sweep<T: Real>(
    methods: &[Method<T>],
    ratios: &[f64],
    patches: &[Image<T>],
    config: &SweepConfig,
) -> Result<EvalReport> {
    if methods.is_empty() || ratios.is_empty() || patches.is_empty() || config.trials == 0 {
        return Err(Error::domain(
            "sweep needs methods, ratios, patches, and trials",
        ));
    }
    let (h, w) = (patches[0].height(), patches[0].width());
    let n = h * w;

    let mut trials = Vec::new();
    for &ratio in ratios {
        let m = measurements_for_ratio(n, ratio);
        let ratio_seed = ratio_phi_seed(config.seed, ratio);
        let fixed_phi = match config.phi_mode {
            PhiMode::Fixed => Some(MeasurementEnsemble::<T>::gaussian(m, n, ratio_seed)?),
            PhiMode::Fresh => None,
        };
        let per_trial: Vec<Result<Vec<TrialRecord>>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let truth = &patches[trial % patches.len()];
                let phi = match &fixed_phi {
                    Some(p) => p.clone(),
                    None => MeasurementEnsemble::<T>::gaussian(
                        m,
                        n,
                        rng::derive(ratio_seed, trial as u64),
                    )?,
                };
                let y = phi.measure(truth)?;
                let mut records = Vec::with_capacity(methods.len());
                for method in methods {
                    let record = match method.recover(&y, &phi, truth, (h, w)) {
                        Ok(result) => {
                            let err = nmse(&result.estimate, truth).unwrap_or(f64::NAN);
                            let p = psnr(&result.estimate, truth).unwrap_or(f64::NAN);
                            TrialRecord {
                                m_over_n: ratio,
                                method: method.name().into(),
                                trial,
                                psnr_db: p,
                                nmse: err,
                                success: err <= SUCCESS_NMSE,
                                wall_time: result.wall_time,
                                converged: result.converged,
                            }
                        }
                        Err(_) => TrialRecord {
                            m_over_n: ratio,
                            method: method.name().into(),
                            trial,
                            psnr_db: f64::NAN,
                            nmse: f64::NAN,
                            success: false,
                            wall_time: 0.0,
                            converged: false,
                        },
                    };
                    records.push(record);
                }
                Ok(records)
            })
            .collect();
        for result in per_trial {
            trials.extend(result?);
        }
    }

    let mut rows = Vec::new();
    for &ratio in ratios {
        for method in methods {
            let name = method.name();
            let subset: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.m_over_n == ratio && t.method == name)
                .collect();
            let successes = subset.iter().filter(|t| t.success).count();
            let finite: Vec<f64> = subset
                .iter()
                .map(|t| t.psnr_db)
                .filter(|p| p.is_finite())
                .collect();
            let mean_psnr = if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            let mean_time =
                subset.iter().map(|t| t.wall_time).sum::<f64>() / subset.len().max(1) as f64;
            rows.push(ReportRow {
                m_over_n: ratio,
                method: name.into(),
                success_rate: successes as f64 / subset.len() as f64,
                mean_psnr_db: mean_psnr,
                mean_time_s: mean_time,
                trial_count: subset.len(),
            });
        }
    }
    Ok(EvalReport { rows, trials })
}

/// Runtime table row (`table1_runtime.csv`).
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub m_over_n: f64,
    pub method: String,
    pub median_time_s: f64,
    pub repetitions: usize,
}

/// Median-of-repetitions wall time per (method, ratio) on one fixed
/// instance, with one warm-up run excluded.
pub fn bench_runtime<T: Real>(
    methods: &[Method<T>],
    ratios: &[f64],
    patch: &Image<T>,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if repetitions < 3 {
        return Err(Error::domain("benchmark needs at least 3 repetitions"));
    }
    let (h, w) = (patch.height(), patch.width());
    let n = h * w;
    let mut rows = Vec::new();
    for &ratio in ratios {
        let m = measurements_for_ratio(n, ratio);
        let phi = MeasurementEnsemble::<T>::gaussian(m, n, ratio_phi_seed(seed, ratio))?;
        let y = phi.measure(patch)?;
        for method in methods {
            let _ = method.recover(&y, &phi, patch, (h, w))?; // warm-up
            let mut times: Vec<f64> = (0..repetitions)
                .map(|_| method.recover(&y, &phi, patch, (h, w)).map(|r| r.wall_time))
                .collect::<Result<_>>()?;
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            rows.push(BenchRow {
                m_over_n: ratio,
                method: method.name().into(),
                median_time_s: times[times.len() / 2],
                repetitions,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "m_over_n,method,median_time_s,repetitions")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.m_over_n, r.method, r.median_time_s, r.repetitions
        )?;
    }
    Ok(())
}

/// Noise-experiment row (`table3_noise.csv`): mean PSNR with noiseless and
/// noisy measurements on the same instances.
#[derive(Debug, Clone)]
pub struct NoiseRow {
    pub method: String,
    pub snr_db: f64,
    pub noiseless_psnr_db: f64,
    pub noisy_psnr_db: f64,
    pub psnr_drop_db: f64,
}

pub fn noise_experiment<T: Real>(
    methods: &[Method<T>],
    snr_db: f64,
    ratio: f64,
    patches: &[Image<T>],
    trials: usize,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    if methods.is_empty() || patches.is_empty() || trials == 0 {
        return Err(Error::domain(
            "noise experiment needs methods, patches, trials",
        ));
    }
    let (h, w) = (patches[0].height(), patches[0].width());
    let n = h * w;
    let m = measurements_for_ratio(n, ratio);
    // One fixed ensemble per the ratio convention: paired noiseless/noisy
    // runs differ only in the injected noise, and a learned method faces
    // the ensemble it was trained against.
    let phi = MeasurementEnsemble::<T>::gaussian(m, n, ratio_phi_seed(seed, ratio))?;

    struct Pair {
        clean: Vec<f64>,
        noisy: Vec<f64>,
    }
    let mut per_method: Vec<Pair> = methods
        .iter()
        .map(|_| Pair {
            clean: Vec::new(),
            noisy: Vec::new(),
        })
        .collect();

    for trial in 0..trials {
        let truth = &patches[trial % patches.len()];
        let y = phi.measure(truth)?;
        let y_noisy = add_noise(&y, snr_db, rng::derive(seed, 0x4e10_0000 | trial as u64))?;
        for (mi, method) in methods.iter().enumerate() {
            let clean = method.recover(&y, &phi, truth, (h, w))?;
            let noisy = method.recover(&y_noisy, &phi, truth, (h, w))?;
            let p_clean = psnr(&clean.estimate, truth).unwrap_or(f64::NAN);
            let p_noisy = psnr(&noisy.estimate, truth).unwrap_or(f64::NAN);
            if p_clean.is_finite() && p_noisy.is_finite() {
                per_method[mi].clean.push(p_clean);
                per_method[mi].noisy.push(p_noisy);
            }
        }
    }

    let mean = |v: &[f64]| -> f64 {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(methods
        .iter()
        .zip(per_method)
        .map(|(method, pair)| {
            let clean = mean(&pair.clean);
            let noisy = mean(&pair.noisy);
            NoiseRow {
                method: method.name().into(),
                snr_db,
                noiseless_psnr_db: clean,
                noisy_psnr_db: noisy,
                psnr_drop_db: clean - noisy,
            }
        })
        .collect())
}

pub fn write_noise_csv<W: Write>(rows: &[NoiseRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "method,snr_db,noiseless_psnr_db,noisy_psnr_db,psnr_drop_db"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.method, r.snr_db, r.noiseless_psnr_db, r.noisy_psnr_db, r.psnr_drop_db
        )?;
    }
    Ok(())
}
