//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use dics_core::baselines::SolverConfig;
use dics_core::datakit::{
    build_manifest, make_synthetic, write_pgm, CorpusManifest, Split, SyntheticKind, SyntheticSpec,
};
use dics_core::error::{Error, Result};
use dics_core::eval::{
    bench_runtime, emit_histogram, measurements_for_ratio, nmse, noise_experiment, psnr,
    ratio_phi_seed, sweep, write_bench_csv, write_noise_csv, Method, PhiMode, SweepConfig,
};
use dics_core::net::{
    load_params, save_params, train as train_net, BiasMode, NetConfig, TrainConfig,
};
use dics_core::sensing::MeasurementEnsemble;
use dics_core::{Image64, Net64};

#[derive(Parser)]
#[command(name = "dics", version, about = "Compressive-sensing recovery toolkit")]
pub struct Cli {
    /// Worker threads (DICS_THREADS overrides; default: machine parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a patch manifest from an image directory or synthetic images
    GenData(GenDataArgs),
    /// Train the convolutional inverse map on a manifest's train split
    Train(TrainArgs),
    /// Sense one image with a seeded ensemble and recover it
    Recover(RecoverArgs),
    /// Monte-Carlo sweep: success probability, PSNR, histograms, noise table
    Eval(EvalArgs),
    /// Runtime benchmark producing the reconstruction-time table
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticArg {
    DctSparse,
    Piecewise,
}

#[derive(Args)]
pub struct GenDataArgs {
    /// Directory of source images (pgm/png)
    #[arg(long, conflicts_with = "synthetic")]
    source_dir: Option<PathBuf>,
    /// Generate synthetic images instead of reading a directory
    #[arg(long, value_enum)]
    synthetic: Option<SyntheticArg>,
    /// Number of synthetic images
    #[arg(long, default_value_t = 64)]
    count: usize,
    /// Nonzero DCT coefficients per dct-sparse image
    #[arg(long, default_value_t = 8)]
    sparsity: usize,
    /// Rectangles per piecewise-constant image
    #[arg(long, default_value_t = 2)]
    regions: usize,
    /// Synthetic image height
    #[arg(long, default_value_t = 32)]
    height: usize,
    /// Synthetic image width
    #[arg(long, default_value_t = 32)]
    width: usize,
    /// Square patch side
    #[arg(long, default_value_t = 32)]
    patch_size: usize,
    /// Patch stride (default: patch size)
    #[arg(long)]
    stride: Option<usize>,
    /// Fraction of source images assigned to the train split
    #[arg(long, default_value_t = 0.8)]
    split_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// 8/4/1 filters of 7x7
    Desk,
    /// 64/32/1 filters of 11x11 on 64x64 patches
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BiasArg {
    Full,
    Scalar,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Undersampling ratio m/n
    #[arg(long, default_value_t = 0.1)]
    ratio: f64,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    #[arg(long, value_enum, default_value_t = BiasArg::Full)]
    bias_mode: BiasArg,
    #[arg(long, default_value_t = 1e-4)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Iterations between test-set PSNR evaluations (0 = never)
    #[arg(long, default_value_t = 50)]
    eval_every: usize,
    /// Iterations between checkpoint writes (0 = never)
    #[arg(long, default_value_t = 200)]
    checkpoint_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct RecoverArgs {
    /// zero | identity | proxy | iht | amp | tv | deepinverse
    #[arg(long)]
    method: String,
    /// Weights file (required for deepinverse)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Input image (pgm/png); also the ground truth for the metrics line
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// gaussian | identity | orthonormal (identity forces m = n)
    #[arg(long, default_value = "gaussian")]
    phi_kind: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
pub struct SolverArgs {
    /// IHT iteration cap
    #[arg(long, default_value_t = 200)]
    iht_iters: usize,
    /// AMP iteration cap
    #[arg(long, default_value_t = 30)]
    amp_iters: usize,
    /// TV iteration cap
    #[arg(long, default_value_t = 100)]
    tv_iters: usize,
    /// Relative-change stopping tolerance (0 = run to the cap)
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    /// IHT sparsity
    #[arg(long, default_value_t = 8)]
    sparsity_k: usize,
    /// TV weight
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// AMP threshold multiplier
    #[arg(long, default_value_t = 1.1)]
    alpha: f64,
}

impl SolverArgs {
    fn config(&self, max_iters: usize) -> SolverConfig {
        SolverConfig {
            max_iters,
            tolerance: self.tolerance,
            sparsity_k: self.sparsity_k,
            lambda: self.lambda,
            amp_alpha: self.alpha,
            amp_onsager: true,
            verbose: false,
        }
    }
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated method names
    #[arg(long, default_value = "proxy,iht,amp,tv")]
    methods: String,
    /// Comma-separated undersampling ratios
    #[arg(long, default_value = "0.01,0.05,0.1,0.2")]
    ratios: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fresh (new ensemble per trial) | fixed (one ensemble per ratio)
    #[arg(long, default_value = "fresh")]
    phi_mode: String,
    /// Comma-separated weights files, one per ratio (deepinverse only)
    #[arg(long)]
    weights: Option<String>,
    /// SNR for the noise table
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    /// Ratio used for the noise table
    #[arg(long, default_value_t = 0.1)]
    noise_ratio: f64,
    /// PSNR histogram bin width in dB
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "proxy,iht,amp,tv")]
    methods: String,
    #[arg(long, default_value = "0.01,0.1,0.2")]
    ratios: String,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated weights files, one per ratio (deepinverse only)
    #[arg(long)]
    weights: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Writes the resolved-parameter echo; `entries` are `(key, value)` pairs.
fn write_run_cfg(out_dir: &Path, command: &str, entries: &[(&str, String)]) -> Result<()> {
    let mut text = format!("command = {command}\n");
    let mut sorted: Vec<&(&str, String)> = entries.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    for (k, v) in sorted {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(out_dir.join("run.cfg"), text)?;
    Ok(())
}

fn validate_ratio(ratio: f64) -> Result<f64> {
    if !(0.0 < ratio && ratio <= 1.0) {
        return Err(Error::domain(format!("ratio {ratio} must lie in (0, 1]")));
    }
    Ok(ratio)
}

fn parse_ratios(text: &str) -> Result<Vec<f64>> {
    let ratios: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("bad ratio '{s}'")))
        })
        .collect::<Result<_>>()?;
    if ratios.is_empty() || ratios.iter().any(|&r| !(0.0 < r && r <= 1.0)) {
        return Err(Error::domain("ratios must lie in (0, 1]"));
    }
    Ok(ratios)
}

const METHOD_NAMES: &str = "zero, identity, proxy, iht, amp, tv, deepinverse";

fn build_methods(
    names: &str,
    ratios: &[f64],
    weights: Option<&str>,
    solver: &SolverArgs,
) -> Result<Vec<Vec<Method<f64>>>> {
    // One method list per ratio: deepinverse needs per-ratio weights, the
    // rest are ratio-independent.
    let mut weight_paths: Vec<PathBuf> = Vec::new();
    if let Some(w) = weights {
        weight_paths = w.split(',').map(|s| PathBuf::from(s.trim())).collect();
    }
    let mut per_ratio: Vec<Vec<Method<f64>>> = vec![Vec::new(); ratios.len()];
    for raw in names.split(',') {
        let name = raw.trim();
        match name {
            "zero" => per_ratio.iter_mut().for_each(|v| v.push(Method::Zero)),
            "identity" => per_ratio.iter_mut().for_each(|v| v.push(Method::Identity)),
            "proxy" => per_ratio.iter_mut().for_each(|v| v.push(Method::Proxy)),
            "iht" => per_ratio
                .iter_mut()
                .for_each(|v| v.push(Method::Iht(solver.config(solver.iht_iters)))),
            "amp" => per_ratio
                .iter_mut()
                .for_each(|v| v.push(Method::Amp(solver.config(solver.amp_iters)))),
            "tv" => per_ratio
                .iter_mut()
                .for_each(|v| v.push(Method::Tv(solver.config(solver.tv_iters)))),
            "deepinverse" => {
                if weight_paths.len() != ratios.len() {
                    return Err(Error::domain(format!(
                        "deepinverse needs --weights with exactly {} comma-separated paths (one per ratio), got {}",
                        ratios.len(),
                        weight_paths.len()
                    )));
                }
                for (v, path) in per_ratio.iter_mut().zip(&weight_paths) {
                    v.push(Method::DeepInverse(Box::new(load_params::<f64>(path)?)));
                }
            }
            other => {
                return Err(Error::domain(format!(
                    "unknown method '{other}'; available: {METHOD_NAMES}"
                )));
            }
        }
    }
    Ok(per_ratio)
}

pub fn gen_data(args: &GenDataArgs) -> Result<u8> {
    fs::create_dir_all(&args.out_dir)?;
    let stride = args.stride.unwrap_or(args.patch_size);

    let source_dir = match (&args.source_dir, args.synthetic) {
        (Some(dir), None) => dir.clone(),
        (None, Some(kind)) => {
            let dir = args.out_dir.join("images");
            fs::create_dir_all(&dir)?;
            for i in 0..args.count {
                let spec = SyntheticSpec {
                    n1: args.height,
                    n2: args.width,
                    kind: match kind {
                        SyntheticArg::DctSparse => SyntheticKind::DctSparse { k: args.sparsity },
                        SyntheticArg::Piecewise => SyntheticKind::PiecewiseConstant {
                            regions: args.regions,
                        },
                    },
                    seed: args.seed.wrapping_add(i as u64),
                };
                let img: Image64 = make_synthetic(&spec)?;
                write_pgm(&dir.join(format!("synthetic{i:04}.pgm")), &img)?;
            }
            dir
        }
        _ => {
            return Err(Error::domain(
                "exactly one of --source-dir and --synthetic is required",
            ));
        }
    };

    let manifest = build_manifest(
        &source_dir,
        args.patch_size,
        args.patch_size,
        stride,
        args.split_fraction,
        args.seed,
    )?;
    let manifest_path = args.out_dir.join("manifest.tsv");
    manifest.save(&manifest_path)?;

    write_run_cfg(
        &args.out_dir,
        "gen-data",
        &[
            ("source_dir", source_dir.display().to_string()),
            ("patch_size", args.patch_size.to_string()),
            ("stride", stride.to_string()),
            ("split_fraction", args.split_fraction.to_string()),
            ("seed", args.seed.to_string()),
            ("count", args.count.to_string()),
            ("sparsity", args.sparsity.to_string()),
            ("regions", args.regions.to_string()),
            ("height", args.height.to_string()),
            ("width", args.width.to_string()),
        ],
    )?;
    println!(
        "manifest: {} ({} train / {} test patches)",
        manifest_path.display(),
        manifest.split_entries(Split::Train).count(),
        manifest.split_entries(Split::Test).count()
    );
    Ok(0)
}

pub fn train(args: &TrainArgs) -> Result<u8> {
    validate_ratio(args.ratio)?;
    fs::create_dir_all(&args.out_dir)?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let train_images: Vec<Image64> = manifest.load_split_images(Split::Train)?;
    let test_images: Vec<Image64> = manifest.load_split_images(Split::Test)?;
    if train_images.is_empty() {
        return Err(Error::domain("manifest has no train patches"));
    }
    let (h, w) = (manifest.patch_h, manifest.patch_w);

    let mut net_config = match args.preset {
        PresetArg::Desk => NetConfig::desk(h, w),
        PresetArg::Full => NetConfig::full(),
    };
    if args.preset == PresetArg::Full && (h, w) != (64, 64) {
        return Err(Error::domain(format!(
            "full preset expects 64x64 patches, manifest has {h}x{w}"
        )));
    }
    net_config.bias_mode = match args.bias_mode {
        BiasArg::Full => BiasMode::FullMap,
        BiasArg::Scalar => BiasMode::Scalar,
    };

    let n = h * w;
    let m = measurements_for_ratio(n, args.ratio);
    // Keyed by (seed, ratio) so eval's fixed-phi mode and recover rebuild
    // the identical ensemble.
    let phi = MeasurementEnsemble::<f64>::gaussian(m, n, ratio_phi_seed(args.seed, args.ratio))?;
    phi.save(&args.out_dir.join("phi.dics"))?;

    let train_config = TrainConfig {
        learning_rate: args.learning_rate,
        momentum: args.momentum,
        batch_size: args.batch_size,
        epochs: args.epochs,
        seed: args.seed,
        eval_every: args.eval_every,
        checkpoint_every: args.checkpoint_every,
        checkpoint_path: Some(args.out_dir.join("weights.ckpt.dinw")),
    };
    let (params, log) = train_net(
        &train_images,
        &test_images,
        &phi,
        &net_config,
        &train_config,
    )?;

    save_params(&params, &args.out_dir.join("weights.dinw"))?;
    let mut csv = Vec::new();
    log.write_csv(&mut csv)?;
    fs::write(args.out_dir.join("fig5_convergence.csv"), csv)?;

    write_run_cfg(
        &args.out_dir,
        "train",
        &[
            ("manifest", args.manifest.display().to_string()),
            ("ratio", args.ratio.to_string()),
            ("m", m.to_string()),
            ("preset", format!("{:?}", args.preset).to_lowercase()),
            ("bias_mode", format!("{:?}", args.bias_mode).to_lowercase()),
            ("learning_rate", args.learning_rate.to_string()),
            ("momentum", args.momentum.to_string()),
            ("batch_size", args.batch_size.to_string()),
            ("epochs", args.epochs.to_string()),
            ("eval_every", args.eval_every.to_string()),
            ("checkpoint_every", args.checkpoint_every.to_string()),
            ("seed", args.seed.to_string()),
        ],
    )?;

    if log.diverged {
        eprintln!(
            "dics: {}",
            log.message.as_deref().unwrap_or("training diverged")
        );
        return Err(Error::numeric(
            log.message.unwrap_or_else(|| "training diverged".into()),
        ));
    }
    println!(
        "trained {} iterations, final train mse {}",
        log.rows.len(),
        log.final_train_mse().unwrap_or(f64::NAN)
    );
    Ok(0)
}

pub fn recover(args: &RecoverArgs) -> Result<u8> {
    validate_ratio(args.ratio)?;
    fs::create_dir_all(&args.out_dir)?;
    let truth: Image64 = dics_core::datakit::load_grayscale(&args.input)?;
    let (h, w) = (truth.height(), truth.width());
    let n = h * w;
    let m = measurements_for_ratio(n, args.ratio);

    let phi = match args.phi_kind.as_str() {
        "gaussian" => {
            MeasurementEnsemble::<f64>::gaussian(m, n, ratio_phi_seed(args.seed, args.ratio))?
        }
        "identity" => MeasurementEnsemble::<f64>::identity(n),
        "orthonormal" => MeasurementEnsemble::<f64>::orthonormalized(m, n, args.seed)?,
        other => {
            return Err(Error::domain(format!(
                "unknown phi kind '{other}'; available: gaussian, identity, orthonormal"
            )));
        }
    };
    let y = phi.measure(&truth)?;

    let method = match args.method.as_str() {
        "zero" => Method::Zero,
        "identity" => Method::Identity,
        "proxy" => Method::Proxy,
        "iht" => Method::Iht(args.solver.config(args.solver.iht_iters)),
        "amp" => Method::Amp(args.solver.config(args.solver.amp_iters)),
        "tv" => Method::Tv(args.solver.config(args.solver.tv_iters)),
        "deepinverse" => {
            let path = args
                .weights
                .as_ref()
                .ok_or_else(|| Error::domain("deepinverse requires --weights"))?;
            let params: Net64 = load_params(path)?;
            if (params.config.input_h, params.config.input_w) != (h, w) {
                return Err(Error::dimension(format!(
                    "weights expect {}x{} inputs, image is {h}x{w}",
                    params.config.input_h, params.config.input_w
                )));
            }
            Method::DeepInverse(Box::new(params))
        }
        other => {
            return Err(Error::domain(format!(
                "unknown method '{other}'; available: {METHOD_NAMES}"
            )));
        }
    };

    let result = method.recover(&y, &phi, &truth, (h, w))?;
    write_pgm(&args.out_dir.join("recovered.pgm"), &result.estimate)?;

    let p = psnr(&result.estimate, &truth)?;
    let e = nmse(&result.estimate, &truth)?;
    println!(
        "method={} psnr_db={} nmse={} wall_time_s={} iterations={} converged={}",
        result.method, p, e, result.wall_time, result.iterations, result.converged
    );

    write_run_cfg(
        &args.out_dir,
        "recover",
        &[
            ("method", args.method.clone()),
            (
                "weights",
                args.weights
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("input", args.input.display().to_string()),
            ("ratio", args.ratio.to_string()),
            ("m", phi.m().to_string()),
            ("seed", args.seed.to_string()),
            ("phi_kind", args.phi_kind.clone()),
            ("iht_iters", args.solver.iht_iters.to_string()),
            ("amp_iters", args.solver.amp_iters.to_string()),
            ("tv_iters", args.solver.tv_iters.to_string()),
            ("tolerance", args.solver.tolerance.to_string()),
            ("sparsity_k", args.solver.sparsity_k.to_string()),
            ("lambda", args.solver.lambda.to_string()),
            ("alpha", args.solver.alpha.to_string()),
        ],
    )?;
    Ok(0)
}

fn solver_cfg_entries(solver: &SolverArgs) -> Vec<(&'static str, String)> {
    vec![
        ("iht_iters", solver.iht_iters.to_string()),
        ("amp_iters", solver.amp_iters.to_string()),
        ("tv_iters", solver.tv_iters.to_string()),
        ("tolerance", solver.tolerance.to_string()),
        ("sparsity_k", solver.sparsity_k.to_string()),
        ("lambda", solver.lambda.to_string()),
        ("alpha", solver.alpha.to_string()),
    ]
}

pub fn eval(args: &EvalArgs) -> Result<u8> {
    fs::create_dir_all(&args.out_dir)?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let patches: Vec<Image64> = manifest.load_split_images(Split::Test)?;
    if patches.is_empty() {
        return Err(Error::domain("manifest has no test patches"));
    }
    let ratios = parse_ratios(&args.ratios)?;
    let phi_mode = match args.phi_mode.as_str() {
        "fresh" => PhiMode::Fresh,
        "fixed" => PhiMode::Fixed,
        other => {
            return Err(Error::domain(format!(
                "unknown phi mode '{other}'; available: fresh, fixed"
            )));
        }
    };
    let per_ratio_methods = build_methods(
        &args.methods,
        &ratios,
        args.weights.as_deref(),
        &args.solver,
    )?;

    // Sweep ratio by ratio so each ratio gets its own method set (the
    // deepinverse weights differ per ratio); stitch the reports together.
    let mut all_rows = Vec::new();
    let mut all_trials = Vec::new();
    for (ri, &ratio) in ratios.iter().enumerate() {
        let config = SweepConfig {
            trials: args.trials,
            seed: args.seed,
            phi_mode,
        };
        let report = sweep(&per_ratio_methods[ri], &[ratio], &patches, &config)?;
        all_rows.extend(report.rows);
        all_trials.extend(report.trials);
    }
    let report = dics_core::eval::EvalReport {
        rows: all_rows,
        trials: all_trials,
    };

    let mut fig2 = Vec::new();
    report.write_success_csv(&mut fig2)?;
    fs::write(args.out_dir.join("fig2_success.csv"), fig2)?;
    let mut fig3 = Vec::new();
    report.write_psnr_csv(&mut fig3)?;
    fs::write(args.out_dir.join("fig3_psnr.csv"), fig3)?;

    // Per-method PSNR histograms across ratios.
    for method in per_ratio_methods[0].iter() {
        let name = method.name();
        let mut csv = String::from("m_over_n,bin_left_db,count\n");
        for &ratio in &ratios {
            let samples = report.psnrs(name, ratio);
            if samples.is_empty() {
                continue;
            }
            let hist = emit_histogram(&samples, args.bin_width)?;
            for (bin, &count) in hist.counts.iter().enumerate() {
                csv.push_str(&format!("{},{},{}\n", ratio, hist.left_edge(bin), count));
            }
        }
        fs::write(args.out_dir.join(format!("fig4_hist_{name}.csv")), csv)?;
    }

    // Noise table at the requested ratio (with the matching method set; a
    // learned network only makes sense against the ensemble of its own
    // ratio).
    let noise_methods = match ratios.iter().position(|&r| r == args.noise_ratio) {
        Some(ri) => &per_ratio_methods[ri],
        None if args.methods.contains("deepinverse") => {
            return Err(Error::domain(
                "--noise-ratio must be one of --ratios when deepinverse is evaluated",
            ));
        }
        None => &per_ratio_methods[0],
    };
    let noise_rows = noise_experiment(
        noise_methods,
        args.snr_db,
        args.noise_ratio,
        &patches,
        args.trials,
        args.seed,
    )?;
    let mut table3 = Vec::new();
    write_noise_csv(&noise_rows, &mut table3)?;
    fs::write(args.out_dir.join("table3_noise.csv"), table3)?;

    let mut entries = vec![
        ("manifest", args.manifest.display().to_string()),
        ("methods", args.methods.clone()),
        ("ratios", args.ratios.clone()),
        ("trials", args.trials.to_string()),
        ("seed", args.seed.to_string()),
        ("phi_mode", args.phi_mode.clone()),
        ("weights", args.weights.clone().unwrap_or_default()),
        ("snr_db", args.snr_db.to_string()),
        ("noise_ratio", args.noise_ratio.to_string()),
        ("bin_width", args.bin_width.to_string()),
    ];
    entries.extend(solver_cfg_entries(&args.solver));
    write_run_cfg(&args.out_dir, "eval", &entries)?;
    println!("eval artifacts written to {}", args.out_dir.display());
    Ok(0)
}

pub fn bench(args: &BenchArgs) -> Result<u8> {
    fs::create_dir_all(&args.out_dir)?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let patches: Vec<Image64> = manifest.load_split_images(Split::Test)?;
    if patches.is_empty() {
        return Err(Error::domain("manifest has no test patches"));
    }
    let ratios = parse_ratios(&args.ratios)?;
    let per_ratio_methods = build_methods(
        &args.methods,
        &ratios,
        args.weights.as_deref(),
        &args.solver,
    )?;

    let mut rows = Vec::new();
    for (ri, &ratio) in ratios.iter().enumerate() {
        rows.extend(bench_runtime(
            &per_ratio_methods[ri],
            &[ratio],
            &patches[0],
            args.repetitions,
            args.seed,
        )?);
    }
    let mut csv = Vec::new();
    write_bench_csv(&rows, &mut csv)?;
    fs::write(args.out_dir.join("table1_runtime.csv"), csv)?;

    let mut entries = vec![
        ("manifest", args.manifest.display().to_string()),
        ("methods", args.methods.clone()),
        ("ratios", args.ratios.clone()),
        ("repetitions", args.repetitions.to_string()),
        ("seed", args.seed.to_string()),
        ("weights", args.weights.clone().unwrap_or_default()),
    ];
    entries.extend(solver_cfg_entries(&args.solver));
    write_run_cfg(&args.out_dir, "bench", &entries)?;
    println!("runtime table written to {}", args.out_dir.display());
    Ok(0)
}
