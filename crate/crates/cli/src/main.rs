//! `tensorgap`: staged pipeline for reconstructing gaps in 3-way
//! spatiotemporal raster tensors: tensorize scattered points, inject
//! synthetic gaps, fit the masked CP model, fill, run geostatistical
//! baselines, and evaluate, plus manifest-driven end-to-end runs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tensorgap_cli::experiment::{self, run_experiment, VariogramReport};
use tensorgap_cli::manifest::load_manifest;
use tensorgap_cli::synth::{synth_dataset, SynthSpec};
use tensorgap_core::baselines::{
    experimental_semivariogram, fit_exponential, idw_predict_entries, krige_predict_entries,
    mean_predict_entries, temporal_mean, VariogramModel,
};
use tensorgap_core::completion::{fit, impute, predict_entries, InitKind, SolverConfig};
use tensorgap_core::ingest::{tensorize, GridSpec, TensorizeOptions};
use tensorgap_core::masking::{add_random_missing, cptm, flatten_deltas, select_cptm_pairs};
use tensorgap_core::metrics::{evaluate, ScaleTag};
use tensorgap_core::stats::{adf_test, ljung_box_test, spatial_mean_series, Regression};
use tensorgap_core::tensor::MaskedTensor;
use tensorgap_core::{io, Error, Result};

#[derive(Parser)]
#[command(name = "tensorgap", version, about = "Gap reconstruction for spatiotemporal raster tensors")]
struct Cli {
    /// Seed for the stage's random generator, where one is used.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Base directory prepended to relative output paths.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// off | error | warn | info | debug | trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a day,lat,lon,value,qa point CSV into a normalized LRT1 tensor.
    Tensorize(TensorizeArgs),
    /// Inject synthetic gaps and record the overwritten truths.
    Mask {
        #[command(subcommand)]
        kind: MaskCommand,
    },
    /// Fit the masked CP model by alternating least squares.
    Fit(FitArgs),
    /// Fill missing entries (or listed entries) from a fitted model.
    Fill(FillArgs),
    /// Spatial-only baselines evaluated at delta-file entries.
    Baseline {
        #[command(subcommand)]
        method: BaselineCommand,
    },
    /// Score a prediction file against recorded truths.
    Evaluate(EvaluateArgs),
    /// Stationarity and spatial-structure diagnostics.
    Stats {
        #[command(subcommand)]
        which: StatsCommand,
    },
    /// Generate the desk-scale synthetic dataset (point CSV + truth tensor).
    Synth(SynthArgs),
    /// Run a whole experiment from a manifest file.
    Run(RunArgs),
}

#[derive(Args)]
struct TensorizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// lat_min,lat_max,lon_min,lon_max in degrees.
    #[arg(long)]
    bbox: String,
    /// Cell size in degrees.
    #[arg(long)]
    delta: f64,
    /// qa threshold; points with qa strictly above it are kept.
    #[arg(long, default_value_t = 0.5)]
    qa: f64,
    /// Day count; defaults to max day index + 1 in the input.
    #[arg(long)]
    days: Option<usize>,
    /// Keep values in mol/m² instead of converting to molec/cm².
    #[arg(long)]
    no_convert_units: bool,
    /// Skip min-max normalization to [0, 1].
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: PathBuf,
    /// Normalization parameters sidecar ({"lo": …, "hi": …}).
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MaskCommand {
    /// Uniformly sample ⌊fraction·N⌋ observed entries and mark them missing.
    Random {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        delta_out: PathBuf,
    },
    /// Generate synthetic cloud days by cloud pattern transfer.
    Cptm {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        delta_out: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    tensor: PathBuf,
    /// Flat key=value solver config file (keys: rank, max_sweeps, tol,
    /// ridge, seed, init); CLI flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    /// random-uniform | random-gaussian
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct FillArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Delta CSV naming the entries to predict (truth column ignored).
    #[arg(long)]
    delta_file: Option<PathBuf>,
    #[arg(long)]
    pred_out: Option<PathBuf>,
    /// Write the fully imputed tensor.
    #[arg(long)]
    out_tensor: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineIo {
    #[arg(long)]
    tensor: PathBuf,
    /// Delta CSV naming the entries to predict (truth column ignored).
    #[arg(long)]
    delta_file: PathBuf,
    /// Grid cell size in degrees, for pixel-center geometry.
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
    #[arg(long)]
    pred_out: PathBuf,
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Ordinary kriging with an exponential variogram fitted on the
    /// temporally averaged field.
    Krige {
        #[command(flatten)]
        io: BaselineIo,
        #[arg(long, default_value_t = 32)]
        neighborhood: usize,
        #[arg(long)]
        lag_width: Option<f64>,
        #[arg(long)]
        max_lag: Option<f64>,
        #[arg(long)]
        variogram_out: Option<PathBuf>,
    },
    /// Inverse-distance weighting.
    Idw {
        #[command(flatten)]
        io: BaselineIo,
        #[arg(long, default_value_t = 2.0)]
        power: f64,
        #[arg(long, default_value_t = 32)]
        neighborhood: usize,
    },
    /// Constant global-observed-mean fill.
    Mean {
        #[command(flatten)]
        io: BaselineIo,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    delta_file: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// normalized | molec_cm2
    #[arg(long, default_value = "normalized")]
    scale: String,
    #[arg(long)]
    report: PathBuf,
    /// Raw pair dump (i1,i2,i3,prediction,truth) for external plotting.
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Augmented Dickey-Fuller unit-root test on the spatial-mean series.
    Adf {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 16)]
        max_lag: usize,
        /// constant | constant-trend
        #[arg(long, default_value = "constant")]
        regression: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ljung-Box independence test on the spatial-mean series.
    Lb {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 20)]
        lags: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Experimental semivariogram of the temporally averaged field plus the
    /// fitted exponential model.
    Variogram {
        #[arg(long)]
        tensor: PathBuf,
        /// Grid cell size in degrees.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long)]
        lag_width: Option<f64>,
        #[arg(long)]
        max_lag: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 80)]
    days: usize,
    #[arg(long, default_value_t = 24)]
    rows: usize,
    #[arg(long, default_value_t = 30)]
    cols: usize,
    #[arg(long, default_value_t = 5)]
    rank: usize,
    /// Additive noise as a fraction of the field standard deviation.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long, default_value_t = 0.55)]
    cloud_day_fraction: f64,
    #[arg(long, default_value_t = 3)]
    max_clouds_per_day: usize,
    #[arg(long, default_value_t = 2.5)]
    cloud_radius_min: f64,
    #[arg(long, default_value_t = 6.0)]
    cloud_radius_max: f64,
    #[arg(long, default_value_t = 0.003)]
    dropout: f64,
    #[arg(long, default_value_t = 0.02)]
    low_qa_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    extra_point_fraction: f64,
    #[arg(long, default_value_t = 3e-5)]
    value_scale: f64,
    #[arg(long, default_value_t = 20.0)]
    lat_min: f64,
    #[arg(long, default_value_t = -130.0)]
    lon_min: f64,
    #[arg(long, default_value_t = 0.5)]
    cell_size: f64,
    #[arg(long)]
    out_points: PathBuf,
    #[arg(long)]
    out_truth: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Manifest file, JSON or flat key=value.
    #[arg(long)]
    manifest: PathBuf,
}

fn resolve(out_dir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn parse_bbox(raw: &str) -> Result<[f64; 4]> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bbox: {e}"))))
        .collect::<Result<_>>()?;
    if parts.len() != 4 {
        return Err(Error::invalid("bbox must be lat_min,lat_max,lon_min,lon_max"));
    }
    Ok([parts[0], parts[1], parts[2], parts[3]])
}

fn emit_json<S: Serialize>(value: &S, out: &Option<PathBuf>, out_dir: &Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    if let Some(path) = out {
        let path = resolve(out_dir, path);
        ensure_parent(&path)?;
        io::write_json(&path, value)?;
    }
    Ok(())
}

/// Synthetic grid over a bare tensor: row/col pixel centers spaced by `delta`.
fn tensor_grid(tensor: &MaskedTensor<f64>, delta: f64) -> Result<GridSpec> {
    let (days, rows, cols) = tensor.dims();
    GridSpec::new(0.0, rows as f64 * delta, 0.0, cols as f64 * delta, delta, days)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tensorize(args) => {
            let points = io::read_points_csv(&args.input)?;
            let days = match args.days {
                Some(d) => d,
                None => points
                    .iter()
                    .map(|p| p.day)
                    .max()
                    .map(|d| d + 1)
                    .ok_or_else(|| Error::invalid("point file is empty"))?,
            };
            let [lat_min, lat_max, lon_min, lon_max] = parse_bbox(&args.bbox)?;
            let grid = GridSpec::new(lat_min, lat_max, lon_min, lon_max, args.delta, days)?;
            let opts = TensorizeOptions {
                qa_threshold: args.qa,
                convert_units: !args.no_convert_units,
                normalize: !args.no_normalize,
            };
            let (tensor, params) = tensorize::<f64>(&points, &grid, &opts)?;
            let out = resolve(&cli.out_dir, &args.out);
            ensure_parent(&out)?;
            io::write_tensor_file(&out, &tensor)?;
            log::info!("wrote tensor {:?} ({:.2}% observed)", tensor.dims(), 100.0 * tensor.observed_fraction());
            if let (Some(params), Some(path)) = (params, args.params) {
                let path = resolve(&cli.out_dir, &path);
                ensure_parent(&path)?;
                io::write_json(&path, &params)?;
            }
            Ok(())
        }
        Command::Mask { kind } => {
            let seed = cli.seed.unwrap_or(0);
            let (out, delta_out, masked, deltas) = match kind {
                MaskCommand::Random { tensor, fraction, out, delta_out } => {
                    let t: MaskedTensor<f64> = io::read_tensor_file(&tensor)?;
                    let (masked, delta) = add_random_missing(&t, fraction, seed)?;
                    (out, delta_out, masked, vec![delta])
                }
                MaskCommand::Cptm { tensor, count, out, delta_out } => {
                    let t: MaskedTensor<f64> = io::read_tensor_file(&tensor)?;
                    let pairs = select_cptm_pairs(&t, count, seed)?;
                    let mut current = t;
                    let mut deltas = Vec::with_capacity(pairs.len());
                    for (source, target) in pairs {
                        let (next, delta) = cptm(&current, source, target)?;
                        current = next;
                        deltas.push(delta);
                    }
                    (out, delta_out, current, deltas)
                }
            };
            let out = resolve(&cli.out_dir, &out);
            let delta_out = resolve(&cli.out_dir, &delta_out);
            ensure_parent(&out)?;
            ensure_parent(&delta_out)?;
            io::write_tensor_file(&out, &masked)?;
            io::write_deltas(&delta_out, &deltas)?;
            let injected: usize = deltas.iter().map(|d| d.len()).sum();
            log::info!("injected {injected} entries over {} injection(s)", deltas.len());
            Ok(())
        }
        Command::Fit(args) => {
            let mut config = match &args.config {
                Some(path) => SolverConfig::from_key_values(&std::fs::read_to_string(path)?)?,
                None => SolverConfig::default(),
            };
            if let Some(rank) = args.rank {
                config.rank = rank;
            }
            if let Some(max_sweeps) = args.max_sweeps {
                config.max_sweeps = max_sweeps;
            }
            if let Some(tol) = args.tol {
                config.tol = tol;
            }
            if let Some(ridge) = args.ridge {
                config.ridge = ridge;
            }
            if let Some(init) = &args.init {
                config.init = init.parse::<InitKind>()?;
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let tensor: MaskedTensor<f64> = io::read_tensor_file(&args.tensor)?;
            let (model, trace) = fit(&tensor, &config)?;
            let model_out = resolve(&cli.out_dir, &args.model_out);
            ensure_parent(&model_out)?;
            io::write_model_file(&model_out, &model)?;
            if let Some(trace_out) = args.trace_out {
                let trace_out = resolve(&cli.out_dir, &trace_out);
                ensure_parent(&trace_out)?;
                io::write_json(&trace_out, &trace)?;
            }
            log::info!(
                "fit rank {} in {} sweep(s), final residual {:.6e}",
                config.rank,
                trace.sweeps(),
                trace.residuals.last().copied().unwrap_or(trace.initial_residual)
            );
            Ok(())
        }
        Command::Fill(args) => {
            let tensor: MaskedTensor<f64> = io::read_tensor_file(&args.tensor)?;
            let model = io::read_model_file(&args.model)?;
            if args.delta_file.is_none() && args.out_tensor.is_none() {
                return Err(Error::invalid("fill needs --delta-file/--pred-out or --out-tensor"));
            }
            if let Some(delta_file) = &args.delta_file {
                let pred_out = args
                    .pred_out
                    .as_ref()
                    .ok_or_else(|| Error::invalid("--pred-out is required with --delta-file"))?;
                let deltas = io::read_deltas::<f64>(delta_file)?;
                let (entries, _) = flatten_deltas(&deltas);
                let predictions = predict_entries(&model, &entries)?;
                let pred_out = resolve(&cli.out_dir, pred_out);
                ensure_parent(&pred_out)?;
                io::write_predictions(&pred_out, &entries, &predictions)?;
            }
            if let Some(out_tensor) = &args.out_tensor {
                let imputed = impute(&tensor, &model)?;
                let out_tensor = resolve(&cli.out_dir, out_tensor);
                ensure_parent(&out_tensor)?;
                io::write_tensor_file(&out_tensor, &MaskedTensor::dense(imputed)?)?;
            }
            Ok(())
        }
        Command::Baseline { method } => {
            let (io_args, predictions, variogram): (&BaselineIo, Vec<f64>, Option<VariogramReport>) =
                match &method {
                    BaselineCommand::Krige { io: io_args, neighborhood, lag_width, max_lag, .. } => {
                        let tensor: MaskedTensor<f64> = io::read_tensor_file(&io_args.tensor)?;
                        let grid = tensor_grid(&tensor, io_args.cell_size)?;
                        let deltas = io::read_deltas::<f64>(&io_args.delta_file)?;
                        let (entries, _) = flatten_deltas(&deltas);
                        let averaged = temporal_mean(&tensor);
                        let (dw, dm) = experiment::default_lags(&grid);
                        let emp = experimental_semivariogram(
                            averaged.view(),
                            &grid,
                            lag_width.unwrap_or(dw),
                            max_lag.unwrap_or(dm),
                        )?;
                        let (model, fit_r) = fit_exponential(&emp)?;
                        let preds =
                            krige_predict_entries(&tensor, &grid, &model, &entries, *neighborhood)?;
                        let report = VariogramReport {
                            kind: "exponential",
                            nugget: model.nugget,
                            sill: model.sill,
                            range: model.range_param,
                            fit_r,
                        };
                        (io_args, preds, Some(report))
                    }
                    BaselineCommand::Idw { io: io_args, power, neighborhood } => {
                        let tensor: MaskedTensor<f64> = io::read_tensor_file(&io_args.tensor)?;
                        let grid = tensor_grid(&tensor, io_args.cell_size)?;
                        let deltas = io::read_deltas::<f64>(&io_args.delta_file)?;
                        let (entries, _) = flatten_deltas(&deltas);
                        let preds =
                            idw_predict_entries(&tensor, &grid, &entries, *power, *neighborhood)?;
                        (io_args, preds, None)
                    }
                    BaselineCommand::Mean { io: io_args } => {
                        let tensor: MaskedTensor<f64> = io::read_tensor_file(&io_args.tensor)?;
                        let deltas = io::read_deltas::<f64>(&io_args.delta_file)?;
                        let (entries, _) = flatten_deltas(&deltas);
                        let preds = mean_predict_entries(&tensor, &entries)?;
                        (io_args, preds, None)
                    }
                };
            let deltas = io::read_deltas::<f64>(&io_args.delta_file)?;
            let (entries, _) = flatten_deltas(&deltas);
            let pred_out = resolve(&cli.out_dir, &io_args.pred_out);
            ensure_parent(&pred_out)?;
            io::write_predictions(&pred_out, &entries, &predictions)?;
            if let (Some(report), BaselineCommand::Krige { variogram_out: Some(path), .. }) =
                (&variogram, &method)
            {
                let path = resolve(&cli.out_dir, path);
                ensure_parent(&path)?;
                io::write_json(&path, report)?;
            }
            Ok(())
        }
        Command::Evaluate(args) => {
            let deltas = io::read_deltas::<f64>(&args.delta_file)?;
            let (entries, truths) = flatten_deltas(&deltas);
            let (pred_entries, predictions) = io::read_predictions::<f64>(&args.pred)?;
            if pred_entries != entries {
                return Err(Error::invalid(
                    "prediction entries do not match the delta file entries",
                ));
            }
            let scale: ScaleTag = args.scale.parse()?;
            let report = evaluate(&entries, &predictions, &truths, scale, true)?;
            let report_path = resolve(&cli.out_dir, &args.report);
            ensure_parent(&report_path)?;
            io::write_json(&report_path, &report)?;
            if let Some(pairs) = &args.pairs {
                let pairs = resolve(&cli.out_dir, pairs);
                ensure_parent(&pairs)?;
                io::write_pairs(&pairs, &entries, &predictions, &truths)?;
            }
            println!(
                "n={} r={} ioa={:.6} mae={:.6e}",
                report.n,
                report.r.map_or("undefined".into(), |r| format!("{r:.6}")),
                report.ioa,
                report.mae
            );
            Ok(())
        }
        Command::Stats { which } => match which {
            StatsCommand::Adf { tensor, max_lag, regression, out } => {
                let t: MaskedTensor<f64> = io::read_tensor_file(&tensor)?;
                let series = spatial_mean_series(&t).dense_values();
                let regression: Regression = regression.parse()?;
                let result = adf_test(&series, max_lag, regression)?;
                emit_json(&result, &out, &cli.out_dir)
            }
            StatsCommand::Lb { tensor, lags, out } => {
                let t: MaskedTensor<f64> = io::read_tensor_file(&tensor)?;
                let series = spatial_mean_series(&t).dense_values();
                let result = ljung_box_test(&series, lags)?;
                emit_json(&result, &out, &cli.out_dir)
            }
            StatsCommand::Variogram { tensor, delta, lag_width, max_lag, out } => {
                let t: MaskedTensor<f64> = io::read_tensor_file(&tensor)?;
                let grid = tensor_grid(&t, delta)?;
                let averaged = temporal_mean(&t);
                let (dw, dm) = experiment::default_lags(&grid);
                let emp = experimental_semivariogram(
                    averaged.view(),
                    &grid,
                    lag_width.unwrap_or(dw),
                    max_lag.unwrap_or(dm),
                )?;
                let (model, fit_r): (VariogramModel, f64) = fit_exponential(&emp)?;
                #[derive(Serialize)]
                struct VariogramOutput {
                    experimental: tensorgap_core::baselines::ExperimentalVariogram,
                    fitted: VariogramReport,
                }
                let output = VariogramOutput {
                    experimental: emp,
                    fitted: VariogramReport {
                        kind: "exponential",
                        nugget: model.nugget,
                        sill: model.sill,
                        range: model.range_param,
                        fit_r,
                    },
                };
                emit_json(&output, &out, &cli.out_dir)
            }
        },
        Command::Synth(args) => {
            let spec = SynthSpec {
                days: args.days,
                rows: args.rows,
                cols: args.cols,
                rank: args.rank,
                noise: args.noise,
                cloud_day_fraction: args.cloud_day_fraction,
                max_clouds_per_day: args.max_clouds_per_day,
                cloud_radius: (args.cloud_radius_min, args.cloud_radius_max),
                dropout: args.dropout,
                low_qa_fraction: args.low_qa_fraction,
                extra_point_fraction: args.extra_point_fraction,
                value_scale: args.value_scale,
                lat_min: args.lat_min,
                lon_min: args.lon_min,
                cell_size: args.cell_size,
                seed: cli.seed.unwrap_or(SynthSpec::default().seed),
            };
            let dataset = synth_dataset(&spec)?;
            let out_points = resolve(&cli.out_dir, &args.out_points);
            ensure_parent(&out_points)?;
            io::write_points_csv(&out_points, &dataset.points)?;
            if let Some(out_truth) = args.out_truth {
                let out_truth = resolve(&cli.out_dir, &out_truth);
                ensure_parent(&out_truth)?;
                io::write_tensor_file(&out_truth, &dataset.truth)?;
            }
            log::info!("wrote {} points over {} days", dataset.points.len(), spec.days);
            Ok(())
        }
        Command::Run(args) => {
            let mut manifest = load_manifest(&args.manifest)?;
            if let Some(dir) = &cli.out_dir {
                if manifest.out_dir.is_relative() {
                    manifest.out_dir = dir.join(&manifest.out_dir);
                }
            }
            let outputs = run_experiment(&manifest)?;
            for (name, report) in &outputs.reports {
                println!(
                    "{name}: n={} r={} ioa={:.6} mae={:.6e}",
                    report.n,
                    report.r.map_or("undefined".into(), |r| format!("{r:.6}")),
                    report.ioa,
                    report.mae
                );
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let level = cli.log_level.clone();
    env_logger::Builder::new().parse_filters(&level).init();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
