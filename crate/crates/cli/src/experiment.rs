//! Manifest-driven experiments: tensorize → inject gaps → fit → fill →
//! evaluate, with every intermediate persisted so partial pipelines stay
//! debuggable and a replay from the same manifest is byte-identical.
//!
//! Truth values only flow into the evaluation stage; the fill and baseline
//! stages receive entry indices alone.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use tensorgap_core::baselines::{
    experimental_semivariogram, fit_exponential, idw_predict_entries, krige_predict_entries,
    mean_predict_entries, temporal_mean, VariogramModel,
};
use tensorgap_core::completion::{fit, predict_entries, FitTrace};
use tensorgap_core::ingest::{tensorize, GridSpec, TensorizeOptions};
use tensorgap_core::masking::{add_random_missing, cptm, flatten_deltas, select_cptm_pairs, MaskDelta};
use tensorgap_core::metrics::{evaluate, DayAggregate, EvaluationReport};
use tensorgap_core::tensor::MaskedTensor;
use tensorgap_core::{io, Error, Result};

use crate::manifest::{ExperimentManifest, MaskingSpec};

pub const METHOD_CP: &str = "cp_als";
pub const METHOD_KRIGING: &str = "kriging";
pub const METHOD_IDW: &str = "idw";
pub const METHOD_MEAN: &str = "mean_fill";

/// Fitted-variogram sidecar persisted as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct VariogramReport {
    pub kind: &'static str,
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
    pub fit_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub n: usize,
    pub r: Option<f64>,
    pub ioa: f64,
    pub mae: f64,
    pub per_day_r: Option<f64>,
}

pub struct ExperimentOutputs {
    pub out_dir: PathBuf,
    pub reports: BTreeMap<String, EvaluationReport>,
    pub trace: FitTrace,
}

/// Default variogram lags for a grid: bins of one cell out to half the
/// domain diagonal.
pub fn default_lags(grid: &GridSpec) -> (f64, f64) {
    let diag = ((grid.n_rows() as f64).powi(2) + (grid.n_cols() as f64).powi(2)).sqrt();
    (grid.cell_size, (diag / 2.0) * grid.cell_size)
}

/// Load or build the working tensor along with its grid geometry.
fn prepare_tensor(
    man: &ExperimentManifest,
    out: &Path,
) -> Result<(MaskedTensor<f64>, GridSpec)> {
    if let Some(points_path) = &man.points {
        let points = io::read_points_csv(points_path)?;
        let days = points.iter().map(|p| p.day).max().map_or(0, |d| d + 1);
        if days == 0 {
            return Err(Error::invalid("point file is empty"));
        }
        let [lat_min, lat_max, lon_min, lon_max] = man.bbox.expect("validated");
        let grid = GridSpec::new(lat_min, lat_max, lon_min, lon_max, man.delta, days)?;
        let opts = TensorizeOptions { qa_threshold: man.qa_threshold, ..TensorizeOptions::default() };
        let (tensor, params) = tensorize::<f64>(&points, &grid, &opts)?;
        io::write_tensor_file(out.join("tensor.lrt"), &tensor)?;
        if let Some(params) = params {
            io::write_json(out.join("norm.json"), &params)?;
        }
        Ok((tensor, grid))
    } else {
        let path = man.tensor.as_ref().expect("validated");
        let tensor: MaskedTensor<f64> = io::read_tensor_file(path)?;
        let (days, rows, cols) = tensor.dims();
        // Synthetic box: distances only need the cell size.
        let grid = GridSpec::new(
            0.0,
            rows as f64 * man.delta,
            0.0,
            cols as f64 * man.delta,
            man.delta,
            days,
        )?;
        Ok((tensor, grid))
    }
}

fn inject(
    man: &ExperimentManifest,
    tensor: &MaskedTensor<f64>,
) -> Result<(MaskedTensor<f64>, Vec<MaskDelta<f64>>)> {
    match man.masking {
        MaskingSpec::Random { fraction, seed } => {
            let (masked, delta) = add_random_missing(tensor, fraction, seed)?;
            Ok((masked, vec![delta]))
        }
        MaskingSpec::Cptm { count, seed } => {
            let pairs = select_cptm_pairs(tensor, count, seed)?;
            let mut current = tensor.clone();
            let mut deltas = Vec::with_capacity(pairs.len());
            for (source, target) in pairs {
                let (next, delta) = cptm(&current, source, target)?;
                current = next;
                deltas.push(delta);
            }
            Ok((current, deltas))
        }
    }
}

fn fit_variogram(
    masked: &MaskedTensor<f64>,
    grid: &GridSpec,
    lag_width: Option<f64>,
    max_lag: Option<f64>,
) -> Result<(VariogramModel, f64)> {
    let averaged = temporal_mean(masked);
    let (default_width, default_max) = default_lags(grid);
    let emp = experimental_semivariogram(
        averaged.view(),
        grid,
        lag_width.unwrap_or(default_width),
        max_lag.unwrap_or(default_max),
    )?;
    fit_exponential(&emp)
}

fn write_per_day_table(
    path: &Path,
    methods: &[(&str, &EvaluationReport)],
) -> Result<()> {
    let mut days: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    if let Some((_, first)) = methods.first() {
        if let Some(rows) = &first.per_day {
            for row in rows {
                days.insert(row.day, (row.observation, row.count));
            }
        }
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write!(w, "day,count,observation")?;
    for (name, _) in methods {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (&day, &(obs, count)) in &days {
        write!(w, "{day},{count},{obs}")?;
        for (_, report) in methods {
            let row = report
                .per_day
                .as_ref()
                .and_then(|rows| rows.iter().find(|r| r.day == day));
            match row {
                Some(DayAggregate { prediction, .. }) => write!(w, ",{prediction}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Run the full experiment a manifest describes. Dispatches on the masking
/// kind: uniform random gaps or CPTM synthetic cloud days.
pub fn run_experiment(man: &ExperimentManifest) -> Result<ExperimentOutputs> {
    man.validate()?;
    let out = man.out_dir.clone();
    fs::create_dir_all(&out)?;
    io::write_json(out.join("manifest_used.json"), man)?;

    let (tensor, grid) = prepare_tensor(man, &out)?;
    log::info!(
        "working tensor {:?}, observed fraction {:.4}",
        tensor.dims(),
        tensor.observed_fraction()
    );

    let (masked, deltas) = inject(man, &tensor)?;
    io::write_tensor_file(out.join("masked.lrt"), &masked)?;
    io::write_deltas(out.join("delta.csv"), &deltas)?;
    let (entries, truths) = flatten_deltas(&deltas);
    if entries.len() < 2 {
        return Err(Error::invalid(format!(
            "injection produced {} entries; need at least 2 to evaluate",
            entries.len()
        )));
    }
    log::info!("injected {} synthetic gaps across {} injection(s)", entries.len(), deltas.len());

    // Tensor completion.
    let (model, trace) = fit(&masked, &man.solver)?;
    io::write_model_file(out.join("model.lrk"), &model)?;
    io::write_json(out.join("fit.json"), &trace)?;
    let mut predictions: Vec<(String, Vec<f64>)> = Vec::new();
    predictions.push((METHOD_CP.into(), predict_entries(&model, &entries)?));

    // Baselines, from the same masked tensor the solver saw.
    if man.baselines.kriging.enabled {
        let (variogram, fit_r) = fit_variogram(
            &masked,
            &grid,
            man.baselines.kriging.lag_width,
            man.baselines.kriging.max_lag,
        )?;
        io::write_json(
            out.join("variogram.json"),
            &VariogramReport {
                kind: "exponential",
                nugget: variogram.nugget,
                sill: variogram.sill,
                range: variogram.range_param,
                fit_r,
            },
        )?;
        predictions.push((
            METHOD_KRIGING.into(),
            krige_predict_entries(&masked, &grid, &variogram, &entries, man.baselines.kriging.neighborhood)?,
        ));
    }
    if man.baselines.idw.enabled {
        predictions.push((
            METHOD_IDW.into(),
            idw_predict_entries(
                &masked,
                &grid,
                &entries,
                man.baselines.idw.power,
                man.baselines.idw.neighborhood,
            )?,
        ));
    }
    if man.baselines.mean_fill {
        predictions.push((METHOD_MEAN.into(), mean_predict_entries(&masked, &entries)?));
    }

    // Evaluation is the only stage that touches the truths.
    let mut reports: BTreeMap<String, EvaluationReport> = BTreeMap::new();
    for (name, preds) in &predictions {
        io::write_predictions(out.join(format!("pred_{name}.csv")), &entries, preds)?;
        let report = evaluate(&entries, preds, &truths, man.scale, true)?;
        io::write_pairs(out.join(format!("pairs_{name}.csv")), &entries, preds, &truths)?;
        io::write_json(out.join(format!("report_{name}.json")), &report)?;
        reports.insert(name.clone(), report);
    }

    let method_rows: Vec<(&str, &EvaluationReport)> =
        predictions.iter().map(|(name, _)| (name.as_str(), &reports[name])).collect();
    write_per_day_table(&out.join("per_day.csv"), &method_rows)?;

    let summary: BTreeMap<String, MethodSummary> = reports
        .iter()
        .map(|(name, r)| {
            (
                name.clone(),
                MethodSummary { n: r.n, r: r.r, ioa: r.ioa, mae: r.mae, per_day_r: r.per_day_r() },
            )
        })
        .collect();
    io::write_json(out.join("summary.json"), &summary)?;

    Ok(ExperimentOutputs { out_dir: out, reports, trace })
}

/// Added-random experiment (uniform gaps). Validation rejects other kinds.
pub fn run_added_random_experiment(man: &ExperimentManifest) -> Result<ExperimentOutputs> {
    if !matches!(man.masking, MaskingSpec::Random { .. }) {
        return Err(Error::invalid("manifest does not describe an added-random experiment"));
    }
    run_experiment(man)
}

/// CPTM experiment (synthetic cloud days). Validation rejects other kinds.
pub fn run_cptm_experiment(man: &ExperimentManifest) -> Result<ExperimentOutputs> {
    if !matches!(man.masking, MaskingSpec::Cptm { .. }) {
        return Err(Error::invalid("manifest does not describe a cptm experiment"));
    }
    run_experiment(man)
}
