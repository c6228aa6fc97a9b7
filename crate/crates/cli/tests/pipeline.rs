//! End-to-end checks of the staged pipeline through the actual binary, plus
//! generator contracts that need the solver.

use std::path::Path;
use std::process::Command;

use tensorgap_cli::synth::{synth_dataset, SynthSpec};
use tensorgap_core::completion::{fit, masked_residual, InitKind, SolverConfig};
use tensorgap_core::io;
use tensorgap_core::metrics::EvaluationReport;
use tensorgap_core::tensor::MaskedTensor;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tensorgap"))
}

fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().expect("exit code")
}

#[test]
fn noiseless_synth_truth_is_low_rank() {
    // With noise 0 the generated field has multilinear rank ≤ the configured
    // rank: a rank-3 fit drives the relative residual to the noise floor.
    let spec = SynthSpec { days: 20, rows: 12, cols: 14, rank: 3, noise: 0.0, ..SynthSpec::default() };
    let data = synth_dataset(&spec).expect("generator succeeds");
    let cfg = SolverConfig {
        rank: 3,
        max_sweeps: 500,
        tol: 1e-16,
        ridge: 0.0,
        seed: 1,
        init: InitKind::RandomUniform,
    };
    let (model, _) = fit(&data.truth, &cfg).expect("fit succeeds");
    let residual = masked_residual(&data.truth, &model);
    let norm = data.truth.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(residual / norm <= 1e-8, "relative residual {:.3e}", residual / norm);
}

#[test]
fn staged_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();

    run_ok(bin()
        .args(["--seed", "42", "synth", "--days", "30", "--rows", "12", "--cols", "15"])
        .args(["--out-points", &p("points.csv"), "--out-truth", &p("truth.lrt")]));

    run_ok(bin()
        .args(["tensorize", "--input", &p("points.csv")])
        .args(["--bbox", "20,26,-130,-122.5", "--delta", "0.5", "--qa", "0.5", "--days", "30"])
        .args(["--out", &p("tensor.lrt"), "--params", &p("norm.json")]));

    run_ok(bin()
        .args(["--seed", "9", "mask", "random", "--tensor", &p("tensor.lrt")])
        .args(["--fraction", "0.03", "--out", &p("masked.lrt"), "--delta-out", &p("delta.csv")]));

    // Solver config file with a CLI override on top.
    std::fs::write(dir.join("solver.cfg"), "rank=4\nmax_sweeps=40\ntol=1e-9\nridge=1e-8\nseed=3\ninit=random-uniform\n")
        .expect("write config");
    run_ok(bin()
        .args(["fit", "--tensor", &p("masked.lrt"), "--config", &p("solver.cfg")])
        .args(["--rank", "5", "--model-out", &p("model.lrk"), "--trace-out", &p("fit.json")]));

    run_ok(bin()
        .args(["fill", "--tensor", &p("masked.lrt"), "--model", &p("model.lrk")])
        .args(["--delta-file", &p("delta.csv"), "--pred-out", &p("pred_cp.csv")])
        .args(["--out-tensor", &p("imputed.lrt")]));

    run_ok(bin()
        .args(["baseline", "krige", "--tensor", &p("masked.lrt"), "--delta-file", &p("delta.csv")])
        .args(["--cell-size", "0.5", "--neighborhood", "24"])
        .args(["--pred-out", &p("pred_krige.csv"), "--variogram-out", &p("variogram.json")]));

    run_ok(bin()
        .args(["baseline", "idw", "--tensor", &p("masked.lrt"), "--delta-file", &p("delta.csv")])
        .args(["--cell-size", "0.5", "--power", "2", "--pred-out", &p("pred_idw.csv")]));

    run_ok(bin()
        .args(["baseline", "mean", "--tensor", &p("masked.lrt"), "--delta-file", &p("delta.csv")])
        .args(["--pred-out", &p("pred_mean.csv")]));

    for method in ["cp", "krige", "idw", "mean"] {
        run_ok(bin()
            .args(["evaluate", "--delta-file", &p("delta.csv")])
            .args(["--pred", &p(&format!("pred_{method}.csv"))])
            .args(["--scale", "normalized", "--report", &p(&format!("report_{method}.json"))])
            .args(["--pairs", &p(&format!("pairs_{method}.csv"))]));
    }

    run_ok(bin().args(["stats", "adf", "--tensor", &p("tensor.lrt"), "--out", &p("adf.json")]));
    run_ok(bin().args(["stats", "lb", "--tensor", &p("tensor.lrt"), "--lags", "15", "--out", &p("lb.json")]));
    run_ok(bin()
        .args(["stats", "variogram", "--tensor", &p("tensor.lrt"), "--delta", "0.5"])
        .args(["--out", &p("variogram_stats.json")]));

    // The imputed tensor is complete and agrees with the model at the holes.
    let masked: MaskedTensor<f64> = io::read_tensor_file(dir.join("masked.lrt")).expect("masked");
    let imputed: MaskedTensor<f64> = io::read_tensor_file(dir.join("imputed.lrt")).expect("imputed");
    assert_eq!(imputed.observed_count(), imputed.len());
    for (idx, &m) in masked.mask().indexed_iter() {
        if m {
            assert_eq!(imputed.values()[idx], masked.values()[idx]);
        }
    }

    // Reports parse and agree in pair count with the delta file.
    let deltas = io::read_deltas::<f64>(dir.join("delta.csv")).expect("delta parses");
    let injected: usize = deltas.iter().map(|d| d.len()).sum();
    let report: EvaluationReport = io::read_json(dir.join("report_cp.json")).expect("report parses");
    assert_eq!(report.n, injected);
    assert!(report.ioa > 0.9, "cp ioa {}", report.ioa);
    let krige: EvaluationReport = io::read_json(dir.join("report_krige.json")).expect("report parses");
    assert!(report.ioa > krige.ioa, "cp {} vs kriging {}", report.ioa, krige.ioa);
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();

    // Validation error → 2 (bad bbox ordering).
    std::fs::write(dir.join("points.csv"), "day,lat,lon,value,qa\n0,41.0,-99.0,1e-5,0.9\n")
        .expect("write points");
    let code = exit_code(bin()
        .args(["tensorize", "--input", &p("points.csv")])
        .args(["--bbox", "42,40,-100,-97.5", "--delta", "0.5", "--out", &p("t.lrt")]));
    assert_eq!(code, 2);

    // Infeasibility → 4: every day misses pixel (0, 0), so no cptm pair is
    // eligible.
    write_shared_hole_tensor(&dir.join("shared.lrt"));
    let code = exit_code(bin()
        .args(["mask", "cptm", "--tensor", &p("shared.lrt"), "--count", "2"])
        .args(["--out", &p("m.lrt"), "--delta-out", &p("d.csv")]));
    assert_eq!(code, 4);

    // Numerical error → 3: rank 2 with ridge 0 on a tensor whose first
    // mode-1 row holds a single observed entry.
    write_rank_deficient_tensor(&dir.join("thin.lrt"));
    let code = exit_code(bin()
        .args(["fit", "--tensor", &p("thin.lrt"), "--rank", "2", "--ridge", "0"])
        .args(["--model-out", &p("m.lrk")]));
    assert_eq!(code, 3);
}

fn write_shared_hole_tensor(path: &Path) {
    use ndarray::Array3;
    let mut values = Array3::<f64>::from_elem((4, 3, 3), 1.0);
    for d in 0..4 {
        values[[d, 0, 0]] = f64::NAN;
        values[[d, d % 3, (d + 1) % 3]] = 0.5;
    }
    let tensor = MaskedTensor::from_values(values).expect("valid tensor");
    io::write_tensor_file(path, &tensor).expect("write tensor");
}

fn write_rank_deficient_tensor(path: &Path) {
    use ndarray::Array3;
    let mut values = Array3::<f64>::from_elem((3, 3, 3), f64::NAN);
    // Row i1 = 0 keeps exactly one observed entry; other rows stay dense
    // enough for a well-posed solve.
    values[[0, 1, 1]] = 2.0;
    for j in 0..3 {
        for k in 0..3 {
            values[[1, j, k]] = (j + k) as f64 + 0.25;
            values[[2, j, k]] = (2 * j + k) as f64 + 0.5;
        }
    }
    let tensor = MaskedTensor::from_values(values).expect("valid tensor");
    io::write_tensor_file(path, &tensor).expect("write tensor");
}
