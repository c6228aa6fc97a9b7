//! Serialization integrity: metrics recomputed from a persisted raw pair
//! dump reproduce the stored report fields bit for bit.

use tensorgap_core::io;
use tensorgap_core::metrics::{evaluate, EvaluationReport, ScaleTag};

#[test]
fn report_recomputed_from_pair_dump_matches_bitwise() {
    let entries: Vec<(usize, usize, usize)> = (0..40).map(|i| (i / 7, (i * 3) % 5, i % 4)).collect();
    let predictions: Vec<f64> = (0..40).map(|i| (i as f64 * 0.137).sin() * 0.5 + 0.5).collect();
    let truths: Vec<f64> = (0..40).map(|i| (i as f64 * 0.137 + 0.05).sin() * 0.5 + 0.5).collect();

    let report = evaluate(&entries, &predictions, &truths, ScaleTag::Normalized, true).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let pairs_path = dir.path().join("pairs.csv");
    let report_path = dir.path().join("report.json");
    io::write_pairs(&pairs_path, &entries, &predictions, &truths).unwrap();
    io::write_json(&report_path, &report).unwrap();

    let (entries2, predictions2, truths2): (Vec<_>, Vec<f64>, Vec<f64>) =
        io::read_pairs(&pairs_path).unwrap();
    assert_eq!(entries2, entries);
    let recomputed = evaluate(&entries2, &predictions2, &truths2, ScaleTag::Normalized, true).unwrap();
    let stored: EvaluationReport = io::read_json(&report_path).unwrap();

    // Bit-for-bit: the shortest round-trip text forms parse back to the same
    // f64 values, and the same inputs run through the same arithmetic.
    assert_eq!(recomputed, stored);
    assert_eq!(recomputed.r.map(f64::to_bits), stored.r.map(f64::to_bits));
    assert_eq!(recomputed.ioa.to_bits(), stored.ioa.to_bits());
    assert_eq!(recomputed.mae.to_bits(), stored.mae.to_bits());
}
