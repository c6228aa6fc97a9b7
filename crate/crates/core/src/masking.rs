//! Synthetic gap injection: uniform random masks and cloud-pattern transfer
//! masking (CPTM), which copies one day's real missing-pixel pattern onto
//! another day that still observes that region, so the overwritten truths are
//! known exactly.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::MaskedTensor;

/// Where an injection came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Random { fraction: f64, seed: u64 },
    Cptm { source_day: usize, target_day: usize },
}

/// Entries newly marked missing by one injection, with their original values.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskDelta<T> {
    pub provenance: Provenance,
    pub entries: Vec<(usize, usize, usize)>,
    pub truths: Vec<T>,
}

impl<T> MaskDelta<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Flatten a set of injections into aligned entry/truth vectors.
pub fn flatten_deltas<T: Real>(deltas: &[MaskDelta<T>]) -> (Vec<(usize, usize, usize)>, Vec<T>) {
    let mut entries = Vec::new();
    let mut truths = Vec::new();
    for d in deltas {
        entries.extend_from_slice(&d.entries);
        truths.extend_from_slice(&d.truths);
    }
    (entries, truths)
}

/// Mark `⌊fraction · N⌋` distinct observed entries missing, sampled uniformly
/// without replacement with the seeded generator; N is the total entry count.
pub fn add_random_missing<T: Real>(
    tensor: &MaskedTensor<T>,
    fraction: f64,
    seed: u64,
) -> Result<(MaskedTensor<T>, MaskDelta<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1), got {fraction}")));
    }
    let n = tensor.len();
    let target = (fraction * n as f64).floor() as usize;
    let observed = tensor.observed_count();
    if target > observed {
        return Err(Error::invalid(format!(
            "requested {target} new gaps but only {observed} entries are observed"
        )));
    }

    let dims = tensor.dims();
    let linear_to_idx =
        |l: usize| -> (usize, usize, usize) { (l / (dims.1 * dims.2), (l / dims.2) % dims.1, l % dims.2) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    if 3 * target > observed {
        // Dense request: enumerate the observed entries and sample indices.
        let pool: Vec<usize> = tensor
            .mask()
            .iter()
            .enumerate()
            .filter_map(|(l, &m)| m.then_some(l))
            .collect();
        let picks = rand::seq::index::sample(&mut rng, pool.len(), target);
        chosen.extend(picks.iter().map(|i| pool[i]));
    } else {
        // Sparse request: rejection-sample linear indices.
        let mut taken = std::collections::HashSet::with_capacity(target * 2);
        while chosen.len() < target {
            let l = rng.random_range(0..n);
            if tensor.mask().as_slice().expect("standard layout")[l] && taken.insert(l) {
                chosen.push(l);
            }
        }
    }

    let mut out = tensor.clone();
    let mut entries = Vec::with_capacity(target);
    let mut truths = Vec::with_capacity(target);
    for l in chosen {
        let idx = linear_to_idx(l);
        truths.push(tensor.values()[idx]);
        entries.push(idx);
        out.set_missing(idx);
    }
    Ok((out, MaskDelta { provenance: Provenance::Random { fraction, seed }, entries, truths }))
}

/// Missing pixel set of one day, row-major.
fn day_missing<T: Real>(tensor: &MaskedTensor<T>, day: usize) -> Vec<(usize, usize)> {
    let (_, rows, cols) = tensor.dims();
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !tensor.mask()[[day, r, c]] {
                out.push((r, c));
            }
        }
    }
    out
}

/// Transfer the source day's missing pattern onto the target day.
///
/// Precondition: the target day observes every pixel the source day is
/// missing, so the synthetic day's missing set is exactly the union of both
/// days' real missing sets and every overwritten truth is known.
pub fn cptm<T: Real>(
    tensor: &MaskedTensor<T>,
    source_day: usize,
    target_day: usize,
) -> Result<(MaskedTensor<T>, MaskDelta<T>)> {
    let (days, _, _) = tensor.dims();
    if source_day >= days || target_day >= days {
        return Err(Error::invalid(format!(
            "day out of range: source {source_day}, target {target_day}, days {days}"
        )));
    }
    if source_day == target_day {
        return Err(Error::invalid("source and target days must differ"));
    }
    let source_mask = day_missing(tensor, source_day);
    for &(r, c) in &source_mask {
        if !tensor.mask()[[target_day, r, c]] {
            return Err(Error::CptmIneligible { target: target_day, row: r, col: c });
        }
    }
    let mut out = tensor.clone();
    let mut entries = Vec::with_capacity(source_mask.len());
    let mut truths = Vec::with_capacity(source_mask.len());
    for (r, c) in source_mask {
        let idx = (target_day, r, c);
        truths.push(tensor.values()[idx]);
        entries.push(idx);
        out.set_missing(idx);
    }
    Ok((out, MaskDelta { provenance: Provenance::Cptm { source_day, target_day }, entries, truths }))
}

/// Draw (source, target) day pairs with rejection sampling until `count`
/// pairs are collected or the attempt budget `count × 1000` runs out.
///
/// Pairs are validated against the evolving mask state, simulating sequential
/// application, so applying them in order with [`cptm`] always succeeds.
/// Sources with no missing pixels generate no mask and are rejected.
pub fn select_cptm_pairs<T: Real>(
    tensor: &MaskedTensor<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let (days, rows, cols) = tensor.dims();
    if days < 2 {
        return Err(Error::invalid("need at least two days for cptm"));
    }

    let mut missing: Vec<Array2<bool>> = (0..days)
        .map(|d| Array2::from_shape_fn((rows, cols), |(r, c)| !tensor.mask()[[d, r, c]]))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = count.saturating_mul(1000);
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while pairs.len() < count {
        if attempts >= budget {
            return Err(Error::Infeasible { found: pairs.len(), requested: count });
        }
        attempts += 1;
        let source = rng.random_range(0..days);
        let target = rng.random_range(0..days);
        if source == target {
            continue;
        }
        let source_has_gap = missing[source].iter().any(|&m| m);
        if !source_has_gap {
            continue;
        }
        let conflict = missing[source]
            .iter()
            .zip(missing[target].iter())
            .any(|(&s, &t)| s && t);
        if conflict {
            continue;
        }
        // Virtual apply so later pairs see this injection.
        let (src, tgt) = if source < target {
            let (a, b) = missing.split_at_mut(target);
            (&a[source], &mut b[0])
        } else {
            let (a, b) = missing.split_at_mut(source);
            (&b[0], &mut a[target])
        };
        tgt.zip_mut_with(src, |t, &s| *t = *t || s);
        pairs.push((source, target));
    }
    Ok(pairs)
}

/// Undo an injection: every delta entry becomes observed again with its
/// recorded truth. Restoring all deltas of a run reproduces the original
/// tensor bit-exactly.
pub fn restore<T: Real>(tensor: &MaskedTensor<T>, delta: &MaskDelta<T>) -> Result<MaskedTensor<T>> {
    let mut out = tensor.clone();
    for (&idx, &truth) in delta.entries.iter().zip(delta.truths.iter()) {
        if out.is_observed(idx) {
            return Err(Error::invalid(format!(
                "restore target {idx:?} is already observed"
            )));
        }
        out.set_observed(idx, truth)?;
    }
    Ok(out)
}

pub fn restore_all<T: Real>(
    tensor: &MaskedTensor<T>,
    deltas: &[MaskDelta<T>],
) -> Result<MaskedTensor<T>> {
    let mut out = tensor.clone();
    for delta in deltas {
        out = restore(&out, delta)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use std::collections::BTreeSet;

    fn full_tensor(dims: (usize, usize, usize)) -> MaskedTensor<f64> {
        let values = Array3::from_shape_fn(dims, |(i, j, k)| (i * 100 + j * 10 + k) as f64 + 0.5);
        MaskedTensor::dense(values).unwrap()
    }

    fn tensor_with_missing(
        dims: (usize, usize, usize),
        missing: &[(usize, usize, usize)],
    ) -> MaskedTensor<f64> {
        let mut t = full_tensor(dims);
        for &idx in missing {
            t.set_missing(idx);
        }
        t
    }

    #[test]
    fn random_injection_count_is_exact() {
        // 3% of a fully observed 100×10×10 tensor is exactly 300 entries.
        let t = full_tensor((100, 10, 10));
        let (masked, delta) = add_random_missing(&t, 0.03, 7).unwrap();
        assert_eq!(delta.len(), 300);
        assert_eq!(masked.observed_count(), t.observed_count() - 300);
        assert!(matches!(delta.provenance, Provenance::Random { fraction, seed: 7 } if fraction == 0.03));
    }

    #[test]
    fn random_injection_seeds_differ_cardinality_matches() {
        let t = full_tensor((20, 10, 10));
        let (_, d1) = add_random_missing(&t, 0.05, 1).unwrap();
        let (_, d2) = add_random_missing(&t, 0.05, 2).unwrap();
        assert_eq!(d1.len(), d2.len());
        assert_ne!(d1.entries, d2.entries);
        let (_, d1b) = add_random_missing(&t, 0.05, 1).unwrap();
        assert_eq!(d1.entries, d1b.entries);
    }

    #[test]
    fn random_injection_restores_bit_exactly() {
        let t = tensor_with_missing((10, 8, 8), &[(0, 0, 0), (4, 4, 4)]);
        let (masked, delta) = add_random_missing(&t, 0.1, 3).unwrap();
        let restored = restore(&masked, &delta).unwrap();
        assert_eq!(restored, t);
    }

    #[test]
    fn random_injection_never_touches_missing() {
        let holes = [(1, 1, 1), (2, 3, 0), (5, 0, 7)];
        let t = tensor_with_missing((6, 4, 8), &holes);
        let (_, delta) = add_random_missing(&t, 0.2, 11).unwrap();
        for idx in &delta.entries {
            assert!(t.is_observed(*idx));
        }
        let unique: BTreeSet<_> = delta.entries.iter().collect();
        assert_eq!(unique.len(), delta.len());
    }

    #[test]
    fn random_injection_rejects_insufficient_observed() {
        let mut t = full_tensor((4, 4, 4));
        for (idx, _) in t.clone().values().indexed_iter() {
            if idx.0 > 0 {
                t.set_missing(idx);
            }
        }
        // 16 observed entries left, 50% of 64 = 32 requested.
        assert!(matches!(
            add_random_missing(&t, 0.5, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cptm_empty_source_mask_is_noop() {
        let t = tensor_with_missing((4, 3, 3), &[(2, 1, 1)]);
        let (out, delta) = cptm(&t, 0, 1).unwrap();
        assert!(delta.is_empty());
        assert_eq!(out, t);
    }

    #[test]
    fn cptm_union_of_missing_sets() {
        // Source day 0 misses A, target day 1 misses B, A ∩ B = ∅ →
        // synthetic day misses exactly A ∪ B.
        let a = [(0usize, 0usize), (0, 1), (1, 2)];
        let b = [(2usize, 2usize)];
        let mut holes: Vec<(usize, usize, usize)> =
            a.iter().map(|&(r, c)| (0, r, c)).collect();
        holes.extend(b.iter().map(|&(r, c)| (1, r, c)));
        let t = tensor_with_missing((3, 3, 3), &holes);

        let (out, delta) = cptm(&t, 0, 1).unwrap();
        assert_eq!(delta.len(), a.len());
        let expect: BTreeSet<(usize, usize)> = a.iter().chain(b.iter()).cloned().collect();
        let got: BTreeSet<(usize, usize)> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| !out.mask()[[1, r, c]])
            .collect();
        assert_eq!(got, expect);
        // Source day untouched.
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(out.mask()[[0, r, c]], t.mask()[[0, r, c]]);
            }
        }
    }

    #[test]
    fn cptm_rejects_conflicting_target() {
        // Both days missing at the same pixel.
        let t = tensor_with_missing((3, 3, 3), &[(0, 1, 1), (1, 1, 1)]);
        match cptm(&t, 0, 1) {
            Err(Error::CptmIneligible { target: 1, row: 1, col: 1 }) => {}
            other => panic!("expected CptmIneligible, got {other:?}"),
        }
    }

    #[test]
    fn cptm_rejects_same_day() {
        let t = full_tensor((3, 3, 3));
        assert!(matches!(cptm(&t, 1, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cptm_restore_round_trip() {
        let t = tensor_with_missing((4, 4, 4), &[(0, 1, 2), (0, 2, 2), (3, 0, 0)]);
        let (masked, delta) = cptm(&t, 0, 2).unwrap();
        assert_eq!(delta.len(), 2);
        assert_eq!(restore(&masked, &delta).unwrap(), t);
    }

    #[test]
    fn select_pairs_deterministic_and_applicable() {
        let holes: Vec<(usize, usize, usize)> = (0..6)
            .map(|d| (d, d % 3, (d * 2) % 3))
            .collect();
        let t = tensor_with_missing((6, 3, 3), &holes);
        let pairs = select_cptm_pairs(&t, 4, 9).unwrap();
        assert_eq!(pairs, select_cptm_pairs(&t, 4, 9).unwrap());
        assert_eq!(pairs.len(), 4);
        let mut current = t.clone();
        for &(s, tgt) in &pairs {
            let (next, _) = cptm(&current, s, tgt).unwrap();
            current = next;
        }
    }

    #[test]
    fn select_pairs_forced_single_choice() {
        // Day 0 misses (0,0); day 1 is complete; day 1 misses nothing so the
        // only eligible pair is (0, 1) once day 1 keeps observing (0,0).
        let t = tensor_with_missing((2, 2, 2), &[(0, 0, 0)]);
        let pairs = select_cptm_pairs(&t, 1, 123).unwrap();
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn select_pairs_budget_exhaustion() {
        // Every day missing at the same pixel: no eligible pair exists.
        let holes: Vec<(usize, usize, usize)> = (0..4).map(|d| (d, 0, 0)).collect();
        let t = tensor_with_missing((4, 2, 2), &holes);
        match select_cptm_pairs(&t, 2, 5) {
            Err(Error::Infeasible { found: 0, requested: 2 }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn observed_fraction_drops_by_exact_amount() {
        let t = full_tensor((5, 5, 4));
        let n = t.len() as f64;
        let (masked, delta) = add_random_missing(&t, 0.13, 2).unwrap();
        let expect = t.observed_fraction() - delta.len() as f64 / n;
        assert!((masked.observed_fraction() - expect).abs() < 1e-15);
    }
}
