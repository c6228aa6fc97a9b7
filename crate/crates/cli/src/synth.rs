//! Desk-scale synthetic dataset generator: a smooth low-rank-plus-noise
//! field scattered into qa-scored point observations, with cloud-shaped and
//! random dropouts so the gap patterns resemble the real product.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tensorgap_core::ingest::{GridSpec, PointObservation};
use tensorgap_core::tensor::{KruskalModel, MaskedTensor};
use tensorgap_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub days: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Additive gaussian noise as a fraction of the field's standard deviation.
    pub noise: f64,
    /// Fraction of days receiving cloud-shaped gaps.
    pub cloud_day_fraction: f64,
    pub max_clouds_per_day: usize,
    /// Cloud radius range in pixels.
    pub cloud_radius: (f64, f64),
    /// Per-pixel random dropout probability.
    pub dropout: f64,
    /// Fraction of emitted points carrying qa ≤ 0.5 (and a corrupted value).
    pub low_qa_fraction: f64,
    /// Probability of a second point landing in the same pixel.
    pub extra_point_fraction: f64,
    /// Peak field value in mol/m².
    pub value_scale: f64,
    pub lat_min: f64,
    pub lon_min: f64,
    pub cell_size: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            days: 80,
            rows: 24,
            cols: 30,
            rank: 5,
            noise: 0.02,
            cloud_day_fraction: 0.55,
            max_clouds_per_day: 3,
            cloud_radius: (2.5, 6.0),
            dropout: 0.003,
            low_qa_fraction: 0.02,
            extra_point_fraction: 0.05,
            value_scale: 3e-5,
            lat_min: 20.0,
            lon_min: -130.0,
            cell_size: 0.5,
            seed: 12345,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("days, rows, and cols must be positive"));
        }
        if self.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.cloud_day_fraction)
            || !(0.0..=1.0).contains(&self.dropout)
            || !(0.0..=1.0).contains(&self.low_qa_fraction)
            || !(0.0..=1.0).contains(&self.extra_point_fraction)
        {
            return Err(Error::invalid("fractions must lie in [0, 1]"));
        }
        if !(self.cloud_radius.0 > 0.0 && self.cloud_radius.1 >= self.cloud_radius.0) {
            return Err(Error::invalid("cloud radius range must be positive and ordered"));
        }
        if !(self.value_scale > 0.0) || !(self.cell_size > 0.0) {
            return Err(Error::invalid("value_scale and cell_size must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.lat_min,
            self.lat_min + self.rows as f64 * self.cell_size,
            self.lon_min,
            self.lon_min + self.cols as f64 * self.cell_size,
            self.cell_size,
            self.days,
        )
    }
}

pub struct SynthDataset {
    pub points: Vec<PointObservation>,
    /// Complete ground-truth field (low-rank plus noise), before any gaps.
    pub truth: MaskedTensor<f64>,
    pub grid: GridSpec,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the generator's draw count independent of rand_distr
    // internals, which pins the dataset bytes to the seed alone.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Smooth positive low-rank field: gaussian bumps across space, sinusoids
/// across time. Bump centers are spread across the domain so the factor
/// columns stay well conditioned and the rank is numerically clean.
fn truth_model(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> KruskalModel<f64> {
    let rank = spec.rank;
    let bump_profile = |n: usize, slot: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let center = (slot as f64 + 0.2 + 0.6 * rng.random::<f64>()) * n as f64 / rank as f64;
        let width = n as f64 * (0.06 + rng.random::<f64>() * 0.08);
        let amp = 0.5 + rng.random::<f64>() * 0.5;
        (0..n)
            .map(|i| amp * (-((i as f64 - center).powi(2)) / (2.0 * width * width)).exp() + 0.15)
            .collect()
    };
    let mut a1 = Array2::<f64>::zeros((spec.days, spec.rank));
    let mut a2 = Array2::<f64>::zeros((spec.rows, spec.rank));
    let mut a3 = Array2::<f64>::zeros((spec.cols, spec.rank));
    for r in 0..spec.rank {
        let period = spec.days as f64 * (0.25 + rng.random::<f64>() * 0.75);
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let base = 0.4 + rng.random::<f64>() * 0.4;
        let amp = 0.2 + rng.random::<f64>() * 0.3;
        for d in 0..spec.days {
            let v = base + amp * (std::f64::consts::TAU * d as f64 / period + phase).sin();
            a1[[d, r]] = v.max(0.05);
        }
        for (i, v) in bump_profile(spec.rows, r, rng).into_iter().enumerate() {
            a2[[i, r]] = v;
        }
        for (i, v) in bump_profile(spec.cols, rank - 1 - r, rng).into_iter().enumerate() {
            a3[[i, r]] = v;
        }
    }
    let weights =
        Array1::from_vec((0..spec.rank).map(|r| (0.5 + rng.random::<f64>()) * 0.6f64.powi(r as i32)).collect());
    KruskalModel::new(weights, [a1, a2, a3]).expect("finite synthetic factors")
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let grid = spec.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let model = truth_model(spec, &mut rng);
    let mut field = model.reconstruct_full()?;
    let peak = field.iter().cloned().fold(f64::MIN, f64::max);
    field.mapv_inplace(|v| v * spec.value_scale / peak);

    if spec.noise > 0.0 {
        let n = field.len() as f64;
        let mean = field.iter().sum::<f64>() / n;
        let std = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let sigma = spec.noise * std;
        field.mapv_inplace(|v| v + sigma * gauss(&mut rng));
    }

    // Cloud masks per day.
    let mut clouded = Array3::<bool>::from_elem((spec.days, spec.rows, spec.cols), false);
    for d in 0..spec.days {
        if rng.random::<f64>() >= spec.cloud_day_fraction {
            continue;
        }
        let n_clouds = rng.random_range(1..=spec.max_clouds_per_day.max(1));
        for _ in 0..n_clouds {
            let cr = rng.random::<f64>() * spec.rows as f64;
            let cc = rng.random::<f64>() * spec.cols as f64;
            let radius = spec.cloud_radius.0
                + rng.random::<f64>() * (spec.cloud_radius.1 - spec.cloud_radius.0);
            for r in 0..spec.rows {
                for c in 0..spec.cols {
                    let d2 = (r as f64 + 0.5 - cr).powi(2) + (c as f64 + 0.5 - cc).powi(2);
                    if d2 <= radius * radius {
                        clouded[[d, r, c]] = true;
                    }
                }
            }
        }
    }

    // Scatter points: one per surviving pixel near its center, occasionally a
    // second one so the constrained nearest-neighbor rule has work to do.
    let mut points = Vec::new();
    for d in 0..spec.days {
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                if clouded[[d, r, c]] || rng.random::<f64>() < spec.dropout {
                    continue;
                }
                let truth = field[[d, r, c]];
                let (clat, clon) = grid.cell_center(r, c);
                let emit = |rng: &mut ChaCha8Rng, value: f64| -> PointObservation {
                    let jlat = (rng.random::<f64>() - 0.5) * 0.7 * spec.cell_size;
                    let jlon = (rng.random::<f64>() - 0.5) * 0.7 * spec.cell_size;
                    let low_qa = rng.random::<f64>() < spec.low_qa_fraction;
                    let (qa, value) = if low_qa {
                        (rng.random::<f64>() * 0.5, value * (1.5 + 1.5 * rng.random::<f64>()))
                    } else {
                        (0.5 + 0.5 * rng.random::<f64>(), value)
                    };
                    PointObservation::new(d, clat + jlat, clon + jlon, value, qa)
                        .expect("jitter stays inside the bounding box")
                };
                points.push(emit(&mut rng, truth));
                if rng.random::<f64>() < spec.extra_point_fraction {
                    let perturbed = truth * (1.0 + 0.02 * (rng.random::<f64>() - 0.5));
                    points.push(emit(&mut rng, perturbed));
                }
            }
        }
    }

    Ok(SynthDataset { points, truth: MaskedTensor::dense(field)?, grid })
}
