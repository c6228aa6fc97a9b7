//! Tensorization of scattered daily point observations: quality filtering,
//! bounding-box clipping, constrained nearest-neighbor rasterization, raster
//! concatenation, unit conversion, and min-max normalization.
//!
//! Pixel (0, 0) sits at the north-west corner (`lat_max`, `lon_min`) so the
//! row index grows southward, matching the usual map-raster layout.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::MaskedTensor;

/// Molecules per cm² carried by one mol/m²: Avogadro (6.02214e23 / mol)
/// divided by 1e4 cm² per m².
pub const MOLEC_PER_CM2_PER_MOL_PER_M2: f64 = 6.02214e19;

/// One timestamped scattered measurement in source units (mol/m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointObservation {
    /// Days since the start of the series.
    pub day: usize,
    pub lat: f64,
    pub lon: f64,
    pub value: f64,
    /// Quality assurance score in [0, 1].
    pub qa: f64,
}

impl PointObservation {
    pub fn new(day: usize, lat: f64, lon: f64, value: f64, qa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&qa) {
            return Err(Error::invalid(format!("qa {qa} outside [0, 1]")));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("non-finite value {value}")));
        }
        Ok(Self { day, lat, lon, value, qa })
    }
}

/// Bounding box, cell size, and day count defining the tensor geometry.
///
/// The spatial dims follow the ceiling formulas
/// `I₂ = ⌈(lat_max − lat_min)/δ⌉`, `I₃ = ⌈(lon_max − lon_min)/δ⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    /// Cell size δ in degrees.
    pub cell_size: f64,
    /// Day count D = I₁.
    pub days: usize,
}

impl GridSpec {
    pub fn new(
        lat_min: f64,
        lat_max: f64,
        lon_min: f64,
        lon_max: f64,
        cell_size: f64,
        days: usize,
    ) -> Result<Self> {
        if !(lat_min < lat_max) {
            return Err(Error::invalid(format!("lat_min {lat_min} must be below lat_max {lat_max}")));
        }
        if !(lon_min < lon_max) {
            return Err(Error::invalid(format!("lon_min {lon_min} must be below lon_max {lon_max}")));
        }
        if !(cell_size > 0.0) {
            return Err(Error::invalid(format!("cell size must be positive, got {cell_size}")));
        }
        if days == 0 {
            return Err(Error::invalid("day count must be at least 1"));
        }
        Ok(Self { lat_min, lat_max, lon_min, lon_max, cell_size, days })
    }

    pub fn n_rows(&self) -> usize {
        ((self.lat_max - self.lat_min) / self.cell_size).ceil() as usize
    }

    pub fn n_cols(&self) -> usize {
        ((self.lon_max - self.lon_min) / self.cell_size).ceil() as usize
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.days, self.n_rows(), self.n_cols())
    }

    /// Pixel containing a coordinate, or `None` outside the bounding box.
    /// Points exactly on the far edges land in the last row/column.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        if !(self.lat_min..=self.lat_max).contains(&lat) || !(self.lon_min..=self.lon_max).contains(&lon)
        {
            return None;
        }
        let row = ((self.lat_max - lat) / self.cell_size).floor() as usize;
        let col = ((lon - self.lon_min) / self.cell_size).floor() as usize;
        Some((row.min(self.n_rows() - 1), col.min(self.n_cols() - 1)))
    }

    /// Center of a pixel in degrees.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat_max - (row as f64 + 0.5) * self.cell_size,
            self.lon_min + (col as f64 + 0.5) * self.cell_size,
        )
    }
}

/// Retain exactly the points with `qa > threshold` (strict), preserving order.
pub fn filter_qa(points: &[PointObservation], threshold: f64) -> Result<Vec<PointObservation>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("qa threshold {threshold} outside [0, 1]")));
    }
    Ok(points.iter().filter(|p| p.qa > threshold).copied().collect())
}

/// Rasterize one day of points: each pixel containing at least one point
/// takes the value of the point nearest its center among the points inside
/// that pixel (ties keep the first point in input order); empty pixels stay
/// NaN. Points outside the bounding box are ignored.
pub fn rasterize_day<T: Real>(points: &[PointObservation], grid: &GridSpec) -> Array2<T> {
    let (rows, cols) = (grid.n_rows(), grid.n_cols());
    let mut best: Vec<Option<(f64, f64)>> = vec![None; rows * cols];
    for p in points {
        let Some((row, col)) = grid.cell_of(p.lat, p.lon) else {
            continue;
        };
        let (clat, clon) = grid.cell_center(row, col);
        // Plain degree-space distance; monotone for the within-pixel argmin.
        let d2 = (p.lat - clat).powi(2) + (p.lon - clon).powi(2);
        let slot = &mut best[row * cols + col];
        match slot {
            Some((cur, _)) if d2 >= *cur => {}
            _ => *slot = Some((d2, p.value)),
        }
    }
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        best[r * cols + c].map_or_else(T::nan, |(_, v)| T::of(v))
    })
}

/// Concatenate daily rasters into a (D, I₂, I₃) tensor; the mask is 1 exactly
/// where a slice value is finite.
pub fn build_tensor<T: Real>(slices: &[Array2<T>], grid: &GridSpec) -> Result<MaskedTensor<T>> {
    if slices.len() != grid.days {
        return Err(Error::dims(format!(
            "{} slices for a {}-day grid",
            slices.len(),
            grid.days
        )));
    }
    let (rows, cols) = (grid.n_rows(), grid.n_cols());
    let mut data = Vec::with_capacity(grid.days * rows * cols);
    for (day, slice) in slices.iter().enumerate() {
        if slice.dim() != (rows, cols) {
            return Err(Error::dims(format!(
                "slice {day} is {:?}, expected ({rows}, {cols})",
                slice.dim()
            )));
        }
        data.extend(slice.iter().copied());
    }
    let values = Array3::from_shape_vec((grid.days, rows, cols), data)
        .map_err(|e| Error::dims(e.to_string()))?;
    MaskedTensor::from_values(values)
}

/// mol/m² → molec/cm².
pub fn convert_units(value_mol_per_m2: f64) -> f64 {
    value_mol_per_m2 * MOLEC_PER_CM2_PER_MOL_PER_M2
}

/// Affine map used to send the observed range onto [0, 1] and back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub lo: f64,
    pub hi: f64,
}

impl NormalizationParams {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::degenerate(format!("normalization range [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.lo + v * (self.hi - self.lo)
    }
}

/// Min-max normalize over the observed entries; the mask is unchanged and
/// NaN slots stay NaN.
pub fn normalize<T: Real>(tensor: &MaskedTensor<T>) -> Result<(MaskedTensor<T>, NormalizationParams)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for (&v, &m) in tensor.values().iter().zip(tensor.mask().iter()) {
        if m {
            any = true;
            let v = v.to64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !any {
        return Err(Error::invalid("cannot normalize a tensor with no observed entries"));
    }
    let params = NormalizationParams::new(lo, hi)?;
    let (tlo, thi) = (T::of(lo), T::of(hi));
    let values = tensor.values().mapv(|v| (v - tlo) / (thi - tlo));
    Ok((MaskedTensor::new(values, tensor.mask().clone())?, params))
}

/// Invert [`normalize`] with the recorded parameters.
pub fn denormalize<T: Real>(
    tensor: &MaskedTensor<T>,
    params: &NormalizationParams,
) -> Result<MaskedTensor<T>> {
    let (tlo, thi) = (T::of(params.lo), T::of(params.hi));
    let values = tensor.values().mapv(|v| tlo + v * (thi - tlo));
    MaskedTensor::new(values, tensor.mask().clone())
}

/// Options for the end-to-end tensorization pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorizeOptions {
    pub qa_threshold: f64,
    /// Convert point values from mol/m² to molec/cm² before gridding.
    pub convert_units: bool,
    /// Min-max normalize the built tensor to [0, 1].
    pub normalize: bool,
}

impl Default for TensorizeOptions {
    fn default() -> Self {
        Self { qa_threshold: 0.5, convert_units: true, normalize: true }
    }
}

/// Full pipeline: qa filter → clip → unit conversion → per-day rasterization
/// → concatenation → optional normalization.
pub fn tensorize<T: Real>(
    points: &[PointObservation],
    grid: &GridSpec,
    opts: &TensorizeOptions,
) -> Result<(MaskedTensor<T>, Option<NormalizationParams>)> {
    let kept = filter_qa(points, opts.qa_threshold)?;
    let mut per_day: Vec<Vec<PointObservation>> = vec![Vec::new(); grid.days];
    for p in kept {
        if p.day >= grid.days {
            return Err(Error::invalid(format!(
                "day index {} outside the {}-day grid",
                p.day, grid.days
            )));
        }
        if grid.cell_of(p.lat, p.lon).is_none() {
            continue;
        }
        let mut p = p;
        if opts.convert_units {
            p.value = convert_units(p.value);
        }
        per_day[p.day].push(p);
    }
    let slices: Vec<Array2<T>> = per_day.iter().map(|pts| rasterize_day(pts, grid)).collect();
    let tensor = build_tensor(&slices, grid)?;
    if opts.normalize {
        let (normalized, params) = normalize(&tensor)?;
        Ok((normalized, Some(params)))
    } else {
        Ok((tensor, None))
    }
}
