//! On-disk formats.
//!
//! * `LRT1` tensor files: magic `LRT1`, three little-endian u64 dims, then
//!   row-major little-endian f64 values with NaN marking missing entries;
//!   the mask is derived as `!isnan` on load.
//! * `LRK1` model files: magic `LRK1`, u64 rank and dims, λ, then the three
//!   factor matrices row-major as little-endian f64.
//! * Mask-delta CSVs: `i1,i2,i3,truth` rows preceded by one `#` provenance
//!   line per injection.
//! * Prediction/pair CSVs and the small JSON sidecars.
//!
//! Floats in text formats print in Rust's shortest round-trip form, so a
//! write/read cycle reproduces the in-memory bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2, Array3};
use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PointObservation;
use crate::masking::{MaskDelta, Provenance};
use crate::real::Real;
use crate::tensor::{checked_element_count, KruskalModel, MaskedTensor};

const TENSOR_MAGIC: &[u8; 4] = b"LRT1";
const MODEL_MAGIC: &[u8; 4] = b"LRK1";

pub fn write_tensor<T: Real, W: Write>(w: &mut W, tensor: &MaskedTensor<T>) -> Result<()> {
    let (d1, d2, d3) = tensor.dims();
    w.write_all(TENSOR_MAGIC)?;
    for d in [d1, d2, d3] {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    for v in tensor.values().iter() {
        w.write_f64::<LittleEndian>(v.to64())?;
    }
    Ok(())
}

pub fn read_tensor<T: Real, R: Read>(r: &mut R) -> Result<MaskedTensor<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad tensor magic {magic:?}, expected LRT1")));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = r.read_u64::<LittleEndian>()? as usize;
    }
    let n = checked_element_count((dims[0], dims[1], dims[2]))?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(T::of(r.read_f64::<LittleEndian>()?));
    }
    let values = Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)
        .map_err(|e| Error::Format(e.to_string()))?;
    MaskedTensor::from_values(values)
}

pub fn write_tensor_file<T: Real>(path: impl AsRef<Path>, tensor: &MaskedTensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, tensor)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor_file<T: Real>(path: impl AsRef<Path>) -> Result<MaskedTensor<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensor(&mut r)
}

pub fn write_model<T: Real, W: Write>(w: &mut W, model: &KruskalModel<T>) -> Result<()> {
    let (d1, d2, d3) = model.dims();
    w.write_all(MODEL_MAGIC)?;
    for d in [model.rank(), d1, d2, d3] {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    for v in model.weights.iter() {
        w.write_f64::<LittleEndian>(v.to64())?;
    }
    for factor in &model.factors {
        for v in factor.iter() {
            w.write_f64::<LittleEndian>(v.to64())?;
        }
    }
    Ok(())
}

pub fn read_model<T: Real, R: Read>(r: &mut R) -> Result<KruskalModel<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad model magic {magic:?}, expected LRK1")));
    }
    let rank = r.read_u64::<LittleEndian>()? as usize;
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = r.read_u64::<LittleEndian>()? as usize;
    }
    if rank == 0 {
        return Err(Error::Format("model rank 0".into()));
    }
    let mut weights = Vec::with_capacity(rank);
    for _ in 0..rank {
        weights.push(T::of(r.read_f64::<LittleEndian>()?));
    }
    let mut factors = Vec::with_capacity(3);
    for &d in &dims {
        let mut data = Vec::with_capacity(d * rank);
        for _ in 0..d * rank {
            data.push(T::of(r.read_f64::<LittleEndian>()?));
        }
        factors.push(
            Array2::from_shape_vec((d, rank), data).map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    let [a1, a2, a3]: [Array2<T>; 3] = factors.try_into().expect("three factors read");
    KruskalModel::new(Array1::from_vec(weights), [a1, a2, a3])
}

pub fn write_model_file<T: Real>(path: impl AsRef<Path>, model: &KruskalModel<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn read_model_file<T: Real>(path: impl AsRef<Path>) -> Result<KruskalModel<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

fn provenance_line(p: &Provenance) -> String {
    match p {
        Provenance::Random { fraction, seed } => format!("# random fraction={fraction} seed={seed}"),
        Provenance::Cptm { source_day, target_day } => {
            format!("# cptm source={source_day} target={target_day}")
        }
    }
}

fn parse_provenance(line: &str) -> Result<Provenance> {
    let body = line.trim_start_matches('#').trim();
    let mut parts = body.split_whitespace();
    let kind = parts.next().unwrap_or_default();
    let kv = |key: &str| -> Result<String> {
        for p in body.split_whitespace() {
            if let Some(v) = p.strip_prefix(&format!("{key}=")) {
                return Ok(v.to_string());
            }
        }
        Err(Error::Format(format!("provenance line missing {key}: {line}")))
    };
    match kind {
        "random" => Ok(Provenance::Random {
            fraction: kv("fraction")?.parse().map_err(|e| Error::Format(format!("{e}")))?,
            seed: kv("seed")?.parse().map_err(|e| Error::Format(format!("{e}")))?,
        }),
        "cptm" => Ok(Provenance::Cptm {
            source_day: kv("source")?.parse().map_err(|e| Error::Format(format!("{e}")))?,
            target_day: kv("target")?.parse().map_err(|e| Error::Format(format!("{e}")))?,
        }),
        other => Err(Error::Format(format!("unknown provenance kind '{other}'"))),
    }
}

pub fn write_deltas<T: Real>(path: impl AsRef<Path>, deltas: &[MaskDelta<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i1,i2,i3,truth")?;
    for delta in deltas {
        writeln!(w, "{}", provenance_line(&delta.provenance))?;
        for (&(i1, i2, i3), &t) in delta.entries.iter().zip(delta.truths.iter()) {
            writeln!(w, "{i1},{i2},{i3},{}", t.to64())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_deltas<T: Real>(path: impl AsRef<Path>) -> Result<Vec<MaskDelta<T>>> {
    let r = BufReader::new(File::open(path)?);
    let mut deltas: Vec<MaskDelta<T>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "i1,i2,i3,truth" {
            continue;
        }
        if line.starts_with('#') {
            deltas.push(MaskDelta {
                provenance: parse_provenance(line)?,
                entries: Vec::new(),
                truths: Vec::new(),
            });
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("delta line {}: expected 4 fields", lineno + 1)));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.trim().parse().map_err(|e| Error::Format(format!("delta line {}: {e}", lineno + 1)))
        };
        let entry = (parse_idx(fields[0])?, parse_idx(fields[1])?, parse_idx(fields[2])?);
        let truth: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("delta line {}: {e}", lineno + 1)))?;
        let delta = deltas
            .last_mut()
            .ok_or_else(|| Error::Format("delta rows before any provenance line".into()))?;
        delta.entries.push(entry);
        delta.truths.push(T::of(truth));
    }
    Ok(deltas)
}

/// Predictions at injected entries: `i1,i2,i3,prediction`.
pub fn write_predictions<T: Real>(
    path: impl AsRef<Path>,
    entries: &[(usize, usize, usize)],
    predictions: &[T],
) -> Result<()> {
    if entries.len() != predictions.len() {
        return Err(Error::dims(format!(
            "{} entries vs {} predictions",
            entries.len(),
            predictions.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i1,i2,i3,prediction")?;
    for (&(i1, i2, i3), &p) in entries.iter().zip(predictions.iter()) {
        writeln!(w, "{i1},{i2},{i3},{}", p.to64())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<T: Real>(
    path: impl AsRef<Path>,
) -> Result<(Vec<(usize, usize, usize)>, Vec<T>)> {
    let r = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    let mut predictions = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "i1,i2,i3,prediction" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "prediction line {}: expected 4 fields",
                lineno + 1
            )));
        }
        let bad = |e: String| Error::Format(format!("prediction line {}: {e}", lineno + 1));
        entries.push((
            fields[0].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            fields[1].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            fields[2].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
        ));
        predictions.push(T::of(
            fields[3].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?,
        ));
    }
    Ok((entries, predictions))
}

/// Raw evaluation pairs for external plotting: `i1,i2,i3,prediction,truth`.
pub fn write_pairs<T: Real>(
    path: impl AsRef<Path>,
    entries: &[(usize, usize, usize)],
    predictions: &[T],
    truths: &[T],
) -> Result<()> {
    if entries.len() != predictions.len() || entries.len() != truths.len() {
        return Err(Error::dims("pair dump arrays disagree in length"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i1,i2,i3,prediction,truth")?;
    for i in 0..entries.len() {
        let (i1, i2, i3) = entries[i];
        writeln!(w, "{i1},{i2},{i3},{},{}", predictions[i].to64(), truths[i].to64())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs<T: Real>(path: impl AsRef<Path>) -> Result<(Vec<(usize, usize, usize)>, Vec<T>, Vec<T>)> {
    let r = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    let mut predictions = Vec::new();
    let mut truths = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "i1,i2,i3,prediction,truth" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!("pair line {}: expected 5 fields", lineno + 1)));
        }
        let bad = |e: String| Error::Format(format!("pair line {}: {e}", lineno + 1));
        entries.push((
            fields[0].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            fields[1].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            fields[2].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
        ));
        predictions.push(T::of(fields[3].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?));
        truths.push(T::of(fields[4].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?));
    }
    Ok((entries, predictions, truths))
}

/// Point CSV with header `day,lat,lon,value,qa`.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<PointObservation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Format(e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let expected = ["day", "lat", "lon", "value", "qa"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format(format!(
            "point csv header must be day,lat,lon,value,qa; got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let bad = |e: String| Error::Format(format!("point row {}: {e}", row + 1));
        let day: usize = record[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        let lat: f64 = record[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let lon: f64 = record[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let value: f64 = record[3].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let qa: f64 = record[4].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        points.push(PointObservation::new(day, lat, lon, value, qa)?);
    }
    Ok(points)
}

pub fn write_points_csv(path: impl AsRef<Path>, points: &[PointObservation]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "day,lat,lon,value,qa")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", p.day, p.lat, p.lon, p.value, p.qa)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline, for any serializable sidecar.
pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))
}
