//! Experiment manifests: JSON or flat `key=value` files describing one
//! reproducible end-to-end run (inputs, grid, solver, gap injection,
//! baselines, outputs). Every seed is recorded so a replay is byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tensorgap_core::completion::SolverConfig;
use tensorgap_core::metrics::ScaleTag;
use tensorgap_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskingSpec {
    Random { fraction: f64, seed: u64 },
    Cptm { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrigingSpec {
    pub enabled: bool,
    pub neighborhood: usize,
    /// Lag bin width in degrees; defaults to the grid cell size.
    pub lag_width: Option<f64>,
    /// Maximum lag in degrees; defaults to half the domain diagonal.
    pub max_lag: Option<f64>,
}

impl Default for KrigingSpec {
    fn default() -> Self {
        Self { enabled: true, neighborhood: 32, lag_width: None, max_lag: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdwSpec {
    pub enabled: bool,
    pub power: f64,
    pub neighborhood: usize,
}

impl Default for IdwSpec {
    fn default() -> Self {
        Self { enabled: true, power: 2.0, neighborhood: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSpec {
    pub kriging: KrigingSpec,
    pub idw: IdwSpec,
    pub mean_fill: bool,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self { kriging: KrigingSpec::default(), idw: IdwSpec::default(), mean_fill: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    /// Input point CSV; tensorized into the working tensor when present.
    #[serde(default)]
    pub points: Option<PathBuf>,
    /// Pre-built LRT1 tensor, used when `points` is absent.
    #[serde(default)]
    pub tensor: Option<PathBuf>,
    /// lat_min, lat_max, lon_min, lon_max; required with `points`.
    #[serde(default)]
    pub bbox: Option<[f64; 4]>,
    /// Cell size in degrees.
    pub delta: f64,
    #[serde(default = "default_qa")]
    pub qa_threshold: f64,
    pub solver: SolverConfig,
    pub masking: MaskingSpec,
    #[serde(default)]
    pub baselines: BaselineSpec,
    pub out_dir: PathBuf,
    #[serde(default = "default_scale")]
    pub scale: ScaleTag,
}

fn default_qa() -> f64 {
    0.5
}

fn default_scale() -> ScaleTag {
    ScaleTag::Normalized
}

impl ExperimentManifest {
    pub fn validate(&self) -> Result<()> {
        match (&self.points, &self.tensor) {
            (None, None) => {
                return Err(Error::invalid("manifest needs either `points` or `tensor`"))
            }
            (Some(p), _) => {
                if !p.exists() {
                    return Err(Error::invalid(format!("points file {} does not exist", p.display())));
                }
                if self.bbox.is_none() {
                    return Err(Error::invalid("`bbox` is required when tensorizing points"));
                }
            }
            (None, Some(t)) => {
                if !t.exists() {
                    return Err(Error::invalid(format!("tensor file {} does not exist", t.display())));
                }
            }
        }
        if let Some([lat_min, lat_max, lon_min, lon_max]) = self.bbox {
            if !(lat_min < lat_max && lon_min < lon_max) {
                return Err(Error::invalid("bbox must be lat_min,lat_max,lon_min,lon_max with min < max"));
            }
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
        if !(0.0..=1.0).contains(&self.qa_threshold) {
            return Err(Error::invalid("qa_threshold must lie in [0, 1]"));
        }
        self.solver.validate()?;
        match self.masking {
            MaskingSpec::Random { fraction, .. } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::invalid(format!(
                        "masking fraction must be in (0, 1), got {fraction}"
                    )));
                }
            }
            MaskingSpec::Cptm { count, .. } => {
                if count == 0 {
                    return Err(Error::invalid("cptm count must be at least 1"));
                }
            }
        }
        if self.baselines.idw.enabled && !(self.baselines.idw.power > 0.0) {
            return Err(Error::invalid("idw power must be positive"));
        }
        Ok(())
    }
}

/// Insert a dotted key like `solver.rank` into a nested JSON object.
fn insert_dotted(root: &mut serde_json::Map<String, serde_json::Value>, key: &str, value: serde_json::Value) {
    let mut parts = key.split('.');
    let first = parts.next().expect("split yields at least one part").to_string();
    let rest: Vec<&str> = parts.collect();
    if rest.is_empty() {
        root.insert(first, value);
        return;
    }
    let entry = root
        .entry(first)
        .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()));
    if let serde_json::Value::Object(map) = entry {
        insert_dotted(map, &rest.join("."), value);
    }
}

fn parse_scalar(raw: &str) -> serde_json::Value {
    if raw.contains(',') {
        let parts: Option<Vec<f64>> = raw.split(',').map(|p| p.trim().parse().ok()).collect();
        if let Some(nums) = parts {
            return serde_json::Value::Array(
                nums.into_iter()
                    .map(|n| serde_json::Number::from_f64(n).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null))
                    .collect(),
            );
        }
    }
    serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()))
}

/// Parse a manifest body: JSON when it starts with `{`, flat `key=value`
/// lines (dotted keys for nesting, `#` comments) otherwise.
pub fn parse_manifest(body: &str) -> Result<ExperimentManifest> {
    let trimmed = body.trim_start();
    let value: serde_json::Value = if trimmed.starts_with('{') {
        serde_json::from_str(body).map_err(|e| Error::invalid(format!("manifest json: {e}")))?
    } else {
        let mut root = serde_json::Map::new();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("manifest line {}: expected key=value", lineno + 1))
            })?;
            insert_dotted(&mut root, key.trim(), parse_scalar(value.trim()));
        }
        serde_json::Value::Object(root)
    };
    let manifest: ExperimentManifest =
        serde_json::from_value(value).map_err(|e| Error::invalid(format!("manifest: {e}")))?;
    Ok(manifest)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<ExperimentManifest> {
    let body = std::fs::read_to_string(path)?;
    parse_manifest(&body)
}
