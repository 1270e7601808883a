//! Run configuration: JSON ingestion, dotted-path overrides, and
//! validation with field-path error messages.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use bec_core::bulk::QuadratureConfig;
use bec_core::error::{BecError, Result};
use bec_core::fiber::ScanRange;
use bec_core::model::{Grid1d, ModelSpec};

fn invalid(reason: String) -> BecError {
    BecError::InvalidConfig { reason }
}

/// Output file destinations. Every field is optional; a command writes a
/// file only when its path is configured.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    /// Combined verdict as JSON (`bec` command).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_json: Option<PathBuf>,
    /// Traced channel samples as CSV (`edge`, `bec`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels_csv: Option<PathBuf>,
    /// Enumerated per-fiber states as CSV (`edge`, `bec`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fibers_csv: Option<PathBuf>,
    /// Per-boundary-condition results as CSV (`halfplane`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halfplane_csv: Option<PathBuf>,
    /// Directory for sampled closed-form states (`oracles`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_dir: Option<PathBuf>,
}

/// Parameters of the half-plane boundary-condition family. The half-line
/// domain reuses the top-level grid: extent `grid.half_width`, spacing
/// `grid.spacing`; momenta come from the top-level scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfplaneSection {
    /// Constant bulk value on the half line (must be positive).
    pub m_plus: f64,
    /// Boundary parameters as `[re, im]` points on the unit circle.
    pub z_values: Vec<(f64, f64)>,
}

/// Parameters of the operator-identity spot check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySection {
    /// Hermitian matrix dimension (1 ..= 64).
    pub matrix_size: usize,
    /// Number of seeded random triples.
    pub trials: usize,
}

impl Default for IdentitySection {
    fn default() -> Self {
        IdentitySection {
            matrix_size: 8,
            trials: 100,
        }
    }
}

fn default_fermi_fraction() -> f64 {
    0.1
}

/// One full run configuration, round-trippable through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sector and transverse profile.
    pub model: ModelSpec,
    /// Momentum scan for the edge pipeline (and half-line momenta).
    pub scan: ScanRange,
    /// Transverse grid: half-width `L` and spacing `h`.
    pub grid: Grid1d,
    /// Bulk quadrature budget.
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Fermi-line offset as a fraction of the gap scale, in (0, 1).
    #[serde(default = "default_fermi_fraction")]
    pub fermi_epsilon_fraction: f64,
    /// Output destinations.
    #[serde(default)]
    pub outputs: OutputsConfig,
    /// Base seed for the identity checker's random triples.
    #[serde(default)]
    pub seed: u64,
    /// Half-plane boundary-condition family (halfplane command only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfplane: Option<HalfplaneSection>,
    /// Identity-checker dimensions (identity command only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentitySection>,
}

impl RunConfig {
    /// Checks every section, prefixing failures with the field path.
    pub fn validate(&self) -> Result<()> {
        self.model
            .profile
            .validate()
            .map_err(|e| invalid(format!("model.profile: {e}")))?;
        self.scan
            .validate()
            .map_err(|e| invalid(format!("scan: {e}")))?;
        Grid1d::new(self.grid.half_width, self.grid.spacing)
            .map_err(|e| invalid(format!("grid: {e}")))?;
        if !self.quadrature.tol.is_finite() || self.quadrature.tol <= 0.0 {
            return Err(invalid(format!(
                "quadrature.tol: must be positive, got {}",
                self.quadrature.tol
            )));
        }
        if self.quadrature.max_panels == 0 {
            return Err(invalid(
                "quadrature.max_panels: must be at least 1".to_string(),
            ));
        }
        let fraction = self.fermi_epsilon_fraction;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid(format!(
                "fermi_epsilon_fraction: must lie strictly inside (0, 1), got {fraction}"
            )));
        }
        if let Some(hp) = &self.halfplane {
            if !hp.m_plus.is_finite() || hp.m_plus <= 0.0 {
                return Err(invalid(format!(
                    "halfplane.m_plus: must be positive, got {}",
                    hp.m_plus
                )));
            }
            if hp.z_values.is_empty() {
                return Err(invalid(
                    "halfplane.z_values: must list at least one boundary parameter".to_string(),
                ));
            }
            for (i, (re, im)) in hp.z_values.iter().enumerate() {
                let norm = (re * re + im * im).sqrt();
                if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!(
                        "halfplane.z_values.{i}: must lie on the unit circle, got |z| = {norm}"
                    )));
                }
            }
        }
        if let Some(id) = &self.identity {
            if id.matrix_size == 0 || id.matrix_size > 64 {
                return Err(invalid(format!(
                    "identity.matrix_size: must lie in 1..=64, got {}",
                    id.matrix_size
                )));
            }
            if id.trials == 0 {
                return Err(invalid(
                    "identity.trials: must be at least 1".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Applies one `key=value` override to a JSON tree. Dotted segments
/// descend into objects (created when absent) and index into arrays;
/// the value is parsed as JSON, or taken as a string when that fails.
pub fn apply_override(root: &mut Value, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| invalid(format!("override '{item}' must look like key=value")))?;
    if path.is_empty() {
        return Err(invalid(format!("override '{item}' has an empty key")));
    }
    let leaf: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let (parents, last) = segments.split_at(segments.len() - 1);
    let mut cursor = root;
    let mut walked = String::new();
    for seg in parents {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(seg);
        cursor = match cursor {
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| {
                    invalid(format!("override path '{walked}': '{seg}' is not an array index"))
                })?;
                items.get_mut(idx).ok_or_else(|| {
                    invalid(format!("override path '{walked}': index {idx} out of range"))
                })?
            }
            Value::Object(map) => map
                .entry(seg.to_string())
                .or_insert_with(|| Value::Object(Default::default())),
            other => {
                return Err(invalid(format!(
                    "override path '{walked}': cannot descend into {other}"
                )));
            }
        };
    }
    let key = last[0];
    match cursor {
        Value::Array(items) => {
            let idx: usize = key.parse().map_err(|_| {
                invalid(format!("override path '{path}': '{key}' is not an array index"))
            })?;
            let slot = items.get_mut(idx).ok_or_else(|| {
                invalid(format!("override path '{path}': index {idx} out of range"))
            })?;
            *slot = leaf;
        }
        Value::Object(map) => {
            map.insert(key.to_string(), leaf);
        }
        other => {
            return Err(invalid(format!(
                "override path '{path}': cannot descend into {other}"
            )));
        }
    }
    Ok(())
}

/// Reads, overrides, deserializes, and validates a run configuration.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut tree: Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut tree, item)?;
    }
    let config: RunConfig = serde_json::from_value(tree)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}
