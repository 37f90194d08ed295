//! Run configuration: a TOML file with `[model]`, `[grid]`, `[bc]`,
//! `[tolerances]`, command tables and `[output]`, plus `--set key=value`
//! overrides for any scalar key.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub gnh: GnhConfig,
    #[serde(default)]
    pub propagate: PropagateConfig,
    #[serde(default)]
    pub hodge: HodgeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub cache: CacheConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "scalar", "maxwell", or "operator" (a raw operator file)
    #[serde(default = "default_model_kind")]
    pub kind: String,
    #[serde(default)]
    pub operator_file: Option<PathBuf>,
    #[serde(default)]
    pub mass_file: Option<PathBuf>,
}

fn default_model_kind() -> String {
    "scalar".into()
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: "scalar".into(),
            operator_file: None,
            mass_file: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub spacing: Vec<f64>,
    #[serde(default)]
    pub hole: Option<HoleConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            cells: vec![8],
            spacing: vec![0.125],
            hole: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    /// "dirichlet", "neumann" or "robin"
    #[serde(default = "default_scalar_bc")]
    pub scalar: String,
    /// constant Robin coefficient (must be nonpositive)
    #[serde(default)]
    pub robin_b: f64,
    /// per-boundary-node Robin coefficients, overriding `robin_b`
    #[serde(default)]
    pub robin_b_file: Option<PathBuf>,
    /// "relative" or "absolute"
    #[serde(default = "default_vector_bc")]
    pub vector: String,
}

fn default_scalar_bc() -> String {
    "dirichlet".into()
}

fn default_vector_bc() -> String {
    "relative".into()
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            scalar: "dirichlet".into(),
            robin_b: 0.0,
            robin_b_file: None,
            vector: "relative".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// rank tolerance; default 1e-10 · n
    #[serde(default)]
    pub tol: Option<f64>,
    /// kernel tolerance; default 1e-9 · ‖op‖
    #[serde(default)]
    pub ktol: Option<f64>,
    /// residual tolerance
    #[serde(default)]
    pub rtol: Option<f64>,
    /// constraint tolerance; default 1e-8
    #[serde(default)]
    pub ctol: Option<f64>,
}

impl Tolerances {
    pub fn rtol(&self) -> f64 {
        self.rtol.unwrap_or(1e-10)
    }

    pub fn ctol(&self) -> f64 {
        self.ctol.unwrap_or(1e-8)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("tol", self.tol),
            ("ktol", self.ktol),
            ("rtol", self.rtol),
            ("ctol", self.ctol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("tolerance {name} must be positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GnhConfig {
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub omega_file: Option<PathBuf>,
    #[serde(default)]
    pub a_file: Option<PathBuf>,
    #[serde(default)]
    pub b_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    /// strictly increasing evaluation times
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// "random", "file" or "mode"
    #[serde(default = "default_initial")]
    pub initial: String,
    #[serde(default)]
    pub state_file: Option<PathBuf>,
    #[serde(default)]
    pub mode_index: usize,
    /// 0 = full dense decomposition
    #[serde(default)]
    pub mode_budget: usize,
    /// constant perpendicular-potential rate (Maxwell gauge choice)
    #[serde(default)]
    pub gauge_rate: f64,
}

fn default_times() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_initial() -> String {
    "random".into()
}

impl Default for PropagateConfig {
    fn default() -> Self {
        Self {
            times: vec![0.0, 1.0],
            initial: "random".into(),
            state_file: None,
            mode_index: 0,
            mode_budget: 0,
            gauge_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HodgeConfig {
    #[serde(default)]
    pub field_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("bad TOML in {}: {e}", path.display())))?;
        let mut value = toml::Value::Table(table);
        for entry in overrides {
            apply_override(&mut value, entry)?;
        }
        let config: RunConfig = value
            .try_into()
            .map_err(|e| CliError::Config(format!("bad configuration: {e}")))?;
        config.tolerances.validate()?;
        config.validate_times()?;
        Ok(config)
    }

    fn validate_times(&self) -> Result<(), CliError> {
        let times = &self.propagate.times;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("propagate.times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Canonical description used to fingerprint caches: every knob that
    /// changes the decomposition appears here.
    pub fn fingerprint_text(&self, what: &str) -> String {
        format!(
            "what={what};kind={};grid={}x{:?}x{:?};hole={:?};scalar={};robin={};vector={};tol={:?};ktol={:?};rtol={:?};budget={};op={:?}",
            self.model.kind,
            self.grid.dim,
            self.grid.cells,
            self.grid.spacing,
            self.grid.hole.as_ref().map(|h| (h.lo, h.hi)),
            self.bc.scalar,
            self.bc.robin_b,
            self.bc.vector,
            self.tolerances.tol,
            self.tolerances.ktol,
            self.tolerances.rtol,
            self.propagate.mode_budget,
            self.model.operator_file,
        )
    }
}

/// Apply one `table.key=value` override onto the raw TOML tree.
fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), CliError> {
    let (path, raw) = entry
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set needs key=value, got {entry:?}")))?;
    let parsed: toml::Value = if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(raw.to_string())
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("{path} is not inside a table")))?;
            table.insert((*part).to_string(), parsed);
            return Ok(());
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{path} is not inside a table")))?;
        node = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}
