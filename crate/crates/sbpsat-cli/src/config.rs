// Negated comparisons below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Interpolation,
    Projection,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Interpolation => "interpolation",
            Family::Projection => "projection",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    TwoBlock,
    TJunction,
    SingleBlock,
    Cavity,
    Inclusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityPartition {
    N,
    T,
}

/// One experiment; every command reads the fields it needs and ignores the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub orders: Vec<usize>,
    pub families: Vec<Family>,
    pub mesh: MeshKind,
    /// Inclusive refinement range `[first, last]`.
    pub refinements: [u32; 2],
    pub safety: f64,
    /// `Δt = dt_factor · h_min`; the per-order default when absent.
    pub dt_factor: Option<f64>,
    pub t_final: f64,
    /// Grid size used by `verify-ops`.
    pub grid_points: usize,
    pub cavity: CavityPartition,
    pub conforming: bool,
    /// Observer sampling stride for `solve`.
    pub stride: usize,
    pub out: Option<PathBuf>,
    /// Directory holding coefficient files; overrides the environment search path.
    pub coefficient_dir: Option<PathBuf>,
}

pub const DEFAULT_FINAL_TIME: f64 = sbpsat::timestepping::MANUFACTURED_FINAL_TIME;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            orders: vec![2, 4],
            families: vec![Family::Projection],
            mesh: MeshKind::TwoBlock,
            refinements: [0, 0],
            safety: 1.2,
            dt_factor: None,
            t_final: DEFAULT_FINAL_TIME,
            grid_points: 101,
            cavity: CavityPartition::T,
            conforming: true,
            stride: 10,
            out: None,
            coefficient_dir: None,
        }
    }
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, msg: msg.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.orders.is_empty() {
            return Err(invalid("orders", "at least one order is required"));
        }
        if let Some(o) = self.orders.iter().find(|o| !matches!(o, 2 | 4 | 6 | 8 | 10)) {
            return Err(invalid("orders", format!("{o} is not one of 2, 4, 6, 8, 10")));
        }
        if self.families.is_empty() {
            return Err(invalid("families", "at least one family is required"));
        }
        let [r0, r1] = self.refinements;
        if r0 > r1 || r1 > 6 {
            return Err(invalid("refinements", format!("[{r0}, {r1}] must be increasing and at most 6")));
        }
        if !(self.safety >= 1.0) {
            return Err(invalid("safety", format!("{} is below the stability bound factor 1", self.safety)));
        }
        if let Some(f) = self.dt_factor {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid("dt_factor", format!("{f} must lie in (0, 1]")));
            }
        }
        if !(self.t_final > 0.0) {
            return Err(invalid("t_final", format!("{} must be positive", self.t_final)));
        }
        if self.grid_points < 3 {
            return Err(invalid("grid_points", "at least 3 points are required"));
        }
        if self.stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        Ok(())
    }
}
