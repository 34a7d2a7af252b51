//! Run configuration: a flat TOML file whose keys can all be overridden on
//! the command line. Precedence is command line, then file, then defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::{CostModel, DetectionCostForm, Gating};
use crate::error::{Error, Result};
use crate::online::{TrackerConfig, TrackerMode};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "FLOWTRACK_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ssp,
    Dssp,
    Odssp,
    Mbodssp,
    Dp,
    Oracle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Ssp,
        SolverKind::Dssp,
        SolverKind::Odssp,
        SolverKind::Mbodssp,
        SolverKind::Dp,
        SolverKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ssp => "ssp",
            SolverKind::Dssp => "dssp",
            SolverKind::Odssp => "odssp",
            SolverKind::Mbodssp => "mbodssp",
            SolverKind::Dp => "dp",
            SolverKind::Oracle => "oracle",
        }
    }

    pub fn is_online(self) -> bool {
        matches!(self, SolverKind::Odssp | SolverKind::Mbodssp)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?}")))
    }
}

/// Every setting as an optional override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: Option<SolverKind>,
    pub window: Option<usize>,
    pub cache_size: Option<usize>,
    pub cache_reuse: Option<bool>,
    pub strict: Option<bool>,
    pub beta: Option<f64>,
    pub entry_cost: Option<f64>,
    pub exit_cost: Option<f64>,
    pub det_offset: Option<f64>,
    pub det_weight: Option<f64>,
    pub detection_form: Option<DetectionCostForm>,
    pub link_offsets: Option<Vec<f64>>,
    pub link_weights: Option<Vec<f64>>,
    pub gating: Option<bool>,
    pub gating_radius: Option<f64>,
    pub confirm_lag: Option<usize>,
    pub seed: Option<u64>,
    pub iou_threshold: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `explicit`, else the file named by [`CONFIG_ENV`], else nothing.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        let path: Option<PathBuf> = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        match path {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    /// Settings of `top` win over those of `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(
            base,
            top,
            solver,
            window,
            cache_size,
            cache_reuse,
            strict,
            beta,
            entry_cost,
            exit_cost,
            det_offset,
            det_weight,
            detection_form,
            link_offsets,
            link_weights,
            gating,
            gating_radius,
            confirm_lag,
            seed,
            iou_threshold
        )
    }

    pub fn resolve(&self) -> Result<Settings> {
        let d = CostModel::default();
        let defaults = Gating::default();
        let mut b = CostModel::builder()
            .beta(self.beta.unwrap_or(d.beta()))
            .entry_cost(self.entry_cost.unwrap_or(d.entry_cost()))
            .exit_cost(self.exit_cost.unwrap_or(d.exit_cost()))
            .detection_form(self.detection_form.unwrap_or_default())
            .gating(Gating {
                enabled: self.gating.unwrap_or(defaults.enabled),
                radius_scale: self.gating_radius.unwrap_or(defaults.radius_scale),
            });
        if self.det_offset.is_some() || self.det_weight.is_some() {
            b = b.detection_affine(self.det_offset.unwrap_or(-1.0), self.det_weight.unwrap_or(2.0));
        }
        if self.link_offsets.is_some() || self.link_weights.is_some() {
            b = b.features(
                self.link_offsets.clone().unwrap_or_else(|| vec![-0.4; 3]),
                self.link_weights.clone().unwrap_or_else(|| vec![2.0, 1.0, 1.0]),
            );
        }
        let costs = b.build().map_err(|e| Error::Config(e.to_string()))?;

        let window = self.window.unwrap_or(10);
        if window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.cache_size == Some(0) {
            return Err(Error::Config("cache_size must be at least 1".into()));
        }
        let iou = self.iou_threshold.unwrap_or(0.5);
        if !(iou > 0.0 && iou <= 1.0) {
            return Err(Error::Config("iou_threshold must be in (0, 1]".into()));
        }
        Ok(Settings {
            solver: self.solver.unwrap_or(SolverKind::Ssp),
            window,
            cache_size: self.cache_size,
            cache_reuse: self.cache_reuse.unwrap_or(true),
            strict: self.strict.unwrap_or(false),
            costs,
            confirm_lag: self.confirm_lag.unwrap_or(10),
            seed: self.seed.unwrap_or(0),
            iou_threshold: iou,
        })
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub solver: SolverKind,
    pub window: usize,
    pub cache_size: Option<usize>,
    pub cache_reuse: bool,
    pub strict: bool,
    pub costs: CostModel,
    pub confirm_lag: usize,
    pub seed: u64,
    pub iou_threshold: f64,
}

impl Settings {
    /// Tracker configuration for an online solver.
    pub fn tracker(&self, solver: SolverKind) -> TrackerConfig {
        let mode = match solver {
            SolverKind::Mbodssp => TrackerMode::Bounded { window: self.window },
            _ => TrackerMode::Optimal,
        };
        TrackerConfig {
            mode,
            cache_size: self.cache_size,
            cache_reuse: self.cache_reuse,
            strict_checks: self.strict,
        }
    }
}
