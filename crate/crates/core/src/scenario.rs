//! Scenario configuration: TOML ingestion, validation and shipped presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::{MapError, MapGraph, UniformRange};
use crate::routing::Scheme;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {msg}", location(.line, .column))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        msg: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("parse error at line {l}, column {c}"),
        _ => "parse error".to_string(),
    }
}

/// How often new messages appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    /// One message per interval for the whole network.
    #[default]
    Network,
    /// One message per interval from every mobile node.
    PerNode,
}

/// Whether delivery acknowledgements spread between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AckMode {
    /// On for the utility-aware scheme only.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSource {
    /// Lattice split into four quadrant areas, each with its own POIs.
    Grid {
        cols: usize,
        rows: usize,
        spacing_m: f64,
        pois_per_area: usize,
    },
    /// Map text file (`V x y`, `E i j`, `P group i`); relative paths resolve
    /// against the config file's directory.
    File { path: PathBuf },
}

impl MapSource {
    pub fn build(&self) -> Result<MapGraph, ConfigError> {
        let map = match self {
            MapSource::Grid {
                cols,
                rows,
                spacing_m,
                pois_per_area,
            } => MapGraph::four_area_grid(*cols, *rows, *spacing_m, *pois_per_area)?,
            MapSource::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                MapGraph::from_text(&text)?
            }
        };
        map.ensure_connected()?;
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MobilityConfig {
    /// Random waypoint on an open rectangle.
    Rwp {
        width_m: f64,
        height_m: f64,
        speed_mps: UniformRange,
        wait_s: UniformRange,
    },
    /// Shortest-path walks on a map with per-group POI preference. Nodes are
    /// assigned to POI groups round-robin.
    PoiMap {
        map: MapSource,
        speed_mps: UniformRange,
        wait_s: UniformRange,
        interest: f64,
    },
}

impl MobilityConfig {
    pub fn speed(&self) -> UniformRange {
        match self {
            MobilityConfig::Rwp { speed_mps, .. } | MobilityConfig::PoiMap { speed_mps, .. } => *speed_mps,
        }
    }

    pub fn wait(&self) -> UniformRange {
        match self {
            MobilityConfig::Rwp { wait_s, .. } | MobilityConfig::PoiMap { wait_s, .. } => *wait_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DestinationConfig {
    /// One destination in the middle of the area.
    Center,
    Fixed { positions: Vec<[f64; 2]> },
    /// `count` destinations near distinct POIs, displaced by `variation_m`.
    Poi { count: usize, variation_m: f64 },
}

fn default_slot() -> f64 {
    1.0
}

fn default_window() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub scheme: Scheme,
    pub seed: u64,
    /// Mobile nodes; destinations come on top.
    pub nodes: usize,
    pub range_m: f64,
    pub bandwidth_bps: u64,
    #[serde(default = "default_slot")]
    pub slot_s: f64,
    /// Copy budget per message.
    pub copies: u32,
    pub ttl_s: f64,
    pub message_bytes: u64,
    pub generation_interval_s: f64,
    #[serde(default)]
    pub generation: GenerationMode,
    pub warmup_s: f64,
    /// Absolute time at which generation stops.
    pub generation_end_s: f64,
    pub drain_s: f64,
    pub buffer_bytes: u64,
    /// Look-ahead for the projected-distance metric.
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default)]
    pub acks: AckMode,
    pub mobility: MobilityConfig,
    pub destinations: DestinationConfig,
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Validation(format!("{name} must be > 0 (got {v})")))
    }
}

fn range_ok(name: &str, r: UniformRange, allow_zero: bool) -> Result<(), ConfigError> {
    let lo_ok = if allow_zero { r.min >= 0.0 } else { r.min > 0.0 };
    if r.min.is_finite() && r.max.is_finite() && lo_ok && r.max >= r.min {
        Ok(())
    } else {
        let bound = if allow_zero { "0 <= min" } else { "0 < min" };
        Err(ConfigError::Validation(format!(
            "{name} must satisfy {bound} <= max (got [{}, {}])",
            r.min, r.max
        )))
    }
}

impl ScenarioConfig {
    /// Parses and validates a TOML document. Relative map paths are kept
    /// as written; see [`load_config`] for file-relative resolution.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    (Some(line), Some(column))
                }
                None => (None, None),
            };
            ConfigError::Parse {
                line,
                column,
                msg: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("range_m", self.range_m)?;
        positive("slot_s", self.slot_s)?;
        positive("ttl_s", self.ttl_s)?;
        positive("generation_interval_s", self.generation_interval_s)?;
        positive("warmup_s", self.warmup_s)?;
        positive("generation_end_s", self.generation_end_s)?;
        positive("drain_s", self.drain_s)?;
        if !(self.window_s.is_finite() && self.window_s >= 0.0) {
            return Err(ConfigError::Validation(format!("window_s must be >= 0 (got {})", self.window_s)));
        }
        if self.bandwidth_bps == 0 {
            return Err(ConfigError::Validation("bandwidth_bps must be > 0".into()));
        }
        if self.copies < 1 {
            return Err(ConfigError::Validation("copies must be >= 1".into()));
        }
        if self.message_bytes == 0 {
            return Err(ConfigError::Validation("message_bytes must be > 0".into()));
        }
        if self.message_bytes > self.buffer_bytes {
            return Err(ConfigError::Validation(format!(
                "message_bytes ({}) exceeds buffer_bytes ({})",
                self.message_bytes, self.buffer_bytes
            )));
        }
        if self.generation_end_s <= self.warmup_s {
            return Err(ConfigError::Validation(format!(
                "generation_end_s ({}) must be after warmup_s ({})",
                self.generation_end_s, self.warmup_s
            )));
        }
        range_ok("speed_mps", self.mobility.speed(), false)?;
        range_ok("wait_s", self.mobility.wait(), true)?;
        match &self.mobility {
            MobilityConfig::Rwp { width_m, height_m, .. } => {
                positive("width_m", *width_m)?;
                positive("height_m", *height_m)?;
            }
            MobilityConfig::PoiMap { interest, map, .. } => {
                if !(0.0..=1.0).contains(interest) {
                    return Err(ConfigError::Validation(format!("interest must be in [0, 1] (got {interest})")));
                }
                if let MapSource::Grid { cols, rows, spacing_m, .. } = map {
                    positive("spacing_m", *spacing_m)?;
                    if *cols < 2 || *rows < 2 {
                        return Err(ConfigError::Validation("grid needs at least 2 columns and 2 rows".into()));
                    }
                }
            }
        }
        match &self.destinations {
            DestinationConfig::Center => {}
            DestinationConfig::Fixed { positions } => {
                if positions.is_empty() {
                    return Err(ConfigError::Validation("fixed destinations need at least one position".into()));
                }
            }
            DestinationConfig::Poi { count, variation_m } => {
                if *count == 0 {
                    return Err(ConfigError::Validation("destination count must be >= 1".into()));
                }
                if !(variation_m.is_finite() && *variation_m >= 0.0) {
                    return Err(ConfigError::Validation(format!("variation_m must be >= 0 (got {variation_m})")));
                }
                if matches!(self.mobility, MobilityConfig::Rwp { .. }) {
                    return Err(ConfigError::Validation("poi destinations need poi-map mobility".into()));
                }
            }
        }
        Ok(())
    }

    /// Whether delivery acknowledgements are exchanged in this run.
    pub fn acks_enabled(&self) -> bool {
        match self.acks {
            AckMode::Auto => self.scheme == Scheme::Tbhgr,
            AckMode::On => true,
            AckMode::Off => false,
        }
    }

    /// Simulated horizon in seconds.
    pub fn horizon(&self) -> f64 {
        self.generation_end_s + self.drain_s
    }

    /// Overrides one numeric field by name, as used by sweeps. Fails on
    /// names that do not apply to this config.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let unknown = || ConfigError::UnknownParameter(name.to_string());
        match name {
            "ttl_s" => self.ttl_s = value,
            "ttl_min" => self.ttl_s = value * 60.0,
            "range_m" => self.range_m = value,
            "copies" => self.copies = value as u32,
            "nodes" => self.nodes = value as usize,
            "seed" => self.seed = value as u64,
            "window_s" => self.window_s = value,
            "buffer_bytes" => self.buffer_bytes = value as u64,
            "message_bytes" => self.message_bytes = value as u64,
            "generation_interval_s" => self.generation_interval_s = value,
            "speed_mps" => match &mut self.mobility {
                MobilityConfig::Rwp { speed_mps, .. } | MobilityConfig::PoiMap { speed_mps, .. } => {
                    *speed_mps = UniformRange::fixed(value)
                }
            },
            "wait_max_s" => match &mut self.mobility {
                MobilityConfig::Rwp { wait_s, .. } | MobilityConfig::PoiMap { wait_s, .. } => {
                    *wait_s = UniformRange::new(wait_s.min.min(value), value)
                }
            },
            "interest" => match &mut self.mobility {
                MobilityConfig::PoiMap { interest, .. } => *interest = value,
                _ => return Err(unknown()),
            },
            "destinations" => match &mut self.destinations {
                DestinationConfig::Poi { count, .. } => *count = value as usize,
                _ => return Err(unknown()),
            },
            "variation_m" => match &mut self.destinations {
                DestinationConfig::Poi { variation_m, .. } => *variation_m = value,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        }
        self.validate()
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let MobilityConfig::PoiMap {
            map: MapSource::File { path },
            ..
        } = &mut self.mobility
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Shipped scenario presets as `(name, toml)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("rwp-small", include_str!("../presets/rwp-small.toml")),
    ("rwp-analytic", include_str!("../presets/rwp-analytic.toml")),
    ("poi-small", include_str!("../presets/poi-small.toml")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::from_toml_str(text)
}

/// Reads a config file, resolving relative map paths against its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// A preset name or a path to a config file.
pub fn load_config_or_preset(arg: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(arg);
    if path.exists() {
        load_config(path)
    } else if PRESETS.iter().any(|(n, _)| *n == arg) {
        preset(arg)
    } else {
        load_config(path)
    }
}
