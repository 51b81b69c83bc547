//! Parameter sweeps: many seeded runs per point, per-run CSVs, aggregate
//! means with 95% intervals, and ordering reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{mean_ci, trend_test, Metric, SchemeRuns};
use crate::engine::{run, EngineError};
use crate::metrics::{write_csv, MetricsRow, RunMetrics};
use crate::routing::Scheme;
use crate::scenario::{load_config, preset, ConfigError, ScenarioConfig, PRESETS};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid sweep: {0}")]
    Validation(String),
    #[error("run {scheme} seed {seed} at {parameter}={value} failed: {source}")]
    Run {
        scheme: Scheme,
        seed: u64,
        parameter: String,
        value: f64,
        source: EngineError,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Preset name or config path (relative to the spec file).
    pub base: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| {
            SweepError::Config(ConfigError::Parse {
                line: None,
                column: None,
                msg: e.message().to_string(),
            })
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<(Self, ScenarioConfig), SweepError> {
        let text = fs::read_to_string(path).map_err(|source| SweepError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = Self::from_toml_str(&text)?;
        let base = spec.resolve_base(path.parent().unwrap_or(Path::new(".")))?;
        Ok((spec, base))
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.schemes.is_empty() {
            return Err(SweepError::Validation("scheme list is empty".into()));
        }
        if self.values.is_empty() {
            return Err(SweepError::Validation("value list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(SweepError::Validation("seed list is empty".into()));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(SweepError::Validation("seeds must be distinct".into()));
        }
        Ok(())
    }

    /// Loads the base config: a preset name, or a path resolved against
    /// `dir`.
    pub fn resolve_base(&self, dir: &Path) -> Result<ScenarioConfig, SweepError> {
        if PRESETS.iter().any(|(n, _)| *n == self.base) {
            return Ok(preset(&self.base)?);
        }
        let p = Path::new(&self.base);
        let p = if p.is_relative() { dir.join(p) } else { p.to_path_buf() };
        Ok(load_config(&p)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// Rows ordered by scheme (as listed), then seed (as listed).
    pub rows: Vec<MetricsRow>,
}

impl SweepPoint {
    /// Runs of one scheme keyed by seed.
    pub fn scheme_runs(&self, scheme: Scheme) -> SchemeRuns {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme.name())
            .map(|r| (r.seed, r.metrics.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: String,
    pub schemes: Vec<Scheme>,
    pub points: Vec<SweepPoint>,
}

/// Runs every configuration on a pool of `jobs` workers (0 picks the
/// number of CPUs). Results come back in input order.
pub fn run_batch(configs: &[ScenarioConfig], jobs: usize) -> Result<Vec<Result<RunMetrics, EngineError>>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    Ok(pool.install(|| configs.par_iter().map(|c| run(c).map(|o| o.metrics)).collect()))
}

/// Executes `|values| x |schemes| x |seeds|` runs in memory.
pub fn execute_sweep(spec: &SweepSpec, base: &ScenarioConfig, jobs: usize) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let mut configs = Vec::new();
    for &value in &spec.values {
        let mut point = base.clone();
        point.set_parameter(&spec.parameter, value)?;
        for &scheme in &spec.schemes {
            for &seed in &spec.seeds {
                let mut c = point.clone();
                c.scheme = scheme;
                c.seed = seed;
                configs.push(c);
            }
        }
    }
    let results = run_batch(&configs, jobs)?;
    let per_point = spec.schemes.len() * spec.seeds.len();
    let mut points = Vec::with_capacity(spec.values.len());
    let mut it = configs.iter().zip(results);
    for &value in &spec.values {
        let mut rows = Vec::with_capacity(per_point);
        for (cfg, res) in it.by_ref().take(per_point) {
            let metrics = res.map_err(|source| SweepError::Run {
                scheme: cfg.scheme,
                seed: cfg.seed,
                parameter: spec.parameter.clone(),
                value,
                source,
            })?;
            rows.push(MetricsRow {
                scheme: cfg.scheme.name().to_string(),
                seed: cfg.seed,
                metrics,
            });
        }
        points.push(SweepPoint { value, rows });
    }
    Ok(SweepResult {
        parameter: spec.parameter.clone(),
        schemes: spec.schemes.clone(),
        points,
    })
}

/// File name of one point's per-run CSV.
pub fn point_file_name(parameter: &str, value: f64) -> String {
    format!("{parameter}={value}.csv")
}

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const REPORT_FILE: &str = "report.txt";

impl SweepResult {
    /// Per-point, per-scheme mean and 95% half width of each metric.
    pub fn aggregate_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["parameter".to_string(), "value".into(), "scheme".into(), "runs".into()];
        for m in Metric::ALL {
            header.push(format!("{}_mean", m.name()));
            header.push(format!("{}_ci95", m.name()));
            header.push(format!("{}_n", m.name()));
        }
        w.write_record(&header).expect("in-memory write");
        for p in &self.points {
            for &scheme in &self.schemes {
                let runs = p.scheme_runs(scheme);
                let mut rec = vec![self.parameter.clone(), p.value.to_string(), scheme.name().to_string(), runs.len().to_string()];
                for m in Metric::ALL {
                    let vals: Vec<f64> = runs.values().filter_map(|r| m.of(r)).collect();
                    match mean_ci(&vals) {
                        Some(ci) => {
                            rec.push(ci.mean.to_string());
                            rec.push(ci.half_width.map(|h| h.to_string()).unwrap_or_default());
                            rec.push(ci.n.to_string());
                        }
                        None => rec.extend([String::new(), String::new(), "0".into()]),
                    }
                }
                w.write_record(&rec).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "== {} = {} ==", self.parameter, p.value);
            let runs: Vec<(String, SchemeRuns)> = self
                .schemes
                .iter()
                .map(|&s| (s.name().to_string(), p.scheme_runs(s)))
                .collect();
            match trend_test(&runs) {
                Ok(r) => out.push_str(&r.to_text()),
                Err(e) => {
                    let _ = writeln!(out, "{e}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn point_csv(&self, point: &SweepPoint) -> String {
        let mut buf = Vec::new();
        write_csv(&mut buf, &point.rows).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Writes per-point CSVs, the aggregate and the report into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SweepError::Io { path, source }
        };
        fs::create_dir_all(out_dir).map_err(io(out_dir))?;
        let mut files = BTreeMap::new();
        for p in &self.points {
            files.insert(point_file_name(&self.parameter, p.value), self.point_csv(p));
        }
        files.insert(AGGREGATE_FILE.to_string(), self.aggregate_csv());
        files.insert(REPORT_FILE.to_string(), self.report());
        let mut written = Vec::new();
        for (name, body) in files {
            let path = out_dir.join(name);
            fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs a sweep and persists its outputs.
pub fn run_sweep(spec: &SweepSpec, base: &ScenarioConfig, out_dir: &Path, jobs: usize) -> Result<SweepResult, SweepError> {
    let result = execute_sweep(spec, base, jobs)?;
    result.write(out_dir)?;
    Ok(result)
}
