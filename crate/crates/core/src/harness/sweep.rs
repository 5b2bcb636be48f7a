use std::path::Path;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, ExperimentReport};
use crate::error::{ColError, Result};

pub const MAX_AXES: usize = 8;
pub const MAX_POINTS: usize = 10_000;

/// One sweep axis: a dotted config path and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub key: Vec<String>,
    pub values: Vec<toml::Value>,
}

impl GridAxis {
    pub fn key_string(&self) -> String {
        self.key.join(".")
    }
}

/// Parses `key=v1,v2;other.key=v3`. Keys are dotted paths into the config
/// (numeric segments index arrays, e.g. `algorithms.0.schedule.eta`). Values
/// are TOML scalars; anything that does not parse as one is a string.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>> {
    let err = |msg: String| ColError::Parse { line: 1, msg };
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| err(format!("`{part}` is not key=values")))?;
        let key: Vec<String> = key.trim().split('.').map(str::to_string).collect();
        if key
            .iter()
            .any(|k| k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        {
            return Err(err(format!("bad key `{}`", key.join("."))));
        }
        let values = values
            .split(',')
            .map(|v| parse_value(v.trim()))
            .collect::<Result<Vec<_>>>()?;
        if axes.iter().any(|a: &GridAxis| a.key == key) {
            return Err(err(format!("key `{}` given twice", key.join("."))));
        }
        axes.push(GridAxis { key, values });
    }
    if axes.is_empty() {
        return Err(err("empty grid".into()));
    }
    if axes.len() > MAX_AXES {
        return Err(err(format!("at most {MAX_AXES} axes")));
    }
    let points = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()));
    if points.is_none_or(|p| p > MAX_POINTS) {
        return Err(err(format!("grid exceeds {MAX_POINTS} points")));
    }
    Ok(axes)
}

fn parse_value(s: &str) -> Result<toml::Value> {
    if s.is_empty() {
        return Err(ColError::Parse {
            line: 1,
            msg: "empty grid value".into(),
        });
    }
    #[derive(serde::Deserialize)]
    struct One {
        v: toml::Value,
    }
    match toml::from_str::<One>(&format!("v = {s}")) {
        Ok(One { v }) if !matches!(v, toml::Value::Array(_) | toml::Value::Table(_)) => Ok(v),
        _ => Ok(toml::Value::String(s.to_string())),
    }
}

/// Every combination of axis values, first axis slowest.
pub fn grid_points(axes: &[GridAxis]) -> Vec<Vec<toml::Value>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// `config` with each axis key set to the matching value.
pub fn apply_point(
    config: &ExperimentConfig,
    axes: &[GridAxis],
    point: &[toml::Value],
) -> Result<ExperimentConfig> {
    let mut tree = toml::Value::try_from(config).map_err(|e| ColError::Config(e.to_string()))?;
    for (axis, value) in axes.iter().zip(point) {
        let (last, parents) = axis.key.split_last().expect("keys are non-empty");
        let mut node = &mut tree;
        for seg in parents {
            node = child(node, seg).ok_or_else(|| {
                ColError::Config(format!("no config key `{}`", axis.key_string()))
            })?;
        }
        match node {
            toml::Value::Table(t) => {
                t.insert(last.clone(), value.clone());
            }
            toml::Value::Array(a) => {
                let slot = last.parse::<usize>().ok().and_then(|i| a.get_mut(i));
                *slot.ok_or_else(|| {
                    ColError::Config(format!("no config key `{}`", axis.key_string()))
                })? = value.clone();
            }
            _ => {
                return Err(ColError::Config(format!(
                    "`{}` does not name a config field",
                    axis.key_string()
                )))
            }
        }
    }
    let text = toml::to_string(&tree).map_err(|e| ColError::Config(e.to_string()))?;
    ExperimentConfig::from_toml(&text)
}

fn child<'a>(node: &'a mut toml::Value, seg: &str) -> Option<&'a mut toml::Value> {
    match node {
        toml::Value::Table(t) => t.get_mut(seg),
        toml::Value::Array(a) => a.get_mut(seg.parse::<usize>().ok()?),
        _ => None,
    }
}

/// Runs one experiment per grid point into `out_dir/point_NNN`. Every point
/// is validated before the first one runs.
pub fn run_sweep(
    config: &ExperimentConfig,
    axes: &[GridAxis],
    out_dir: &Path,
) -> Result<Vec<ExperimentReport>> {
    let points = grid_points(axes);
    let configs = points
        .iter()
        .map(|p| {
            let mut c = apply_point(config, axes, p)?;
            c.name = format!("{}[{}]", config.name, describe(axes, p));
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir)?;
    let mut index = csv::Writer::from_path(out_dir.join("sweep.csv"))
        .map_err(|e| ColError::Config(e.to_string()))?;
    let mut header = vec!["point".to_string()];
    header.extend(axes.iter().map(GridAxis::key_string));
    index
        .write_record(&header)
        .map_err(|e| ColError::Config(e.to_string()))?;
    let mut reports = Vec::with_capacity(configs.len());
    for (i, (cfg, p)) in configs.iter().zip(&points).enumerate() {
        let name = format!("point_{i:03}");
        let mut rec = vec![name.clone()];
        rec.extend(p.iter().map(value_text));
        index
            .write_record(&rec)
            .map_err(|e| ColError::Config(e.to_string()))?;
        reports.push(run_experiment(cfg, &out_dir.join(name))?);
    }
    index.flush()?;
    Ok(reports)
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn describe(axes: &[GridAxis], point: &[toml::Value]) -> String {
    axes.iter()
        .zip(point)
        .map(|(a, v)| format!("{}={}", a.key_string(), value_text(v)))
        .collect::<Vec<_>>()
        .join(",")
}
