//! Flat key=value run configuration: defaults, optional config file, flag
//! overrides, and validation into typed solver inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sourcesink::grid::{RadialGrid, ZetaGrid};
use sourcesink::model::ModelParams;
use sourcesink::mollifier::Mollifier;

use crate::AppError;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Collocation,
    Variational,
    Both,
}

/// Fully resolved run configuration. Every field has a documented default;
/// file values override defaults and command-line flags override both.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub d: u32,
    pub p: f64,
    pub alpha: f64,
    /// Mollifier inverse width.
    pub n: u32,
    /// Radial mesh size.
    pub nodes: usize,
    /// Outer radius; 0 = auto (max(20, 6 sqrt(t_end))).
    pub r_out: f64,
    /// Probe radius R for boundary traces and sandwich anchoring.
    pub r_probe: f64,
    pub t_end: f64,
    /// Number of snapshot times (log-spaced up to t_end).
    pub outputs: usize,
    pub dt0: f64,
    /// 0 = auto (t_end/2000).
    pub dt_max: f64,
    /// Profile grid: 0 = auto-recommended left endpoint.
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub profile_nodes: usize,
    pub tol: f64,
    pub method: Method,
    pub linear_mode: bool,
    /// Similarity-frame window and resolution.
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub frame_count: usize,
    /// Convergence acceptance threshold on the final metric.
    pub metric_threshold: f64,
    /// Sweep grids (comma-separated lists).
    pub sweep_d: Vec<u32>,
    pub sweep_p: Vec<f64>,
    pub sweep_alpha: Vec<f64>,
    pub sweep_t_end: f64,
    /// Linear-table ranges.
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub r_count: usize,
    pub t_count: usize,
    pub out_dir: String,
    pub tag: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 2,
            p: 2.0,
            alpha: 1.0,
            n: 64,
            nodes: 4096,
            r_out: 0.0,
            r_probe: 1.0,
            t_end: 1000.0,
            outputs: 24,
            dt0: 1e-4,
            dt_max: 0.0,
            zeta_min: 0.0,
            zeta_max: 2.5,
            profile_nodes: 2000,
            tol: 1e-8,
            method: Method::Both,
            linear_mode: false,
            zeta_lo: -2.0,
            zeta_hi: 1.0,
            frame_count: 60,
            metric_threshold: 0.05,
            sweep_d: vec![2],
            sweep_p: vec![1.5, 2.0, 4.0],
            sweep_alpha: vec![1.0],
            sweep_t_end: 1000.0,
            r_min: 0.05,
            r_max: 10.0,
            t_min: 0.1,
            t_max: 100.0,
            r_count: 64,
            t_count: 8,
            out_dir: String::new(),
            tag: String::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, AppError> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| AppError::config(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, AppError> {
    value
        .split(',')
        .map(|s| parse::<T>(key, s))
        .collect::<Result<Vec<T>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(AppError::config(key, "empty list"))
            } else {
                Ok(v)
            }
        })
}

impl RunConfig {
    /// Apply `key = value` lines from a config file (# starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config("config", format!("cannot read {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(AppError::config(
                    "config",
                    format!("line {}: expected key=value, got `{raw}`", lineno + 1),
                ));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set a single key; unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), AppError> {
        match key {
            "d" => self.d = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "nodes" => self.nodes = parse(key, value)?,
            "r_out" => self.r_out = parse(key, value)?,
            "r_probe" => self.r_probe = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "outputs" => self.outputs = parse(key, value)?,
            "dt0" => self.dt0 = parse(key, value)?,
            "dt_max" => self.dt_max = parse(key, value)?,
            "zeta_min" => self.zeta_min = parse(key, value)?,
            "zeta_max" => self.zeta_max = parse(key, value)?,
            "profile_nodes" => self.profile_nodes = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "method" => {
                self.method = match value {
                    "collocation" => Method::Collocation,
                    "variational" => Method::Variational,
                    "both" => Method::Both,
                    other => {
                        return Err(AppError::config(
                            key,
                            format!("`{other}` is not collocation|variational|both"),
                        ))
                    }
                }
            }
            "linear_mode" => self.linear_mode = parse(key, value)?,
            "zeta_lo" => self.zeta_lo = parse(key, value)?,
            "zeta_hi" => self.zeta_hi = parse(key, value)?,
            "frame_count" => self.frame_count = parse(key, value)?,
            "metric_threshold" => self.metric_threshold = parse(key, value)?,
            "sweep_d" => self.sweep_d = parse_list(key, value)?,
            "sweep_p" => self.sweep_p = parse_list(key, value)?,
            "sweep_alpha" => self.sweep_alpha = parse_list(key, value)?,
            "sweep_t_end" => self.sweep_t_end = parse(key, value)?,
            "r_min" => self.r_min = parse(key, value)?,
            "r_max" => self.r_max = parse(key, value)?,
            "t_min" => self.t_min = parse(key, value)?,
            "t_max" => self.t_max = parse(key, value)?,
            "r_count" => self.r_count = parse(key, value)?,
            "t_count" => self.t_count = parse(key, value)?,
            "out_dir" => self.out_dir = value.to_string(),
            "tag" => self.tag = value.to_string(),
            other => return Err(AppError::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Resolved auto values.
    pub fn r_out_resolved(&self, t_end: f64) -> f64 {
        if self.r_out > 0.0 {
            self.r_out
        } else {
            (6.0 * t_end.sqrt()).max(20.0)
        }
    }

    pub fn dt_max_resolved(&self, t_end: f64) -> f64 {
        if self.dt_max > 0.0 {
            self.dt_max
        } else {
            t_end / 2000.0
        }
    }

    /// Typed model parameters; admissibility failures surface as config
    /// errors (exit code 2).
    pub fn model(&self) -> Result<ModelParams, AppError> {
        ModelParams::new(self.d, self.p, self.alpha)
            .map_err(|e| AppError::config("d/p/alpha", e.to_string()))
    }

    pub fn mollifier(&self) -> Result<Mollifier, AppError> {
        Mollifier::new(self.n, self.d).map_err(|e| AppError::config("n", e.to_string()))
    }

    pub fn zeta_grid(&self, params: &ModelParams) -> Result<ZetaGrid, AppError> {
        let grid = if self.zeta_min == 0.0 {
            ZetaGrid::recommended(params, self.profile_nodes)
        } else {
            ZetaGrid::uniform(self.zeta_min, self.zeta_max, self.profile_nodes)
        };
        grid.map_err(|e| AppError::config("zeta_min/zeta_max/profile_nodes", e.to_string()))
    }

    pub fn radial_grid(&self, t_end: f64) -> Result<RadialGrid, AppError> {
        let r_out = self.r_out_resolved(t_end);
        let h0 = 1.0 / (12.0 * f64::from(self.n));
        RadialGrid::graded(self.d, self.nodes, r_out, h0)
            .map_err(|e| AppError::config("nodes/r_out/n", e.to_string()))
    }

    /// Log-spaced output times ending at t_end.
    pub fn output_times(&self, t_end: f64) -> Vec<f64> {
        let lo = (t_end / 1000.0).max(self.dt0 * 10.0);
        let k = self.outputs.max(2);
        (0..k)
            .map(|i| lo * (t_end / lo).powf(i as f64 / (k - 1) as f64))
            .collect()
    }

    /// One-line record of every resolved key, embedded in CSV headers so any
    /// output file identifies the run that produced it.
    pub fn resolved_line(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("d", self.d.to_string());
        map.insert("p", self.p.to_string());
        map.insert("alpha", self.alpha.to_string());
        map.insert("n", self.n.to_string());
        map.insert("nodes", self.nodes.to_string());
        map.insert("r_out", self.r_out.to_string());
        map.insert("r_probe", self.r_probe.to_string());
        map.insert("t_end", self.t_end.to_string());
        map.insert("outputs", self.outputs.to_string());
        map.insert("dt0", self.dt0.to_string());
        map.insert("dt_max", self.dt_max.to_string());
        map.insert("zeta_min", self.zeta_min.to_string());
        map.insert("zeta_max", self.zeta_max.to_string());
        map.insert("profile_nodes", self.profile_nodes.to_string());
        map.insert("tol", self.tol.to_string());
        map.insert(
            "method",
            match self.method {
                Method::Collocation => "collocation".into(),
                Method::Variational => "variational".into(),
                Method::Both => "both".into(),
            },
        );
        map.insert("linear_mode", self.linear_mode.to_string());
        map.insert("zeta_lo", self.zeta_lo.to_string());
        map.insert("zeta_hi", self.zeta_hi.to_string());
        map.insert("frame_count", self.frame_count.to_string());
        map.insert("metric_threshold", self.metric_threshold.to_string());
        map.insert("sweep_t_end", self.sweep_t_end.to_string());
        let mut line = String::new();
        for (k, v) in map {
            let _ = write!(line, "{k}={v} ");
        }
        line.trim_end().to_string()
    }

    pub fn out_path(&self, default_tag: &str, suffix: &str) -> std::path::PathBuf {
        let dir = if !self.out_dir.is_empty() {
            self.out_dir.clone()
        } else if let Ok(env_dir) = std::env::var("SOURCESINK_OUTDIR") {
            env_dir
        } else {
            ".".to_string()
        };
        let tag = if self.tag.is_empty() { default_tag } else { &self.tag };
        Path::new(&dir).join(format!("{tag}_{suffix}"))
    }
}
