//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PunctureSet};
use crate::loops::{GnParams, PLLoop};
use crate::mcmc::{SamplerConfig, SweepMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub punctures: Vec<Point>,
    /// Loop file with the class reference, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_loop_path: Option<PathBuf>,
    /// Inline reference loop; takes precedence over the path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_loop: Option<Vec<Point>>,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default)]
    pub burnin: u64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "default_sweep_mode")]
    pub sweep_mode: SweepMode,
    #[serde(default)]
    pub check_word_every: u64,
}

fn default_iterations() -> u64 {
    1000
}

fn default_thin() -> u64 {
    100
}

pub fn default_deltas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_sweep_mode() -> SweepMode {
    SweepMode::RandomPermutation
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

fn at_line(text: &str, key: &str, msg: String) -> Error {
    match line_of_key(text, key) {
        Some(line) => Error::InvalidInput(format!("config line {line}: {msg}")),
        None => Error::InvalidInput(format!("config: {msg}")),
    }
}

impl ExperimentConfig {
    /// Parse and check field-level invariants. Errors name the offending line.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::InvalidInput(format!(
                "config line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        if cfg.punctures.is_empty() {
            return Err(at_line(
                text,
                "punctures",
                "at least one puncture is required".into(),
            ));
        }
        if let Err(e) = PunctureSet::new(cfg.punctures.clone()) {
            return Err(at_line(text, "punctures", e.to_string()));
        }
        if cfg.n < 2 {
            return Err(at_line(
                text,
                "n",
                format!("n must be at least 2, got {}", cfg.n),
            ));
        }
        if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
            return Err(at_line(
                text,
                "R",
                format!("R must be positive, got {}", cfg.radius),
            ));
        }
        if cfg.iterations < 1 {
            return Err(at_line(
                text,
                "iterations",
                "iterations must be at least 1".into(),
            ));
        }
        if cfg.thin < 1 {
            return Err(at_line(text, "thin", "thin must be at least 1".into()));
        }
        if cfg.deltas.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(at_line(
                text,
                "deltas",
                "deltas must be sorted ascending".into(),
            ));
        }
        if let Some(eps) = cfg.eps {
            let bound = cfg.radius / (cfg.n + 1) as f64;
            if !(eps > 0.0 && eps <= bound) {
                return Err(at_line(
                    text,
                    "eps",
                    format!("eps must lie in (0, R/(n+1) = {bound}], got {eps}"),
                ));
            }
        }
        if cfg.reference_loop.is_none() && cfg.reference_loop_path.is_none() {
            return Err(Error::InvalidInput(
                "config: one of referenceLoop or referenceLoopPath is required".into(),
            ));
        }
        Ok(cfg)
    }

    /// Load a config file; a relative reference path is resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(p) = &cfg.reference_loop_path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.reference_loop_path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn reference(&self) -> Result<Vec<Point>> {
        if let Some(r) = &self.reference_loop {
            return Ok(r.clone());
        }
        let path = self
            .reference_loop_path
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("no reference loop configured".into()))?;
        let lp = PLLoop::load(path).map_err(|e| {
            Error::InvalidInput(format!(
                "cannot load reference loop {}: {e}",
                path.display()
            ))
        })?;
        Ok(lp.into_vertices())
    }

    pub fn punctures(&self) -> Result<PunctureSet> {
        PunctureSet::new(self.punctures.clone())
    }

    pub fn params(&self) -> Result<GnParams> {
        GnParams::new(self.n, self.radius, self.punctures()?, self.reference()?)
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let mut s = SamplerConfig::new(self.params()?);
        if let Some(eps) = self.eps {
            s.eps = eps;
        }
        s.sweep_mode = self.sweep_mode;
        s.iterations = self.iterations;
        s.thin = self.thin;
        s.burnin = self.burnin;
        s.seed = self.seed;
        s.check_word_every = self.check_word_every;
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "punctures": [[1.35, 1.35], [-1.35, 1.35], [-1.35, -1.35], [1.35, -1.35]],
  "referenceLoop": [[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]],
  "n": 59,
  "R": 20.0,
  "seed": 7
}"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(GOOD).unwrap();
        assert_eq!(c.n, 59);
        assert_eq!(c.radius, 20.0);
        assert_eq!(c.thin, 100);
        assert_eq!(c.sweep_mode, SweepMode::RandomPermutation);
        let s = c.sampler().unwrap();
        assert_eq!(s.seed, 7);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = GOOD.replace("\"n\": 59", "\"n\": 1");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
        let bad = GOOD.replace("\"R\": 20.0", "\"R\": -2");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 5"), "{e}");
        let bad = GOOD.replace("\"seed\": 7", "\"seed\": 7,\n  \"bogus\": 1");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 7"), "{e}");
    }

    #[test]
    fn small_n_fails_reach_check() {
        let bad = GOOD.replace("\"n\": 59", "\"n\": 10");
        let c = ExperimentConfig::from_json(&bad).unwrap();
        let e = c.params().unwrap_err().to_string();
        assert!(e.contains("reach"), "{e}");
    }
}
