//! Flat `[section] key = value` run configuration.
//!
//! No nesting, no quoting: values are whitespace-separated tokens, `#`
//! starts a comment. Matrices are nine numbers in row-major order.

use expanse_core::{FieldSign, GasParams};
use nalgebra::Matrix3;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Raw key-value store keyed by `section.key`.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.split_once('#') {
                Some((head, _)) => head.trim(),
                None => raw_line.trim(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
            };
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            values.insert(full, value.trim().to_string());
        }
        Ok(RawConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: `{s}` is not a number"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: `{s}` is not an integer"))),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("on") | Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("off") | Some("false") | Some("0") | Some("no") => Ok(false),
            Some(s) => err(format!("{key}: `{s}` is not a boolean (on/off)")),
        }
    }

    pub fn get_matrix(&self, key: &str, default: Matrix3<f64>) -> Result<Matrix3<f64>, ConfigError> {
        let Some(s) = self.get(key) else {
            return Ok(default);
        };
        let nums: Result<Vec<f64>, _> = s.split_whitespace().map(str::parse).collect();
        let nums = nums.map_err(|_| ConfigError(format!("{key}: expected nine numbers")))?;
        if nums.len() != 9 {
            return err(format!("{key}: expected nine numbers, got {}", nums.len()));
        }
        Ok(Matrix3::from_row_slice(&nums))
    }

    pub fn get_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| ConfigError(format!("{key}: `{t}` is not a number")))
                })
                .collect(),
        }
    }
}

/// The known scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Affine,
    FieldValidation,
    Radial,
    Full3d,
    Norms,
    Sweep,
}

impl Scenario {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "affine" => Ok(Scenario::Affine),
            "field_validation" => Ok(Scenario::FieldValidation),
            "radial" => Ok(Scenario::Radial),
            "full3d" => Ok(Scenario::Full3d),
            "norms" => Ok(Scenario::Norms),
            "sweep" => Ok(Scenario::Sweep),
            other => err(format!(
                "unknown scenario `{other}` (expected affine, field_validation, radial, full3d, norms, sweep)"
            )),
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub params: GasParams,
    pub a0: Matrix3<f64>,
    pub a1: Matrix3<f64>,
    pub t_end: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_radial: usize,
    pub cfl: f64,
    pub max_dtau: f64,
    pub force_cadence: usize,
    pub field_enabled: bool,
    pub tau_max: f64,
    pub sample_every: usize,
    pub theta0_amp: f64,
    pub v0_amp: f64,
    pub norm_order: usize,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path, out_override: Option<&Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let raw = RawConfig::parse(&text)?;
        Self::from_raw(&raw, out_override)
    }

    pub fn from_raw(raw: &RawConfig, out_override: Option<&Path>) -> Result<Self, ConfigError> {
        let scenario = match raw.get("run.scenario") {
            Some(s) => Scenario::parse(s)?,
            None => return err("missing required key run.scenario"),
        };
        let out_dir = match out_override {
            Some(p) => p.to_path_buf(),
            None => PathBuf::from(raw.get("run.out").unwrap_or("run-output")),
        };
        let gamma = raw.get_f64("gas.gamma", 1.5)?;
        let delta = raw.get_f64("gas.delta", 1e-2)?;
        let sign = match raw.get("gas.sign").unwrap_or("+1") {
            "+1" | "attractive" => FieldSign::Attractive,
            "-1" | "repulsive" => FieldSign::Repulsive,
            other => return err(format!("gas.sign: `{other}` (expected +1 or -1)")),
        };
        let params = GasParams::new(gamma, delta, sign)
            .map_err(|e| ConfigError(format!("invalid gas parameters: {e}")))?;
        let cfg = RunConfig {
            scenario,
            out_dir,
            params,
            a0: raw.get_matrix("background.a0", Matrix3::identity())?,
            a1: raw.get_matrix("background.a1", Matrix3::identity())?,
            t_end: raw.get_f64("background.t_end", 1000.0)?,
            n_r: raw.get_usize("grid.n_r", 16)?,
            n_theta: raw.get_usize("grid.n_theta", 8)?,
            n_phi: raw.get_usize("grid.n_phi", 16)?,
            n_radial: raw.get_usize("grid.n_radial", 128)?,
            cfl: raw.get_f64("stepper.cfl", 0.6)?,
            max_dtau: raw.get_f64("stepper.max_dtau", 0.05)?,
            force_cadence: raw.get_usize("stepper.force_cadence", 1)?,
            field_enabled: raw.get_bool("stepper.field", true)?,
            tau_max: raw.get_f64("evolve.tau_max", 2.0)?,
            sample_every: raw.get_usize("evolve.sample_every", 5)?,
            theta0_amp: raw.get_f64("evolve.theta0_amp", 0.0)?,
            v0_amp: raw.get_f64("evolve.v0_amp", 0.0)?,
            norm_order: raw.get_usize("norms.order", 1)?,
            gammas: raw.get_f64_list("norms.gammas", &[1.5, 4.0 / 3.0, 1.25])?,
            deltas: raw.get_f64_list("sweep.deltas", &[1e-1, 1e-2, 1e-3, 1e-4])?,
        };
        if cfg.t_end <= 0.0 {
            return err("background.t_end must be positive");
        }
        if cfg.tau_max <= 0.0 {
            return err("evolve.tau_max must be positive");
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_defaults_and_overrides() {
        let raw = RawConfig::parse(
            "[run]\nscenario = radial\nout = somewhere\n\n[gas]\ngamma = 2.0 # comment\ndelta = 1e-3\n[grid]\nn_radial = 64\n",
        )
        .unwrap();
        let cfg = RunConfig::from_raw(&raw, None).unwrap();
        assert_eq!(cfg.scenario, Scenario::Radial);
        assert_eq!(cfg.out_dir, PathBuf::from("somewhere"));
        assert_eq!(cfg.params.gamma, 2.0);
        assert_eq!(cfg.n_radial, 64);
        assert_eq!(cfg.n_r, 16); // default
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RawConfig::parse("[run]\nscenario radial\n").is_err());
        let raw = RawConfig::parse("[run]\nscenario = warp\n").unwrap();
        assert!(RunConfig::from_raw(&raw, None).is_err());
        let raw = RawConfig::parse("[run]\nscenario = affine\n[gas]\ngamma = 0.5\n").unwrap();
        assert!(RunConfig::from_raw(&raw, None).is_err());
    }

    #[test]
    fn parses_matrices_and_lists() {
        let raw = RawConfig::parse(
            "[run]\nscenario = sweep\n[background]\na1 = 1.2 0 0 0 1 0 0 0 0.8\n[sweep]\ndeltas = 1e-1 1e-2\n",
        )
        .unwrap();
        let cfg = RunConfig::from_raw(&raw, None).unwrap();
        assert_eq!(cfg.a1[(0, 0)], 1.2);
        assert_eq!(cfg.deltas, vec![1e-1, 1e-2]);
    }
}
