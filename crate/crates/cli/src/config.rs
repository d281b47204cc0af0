//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, keys are case-sensitive
//! (`l` is the curvature coefficient, `L` the beam length). Unknown and
//! duplicated keys are rejected with their line number; missing keys
//! take the documented defaults.

use std::collections::HashSet;
use std::path::Path;

use bresse_core::integrate::InitialData;
use bresse_core::model::PhysicalParameters;
use bresse_core::spectral::{SweepConfig, SWEEP_DEFAULT_COUNT};
use bresse_core::{Error, Result};

/// Everything a subcommand needs, before grid assembly.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: PhysicalParameters,
    /// interior node count of the base grid
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    /// trace recording stride; derived from dt when absent
    pub record_every: Option<usize>,
    pub initial: InitialData,
    pub seed: u64,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_count: usize,
    pub robust: bool,
    /// sample the sweep at per-bin eigenfrequencies instead of a fixed grid
    pub snap: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysicalParameters::default(),
            n: 100,
            dt: 1e-3,
            t_final: 50.0,
            record_every: None,
            initial: InitialData::Smooth,
            seed: 0,
            lambda_min: None,
            lambda_max: None,
            lambda_count: SWEEP_DEFAULT_COUNT,
            robust: false,
            snap: true,
        }
    }
}

fn bad(place: &str, msg: String) -> Error {
    Error::InvalidParameter {
        name: "config",
        reason: format!("{place}: {msg}"),
    }
}

fn parse_num<T: std::str::FromStr>(place: &str, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(place, format!("key `{key}` rejects value `{value}`")))
}

impl RunConfig {
    /// Applies one `key = value` pair; `place` names the source (line
    /// number or flag) for error messages.
    fn set(&mut self, place: &str, key: &str, value: &str) -> Result<()> {
        match key {
            "rho1" => self.params.rho1 = parse_num(place, key, value)?,
            "rho2" => self.params.rho2 = parse_num(place, key, value)?,
            "k1" => self.params.k1 = parse_num(place, key, value)?,
            "k2" => self.params.k2 = parse_num(place, key, value)?,
            "k3" => self.params.k3 = parse_num(place, key, value)?,
            "l" => self.params.l = parse_num(place, key, value)?,
            "L" => self.params.length = parse_num(place, key, value)?,
            "a0" => self.params.a0 = parse_num(place, key, value)?,
            "beta" => self.params.beta = parse_num(place, key, value)?,
            "N" => self.n = parse_num(place, key, value)?,
            "dt" => self.dt = parse_num(place, key, value)?,
            "t_final" => self.t_final = parse_num(place, key, value)?,
            "record_every" => self.record_every = Some(parse_num(place, key, value)?),
            "initial" => self.initial = InitialData::parse(value)?,
            "seed" => self.seed = parse_num(place, key, value)?,
            "lambda_min" => self.lambda_min = Some(parse_num(place, key, value)?),
            "lambda_max" => self.lambda_max = Some(parse_num(place, key, value)?),
            "lambda_count" => self.lambda_count = parse_num(place, key, value)?,
            "robust" => self.robust = parse_num(place, key, value)?,
            "snap" => self.snap = parse_num(place, key, value)?,
            _ => return Err(bad(place, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a whole config file body.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let place = format!("line {}", idx + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(&place, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(bad(&place, format!("key `{key}` has no value")));
            }
            if !seen.insert(key.to_owned()) {
                return Err(bad(&place, format!("duplicate key `{key}`")));
            }
            cfg.set(&place, key, value)?;
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Applies one `--set key=value` override.
    pub fn apply_set(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| bad("--set", format!("expected key=value, got `{pair}`")))?;
        self.set("--set", key.trim(), value.trim())
    }

    /// Resolvent window for a grid of spacing `h`: the documented
    /// [10, 0.3 pi c_min / h] default with any configured overrides.
    pub fn sweep_config(&self, h: f64) -> Result<SweepConfig> {
        let (s1, s2, s3) = bresse_core::model::wave_speeds(&self.params);
        let c_min = s1.min(s2).min(s3).sqrt();
        let cfg = SweepConfig {
            lambda_min: self.lambda_min.unwrap_or(10.0),
            lambda_max: self
                .lambda_max
                .unwrap_or(0.3 * std::f64::consts::PI * c_min / h),
            count: self.lambda_count,
            robust: self.robust,
            snap: self.snap,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
