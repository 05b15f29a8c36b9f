//! Run configuration: seed, tolerance, output target, calibration constants
//! and command parameters, assembled from defaults, a flat `key = value`
//! file and command-line overrides (in that order of precedence).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quasinorm::calibration::Calibration;
use quasinorm::{Error, Result};
use serde::Serialize;

use crate::params::Params;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::input(format!("unknown format '{s}' (json or csv)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub calibration: Calibration,
    /// Where each constant's value came from: `default`, `config` or `override`.
    pub calibration_sources: BTreeMap<String, String>,
    pub params: Params,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            tol: None,
            format: Format::Json,
            out: None,
            calibration: Calibration::default(),
            calibration_sources: Calibration::KEYS.iter().map(|k| (k.to_string(), "default".to_string())).collect(),
            params: Params::new(),
        }
    }
}

/// Command-line pieces that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub constants: Vec<(String, f64)>,
    pub params: Params,
}

fn parse_number(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::input(format!("cannot parse {key}={v}")))
}

impl RunConfig {
    pub fn build(config_file: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(t) = overrides.tol {
            cfg.tol = Some(t);
        }
        if let Some(f) = overrides.format {
            cfg.format = f;
        }
        if let Some(o) = overrides.out {
            cfg.out = Some(o);
        }
        for (k, v) in &overrides.constants {
            cfg.set_constant(k, *v, "override")?;
        }
        cfg.params.merge(&overrides.params);
        if let Some(t) = cfg.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::input("tolerance must be positive"));
            }
        }
        Ok(cfg)
    }

    fn set_constant(&mut self, key: &str, value: f64, source: &str) -> Result<()> {
        self.calibration.set(key, value)?;
        self.calibration_sources.insert(key.to_string(), source.to_string());
        Ok(())
    }

    /// Flat `key = value` lines; `#` starts a comment. `seed`, `tol`,
    /// `format`, `out` and `const.NAME` are configuration, everything else
    /// is a command parameter.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("config line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "seed" => self.seed = v.parse().map_err(|_| Error::input(format!("cannot parse seed={v}")))?,
                "tol" => self.tol = Some(parse_number(k, v)?),
                "format" => self.format = v.parse()?,
                "out" => self.out = Some(PathBuf::from(v)),
                _ => match k.strip_prefix("const.") {
                    Some(name) => self.set_constant(name, parse_number(k, v)?, "config")?,
                    None => self.params.set(k, v),
                },
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Pulls `--const.NAME=VALUE` and `--const.NAME VALUE` out of the argument
/// list, since the constant names are not known to the flag parser.
pub fn extract_constants(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, f64)>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut constants = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(spec) = a.strip_prefix("--const.") else {
            rest.push(a);
            continue;
        };
        let (name, value) = match spec.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::input(format!("--const.{spec} needs a value")))?;
                (spec.to_string(), v)
            }
        };
        if !Calibration::KEYS.contains(&name.as_str()) {
            return Err(Error::input(format!(
                "unknown constant '{name}' (known: {})",
                Calibration::KEYS.join(", ")
            )));
        }
        constants.push((name.clone(), parse_number(&name, &value)?));
    }
    Ok((rest, constants))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("seed = 7\n# comment\nconst.c1 = 0.2\nn = 5 # trailing\nformat=csv\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.calibration.c1, 0.2);
        assert_eq!(cfg.calibration_sources["c1"], "config");
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.params.get_or("n", 0usize).unwrap(), 5);
        assert!(cfg.apply_file("const.nope = 1").is_err());
        assert!(cfg.apply_file("just words").is_err());
    }

    #[test]
    fn constants_are_pulled_from_argv() {
        let args: Vec<String> = ["quasinorm", "--const.c1=0.3", "run", "--const.C", "9", "x"].iter().map(|s| s.to_string()).collect();
        let (rest, c) = extract_constants(args).unwrap();
        assert_eq!(rest, vec!["quasinorm", "run", "x"]);
        assert_eq!(c, vec![("c1".to_string(), 0.3), ("C".to_string(), 9.0)]);
        assert!(extract_constants(vec!["--const.zz=1".into()]).is_err());
    }
}
