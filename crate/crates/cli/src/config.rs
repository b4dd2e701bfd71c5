//! Run configuration: a flat key/value map assembled from an optional config
//! file and command-line flags, with flags taking precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use orlicz_frac::{Error, QuadratureConfig, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    YoungInfo,
    Modular,
    Seminorm,
    Limit,
    MsLimit,
    Hardy,
    Counterexample,
    Identities,
}

const QUAD_KEYS: &[&str] = &[
    "rel-tol",
    "abs-tol",
    "max-subdivisions",
    "outer-truncation",
    "mc-samples",
    "seed",
    "tau-window",
];
const YOUNG_KEYS: &[&str] = &["family", "p", "gamma", "t0", "terms"];
const TESTFN_KEYS: &[&str] = &["testfn", "n", "value", "kappa", "scale", "shift"];
/// Keys that steer output rather than the computation; never echoed.
pub const OUTPUT_KEYS: &[&str] = &["out", "format"];

impl Command {
    pub const ALL: [Command; 8] = [
        Command::YoungInfo,
        Command::Modular,
        Command::Seminorm,
        Command::Limit,
        Command::MsLimit,
        Command::Hardy,
        Command::Counterexample,
        Command::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::YoungInfo => "young-info",
            Command::Modular => "modular",
            Command::Seminorm => "seminorm",
            Command::Limit => "limit",
            Command::MsLimit => "ms-limit",
            Command::Hardy => "hardy",
            Command::Counterexample => "counterexample",
            Command::Identities => "identities",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::YoungInfo => "Doubling constant, upper index and Abar(1) of a Young function",
            Command::Modular => "Orlicz modular and Luxemburg norm of a test function",
            Command::Seminorm => "Fractional Orlicz modular J_s",
            Command::Limit => "Small-s study of s J_s against its limit",
            Command::MsLimit => "Small-s study for A(t) = t^p",
            Command::Hardy => "Hardy companion function and inequality check",
            Command::Counterexample => "Divergent lower bound for the non-doubling counterexample",
            Command::Identities => "Residuals of the shell and radial identities",
        }
    }

    pub fn parse(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Keys accepted by this command besides `config`.
    pub fn keys(self) -> Vec<&'static str> {
        let own: &[&str] = match self {
            Command::YoungInfo => &[],
            Command::Modular => &["lambda"],
            Command::Seminorm => &["s", "method"],
            Command::Limit => &["s", "tol"],
            Command::MsLimit => &["s", "tol"],
            Command::Hardy => &["s", "c-grid", "points-per-decade"],
            Command::Counterexample => &["s", "gamma", "lambda", "sigma", "kappa", "alpha", "n"],
            Command::Identities => &[],
        };
        let mut keys: Vec<&'static str> = own.to_vec();
        match self {
            Command::YoungInfo => keys.extend(YOUNG_KEYS),
            Command::Modular | Command::Seminorm | Command::Limit | Command::Hardy => {
                keys.extend(YOUNG_KEYS);
                keys.extend(TESTFN_KEYS);
            }
            Command::MsLimit => {
                keys.push("p");
                keys.extend(TESTFN_KEYS);
            }
            Command::Counterexample | Command::Identities => {}
        }
        keys.extend(QUAD_KEYS);
        keys.extend(OUTPUT_KEYS);
        keys.sort_unstable();
        keys.dedup();
        keys
    }

    pub fn required(self) -> &'static [&'static str] {
        match self {
            Command::YoungInfo => &["family"],
            Command::Modular => &["family", "testfn"],
            Command::Seminorm => &["family", "testfn", "s"],
            Command::Limit => &["family", "testfn", "s"],
            Command::MsLimit => &["testfn", "p", "s"],
            Command::Hardy => &["family", "s"],
            Command::Counterexample => &["s"],
            Command::Identities => &[],
        }
    }
}

/// Parses a config file: either `key = value` lines with `#` comments, or a
/// JSON document written by a previous run (its echoed configuration is used).
pub fn read_file(path: &Path) -> Result<(Option<String>, BTreeMap<String, String>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read config file {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        return read_json(&text);
    }
    let mut map = BTreeMap::new();
    let mut command = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("config line {} is not key = value", lineno + 1)))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim().to_string());
        if key == "command" {
            command = Some(value);
        } else {
            map.insert(key, value);
        }
    }
    Ok((command, map))
}

fn read_json(text: &str) -> Result<(Option<String>, BTreeMap<String, String>)> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config JSON: {e}")))?;
    let provenance = doc.get("provenance").unwrap_or(&doc);
    let command = provenance.get("command").and_then(|c| c.as_str()).map(str::to_string);
    let config = provenance
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| Error::InvalidParameter("config JSON has no provenance.config object".into()))?;
    let mut map = BTreeMap::new();
    for (k, v) in config {
        let value = match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        map.insert(k.clone(), value);
    }
    Ok((command, map))
}

/// Validated key/value parameters for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: Command, params: BTreeMap<String, String>) -> Result<Self> {
        let allowed = command.keys();
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown key '{bad}' for {}", command.name())));
        }
        if let Some(missing) = command.required().iter().find(|k| !params.contains_key(**k)) {
            return Err(Error::InvalidParameter(format!("{} requires --{missing}", command.name())));
        }
        Ok(Self { command, params })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("--{key} expects a non-negative integer, got '{v}'"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| v.split(',').map(|x| parse_f64(key, x.trim())).collect())
            .transpose()
    }

    /// Parameters that define the computation, for the provenance echo.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.params
            .iter()
            .filter(|(k, _)| !OUTPUT_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig> {
        let d = QuadratureConfig::default();
        let window = match self.list("tau-window")? {
            None => None,
            Some(v) if v.len() == 2 => Some((v[0], v[1])),
            Some(_) => return Err(Error::InvalidParameter("--tau-window expects lo,hi".into())),
        };
        let seed = match self.get("seed") {
            None => d.rng_seed,
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("--seed expects an unsigned integer, got '{v}'")))?,
        };
        let cfg = QuadratureConfig {
            rel_tol: self.f64_or("rel-tol", d.rel_tol)?,
            abs_tol: self.f64_or("abs-tol", d.abs_tol)?,
            max_subdivisions: self.usize_or("max-subdivisions", d.max_subdivisions)?,
            log_radius_window: window,
            outer_truncation: self.f64_or("outer-truncation", d.outer_truncation)?,
            mc_samples: self.f64_or("mc-samples", d.mc_samples as f64)? as u64,
            rng_seed: seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::InvalidParameter(format!("--{key} expects a number, got '{v}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::new(Command::YoungInfo, params(&[("family", "power"), ("bogus", "1")])).unwrap_err();
        assert_eq!(err.code(), "invalid-parameter");
    }

    #[test]
    fn required_keys_are_enforced() {
        assert!(RunConfig::new(Command::Limit, params(&[("family", "power")])).is_err());
    }

    #[test]
    fn key_value_file_parses_comments() {
        let dir = std::env::temp_dir().join(format!("orlicz-frac-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "# study\ncommand = limit\nfamily = power # quadratic\np = 2\n").unwrap();
        let (command, map) = read_file(&path).unwrap();
        assert_eq!(command.as_deref(), Some("limit"));
        assert_eq!(map["family"], "power");
        assert_eq!(map["p"], "2");
    }

    #[test]
    fn json_sidecar_yields_its_echo() {
        let (command, map) =
            read_json(r#"{"provenance":{"command":"young-info","config":{"family":"power","p":"3"}},"result":{}}"#)
                .unwrap();
        assert_eq!(command.as_deref(), Some("young-info"));
        assert_eq!(map["p"], "3");
    }
}
