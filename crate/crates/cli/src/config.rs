//! `key=value` run configuration: defaults, then the config file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ltc_core::lt_divergence::Sampling;
use ltc_core::spectral_solver::SpectralParams;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "d",
    "p",
    "epsilon",
    "alpha",
    "beta",
    "gamma",
    "h",
    "h_grid",
    "sampling",
    "seed",
    "n",
    "ell",
    "j",
    "phase_sample",
    "nu_max",
    "perturb",
    "oracle_sample",
    "oracle_tol",
    "oracle_rel",
    "out_csv",
    "out_json",
    "out_svg",
];

const DEFAULTS: &[(&str, &str)] = &[
    ("d", "2"),
    ("p", "1"),
    ("epsilon", "0.5"),
    ("alpha", "0.05"),
    ("beta", "0.15"),
    ("gamma", "0.3"),
    ("h", "1e8"),
    ("seed", "0"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("line {}: expected key=value", no + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn with_defaults(mut self) -> Self {
        for (k, v) in DEFAULTS {
            self.values.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(usage(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| usage(format!("expected key=value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| usage(format!("bad value for {key}: '{v}'"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.parsed(key)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn required_f64(&self, key: &str) -> Result<f64, CliError> {
        self.parsed(key)?.ok_or_else(|| usage(format!("missing {key}")))
    }

    pub fn params(&self) -> Result<SpectralParams, CliError> {
        let d: u32 = self.parsed("d")?.ok_or_else(|| usage("missing d"))?;
        SpectralParams::new(
            d,
            self.required_f64("p")?,
            self.required_f64("epsilon")?,
            self.required_f64("alpha")?,
            self.required_f64("beta")?,
            self.required_f64("gamma")?,
            self.required_f64("h")?,
        )
        .map_err(|e| usage(e.to_string()))
    }

    pub fn h_grid(&self) -> Result<Vec<f64>, CliError> {
        let raw = self.raw("h_grid").ok_or_else(|| usage("missing h_grid"))?;
        raw.split([';', ','])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| usage(format!("bad h_grid entry '{s}'"))))
            .collect()
    }

    /// `None` for `auto` or when unset.
    pub fn sampling(&self) -> Result<Option<Sampling>, CliError> {
        match self.raw("sampling") {
            None | Some("auto") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|e: ltc_core::Error| usage(e.to_string())),
        }
    }

    /// `# command=... key=value ...`, skipping output paths.
    pub fn header(&self, command: &str) -> String {
        let mut line = format!("# command={command}");
        for (k, v) in &self.values {
            if !k.starts_with("out_") {
                line.push_str(&format!(" {k}={v}"));
            }
        }
        line
    }

    /// The resolved configuration without output paths.
    pub fn to_json(&self, command: &str) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), command.into());
        for (k, v) in &self.values {
            if !k.starts_with("out_") {
                map.insert(k.clone(), v.clone().into());
            }
        }
        map.into()
    }
}
