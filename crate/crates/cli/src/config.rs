//! Run configuration: a flat `key = value` file or the equivalent JSON
//! object. Command-line flags override values read from a file.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Tuple lengths for `identities`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<String>,
    /// Dimensions for `conjecture`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    /// `vertex:color`, vertex as coordinates or index.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rle: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_states: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_states: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

/// Accepts `1000000`, `1e6` and `2.5e3`; rejects fractions and negatives.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().with_context(|| format!("not a count: {s:?}"))?;
    if !(f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f <= u64::MAX as f64) {
        bail!("not a count: {s:?}");
    }
    Ok(f as u64)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("not a boolean: {other:?}"),
    }
}

macro_rules! merge_fields {
    ($dst:expr, $src:expr; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Values set in `over` replace those in `self`.
    pub fn merge(&mut self, over: &RunConfig) {
        merge_fields!(self, over; command, h, weights, m, d, ms, ds, seed, method, steps,
            burn_in, thin, chains, pin, x, y, k, l, defect_cap, balance_tol, rle, node_cap,
            brute_states, layer_states, out, csv, timing);
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let text = || Some(v.to_string());
        match key.trim().replace('-', "_").as_str() {
            "command" => self.command = text(),
            "h" => self.h = text(),
            "weights" => self.weights = text(),
            "m" => self.m = Some(parse_count(v)? as usize),
            "d" => self.d = Some(parse_count(v)? as usize),
            "ms" => self.ms = text(),
            "ds" => self.ds = text(),
            "seed" => self.seed = Some(parse_count(v)?),
            "method" => self.method = text(),
            "steps" => self.steps = Some(parse_count(v)?),
            "burn_in" => self.burn_in = Some(parse_count(v)?),
            "thin" => self.thin = Some(parse_count(v)?),
            "chains" => self.chains = Some(parse_count(v)? as usize),
            "pin" => self.pin = text(),
            "x" => self.x = text(),
            "y" => self.y = text(),
            "k" => self.k = text(),
            "l" => self.l = text(),
            "defect_cap" => self.defect_cap = Some(v.parse().context("defect_cap")?),
            "balance_tol" => self.balance_tol = Some(v.parse().context("balance_tol")?),
            "rle" => self.rle = Some(parse_bool(v)?),
            "node_cap" => self.node_cap = Some(parse_count(v)?),
            "brute_states" => self.brute_states = Some(parse_count(v)?),
            "layer_states" => self.layer_states = Some(parse_count(v)?),
            "out" => self.out = text(),
            "csv" => self.csv = text(),
            "timing" => self.timing = Some(parse_bool(v)?),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Parses either format; JSON is recognized by a leading `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).context("config JSON");
        }
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {}: expected key = value", i + 1))?;
            cfg.set(key, value)
                .with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The `key = value` form, one line per set field, in declaration order.
    pub fn to_kv(&self) -> String {
        let value = serde_json::to_value(self).expect("plain fields");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                let _ = writeln!(out, "{k} = {s}");
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain fields")
    }
}
