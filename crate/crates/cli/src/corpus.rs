//! Golden-output regression runner: every `NAME.conf` in a directory is run
//! and its JSON compared with `NAME.json`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands::{self, Mismatch};
use crate::config::RunConfig;

const REL_TOL: f64 = 1e-9;

pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Numbers compare with a relative tolerance, everything else exactly.
pub fn values_match(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            if x == y {
                return true;
            }
            match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => (x - y).abs() <= REL_TOL * x.abs().max(y.abs()),
                _ => false,
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| values_match(a, b))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| values_match(v, w)))
        }
        _ => a == b,
    }
}

fn cases(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    out.sort();
    if out.is_empty() {
        bail!("no .conf files in {}", dir.display());
    }
    Ok(out)
}

fn run_case(conf: &Path, bless: bool) -> Result<(String, &'static str)> {
    let name = conf.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let cfg = RunConfig::load(conf)?;
    let got = commands::run(&cfg).with_context(|| format!("case {name}"))?.to_value();
    let golden = conf.with_extension("json");
    if bless {
        let text = serde_json::to_string_pretty(&got)? + "\n";
        std::fs::write(&golden, text).with_context(|| format!("writing {}", golden.display()))?;
        return Ok((name, "blessed"));
    }
    let text = std::fs::read_to_string(&golden)
        .with_context(|| format!("reading {}", golden.display()))?;
    let want: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", golden.display()))?;
    Ok((name, if values_match(&got, &want) { "ok" } else { "diff" }))
}

pub fn run(dir: &Path, bless: bool) -> Result<Value> {
    let results: Vec<(String, &str)> = cases(dir)?
        .par_iter()
        .map(|c| run_case(c, bless))
        .collect::<Result<_>>()?;
    let diffs: Vec<&str> = results
        .iter()
        .filter(|r| r.1 == "diff")
        .map(|r| r.0.as_str())
        .collect();
    if !diffs.is_empty() {
        return Err(Mismatch(format!("golden output differs for {}", diffs.join(", "))).into());
    }
    Ok(json!({
        "command": "corpus",
        "cases": results.iter().map(|(n, s)| json!({"name": n, "status": s})).collect::<Vec<_>>(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerant_numbers() {
        assert!(values_match(&json!({"a": [1.0, "x"]}), &json!({"a": [1.0000000000001, "x"]})));
        assert!(!values_match(&json!({"a": 1.0}), &json!({"a": 1.01})));
        assert!(!values_match(&json!({"a": 1}), &json!({"a": 1, "b": 2})));
        assert!(!values_match(&json!("1"), &json!(1)));
    }
}
