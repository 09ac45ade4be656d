//! Constraint-graph descriptors: named presets, the line-based text format
//! and its JSON equivalent.
//!
//! Text format (colors are 0-based; `#` starts a comment):
//!
//! ```text
//! colors 3
//! w 0 3/2
//! e 0 1
//! e 1 1
//! ```
//!
//! `e i i` declares a loop. Colors without a `w` line get weight 1.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::constraint_graph::{presets, ConstraintGraph, WeightSet};
use crate::error::{Error, Result};

/// Parses `p/q`, an integer, or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((int, frac)) = s.split_once('.') {
        if s.contains('/') || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n = BigInt::from_str(&digits).ok()?;
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let r = BigRational::new(n, scale);
        return Some(if neg { -r } else { r });
    }
    let r = BigRational::from_str(s).ok()?;
    Some(r)
}

/// Comma-separated weights, e.g. `3/2,1,1`.
pub fn parse_weights(s: &str) -> Result<WeightSet> {
    let ws: Option<Vec<BigRational>> = s.split(',').map(parse_rational).collect();
    match ws {
        Some(ws) => WeightSet::new(ws),
        None => Err(Error::parse(1, format!("bad weight list {s:?}"))),
    }
}

pub fn format_weights(w: &WeightSet) -> String {
    w.as_slice()
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn preset_one(name: &str) -> Result<ConstraintGraph> {
    let bad = || Error::parse(1, format!("unknown preset {name:?}"));
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match name {
        "ind" | "hardcore" => Ok(presets::hard_core()),
        "wr" => Ok(presets::widom_rowlinson()),
        _ => {
            if let Some(q) = name.strip_prefix("kq:") {
                presets::complete(num(q)?)
            } else if let Some(n) = name.strip_prefix("cycle:") {
                presets::cycle(num(n)?)
            } else if let Some(n) = name.strip_prefix("path:") {
                presets::path(num(n)?)
            } else if let Some(q) = name.strip_prefix("kloop:") {
                presets::complete_looped(num(q)?)
            } else if let Some(rest) = name.strip_prefix('k') {
                match rest.strip_suffix("loop") {
                    Some(q) => presets::complete_looped(num(q)?),
                    None => presets::complete(num(rest)?),
                }
            } else {
                Err(bad())
            }
        }
    }
}

/// A preset name, or several joined by `+` for a disjoint union.
pub fn preset(name: &str) -> Result<ConstraintGraph> {
    let mut parts = name.split('+').map(str::trim);
    let first = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| {
        Error::parse(1, "empty preset name")
    })?;
    let mut g = preset_one(first)?;
    for p in parts {
        g = g.disjoint_union(&preset_one(p)?)?;
    }
    Ok(g)
}

/// Parses the text format. Weights are `None` when no `w` line appears.
pub fn parse_h_text(text: &str) -> Result<(ConstraintGraph, Option<WeightSet>)> {
    let mut graph: Option<ConstraintGraph> = None;
    let mut weights: Vec<BigRational> = Vec::new();
    let mut any_weight = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str, h: usize| -> Result<usize> {
            let k: usize = s
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad color index {s:?}")))?;
            if k >= h {
                return Err(Error::parse(
                    line_no,
                    format!("color {k} out of range for {h} colors"),
                ));
            }
            Ok(k)
        };
        match (fields[0], &mut graph) {
            ("colors", None) => {
                if fields.len() != 2 {
                    return Err(Error::parse(line_no, "expected `colors h`"));
                }
                let h: usize = fields[1]
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad color count {:?}", fields[1])))?;
                let g = ConstraintGraph::empty(h).map_err(|e| Error::parse(line_no, e.to_string()))?;
                weights = vec![BigRational::one(); h];
                graph = Some(g);
            }
            ("colors", Some(_)) => return Err(Error::parse(line_no, "duplicate `colors` line")),
            (_, None) => {
                return Err(Error::parse(line_no, "first line must be `colors h`"));
            }
            ("w", Some(g)) => {
                if fields.len() != 3 {
                    return Err(Error::parse(line_no, "expected `w k p/q`"));
                }
                let k = index(fields[1], g.num_colors())?;
                let r = parse_rational(fields[2])
                    .ok_or_else(|| Error::parse(line_no, format!("bad weight {:?}", fields[2])))?;
                if r <= BigRational::from_integer(0.into()) {
                    return Err(Error::parse(line_no, format!("weight must be positive, got {r}")));
                }
                weights[k] = r;
                any_weight = true;
            }
            ("e", Some(g)) => {
                if fields.len() != 3 {
                    return Err(Error::parse(line_no, "expected `e i j`"));
                }
                let h = g.num_colors();
                let a = index(fields[1], h)?;
                let b = index(fields[2], h)?;
                g.add_edge(a, b).map_err(|e| Error::parse(line_no, e.to_string()))?;
            }
            (other, Some(_)) => {
                return Err(Error::parse(line_no, format!("unknown directive {other:?}")));
            }
        }
    }
    let g = graph.ok_or_else(|| Error::parse(1, "missing `colors h` line"))?;
    let w = if any_weight {
        Some(WeightSet::new(weights)?)
    } else {
        None
    };
    Ok((g, w))
}

/// Text form of `(H, Λ)`; [`parse_h_text`] reads it back unchanged.
pub fn to_h_text(g: &ConstraintGraph, w: Option<&WeightSet>) -> String {
    let mut out = format!("colors {}\n", g.num_colors());
    if let Some(w) = w {
        for (k, x) in w.as_slice().iter().enumerate() {
            out.push_str(&format!("w {k} {x}\n"));
        }
    }
    for (i, j) in g.edges() {
        out.push_str(&format!("e {i} {j}\n"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum JsonWeight {
    Int(i64),
    Text(String),
    Float(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonH {
    colors: usize,
    #[serde(default)]
    weights: Option<Vec<JsonWeight>>,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// Parses `{colors, weights, edges}` (weights as integers or `"p/q"`
/// strings; optional `labels`).
pub fn parse_h_json(text: &str) -> Result<(ConstraintGraph, Option<WeightSet>)> {
    let j: JsonH = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let mut g = ConstraintGraph::from_edges(j.colors, j.edges)?;
    if let Some(labels) = j.labels {
        g = g.with_labels(labels)?;
    }
    let w = match j.weights {
        None => None,
        Some(ws) => {
            let parsed: Result<Vec<BigRational>> = ws
                .into_iter()
                .map(|x| match x {
                    JsonWeight::Int(i) => Ok(BigRational::from_integer(i.into())),
                    JsonWeight::Text(s) => parse_rational(&s)
                        .ok_or_else(|| Error::parse(1, format!("bad weight {s:?}"))),
                    JsonWeight::Float(f) => BigRational::from_float(f)
                        .ok_or_else(|| Error::parse(1, format!("bad weight {f}"))),
                })
                .collect();
            Some(WeightSet::new(parsed?)?.for_graph(&g)?)
        }
    };
    Ok((g, w))
}

pub fn to_h_json(g: &ConstraintGraph, w: Option<&WeightSet>) -> serde_json::Value {
    serde_json::json!({
        "colors": g.num_colors(),
        "weights": w.map(|w| w.as_slice().iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        "edges": g.edges(),
        "labels": g.labels(),
    })
}

/// A preset name, or a path to a `.json` or text file.
pub fn load_h(name: &str) -> Result<(ConstraintGraph, Option<WeightSet>)> {
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(0, format!("{}: {e}", path.display())))?;
        return if path.extension().is_some_and(|e| e == "json") {
            parse_h_json(&text)
        } else {
            parse_h_text(&text)
        };
    }
    Ok((preset(name)?, None))
}

/// `(H, Λ)` from a descriptor plus an optional weight override.
pub fn load_instance(h: &str, weights: Option<&str>) -> Result<(ConstraintGraph, WeightSet)> {
    let (g, file_w) = load_h(h)?;
    let w = match (weights, file_w) {
        (Some(s), _) => parse_weights(s)?,
        (None, Some(w)) => w,
        (None, None) => WeightSet::uniform(g.num_colors()),
    };
    let w = w.for_graph(&g)?;
    Ok((g, w))
}
