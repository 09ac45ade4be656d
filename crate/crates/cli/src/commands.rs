use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use num_rational::BigRational;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use torushom::analysis::{
    antipodal_trend, coloring_count_prediction, conjecture_total, conditional_target_sides,
    d_inf_f64, detect_equipartition, exact_influence, theorem_conditional_raw,
    theorem_occupation_vector, Comparison,
};
use torushom::exact::{
    brute_force_partition_function_with, ln_rational,
    transfer_matrix_partition_function_with,
};
use torushom::instance::{format_weights, load_instance};
use torushom::proof_quantities::{verify_extremal_identities, DEFAULT_NODE_CAP};
use torushom::sampler::{
    batch_means, classify, run_chain, run_chains, side_histograms, ChainStats, SampleRecord,
};
use torushom::{
    blowup, eta_and_maximal_pairs, Budget, ChainConfig, ConstraintGraph, Error, Initializer,
    PhaseKind, Relation, Thresholds, TorusGraph, WeightSet,
};

use crate::config::{parse_count, RunConfig};

/// Raised when two computations that must agree do not (exit code 4).
#[derive(Debug)]
pub struct Mismatch(pub String);

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mismatch: {}", self.0)
    }
}

impl std::error::Error for Mismatch {}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

pub enum Body {
    Doc(Value),
    /// One JSON document per line.
    Lines(Vec<Value>),
}

pub struct Output {
    pub body: Body,
    pub table: Option<Table>,
}

impl Output {
    /// The body as one JSON value; line streams become an array.
    pub fn to_value(&self) -> Value {
        match &self.body {
            Body::Doc(v) => v.clone(),
            Body::Lines(v) => Value::Array(v.clone()),
        }
    }
}

struct Instance {
    g: ConstraintGraph,
    w: WeightSet,
    name: String,
}

fn instance(cfg: &RunConfig) -> Result<Instance> {
    let h = cfg.h.as_deref().ok_or_else(|| anyhow!("missing --h"))?;
    let (g, w) = load_instance(h, cfg.weights.as_deref())?;
    Ok(Instance {
        g,
        w,
        name: h.to_string(),
    })
}

fn torus(cfg: &RunConfig) -> Result<TorusGraph> {
    let m = cfg.m.ok_or_else(|| anyhow!("missing --m"))?;
    let d = cfg.d.ok_or_else(|| anyhow!("missing --d"))?;
    Ok(TorusGraph::new(m, d)?)
}

fn budget(cfg: &RunConfig) -> Budget {
    let mut b = Budget::default();
    if let Some(s) = cfg.brute_states {
        b.brute_states = s;
    }
    if let Some(s) = cfg.layer_states {
        b.layer_states = s;
    }
    b
}

fn thresholds(cfg: &RunConfig) -> Result<Thresholds> {
    let mut th = Thresholds::default();
    if let Some(c) = cfg.defect_cap {
        th.defect_cap = c;
    }
    if let Some(t) = cfg.balance_tol {
        th.balance_tol = t;
    }
    th.validate()?;
    Ok(th)
}

fn list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| Ok(parse_count(p)? as usize))
        .collect()
}

/// A color by label, falling back to a 0-based index.
fn color(g: &ConstraintGraph, s: &str) -> Result<usize> {
    if let Some(k) = g.color_by_label(s.trim()) {
        return Ok(k);
    }
    let k: usize = s
        .trim()
        .parse()
        .map_err(|_| anyhow!("unknown color {s:?}"))?;
    g.check_color(k)?;
    Ok(k)
}

/// `antipodal` (relative to `y`), coordinates `1,0,1`, or `#index`.
fn vertex(t: &TorusGraph, s: &str, y: usize) -> Result<usize> {
    let s = s.trim();
    if s == "antipodal" {
        return Ok(t.antipode(y));
    }
    if let Some(idx) = s.strip_prefix('#') {
        let x: usize = idx.parse().context("vertex index")?;
        t.check_vertex(x)?;
        return Ok(x);
    }
    Ok(t.parse_vertex(s)?)
}

fn pin(t: &TorusGraph, g: &ConstraintGraph, s: &str) -> Result<(usize, usize)> {
    let (v, c) = s
        .rsplit_once(':')
        .ok_or_else(|| anyhow!("pin must be vertex:color, got {s:?}"))?;
    Ok((vertex(t, v, 0)?, color(g, c)?))
}

fn rat_str(x: &BigRational) -> String {
    x.to_string()
}

fn f64s(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

pub fn run(cfg: &RunConfig) -> Result<Output> {
    match cfg.command.as_deref() {
        Some("analyze") => analyze(cfg),
        Some("count") => count(cfg),
        Some("sample") => sample(cfg),
        Some("influence") if cfg.ds.is_some() => Ok(Output {
            body: Body::Doc(json!({"command": "influence", "trend": influence_trend(cfg)?})),
            table: None,
        }),
        Some("influence") => influence(cfg),
        Some("conjecture") => conjecture(cfg),
        Some("identities") => identities(cfg),
        Some(other) => bail!("unknown command {other:?}"),
        None => bail!("no command given"),
    }
}

fn analyze(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let ext = eta_and_maximal_pairs(&g, &w)?;
    let pairs: Vec<Value> = ext
        .pairs
        .iter()
        .map(|p| json!({"a": g.format_set(p.a), "b": g.format_set(p.b)}))
        .collect();
    let support: Vec<String> = ext.support_family().iter().map(|&s| g.format_set(s)).collect();
    let blow = match blowup(&g, &w) {
        Ok(b) => json!({"scale_c": b.scale_c.to_string(), "colors": b.graph.num_colors(), "block_sizes": b.block_sizes()}),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    let equi = detect_equipartition(&g, &w, &ext).map_or("unknown".to_string(), |e| e.to_string());
    let mut table = Table::new(&["a", "b", "weight_a", "weight_b"]);
    for p in &ext.pairs {
        table.push([
            g.format_set(p.a),
            g.format_set(p.b),
            rat_str(&w.subset_weight(p.a)),
            rat_str(&w.subset_weight(p.b)),
        ]);
    }
    let doc = json!({
        "command": "analyze",
        "h": name,
        "colors": g.num_colors(),
        "weights": format_weights(&w),
        "eta": rat_str(&ext.eta),
        "num_pairs": ext.pairs.len(),
        "pairs": pairs,
        "support_family": support,
        "blowup": blow,
        "equipartition": equi,
    });
    Ok(Output {
        body: Body::Doc(doc),
        table: Some(table),
    })
}

fn count(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let t = torus(cfg)?;
    let b = budget(cfg);
    let method = cfg.method.as_deref().unwrap_or("transfer");
    let (brute, tm) = match method {
        "brute" => (Some(brute_force_partition_function_with(&t, &g, &w, &b)?.z), None),
        "transfer" => (None, Some(transfer_matrix_partition_function_with(&t, &g, &w, &b)?.z)),
        "both" => (
            Some(brute_force_partition_function_with(&t, &g, &w, &b)?.z),
            Some(transfer_matrix_partition_function_with(&t, &g, &w, &b)?.z),
        ),
        other => bail!("unknown method {other:?} (brute, transfer or both)"),
    };
    if let (Some(a), Some(c)) = (&brute, &tm) {
        if a != c {
            return Err(Mismatch(format!("brute force {a} but transfer matrix {c}")).into());
        }
    }
    let z = brute.or(tm).expect("one method ran");
    let mut table = Table::new(&["h", "m", "d", "method", "z"]);
    table.push([name.clone(), t.m().to_string(), t.d().to_string(), method.into(), rat_str(&z)]);
    let doc = json!({
        "command": "count",
        "h": name,
        "weights": format_weights(&w),
        "m": t.m(),
        "d": t.d(),
        "method": method,
        "z": rat_str(&z),
        "z_numerator": z.numer().to_string(),
        "z_denominator": z.denom().to_string(),
        "ln_z": ln_rational(&z),
    });
    Ok(Output {
        body: Body::Doc(doc),
        table: Some(table),
    })
}

fn chain_config(cfg: &RunConfig, t: &TorusGraph, g: &ConstraintGraph, default_steps: u64) -> Result<ChainConfig> {
    let steps = cfg.steps.unwrap_or(default_steps);
    let n = t.num_vertices() as u64;
    let mut cc = ChainConfig::new(steps, cfg.seed.unwrap_or(0))
        .with_burn_in(cfg.burn_in.unwrap_or(0))
        .with_thin(cfg.thin.unwrap_or(n.max(steps / 1000)));
    if let Some(p) = cfg.pin.as_deref() {
        let (y, l) = pin(t, g, p)?;
        cc = cc.with_pin(y, l);
    }
    cc.validate(t, g)?;
    Ok(cc)
}

fn sample(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let t = torus(cfg)?;
    let th = thresholds(cfg)?;
    let cc = chain_config(cfg, &t, &g, 100_000)?;
    let ext = eta_and_maximal_pairs(&g, &w)?;
    let chains = cfg.chains.unwrap_or(1).max(1);
    let rle = cfg.rle.unwrap_or(false);
    let h = g.num_colors();

    let results: Vec<(Vec<SampleRecord>, Vec<PhaseKind>, ChainStats)> =
        run_chains(&cc, chains, |i, c| {
            let mut records = Vec::new();
            let mut kinds = Vec::new();
            let stats = run_chain(&t, &g, &w, &c, &Initializer::UniformGreedy, |step, f| {
                let label = classify(&t, &g, &w, &ext, f, &th);
                let (he, ho) = side_histograms(&t, f, h);
                kinds.push(label.kind);
                records.push(SampleRecord {
                    chain: i,
                    step,
                    phase_label: label.to_json(&g),
                    ideal_fraction: label.ideal_fraction_f64(),
                    color_histogram_e: he,
                    color_histogram_o: ho,
                    coloring_rle: rle.then(|| f.run_lengths()),
                });
            })?;
            Ok((records, kinds, stats))
        })?;

    let mut lines = Vec::new();
    let mut table = Table::new(&["chain", "step", "phase", "ideal_fraction"]);
    let mut by_phase: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut ideal_sum = 0f64;
    let mut stats = Vec::new();
    for (records, kinds, st) in results {
        for (r, kind) in records.into_iter().zip(kinds) {
            let phase = match kind {
                PhaseKind::Pure(p) => format!("pure {} {}", g.format_set(p.a), g.format_set(p.b)),
                PhaseKind::Exceptional => "exceptional".to_string(),
            };
            *by_phase.entry(phase.clone()).or_default() += 1;
            total += 1;
            ideal_sum += r.ideal_fraction;
            table.push([r.chain.to_string(), r.step.to_string(), phase, format!("{}", r.ideal_fraction)]);
            lines.push(serde_json::to_value(&r)?);
        }
        stats.push(st);
    }
    lines.push(json!({
        "summary": {
            "command": "sample",
            "h": name,
            "weights": format_weights(&w),
            "m": t.m(),
            "d": t.d(),
            "seed": cc.seed,
            "steps": cc.steps,
            "burn_in": cc.burn_in,
            "thin": cc.thin,
            "chains": chains,
            "samples": total,
            "mean_ideal_fraction": if total > 0 { ideal_sum / total as f64 } else { f64::NAN },
            "phase_counts": by_phase,
            "chain_stats": stats,
        }
    }));
    Ok(Output {
        body: Body::Lines(lines),
        table: Some(table),
    })
}

/// Empirical occupation vector at `x` with batch-means standard errors.
fn empirical_vector(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    cc: &ChainConfig,
    x: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = g.num_colors();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); h];
    run_chain(t, g, w, cc, &Initializer::UniformGreedy, |_, f| {
        for (k, s) in series.iter_mut().enumerate() {
            s.push((f.get(x) == k) as u8 as f64);
        }
    })?;
    Ok(series.iter().map(|s| batch_means(s, 20)).unzip())
}

fn influence(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let t = torus(cfg)?;
    let y = match cfg.y.as_deref() {
        Some(s) => vertex(&t, s, 0)?,
        None => 0,
    };
    let x = vertex(&t, cfg.x.as_deref().unwrap_or("antipodal"), y)?;
    let l = color(&g, cfg.l.as_deref().ok_or_else(|| anyhow!("missing --l"))?)?;
    let k = cfg.k.as_deref().map(|s| color(&g, s)).transpose()?;
    let relation = Relation::of(&t, x, y);
    let raw: Vec<String> = (0..g.num_colors())
        .map(|k| {
            theorem_conditional_raw(&g, &w, relation, k, l).map(|r| rat_str(&r))
        })
        .collect::<torushom::Result<_>>()?;
    let labels: Vec<&str> = g.labels().iter().map(String::as_str).collect();

    let mut table = Table::new(&[
        "color", "unconditional", "conditional", "target_unconditional", "target_conditional", "ratio", "target_ratio",
    ]);
    let mut doc = match exact_influence(&t, &g, &w, x, y, l, &budget(cfg)) {
        Ok(r) => {
            let unc = f64s(&r.unconditional);
            let con = f64s(&r.conditional);
            let tu = f64s(&r.target_unconditional);
            let tc = f64s(&r.target_conditional);
            for c in 0..g.num_colors() {
                let ratio = |v: &Option<BigRational>| v.as_ref().map_or("".into(), rat_str);
                table.push([
                    labels[c].to_string(),
                    unc[c].to_string(),
                    con[c].to_string(),
                    tu[c].to_string(),
                    tc[c].to_string(),
                    ratio(&r.ratios[c]),
                    ratio(&r.target_ratios[c]),
                ]);
            }
            let mut v = r.to_json();
            v["mode"] = json!("exact");
            v
        }
        Err(Error::BudgetExceeded { .. }) => {
            let cc = chain_config(cfg, &t, &g, 1_000_000)?.with_thin(cfg.thin.unwrap_or(t.num_vertices() as u64));
            let (unc, unc_se) = empirical_vector(&t, &g, &w, &cc, x)?;
            let pinned = cc.clone().with_pin(y, l);
            let (con, con_se) = empirical_vector(&t, &g, &w, &pinned, x)?;
            let tu = f64s(&theorem_occupation_vector(&g, &w, t.side(x))?);
            let tc: Vec<f64> = (0..g.num_colors())
                .map(|k| {
                    conditional_target_sides(&g, &w, t.side(x), t.side(y), k, l)
                        .map(|v| v.to_f64().unwrap_or(f64::NAN))
                })
                .collect::<torushom::Result<_>>()?;
            for c in 0..g.num_colors() {
                let ratio = |a: f64, b: f64| if b > 0.0 { (a / b).to_string() } else { String::new() };
                table.push([
                    labels[c].to_string(),
                    unc[c].to_string(),
                    con[c].to_string(),
                    tu[c].to_string(),
                    tc[c].to_string(),
                    ratio(con[c], unc[c]),
                    ratio(tc[c], tu[c]),
                ]);
            }
            let comparisons = vec![
                Comparison {
                    label: "unconditional".into(),
                    target: tu.clone(),
                    exact_value: None,
                    empirical_value: Some(unc.clone()),
                    stderr: Some(unc_se),
                    d_inf_distance: d_inf_f64(&unc, &tu),
                },
                Comparison {
                    label: format!("conditional ({relation})"),
                    target: tc.clone(),
                    exact_value: None,
                    empirical_value: Some(con.clone()),
                    stderr: Some(con_se),
                    d_inf_distance: d_inf_f64(&con, &tc),
                },
            ];
            json!({
                "mode": "empirical",
                "m": t.m(),
                "d": t.d(),
                "x": t.format_vertex(x),
                "y": t.format_vertex(y),
                "l": l,
                "relation": relation,
                "steps": cc.steps,
                "seed": cc.seed,
                "comparisons": comparisons,
            })
        }
        Err(e) => return Err(e.into()),
    };
    doc["command"] = json!("influence");
    doc["h"] = json!(name);
    doc["weights"] = json!(format_weights(&w));
    doc["colors"] = json!(labels);
    doc["displayed_sum"] = json!(raw);
    if let Some(k) = k {
        doc["k"] = json!(k);
    }
    Ok(Output {
        body: Body::Doc(doc),
        table: Some(table),
    })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn is_complete_loopless(g: &ConstraintGraph, w: &WeightSet) -> bool {
    let h = g.num_colors();
    w.is_uniform()
        && (0..h).all(|i| (0..h).all(|j| g.adjacent(i, j) == (i != j)))
}

fn conjecture(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let m = cfg.m.unwrap_or(2);
    let ds = match cfg.ds.as_deref() {
        Some(s) => list(s)?,
        None => match cfg.d {
            Some(d) => vec![d],
            None => vec![1, 2, 3],
        },
    };
    let b = budget(cfg);
    let q = is_complete_loopless(&g, &w).then(|| g.num_colors());
    let mut table = Table::new(&["d", "classes", "prefactor", "ln_prediction", "ln_exact", "exact_over_prediction"]);
    let mut rows = Vec::new();
    for &d in &ds {
        let t = TorusGraph::new(m, d)?;
        let (preds, prefactor) = conjecture_total(&g, &w, &t)?;
        let ln_pred = log_sum_exp(&preds.iter().map(|p| p.ln_value()).collect::<Vec<_>>());
        let exact = match transfer_matrix_partition_function_with(&t, &g, &w, &b) {
            Ok(r) => Some(r.z),
            Err(Error::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let ln_exact = exact.as_ref().map(ln_rational);
        let ratio = ln_exact.map(|le| (le - ln_pred).exp());
        table.push([
            d.to_string(),
            preds.len().to_string(),
            prefactor.to_string(),
            ln_pred.to_string(),
            ln_exact.map_or(String::new(), |v| v.to_string()),
            ratio.map_or(String::new(), |v| v.to_string()),
        ]);
        let mut row = json!({
            "d": d,
            "classes": preds.iter().map(|p| p.to_json(&g)).collect::<Vec<_>>(),
            "prefactor": prefactor.to_string(),
            "ln_prediction": ln_pred,
            "exact": exact.as_ref().map(rat_str),
            "ln_exact": ln_exact,
            "exact_over_prediction": ratio,
        });
        if let (Some(q), 2) = (q, m) {
            row["coloring_count"] = coloring_count_prediction(q, d)?.to_json();
        }
        rows.push(row);
    }
    let doc = json!({
        "command": "conjecture",
        "h": name,
        "weights": format_weights(&w),
        "m": m,
        "rows": rows,
    });
    Ok(Output {
        body: Body::Doc(doc),
        table: Some(table),
    })
}

fn identities(cfg: &RunConfig) -> Result<Output> {
    let Instance { g, w, name } = instance(cfg)?;
    let ms = match (cfg.ms.as_deref(), cfg.m) {
        (Some(s), _) => list(s)?,
        (None, Some(m)) => vec![m],
        (None, None) => vec![2, 4, 6],
    };
    // weighted instances are checked on their unweighted blow-up
    let (graph, via_blowup) = if w.is_uniform() && w.get(0).is_one() {
        (g.clone(), false)
    } else {
        (blowup(&g, &w)?.graph, true)
    };
    let unit = WeightSet::uniform(graph.num_colors());
    let cap = cfg.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let mut table = Table::new(&["m", "eta", "delta", "identity_holds", "pairs_checked", "nodes"]);
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for &m in &ms {
        let r = verify_extremal_identities(&graph, &unit, m, cap)?;
        if !r.identity_holds || r.delta_int() < BigInt::one() {
            failures.push(format!("m={m}: identity_holds={} delta={}", r.identity_holds, r.delta));
        }
        table.push([
            m.to_string(),
            r.eta.clone(),
            r.delta.clone(),
            r.identity_holds.to_string(),
            r.identity_checked.to_string(),
            r.nodes_visited.to_string(),
        ]);
        reports.push(serde_json::to_value(&r)?);
    }
    if !failures.is_empty() {
        return Err(Mismatch(failures.join("; ")).into());
    }
    let doc = json!({
        "command": "identities",
        "h": name,
        "weights": format_weights(&w),
        "via_blowup": via_blowup,
        "reports": reports,
    });
    Ok(Output {
        body: Body::Doc(doc),
        table: Some(table),
    })
}

/// Antipodal influence over several dimensions, used by `influence --ds`.
fn influence_trend(cfg: &RunConfig) -> Result<Value> {
    let Instance { g, w, .. } = instance(cfg)?;
    let l = color(&g, cfg.l.as_deref().ok_or_else(|| anyhow!("missing --l"))?)?;
    let ds = list(cfg.ds.as_deref().unwrap_or("2,3,4"))?;
    let trend = antipodal_trend(&g, &w, cfg.m.unwrap_or(2), &ds, l, &budget(cfg))?;
    Ok(Value::Array(trend.iter().map(|r| r.to_json()).collect()))
}
