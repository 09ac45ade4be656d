//! `torushom`: extremal structure, exact counts, Glauber sampling and the
//! occupation predictors for H-colorings of the even torus.

mod commands;
mod config;
mod corpus;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{Body, Mismatch, Output, Table};
use config::{parse_count, RunConfig};

#[derive(Parser)]
#[command(name = "torushom", version, about = "H-colorings of the even discrete torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// eta, the maximal pairs, the support family and the blow-up
    Analyze,
    /// Exact partition function
    Count,
    /// Glauber dynamics with phase labels, one JSON line per sample
    Sample,
    /// Occupation and influence at x given f(y) = l, exact when feasible
    Influence,
    /// Predicted class weights against exact counts
    Conjecture,
    /// Alternating-tuple identities and the gap delta
    Identities,
    /// Print the effective configuration (file merged with flags)
    Config {
        #[arg(long)]
        json: bool,
    },
    /// Run the golden corpus
    Corpus {
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Rewrite the golden files instead of comparing
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines or JSON); flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset (ind, wr, kq:N, k4loop, path:N, cycle:N, A+B) or a file
    #[arg(long, global = true)]
    h: Option<String>,
    /// Comma-separated positive rationals, e.g. 3/2,1
    #[arg(long, global = true)]
    weights: Option<String>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    ms: Option<String>,
    #[arg(long, global = true)]
    ds: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// brute, transfer or both
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true, value_parser = count)]
    steps: Option<u64>,
    #[arg(long, global = true, value_parser = count)]
    burn_in: Option<u64>,
    #[arg(long, global = true, value_parser = count)]
    thin: Option<u64>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    /// vertex:color
    #[arg(long, global = true)]
    pin: Option<String>,
    /// `antipodal`, coordinates `1,0,1` or `#index`
    #[arg(long, global = true)]
    x: Option<String>,
    #[arg(long, global = true)]
    y: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    #[arg(long, global = true)]
    l: Option<String>,
    #[arg(long, global = true)]
    defect_cap: Option<f64>,
    #[arg(long, global = true)]
    balance_tol: Option<f64>,
    /// Include run-length encoded colorings in the sample stream
    #[arg(long, global = true)]
    rle: bool,
    #[arg(long, global = true, value_parser = count)]
    node_cap: Option<u64>,
    #[arg(long, global = true, value_parser = count)]
    brute_states: Option<u64>,
    #[arg(long, global = true, value_parser = count)]
    layer_states: Option<u64>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    csv: Option<String>,
    /// Add wall-clock time under `metadata`
    #[arg(long, global = true)]
    timing: bool,
}

fn count(s: &str) -> Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

impl Common {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            command: None,
            h: self.h.clone(),
            weights: self.weights.clone(),
            m: self.m,
            d: self.d,
            ms: self.ms.clone(),
            ds: self.ds.clone(),
            seed: self.seed,
            method: self.method.clone(),
            steps: self.steps,
            burn_in: self.burn_in,
            thin: self.thin,
            chains: self.chains,
            pin: self.pin.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
            k: self.k.clone(),
            l: self.l.clone(),
            defect_cap: self.defect_cap,
            balance_tol: self.balance_tol,
            rle: self.rle.then_some(true),
            node_cap: self.node_cap,
            brute_states: self.brute_states,
            layer_states: self.layer_states,
            out: self.out.clone(),
            csv: self.csv.clone(),
            timing: self.timing.then_some(true),
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Analyze => "analyze",
        Command::Count => "count",
        Command::Sample => "sample",
        Command::Influence => "influence",
        Command::Conjecture => "conjecture",
        Command::Identities => "identities",
        Command::Config { .. } => "config",
        Command::Corpus { .. } => "corpus",
    }
}

fn write_csv(path: &str, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {path}"))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn emit(cfg: &RunConfig, out: &Output, elapsed_ms: Option<f64>) -> Result<()> {
    let meta = elapsed_ms.map(|ms| json!({"runtime_ms": ms}));
    let mut text = String::new();
    match &out.body {
        Body::Doc(v) => {
            let mut v = v.clone();
            if let Some(m) = meta {
                v["metadata"] = m;
            }
            text = serde_json::to_string_pretty(&v)?;
            text.push('\n');
        }
        Body::Lines(lines) => {
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                let mut line = line.clone();
                if let (Some(m), true) = (&meta, i == last) {
                    line["metadata"] = m.clone();
                }
                text.push_str(&serde_json::to_string(&line)?);
                text.push('\n');
            }
        }
    }
    match cfg.out.as_deref() {
        Some(path) if path != "-" => {
            std::fs::write(path, text).with_context(|| format!("writing {path}"))?
        }
        _ => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    if let (Some(path), Some(table)) = (cfg.csv.as_deref(), &out.table) {
        write_csv(path, table)?;
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Mismatch>().is_some() {
        return 4;
    }
    match e.downcast_ref::<torushom::Error>() {
        Some(torushom::Error::BudgetExceeded { .. } | torushom::Error::CapExceeded { .. }) => 3,
        _ => 2,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(n) = std::env::var("TORUSHOM_THREADS") {
        let n: usize = n.trim().parse().context("TORUSHOM_THREADS")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.merge(&cli.common.to_config());
    cfg.command = Some(command_name(&cli.command).to_string());
    if let Command::Config { json } = cli.command {
        let text = if json {
            serde_json::to_string_pretty(&cfg.to_json())? + "\n"
        } else {
            cfg.to_kv()
        };
        print!("{text}");
        return Ok(());
    }
    let start = Instant::now();
    let out = match &cli.command {
        Command::Corpus { dir, bless } => {
            let dir = dir.clone().unwrap_or_else(corpus::default_dir);
            Output {
                body: Body::Doc(corpus::run(&dir, *bless)?),
                table: None,
            }
        }
        _ => commands::run(&cfg)?,
    };
    let elapsed = cfg
        .timing
        .unwrap_or(false)
        .then(|| start.elapsed().as_secs_f64() * 1000.0);
    emit(&cfg, &out, elapsed)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
