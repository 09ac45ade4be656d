//! Weighted Glauber dynamics on `Hom(Z_m^d, H)`, ideal edges and phase
//! classification.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint_graph::{
    eta_and_maximal_pairs, ColorSet, ConstraintGraph, Extremal, MaximalPair, WeightSet,
};
use crate::error::{Error, Result};
use crate::exact::{for_each_coloring, pow_rational, Budget, Coloring, Domains};
use crate::torus::{Side, TorusGraph, UnionFind};

const GREEDY_RESTARTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pinned: Option<(usize, usize)>,
    #[serde(default = "one")]
    pub thin: u64,
}

fn one() -> u64 {
    1
}

impl ChainConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        ChainConfig {
            steps,
            burn_in: 0,
            seed,
            pinned: None,
            thin: 1,
        }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_pin(mut self, vertex: usize, color: usize) -> Self {
        self.pinned = Some((vertex, color));
        self
    }

    pub fn validate(&self, t: &TorusGraph, g: &ConstraintGraph) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be positive".into()));
        }
        if self.burn_in >= self.steps {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be below steps ({})",
                self.burn_in, self.steps
            )));
        }
        if let Some((v, c)) = self.pinned {
            t.check_vertex(v)?;
            g.check_color(c)?;
            if t.num_vertices() == 1 {
                return Err(Error::InvalidConfig("cannot pin the only vertex".into()));
            }
        }
        Ok(())
    }
}

/// Per-chain seed: `seed ⊕ splitmix64(index)`.
pub fn chain_seed(seed: u64, index: u64) -> u64 {
    let mut z = index.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    seed ^ (z ^ (z >> 31))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Initializer {
    Given(Coloring),
    Pure(MaximalPair),
    UniformGreedy,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChainStats {
    pub steps: u64,
    /// Steps where the allowed set was a single color.
    pub forced: u64,
    /// Steps that changed the color.
    pub changes: u64,
    pub emitted: u64,
}

/// A running Glauber chain.
pub struct Glauber<'a> {
    t: &'a TorusGraph,
    g: &'a ConstraintGraph,
    weights: Vec<f64>,
    uniform: bool,
    state: Coloring,
    pinned: Option<usize>,
    rng: ChaCha8Rng,
    pub stats: ChainStats,
}

impl<'a> Glauber<'a> {
    pub fn new(
        t: &'a TorusGraph,
        g: &'a ConstraintGraph,
        w: &WeightSet,
        initial: Coloring,
        pinned: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        initial.validate(t, g)?;
        Ok(Glauber {
            t,
            g,
            weights: w.to_f64(),
            uniform: w.is_uniform(),
            state: initial,
            pinned,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: ChainStats::default(),
        })
    }

    pub fn state(&self) -> &Coloring {
        &self.state
    }

    /// Colors allowed at `v` given the current neighbors.
    pub fn allowed(&self, v: usize) -> ColorSet {
        allowed_colors(self.t, self.g, &self.state, v)
    }

    /// One heat-bath update at a uniformly chosen unpinned vertex.
    pub fn step(&mut self) {
        let n = self.t.num_vertices();
        let v = match self.pinned {
            Some(p) => {
                let v = self.rng.gen_range(0..n - 1);
                if v >= p {
                    v + 1
                } else {
                    v
                }
            }
            None => self.rng.gen_range(0..n),
        };
        let s = self.allowed(v);
        debug_assert!(s.contains(self.state.get(v)));
        self.stats.steps += 1;
        let len = s.len();
        let new = if len == 1 {
            self.stats.forced += 1;
            s.iter().next().expect("nonempty")
        } else if self.uniform {
            let i = self.rng.gen_range(0..len);
            s.iter().nth(i).expect("in range")
        } else {
            draw(&mut self.rng, s, &self.weights).expect("nonempty")
        };
        if new != self.state.get(v) {
            self.stats.changes += 1;
            self.state.0[v] = new as u8;
        }
    }
}

/// `{c : c ∼ f(u) for all u ∈ N_v}`.
pub fn allowed_colors(t: &TorusGraph, g: &ConstraintGraph, f: &Coloring, v: usize) -> ColorSet {
    let masks = g.neighbor_masks();
    t.neighbors(v)
        .fold(g.all_colors(), |acc, u| acc.intersection(masks[f.get(u)]))
}

fn draw(rng: &mut ChaCha8Rng, s: ColorSet, weights: &[f64]) -> Option<usize> {
    if s.is_empty() {
        return None;
    }
    let total: f64 = s.iter().map(|c| weights[c]).sum();
    let mut r = rng.gen::<f64>() * total;
    let mut pick = None;
    for c in s.iter() {
        pick = Some(c);
        r -= weights[c];
        if r < 0.0 {
            break;
        }
    }
    pick
}

/// Pure-`(A, B)` coloring with independent draws `∝ λ` inside each side set.
pub fn random_pure_coloring(
    t: &TorusGraph,
    w: &WeightSet,
    pair: MaximalPair,
    rng: &mut ChaCha8Rng,
) -> Coloring {
    let weights = w.to_f64();
    Coloring(
        (0..t.num_vertices())
            .map(|x| {
                let s = if t.is_even(x) { pair.a } else { pair.b };
                draw(rng, s, &weights).expect("nonempty side set") as u8
            })
            .collect(),
    )
}

fn greedy_coloring(
    t: &TorusGraph,
    g: &ConstraintGraph,
    weights: &[f64],
    pinned: Option<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Option<Coloring> {
    let n = t.num_vertices();
    let masks = g.neighbor_masks();
    let mut order: Vec<usize> = (0..n).filter(|&x| pinned.is_none_or(|p| p.0 != x)).collect();
    for _ in 0..GREEDY_RESTARTS {
        order.shuffle(rng);
        let mut f = vec![u8::MAX; n];
        if let Some((y, l)) = pinned {
            f[y] = l as u8;
        }
        let mut ok = true;
        for &x in &order {
            let s = t
                .neighbors(x)
                .filter(|&u| f[u] != u8::MAX)
                .fold(g.all_colors(), |acc, u| acc.intersection(masks[f[u] as usize]));
            match draw(rng, s, weights) {
                Some(c) => f[x] = c as u8,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(Coloring(f));
        }
    }
    None
}

/// Builds the starting state, applying the pin.
pub fn initial_coloring(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    ext: &Extremal,
    init: &Initializer,
    pinned: Option<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Result<Coloring> {
    let pin = |mut f: Coloring| {
        if let Some((y, l)) = pinned {
            f.0[y] = l as u8;
        }
        f
    };
    let f = match init {
        Initializer::Given(f) => pin(f.clone()),
        Initializer::Pure(pair) => pin(random_pure_coloring(t, w, *pair, rng)),
        Initializer::UniformGreedy => {
            match greedy_coloring(t, g, &w.to_f64(), pinned, rng) {
                Some(f) => f,
                None => {
                    // first pure pair compatible with the pin
                    let pair = ext
                        .pairs
                        .iter()
                        .copied()
                        .find(|p| {
                            pinned.is_none_or(|(y, l)| {
                                let s = if t.is_even(y) { p.a } else { p.b };
                                s.contains(l)
                            })
                        })
                        .ok_or(Error::NoValidInitial)?;
                    pin(random_pure_coloring(t, w, pair, rng))
                }
            }
        }
    };
    if f.len() != t.num_vertices() || !f.is_valid(t, g) {
        return Err(Error::NoValidInitial);
    }
    Ok(f)
}

/// Runs one chain; `visit(step, state)` sees each thinned post-burn-in state.
pub fn run_chain<F>(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    cfg: &ChainConfig,
    init: &Initializer,
    mut visit: F,
) -> Result<ChainStats>
where
    F: FnMut(u64, &Coloring),
{
    let w = w.clone().for_graph(g)?;
    cfg.validate(t, g)?;
    let ext = eta_and_maximal_pairs(g, &w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f0 = initial_coloring(t, g, &w, &ext, init, cfg.pinned, &mut rng)?;
    let seed = rng.gen::<u64>();
    let mut chain = Glauber::new(t, g, &w, f0, cfg.pinned.map(|p| p.0), seed)?;
    for step in 1..=cfg.steps {
        chain.step();
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
            debug_assert!(chain.state.is_valid(t, g));
            chain.stats.emitted += 1;
            visit(step, &chain.state);
        }
    }
    Ok(chain.stats)
}

/// Runs `chains` independent chains in parallel. Chain `i` gets a copy of
/// `cfg` with seed [`chain_seed`]`(cfg.seed, i)`; results are ordered by
/// chain index.
pub fn run_chains<T, F>(cfg: &ChainConfig, chains: usize, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, ChainConfig) -> Result<T> + Sync,
{
    (0..chains)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = chain_seed(cfg.seed, i as u64);
            body(i, c)
        })
        .collect()
}

/// Palette `f(N_x)` of every vertex neighborhood.
pub fn neighborhood_palettes(t: &TorusGraph, f: &Coloring) -> Vec<ColorSet> {
    (0..t.num_vertices())
        .map(|x| f.palette(t.neighbors(x)))
        .collect()
}

fn ideal_from_palettes(
    ext: &Extremal,
    pal: &[ColorSet],
    u: usize,
    v: usize,
    t: &TorusGraph,
) -> Option<MaximalPair> {
    let (u, v) = if t.is_even(u) { (u, v) } else { (v, u) };
    let (a, b) = (pal[v], pal[u]);
    ext.contains(a, b).then_some(MaximalPair { a, b })
}

/// The pair `(A, B) ∈ M_Λ(H)` with `f(N_u) = B` and `f(N_v) = A`, if any.
/// The edge is reoriented so that `u ∈ 𝓔`.
pub fn is_ideal_edge(
    t: &TorusGraph,
    ext: &Extremal,
    f: &Coloring,
    u: usize,
    v: usize,
) -> Option<MaximalPair> {
    debug_assert!(t.adjacent(u, v));
    let (u, v) = if t.is_even(u) { (u, v) } else { (v, u) };
    let a = f.palette(t.neighbors(v));
    let b = f.palette(t.neighbors(u));
    ext.contains(a, b).then_some(MaximalPair { a, b })
}

/// Number of edges that are not ideal.
pub fn not_ideal_count(t: &TorusGraph, ext: &Extremal, f: &Coloring) -> usize {
    let pal = neighborhood_palettes(t, f);
    t.edges()
        .into_iter()
        .filter(|&(u, v)| ideal_from_palettes(ext, &pal, u, v, t).is_none())
        .count()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsilonMode {
    /// Average of the not-ideal indicator over every edge per sample.
    AllEdges,
    /// The indicator at one edge.
    SingleEdge(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonEstimate {
    pub p_not_ideal: f64,
    pub stderr: f64,
    pub samples: u64,
    pub batches: usize,
}

/// Mean and batch-means standard error.
pub fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(1);
    if b < 2 {
        return (mean, f64::NAN);
    }
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|i| values[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Monte-Carlo estimate of `Pr(e not ideal)`.
pub fn epsilon_estimate(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    cfg: &ChainConfig,
    init: &Initializer,
    mode: &EpsilonMode,
) -> Result<EpsilonEstimate> {
    let w = w.clone().for_graph(g)?;
    let ext = eta_and_maximal_pairs(g, &w)?;
    let edges = t.edges();
    if let EpsilonMode::SingleEdge(u, v) = *mode {
        t.check_vertex(u)?;
        t.check_vertex(v)?;
        if !t.adjacent(u, v) {
            return Err(Error::InvalidConfig(format!("({u}, {v}) is not an edge")));
        }
    }
    let mut values = Vec::new();
    run_chain(t, g, &w, cfg, init, |_, f| {
        let x = match *mode {
            EpsilonMode::AllEdges => not_ideal_count(t, &ext, f) as f64 / edges.len() as f64,
            EpsilonMode::SingleEdge(u, v) => {
                is_ideal_edge(t, &ext, f, u, v).is_none() as u8 as f64
            }
        };
        values.push(x);
    })?;
    let batches = 20;
    let (p, se) = batch_means(&values, batches);
    Ok(EpsilonEstimate {
        p_not_ideal: p,
        stderr: se,
        samples: values.len() as u64,
        batches: batches.min(values.len()),
    })
}

/// Exact `Pr(uv not ideal)` by enumeration.
pub fn exact_not_ideal_probability(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    u: usize,
    v: usize,
    budget: &Budget,
) -> Result<BigRational> {
    let w = w.clone().for_graph(g)?;
    t.check_vertex(u)?;
    t.check_vertex(v)?;
    if !t.adjacent(u, v) {
        return Err(Error::InvalidConfig(format!("({u}, {v}) is not an edge")));
    }
    let ext = eta_and_maximal_pairs(g, &w)?;
    let h = g.num_colors();
    // color-count histogram → (all, not ideal)
    let mut hist: HashMap<Vec<u32>, (u64, u64)> = HashMap::new();
    for_each_coloring(t, g, &Domains::full(t, g), budget.brute_states, |f| {
        let mut counts = vec![0u32; h];
        for &c in f {
            counts[c as usize] += 1;
        }
        let col = Coloring(f.to_vec());
        let bad = is_ideal_edge(t, &ext, &col, u, v).is_none();
        let e = hist.entry(counts).or_default();
        e.0 += 1;
        e.1 += bad as u64;
        true
    })?;
    let mut z = BigRational::zero();
    let mut bad = BigRational::zero();
    for (counts, (all, nb)) in hist {
        let wt = counts
            .iter()
            .enumerate()
            .fold(BigRational::from_integer(1.into()), |acc, (k, &c)| {
                acc * pow_rational(w.get(k), c as usize)
            });
        z += &wt * BigRational::from_integer(BigUint::from(all).into());
        bad += wt * BigRational::from_integer(BigUint::from(nb).into());
    }
    Ok(bad / z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub defect_cap: f64,
    pub balance_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            defect_cap: 0.1,
            balance_tol: 0.2,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !ok(self.defect_cap) || self.balance_tol.is_nan() || self.balance_tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "thresholds out of range: defect_cap={}, balance_tol={}",
                self.defect_cap, self.balance_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseKind {
    Pure(MaximalPair),
    Exceptional,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColorDeviation {
    pub side: Side,
    pub color: usize,
    pub observed: f64,
    pub target: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLabel {
    pub kind: PhaseKind,
    /// `F₁`: even vertices colored outside `A`.
    pub defect_e: Vec<usize>,
    /// `F₂`: odd vertices colored outside `B`.
    pub defect_o: Vec<usize>,
    pub ideal_edges: usize,
    pub total_edges: usize,
    /// Vertices in the largest component of the ideal-edge subgraph.
    pub giant_size: usize,
    pub balanced: bool,
    pub deviations: Vec<ColorDeviation>,
}

impl PhaseLabel {
    pub fn ideal_fraction(&self) -> BigRational {
        BigRational::new(self.ideal_edges.into(), self.total_edges.max(1).into())
    }

    pub fn ideal_fraction_f64(&self) -> f64 {
        self.ideal_fraction().to_f64().unwrap_or(0.0)
    }

    pub fn to_json(&self, g: &ConstraintGraph) -> serde_json::Value {
        let kind = match self.kind {
            PhaseKind::Pure(p) => serde_json::json!({
                "pure": {"a": g.format_set(p.a), "b": g.format_set(p.b)}
            }),
            PhaseKind::Exceptional => serde_json::json!("exceptional"),
        };
        serde_json::json!({
            "kind": kind,
            "defect_e": self.defect_e.len(),
            "defect_o": self.defect_o.len(),
            "ideal_edges": self.ideal_edges,
            "total_edges": self.total_edges,
            "giant_size": self.giant_size,
            "balanced": self.balanced,
        })
    }
}

/// Labels `f` as pure-`(A, B)` when the largest component of the ideal
/// subgraph covers at least `(1 − defect_cap)·m^d` vertices.
pub fn classify(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    ext: &Extremal,
    f: &Coloring,
    th: &Thresholds,
) -> PhaseLabel {
    debug_assert!(f.is_valid(t, g));
    let n = t.num_vertices();
    let pal = neighborhood_palettes(t, f);
    let edges = t.edges();
    let mut uf = UnionFind::new(n);
    let mut pair_at = vec![None; n];
    let mut ideal = 0;
    for &(u, v) in &edges {
        if let Some(p) = ideal_from_palettes(ext, &pal, u, v, t) {
            ideal += 1;
            uf.union(u, v);
            pair_at[u] = Some(p);
            pair_at[v] = Some(p);
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for x in 0..n {
        if pair_at[x].is_none() {
            continue;
        }
        let s = uf.component_size(x);
        if best.is_none_or(|(bs, _)| s > bs) {
            best = Some((s, x));
        }
    }
    let giant = best.map_or(0, |b| b.0);
    let mut label = PhaseLabel {
        kind: PhaseKind::Exceptional,
        defect_e: Vec::new(),
        defect_o: Vec::new(),
        ideal_edges: ideal,
        total_edges: edges.len(),
        giant_size: giant,
        balanced: false,
        deviations: Vec::new(),
    };
    let Some((size, root_vertex)) = best else {
        return label;
    };
    if (size as f64) < (1.0 - th.defect_cap) * n as f64 {
        return label;
    }
    let pair = pair_at[root_vertex].expect("vertex on an ideal edge");
    label.kind = PhaseKind::Pure(pair);
    for x in 0..n {
        let c = f.get(x);
        if t.is_even(x) {
            if !pair.a.contains(c) {
                label.defect_e.push(x);
            }
        } else if !pair.b.contains(c) {
            label.defect_o.push(x);
        }
    }
    let (devs, balanced) = balance(t, w, f, pair, th.balance_tol);
    label.deviations = devs;
    label.balanced = balanced;
    label
}

fn balance(
    t: &TorusGraph,
    w: &WeightSet,
    f: &Coloring,
    pair: MaximalPair,
    tol: f64,
) -> (Vec<ColorDeviation>, bool) {
    let n = t.num_vertices();
    let h = w.len();
    let mut counts = [vec![0usize; h], vec![0usize; h]];
    for x in 0..n {
        counts[!t.is_even(x) as usize][f.get(x)] += 1;
    }
    let weights = w.to_f64();
    let half = n as f64 / 2.0;
    let mut devs = Vec::new();
    let mut ok = true;
    for (side, set) in [(Side::Even, pair.a), (Side::Odd, pair.b)] {
        let total: f64 = set.iter().map(|k| weights[k]).sum();
        for k in set.iter() {
            let observed = counts[(side == Side::Odd) as usize][k] as f64 / half;
            let target = weights[k] / total;
            let within = (observed - target).abs() <= tol * target;
            ok &= within;
            devs.push(ColorDeviation {
                side,
                color: k,
                observed,
                target,
                within,
            });
        }
    }
    (devs, ok)
}

/// Per-side color histograms `(𝓔, 𝓞)`.
pub fn side_histograms(t: &TorusGraph, f: &Coloring, h: usize) -> (Vec<usize>, Vec<usize>) {
    let mut e = vec![0; h];
    let mut o = vec![0; h];
    for x in 0..t.num_vertices() {
        if t.is_even(x) {
            e[f.get(x)] += 1;
        } else {
            o[f.get(x)] += 1;
        }
    }
    (e, o)
}

/// One line of the sample stream.
#[derive(Clone, Debug, Serialize)]
pub struct SampleRecord {
    pub chain: usize,
    pub step: u64,
    pub phase_label: serde_json::Value,
    pub ideal_fraction: f64,
    pub color_histogram_e: Vec<usize>,
    pub color_histogram_o: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coloring_rle: Option<Vec<(u8, usize)>>,
}

/// `f ↦ f(· − e_1)`, the translation that swaps `𝓔` and `𝓞`.
pub fn shift_coloring(t: &TorusGraph, f: &Coloring) -> Coloring {
    let n = t.num_vertices();
    let mut out = vec![0u8; n];
    for x in 0..n {
        out[t.translate(x, 0, 1)] = f.0[x];
    }
    Coloring(out)
}

/// `f ↦ φ ∘ f`.
pub fn recolor(f: &Coloring, perm: &[usize]) -> Coloring {
    Coloring(f.0.iter().map(|&c| perm[c as usize] as u8).collect())
}

/// Heat-bath transition probabilities out of `f`, restricted to colorings
/// that differ from `f` (plus the holding probability). Used for
/// reversibility checks.
pub fn transition_row(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    f: &Coloring,
    pinned: Option<usize>,
) -> Vec<(Coloring, BigRational)> {
    let free: Vec<usize> = (0..t.num_vertices())
        .filter(|&x| Some(x) != pinned)
        .collect();
    let pick = BigRational::new(1.into(), free.len().into());
    let mut out: HashMap<Coloring, BigRational> = HashMap::new();
    for &v in &free {
        let s = allowed_colors(t, g, f, v);
        let total: BigRational = s.iter().map(|c| w.get(c).clone()).sum();
        for c in s.iter() {
            let mut h = f.clone();
            h.0[v] = c as u8;
            let p = &pick * w.get(c) / &total;
            *out.entry(h).or_insert_with(BigRational::zero) += p;
        }
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort_by(|a, b| a.0 .0.cmp(&b.0 .0));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint_graph::presets;
    use crate::exact::{coloring_weight, exact_marginal_vector};

    fn set(cs: &[usize]) -> ColorSet {
        ColorSet::from_colors(cs.iter().copied())
    }

    fn enumerate(t: &TorusGraph, g: &ConstraintGraph) -> Vec<Coloring> {
        let mut out = Vec::new();
        for_each_coloring(t, g, &Domains::full(t, g), 1 << 24, |f| {
            out.push(Coloring(f.to_vec()));
            true
        })
        .unwrap();
        out
    }

    fn tv_to_exact(t: &TorusGraph, g: &ConstraintGraph, w: &WeightSet, steps: u64, seed: u64) -> f64 {
        let all = enumerate(t, g);
        let weights: Vec<f64> = all
            .iter()
            .map(|f| coloring_weight(t, g, w, f).unwrap().to_f64().unwrap())
            .collect();
        let z: f64 = weights.iter().sum();
        let index: HashMap<Coloring, usize> =
            all.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        let mut counts = vec![0u64; all.len()];
        let cfg = ChainConfig::new(steps, seed).with_burn_in(1000);
        let stats = run_chain(t, g, w, &cfg, &Initializer::UniformGreedy, |_, f| {
            counts[index[f]] += 1;
        })
        .unwrap();
        let total = stats.emitted as f64;
        counts
            .iter()
            .zip(&weights)
            .map(|(&c, &wt)| (c as f64 / total - wt / z).abs())
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn looped_single_color_never_moves() {
        let t = TorusGraph::new(2, 3).unwrap();
        let g = presets::complete_looped(1).unwrap();
        let mut seen = 0;
        run_chain(&t, &g, &WeightSet::uniform(1), &ChainConfig::new(1000, 1), &Initializer::UniformGreedy, |_, f| {
            assert_eq!(f, &Coloring::constant(8, 0));
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 1000);
    }

    #[test]
    fn forced_moves() {
        let t = TorusGraph::new(2, 2).unwrap();
        let ind = presets::hard_core();
        // vertex 0 = in, so its neighbors can only be out
        let f = Coloring(vec![0, 1, 1, 1]);
        assert_eq!(allowed_colors(&t, &ind, &f, 1), set(&[1]));
        let k3 = presets::complete(3).unwrap();
        let f = Coloring(vec![0, 1, 2, 0]);
        assert_eq!(allowed_colors(&t, &k3, &f, 0), set(&[0]));
    }

    #[test]
    fn deterministic_given_seed() {
        let t = TorusGraph::new(4, 2).unwrap();
        let g = presets::complete(3).unwrap();
        let w = WeightSet::uniform(3);
        let cfg = ChainConfig::new(5000, 42).with_thin(7);
        let run = || {
            let mut v = Vec::new();
            run_chain(&t, &g, &w, &cfg, &Initializer::UniformGreedy, |s, f| v.push((s, f.clone())))
                .unwrap();
            v
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::hard_core();
        assert!(ChainConfig::new(0, 1).validate(&t, &g).is_err());
        assert!(ChainConfig::new(10, 1).with_burn_in(10).validate(&t, &g).is_err());
        assert!(ChainConfig::new(10, 1).with_thin(0).validate(&t, &g).is_err());
        assert!(ChainConfig::new(10, 1).with_pin(4, 0).validate(&t, &g).is_err());
        assert!(ChainConfig::new(10, 1).with_pin(3, 1).validate(&t, &g).is_ok());
    }

    #[test]
    fn pin_without_extension_fails() {
        // color 2 is isolated: no valid coloring can use it
        let g = ConstraintGraph::from_edges(3, [(0, 1)]).unwrap();
        let t = TorusGraph::new(2, 2).unwrap();
        let cfg = ChainConfig::new(10, 1).with_pin(0, 2);
        let r = run_chain(&t, &g, &WeightSet::uniform(3), &cfg, &Initializer::UniformGreedy, |_, _| {});
        assert_eq!(r.unwrap_err(), Error::NoValidInitial);
    }

    #[test]
    fn stationary_on_c4_hard_core() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::hard_core();
        let tv = tv_to_exact(&t, &g, &WeightSet::uniform(2), 1_000_000, 3);
        assert!(tv < 0.01, "tv = {tv}");
        let w = WeightSet::from_ratios(&[(3, 1), (1, 1)]).unwrap();
        let tv = tv_to_exact(&t, &g, &w, 1_000_000, 4);
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn pinned_marginals_match_exact() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::complete(3).unwrap();
        let w = WeightSet::uniform(3);
        let x = t.antipode(0);
        let exact = exact_marginal_vector(&t, &g, &w, x, Some((0, 0)), &Budget::default()).unwrap();
        let mut counts = [0u64; 3];
        let cfg = ChainConfig::new(400_000, 9).with_burn_in(100).with_pin(0, 0);
        let stats = run_chain(&t, &g, &w, &cfg, &Initializer::UniformGreedy, |_, f| {
            assert_eq!(f.get(0), 0);
            counts[f.get(x)] += 1;
        })
        .unwrap();
        let tv: f64 = (0..3)
            .map(|k| (counts[k] as f64 / stats.emitted as f64 - exact[k].to_f64().unwrap()).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn kernel_is_reversible() {
        let t = TorusGraph::new(2, 2).unwrap();
        for (g, w) in [
            (presets::hard_core(), WeightSet::from_ratios(&[(5, 2), (1, 1)]).unwrap()),
            (presets::widom_rowlinson(), WeightSet::from_ratios(&[(1, 1), (2, 1), (1, 3)]).unwrap()),
        ] {
            let all = enumerate(&t, &g);
            let rows: HashMap<Coloring, Vec<(Coloring, BigRational)>> = all
                .iter()
                .map(|f| (f.clone(), transition_row(&t, &g, &w, f, None)))
                .collect();
            for f in &all {
                let total: BigRational = rows[f].iter().map(|(_, p)| p.clone()).sum();
                assert_eq!(total, BigRational::from_integer(1.into()));
                let pf = coloring_weight(&t, &g, &w, f).unwrap();
                for (h, p) in &rows[f] {
                    let back = rows[h].iter().find(|(k, _)| k == f).unwrap().1.clone();
                    let ph = coloring_weight(&t, &g, &w, h).unwrap();
                    assert_eq!(&pf * p, ph * back);
                }
            }
        }
    }

    #[test]
    fn empirical_flows_balance() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::hard_core();
        let w = WeightSet::uniform(2);
        let mut flows: HashMap<(Coloring, Coloring), u64> = HashMap::new();
        let mut prev: Option<Coloring> = None;
        run_chain(&t, &g, &w, &ChainConfig::new(400_000, 11), &Initializer::UniformGreedy, |_, f| {
            if let Some(p) = prev.take() {
                if &p != f {
                    *flows.entry((p, f.clone())).or_default() += 1;
                }
            }
            prev = Some(f.clone());
        })
        .unwrap();
        for ((a, b), &n) in &flows {
            let back = flows.get(&(b.clone(), a.clone())).copied().unwrap_or(0);
            let diff = (n as f64 - back as f64).abs();
            assert!(diff <= 5.0 * ((n + back) as f64).sqrt() + 5.0, "{a:?}->{b:?}: {n} vs {back}");
        }
    }

    #[test]
    fn ideal_edge_examples() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::hard_core();
        let ext = eta_and_maximal_pairs(&g, &WeightSet::uniform(2)).unwrap();
        let x00 = t.encode(&[0, 0]).unwrap();
        let mut f = Coloring::constant(4, 1);
        f.0[x00] = 0;
        let u = t.encode(&[1, 1]).unwrap();
        let v = t.encode(&[1, 0]).unwrap();
        assert_eq!(
            is_ideal_edge(&t, &ext, &f, u, v),
            Some(MaximalPair { a: set(&[0, 1]), b: set(&[1]) })
        );
        assert_eq!(is_ideal_edge(&t, &ext, &f, v, u), is_ideal_edge(&t, &ext, &f, u, v));
        let out = Coloring::constant(4, 1);
        assert_eq!(is_ideal_edge(&t, &ext, &out, u, v), None);
        let label = classify(&t, &g, &WeightSet::uniform(2), &ext, &out, &Thresholds::default());
        assert_eq!(label.kind, PhaseKind::Exceptional);
        assert_eq!(label.ideal_edges, 0);
    }

    #[test]
    fn looped_single_color_has_no_bad_edges() {
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::complete_looped(1).unwrap();
        let p = exact_not_ideal_probability(&t, &g, &WeightSet::uniform(1), 0, 1, &Budget::default())
            .unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn exact_epsilon_on_c4_hard_core() {
        // oracle: palettes read off each of the 7 independent sets of C_4
        let t = TorusGraph::new(2, 2).unwrap();
        let g = presets::hard_core();
        let w = WeightSet::uniform(2);
        let ext = eta_and_maximal_pairs(&g, &w).unwrap();
        let all = enumerate(&t, &g);
        assert_eq!(all.len(), 7);
        let (u, v) = (0, t.neighbors(0).next().unwrap());
        let bad = all
            .iter()
            .filter(|f| {
                let even = if t.is_even(u) { u } else { v };
                let odd = if even == u { v } else { u };
                let b = f.palette(t.neighbors(even));
                let a = f.palette(t.neighbors(odd));
                !ext.pairs.contains(&MaximalPair { a, b })
            })
            .count();
        let p = exact_not_ideal_probability(&t, &g, &w, u, v, &Budget::default()).unwrap();
        assert_eq!(p, BigRational::new(bad.into(), 7.into()));
    }

    #[test]
    fn pure_coloring_classifies_pure() {
        let t = TorusGraph::new(2, 3).unwrap();
        let g = presets::complete(3).unwrap();
        let w = WeightSet::uniform(3);
        let ext = eta_and_maximal_pairs(&g, &w).unwrap();
        // 𝓔 ≡ 1, 𝓞 colored 2/3 by the first coordinate; every even vertex
        // sees both colors
        let f = Coloring(
            (0..8)
                .map(|x| {
                    if t.is_even(x) {
                        0
                    } else {
                        1 + (t.decode(x)[0] as u8)
                    }
                })
                .collect(),
        );
        assert!(f.is_valid(&t, &g));
        let pair = MaximalPair { a: set(&[0]), b: set(&[1, 2]) };
        let label = classify(&t, &g, &w, &ext, &f, &Thresholds::default());
        assert_eq!(label.kind, PhaseKind::Pure(pair));
        assert!(label.defect_e.is_empty() && label.defect_o.is_empty());
        assert_eq!(label.ideal_edges, 12);
        let tight = Thresholds { defect_cap: 0.1, balance_tol: 0.0 };
        let counts = side_histograms(&t, &f, 3).1;
        let label = classify(&t, &g, &w, &ext, &f, &tight);
        assert_eq!(label.balanced, counts[1] == counts[2]);

        let shifted = shift_coloring(&t, &f);
        let label = classify(&t, &g, &w, &ext, &shifted, &Thresholds::default());
        assert_eq!(label.kind, PhaseKind::Pure(pair.swapped()));
    }

    #[test]
    fn sampled_labels_are_consistent() {
        let t = TorusGraph::new(4, 2).unwrap();
        let g = presets::complete(4).unwrap();
        let w = WeightSet::uniform(4);
        let ext = eta_and_maximal_pairs(&g, &w).unwrap();
        let th = Thresholds::default();
        let perm = [1, 2, 3, 0];
        let cfg = ChainConfig::new(20_000, 5).with_thin(100);
        let pair = ext.pairs[0];
        run_chain(&t, &g, &w, &cfg, &Initializer::Pure(pair), |_, f| {
            let l = classify(&t, &g, &w, &ext, f, &th);
            let s = classify(&t, &g, &w, &ext, &shift_coloring(&t, f), &th);
            let p = classify(&t, &g, &w, &ext, &recolor(f, &perm), &th);
            match l.kind {
                PhaseKind::Pure(q) => {
                    assert!((l.defect_e.len() + l.defect_o.len()) as f64 <= th.defect_cap * 16.0);
                    assert_eq!(s.kind, PhaseKind::Pure(q.swapped()));
                    assert_eq!(p.kind, PhaseKind::Pure(q.map(&perm)));
                }
                PhaseKind::Exceptional => {
                    assert_eq!(s.kind, PhaseKind::Exceptional);
                    assert_eq!(p.kind, PhaseKind::Exceptional);
                }
            }
        })
        .unwrap();
    }

    #[test]
    fn batch_means_basics() {
        let (m, se) = batch_means(&[1.0; 100], 10);
        assert_eq!(m, 1.0);
        assert_eq!(se, 0.0);
        assert!(batch_means(&[], 10).0.is_nan());
    }

    #[test]
    fn chain_seeds_differ() {
        let s: Vec<u64> = (0..8).map(|i| chain_seed(7, i)).collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
    }
}
