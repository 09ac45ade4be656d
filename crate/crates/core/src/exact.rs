//! Exact weighted counting over `Hom(Z_m^d, H)`.
//!
//! Two independent routes compute `Z_Λ`: depth-first enumeration with
//! pruning, and a layered transfer matrix along the last coordinate. Both
//! work with the integer weights `C λ_k` and divide by `C^{m^d}` at the end,
//! so results are exact rationals. Per-vertex color domains implement
//! pinning, which is how conditional marginals are computed.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint_graph::{
    eta_and_maximal_pairs, ColorSet, ConstraintGraph, MaximalPair, WeightSet,
};
use crate::error::{Error, Result};
use crate::torus::TorusGraph;

/// A total assignment of colors to torus vertices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coloring(pub Vec<u8>);

impl Coloring {
    pub fn constant(n: usize, k: usize) -> Self {
        Coloring(vec![k as u8; n])
    }

    #[inline]
    pub fn get(&self, x: usize) -> usize {
        self.0[x] as usize
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks `f(u) f(v) ∈ E(H)` for every torus edge.
    pub fn validate(&self, t: &TorusGraph, g: &ConstraintGraph) -> Result<()> {
        if self.len() != t.num_vertices() {
            return Err(Error::ColoringLength {
                expected: t.num_vertices(),
                got: self.len(),
            });
        }
        for &k in &self.0 {
            g.check_color(k as usize)?;
        }
        for (u, v) in t.edges() {
            if !g.adjacent(self.get(u), self.get(v)) {
                return Err(Error::InvalidColoring { u, v });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, t: &TorusGraph, g: &ConstraintGraph) -> bool {
        self.validate(t, g).is_ok()
    }

    /// Colors appearing on `vertices`.
    pub fn palette<I: IntoIterator<Item = usize>>(&self, vertices: I) -> ColorSet {
        vertices
            .into_iter()
            .fold(ColorSet::EMPTY, |s, x| s.with(self.get(x)))
    }

    /// Run-length encoding as `(color, run)` pairs.
    pub fn run_lengths(&self) -> Vec<(u8, usize)> {
        let mut out: Vec<(u8, usize)> = Vec::new();
        for &c in &self.0 {
            match out.last_mut() {
                Some((last, run)) if *last == c => *run += 1,
                _ => out.push((c, 1)),
            }
        }
        out
    }
}

impl fmt::Debug for Coloring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coloring{:?}", self.0)
    }
}

/// Allowed colors per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domains(pub Vec<ColorSet>);

impl Domains {
    pub fn full(t: &TorusGraph, g: &ConstraintGraph) -> Self {
        Domains(vec![g.all_colors(); t.num_vertices()])
    }

    /// Restricts vertex `x` to color `k` (intersecting with the current domain).
    pub fn pin(mut self, x: usize, k: usize) -> Self {
        self.0[x] = self.0[x].intersection(ColorSet::singleton(k));
        self
    }

    pub fn restrict(mut self, x: usize, allowed: ColorSet) -> Self {
        self.0[x] = self.0[x].intersection(allowed);
        self
    }

    /// Number of unconstrained assignments, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        self.0
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }
}

fn states_text(states: u128) -> String {
    if states == u128::MAX {
        "at least 2^128".into()
    } else {
        states.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Transfer,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Brute => "brute",
            Method::Transfer => "transfer",
        })
    }
}

/// State-space limits. Exceeding one is a hard error, never a truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Bound on `Π_x |domain(x)|` for enumeration (default `10^8`).
    pub brute_states: u64,
    /// Bound on `h^{m^{d-1}}` per layer for the transfer matrix (default `10^7`).
    pub layer_states: u64,
    /// Bound on the dense half-product size `S_0 · S_{m/2}` (default `10^8`).
    pub transfer_cells: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            brute_states: 100_000_000,
            layer_states: 10_000_000,
            transfer_cells: 100_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionFunctionResult {
    pub z: BigRational,
    pub method: Method,
    pub instance: String,
}

impl PartitionFunctionResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instance": self.instance,
            "method": self.method,
            "z_numerator": self.z.numer().to_string(),
            "z_denominator": self.z.denom().to_string(),
        })
    }
}

/// `w_Λ(f) = Π_v λ_{f(v)}`.
pub fn coloring_weight(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    f: &Coloring,
) -> Result<BigRational> {
    f.validate(t, g)?;
    Ok(f.0
        .iter()
        .fold(BigRational::one(), |acc, &k| acc * w.get(k as usize)))
}

/// Total weight of pure-`(A, B)` colorings: `(λ_A λ_B)^{m^d / 2}`.
pub fn pure_coloring_weight(
    g: &ConstraintGraph,
    w: &WeightSet,
    pair: MaximalPair,
    t: &TorusGraph,
) -> BigRational {
    debug_assert!(g.all_adjacent(pair.a, pair.b));
    let base = w.subset_weight(pair.a) * w.subset_weight(pair.b);
    pow_rational(&base, t.num_vertices() / 2)
}

pub(crate) fn pow_rational(base: &BigRational, exp: usize) -> BigRational {
    num_traits::pow::pow(base.clone(), exp)
}

/// Checked semiring used by the counting kernels. `u128` is tried first and
/// the computation is redone in `BigUint` on overflow.
trait Acc: Clone + Send + Sync {
    fn acc_zero() -> Self;
    fn acc_is_zero(&self) -> bool;
    fn from_big(x: &BigUint) -> Option<Self>;
    fn add(&self, other: &Self) -> Option<Self>;
    fn mul(&self, other: &Self) -> Option<Self>;
    fn into_big(self) -> BigUint;
}

impl Acc for u128 {
    fn acc_zero() -> Self {
        0
    }
    fn acc_is_zero(&self) -> bool {
        *self == 0
    }
    fn from_big(x: &BigUint) -> Option<Self> {
        x.to_u128()
    }
    fn add(&self, other: &Self) -> Option<Self> {
        self.checked_add(*other)
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Acc for BigUint {
    fn acc_zero() -> Self {
        <BigUint as Zero>::zero()
    }
    fn acc_is_zero(&self) -> bool {
        <BigUint as Zero>::is_zero(self)
    }
    fn from_big(x: &BigUint) -> Option<Self> {
        Some(x.clone())
    }
    fn add(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Integer weights `C λ_k` and the scale `C`.
fn integer_weights(w: &WeightSet) -> (BigUint, Vec<BigUint>) {
    let (c, ints) = w.integer_scaling();
    let to_u = |x: num_bigint::BigInt| x.to_biguint().expect("weights are positive");
    (to_u(c), ints.into_iter().map(to_u).collect())
}

fn check_instance(t: &TorusGraph, g: &ConstraintGraph, w: &WeightSet, dom: &Domains) -> Result<()> {
    if w.len() != g.num_colors() {
        return Err(Error::WeightCount {
            expected: g.num_colors(),
            got: w.len(),
        });
    }
    if dom.0.len() != t.num_vertices() {
        return Err(Error::ColoringLength {
            expected: t.num_vertices(),
            got: dom.0.len(),
        });
    }
    if g.num_colors() > u8::MAX as usize + 1 {
        return Err(Error::TooManyColors {
            what: "exact counting",
            count: g.num_colors(),
            cap: u8::MAX as usize + 1,
        });
    }
    Ok(())
}

fn instance_descriptor(t: &TorusGraph, g: &ConstraintGraph) -> String {
    format!("{},h={}", t.descriptor(), g.num_colors())
}

fn rational_result(total: BigUint, c: &BigUint, n: usize) -> BigRational {
    let denom = num_traits::pow::pow(c.clone(), n);
    BigRational::new(total.into(), denom.into())
}

/// Depth-first enumeration of every valid coloring within `dom`, in
/// lexicographic order of the assignment vector. `visit` returns `false` to
/// stop early.
pub fn for_each_coloring<F>(
    t: &TorusGraph,
    g: &ConstraintGraph,
    dom: &Domains,
    budget: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[u8]) -> bool,
{
    let states = dom.state_count();
    if states > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "enumeration",
            needed: states_text(states),
            budget,
        });
    }
    let n = t.num_vertices();
    let back: Vec<Vec<usize>> = (0..n)
        .map(|x| t.neighbors(x).filter(|&y| y < x).collect())
        .collect();
    let masks = g.neighbor_masks();
    let allowed_at = |x: usize, f: &[u8]| -> u64 {
        back[x]
            .iter()
            .fold(dom.0[x].0, |acc, &y| acc & masks[f[y] as usize].0)
    };

    let mut f = vec![0u8; n];
    let mut remaining = vec![0u64; n];
    let mut x = 0usize;
    remaining[0] = allowed_at(0, &f);
    loop {
        if remaining[x] == 0 {
            if x == 0 {
                return Ok(());
            }
            x -= 1;
            continue;
        }
        let k = remaining[x].trailing_zeros();
        remaining[x] &= remaining[x] - 1;
        f[x] = k as u8;
        if x + 1 == n {
            if !visit(&f) {
                return Ok(());
            }
        } else {
            x += 1;
            remaining[x] = allowed_at(x, &f);
        }
    }
}

fn brute_force_sum<A: Acc>(
    t: &TorusGraph,
    g: &ConstraintGraph,
    dom: &Domains,
    weights: &[A],
) -> Option<A> {
    let n = t.num_vertices();
    let back: Vec<Vec<usize>> = (0..n)
        .map(|x| t.neighbors(x).filter(|&y| y < x).collect())
        .collect();
    let masks = g.neighbor_masks();

    fn go<A: Acc>(
        x: usize,
        f: &mut [u8],
        back: &[Vec<usize>],
        dom: &Domains,
        masks: &[ColorSet],
        weights: &[A],
    ) -> Option<A> {
        if x == f.len() {
            return Some(one::<A>());
        }
        let allowed = back[x]
            .iter()
            .fold(dom.0[x].0, |acc, &y| acc & masks[f[y] as usize].0);
        let mut total = A::acc_zero();
        for k in ColorSet(allowed).iter() {
            f[x] = k as u8;
            let sub = go(x + 1, f, back, dom, masks, weights)?;
            total = total.add(&sub.mul(&weights[k])?)?;
        }
        Some(total)
    }

    let mut f = vec![0u8; n];
    go(0, &mut f, &back, dom, masks, weights)
}

fn one<A: Acc>() -> A {
    A::from_big(&BigUint::one()).expect("one fits")
}

/// Restricted partition function by enumeration, as an exact rational.
pub fn brute_force_restricted(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    dom: &Domains,
    budget: &Budget,
) -> Result<BigRational> {
    check_instance(t, g, w, dom)?;
    let states = dom.state_count();
    if states > budget.brute_states as u128 {
        return Err(Error::BudgetExceeded {
            what: "brute-force enumeration",
            needed: states_text(states),
            budget: budget.brute_states,
        });
    }
    let (c, ints) = integer_weights(w);
    let small: Option<Vec<u128>> = ints.iter().map(u128::from_big).collect();
    let total = small
        .and_then(|ws| brute_force_sum(t, g, dom, &ws))
        .map(Acc::into_big)
        .unwrap_or_else(|| brute_force_sum(t, g, dom, &ints).expect("BigUint never overflows"));
    Ok(rational_result(total, &c, t.num_vertices()))
}

/// `Z_Λ(Z_m^d, H)` by depth-first enumeration.
pub fn brute_force_partition_function(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
) -> Result<PartitionFunctionResult> {
    brute_force_partition_function_with(t, g, w, &Budget::default())
}

pub fn brute_force_partition_function_with(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    budget: &Budget,
) -> Result<PartitionFunctionResult> {
    let z = brute_force_restricted(t, g, w, &Domains::full(t, g), budget)?;
    Ok(PartitionFunctionResult {
        z,
        method: Method::Brute,
        instance: instance_descriptor(t, g),
    })
}

/// Valid colorings of one layer (indexed by layer vertex) with their weights.
struct Layer {
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

/// Transfer-matrix setup: torus vertex of layer `j`, layer vertex `y` is
/// `y·m + j` because `x_d` is the least significant digit.
struct Layering<'a> {
    t: &'a TorusGraph,
    g: &'a ConstraintGraph,
    layer_torus: Option<TorusGraph>,
    layer_size: usize,
}

impl<'a> Layering<'a> {
    fn new(t: &'a TorusGraph, g: &'a ConstraintGraph) -> Result<Self> {
        let layer_torus = if t.d() == 1 {
            None
        } else {
            Some(TorusGraph::new(t.m(), t.d() - 1)?)
        };
        let layer_size = t.num_vertices() / t.m();
        Ok(Layering {
            t,
            g,
            layer_torus,
            layer_size,
        })
    }

    fn vertex(&self, j: usize, y: usize) -> usize {
        y * self.t.m() + j
    }

    fn layer_domains(&self, dom: &Domains, j: usize) -> Domains {
        Domains(
            (0..self.layer_size)
                .map(|y| dom.0[self.vertex(j, y)])
                .collect(),
        )
    }

    /// Enumerates valid layer colorings under `ldom`.
    fn enumerate(&self, ldom: &Domains, budget: u64, mut visit: impl FnMut(&[u8])) -> Result<()> {
        match &self.layer_torus {
            Some(lt) => for_each_coloring(lt, self.g, ldom, budget, |s| {
                visit(s);
                true
            }),
            None => {
                for k in ldom.0[0].iter() {
                    visit(&[k as u8]);
                }
                Ok(())
            }
        }
    }

    fn layer(&self, ldom: &Domains, budget: u64) -> Result<Layer> {
        let mut states = Vec::new();
        self.enumerate(ldom, budget, |s| states.push(s.to_vec()))?;
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Layer { states, index })
    }

    /// For each state of `from`, the indices of compatible states of `to`
    /// (every inter-layer edge `(y, j) ~ (y, j+1)` respected).
    fn compatibility(
        &self,
        from: &Layer,
        to: &Layer,
        to_dom: &Domains,
        budget: u64,
    ) -> Result<Vec<Vec<u32>>> {
        let masks = self.g.neighbor_masks();
        from.states
            .par_iter()
            .map(|s| {
                let restricted = Domains(
                    s.iter()
                        .zip(&to_dom.0)
                        .map(|(&k, &d)| d.intersection(masks[k as usize]))
                        .collect(),
                );
                let mut row = Vec::new();
                self.enumerate(&restricted, budget, |s2| {
                    row.push(to.index[s2] as u32);
                })?;
                Ok(row)
            })
            .collect()
    }
}

fn transfer_sum<A: Acc>(
    layers: &[&Layer],
    compat: &[Vec<Vec<u32>>],
    weights: &[A],
    m: usize,
) -> Option<A> {
    let state_weight = |s: &[u8]| -> Option<A> {
        s.iter()
            .try_fold(one::<A>(), |acc, &k| acc.mul(&weights[k as usize]))
    };
    let layer_weights: Option<Vec<Vec<A>>> = layers
        .iter()
        .map(|l| l.states.iter().map(|s| state_weight(s)).collect())
        .collect();
    let layer_weights = layer_weights?;

    // Propagates a row vector through steps `start..end`; step j maps layer j
    // to layer j+1 (mod m). The weight of the target layer is multiplied in
    // except on the closing step back to layer 0, whose weight P already has.
    let propagate = |mut v: Vec<A>, start: usize, end: usize| -> Option<Vec<A>> {
        for j in start..end {
            let next = (j + 1) % m;
            let weigh = next != 0;
            let mut out = vec![A::acc_zero(); layers[next].states.len()];
            for (s, val) in v.iter().enumerate() {
                if val.acc_is_zero() {
                    continue;
                }
                for &s2 in &compat[j][s] {
                    let s2 = s2 as usize;
                    let term = if weigh {
                        val.mul(&layer_weights[next][s2])?
                    } else {
                        val.clone()
                    };
                    out[s2] = out[s2].add(&term)?;
                }
            }
            v = out;
        }
        Some(v)
    };

    let half = m / 2;
    let s0 = layers[0].states.len();
    let sh = layers[half].states.len();
    // P[a][c]: weight from state a of layer 0 to state c of layer m/2.
    let p: Option<Vec<Vec<A>>> = (0..s0)
        .into_par_iter()
        .map(|a| {
            let mut v = vec![A::acc_zero(); s0];
            v[a] = layer_weights[0][a].clone();
            propagate(v, 0, half)
        })
        .collect();
    let p = p?;
    // Q[c][a]: from state c of layer m/2 around to state a of layer 0.
    let q: Option<Vec<Vec<A>>> = (0..sh)
        .into_par_iter()
        .map(|c| {
            let mut v = vec![A::acc_zero(); sh];
            v[c] = one::<A>();
            propagate(v, half, m)
        })
        .collect();
    let q = q?;
    let mut total = A::acc_zero();
    for (a, row) in p.iter().enumerate() {
        for (c, pv) in row.iter().enumerate() {
            if pv.acc_is_zero() {
                continue;
            }
            total = total.add(&pv.mul(&q[c][a])?)?;
        }
    }
    Some(total)
}

/// Restricted partition function by the layered transfer matrix.
pub fn transfer_restricted(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    dom: &Domains,
    budget: &Budget,
) -> Result<BigRational> {
    check_instance(t, g, w, dom)?;
    let layering = Layering::new(t, g)?;
    let m = t.m();

    let layer_doms: Vec<Domains> = (0..m).map(|j| layering.layer_domains(dom, j)).collect();
    for ld in &layer_doms {
        let states = ld.state_count();
        if states > budget.layer_states as u128 {
            return Err(Error::BudgetExceeded {
                what: "transfer-matrix layer",
                needed: states_text(states),
                budget: budget.layer_states,
            });
        }
    }

    // Layers with identical domains share their state list.
    let mut unique: Vec<Layer> = Vec::new();
    let mut unique_doms: Vec<&Domains> = Vec::new();
    let mut layer_of = Vec::with_capacity(m);
    for ld in &layer_doms {
        match unique_doms.iter().position(|d| *d == ld) {
            Some(i) => layer_of.push(i),
            None => {
                unique.push(layering.layer(ld, budget.layer_states)?);
                unique_doms.push(ld);
                layer_of.push(unique.len() - 1);
            }
        }
    }
    let layers: Vec<&Layer> = layer_of.iter().map(|&i| &unique[i]).collect();

    let cells = layers[0].states.len() as u128 * layers[m / 2].states.len() as u128;
    if cells > budget.transfer_cells as u128 {
        return Err(Error::BudgetExceeded {
            what: "transfer-matrix half product",
            needed: cells.to_string(),
            budget: budget.transfer_cells,
        });
    }

    let compat: Result<Vec<Vec<Vec<u32>>>> = (0..m)
        .map(|j| {
            let next = (j + 1) % m;
            layering.compatibility(layers[j], layers[next], &layer_doms[next], budget.layer_states)
        })
        .collect();
    let compat = compat?;

    let (c, ints) = integer_weights(w);
    let small: Option<Vec<u128>> = ints.iter().map(u128::from_big).collect();
    let total = small
        .and_then(|ws| transfer_sum(&layers, &compat, &ws, m))
        .map(Acc::into_big)
        .unwrap_or_else(|| {
            transfer_sum(&layers, &compat, &ints, m).expect("BigUint never overflows")
        });
    Ok(rational_result(total, &c, t.num_vertices()))
}

/// `Z_Λ(Z_m^d, H)` as the trace of a cyclic product of layer transfer
/// matrices. Inter-layer compatibility is a 0/1 relation, so for `m = 2` the
/// two parallel bundles of the cyclic picture impose the single-edge
/// constraint exactly once.
pub fn transfer_matrix_partition_function(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
) -> Result<PartitionFunctionResult> {
    transfer_matrix_partition_function_with(t, g, w, &Budget::default())
}

pub fn transfer_matrix_partition_function_with(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    budget: &Budget,
) -> Result<PartitionFunctionResult> {
    let z = transfer_restricted(t, g, w, &Domains::full(t, g), budget)?;
    Ok(PartitionFunctionResult {
        z,
        method: Method::Transfer,
        instance: instance_descriptor(t, g),
    })
}

/// Restricted partition function, preferring the transfer matrix and
/// falling back to enumeration when the layer budget trips.
pub fn restricted_partition_function(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    dom: &Domains,
    budget: &Budget,
) -> Result<BigRational> {
    match transfer_restricted(t, g, w, dom, budget) {
        Err(Error::BudgetExceeded { .. }) => brute_force_restricted(t, g, w, dom, budget),
        other => other,
    }
}

/// `p_Λ(f(x) = k)` or `p_Λ(f(x) = k | f(y) = ℓ)` by pinning and ratios of
/// partition functions.
pub fn exact_marginal(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    x: usize,
    k: usize,
    condition: Option<(usize, usize)>,
    budget: &Budget,
) -> Result<BigRational> {
    t.check_vertex(x)?;
    g.check_color(k)?;
    let mut base = Domains::full(t, g);
    if let Some((y, l)) = condition {
        t.check_vertex(y)?;
        g.check_color(l)?;
        base = base.pin(y, l);
    }
    let denom = restricted_partition_function(t, g, w, &base, budget)?;
    if denom.is_zero() {
        return Err(Error::ZeroConditioningEvent);
    }
    let numer = restricted_partition_function(t, g, w, &base.pin(x, k), budget)?;
    Ok(numer / denom)
}

/// The full (conditional) occupation vector at `x`, one partition function
/// per color plus the normalizer.
pub fn exact_marginal_vector(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    x: usize,
    condition: Option<(usize, usize)>,
    budget: &Budget,
) -> Result<Vec<BigRational>> {
    t.check_vertex(x)?;
    let mut base = Domains::full(t, g);
    if let Some((y, l)) = condition {
        t.check_vertex(y)?;
        g.check_color(l)?;
        base = base.pin(y, l);
    }
    let denom = restricted_partition_function(t, g, w, &base, budget)?;
    if denom.is_zero() {
        return Err(Error::ZeroConditioningEvent);
    }
    (0..g.num_colors())
        .map(|k| {
            let numer = restricted_partition_function(t, g, w, &base.clone().pin(x, k), budget)?;
            Ok(numer / &denom)
        })
        .collect()
}

/// Outcome of checking `η^{|V|/2} ≤ |Hom(T, H)| ≤ η^{|V|/2} 2^{|V|/(2Δ)}`.
#[derive(Clone, Debug, Serialize)]
pub struct GlobalBoundsReport {
    pub instance: String,
    pub eta: String,
    pub count: String,
    pub degree: usize,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `|Hom| / η^{|V|/2}`.
    pub lower_slack: f64,
    /// `η^{|V|/2} 2^{|V|/(2Δ)} / |Hom|`; below 1 when the upper bound fails.
    pub upper_slack: f64,
}

/// Compares the exact count with the global entropy bounds. Unweighted only.
/// The upper bound is asymptotic in `d` and is reported, not asserted.
pub fn check_global_bounds(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    budget: &Budget,
) -> Result<GlobalBoundsReport> {
    if !w.is_uniform() {
        return Err(Error::InvalidConfig(
            "global bounds are stated for unit weights".into(),
        ));
    }
    let ext = eta_and_maximal_pairs(g, w)?;
    let eta = ext.eta.to_integer().to_biguint().expect("positive");
    let z = restricted_partition_function(t, g, w, &Domains::full(t, g), budget)?;
    let count = z.to_integer().to_biguint().expect("nonnegative count");
    let n = t.num_vertices();
    let delta = t.degree();
    let leading = num_traits::pow::pow(eta.clone(), n / 2);

    let lower_holds = leading <= count;
    // (count / leading)^{2Δ} <= 2^n, cleared of denominators
    let lhs = num_traits::pow::pow(count.clone(), 2 * delta);
    let rhs = num_traits::pow::pow(leading.clone(), 2 * delta) << n;
    let upper_holds = lhs <= rhs;

    let ln_ratio = ln_big(&count) - ln_big(&leading);
    let upper_ln = (n as f64 / (2.0 * delta as f64)) * std::f64::consts::LN_2;
    Ok(GlobalBoundsReport {
        instance: instance_descriptor(t, g),
        eta: eta.to_string(),
        count: count.to_string(),
        degree: delta,
        lower_holds,
        upper_holds,
        lower_slack: ln_ratio.exp(),
        upper_slack: (upper_ln - ln_ratio).exp(),
    })
}

/// Natural log of a big integer (`-inf` for zero).
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64 bits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    let n = x.numer().to_biguint().unwrap_or_default();
    let d = x.denom().to_biguint().unwrap_or_default();
    ln_big(&n) - ln_big(&d)
}
