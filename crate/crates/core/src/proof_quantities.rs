//! Cycle counts over tuples of color sets and the extremal identities they
//! satisfy. All quantities here are unweighted; weighted instances go
//! through the blow-up first.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::constraint_graph::{
    eta_and_maximal_pairs, search_automorphisms, ColorSet, ConstraintGraph, MaximalPair,
    WeightSet,
};
use crate::error::{Error, Result};

/// Maximum number of minimizing tuples kept in a report.
pub const MAX_WITNESSES: usize = 32;

/// Default cap on search-tree nodes for [`verify_extremal_identities`].
pub const DEFAULT_NODE_CAP: u64 = 50_000_000;

/// An ordered tuple `(A_0, …, A_{m-1})` of color sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorSetTuple(pub Vec<ColorSet>);

impl ColorSetTuple {
    /// `(A, B, A, B, …)` of length `m`.
    pub fn alternating(a: ColorSet, b: ColorSet, m: usize) -> Self {
        ColorSetTuple((0..m).map(|i| if i % 2 == 0 { a } else { b }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of the set sizes.
    pub fn size_product(&self) -> u128 {
        self.0.iter().map(|s| s.len() as u128).product()
    }

    pub fn format(&self, g: &ConstraintGraph) -> Vec<String> {
        self.0.iter().map(|&s| g.format_set(s)).collect()
    }
}

impl fmt::Debug for ColorSetTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("").field(&self.0).finish()
    }
}

fn check_length(m: usize) -> Result<()> {
    if m < 2 || m % 2 == 1 {
        return Err(Error::InvalidConfig(format!(
            "tuple length must be even and at least 2, got {m}"
        )));
    }
    Ok(())
}

/// Number of `(x_0, …, x_{m-1})` with `x_i ∈ A_i` forming a closed walk
/// `x_0 ∼ x_1 ∼ … ∼ x_{m-1} ∼ x_0`. For `m = 2` each adjacent pair is
/// counted once.
pub fn cycle_count_g(g: &ConstraintGraph, tuple: &ColorSetTuple) -> Result<u128> {
    check_length(tuple.len())?;
    for s in &tuple.0 {
        for k in s.iter() {
            g.check_color(k)?;
        }
    }
    Ok(cycle_count_unchecked(g, &tuple.0))
}

fn cycle_count_unchecked(g: &ConstraintGraph, sets: &[ColorSet]) -> u128 {
    let m = sets.len();
    if sets.iter().any(|s| s.is_empty()) {
        return 0;
    }
    let h = g.num_colors();
    if m == 2 {
        return sets[0]
            .iter()
            .map(|x| g.neighbors(x).intersection(sets[1]).len() as u128)
            .sum();
    }
    let mut total = 0u128;
    let mut v = vec![0u128; h];
    let mut next = vec![0u128; h];
    for x0 in sets[0].iter() {
        v.iter_mut().for_each(|c| *c = 0);
        v[x0] = 1;
        for set in &sets[1..] {
            next.iter_mut().for_each(|c| *c = 0);
            for y in set.iter() {
                next[y] = g
                    .neighbors(y)
                    .iter()
                    .map(|x| v[x])
                    .sum::<u128>();
            }
            std::mem::swap(&mut v, &mut next);
        }
        total += g.neighbors(x0).intersection(sets[m - 1]).iter().map(|y| v[y]).sum::<u128>();
    }
    total
}

/// Componentwise common neighborhood `(n(A_0), …, n(A_{m-1}))`.
pub fn tuple_neighborhood(g: &ConstraintGraph, tuple: &ColorSetTuple) -> ColorSetTuple {
    ColorSetTuple(tuple.0.iter().map(|&a| g.common_neighborhood(a)).collect())
}

/// `g(Ā) · g(nĀ)`.
pub fn product_g(g: &ConstraintGraph, tuple: &ColorSetTuple) -> u128 {
    let n = tuple_neighborhood(g, tuple);
    cycle_count_unchecked(g, &tuple.0) * cycle_count_unchecked(g, &n.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub a: String,
    pub b: String,
    pub g_alt: String,
    pub g_n_alt: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub tuple: Vec<String>,
    pub product: String,
}

/// Outcome of [`verify_extremal_identities`].
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub eta: String,
    pub m: usize,
    /// `η^m − max g(Ā)g(nĀ)` over non-alternating tuples.
    pub delta: String,
    pub identity_checked: usize,
    pub identity_holds: bool,
    pub checks: Vec<IdentityCheck>,
    pub witnesses: Vec<Witness>,
    /// Non-alternating tuples with product `η^m` among those searched.
    /// Zero when the characterization holds.
    pub extra_extremal: usize,
    pub nodes_visited: u64,
}

impl IdentityReport {
    pub fn delta_int(&self) -> BigInt {
        self.delta.parse().expect("integer string")
    }
}

/// Automorphisms used to quotient the first coordinate of the gap search.
/// A partial list still generates a subgroup, so the quotient stays sound.
const ORBIT_AUTOMORPHISMS: usize = 5_000;

struct Candidate {
    set: ColorSet,
    nbhd: ColorSet,
    /// `|A| · |n(A)|`, an upper bound on the contribution of one coordinate.
    bound: u128,
}

struct Search<'a> {
    g: &'a ConstraintGraph,
    h: usize,
    m: usize,
    eta_m: u128,
    cands: Vec<Candidate>,
    alternating: Vec<Vec<ColorSet>>,
    cap: u64,
}

#[derive(Default)]
struct Branch {
    best: u128,
    witnesses: Vec<Vec<ColorSet>>,
    extra_extremal: usize,
    nodes: u64,
    capped: bool,
}

/// Prefix walk counts `W[s·h + c]`: walks starting at `s` and currently at `c`.
struct Frame {
    tuple: Vec<ColorSet>,
    walks: Vec<Vec<u128>>,
    nwalks: Vec<Vec<u128>>,
}

fn start_walks(h: usize, set: ColorSet, out: &mut [u128]) -> u128 {
    out.iter_mut().for_each(|c| *c = 0);
    for s in set.iter() {
        out[s * h + s] = 1;
    }
    set.len() as u128
}

fn extend_walks(g: &ConstraintGraph, h: usize, prev: &[u128], set: ColorSet, out: &mut [u128]) -> u128 {
    let mut total = 0;
    for s in 0..h {
        let row = &prev[s * h..(s + 1) * h];
        let dst = &mut out[s * h..(s + 1) * h];
        dst.iter_mut().for_each(|c| *c = 0);
        if row.iter().all(|&c| c == 0) {
            continue;
        }
        for y in set.iter() {
            let v: u128 = g.neighbors(y).iter().map(|x| row[x]).sum();
            dst[y] = v;
            total += v;
        }
    }
    total
}

fn close_walks(g: &ConstraintGraph, h: usize, w: &[u128]) -> u128 {
    (0..h)
        .map(|s| g.neighbors(s).iter().map(|c| w[s * h + c]).sum::<u128>())
        .sum()
}

impl Search<'_> {
    fn frame(&self) -> Frame {
        Frame {
            tuple: vec![ColorSet::EMPTY; self.m],
            walks: vec![vec![0; self.h * self.h]; self.m],
            nwalks: vec![vec![0; self.h * self.h]; self.m],
        }
    }

    /// Places candidate `i` at `pos`, returning the prefix walk totals.
    fn place(&self, fr: &mut Frame, pos: usize, i: usize) -> (u128, u128) {
        let c = &self.cands[i];
        fr.tuple[pos] = c.set;
        if pos == 0 {
            (
                start_walks(self.h, c.set, &mut fr.walks[0]),
                start_walks(self.h, c.nbhd, &mut fr.nwalks[0]),
            )
        } else {
            let (done, rest) = fr.walks.split_at_mut(pos);
            let p = extend_walks(self.g, self.h, &done[pos - 1], c.set, &mut rest[0]);
            let (done, rest) = fr.nwalks.split_at_mut(pos);
            let q = extend_walks(self.g, self.h, &done[pos - 1], c.nbhd, &mut rest[0]);
            (p, q)
        }
    }

    fn run(&self, first: usize, second: usize, seed: u128) -> Branch {
        let mut st = Branch {
            best: seed,
            ..Branch::default()
        };
        let mut fr = self.frame();
        let top = self.cands[first].bound;
        self.place(&mut fr, 0, first);
        let (p, q) = self.place(&mut fr, 1, second);
        if p * q * top.pow((self.m - 2) as u32) >= st.best {
            self.dfs(2, top, &mut fr, &mut st);
        }
        st
    }

    fn dfs(&self, pos: usize, top: u128, fr: &mut Frame, st: &mut Branch) {
        if st.capped {
            return;
        }
        st.nodes += 1;
        if st.nodes > self.cap {
            st.capped = true;
            return;
        }
        if pos == self.m {
            if self.alternating.contains(&fr.tuple) {
                return;
            }
            let p = close_walks(self.g, self.h, &fr.walks[self.m - 1])
                * close_walks(self.g, self.h, &fr.nwalks[self.m - 1]);
            if p >= self.eta_m {
                st.extra_extremal += 1;
            }
            if p > st.best {
                st.best = p;
                st.witnesses.clear();
            }
            if p == st.best && st.witnesses.len() < MAX_WITNESSES {
                st.witnesses.push(fr.tuple.clone());
            }
            return;
        }
        let rest = top.pow((self.m - pos - 1) as u32);
        for i in 0..self.cands.len() {
            if self.cands[i].bound > top {
                continue;
            }
            let (p, q) = self.place(fr, pos, i);
            if p * q * rest < st.best {
                continue;
            }
            self.dfs(pos + 1, top, fr, st);
        }
    }
}

/// Smallest member of each set's orbit under the group generated by `perms`.
fn orbit_representatives(h: usize, perms: &[Vec<usize>]) -> Vec<u64> {
    let n = 1usize << h;
    let mut parent: Vec<u64> = (0..n as u64).collect();
    fn find(parent: &mut [u64], mut x: u64) -> u64 {
        while parent[x as usize] != x {
            let p = parent[parent[x as usize] as usize];
            parent[x as usize] = p;
            x = p;
        }
        x
    }
    for perm in perms {
        for s in 0..n as u64 {
            let t = ColorSet(s).map(perm).0;
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            // union by smaller root so each root is its orbit minimum
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi as usize] = lo;
            }
        }
    }
    (0..n as u64).map(|s| find(&mut parent, s)).collect()
}

/// Checks `g(altAB)·g(n altAB) = η^m` for every `(A, B) ∈ M(H)` and computes
/// the gap `δ = η^m − max g(Ā)g(nĀ)` over all other tuples.
///
/// The product is invariant under rotating the tuple and under automorphisms
/// of `H`, and so is the set of alternating tuples. The search therefore
/// only visits tuples whose first coordinate has the largest `|A||n(A)|`
/// and is the smallest member of its orbit. Prefixes are bounded by their
/// exact walk counts times `(|A_0||n(A_0)|)^{remaining}`. Witnesses and
/// `extra_extremal` refer to this reduced set of tuples.
pub fn verify_extremal_identities(
    g: &ConstraintGraph,
    w: &WeightSet,
    m: usize,
    node_cap: u64,
) -> Result<IdentityReport> {
    check_length(m)?;
    if !w.is_uniform() || !w.get(0).is_one() {
        return Err(Error::InvalidConfig(
            "extremal identities are stated for unit weights; use the blow-up".into(),
        ));
    }
    let ext = eta_and_maximal_pairs(g, w)?;
    let eta = ext
        .eta
        .to_integer()
        .to_u128()
        .expect("eta of an unweighted graph is a small integer");
    let mut eta_pow = vec![1u128; m + 1];
    for i in 1..=m {
        eta_pow[i] = eta_pow[i - 1].checked_mul(eta).ok_or(Error::CapExceeded {
            what: "η^m in 128 bits",
            cap: u128::MAX.ilog2() as u64,
        })?;
    }
    // Π|A_i| · Π|n(A_i)| ≤ η^m; check the cycle count itself fits.
    let h = g.num_colors() as u128;
    if h.checked_pow(m as u32).and_then(|x| x.checked_mul(x)).is_none() {
        return Err(Error::CapExceeded {
            what: "cycle counts in 128 bits",
            cap: 128,
        });
    }

    let mut checks = Vec::new();
    let mut holds = true;
    let mut alternating = Vec::new();
    for &MaximalPair { a, b } in &ext.pairs {
        let alt = ColorSetTuple::alternating(a, b, m);
        let ga = cycle_count_unchecked(g, &alt.0);
        let gn = cycle_count_unchecked(g, &tuple_neighborhood(g, &alt).0);
        let ok = ga * gn == eta_pow[m];
        holds &= ok;
        checks.push(IdentityCheck {
            a: g.format_set(a),
            b: g.format_set(b),
            g_alt: ga.to_string(),
            g_n_alt: gn.to_string(),
            holds: ok,
        });
        alternating.push(alt.0);
    }

    let h = g.num_colors();
    let cands: Vec<Candidate> = (1u64..(1u64 << h))
        .map(ColorSet)
        .map(|set| {
            let nbhd = g.common_neighborhood(set);
            Candidate {
                set,
                nbhd,
                bound: (set.len() * nbhd.len()) as u128,
            }
        })
        .filter(|c| c.bound > 0)
        .collect();

    // Seed the bound with single-coordinate perturbations of alternating tuples.
    let mut seed = 0u128;
    for alt in &alternating {
        for i in 0..m {
            for c in &cands {
                if c.set == alt[i] {
                    continue;
                }
                let mut t = alt.clone();
                t[i] = c.set;
                if alternating.contains(&t) {
                    continue;
                }
                seed = seed.max(product_g(g, &ColorSetTuple(t)));
            }
        }
    }

    let zeros = vec![0u32; h];
    let mut perms = Vec::new();
    search_automorphisms(g, w, &zeros, &zeros, |p| {
        perms.push(p.to_vec());
        perms.len() < ORBIT_AUTOMORPHISMS
    });
    let rep = orbit_representatives(h, &perms);

    let search = Search {
        g,
        h,
        m,
        eta_m: eta_pow[m],
        cands,
        alternating,
        cap: node_cap,
    };
    let tasks: Vec<(usize, usize)> = (0..search.cands.len())
        .filter(|&i| rep[search.cands[i].set.0 as usize] == search.cands[i].set.0)
        .flat_map(|i| {
            let top = search.cands[i].bound;
            let cands = &search.cands;
            (0..cands.len())
                .filter(move |&j| cands[j].bound <= top)
                .map(move |j| (i, j))
        })
        .collect();
    let branches: Vec<Branch> = tasks
        .par_iter()
        .map(|&(i, j)| search.run(i, j, seed))
        .collect();

    let nodes: u64 = branches.iter().map(|b| b.nodes).sum();
    if branches.iter().any(|b| b.capped) || nodes > node_cap {
        return Err(Error::CapExceeded {
            what: "extremal-gap search",
            cap: node_cap,
        });
    }
    let best = branches.iter().map(|b| b.best).max().unwrap_or(0);
    let mut witnesses = Vec::new();
    for b in branches.iter().filter(|b| b.best == best) {
        for t in &b.witnesses {
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(Witness {
                    tuple: ColorSetTuple(t.clone()).format(g),
                    product: best.to_string(),
                });
            }
        }
    }
    let delta = BigInt::from(eta_pow[m]) - BigInt::from(best);
    Ok(IdentityReport {
        eta: eta.to_string(),
        m,
        delta: delta.to_string(),
        identity_checked: checks.len(),
        identity_holds: holds,
        checks,
        witnesses,
        extra_extremal: branches.iter().map(|b| b.extra_extremal).sum(),
        nodes_visited: nodes,
    })
}

/// Smallest delta over several tuple lengths, alongside the per-`m` reports.
pub fn min_delta_over(
    g: &ConstraintGraph,
    w: &WeightSet,
    ms: &[usize],
    node_cap: u64,
) -> Result<(BigInt, Vec<IdentityReport>)> {
    let reports: Result<Vec<_>> = ms
        .iter()
        .map(|&m| verify_extremal_identities(g, w, m, node_cap))
        .collect();
    let reports = reports?;
    let min = reports
        .iter()
        .map(IdentityReport::delta_int)
        .min()
        .unwrap_or_else(BigInt::zero);
    debug_assert!(!min.is_negative() || reports.is_empty());
    Ok((min, reports))
}
