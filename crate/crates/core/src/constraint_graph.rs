//! Constraint graphs `H` with positive rational color weights, the
//! extremal pairs `(A, B)` maximizing `λ_A λ_B` over complete bipartite
//! sub-structures, and the unweighted blow-up `H(Λ)`.
//!
//! Everything in this module is exact: weights are [`BigRational`] and ties
//! between pair products are decided by integer comparison.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of colors for which the exhaustive subset scan is run.
pub const MAX_SCAN_COLORS: usize = 24;

/// Largest number of colors a [`ColorSet`] can address.
pub const MAX_COLORS: usize = 64;

/// A subset of the colors `{0, .., h-1}` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorSet(pub u64);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);

    pub fn full(num_colors: usize) -> Self {
        debug_assert!(num_colors <= MAX_COLORS);
        if num_colors == MAX_COLORS {
            ColorSet(u64::MAX)
        } else {
            ColorSet((1u64 << num_colors) - 1)
        }
    }

    pub fn singleton(k: usize) -> Self {
        ColorSet(1u64 << k)
    }

    pub fn from_colors<I: IntoIterator<Item = usize>>(colors: I) -> Self {
        colors
            .into_iter()
            .fold(ColorSet::EMPTY, |s, k| s.with(k))
    }

    #[inline]
    pub fn contains(self, k: usize) -> bool {
        k < MAX_COLORS && self.0 >> k & 1 == 1
    }

    #[inline]
    pub fn with(self, k: usize) -> Self {
        ColorSet(self.0 | 1u64 << k)
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        ColorSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        ColorSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        ColorSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Colors in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(k)
            }
        })
    }

    /// Apply a color permutation.
    pub fn map(self, perm: &[usize]) -> Self {
        ColorSet::from_colors(self.iter().map(|k| perm[k]))
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite graph on colors `0..h`, loops allowed, no multi-edges.
#[derive(Clone, PartialEq, Eq)]
pub struct ConstraintGraph {
    nbr: Vec<ColorSet>,
    labels: Vec<String>,
}

impl ConstraintGraph {
    /// `h` colors and no edges. Labels default to `0..h`.
    pub fn empty(num_colors: usize) -> Result<Self> {
        if num_colors == 0 {
            return Err(Error::EmptyConstraint);
        }
        if num_colors > MAX_COLORS {
            return Err(Error::TooManyColors {
                what: "constraint graph",
                count: num_colors,
                cap: MAX_COLORS,
            });
        }
        Ok(ConstraintGraph {
            nbr: vec![ColorSet::EMPTY; num_colors],
            labels: (0..num_colors).map(|k| k.to_string()).collect(),
        })
    }

    pub fn from_edges<I>(num_colors: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(num_colors)?;
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds the edge `ij`; `i == j` declares a loop.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_color(i)?;
        self.check_color(j)?;
        self.nbr[i] = self.nbr[i].with(j);
        self.nbr[j] = self.nbr[j].with(i);
        Ok(())
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: Vec<S>) -> Result<Self> {
        if labels.len() != self.num_colors() {
            return Err(Error::WeightCount {
                expected: self.num_colors(),
                got: labels.len(),
            });
        }
        self.labels = labels.into_iter().map(Into::into).collect();
        Ok(self)
    }

    pub fn check_color(&self, k: usize) -> Result<()> {
        if k < self.num_colors() {
            Ok(())
        } else {
            Err(Error::ColorOutOfRange {
                color: k,
                num_colors: self.num_colors(),
            })
        }
    }

    #[inline]
    pub fn num_colors(&self) -> usize {
        self.nbr.len()
    }

    pub fn all_colors(&self) -> ColorSet {
        ColorSet::full(self.num_colors())
    }

    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.nbr[i].contains(j)
    }

    #[inline]
    pub fn has_loop(&self, k: usize) -> bool {
        self.nbr[k].contains(k)
    }

    /// `N_k`, including `k` itself when `k` carries a loop.
    #[inline]
    pub fn neighbors(&self, k: usize) -> ColorSet {
        self.nbr[k]
    }

    pub fn neighbor_masks(&self) -> &[ColorSet] {
        &self.nbr
    }

    /// Edges `(i, j)` with `i <= j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_colors())
            .flat_map(|i| {
                self.nbr[i]
                    .iter()
                    .filter(move |&j| j >= i)
                    .map(move |j| (i, j))
            })
            .collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    /// Resolves a color by label, falling back to a numeric index.
    pub fn color_by_label(&self, s: &str) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l == s)
            .or_else(|| s.parse::<usize>().ok().filter(|&k| k < self.num_colors()))
    }

    pub fn format_set(&self, s: ColorSet) -> String {
        let names: Vec<&str> = s.iter().map(|k| self.label(k)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// `H1 ⊔ H2`; colors of `other` are shifted by `self.num_colors()`.
    pub fn disjoint_union(&self, other: &ConstraintGraph) -> Result<ConstraintGraph> {
        let shift = self.num_colors();
        let mut g = ConstraintGraph::empty(shift + other.num_colors())?;
        for (i, j) in self.edges() {
            g.add_edge(i, j)?;
        }
        for (i, j) in other.edges() {
            g.add_edge(i + shift, j + shift)?;
        }
        let mut labels = self.labels.clone();
        for l in &other.labels {
            let mut l = l.clone();
            while labels.contains(&l) {
                l.push('\'');
            }
            labels.push(l);
        }
        g.with_labels(labels)
    }

    /// Every `x ∈ a` adjacent to every `y ∈ b`. Vacuously true for empty sets.
    pub fn all_adjacent(&self, a: ColorSet, b: ColorSet) -> bool {
        a.iter().all(|x| b.is_subset(self.nbr[x]))
    }

    /// `n(A)`: colors adjacent to every element of `A`; `n(∅) = V(H)`.
    pub fn common_neighborhood(&self, a: ColorSet) -> ColorSet {
        a.iter()
            .fold(self.all_colors(), |acc, x| acc.intersection(self.nbr[x]))
    }

    /// `p(A, B)`: ordered pairs in `A × B` that are not adjacent.
    pub fn nonadjacent_pair_count(&self, a: ColorSet, b: ColorSet) -> u64 {
        a.iter()
            .map(|x| b.difference(self.nbr[x]).len() as u64)
            .sum()
    }
}

impl fmt::Debug for ConstraintGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintGraph")
            .field("num_colors", &self.num_colors())
            .field("edges", &self.edges())
            .finish()
    }
}

/// Named constraint graphs.
pub mod presets {
    use super::ConstraintGraph;
    use crate::error::Result;

    /// Hard-core: `in` (0, unlooped) joined to `out` (1, looped).
    pub fn hard_core() -> ConstraintGraph {
        ConstraintGraph::from_edges(2, [(0, 1), (1, 1)])
            .and_then(|g| g.with_labels(vec!["in", "out"]))
            .expect("static preset")
    }

    /// Loopless `K_q`, labels `1..=q`.
    pub fn complete(q: usize) -> Result<ConstraintGraph> {
        let edges = (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j)));
        ConstraintGraph::from_edges(q, edges)?.with_labels(one_based(q))
    }

    /// Fully looped `K_q`, labels `1..=q`.
    pub fn complete_looped(q: usize) -> Result<ConstraintGraph> {
        let edges = (0..q).flat_map(|i| (i..q).map(move |j| (i, j)));
        ConstraintGraph::from_edges(q, edges)?.with_labels(one_based(q))
    }

    /// Widom-Rowlinson: the fully looped path `1 - 2 - 3`.
    pub fn widom_rowlinson() -> ConstraintGraph {
        ConstraintGraph::from_edges(3, [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)])
            .and_then(|g| g.with_labels(one_based(3)))
            .expect("static preset")
    }

    /// Loopless cycle `C_n` (`n >= 3`), labels `1..=n`.
    pub fn cycle(n: usize) -> Result<ConstraintGraph> {
        let edges = (0..n).map(move |i| (i, (i + 1) % n));
        ConstraintGraph::from_edges(n, edges)?.with_labels(one_based(n))
    }

    /// Loopless path on `n` vertices, labels `1..=n`.
    pub fn path(n: usize) -> Result<ConstraintGraph> {
        let edges = (1..n).map(|i| (i - 1, i));
        ConstraintGraph::from_edges(n, edges)?.with_labels(one_based(n))
    }

    fn one_based(n: usize) -> Vec<String> {
        (1..=n).map(|k| k.to_string()).collect()
    }
}

/// Positive rational weights `Λ = (λ_0, .., λ_{h-1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSet {
    weights: Vec<BigRational>,
}

impl WeightSet {
    pub fn new(weights: Vec<BigRational>) -> Result<Self> {
        for (color, w) in weights.iter().enumerate() {
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight {
                    color,
                    value: w.to_string(),
                });
            }
        }
        Ok(WeightSet { weights })
    }

    pub fn uniform(num_colors: usize) -> Self {
        WeightSet {
            weights: vec![BigRational::one(); num_colors],
        }
    }

    pub fn from_ratios(ratios: &[(i64, i64)]) -> Result<Self> {
        let mut weights = Vec::with_capacity(ratios.len());
        for &(p, q) in ratios {
            if q == 0 {
                return Err(Error::ZeroDenominator);
            }
            weights.push(BigRational::new(p.into(), q.into()));
        }
        Self::new(weights)
    }

    pub fn for_graph(self, g: &ConstraintGraph) -> Result<Self> {
        if self.len() != g.num_colors() {
            return Err(Error::WeightCount {
                expected: g.num_colors(),
                got: self.len(),
            });
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, k: usize) -> &BigRational {
        &self.weights[k]
    }

    pub fn as_slice(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| w.is_one())
    }

    /// `λ_T = Σ_{k∈T} λ_k`, with `λ_∅ = 0`.
    pub fn subset_weight(&self, t: ColorSet) -> BigRational {
        t.iter()
            .fold(BigRational::zero(), |acc, k| acc + &self.weights[k])
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: &BigRational) -> Result<Self> {
        Self::new(self.weights.iter().map(|w| w * factor).collect())
    }

    /// The smallest positive integer `C` with every `C λ_k` integral,
    /// together with the integers `C λ_k`.
    pub fn integer_scaling(&self) -> (BigInt, Vec<BigInt>) {
        let c = self
            .weights
            .iter()
            .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let ints = self
            .weights
            .iter()
            .map(|w| (w * BigRational::from_integer(c.clone())).to_integer())
            .collect();
        (c, ints)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Apply a color permutation: the result has weight `λ_k` at `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut weights = self.weights.clone();
        for (k, &pk) in perm.iter().enumerate() {
            weights[pk] = self.weights[k].clone();
        }
        WeightSet { weights }
    }
}

/// An ordered pair `(A, B)` with `A ~ B` and `λ_A λ_B = η_Λ(H)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MaximalPair {
    pub a: ColorSet,
    pub b: ColorSet,
}

impl MaximalPair {
    pub fn swapped(self) -> Self {
        MaximalPair {
            a: self.b,
            b: self.a,
        }
    }

    pub fn map(self, perm: &[usize]) -> Self {
        MaximalPair {
            a: self.a.map(perm),
            b: self.b.map(perm),
        }
    }
}

impl fmt::Debug for MaximalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.a, self.b)
    }
}

/// `η_Λ(H)` and `M_Λ(H)`. Pairs are sorted by `(a, b)` bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extremal {
    pub eta: BigRational,
    pub pairs: Vec<MaximalPair>,
}

impl Extremal {
    pub fn position(&self, a: ColorSet, b: ColorSet) -> Option<usize> {
        self.pairs.binary_search(&MaximalPair { a, b }).ok()
    }

    pub fn contains(&self, a: ColorSet, b: ColorSet) -> bool {
        self.position(a, b).is_some()
    }

    /// `S(H)`: first coordinates of the maximal pairs.
    pub fn support_family(&self) -> Vec<ColorSet> {
        let mut s: Vec<ColorSet> = self.pairs.iter().map(|p| p.a).collect();
        s.sort();
        s.dedup();
        s
    }
}

/// Computes `η_Λ(H) = max{λ_A λ_B : A ~ B}` and every ordered maximizer.
///
/// With positive weights a maximizer satisfies `B = n(A)` and `A = n(B)`, so
/// only "closed" sets `A = n(n(A))` are scored.
pub fn eta_and_maximal_pairs(g: &ConstraintGraph, w: &WeightSet) -> Result<Extremal> {
    let h = g.num_colors();
    if w.len() != h {
        return Err(Error::WeightCount {
            expected: h,
            got: w.len(),
        });
    }
    if h > MAX_SCAN_COLORS {
        return Err(Error::TooManyColors {
            what: "extremal pair scan",
            count: h,
            cap: MAX_SCAN_COLORS,
        });
    }
    let (c, ints) = w.integer_scaling();
    let subset_int = |s: ColorSet| -> BigInt { s.iter().map(|k| &ints[k]).sum() };

    let mut best = BigInt::zero();
    let mut pairs = Vec::new();
    for bits in 1u64..(1u64 << h) {
        let a = ColorSet(bits);
        let b = g.common_neighborhood(a);
        if b.is_empty() || g.common_neighborhood(b) != a {
            continue;
        }
        let product = subset_int(a) * subset_int(b);
        match product.cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = product;
                pairs.clear();
                pairs.push(MaximalPair { a, b });
            }
            std::cmp::Ordering::Equal => pairs.push(MaximalPair { a, b }),
            std::cmp::Ordering::Less => {}
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyConstraint);
    }
    pairs.sort();
    debug_assert!(pairs
        .iter()
        .all(|p| g.common_neighborhood(p.b) == p.a && g.all_adjacent(p.a, p.b)));
    let eta = BigRational::new(best, &c * &c);
    Ok(Extremal { eta, pairs })
}

/// `S(H) = {A : (A, B) ∈ M_Λ(H) for some B}`, sorted.
pub fn support_family(g: &ConstraintGraph, w: &WeightSet) -> Result<Vec<ColorSet>> {
    Ok(eta_and_maximal_pairs(g, w)?.support_family())
}

/// `λ_T`.
pub fn subset_weight(w: &WeightSet, t: ColorSet) -> BigRational {
    w.subset_weight(t)
}

/// The unweighted blow-up `H(Λ)`: color `k` becomes a block `S_k` of
/// `C λ_k` clones, edges become complete bipartite graphs and loops become
/// completely looped blocks.
#[derive(Clone, Debug)]
pub struct Blowup {
    pub graph: ConstraintGraph,
    pub scale_c: BigInt,
    pub block_of: Vec<usize>,
    pub blocks: Vec<ColorSet>,
}

impl Blowup {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// `∪_{k∈T} S_k`.
    pub fn lift_set(&self, t: ColorSet) -> ColorSet {
        t.iter()
            .fold(ColorSet::EMPTY, |acc, k| acc.union(self.blocks[k]))
    }

    /// Image of a pair of `M_Λ(H)` under the correspondence with `M(H(Λ))`.
    pub fn lift_pair(&self, p: MaximalPair) -> MaximalPair {
        MaximalPair {
            a: self.lift_set(p.a),
            b: self.lift_set(p.b),
        }
    }

    /// Inverse of [`Blowup::lift_set`] on unions of whole blocks.
    pub fn project_set(&self, s: ColorSet) -> Option<ColorSet> {
        let t = ColorSet::from_colors(s.iter().map(|x| self.block_of[x]));
        (self.lift_set(t) == s).then_some(t)
    }
}

pub fn blowup(g: &ConstraintGraph, w: &WeightSet) -> Result<Blowup> {
    let h = g.num_colors();
    if w.len() != h {
        return Err(Error::WeightCount {
            expected: h,
            got: w.len(),
        });
    }
    let (c, ints) = w.integer_scaling();
    let total: BigInt = ints.iter().sum();
    let total = total.to_usize().filter(|&t| t <= MAX_COLORS).ok_or(Error::TooManyColors {
        what: "blow-up",
        count: total.to_usize().unwrap_or(usize::MAX),
        cap: MAX_COLORS,
    })?;

    let mut block_of = Vec::with_capacity(total);
    let mut blocks = Vec::with_capacity(h);
    let mut labels = Vec::with_capacity(total);
    for (k, size) in ints.iter().enumerate() {
        let size = size.to_usize().expect("bounded by total");
        let start = block_of.len();
        for i in 0..size {
            block_of.push(k);
            labels.push(format!("{}.{}", g.label(k), i));
        }
        blocks.push(ColorSet::from_colors(start..start + size));
    }
    let mut graph = ConstraintGraph::empty(total)?;
    for x in 0..total {
        for y in x..total {
            if g.adjacent(block_of[x], block_of[y]) {
                graph.add_edge(x, y)?;
            }
        }
    }
    let graph = graph.with_labels(labels)?;
    Ok(Blowup {
        graph,
        scale_c: c,
        block_of,
        blocks,
    })
}

/// Searches for weight-preserving automorphisms `φ` of `H` with
/// `class_dst[φ(x)] == class_src[x]` for every color `x`. `visit` receives
/// each automorphism found (as the image table) and returns `false` to stop.
/// Returns the number of automorphisms visited.
pub fn search_automorphisms<F>(
    g: &ConstraintGraph,
    w: &WeightSet,
    class_src: &[u32],
    class_dst: &[u32],
    mut visit: F,
) -> usize
where
    F: FnMut(&[usize]) -> bool,
{
    let h = g.num_colors();
    let deg: Vec<usize> = (0..h).map(|k| g.neighbors(k).len()).collect();
    let compatible = |x: usize, y: usize| {
        class_src[x] == class_dst[y]
            && deg[x] == deg[y]
            && g.has_loop(x) == g.has_loop(y)
            && w.get(x) == w.get(y)
    };

    struct Search<'a, C: Fn(usize, usize) -> bool, F: FnMut(&[usize]) -> bool> {
        g: &'a ConstraintGraph,
        compatible: C,
        visit: F,
        image: Vec<usize>,
        used: Vec<bool>,
        found: usize,
    }

    impl<C: Fn(usize, usize) -> bool, F: FnMut(&[usize]) -> bool> Search<'_, C, F> {
        fn go(&mut self, x: usize) -> bool {
            let h = self.used.len();
            if x == h {
                self.found += 1;
                return (self.visit)(&self.image);
            }
            for y in 0..h {
                if self.used[y] || !(self.compatible)(x, y) {
                    continue;
                }
                let consistent =
                    (0..x).all(|x2| self.g.adjacent(x, x2) == self.g.adjacent(y, self.image[x2]));
                if !consistent {
                    continue;
                }
                self.image.push(y);
                self.used[y] = true;
                let keep_going = self.go(x + 1);
                self.used[y] = false;
                self.image.pop();
                if !keep_going {
                    return false;
                }
            }
            true
        }
    }

    let mut search = Search {
        g,
        compatible,
        visit: &mut visit,
        image: Vec::with_capacity(h),
        used: vec![false; h],
        found: 0,
    };
    search.go(0);
    search.found
}

/// All weight-preserving automorphisms of `H`, or `CapExceeded` past `cap`.
pub fn automorphisms(g: &ConstraintGraph, w: &WeightSet, cap: usize) -> Result<Vec<Vec<usize>>> {
    let zeros = vec![0u32; g.num_colors()];
    let mut out = Vec::new();
    let mut overflow = false;
    search_automorphisms(g, w, &zeros, &zeros, |perm| {
        if out.len() == cap {
            overflow = true;
            return false;
        }
        out.push(perm.to_vec());
        true
    });
    if overflow {
        return Err(Error::CapExceeded {
            what: "automorphism enumeration",
            cap: cap as u64,
        });
    }
    Ok(out)
}

/// A weight-preserving automorphism mapping `from` onto `to`, if one exists.
pub fn automorphism_mapping(
    g: &ConstraintGraph,
    w: &WeightSet,
    from: MaximalPair,
    to: MaximalPair,
) -> Option<Vec<usize>> {
    let class = |p: MaximalPair| -> Vec<u32> {
        (0..g.num_colors())
            .map(|k| p.a.contains(k) as u32 | (p.b.contains(k) as u32) << 1)
            .collect()
    };
    let mut found = None;
    search_automorphisms(g, w, &class(from), &class(to), |perm| {
        found = Some(perm.to_vec());
        false
    });
    found
}
