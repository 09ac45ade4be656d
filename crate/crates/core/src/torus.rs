//! The even discrete torus `Z_m^d`.
//!
//! Vertices are mixed-radix indices with coordinate 1 most significant, so
//! the last coordinate `x_d` is the least significant digit. For `m = 2` the
//! `+1` and `-1` steps coincide and each vertex has `d` neighbors, not `2d`;
//! callers should use [`TorusGraph::degree`] rather than assume `2d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `m^d` accepted by [`TorusGraph::new`].
pub const MAX_VERTICES: usize = 1 << 26;

#[derive(Clone)]
pub struct TorusGraph {
    m: usize,
    d: usize,
    n: usize,
    degree: usize,
    nbrs: Vec<u32>,
    parity: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Even,
    Odd,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Even => Side::Odd,
            Side::Odd => Side::Even,
        }
    }
}

impl TorusGraph {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::InvalidTorus(format!("m = {m} must be even and at least 2")));
        }
        if d == 0 {
            return Err(Error::InvalidTorus("d must be at least 1".into()));
        }
        let n = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(m))
            .filter(|&n| n <= MAX_VERTICES)
            .ok_or_else(|| Error::InvalidTorus(format!("{m}^{d} vertices is too many")))?;
        let degree = if m == 2 { d } else { 2 * d };

        let mut nbrs = Vec::with_capacity(n * degree);
        let mut parity = Vec::with_capacity(n);
        let mut coords = vec![0usize; d];
        for x in 0..n {
            decode_into(m, x, &mut coords);
            parity.push((coords.iter().sum::<usize>() % 2) as u8);
            for i in 0..d {
                let stride = m.pow((d - 1 - i) as u32);
                let xi = coords[i];
                let minus = x - xi * stride + ((xi + m - 1) % m) * stride;
                let plus = x - xi * stride + ((xi + 1) % m) * stride;
                nbrs.push(minus as u32);
                if m != 2 {
                    nbrs.push(plus as u32);
                }
            }
        }
        Ok(TorusGraph {
            m,
            d,
            n,
            degree,
            nbrs,
            parity,
        })
    }

    /// Parses `"m=<m>,d=<d>"`.
    pub fn from_descriptor(s: &str) -> Result<Self> {
        let mut m = None;
        let mut d = None;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(1, format!("expected key=value in `{part}`")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(1, format!("bad integer in `{part}`")))?;
            match key.trim() {
                "m" => m = Some(value),
                "d" => d = Some(value),
                other => return Err(Error::parse(1, format!("unknown torus key `{other}`"))),
            }
        }
        match (m, d) {
            (Some(m), Some(d)) => Self::new(m, d),
            _ => Err(Error::parse(1, "torus descriptor needs both m and d")),
        }
    }

    pub fn descriptor(&self) -> String {
        format!("m={},d={}", self.m, self.d)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// `2d` for `m >= 4`, `d` for `m = 2`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_edges(&self) -> usize {
        self.n * self.degree / 2
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: x,
                num_vertices: self.n,
            })
        }
    }

    /// Coordinate-major, minus before plus.
    #[inline]
    pub fn neighbors(&self, x: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.nbrs[x * self.degree..(x + 1) * self.degree]
            .iter()
            .map(|&y| y as usize)
    }

    pub fn try_neighbors(&self, x: usize) -> Result<Vec<usize>> {
        self.check_vertex(x)?;
        Ok(self.neighbors(x).collect())
    }

    pub fn adjacent(&self, x: usize, y: usize) -> bool {
        self.neighbors(x).any(|z| z == y)
    }

    pub fn encode(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.d || coords.iter().any(|&c| c >= self.m) {
            return Err(Error::InvalidTorus(format!(
                "coordinates {coords:?} do not lie in Z_{}^{}",
                self.m, self.d
            )));
        }
        Ok(coords.iter().fold(0, |acc, &c| acc * self.m + c))
    }

    pub fn decode(&self, x: usize) -> Vec<usize> {
        let mut coords = vec![0; self.d];
        decode_into(self.m, x, &mut coords);
        coords
    }

    /// Comma-separated coordinates.
    pub fn format_vertex(&self, x: usize) -> String {
        self.decode(x)
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_vertex(&self, s: &str) -> Result<usize> {
        let coords: std::result::Result<Vec<usize>, _> =
            s.split(',').map(|c| c.trim().parse::<usize>()).collect();
        let coords = coords.map_err(|_| Error::parse(1, format!("bad vertex literal `{s}`")))?;
        self.encode(&coords)
    }

    #[inline]
    pub fn side(&self, x: usize) -> Side {
        if self.parity[x] == 0 {
            Side::Even
        } else {
            Side::Odd
        }
    }

    #[inline]
    pub fn is_even(&self, x: usize) -> bool {
        self.parity[x] == 0
    }

    /// `(𝓔, 𝓞)`, each sorted.
    pub fn side_sets(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.n).partition(|&x| self.is_even(x))
    }

    /// Each edge once, as `(x, y)` with `y = x + e_i`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        let mut coords = vec![0; self.d];
        for x in 0..self.n {
            decode_into(self.m, x, &mut coords);
            for i in 0..self.d {
                if self.m == 2 && coords[i] != 0 {
                    continue;
                }
                out.push((x, self.translate(x, i, 1)));
            }
        }
        out
    }

    /// Each edge once, oriented `(u, v)` with `u ∈ 𝓔`.
    pub fn oriented_edges(&self) -> Vec<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(x, y)| if self.is_even(x) { (x, y) } else { (y, x) })
            .collect()
    }

    /// `x + amount·e_coord` (coordinate index 0-based).
    pub fn translate(&self, x: usize, coord: usize, amount: usize) -> usize {
        let stride = self.m.pow((self.d - 1 - coord) as u32);
        let xi = (x / stride) % self.m;
        x - xi * stride + ((xi + amount) % self.m) * stride
    }

    /// `x + (m/2, .., m/2)`, the vertex at maximal distance.
    pub fn antipode(&self, x: usize) -> usize {
        (0..self.d).fold(x, |y, i| self.translate(y, i, self.m / 2))
    }

    pub fn distance(&self, x: usize, y: usize) -> usize {
        self.decode(x)
            .iter()
            .zip(self.decode(y))
            .map(|(&a, b)| {
                let diff = a.abs_diff(b);
                diff.min(self.m - diff)
            })
            .sum()
    }

    /// Edges with exactly one endpoint in `x_set`.
    pub fn edge_boundary(&self, x_set: &[usize]) -> usize {
        let mut member = vec![false; self.n];
        for &x in x_set {
            member[x] = true;
        }
        self.edges()
            .into_iter()
            .filter(|&(x, y)| member[x] != member[y])
            .count()
    }

    /// Connected components of `(V, E \ deleted)`: the size of the largest
    /// component and a component id per vertex (ids in order of first vertex).
    pub fn giant_component_after_deletion(&self, deleted: &[(usize, usize)]) -> (usize, Vec<usize>) {
        let deleted: std::collections::HashSet<(usize, usize)> = deleted
            .iter()
            .map(|&(x, y)| (x.min(y), x.max(y)))
            .collect();
        let mut uf = UnionFind::new(self.n);
        for (x, y) in self.edges() {
            if !deleted.contains(&(x.min(y), x.max(y))) {
                uf.union(x, y);
            }
        }
        uf.labels()
    }

    /// `V* = {x : x_d = 0, x ∈ 𝓔}`.
    pub fn column_bases(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&x| x % self.m == 0 && self.is_even(x))
            .collect()
    }

    pub fn columns(&self) -> Vec<Column> {
        self.column_bases()
            .into_iter()
            .map(|base| Column {
                base,
                members: (0..self.m).map(|i| base + i).collect(),
            })
            .collect()
    }

    /// `M_u = N_u \ {u + e_d, u - e_d}`.
    pub fn column_side_set(&self, u: usize) -> Vec<usize> {
        let up = self.translate(u, self.d - 1, 1);
        let down = self.translate(u, self.d - 1, self.m - 1);
        self.neighbors(u).filter(|&y| y != up && y != down).collect()
    }

    /// `(M_{v_i} per member, M_{C(v)})`.
    pub fn column_side_sets(&self, c: &Column) -> (Vec<Vec<usize>>, Vec<usize>) {
        let per_member: Vec<Vec<usize>> =
            c.members.iter().map(|&u| self.column_side_set(u)).collect();
        let mut union: Vec<usize> = per_member.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        (per_member, union)
    }

    /// Whether `M_{C(v)}` induces `2d - 2` disjoint `m`-cycles (`m >= 4`) or
    /// `d - 1` disjoint edges (`m = 2`).
    pub fn column_neighborhood_is_cycles(&self, c: &Column) -> bool {
        let (_, set) = self.column_side_sets(c);
        let mut member = vec![false; self.n];
        for &x in &set {
            member[x] = true;
        }
        let induced_degree = |x: usize| self.neighbors(x).filter(|&y| member[y]).count();
        let (want_components, want_size, want_degree) = if self.m == 2 {
            (self.d - 1, 2, 1)
        } else {
            (2 * self.d - 2, self.m, 2)
        };
        if set.len() != want_components * want_size {
            return false;
        }
        if !set.iter().all(|&x| induced_degree(x) == want_degree) {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        for &x in &set {
            for y in self.neighbors(x) {
                if member[y] {
                    uf.union(x, y);
                }
            }
        }
        let mut roots: Vec<usize> = set.iter().map(|&x| uf.find(x)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len() == want_components
    }
}

impl fmt::Debug for TorusGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusGraph({})", self.descriptor())
    }
}

fn decode_into(m: usize, mut x: usize, coords: &mut [usize]) {
    for c in coords.iter_mut().rev() {
        *c = x % m;
        x /= m;
    }
}

/// `C(v) = (v_0, .., v_{m-1})` with `v_i = v + i·e_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub base: usize,
    pub members: Vec<usize>,
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, x: usize, y: usize) {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx;
        self.size[rx] += self.size[ry];
    }

    pub(crate) fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    /// Largest component size and dense component ids.
    pub(crate) fn labels(&mut self) -> (usize, Vec<usize>) {
        let n = self.parent.len();
        let mut id_of_root = vec![usize::MAX; n];
        let mut ids = Vec::with_capacity(n);
        let mut next = 0;
        let mut largest = 0;
        for x in 0..n {
            let r = self.find(x);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            ids.push(id_of_root[r]);
            largest = largest.max(self.size[r]);
        }
        (largest, ids)
    }
}
