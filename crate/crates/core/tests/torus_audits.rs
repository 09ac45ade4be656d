mod common;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torushom::exact::exact_marginal_vector;
use torushom::{Budget, TorusGraph};

/// Tori with `m^d ≤ 4096` and `d ≥ 2`, plus cycles up to length 64.
fn audited_tori() -> Vec<TorusGraph> {
    let mut v = Vec::new();
    for m in (2..=4096usize).step_by(2) {
        for d in 1..=12u32 {
            let n = m.pow(d);
            if n > 4096 {
                break;
            }
            if d == 1 && m > 64 {
                continue;
            }
            v.push(TorusGraph::new(m, d as usize).unwrap());
        }
    }
    v
}

fn ball(t: &TorusGraph, center: usize, r: usize) -> Vec<usize> {
    (0..t.num_vertices()).filter(|&x| t.distance(center, x) <= r).collect()
}

fn slab(t: &TorusGraph, width: usize) -> Vec<usize> {
    (0..t.num_vertices()).filter(|&x| t.decode(x)[0] < width).collect()
}

fn structured_subsets(t: &TorusGraph) -> Vec<Vec<usize>> {
    let n = t.num_vertices();
    let mut out = Vec::new();
    for r in 0..=t.d() * t.m() / 2 {
        out.push(ball(t, 0, r));
    }
    for w in 1..=t.m() / 2 {
        out.push(slab(t, w));
    }
    let (even, odd) = t.side_sets();
    out.push(even);
    out.push(odd);
    out.retain(|x| !x.is_empty() && 2 * x.len() <= n);
    out
}

fn isoperimetric_bound(t: &TorusGraph, size: usize) -> f64 {
    let d = t.d() as f64;
    (size as f64).powf((d - 1.0) / d)
}

#[test]
fn isoperimetry_on_random_and_structured_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x15_0e);
    let mut all: Vec<usize> = Vec::new();
    for t in audited_tori() {
        let n = t.num_vertices();
        all.clear();
        all.extend(0..n);
        let mut subsets = structured_subsets(&t);
        for _ in 0..1000 {
            let size = rng.gen_range(1..=n / 2);
            all.shuffle(&mut rng);
            subsets.push(all[..size].to_vec());
        }
        for x in &subsets {
            let boundary = t.edge_boundary(x) as f64;
            assert!(
                boundary + 1e-9 >= isoperimetric_bound(&t, x.len()),
                "m={},d={}: |X|={} boundary={}",
                t.m(),
                t.d(),
                x.len(),
                boundary
            );
        }
    }
}

#[test]
fn giant_component_survives_small_deletions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0_32);
    for t in audited_tori().into_iter().filter(|t| t.d() >= 2) {
        let n = t.num_vertices();
        let m = t.m() as f64;
        let d = t.d() as f64;
        let exponent = d / (d - 1.0);
        // Just under the largest `a` with `(ma)^{d/(d-1)} < 1/4`.
        let a = 0.999 * 0.25f64.powf(1.0 / exponent) / m;
        let budget = (n as f64 * a).floor() as usize;
        let bound = n as f64 * (1.0 - (m * a).powf(exponent));
        let edges = t.edges();

        let mut deletions: Vec<Vec<(usize, usize)>> = Vec::new();
        // Cut out structured sets whose boundary fits the budget.
        for x in structured_subsets(&t) {
            let inside: std::collections::HashSet<usize> = x.iter().copied().collect();
            let cut: Vec<(usize, usize)> = edges
                .iter()
                .copied()
                .filter(|&(u, v)| inside.contains(&u) != inside.contains(&v))
                .collect();
            if cut.len() <= budget {
                deletions.push(cut);
            }
        }
        for _ in 0..50 {
            let k = rng.gen_range(0..=budget.min(edges.len()));
            deletions.push(edges.choose_multiple(&mut rng, k).copied().collect());
        }
        for del in &deletions {
            let (largest, _) = t.giant_component_after_deletion(del);
            assert!(
                largest as f64 >= bound,
                "m={},d={}: deleted {} edges, largest {} < {}",
                t.m(),
                t.d(),
                del.len(),
                largest,
                bound
            );
        }
    }
}

#[test]
fn vertex_codec_round_trip() {
    for (m, d) in [(2usize, 20usize), (4, 10), (32, 4), (1024, 2), (6, 7), (8, 6)] {
        let t = TorusGraph::new(m, d).unwrap();
        assert!(t.num_vertices() <= 1 << 20);
        for x in 0..t.num_vertices() {
            assert_eq!(t.encode(&t.decode(x)).unwrap(), x);
        }
    }
}

#[test]
fn marginals_are_translation_invariant() {
    let budget = Budget::default();
    for c in common::small_corpus().into_iter().take(12) {
        for &(m, d) in &[(4usize, 2usize), (2, 3)] {
            let t = TorusGraph::new(m, d).unwrap();
            let x0 = t.encode(&vec![1; d]).unwrap();
            let base = exact_marginal_vector(&t, &c.g, &c.w, x0, None, &budget).unwrap();
            for coord in 0..d {
                for amount in [1usize, 2] {
                    let x = t.translate(x0, coord, amount);
                    let v = exact_marginal_vector(&t, &c.g, &c.w, x, None, &budget).unwrap();
                    if t.side(x) == t.side(x0) {
                        assert_eq!(v, base, "{} at {}", c.name, t.format_vertex(x));
                    }
                    // Conditional marginals move with the conditioning vertex.
                    let y0 = 0;
                    let y = t.translate(y0, coord, amount);
                    let l = c.g.num_colors() - 1;
                    let p = exact_marginal_vector(&t, &c.g, &c.w, x0, Some((y0, l)), &budget);
                    let q = exact_marginal_vector(&t, &c.g, &c.w, x, Some((y, l)), &budget);
                    match (p, q) {
                        (Ok(p), Ok(q)) => assert_eq!(p, q, "{} conditional", c.name),
                        (Err(_), Err(_)) => {}
                        _ => panic!("{}: conditioning event differs under translation", c.name),
                    }
                }
            }
        }
    }
}
