#![allow(dead_code)]

use torushom::constraint_graph::presets;
use torushom::instance::{load_instance, parse_weights};
use torushom::{ConstraintGraph, WeightSet};

pub struct Case {
    pub name: String,
    pub g: ConstraintGraph,
    pub w: WeightSet,
}

fn case(h: &str, weights: Option<&str>) -> Case {
    let (g, w) = load_instance(h, weights).expect("corpus instance");
    let name = match weights {
        Some(ws) => format!("{h}[{ws}]"),
        None => h.to_string(),
    };
    Case { name, g, w }
}

/// Figure-1 graph: a looped color adjacent to two unlooped ones.
pub fn figure_one() -> ConstraintGraph {
    ConstraintGraph::from_edges(3, [(0, 0), (0, 1), (0, 2)]).unwrap()
}

/// Constraint graphs with at most 6 colors and weight denominators at most 4.
pub fn small_corpus() -> Vec<Case> {
    let mut v = vec![
        case("ind", None),
        case("ind", Some("3/2,1")),
        case("ind", Some("1/3,1/2")),
        case("ind", Some("1/4,1")),
        case("kq:2", None),
        case("kq:3", None),
        case("kq:4", None),
        case("kq:5", None),
        case("kq:6", None),
        case("wr", None),
        case("wr", Some("1,1/2,1")),
        case("wr", Some("3/4,1,3/4")),
        case("k4loop", None),
        case("k1loop", None),
        case("path:3", None),
        case("path:4", None),
        case("cycle:4", None),
        case("cycle:6", None),
        case("ind+kq:3", None),
    ];
    v.push(Case {
        name: "figure-1[3/2,1,1]".into(),
        g: figure_one(),
        w: parse_weights("3/2,1,1").unwrap(),
    });
    v
}

pub fn k8() -> ConstraintGraph {
    presets::complete(8).unwrap()
}

/// Distinct unweighted constraint graphs of the corpus with at most 6 colors,
/// plus the unweighted blow-ups of the weighted entries (at most 10 colors).
pub fn unit_weight_graphs() -> Vec<(String, ConstraintGraph)> {
    let mut out: Vec<(String, ConstraintGraph)> = Vec::new();
    for c in small_corpus() {
        if c.w.is_uniform() {
            if c.g.num_colors() <= 6 && !out.iter().any(|(n, _)| *n == c.name) {
                out.push((c.name, c.g));
            }
        } else if let Ok(b) = torushom::blowup(&c.g, &c.w) {
            if b.graph.num_colors() <= 10 {
                out.push((format!("blowup {}", c.name), b.graph));
            }
        }
    }
    out
}
