//! Occupation targets, influence ratios and the class-size predictors.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::constraint_graph::{
    automorphism_mapping, eta_and_maximal_pairs, ConstraintGraph, Extremal, MaximalPair,
    WeightSet,
};
use crate::error::{Error, Result};
use crate::exact::{
    exact_marginal_vector, for_each_coloring, ln_rational, pow_rational, Budget, Coloring,
    Domains,
};
use crate::sampler::{classify, PhaseKind, Thresholds};
use crate::torus::{Side, TorusGraph};

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Which of the sufficient conditions for equal class weights holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equipartition {
    Singleton,
    TwoClassSwap,
    Transitive,
}

impl fmt::Display for Equipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equipartition::Singleton => "singleton",
            Equipartition::TwoClassSwap => "two-class swap",
            Equipartition::Transitive => "transitive",
        })
    }
}

/// `M = {(A, A)}`, `M = {(A, B), (B, A)}`, or every pair mapped to every
/// other by a weight-preserving automorphism, possibly composed with the
/// swap `(A, B) ↦ (B, A)` induced by translating the torus. `None`
/// otherwise.
pub fn detect_equipartition(
    g: &ConstraintGraph,
    w: &WeightSet,
    ext: &Extremal,
) -> Option<Equipartition> {
    let pairs = &ext.pairs;
    if pairs.len() == 1 {
        return Some(Equipartition::Singleton);
    }
    if pairs.len() == 2 && pairs[0].swapped() == pairs[1] {
        return Some(Equipartition::TwoClassSwap);
    }
    let first = pairs[0];
    pairs[1..]
        .iter()
        .all(|&p| {
            automorphism_mapping(g, w, first, p).is_some()
                || automorphism_mapping(g, w, first.swapped(), p).is_some()
        })
        .then_some(Equipartition::Transitive)
}

fn equipartition_extremal(g: &ConstraintGraph, w: &WeightSet) -> Result<Extremal> {
    let ext = eta_and_maximal_pairs(g, w)?;
    detect_equipartition(g, w, &ext).ok_or(Error::NotEquipartition)?;
    Ok(ext)
}

fn side_set(p: &MaximalPair, side: Side) -> crate::ColorSet {
    match side {
        Side::Even => p.a,
        Side::Odd => p.b,
    }
}

/// `λ_k / λ_S` if `k ∈ S`, else 0.
fn within(w: &WeightSet, s: crate::ColorSet, k: usize) -> BigRational {
    if s.contains(k) {
        w.get(k) / w.subset_weight(s)
    } else {
        BigRational::zero()
    }
}

/// Limit of `p_Λ(f(x) = k)` for `x` on `side`:
/// `(1/|M|) Σ_{(A,B) ∈ M, k ∈ A} λ_k/λ_A` (mirrored on `𝓞`).
pub fn theorem_occupation_target(
    g: &ConstraintGraph,
    w: &WeightSet,
    side: Side,
    k: usize,
) -> Result<BigRational> {
    g.check_color(k)?;
    let ext = equipartition_extremal(g, w)?;
    Ok(occupation_from(&ext, w, side, k))
}

fn occupation_from(ext: &Extremal, w: &WeightSet, side: Side, k: usize) -> BigRational {
    let sum: BigRational = ext
        .pairs
        .iter()
        .map(|p| within(w, side_set(p, side), k))
        .sum();
    sum / BigRational::from_integer(ext.pairs.len().into())
}

pub fn theorem_occupation_vector(
    g: &ConstraintGraph,
    w: &WeightSet,
    side: Side,
) -> Result<Vec<BigRational>> {
    let ext = equipartition_extremal(g, w)?;
    Ok((0..g.num_colors())
        .map(|k| occupation_from(&ext, w, side, k))
        .collect())
}

/// Position of `x` relative to the conditioning vertex `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    SameSide,
    CrossSide,
}

impl Relation {
    pub fn of(t: &TorusGraph, x: usize, y: usize) -> Relation {
        if t.side(x) == t.side(y) {
            Relation::SameSide
        } else {
            Relation::CrossSide
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::SameSide => "same-side",
            Relation::CrossSide => "cross-side",
        })
    }
}

fn conditional_from(
    ext: &Extremal,
    w: &WeightSet,
    side_x: Side,
    side_y: Side,
    k: usize,
    l: usize,
) -> Result<BigRational> {
    let mut numer = BigRational::zero();
    let mut denom = BigRational::zero();
    for p in &ext.pairs {
        let py = within(w, side_set(p, side_y), l);
        if py.is_zero() {
            continue;
        }
        numer += &py * within(w, side_set(p, side_x), k);
        denom += py;
    }
    if denom.is_zero() {
        return Err(Error::ZeroConditioningEvent);
    }
    Ok(numer / denom)
}

/// Limit of `p_Λ(f(x) = k | f(y) = ℓ)` for `y ∈ 𝓔`, as a genuine
/// conditional probability: classes carry equal weight, so the posterior of
/// class `(A, B)` given `f(y) = ℓ` is proportional to `λ_ℓ/λ_A`.
pub fn theorem_conditional_target(
    g: &ConstraintGraph,
    w: &WeightSet,
    relation: Relation,
    k: usize,
    l: usize,
) -> Result<BigRational> {
    let side_x = match relation {
        Relation::SameSide => Side::Even,
        Relation::CrossSide => Side::Odd,
    };
    conditional_target_sides(g, w, side_x, Side::Even, k, l)
}

/// [`theorem_conditional_target`] with explicit sides for `x` and `y`.
pub fn conditional_target_sides(
    g: &ConstraintGraph,
    w: &WeightSet,
    side_x: Side,
    side_y: Side,
    k: usize,
    l: usize,
) -> Result<BigRational> {
    g.check_color(k)?;
    g.check_color(l)?;
    let ext = equipartition_extremal(g, w)?;
    conditional_from(&ext, w, side_x, side_y, k, l)
}

pub fn theorem_conditional_vector(
    g: &ConstraintGraph,
    w: &WeightSet,
    side_x: Side,
    side_y: Side,
    l: usize,
) -> Result<Vec<BigRational>> {
    g.check_color(l)?;
    let ext = equipartition_extremal(g, w)?;
    (0..g.num_colors())
        .map(|k| conditional_from(&ext, w, side_x, side_y, k, l))
        .collect()
}

/// The displayed sums, with `x ∈ 𝓔`:
/// same side `(1/|M|) Σ_{ℓ,k ∈ A} λ_k/λ_A`, cross side
/// `(1/|M|) Σ_{k ∈ A, ℓ ∈ B} λ_k/λ_A`.
pub fn theorem_conditional_raw(
    g: &ConstraintGraph,
    w: &WeightSet,
    relation: Relation,
    k: usize,
    l: usize,
) -> Result<BigRational> {
    g.check_color(k)?;
    g.check_color(l)?;
    let ext = equipartition_extremal(g, w)?;
    let sum: BigRational = ext
        .pairs
        .iter()
        .filter(|p| match relation {
            Relation::SameSide => p.a.contains(l),
            Relation::CrossSide => p.b.contains(l),
        })
        .map(|p| within(w, p.a, k))
        .sum();
    Ok(sum / BigRational::from_integer(ext.pairs.len().into()))
}

/// `p(f(x)=k | f(y)=ℓ) / p(f(x)=k)`.
pub fn influence_ratio(conditional: &BigRational, unconditional: &BigRational) -> Result<BigRational> {
    if unconditional.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(conditional / unconditional)
}

pub fn influence_ratio_f64(conditional: f64, unconditional: f64) -> Result<f64> {
    if unconditional == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(conditional / unconditional)
}

/// `ℓ_∞` distance.
pub fn d_inf(a: &[BigRational], b: &[BigRational]) -> BigRational {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

pub fn d_inf_f64(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn to_f64_vec(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

/// An occupation vector, exact or empirical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationVector {
    pub probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

impl OccupationVector {
    pub fn from_exact(v: &[BigRational]) -> Self {
        OccupationVector {
            probs: to_f64_vec(v),
            exact: Some(v.iter().map(|x| x.to_string()).collect()),
            stderr: None,
        }
    }

    pub fn from_empirical(probs: Vec<f64>, stderr: Vec<f64>) -> Self {
        OccupationVector {
            probs,
            exact: None,
            stderr: Some(stderr),
        }
    }

    /// Entries nonnegative and summing to one (within `3·Σ stderr` when
    /// empirical, `1e-12` when exact).
    pub fn is_normalized(&self) -> bool {
        let sum: f64 = self.probs.iter().sum();
        let tol = match &self.stderr {
            Some(se) => 3.0 * se.iter().sum::<f64>() + 1e-12,
            None => 1e-12,
        };
        self.probs.iter().all(|&p| p >= 0.0) && (sum - 1.0).abs() <= tol
    }
}

/// One target compared with exact and/or empirical values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub target: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_value: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_value: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    pub d_inf_distance: f64,
}

/// Exact occupation data at `x` with the pin `f(y) = ℓ`, against the
/// limiting targets for the actual sides of `x` and `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactInfluence {
    pub m: usize,
    pub d: usize,
    pub x: String,
    pub y: String,
    pub l: usize,
    pub relation: Relation,
    pub unconditional: Vec<BigRational>,
    pub conditional: Vec<BigRational>,
    pub target_unconditional: Vec<BigRational>,
    pub target_conditional: Vec<BigRational>,
    /// `None` where the unconditional probability is 0.
    pub ratios: Vec<Option<BigRational>>,
    pub target_ratios: Vec<Option<BigRational>>,
    pub d_inf_unconditional: BigRational,
    pub d_inf_conditional: BigRational,
}

fn strs(v: &[BigRational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn opt_strs(v: &[Option<BigRational>]) -> Vec<Option<String>> {
    v.iter().map(|x| x.as_ref().map(|r| r.to_string())).collect()
}

impl ExactInfluence {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m,
            "d": self.d,
            "x": self.x,
            "y": self.y,
            "l": self.l,
            "relation": self.relation,
            "unconditional": strs(&self.unconditional),
            "conditional": strs(&self.conditional),
            "target_unconditional": strs(&self.target_unconditional),
            "target_conditional": strs(&self.target_conditional),
            "ratios": opt_strs(&self.ratios),
            "target_ratios": opt_strs(&self.target_ratios),
            "d_inf_unconditional": self.d_inf_unconditional.to_f64(),
            "d_inf_conditional": self.d_inf_conditional.to_f64(),
            "comparisons": self.comparisons(),
        })
    }

    pub fn comparisons(&self) -> Vec<Comparison> {
        vec![
            Comparison {
                label: "unconditional".into(),
                target: to_f64_vec(&self.target_unconditional),
                exact_value: Some(to_f64_vec(&self.unconditional)),
                empirical_value: None,
                stderr: None,
                d_inf_distance: self.d_inf_unconditional.to_f64().unwrap_or(f64::NAN),
            },
            Comparison {
                label: format!("conditional ({})", self.relation),
                target: to_f64_vec(&self.target_conditional),
                exact_value: Some(to_f64_vec(&self.conditional)),
                empirical_value: None,
                stderr: None,
                d_inf_distance: self.d_inf_conditional.to_f64().unwrap_or(f64::NAN),
            },
        ]
    }
}

pub fn exact_influence(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    x: usize,
    y: usize,
    l: usize,
    budget: &Budget,
) -> Result<ExactInfluence> {
    let w = w.clone().for_graph(g)?;
    let ext = equipartition_extremal(g, &w)?;
    let unconditional = exact_marginal_vector(t, g, &w, x, None, budget)?;
    let conditional = exact_marginal_vector(t, g, &w, x, Some((y, l)), budget)?;
    let (sx, sy) = (t.side(x), t.side(y));
    let target_unconditional: Vec<BigRational> = (0..g.num_colors())
        .map(|k| occupation_from(&ext, &w, sx, k))
        .collect();
    let target_conditional: Result<Vec<BigRational>> = (0..g.num_colors())
        .map(|k| conditional_from(&ext, &w, sx, sy, k, l))
        .collect();
    let target_conditional = target_conditional?;
    let ratio = |c: &BigRational, u: &BigRational| influence_ratio(c, u).ok();
    Ok(ExactInfluence {
        m: t.m(),
        d: t.d(),
        x: t.format_vertex(x),
        y: t.format_vertex(y),
        l,
        relation: Relation::of(t, x, y),
        ratios: conditional.iter().zip(&unconditional).map(|(c, u)| ratio(c, u)).collect(),
        target_ratios: target_conditional
            .iter()
            .zip(&target_unconditional)
            .map(|(c, u)| ratio(c, u))
            .collect(),
        d_inf_unconditional: d_inf(&unconditional, &target_unconditional),
        d_inf_conditional: d_inf(&conditional, &target_conditional),
        unconditional,
        conditional,
        target_unconditional,
        target_conditional,
    })
}

/// Exact antipodal influence at `y = 0` over several dimensions.
pub fn antipodal_trend(
    g: &ConstraintGraph,
    w: &WeightSet,
    m: usize,
    ds: &[usize],
    l: usize,
    budget: &Budget,
) -> Result<Vec<ExactInfluence>> {
    ds.iter()
        .map(|&d| {
            let t = TorusGraph::new(m, d)?;
            exact_influence(&t, g, w, t.antipode(0), 0, l, budget)
        })
        .collect()
}

/// True when the conditional `d_∞` distances never increase.
pub fn is_non_increasing(trend: &[ExactInfluence]) -> bool {
    trend
        .windows(2)
        .all(|p| p[1].d_inf_conditional <= p[0].d_inf_conditional)
}

/// `N(A, k)`: colors adjacent to everything in `A` and to `k`.
pub fn n_of(g: &ConstraintGraph, a: crate::ColorSet, k: usize) -> crate::ColorSet {
    g.common_neighborhood(a).intersection(g.neighbors(k))
}

/// `L_Λ(A, B, d)` with `Δ` the degree of `t`.
pub fn conjecture_l(
    g: &ConstraintGraph,
    w: &WeightSet,
    pair: MaximalPair,
    t: &TorusGraph,
) -> BigRational {
    let delta = t.degree();
    let half = |s: crate::ColorSet, other: crate::ColorSet| -> BigRational {
        let sum: BigRational = g
            .all_colors()
            .difference(s)
            .iter()
            .map(|k| w.get(k) * pow_rational(&w.subset_weight(n_of(g, s, k)), delta))
            .sum();
        let denom = BigRational::from_integer(2.into())
            * w.subset_weight(s)
            * pow_rational(&w.subset_weight(other), delta);
        sum / denom
    };
    half(pair.a, pair.b) + half(pair.b, pair.a)
}

/// `c_1·e^{r_1} + c_2·e^{r_2} + …`, kept exact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpSum {
    pub terms: BTreeMap<BigRational, BigUint>,
}

impl ExpSum {
    pub fn add(&mut self, exponent: BigRational, count: BigUint) {
        *self.terms.entry(exponent).or_default() += count;
    }

    pub fn single(count: BigUint, exponent: BigRational) -> Self {
        let mut s = ExpSum::default();
        s.add(exponent, count);
        s
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| c.to_f64().unwrap_or(f64::INFINITY) * r.to_f64().unwrap_or(0.0).exp())
            .sum()
    }
}

impl fmt::Display for ExpSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let half = rat(1, 2);
        for (i, (r, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let coef = if c.is_one() && !r.is_zero() {
                String::new()
            } else {
                c.to_string()
            };
            if r.is_zero() {
                write!(f, "{c}")?;
            } else if r.is_one() {
                write!(f, "{coef}e")?;
            } else if *r == half {
                write!(f, "{coef}√e")?;
            } else {
                write!(f, "{coef}e^({r})")?;
            }
        }
        Ok(())
    }
}

/// Predicted weight of one class: `η^{m^d/2} · exp{m^d L_Λ(A,B,d)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjecturePrediction {
    pub pair: MaximalPair,
    pub eta: BigRational,
    /// `m^d / 2`.
    pub eta_exponent: usize,
    /// `m^d L_Λ(A, B, d)`.
    pub correction_exponent: BigRational,
}

impl ConjecturePrediction {
    pub fn ln_value(&self) -> f64 {
        self.eta_exponent as f64 * ln_rational(&self.eta)
            + self.correction_exponent.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self, g: &ConstraintGraph) -> serde_json::Value {
        serde_json::json!({
            "a": g.format_set(self.pair.a),
            "b": g.format_set(self.pair.b),
            "eta": self.eta.to_string(),
            "eta_exponent": self.eta_exponent,
            "correction_exponent": self.correction_exponent.to_string(),
            "ln_prediction": self.ln_value(),
        })
    }
}

pub fn conjecture_weight_prediction(
    g: &ConstraintGraph,
    w: &WeightSet,
    pair: MaximalPair,
    t: &TorusGraph,
) -> Result<ConjecturePrediction> {
    let ext = eta_and_maximal_pairs(g, w)?;
    if !ext.contains(pair.a, pair.b) {
        return Err(Error::InvalidConfig(format!(
            "({}, {}) is not a maximal pair",
            g.format_set(pair.a),
            g.format_set(pair.b)
        )));
    }
    let n = t.num_vertices();
    Ok(ConjecturePrediction {
        pair,
        eta: ext.eta,
        eta_exponent: n / 2,
        correction_exponent: BigRational::from_integer(n.into()) * conjecture_l(g, w, pair, t),
    })
}

/// Predictions for every class, with the prefactor `Σ_{(A,B)} e^{m^d L}`
/// of `η^{m^d/2}` collected symbolically.
pub fn conjecture_total(
    g: &ConstraintGraph,
    w: &WeightSet,
    t: &TorusGraph,
) -> Result<(Vec<ConjecturePrediction>, ExpSum)> {
    let ext = eta_and_maximal_pairs(g, w)?;
    let mut prefactor = ExpSum::default();
    let mut preds = Vec::new();
    for &p in &ext.pairs {
        let pred = conjecture_weight_prediction(g, w, p, t)?;
        prefactor.add(pred.correction_exponent.clone(), BigUint::one());
        preds.push(pred);
    }
    Ok((preds, prefactor))
}

fn check_qd(q: usize, d: usize) -> Result<()> {
    if q < 2 || d < 1 {
        return Err(Error::InvalidConfig(format!(
            "need q ≥ 2 and d ≥ 1, got q={q}, d={d}"
        )));
    }
    Ok(())
}

/// `f(q) = (⌈q/2⌉/(2⌊q/2⌋))(2 − 2/⌈q/2⌉)^d + (⌊q/2⌋/(2⌈q/2⌉))(2 − 2/⌊q/2⌋)^d`.
pub fn conjecture_f_q(q: usize, d: usize) -> Result<BigRational> {
    check_qd(q, d)?;
    let lo = (q / 2) as i64;
    let hi = q.div_ceil(2) as i64;
    let term = |a: i64, b: i64| {
        rat(a, 2 * b) * pow_rational(&(rat(2, 1) - rat(2, a)), d)
    };
    Ok(term(hi, lo) + term(lo, hi))
}

/// `(1 + 𝟙{q odd}) C(q, ⌊q/2⌋) (⌊q/2⌋⌈q/2⌉)^{2^{d-1}} exp{f(q)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoringCountPrediction {
    pub q: usize,
    pub d: usize,
    pub multiplicity: BigUint,
    pub base: BigUint,
    pub base_exponent: usize,
    pub f: BigRational,
}

impl ColoringCountPrediction {
    /// `(1 + 𝟙{q odd}) C(q, ⌊q/2⌋) e^{f(q)}`.
    pub fn prefactor(&self) -> ExpSum {
        ExpSum::single(self.multiplicity.clone(), self.f.clone())
    }

    pub fn ln_value(&self) -> f64 {
        crate::exact::ln_big(&self.multiplicity)
            + self.base_exponent as f64 * crate::exact::ln_big(&self.base)
            + self.f.to_f64().unwrap_or(f64::NAN)
    }

    pub fn value_f64(&self) -> f64 {
        self.ln_value().exp()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q": self.q,
            "d": self.d,
            "multiplicity": self.multiplicity.to_string(),
            "base": self.base.to_string(),
            "base_exponent": self.base_exponent,
            "f": self.f.to_string(),
            "prefactor": self.prefactor().to_string(),
            "ln_prediction": self.ln_value(),
        })
    }
}

pub fn coloring_count_prediction(q: usize, d: usize) -> Result<ColoringCountPrediction> {
    check_qd(q, d)?;
    let lo = q / 2;
    let hi = q.div_ceil(2);
    let mult = BigUint::from(1 + q % 2) * binomial(BigUint::from(q), BigUint::from(lo));
    Ok(ColoringCountPrediction {
        q,
        d,
        multiplicity: mult,
        base: BigUint::from(lo * hi),
        base_exponent: 1 << (d - 1),
        f: conjecture_f_q(q, d)?,
    })
}

/// Whether `2^d L(A, B, d) = f(q)` for every class of `K_q` on `Q_d`.
pub fn consistency_l_vs_f(q: usize, d: usize) -> Result<bool> {
    check_qd(q, d)?;
    let g = crate::constraint_graph::presets::complete(q)?;
    let w = WeightSet::uniform(q);
    let t = TorusGraph::new(2, d)?;
    let f = conjecture_f_q(q, d)?;
    let ext = eta_and_maximal_pairs(&g, &w)?;
    let scale = BigRational::from_integer(BigInt::from(1u64) << d);
    Ok(ext
        .pairs
        .iter()
        .all(|&p| &scale * conjecture_l(&g, &w, p, &t) == f))
}

/// Exact weights of the classes produced by [`classify`], by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseWeights {
    pub pure: Vec<(MaximalPair, BigRational)>,
    pub exceptional: BigRational,
    pub total: BigRational,
}

impl PhaseWeights {
    /// `Z / w(C(0))`; `None` when the exceptional class is empty.
    pub fn bottleneck_ratio(&self) -> Option<BigRational> {
        (!self.exceptional.is_zero()).then(|| &self.total / &self.exceptional)
    }
}

pub fn exact_phase_weights(
    t: &TorusGraph,
    g: &ConstraintGraph,
    w: &WeightSet,
    th: &Thresholds,
    budget: &Budget,
) -> Result<PhaseWeights> {
    let w = w.clone().for_graph(g)?;
    th.validate()?;
    let ext = eta_and_maximal_pairs(g, &w)?;
    let mut by_pair: BTreeMap<MaximalPair, BigRational> = ext
        .pairs
        .iter()
        .map(|&p| (p, BigRational::zero()))
        .collect();
    let mut exceptional = BigRational::zero();
    let mut total = BigRational::zero();
    let mut err = None;
    for_each_coloring(t, g, &Domains::full(t, g), budget.brute_states, |f| {
        let col = Coloring(f.to_vec());
        let wt = f.iter().fold(BigRational::one(), |acc, &k| acc * w.get(k as usize));
        total += &wt;
        match classify(t, g, &w, &ext, &col, th).kind {
            PhaseKind::Pure(p) => match by_pair.get_mut(&p) {
                Some(x) => *x += wt,
                None => {
                    err = Some(Error::InvalidConfig("label outside M".into()));
                    return false;
                }
            },
            PhaseKind::Exceptional => exceptional += wt,
        }
        true
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(PhaseWeights {
        pure: by_pair.into_iter().collect(),
        exceptional,
        total,
    })
}
