//! Eigenvalue inequality checks: ratio bounds for Dirichlet trees and general
//! graphs, Weyl-scale lower/upper bounds, interlacing under vertex-condition
//! toggles, counterexample families, and ratio-infimum witnesses.
//!
//! Each inequality lives behind the [`EigenvalueBound`] trait and is
//! registered by name; a [`BoundReport`] evaluates every registered bound on
//! one graph, marking the ones whose hypotheses fail as inapplicable with the
//! gating reason (applying a bound outside its hypotheses would create false
//! failures).

use crate::graph::{
    self, graph_stats, is_dirichlet_tree, make_family, FamilySpec, GraphError, GraphStats,
    MetricGraph, VertexCondition,
};
use crate::spectral::{compute_spectrum, SolveOpts, SpectralError, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("k_max must be at least 2")]
    KMaxTooSmall,
    #[error("vertex {vertex} carries {condition:?}; interlacing toggles need Dirichlet or Kirchhoff")]
    UnsupportedToggle {
        vertex: usize,
        condition: VertexCondition,
    },
    #[error("all toggled vertices must change in the same direction")]
    MixedToggle,
    #[error("infimum witness needs k > j >= 1")]
    BadWitnessIndices,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Relative tolerance deciding pass/fail: an order above solver tolerance,
/// well below any real violation.
pub const PASS_TOL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub bound: String,
    /// Index pair or index the entry refers to, e.g. "k=3,j=1".
    pub detail: String,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub pass: bool,
}

impl BoundEntry {
    fn check(bound: &str, detail: String, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        let pass = margin >= -PASS_TOL_REL * lhs.abs().max(rhs.abs());
        BoundEntry {
            bound: bound.into(),
            detail,
            applicable: true,
            reason: None,
            lhs: Some(lhs),
            rhs: Some(rhs),
            margin: Some(margin),
            pass,
        }
    }

    fn inapplicable(bound: &str, reason: String) -> Self {
        BoundEntry {
            bound: bound.into(),
            detail: String::new(),
            applicable: false,
            reason: Some(reason),
            lhs: None,
            rhs: None,
            margin: None,
            pass: true,
        }
    }
}

/// Everything a bound needs to evaluate itself on one graph.
pub struct BoundContext<'a> {
    pub graph: &'a MetricGraph,
    pub stats: GraphStats,
    pub spectrum: &'a Spectrum,
    pub k_max: usize,
}

impl BoundContext<'_> {
    fn nb(&self) -> usize {
        self.stats.neumann_leaves + self.stats.betti
    }

    fn dirichlet_tree(&self) -> bool {
        is_dirichlet_tree(self.graph)
    }

    /// Bounds from the Dirichlet/Neumann/Kirchhoff literature do not cover
    /// nonzero delta couplings.
    fn standard_conditions(&self) -> bool {
        !self.graph.has_nonzero_strength()
    }
}

pub trait EigenvalueBound: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry>;
}

fn gate_dirichlet_tree(name: &str, cx: &BoundContext) -> Option<Vec<BoundEntry>> {
    if cx.dirichlet_tree() {
        None
    } else {
        let reason = if cx.stats.betti > 0 {
            "graph has cycles"
        } else if !cx.graph.is_tree() {
            "not a tree"
        } else {
            "not all leaves Dirichlet / interior not Kirchhoff"
        };
        Some(vec![BoundEntry::inapplicable(name, reason.into())])
    }
}

fn gate_standard(name: &str, cx: &BoundContext) -> Option<Vec<BoundEntry>> {
    if cx.standard_conditions() {
        None
    } else {
        Some(vec![BoundEntry::inapplicable(
            name,
            "nonzero delta couplings present".into(),
        )])
    }
}

struct NicaiseConsecutive;
impl EigenvalueBound for NicaiseConsecutive {
    fn name(&self) -> &'static str {
        "nicaise-consecutive"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        (1..=cx.k_max)
            .map(|k| {
                BoundEntry::check(
                    self.name(),
                    format!("k={k}"),
                    cx.spectrum.lambda(k + 1) / cx.spectrum.lambda(k),
                    5.0,
                )
            })
            .collect()
    }
}

struct NicaiseFirst;
impl EigenvalueBound for NicaiseFirst {
    fn name(&self) -> &'static str {
        "nicaise-first"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        vec![BoundEntry::check(
            self.name(),
            "k=2,j=1".into(),
            cx.spectrum.lambda(2) / cx.spectrum.lambda(1),
            2.0 + 5f64.sqrt(),
        )]
    }
}

struct AshbaughBenguria;
impl EigenvalueBound for AshbaughBenguria {
    fn name(&self) -> &'static str {
        "ashbaugh-benguria"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        vec![BoundEntry::check(
            self.name(),
            "k=2,j=1".into(),
            cx.spectrum.lambda(2) / cx.spectrum.lambda(1),
            4.0,
        )]
    }
}

struct DoubledIndex;
impl EigenvalueBound for DoubledIndex {
    fn name(&self) -> &'static str {
        "doubled-index"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        (1..=cx.k_max)
            .map(|k| {
                BoundEntry::check(
                    self.name(),
                    format!("k={},j={}", 2 * k, k),
                    cx.spectrum.lambda(2 * k) / cx.spectrum.lambda(k),
                    4.0,
                )
            })
            .collect()
    }
}

/// Smallest integer `m` with `j * 2^m >= k`.
fn ceil_log2_ratio(k: usize, j: usize) -> u32 {
    let mut m = 0;
    let mut cover = j;
    while cover < k {
        cover *= 2;
        m += 1;
    }
    m
}

struct InterpolatedRatio;
impl EigenvalueBound for InterpolatedRatio {
    fn name(&self) -> &'static str {
        "interpolated-ratio"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        let mut out = Vec::new();
        for j in 1..cx.k_max {
            for k in j + 1..=cx.k_max {
                let rhs = 4f64.powi(ceil_log2_ratio(k, j) as i32);
                out.push(BoundEntry::check(
                    self.name(),
                    format!("k={k},j={j}"),
                    cx.spectrum.lambda(k) / cx.spectrum.lambda(j),
                    rhs,
                ));
            }
        }
        out
    }
}

struct GeneralGraphRatio;
impl EigenvalueBound for GeneralGraphRatio {
    fn name(&self) -> &'static str {
        "general-graph-ratio"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_standard(self.name(), cx) {
            return out;
        }
        let shift = cx.nb();
        let j_min = shift + 1;
        if j_min >= cx.k_max {
            return vec![BoundEntry::inapplicable(
                self.name(),
                format!("needs k > j >= {j_min} = N + beta + 1, beyond k_max"),
            )];
        }
        let mut out = Vec::new();
        for j in j_min..cx.k_max {
            for k in j + 1..=cx.k_max {
                let denom = (j - shift) as f64;
                let rhs = 4.0 * (k as f64).powi(2) / (denom * denom);
                out.push(BoundEntry::check(
                    self.name(),
                    format!("k={k},j={j}"),
                    cx.spectrum.lambda(k) / cx.spectrum.lambda(j),
                    rhs,
                ));
            }
        }
        out
    }
}

struct PolyaLower;
impl EigenvalueBound for PolyaLower {
    fn name(&self) -> &'static str {
        "polya-lower"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_dirichlet_tree(self.name(), cx) {
            return out;
        }
        let l = cx.stats.total_length;
        (1..=cx.k_max)
            .map(|k| {
                BoundEntry::check(
                    self.name(),
                    format!("k={k}"),
                    PI * PI * (k * k) as f64 / (l * l),
                    cx.spectrum.lambda(k),
                )
            })
            .collect()
    }
}

struct BkkmLower;
impl EigenvalueBound for BkkmLower {
    fn name(&self) -> &'static str {
        "bkkm-lower"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_standard(self.name(), cx) {
            return out;
        }
        let l = cx.stats.total_length;
        let shift = cx.nb() as f64 / 2.0;
        let k_lo = if cx.graph.has_dirichlet_vertex() { 1 } else { 2 };
        let mut out = Vec::new();
        for k in k_lo..=cx.k_max {
            // The shifted index must stay positive for the bound to mean
            // anything.
            if k as f64 <= shift {
                continue;
            }
            let base = k as f64 - shift;
            out.push(BoundEntry::check(
                self.name(),
                format!("k={k}"),
                base * base * PI * PI / (l * l),
                cx.spectrum.lambda(k),
            ));
        }
        if out.is_empty() {
            vec![BoundEntry::inapplicable(
                self.name(),
                "no indices above (N + beta)/2 within k_max".into(),
            )]
        } else {
            out
        }
    }
}

fn upper_base(k: usize, stats: &GraphStats) -> f64 {
    k as f64 - 2.0
        + stats.betti as f64
        + stats.dirichlet_leaves as f64
        + (stats.neumann_leaves + stats.betti) as f64 / 2.0
}

struct AriturkUpper;
impl EigenvalueBound for AriturkUpper {
    fn name(&self) -> &'static str {
        "ariturk-upper"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_standard(self.name(), cx) {
            return out;
        }
        let l = cx.stats.total_length;
        (1..=cx.k_max)
            .map(|k| {
                let base = upper_base(k, &cx.stats).max(0.0);
                BoundEntry::check(
                    self.name(),
                    format!("k={k}"),
                    cx.spectrum.lambda(k),
                    PI * PI * base * base / (l * l),
                )
            })
            .collect()
    }
}

struct FaberKrahn;
impl EigenvalueBound for FaberKrahn {
    fn name(&self) -> &'static str {
        "faber-krahn"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_standard(self.name(), cx) {
            return out;
        }
        let l = cx.stats.total_length;
        let Some(min_nonzero) = cx
            .spectrum
            .flattened()
            .into_iter()
            .find(|&lam| lam > 0.0)
        else {
            return vec![BoundEntry::inapplicable(
                self.name(),
                "no nonzero eigenvalue computed".into(),
            )];
        };
        vec![BoundEntry::check(
            self.name(),
            "min nonzero".into(),
            PI * PI / (4.0 * l * l),
            min_nonzero,
        )]
    }
}

struct CoarseRatio;
impl EigenvalueBound for CoarseRatio {
    fn name(&self) -> &'static str {
        "coarse-ratio"
    }
    fn evaluate(&self, cx: &BoundContext) -> Vec<BoundEntry> {
        if let Some(out) = gate_standard(self.name(), cx) {
            return out;
        }
        let mut out = Vec::new();
        for j in 1..cx.k_max {
            if cx.spectrum.lambda(j) <= 0.0 {
                continue;
            }
            for k in j + 1..=cx.k_max {
                let base = upper_base(k, &cx.stats).max(0.0);
                out.push(BoundEntry::check(
                    self.name(),
                    format!("k={k},j={j}"),
                    cx.spectrum.lambda(k) / cx.spectrum.lambda(j),
                    4.0 * base * base,
                ));
            }
        }
        if out.is_empty() {
            vec![BoundEntry::inapplicable(
                self.name(),
                "no positive lambda_j below k_max".into(),
            )]
        } else {
            out
        }
    }
}

pub fn bound_registry() -> Vec<Box<dyn EigenvalueBound>> {
    vec![
        Box::new(NicaiseConsecutive),
        Box::new(NicaiseFirst),
        Box::new(AshbaughBenguria),
        Box::new(DoubledIndex),
        Box::new(InterpolatedRatio),
        Box::new(GeneralGraphRatio),
        Box::new(PolyaLower),
        Box::new(BkkmLower),
        Box::new(AriturkUpper),
        Box::new(FaberKrahn),
        Box::new(CoarseRatio),
    ]
}

pub fn bound_by_name(name: &str) -> Option<Box<dyn EigenvalueBound>> {
    bound_registry().into_iter().find(|b| b.name() == name)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub stats: GraphStats,
    pub k_max: usize,
    pub entries: Vec<BoundEntry>,
    pub all_pass: bool,
}

impl BoundReport {
    pub fn failures(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| e.applicable && !e.pass)
    }
}

/// Evaluates every registered inequality on one graph, with the spectrum
/// computed to `2 k_max` so that doubled indices are available.
pub fn bound_report(
    g: &MetricGraph,
    k_max: usize,
    opts: &SolveOpts,
) -> Result<BoundReport, BoundsError> {
    if k_max < 2 {
        return Err(BoundsError::KMaxTooSmall);
    }
    let spectrum = compute_spectrum(g, 2 * k_max, opts)?;
    let cx = BoundContext {
        graph: g,
        stats: graph_stats(g),
        spectrum: &spectrum,
        k_max,
    };
    let mut entries = Vec::new();
    for bound in bound_registry() {
        entries.extend(bound.evaluate(&cx));
    }
    let all_pass = entries.iter().all(|e| !e.applicable || e.pass);
    Ok(BoundReport {
        stats: cx.stats,
        k_max,
        entries,
        all_pass,
    })
}

/// Eigenvalue shifts under toggling vertex conditions between Kirchhoff and
/// Dirichlet at `vertices` (all in the same direction). With `s` toggles,
/// `lambda_{k-s}(strong) <= lambda_k(weak) <= lambda_k(strong)`.
#[derive(Debug, Clone, Serialize)]
pub struct InterlacingReport {
    pub shift: usize,
    pub weaker: Vec<f64>,
    pub stronger: Vec<f64>,
    /// `lambda_k(weak) - lambda_{k-s}(strong)` for `k > s`.
    pub lower_margins: Vec<f64>,
    /// `lambda_k(strong) - lambda_k(weak)` for all `k`.
    pub upper_margins: Vec<f64>,
    pub pass: bool,
}

pub fn interlacing_check(
    g: &MetricGraph,
    vertices: &[usize],
    k_max: usize,
    opts: &SolveOpts,
) -> Result<InterlacingReport, BoundsError> {
    let mut to_dirichlet = Vec::new();
    for &v in vertices {
        match g.condition(v) {
            VertexCondition::Delta(a) if a == 0.0 => to_dirichlet.push(true),
            VertexCondition::Dirichlet => to_dirichlet.push(false),
            other => {
                return Err(BoundsError::UnsupportedToggle {
                    vertex: v,
                    condition: other,
                })
            }
        }
    }
    if to_dirichlet.windows(2).any(|w| w[0] != w[1]) {
        return Err(BoundsError::MixedToggle);
    }
    let toggled = {
        let mut t = g.clone();
        for &v in vertices {
            let new = if to_dirichlet[0] {
                VertexCondition::Dirichlet
            } else {
                VertexCondition::kirchhoff()
            };
            t = t.with_condition(v, new)?;
        }
        t
    };
    let (weak, strong) = if to_dirichlet[0] {
        (g.clone(), toggled)
    } else {
        (toggled, g.clone())
    };
    let shift = vertices.len();
    let sw = compute_spectrum(&weak, k_max, opts)?.flattened();
    let ss = compute_spectrum(&strong, k_max, opts)?.flattened();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut pass = true;
    for k in 1..=k_max {
        let up = ss[k - 1] - sw[k - 1];
        pass &= up >= -PASS_TOL_REL * ss[k - 1].abs().max(1.0);
        upper.push(up);
        if k > shift {
            let low = sw[k - 1] - ss[k - 1 - shift];
            pass &= low >= -PASS_TOL_REL * sw[k - 1].abs().max(1.0);
            lower.push(low);
        }
    }
    Ok(InterlacingReport {
        shift,
        weaker: sw,
        stronger: ss,
        lower_margins: lower,
        upper_margins: upper,
        pass,
    })
}

/// Families whose first-ratio blows up as the parameter grows.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum SweepFamily {
    /// Star with one long Dirichlet-tipped edge and `m` short Kirchhoff
    /// edges; the sweep parameter is `m`.
    BigStar { tail: f64, epsilon: f64 },
    /// `beta` small loops plus a Dirichlet-tipped tail; the parameter is
    /// `beta`.
    Balloons { loop_length: f64, tail: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: usize,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub ratio: f64,
    /// First Dirichlet eigenvalue of the long edge alone, reported as a
    /// reference level under which `lambda_2` should not fall.
    pub long_edge_reference: f64,
}

pub fn counterexample_sweep(
    family: SweepFamily,
    parameters: &[usize],
    opts: &SolveOpts,
) -> Result<Vec<SweepRow>, BoundsError> {
    let mut rows = Vec::new();
    for &p in parameters {
        let (g, tail) = match family {
            SweepFamily::BigStar { tail, epsilon } => {
                let g = if p == 0 {
                    // Degenerate family member: with no short edges the star
                    // reduces to a plain interval.
                    make_family(&FamilySpec::Interval {
                        length: tail,
                        left: VertexCondition::Dirichlet,
                        right: VertexCondition::Dirichlet,
                    })?
                } else {
                    make_family(&FamilySpec::BigStar {
                        tail_length: tail,
                        short_edges: p,
                        epsilon,
                        tip: VertexCondition::kirchhoff(),
                    })?
                };
                (g, tail)
            }
            SweepFamily::Balloons { loop_length, tail } => {
                let g = make_family(&FamilySpec::BalloonBunch {
                    loops: p.max(1),
                    loop_length,
                    tail_length: tail,
                    tip: VertexCondition::Dirichlet,
                })?;
                (g, tail)
            }
        };
        let s = compute_spectrum(&g, 2, opts)?;
        rows.push(SweepRow {
            parameter: p,
            lambda_1: s.lambda(1),
            lambda_2: s.lambda(2),
            ratio: s.lambda(2) / s.lambda(1),
            long_edge_reference: PI * PI / (tail * tail),
        });
    }
    Ok(rows)
}

/// The equilateral star witnessing `inf lambda_k / lambda_j = 1`: for
/// `j >= 2` a Kirchhoff-center `k`-star, for `j = 1` the same star with a
/// Dirichlet center (which decouples the legs).
pub fn infimum_witness(k: usize, j: usize) -> Result<(MetricGraph, f64), BoundsError> {
    if !(k > j && j >= 1) {
        return Err(BoundsError::BadWitnessIndices);
    }
    let center = if j == 1 {
        VertexCondition::Dirichlet
    } else {
        VertexCondition::kirchhoff()
    };
    let g = make_family(&FamilySpec::EquilateralStar {
        legs: k,
        length: 1.0,
        leaf: VertexCondition::Dirichlet,
        center,
    })?;
    let s = compute_spectrum(&g, k, &SolveOpts::default())?;
    Ok((g, s.lambda(k) / s.lambda(j)))
}

/// Seeded random Dirichlet tree (uniform attachment, log-uniform lengths).
pub fn random_dirichlet_tree(seed: u64, max_edges: usize, lo: f64, hi: f64) -> MetricGraph {
    make_family(&FamilySpec::RandomTree {
        seed,
        max_edges,
        length_range: (lo, hi),
        leaf: VertexCondition::Dirichlet,
    })
    .expect("random tree descriptor is valid")
}

/// Seeded random graph with up to `max_beta` independent cycles and up to
/// `max_neumann` Neumann leaves; always keeps at least one Dirichlet leaf so
/// the upper bounds stay inside their hypotheses.
pub fn random_mixed_graph(
    seed: u64,
    max_edges: usize,
    max_beta: usize,
    max_neumann: usize,
    lo: f64,
    hi: f64,
) -> MetricGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let m = rng.gen_range(1..=max_edges);
    let draw = |rng: &mut ChaCha8Rng| (rng.gen_range(lo.ln()..=hi.ln())).exp();
    let mut incidences = Vec::new();
    let mut lengths = Vec::new();
    let mut n = 1usize;
    for _ in 0..m {
        let anchor = rng.gen_range(0..n);
        incidences.push((anchor, n));
        lengths.push(draw(&mut rng));
        n += 1;
    }
    let beta = rng.gen_range(0..=max_beta);
    for _ in 0..beta {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        if b == a {
            b = (a + 1) % n;
        }
        incidences.push((a, b));
        lengths.push(draw(&mut rng));
    }
    let mut degrees = vec![0usize; n];
    for &(a, b) in &incidences {
        degrees[a] += 1;
        degrees[b] += 1;
    }
    let mut leaves: Vec<usize> = (0..n).filter(|&v| degrees[v] == 1).collect();
    // Guarantee a Dirichlet leaf even when the cycle edges swallowed them all.
    if leaves.is_empty() {
        let anchor = rng.gen_range(0..n);
        incidences.push((anchor, n));
        lengths.push(draw(&mut rng));
        leaves.push(n);
        degrees.push(1);
        degrees[anchor] += 1;
        n += 1;
    }
    let mut conditions: Vec<VertexCondition> = (0..n)
        .map(|v| {
            if degrees[v] == 1 {
                VertexCondition::Dirichlet
            } else {
                VertexCondition::kirchhoff()
            }
        })
        .collect();
    let n_neumann = rng.gen_range(0..=max_neumann.min(leaves.len().saturating_sub(1)));
    for _ in 0..n_neumann {
        let pick = rng.gen_range(0..leaves.len());
        conditions[leaves[pick]] = VertexCondition::kirchhoff();
        leaves.remove(pick);
    }
    let edges = incidences
        .into_iter()
        .zip(lengths)
        .map(|((a, b), l)| (a, b, l))
        .collect();
    MetricGraph::new(conditions, edges).expect("generated graph is connected")
}

/// Dirichlet condition imposed at an interior point of an edge; every
/// eigenvalue moves weakly up (domain monotonicity).
pub fn with_dirichlet_point(
    g: &MetricGraph,
    edge: usize,
    x: f64,
) -> Result<MetricGraph, BoundsError> {
    let split = graph::insert_dummy(g, edge, x)?;
    let new_vertex = split.num_vertices() - 1;
    Ok(split.with_condition(new_vertex, VertexCondition::Dirichlet)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd_interval() -> MetricGraph {
        make_family(&FamilySpec::Interval {
            length: 1.0,
            left: VertexCondition::Dirichlet,
            right: VertexCondition::Dirichlet,
        })
        .unwrap()
    }

    #[test]
    fn interval_report_has_sharp_margins() {
        let r = bound_report(&dd_interval(), 4, &SolveOpts::default()).unwrap();
        assert!(r.all_pass);
        let ab = r
            .entries
            .iter()
            .find(|e| e.bound == "ashbaugh-benguria")
            .unwrap();
        assert!(ab.applicable);
        assert!(ab.margin.unwrap().abs() < 1e-9, "sharp at the interval");
        for e in r.entries.iter().filter(|e| e.bound == "polya-lower") {
            assert!(e.margin.unwrap().abs() < 1e-7, "sharp at the interval: {e:?}");
        }
        // Upper bound is also attained exactly on the interval.
        for e in r.entries.iter().filter(|e| e.bound == "ariturk-upper") {
            assert!(e.margin.unwrap().abs() < 1e-6, "{e:?}");
        }
    }

    #[test]
    fn five_star_doubled_index_margin() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 5,
            length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let r = bound_report(&g, 6, &SolveOpts::default()).unwrap();
        assert!(r.all_pass);
        let s = compute_spectrum(&g, 6, &SolveOpts::default()).unwrap();
        let ratio65 = s.lambda(6) / s.lambda(5);
        assert!((ratio65 - 2.25).abs() < 1e-9, "lambda_6/lambda_5 = {ratio65}");
        let ab = r
            .entries
            .iter()
            .find(|e| e.bound == "ashbaugh-benguria")
            .unwrap();
        assert!(ab.margin.unwrap().abs() < 1e-9);
    }

    #[test]
    fn big_star_gates_tree_bounds_off() {
        let g = make_family(&FamilySpec::BigStar {
            tail_length: 1.0,
            short_edges: 20,
            epsilon: 0.01,
            tip: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let r = bound_report(&g, 2, &SolveOpts::default()).unwrap();
        for name in ["ashbaugh-benguria", "doubled-index", "interpolated-ratio"] {
            let e = r.entries.iter().find(|e| e.bound == name).unwrap();
            assert!(!e.applicable, "{name} must be gated off");
        }
        let gen = r
            .entries
            .iter()
            .find(|e| e.bound == "general-graph-ratio")
            .unwrap();
        assert!(!gen.applicable, "j >= N + beta + 1 is beyond k_max");
        let fk = r.entries.iter().find(|e| e.bound == "faber-krahn").unwrap();
        assert!(fk.applicable && fk.pass);
        assert!(r.all_pass);
    }

    #[test]
    fn delta_graph_gates_everything_off() {
        let g = MetricGraph::new(
            vec![VertexCondition::Dirichlet, VertexCondition::Delta(2.0)],
            vec![(0, 1, 1.0)],
        )
        .unwrap();
        let r = bound_report(&g, 2, &SolveOpts::default()).unwrap();
        assert!(r.entries.iter().all(|e| !e.applicable));
    }

    #[test]
    fn interval_interlacing_pattern_is_exact() {
        // Neumann-Dirichlet interval toggled to Dirichlet-Dirichlet:
        // (2k-1)² pi²/4 interlaces k² pi².
        let g = make_family(&FamilySpec::Interval {
            length: 1.0,
            left: VertexCondition::kirchhoff(),
            right: VertexCondition::Dirichlet,
        })
        .unwrap();
        let r = interlacing_check(&g, &[0], 6, &SolveOpts::default()).unwrap();
        assert!(r.pass);
        for (k, lam) in r.weaker.iter().enumerate() {
            let want = ((2 * (k + 1) - 1) as f64 * PI / 2.0).powi(2);
            assert!((lam - want).abs() < 1e-8 * want);
        }
        for (k, lam) in r.stronger.iter().enumerate() {
            let want = ((k + 1) as f64 * PI).powi(2);
            assert!((lam - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn cycle_with_dirichlet_point_interlaces() {
        let g = MetricGraph::new(vec![VertexCondition::kirchhoff()], vec![(0, 0, 1.0)]).unwrap();
        let split = graph::insert_dummy(&g, 0, 0.5).unwrap();
        let r = interlacing_check(&split, &[1], 6, &SolveOpts::default()).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn mixed_toggles_rejected() {
        let g = dd_interval();
        let half = g.with_condition(0, VertexCondition::kirchhoff()).unwrap();
        assert!(matches!(
            interlacing_check(&half, &[0, 1], 4, &SolveOpts::default()),
            Err(BoundsError::MixedToggle)
        ));
        let delta = g.with_condition(0, VertexCondition::Delta(1.0)).unwrap();
        assert!(matches!(
            interlacing_check(&delta, &[0], 4, &SolveOpts::default()),
            Err(BoundsError::UnsupportedToggle { .. })
        ));
    }

    #[test]
    fn big_star_sweep_zero_edge_case_is_the_interval() {
        let rows = counterexample_sweep(
            SweepFamily::BigStar {
                tail: 1.0,
                epsilon: 0.01,
            },
            &[0],
            &SolveOpts::default(),
        )
        .unwrap();
        assert!((rows[0].ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn infimum_witnesses_hit_one() {
        for (k, j) in [(3usize, 2usize), (4, 2), (4, 3)] {
            let (_, ratio) = infimum_witness(k, j).unwrap();
            assert!((ratio - 1.0).abs() < 1e-9, "({k},{j}): {ratio}");
        }
        let (g, ratio) = infimum_witness(4, 1).unwrap();
        assert!((ratio - 1.0).abs() < 1e-9);
        assert!(g.condition(0).is_dirichlet());
    }

    #[test]
    fn connected_tree_first_ratio_strictly_above_one() {
        let g = random_dirichlet_tree(11, 6, 0.3, 1.5);
        let s = compute_spectrum(&g, 2, &SolveOpts::default()).unwrap();
        assert!(s.lambda(2) / s.lambda(1) > 1.0 + 1e-6);
    }

    #[test]
    fn mixed_graph_generator_respects_caps() {
        for seed in 0..30u64 {
            let g = random_mixed_graph(seed, 7, 2, 2, 0.1, 2.0);
            let s = graph_stats(&g);
            assert!(s.betti <= 2);
            assert!(s.neumann_leaves <= 2);
            assert!(s.dirichlet_leaves >= 1);
        }
    }
}
