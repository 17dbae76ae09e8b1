//! Eigenvalues and eigenfunctions through the trigonometric edge ansatz.
//!
//! On each edge `e ~ [0, l_e]` an eigenfunction at frequency `k` is
//! `A cos(kx) + B sin(kx)`. Vertex conditions assemble into a square secular
//! matrix acting on the coefficient vector; `k²` is an eigenvalue exactly when
//! the matrix is singular. Roots in `k` are located by scanning the smallest
//! singular value on a Weyl-spaced grid and refining each dip by golden
//! section. Determinants are deliberately avoided: they overflow for larger
//! graphs and miss even-order roots, while the smallest singular value is
//! scale-robust.
//!
//! Missed-root protection: the number of accepted frequencies below a cut
//! placed in a wide spectral gap is compared against the finite-element
//! oracle's count; on mismatch the scan is repeated at half step.

use crate::fem;
use crate::graph::{self, MetricGraph};
use crate::roots::golden_min;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Frequencies closer than this merge into one eigenvalue cluster.
const CLUSTER_TOL_K: f64 = 1e-9;
/// A singular value counts toward the null space when below this fraction of
/// the median singular value.
const NULL_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("requested eigenvalue count must be at least 1")]
    ZeroCount,
    #[error("vertex {vertex} has negative delta strength {strength}; the positive-frequency scan does not cover bound states")]
    NegativeStrength { vertex: usize, strength: f64 },
    #[error("eigenvalue count below k = {cut:.6} disagrees with the FEM oracle after {attempts} rescans: secular {secular}, oracle {oracle}")]
    CountMismatch {
        cut: f64,
        secular: usize,
        oracle: usize,
        attempts: u32,
    },
    #[error("scan reached k = {reached:.3} without bracketing {needed} eigenvalues")]
    ScanExhausted { needed: usize, reached: f64 },
    #[error("lambda = {lambda} is not an eigenvalue (smallest singular value {sigma_min:.3e})")]
    NotAnEigenvalue { lambda: f64, sigma_min: f64 },
    #[error("lambda = 0 is an eigenvalue only when no Dirichlet vertex and no nonzero strength is present")]
    ZeroMode,
    #[error("eigenfunction index {index} exceeds multiplicity {multiplicity}")]
    IndexOutOfMultiplicity { index: usize, multiplicity: usize },
    #[error("non-generic eigenfunction: a zero sits on a vertex or an edge vanishes identically; jitter the edge lengths")]
    NonGeneric,
    #[error(transparent)]
    Oracle(#[from] fem::FemError),
}

/// One eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCluster {
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Ordered spectrum with multiplicities and a fingerprint of the graph it
/// belongs to. Flattened indexing is 1-based: `lambda(1)` is the lowest
/// eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub clusters: Vec<EigenCluster>,
    pub fingerprint: u64,
}

impl Spectrum {
    pub fn from_flattened(values: &[f64], fingerprint: u64, rel_tol: f64) -> Self {
        let mut clusters: Vec<EigenCluster> = Vec::new();
        for &v in values {
            match clusters.last_mut() {
                Some(c) if (v - c.lambda).abs() <= rel_tol * c.lambda.abs().max(1.0) => {
                    c.multiplicity += 1;
                }
                _ => clusters.push(EigenCluster {
                    lambda: v,
                    multiplicity: 1,
                }),
            }
        }
        Spectrum {
            clusters,
            fingerprint,
        }
    }

    pub fn len_flat(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    /// 1-based flattened access.
    pub fn lambda(&self, k: usize) -> f64 {
        assert!(k >= 1, "eigenvalue indices are 1-based");
        let mut seen = 0;
        for c in &self.clusters {
            seen += c.multiplicity;
            if seen >= k {
                return c.lambda;
            }
        }
        panic!("eigenvalue index {k} beyond computed spectrum ({seen} available)");
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.lambda(k).max(0.0).sqrt()
    }

    pub fn flattened(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat(c.lambda).take(c.multiplicity))
            .collect()
    }

    /// Multiplicity of the cluster containing flattened index `k`.
    pub fn multiplicity_at(&self, k: usize) -> usize {
        assert!(k >= 1);
        let mut seen = 0;
        for c in &self.clusters {
            seen += c.multiplicity;
            if seen >= k {
                return c.multiplicity;
            }
        }
        panic!("eigenvalue index {k} beyond computed spectrum");
    }
}

/// Loop-free version of a graph for assembly: every loop is split once at its
/// midpoint by a Kirchhoff dummy, which leaves the spectrum unchanged.
pub(crate) struct Assembled {
    pub graph: MetricGraph,
    /// Per assembled edge: (source edge id, offset of the segment start).
    pub source: Vec<(usize, f64)>,
}

pub(crate) fn split_loops(g: &MetricGraph) -> Assembled {
    if g.edges().iter().all(|e| !e.is_loop()) {
        return Assembled {
            graph: g.clone(),
            source: g.edges().iter().map(|e| (e.id, 0.0)).collect(),
        };
    }
    let mut conditions: Vec<graph::VertexCondition> =
        g.vertices().iter().map(|v| v.condition).collect();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut source = Vec::new();
    for e in g.edges() {
        if e.is_loop() {
            let w = conditions.len();
            conditions.push(graph::VertexCondition::kirchhoff());
            edges.push((e.from, w, e.length / 2.0));
            source.push((e.id, 0.0));
            edges.push((w, e.to, e.length / 2.0));
            source.push((e.id, e.length / 2.0));
        } else {
            edges.push((e.from, e.to, e.length));
            source.push((e.id, 0.0));
        }
    }
    Assembled {
        graph: MetricGraph::new(conditions, edges).expect("loop splitting keeps the graph valid"),
        source,
    }
}

fn value_coeffs(len: f64, k: f64, at_to: bool) -> (f64, f64) {
    if at_to {
        ((k * len).cos(), (k * len).sin())
    } else {
        (1.0, 0.0)
    }
}

fn deriv_into_coeffs(len: f64, k: f64, at_to: bool) -> (f64, f64) {
    if at_to {
        (-k * (k * len).sin(), k * (k * len).cos())
    } else {
        (0.0, -k)
    }
}

/// Secular matrix of size `2m x 2m` at frequency `k > 0`. Rows encode, per
/// vertex, `deg - 1` continuity equations plus one flux equation for delta
/// vertices, and `deg` vanishing equations for Dirichlet vertices. Flux rows
/// are pre-scaled by `1/max(1, k)` so derivative rows stay balanced against
/// value rows. A nontrivial null vector exists iff `k²` is an eigenvalue.
///
/// Loops must be split before assembly (see [`split_loops`]); `compute_spectrum`
/// does this automatically.
pub fn secular_matrix(g: &MetricGraph, k: f64) -> Result<DMatrix<f64>, SpectralError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(SpectralError::NonPositiveFrequency(k));
    }
    debug_assert!(
        g.edges().iter().all(|e| !e.is_loop()),
        "loops must be pre-split before secular assembly"
    );
    Ok(build_secular(g, k))
}

fn build_secular(g: &MetricGraph, k: f64) -> DMatrix<f64> {
    let m = g.num_edges();
    let mut mat = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let mut row = 0;
    for v in g.vertices() {
        let mut endpoints: Vec<(usize, bool)> = Vec::new();
        for e in g.edges() {
            if e.from == v.id {
                endpoints.push((e.id, false));
            }
            if e.to == v.id {
                endpoints.push((e.id, true));
            }
        }
        match v.condition {
            graph::VertexCondition::Dirichlet => {
                for &(e, at_to) in &endpoints {
                    let (ca, cb) = value_coeffs(g.edges()[e].length, k, at_to);
                    mat[(row, 2 * e)] = ca;
                    mat[(row, 2 * e + 1)] = cb;
                    row += 1;
                }
            }
            graph::VertexCondition::Delta(alpha) => {
                for pair in endpoints.windows(2) {
                    let (e1, t1) = pair[0];
                    let (e2, t2) = pair[1];
                    let (a1, b1) = value_coeffs(g.edges()[e1].length, k, t1);
                    let (a2, b2) = value_coeffs(g.edges()[e2].length, k, t2);
                    mat[(row, 2 * e1)] += a1;
                    mat[(row, 2 * e1 + 1)] += b1;
                    mat[(row, 2 * e2)] -= a2;
                    mat[(row, 2 * e2 + 1)] -= b2;
                    row += 1;
                }
                let scale = 1.0 / k.max(1.0);
                for &(e, at_to) in &endpoints {
                    let (da, db) = deriv_into_coeffs(g.edges()[e].length, k, at_to);
                    mat[(row, 2 * e)] += scale * da;
                    mat[(row, 2 * e + 1)] += scale * db;
                }
                if alpha != 0.0 {
                    let (e, at_to) = endpoints[0];
                    let (ca, cb) = value_coeffs(g.edges()[e].length, k, at_to);
                    mat[(row, 2 * e)] += scale * alpha * ca;
                    mat[(row, 2 * e + 1)] += scale * alpha * cb;
                }
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, 2 * m);
    mat
}

fn singular_values_sorted(g: &MetricGraph, k: f64) -> Vec<f64> {
    let mut sv: Vec<f64> = build_secular(g, k)
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(f64::total_cmp);
    sv
}

pub(crate) fn sigma_min(g: &MetricGraph, k: f64) -> f64 {
    build_secular(g, k)
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Options for [`compute_spectrum`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOpts {
    /// Grid step of the frequency scan; default `pi / (4 L)`, four samples
    /// per mean Weyl gap.
    pub scan_step: Option<f64>,
    /// Absolute bracket width in `k` at which refinement stops.
    pub refine_tol: f64,
    /// Cross-check eigenvalue counts against the FEM oracle and rescan at
    /// half step on mismatch.
    pub certify: bool,
    /// Rescan attempts before a count mismatch becomes an error.
    pub max_rescans: u32,
    /// Refine brackets in parallel (results are merged in sorted order, so
    /// output does not depend on thread count).
    pub parallel: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            scan_step: None,
            refine_tol: 1e-12,
            certify: true,
            max_rescans: 5,
            parallel: false,
        }
    }
}

impl SolveOpts {
    pub fn uncertified() -> Self {
        SolveOpts {
            certify: false,
            ..Default::default()
        }
    }
}

struct Cut {
    /// Index into the full cluster list (zero mode included) after which the
    /// cut is placed.
    cluster: usize,
    k_cut: f64,
    flat_below: usize,
}

/// Clusters are `(k, multiplicity)` with `k = 0` representing the zero mode.
fn find_cut(full: &[(f64, usize)], count: usize, need_gap: Option<f64>) -> Option<Cut> {
    let mut cum = 0;
    let mut c_star = None;
    let mut cum_at = vec![0usize; full.len()];
    for (i, &(_, mult)) in full.iter().enumerate() {
        cum += mult;
        cum_at[i] = cum;
        if c_star.is_none() && cum >= count {
            c_star = Some(i);
        }
    }
    let c_star = c_star?;
    let Some(gap_min) = need_gap else {
        return Some(Cut {
            cluster: c_star,
            k_cut: f64::NAN,
            flat_below: cum_at[c_star],
        });
    };
    let mut best: Option<(f64, usize)> = None;
    for c in c_star..full.len().saturating_sub(1) {
        let gap = full[c + 1].0 - full[c].0;
        if gap >= gap_min {
            return Some(Cut {
                cluster: c,
                k_cut: 0.5 * (full[c].0 + full[c + 1].0),
                flat_below: cum_at[c],
            });
        }
        if best.map_or(true, |(g, _)| gap > g) {
            best = Some((gap, c));
        }
        // Give up looking for a wide gap eventually and take the best seen.
        if c >= c_star + 20 {
            break;
        }
    }
    if full.len() > c_star + 20 {
        let (_, c) = best?;
        return Some(Cut {
            cluster: c,
            k_cut: 0.5 * (full[c].0 + full[c + 1].0),
            flat_below: cum_at[c],
        });
    }
    None
}

/// First `count` eigenvalues (with multiplicities) of the Laplacian on `g`.
///
/// `lambda = 0` is never produced by the scan; it is added analytically
/// exactly when the graph has no Dirichlet vertex and all delta strengths
/// vanish. Negative strengths are rejected: they can push eigenvalues below
/// zero, outside the positive-frequency scan (the closed-form module handles
/// the negative-strength interval problems needed elsewhere).
pub fn compute_spectrum(
    g: &MetricGraph,
    count: usize,
    opts: &SolveOpts,
) -> Result<Spectrum, SpectralError> {
    if count == 0 {
        return Err(SpectralError::ZeroCount);
    }
    for v in g.vertices() {
        if let Some(a) = v.condition.strength() {
            if a < 0.0 {
                return Err(SpectralError::NegativeStrength {
                    vertex: v.id,
                    strength: a,
                });
            }
        }
    }
    let asm = split_loops(g);
    let total = g.total_length();
    let zero_mode = !g.has_dirichlet_vertex() && !g.has_nonzero_strength();
    let base_step = opts.scan_step.unwrap_or(std::f64::consts::PI / (4.0 * total));

    let mut step = base_step;
    let mut lo = if zero_mode {
        // Safely below the first nonzero frequency of an all-Kirchhoff graph
        // (which is at least pi/(2L)) but away from the zero mode.
        std::f64::consts::PI / (2.5 * total)
    } else {
        base_step / 8.0
    };
    let mut attempts = 0u32;
    loop {
        let scan = scan_clusters(&asm, lo, step, count, zero_mode, opts)?;
        let (full, cut) = scan;
        if !opts.certify {
            return Ok(spectrum_from(&full, cut.cluster, count, g.fingerprint()));
        }
        let oracle = certify_count(g, &full, &cut)?;
        if oracle == cut.flat_below {
            return Ok(spectrum_from(&full, cut.cluster, count, g.fingerprint()));
        }
        attempts += 1;
        if attempts > opts.max_rescans {
            return Err(SpectralError::CountMismatch {
                cut: cut.k_cut,
                secular: cut.flat_below,
                oracle,
                attempts,
            });
        }
        step *= 0.25;
        if !zero_mode {
            lo *= 0.25;
        }
    }
}

fn spectrum_from(full: &[(f64, usize)], c_star: usize, count: usize, fp: u64) -> Spectrum {
    // Keep whole clusters through the one containing flattened entry `count`.
    let mut clusters = Vec::new();
    let mut cum = 0;
    for &(k, mult) in &full[..=c_star] {
        clusters.push(EigenCluster {
            lambda: k * k,
            multiplicity: mult,
        });
        cum += mult;
    }
    debug_assert!(cum >= count);
    Spectrum {
        clusters,
        fingerprint: fp,
    }
}

fn certify_count(g: &MetricGraph, full: &[(f64, usize)], cut: &Cut) -> Result<usize, SpectralError> {
    let k_cut = cut.k_cut;
    let k_last = full[cut.cluster].0;
    let k_next = full[cut.cluster + 1].0;
    let margin = (k_cut * k_cut - k_last * k_last).min(k_next * k_next - k_cut * k_cut);
    // Conforming-element bias at the cut is about lambda² h² / 12; keep it
    // under a quarter of the margin (factor 2 safety on top).
    let h_bias = (1.5 * margin.max(1e-12)).sqrt() / (k_cut * k_cut).max(1.0);
    let h_resolve = std::f64::consts::PI / (4.0 * k_cut.max(1.0));
    let h_floor = g.total_length() / 2800.0;
    let h_edges = g.min_edge_length() / 2.01;
    let h = h_bias.min(h_resolve).max(h_floor).min(h_edges);
    Ok(fem::count_below(g, k_cut * k_cut, h)?)
}

fn scan_clusters(
    asm: &Assembled,
    lo: f64,
    step: f64,
    count: usize,
    zero_mode: bool,
    opts: &SolveOpts,
) -> Result<(Vec<(f64, usize)>, Cut), SpectralError> {
    let g = &asm.graph;
    let total = g.total_length();
    let stats = graph::graph_stats(g);
    // Weyl slack: enough room for `count` eigenvalues plus generous graph
    // corrections before the scan may legitimately give up.
    let k_hard = std::f64::consts::PI
        * (count as f64 + 25.0 + 2.0 * (stats.num_edges + stats.num_vertices) as f64)
        / total;
    let gap_min = if opts.certify {
        Some(0.05 * std::f64::consts::PI / total)
    } else {
        None
    };
    const CHUNK: usize = 32;
    let mut grid: Vec<(f64, f64)> = Vec::new();
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut next_candidate = 1usize;
    let mut next_gap = 0usize;
    let mut boundary_checked = false;
    // Running Lipschitz estimate of sigma_min along the grid; a root within
    // one step of a grid point forces sigma there below lip * step, which
    // catches dips that the plain local-minimum pattern aliases away.
    let mut lip = 0.0f64;

    loop {
        let start = grid.len();
        let ks: Vec<f64> = (start..start + CHUNK)
            .map(|i| lo + i as f64 * step)
            .collect();
        let sigmas: Vec<f64> = if opts.parallel {
            ks.par_iter().map(|&k| sigma_min(g, k)).collect()
        } else {
            ks.iter().map(|&k| sigma_min(g, k)).collect()
        };
        grid.extend(ks.into_iter().zip(sigmas));
        for i in start.max(1)..grid.len() {
            lip = lip.max((grid[i].1 - grid[i - 1].1).abs() / step);
        }

        let mut brackets: Vec<(f64, f64)> = Vec::new();
        if !boundary_checked && grid.len() >= 2 {
            boundary_checked = true;
            if grid[0].1 < grid[1].1 || grid[0].1 <= 0.9 * lip * step {
                brackets.push(((lo * 0.125).max(1e-12), grid[1].0));
            }
        }
        while next_candidate + 1 < grid.len() {
            let i = next_candidate;
            if grid[i].1 <= grid[i - 1].1 && grid[i].1 <= grid[i + 1].1 {
                brackets.push((grid[i - 1].0, grid[i + 1].0));
            }
            next_candidate += 1;
        }
        while next_gap + 1 < grid.len() {
            let (ka, sa) = grid[next_gap];
            let (kb, sb) = grid[next_gap + 1];
            if sa.min(sb) <= 0.9 * lip * step {
                brackets.push((ka, kb));
            }
            next_gap += 1;
        }

        let refined: Vec<Option<(f64, usize)>> = if opts.parallel {
            brackets
                .par_iter()
                .map(|&(a, b)| refine_bracket(g, a, b, opts.refine_tol))
                .collect()
        } else {
            brackets
                .iter()
                .map(|&(a, b)| refine_bracket(g, a, b, opts.refine_tol))
                .collect()
        };
        for root in refined.into_iter().flatten() {
            merge_cluster(&mut clusters, root);
        }

        let mut full: Vec<(f64, usize)> = Vec::new();
        if zero_mode {
            full.push((0.0, 1));
        }
        full.extend(clusters.iter().copied());
        if let Some(cut) = find_cut(&full, count, gap_min) {
            return Ok((full, cut));
        }
        if grid.last().map(|&(k, _)| k).unwrap_or(lo) > k_hard {
            return Err(SpectralError::ScanExhausted {
                needed: count,
                reached: k_hard,
            });
        }
    }
}

fn merge_cluster(clusters: &mut Vec<(f64, usize)>, root: (f64, usize)) {
    for c in clusters.iter_mut() {
        if (c.0 - root.0).abs() <= CLUSTER_TOL_K {
            // Same root rediscovered from an overlapping bracket; the
            // singular-value count at the refined point already includes any
            // near-coincident neighbors.
            c.1 = c.1.max(root.1);
            return;
        }
    }
    clusters.push(root);
    clusters.sort_by(|a, b| a.0.total_cmp(&b.0));
}

fn refine_bracket(g: &MetricGraph, a: f64, b: f64, tol: f64) -> Option<(f64, usize)> {
    let k_star = golden_min(|k| sigma_min(g, k), a, b, tol);
    let sv = singular_values_sorted(g, k_star);
    let med = median(&sv).max(f64::MIN_POSITIVE);
    let mult = sv.iter().filter(|&&s| s < NULL_REL_TOL * med).count();
    if mult >= 1 {
        Some((k_star, mult))
    } else {
        None
    }
}

/// One trigonometric wave segment of an eigenfunction. `offset` is the
/// segment's start inside its source edge (nonzero only for the second half
/// of a split loop); the local coordinate runs over `[0, length]` and global
/// edge coordinate `x` maps to local `x - offset`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Wave {
    pub edge: usize,
    pub offset: f64,
    pub length: f64,
    pub a: f64,
    pub b: f64,
}

impl Wave {
    fn eval_local(&self, k: f64, x: f64) -> f64 {
        self.a * (k * x).cos() + self.b * (k * x).sin()
    }

    fn deriv_local(&self, k: f64, x: f64) -> f64 {
        k * (-self.a * (k * x).sin() + self.b * (k * x).cos())
    }

    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Eigenfunction as wave coefficients per (split) edge, L²-normalized over
/// the whole graph with a deterministic sign.
#[derive(Debug, Clone, Serialize)]
pub struct Eigenfunction {
    pub lambda: f64,
    pub waves: Vec<Wave>,
    pub normalized: bool,
}

impl Eigenfunction {
    pub fn frequency(&self) -> f64 {
        self.lambda.max(0.0).sqrt()
    }

    /// Value at edge coordinate `x` on the original edge.
    pub fn eval(&self, edge: usize, x: f64) -> f64 {
        let k = self.frequency();
        let w = self.wave_at(edge, x);
        w.eval_local(k, x - w.offset)
    }

    pub fn eval_deriv(&self, edge: usize, x: f64) -> f64 {
        let k = self.frequency();
        let w = self.wave_at(edge, x);
        w.deriv_local(k, x - w.offset)
    }

    fn wave_at(&self, edge: usize, x: f64) -> &Wave {
        self.waves
            .iter()
            .filter(|w| w.edge == edge)
            .find(|w| x <= w.offset + w.length)
            .or_else(|| self.waves.iter().filter(|w| w.edge == edge).last())
            .expect("edge has no wave")
    }

    /// Wave amplitude sqrt(A² + B²) on an edge. Constant across the halves of
    /// a split loop, so the first segment is representative.
    pub fn amplitude(&self, edge: usize) -> f64 {
        self.waves
            .iter()
            .find(|w| w.edge == edge)
            .map(Wave::amplitude)
            .expect("edge has no wave")
    }
}

/// Closed-form integral of the product of two waves at frequency `k` over
/// `[0, len]`.
fn wave_product_integral(k: f64, len: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    if k == 0.0 {
        return a1 * a2 * len;
    }
    let s2 = (2.0 * k * len).sin();
    let c2 = (2.0 * k * len).cos();
    let icc = 0.5 * len + s2 / (4.0 * k);
    let iss = 0.5 * len - s2 / (4.0 * k);
    let ics = (1.0 - c2) / (4.0 * k);
    a1 * a2 * icc + b1 * b2 * iss + (a1 * b2 + a2 * b1) * ics
}

fn l2_inner(asm: &Assembled, k: f64, u: &[(f64, f64)], v: &[(f64, f64)]) -> f64 {
    asm.graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| wave_product_integral(k, e.length, u[i].0, u[i].1, v[i].0, v[i].1))
        .sum()
}

/// All eigenfunctions of the eigenvalue `lambda`, L²-orthonormalized, in a
/// deterministic order (ascending singular value before orthogonalization).
pub fn eigenfunctions(g: &MetricGraph, lambda: f64) -> Result<Vec<Eigenfunction>, SpectralError> {
    let asm = split_loops(g);
    if lambda == 0.0 {
        if g.has_dirichlet_vertex() || g.has_nonzero_strength() {
            return Err(SpectralError::ZeroMode);
        }
        let c = 1.0 / g.total_length().sqrt();
        let waves = asm
            .graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| Wave {
                edge: asm.source[i].0,
                offset: asm.source[i].1,
                length: e.length,
                a: c,
                b: 0.0,
            })
            .collect();
        return Ok(vec![Eigenfunction {
            lambda: 0.0,
            waves,
            normalized: true,
        }]);
    }
    if !(lambda > 0.0) {
        return Err(SpectralError::NotAnEigenvalue {
            lambda,
            sigma_min: f64::NAN,
        });
    }
    let k = lambda.sqrt();
    let mat = build_secular(&asm.graph, k);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut sv: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    sv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let sorted: Vec<f64> = sv.iter().map(|x| x.0).collect();
    let med = median(&sorted).max(f64::MIN_POSITIVE);
    let null: Vec<usize> = sv
        .iter()
        .filter(|(s, _)| *s < NULL_REL_TOL * med)
        .map(|&(_, i)| i)
        .collect();
    if null.is_empty() {
        return Err(SpectralError::NotAnEigenvalue {
            lambda,
            sigma_min: sorted[0],
        });
    }

    let m = asm.graph.num_edges();
    let mut basis: Vec<Vec<(f64, f64)>> = Vec::new();
    for &row in &null {
        let mut coeffs: Vec<(f64, f64)> = (0..m)
            .map(|e| (v_t[(row, 2 * e)], v_t[(row, 2 * e + 1)]))
            .collect();
        // Gram-Schmidt in the L²(graph) inner product.
        for prev in &basis {
            let proj = l2_inner(&asm, k, &coeffs, prev);
            for (c, p) in coeffs.iter_mut().zip(prev) {
                c.0 -= proj * p.0;
                c.1 -= proj * p.1;
            }
        }
        let norm = l2_inner(&asm, k, &coeffs, &coeffs).sqrt();
        if norm < 1e-6 {
            continue;
        }
        for c in coeffs.iter_mut() {
            c.0 /= norm;
            c.1 /= norm;
        }
        basis.push(coeffs);
    }

    let mut out = Vec::with_capacity(basis.len());
    for coeffs in basis {
        let mut waves: Vec<Wave> = asm
            .graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| Wave {
                edge: asm.source[i].0,
                offset: asm.source[i].1,
                length: e.length,
                a: coeffs[i].0,
                b: coeffs[i].1,
            })
            .collect();
        apply_sign_convention(&mut waves, k);
        out.push(Eigenfunction {
            lambda,
            waves,
            normalized: true,
        });
    }
    Ok(out)
}

/// The eigenfunction of a simple eigenvalue, or the `index`-th member of the
/// deterministic orthonormal basis for a multiple one.
pub fn eigenfunction(
    g: &MetricGraph,
    lambda: f64,
    index: usize,
) -> Result<Eigenfunction, SpectralError> {
    let mut all = eigenfunctions(g, lambda)?;
    let mult = all.len();
    if index >= mult {
        return Err(SpectralError::IndexOutOfMultiplicity {
            index,
            multiplicity: mult,
        });
    }
    Ok(all.swap_remove(index))
}

/// Sign-definite eigenfunctions are made positive; otherwise the wave
/// coefficient of largest magnitude is made positive. Either way the output
/// is deterministic.
fn apply_sign_convention(waves: &mut [Wave], k: f64) {
    let mut min_sample = f64::INFINITY;
    let mut max_sample = f64::NEG_INFINITY;
    for w in waves.iter() {
        for frac in [0.25, 0.5, 0.75] {
            let v = w.eval_local(k, frac * w.length);
            min_sample = min_sample.min(v);
            max_sample = max_sample.max(v);
        }
    }
    let scale = min_sample.abs().max(max_sample.abs()).max(1e-300);
    let flip = if min_sample >= -1e-9 * scale {
        false
    } else if max_sample <= 1e-9 * scale {
        true
    } else {
        let mut largest = 0.0f64;
        let mut largest_abs = 0.0f64;
        for w in waves.iter() {
            for c in [w.a, w.b] {
                if c.abs() > largest_abs {
                    largest_abs = c.abs();
                    largest = c;
                }
            }
        }
        largest < 0.0
    };
    if flip {
        for w in waves.iter_mut() {
            w.a = -w.a;
            w.b = -w.b;
        }
    }
}

/// Worst-case residuals of an eigenfunction in the vertex conditions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VertexResiduals {
    /// Max |difference of edge values| over non-Dirichlet vertices.
    pub continuity: f64,
    /// Max |sum of inward derivatives + strength * value| over delta vertices.
    pub flux: f64,
    /// Max |value| over Dirichlet vertices.
    pub dirichlet: f64,
}

pub fn vertex_residuals(g: &MetricGraph, ef: &Eigenfunction) -> VertexResiduals {
    let asm = split_loops(g);
    let k = ef.frequency();
    // Waves are stored in split-edge order.
    let waves = &ef.waves;
    let mut res = VertexResiduals {
        continuity: 0.0,
        flux: 0.0,
        dirichlet: 0.0,
    };
    for v in asm.graph.vertices() {
        let mut values = Vec::new();
        let mut flux = 0.0;
        for (i, e) in asm.graph.edges().iter().enumerate() {
            if e.from == v.id {
                values.push(waves[i].eval_local(k, 0.0));
                flux += -waves[i].deriv_local(k, 0.0);
            }
            if e.to == v.id {
                values.push(waves[i].eval_local(k, e.length));
                flux += waves[i].deriv_local(k, e.length);
            }
        }
        match v.condition {
            graph::VertexCondition::Dirichlet => {
                for val in values {
                    res.dirichlet = res.dirichlet.max(val.abs());
                }
            }
            graph::VertexCondition::Delta(alpha) => {
                for pair in values.windows(2) {
                    res.continuity = res.continuity.max((pair[0] - pair[1]).abs());
                }
                let total = flux + alpha * values.first().copied().unwrap_or(0.0);
                res.flux = res.flux.max(total.abs());
            }
        }
    }
    res
}

/// Number of connected sign domains of an eigenfunction.
///
/// Errors with [`SpectralError::NonGeneric`] when a zero of the function sits
/// on a non-Dirichlet vertex (within relative tolerance 1e-9) or when the
/// function vanishes identically on some edge: those configurations are
/// knife-edge cases whose nodal count is not stable, and the caller is
/// expected to jitter the edge lengths instead.
pub fn nodal_count(g: &MetricGraph, ef: &Eigenfunction) -> Result<usize, SpectralError> {
    let asm = split_loops(g);
    let k = ef.frequency();
    let waves = &ef.waves;
    assert_eq!(waves.len(), asm.graph.num_edges());

    let scale = waves.iter().map(Wave::amplitude).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(SpectralError::NonGeneric);
    }
    // Zero sets per split edge.
    let mut zeros_per_edge: Vec<Vec<f64>> = Vec::with_capacity(waves.len());
    for (i, e) in asm.graph.edges().iter().enumerate() {
        let w = &waves[i];
        if w.amplitude() < 1e-9 * scale {
            return Err(SpectralError::NonGeneric);
        }
        let mut zeros = Vec::new();
        if k > 0.0 {
            // a cos + b sin = R sin(kx + phi), phi = atan2(a, b).
            let phi = w.a.atan2(w.b);
            let len = e.length;
            let j_lo = (phi / std::f64::consts::PI).floor() as i64;
            let j_hi = ((k * len + phi) / std::f64::consts::PI).ceil() as i64;
            for j in j_lo..=j_hi {
                let x = (j as f64 * std::f64::consts::PI - phi) / k;
                if x > 1e-9 * len && x < len * (1.0 - 1e-9) {
                    zeros.push(x);
                }
            }
            zeros.sort_by(f64::total_cmp);
        }
        zeros_per_edge.push(zeros);
    }
    // Vertex values; a zero at a non-Dirichlet vertex is non-generic.
    let mut vertex_value = vec![0.0f64; asm.graph.num_vertices()];
    for (i, e) in asm.graph.edges().iter().enumerate() {
        vertex_value[e.from] = waves[i].eval_local(k, 0.0);
        vertex_value[e.to] = waves[i].eval_local(k, e.length);
    }
    for v in asm.graph.vertices() {
        if !v.condition.is_dirichlet() && vertex_value[v.id].abs() < 1e-9 * scale {
            return Err(SpectralError::NonGeneric);
        }
    }

    // Union-find over per-edge sign regions.
    let mut region_offset = vec![0usize; waves.len()];
    let mut total_regions = 0usize;
    for (i, zeros) in zeros_per_edge.iter().enumerate() {
        region_offset[i] = total_regions;
        total_regions += zeros.len() + 1;
    }
    let mut parent: Vec<usize> = (0..total_regions).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for v in asm.graph.vertices() {
        if v.condition.is_dirichlet() {
            continue;
        }
        let mut incident_regions = Vec::new();
        for (i, e) in asm.graph.edges().iter().enumerate() {
            if e.from == v.id {
                incident_regions.push(region_offset[i]);
            }
            if e.to == v.id {
                incident_regions.push(region_offset[i] + zeros_per_edge[i].len());
            }
        }
        for pair in incident_regions.windows(2) {
            union(&mut parent, pair[0], pair[1]);
        }
    }
    let mut roots: Vec<usize> = (0..total_regions).map(|x| find(&mut parent, x)).collect();
    roots.sort_unstable();
    roots.dedup();
    Ok(roots.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_family, FamilySpec, VertexCondition};
    use std::f64::consts::PI;

    fn dd_interval(len: f64) -> MetricGraph {
        make_family(&FamilySpec::Interval {
            length: len,
            left: VertexCondition::Dirichlet,
            right: VertexCondition::Dirichlet,
        })
        .unwrap()
    }

    fn star3_pi() -> MetricGraph {
        make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: PI,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap()
    }

    #[test]
    fn interval_secular_matrix_singular_exactly_at_roots() {
        let g = dd_interval(1.0);
        let near_zero = sigma_min(&g, PI);
        assert!(near_zero < 1e-12, "sigma_min(pi) = {near_zero}");
        let away = sigma_min(&g, PI / 2.0);
        assert!(away > 0.1, "sigma_min(pi/2) = {away}");
        assert!(matches!(
            secular_matrix(&g, 0.0),
            Err(SpectralError::NonPositiveFrequency(_))
        ));
    }

    #[test]
    fn star_null_space_dimensions() {
        let g = star3_pi();
        let sv_half = singular_values_sorted(&g, 0.5);
        let med = median(&sv_half);
        assert_eq!(
            sv_half.iter().filter(|&&s| s < 1e-8 * med).count(),
            1,
            "cos(x/2) mode should be simple: {sv_half:?}"
        );
        let sv_one = singular_values_sorted(&g, 1.0);
        let med1 = median(&sv_one);
        assert_eq!(sv_one.iter().filter(|&&s| s < 1e-8 * med1).count(), 2);
    }

    #[test]
    fn interval_spectrum_is_k_squared_pi_squared() {
        let s = compute_spectrum(&dd_interval(1.0), 3, &SolveOpts::default()).unwrap();
        for k in 1..=3 {
            let exact = (k as f64 * PI).powi(2);
            assert!(
                (s.lambda(k) - exact).abs() <= 1e-10 * exact,
                "lambda_{k} = {}, want {exact}",
                s.lambda(k)
            );
            assert_eq!(s.multiplicity_at(k), 1);
        }
    }

    #[test]
    fn equilateral_star_spectrum_quarters() {
        let s = compute_spectrum(&star3_pi(), 4, &SolveOpts::default()).unwrap();
        let want = [0.25, 1.0, 1.0, 2.25];
        for (i, &w) in want.iter().enumerate() {
            assert!(
                (s.lambda(i + 1) - w).abs() <= 1e-9 * w,
                "lambda_{} = {}, want {w}",
                i + 1,
                s.lambda(i + 1)
            );
        }
        assert_eq!(s.multiplicity_at(2), 2);
    }

    #[test]
    fn dirichlet_center_star_is_fully_degenerate() {
        for m in [3usize, 4] {
            let g = make_family(&FamilySpec::EquilateralStar {
                legs: m,
                length: 1.0,
                leaf: VertexCondition::Dirichlet,
                center: VertexCondition::Dirichlet,
            })
            .unwrap();
            let s = compute_spectrum(&g, m, &SolveOpts::default()).unwrap();
            assert_eq!(s.multiplicity_at(1), m);
            assert!((s.lambda(1) - PI * PI).abs() < 1e-9 * PI * PI);
        }
    }

    #[test]
    fn kirchhoff_graph_gets_analytic_zero_mode() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: 1.0,
            leaf: VertexCondition::kirchhoff(),
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let s = compute_spectrum(&g, 3, &SolveOpts::default()).unwrap();
        assert_eq!(s.lambda(1), 0.0);
        assert!(s.lambda(2) > 0.0);
    }

    #[test]
    fn loop_spectrum_matches_circle() {
        // Single loop of length 1 with one Kirchhoff vertex: lambda = (2 pi j)².
        let g = MetricGraph::new(vec![VertexCondition::kirchhoff()], vec![(0, 0, 1.0)]).unwrap();
        let s = compute_spectrum(&g, 4, &SolveOpts::default()).unwrap();
        assert_eq!(s.lambda(1), 0.0);
        let four_pi_sq = 4.0 * PI * PI;
        assert!((s.lambda(2) - four_pi_sq).abs() < 1e-9 * four_pi_sq);
        assert!((s.lambda(3) - four_pi_sq).abs() < 1e-9 * four_pi_sq);
        assert_eq!(s.multiplicity_at(2), 2);
    }

    #[test]
    fn interval_eigenfunction_is_sqrt2_sine() {
        let g = dd_interval(1.0);
        let efs = eigenfunctions(&g, PI * PI).unwrap();
        assert_eq!(efs.len(), 1);
        let ef = &efs[0];
        for x in [0.1, 0.25, 0.5, 0.8] {
            let want = 2.0f64.sqrt() * (PI * x).sin();
            assert!(
                (ef.eval(0, x) - want).abs() < 1e-9,
                "psi({x}) = {}, want {want}",
                ef.eval(0, x)
            );
        }
        let r = vertex_residuals(&g, ef);
        assert!(r.dirichlet < 1e-10);
    }

    #[test]
    fn star_ground_state_is_cosine_with_computed_normalization() {
        let g = star3_pi();
        let ef = eigenfunction(&g, 0.25, 0).unwrap();
        // Edgewise closed-form normalization: 3 c² ∫_0^pi cos²(x/2) dx = 1.
        let c = (2.0 / (3.0 * PI)).sqrt();
        for edge in 0..3 {
            assert!((ef.amplitude(edge) - c).abs() < 1e-9);
            assert!((ef.eval(edge, 0.0) - c).abs() < 1e-9);
            for x in [0.5, 1.5, 3.0] {
                assert!((ef.eval(edge, x) - c * (x / 2.0).cos()).abs() < 1e-9);
            }
        }
        let r = vertex_residuals(&g, &ef);
        assert!(r.continuity < 1e-10 && r.flux < 1e-8 && r.dirichlet < 1e-10);
    }

    #[test]
    fn degenerate_pair_is_l2_orthonormal() {
        let g = star3_pi();
        let efs = eigenfunctions(&g, 1.0).unwrap();
        assert_eq!(efs.len(), 2);
        let asm = split_loops(&g);
        let coeffs = |ef: &Eigenfunction| -> Vec<(f64, f64)> {
            ef.waves.iter().map(|w| (w.a, w.b)).collect()
        };
        let ip = l2_inner(&asm, 1.0, &coeffs(&efs[0]), &coeffs(&efs[1]));
        let n0 = l2_inner(&asm, 1.0, &coeffs(&efs[0]), &coeffs(&efs[0]));
        assert!(ip.abs() < 1e-9, "inner product {ip}");
        assert!((n0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wrong_lambda_reports_residual() {
        let g = dd_interval(1.0);
        match eigenfunctions(&g, 5.0) {
            Err(SpectralError::NotAnEigenvalue { sigma_min, .. }) => {
                assert!(sigma_min > 1e-6);
            }
            other => panic!("expected residual error, got {other:?}"),
        }
    }

    #[test]
    fn interval_nodal_count_is_index() {
        let g = dd_interval(1.0);
        for k in 1..=5usize {
            let ef = eigenfunction(&g, (k as f64 * PI).powi(2), 0).unwrap();
            assert_eq!(nodal_count(&g, &ef).unwrap(), k);
        }
    }

    #[test]
    fn star_degenerate_mode_is_non_generic() {
        let g = star3_pi();
        let ef = eigenfunction(&g, 1.0, 0).unwrap();
        assert!(matches!(
            nodal_count(&g, &ef),
            Err(SpectralError::NonGeneric)
        ));
    }

    #[test]
    fn constant_mode_has_one_domain() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: 1.0,
            leaf: VertexCondition::kirchhoff(),
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let ef = eigenfunction(&g, 0.0, 0).unwrap();
        assert_eq!(nodal_count(&g, &ef).unwrap(), 1);
    }

    #[test]
    fn negative_strength_is_rejected() {
        let g = MetricGraph::new(
            vec![VertexCondition::Dirichlet, VertexCondition::Delta(-1.0)],
            vec![(0, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            compute_spectrum(&g, 1, &SolveOpts::default()),
            Err(SpectralError::NegativeStrength { .. })
        ));
    }

    #[test]
    fn delta_leaf_interval_matches_transcendental_root() {
        // Interval with Dirichlet at 0 and delta strength 1 at the other end:
        // the first frequency solves k cot(k) = -1.
        let g = MetricGraph::new(
            vec![VertexCondition::Dirichlet, VertexCondition::Delta(1.0)],
            vec![(0, 1, 1.0)],
        )
        .unwrap();
        let s = compute_spectrum(&g, 1, &SolveOpts::default()).unwrap();
        let k = s.frequency(1);
        assert!((k * k.cos() + 1.0 * k.sin()).abs() < 1e-9);
        assert!(k > PI / 2.0 && k < PI);
    }
}
