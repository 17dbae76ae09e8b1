//! Eigenvalue derivatives in edge lengths and ratio optimization over the
//! length simplex.
//!
//! For a simple eigenvalue with L²-normalized eigenfunction, the derivative
//! with respect to one edge length is `-psi'(x)² - lambda psi(x)²`, constant
//! along the edge; in wave coefficients this collapses to
//! `-lambda (A² + B²)`. Ratios of eigenvalues are scale invariant, so their
//! optimization runs on the simplex `{sum of lengths = 1, lengths >= 0}` by
//! projected gradient ascent/descent with an Armijo line search. When an edge
//! length falls under a floor the edge is contracted (Dirichlet absorbing,
//! strengths adding) and the run restarts on the smaller topology: exactly
//! the degeneration mechanism by which ratio maximizers escape to the
//! boundary.

use crate::graph::{self, contract_edge, contract_loop, GraphError, MetricGraph, Topology};
use crate::spectral::{
    compute_spectrum, eigenfunction, Eigenfunction, SolveOpts, SpectralError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("eigenvalue #{index} has multiplicity {multiplicity}; the length derivative requires a simple eigenvalue")]
    NotSimple { index: usize, multiplicity: usize },
    #[error("derivative not constant along edge {edge}: deviation {deviation:.3e}")]
    NotConstantAlongEdge { edge: usize, deviation: f64 },
    #[error("eigenvalue stayed degenerate after {0} jitter retries")]
    PersistentDegeneracy(u32),
    #[error("vertex {0} is not a Dirichlet leaf")]
    BadLeaf(usize),
    #[error("diagnostics require a tree")]
    NotATree,
    #[error("edge index {0} out of range")]
    NoSuchEdge(usize),
    #[error("ratio indices must satisfy k != j, k, j >= 1")]
    BadIndices,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn simple_lambda(
    g: &MetricGraph,
    index: usize,
    opts: &SolveOpts,
) -> Result<(f64, Eigenfunction), PerturbError> {
    let s = compute_spectrum(g, index, opts)?;
    let mult = s.multiplicity_at(index);
    if mult != 1 {
        return Err(PerturbError::NotSimple {
            index,
            multiplicity: mult,
        });
    }
    let lambda = s.lambda(index);
    let ef = eigenfunction(g, lambda, 0)?;
    Ok((lambda, ef))
}

fn derivative_from_wave(ef: &Eigenfunction, edge: usize) -> Result<f64, PerturbError> {
    let wave = ef
        .waves
        .iter()
        .find(|w| w.edge == edge)
        .ok_or(PerturbError::NoSuchEdge(edge))?;
    let lambda = ef.lambda;
    let value = -lambda * (wave.a * wave.a + wave.b * wave.b);
    // The combination -psi'² - lambda psi² must come out constant along the
    // edge; sample three interior points of every segment as a self-check.
    let k = ef.frequency();
    let mut deviation = 0.0f64;
    for w in ef.waves.iter().filter(|w| w.edge == edge) {
        for frac in [0.25, 0.5, 0.75] {
            let x = frac * w.length;
            let psi = w.a * (k * x).cos() + w.b * (k * x).sin();
            let dpsi = k * (-w.a * (k * x).sin() + w.b * (k * x).cos());
            deviation = deviation.max((-dpsi * dpsi - lambda * psi * psi - value).abs());
        }
    }
    if deviation > 1e-9 * (1.0 + value.abs()) {
        return Err(PerturbError::NotConstantAlongEdge { edge, deviation });
    }
    Ok(value)
}

/// Derivative of the `k_index`-th eigenvalue with respect to the length of
/// one edge. The eigenvalue must be simple.
pub fn hadamard_derivative(
    g: &MetricGraph,
    k_index: usize,
    edge: usize,
) -> Result<f64, PerturbError> {
    if edge >= g.num_edges() {
        return Err(PerturbError::NoSuchEdge(edge));
    }
    let (_, ef) = simple_lambda(g, k_index, &SolveOpts::default())?;
    derivative_from_wave(&ef, edge)
}

/// Gradient of `lambda_k / lambda_j` over the edge lengths, with the per-edge
/// mismatch of relative derivatives (which vanishes at interior critical
/// points of the ratio).
#[derive(Debug, Clone, Serialize)]
pub struct RatioGradient {
    pub ratio: f64,
    pub gradient: Vec<f64>,
    pub balancing_residual: Vec<f64>,
    pub balancing_residual_norm: f64,
    /// Per-edge wave amplitudes of the numerator eigenfunction.
    pub amplitudes_num: Vec<f64>,
    /// Per-edge wave amplitudes of the denominator eigenfunction.
    pub amplitudes_den: Vec<f64>,
}

pub fn ratio_gradient(g: &MetricGraph, k: usize, j: usize) -> Result<RatioGradient, PerturbError> {
    if k == j || k == 0 || j == 0 {
        return Err(PerturbError::BadIndices);
    }
    let opts = SolveOpts::default();
    let count = k.max(j);
    let s = compute_spectrum(g, count, &opts)?;
    for idx in [k, j] {
        let mult = s.multiplicity_at(idx);
        if mult != 1 {
            return Err(PerturbError::NotSimple {
                index: idx,
                multiplicity: mult,
            });
        }
    }
    let (lk, lj) = (s.lambda(k), s.lambda(j));
    let efk = eigenfunction(g, lk, 0)?;
    let efj = eigenfunction(g, lj, 0)?;
    gradient_from_pair(g, lk, &efk, lj, &efj)
}

fn gradient_from_pair(
    g: &MetricGraph,
    lk: f64,
    efk: &Eigenfunction,
    lj: f64,
    efj: &Eigenfunction,
) -> Result<RatioGradient, PerturbError> {
    let m = g.num_edges();
    let mut gradient = Vec::with_capacity(m);
    let mut residual = Vec::with_capacity(m);
    let mut norm = 0.0f64;
    for e in 0..m {
        let dk = derivative_from_wave(efk, e)?;
        let dj = derivative_from_wave(efj, e)?;
        gradient.push((lj * dk - lk * dj) / (lj * lj));
        let r = dk / lk - dj / lj;
        residual.push(r);
        norm = norm.max(r.abs());
    }
    Ok(RatioGradient {
        ratio: lk / lj,
        gradient,
        balancing_residual: residual,
        balancing_residual_norm: norm,
        amplitudes_num: (0..m).map(|e| efk.amplitude(e)).collect(),
        amplitudes_den: (0..m).map(|e| efj.amplitude(e)).collect(),
    })
}

/// Ratio objectives: a pair of eigenvalue indices of one operator, or the
/// first eigenvalue against the first eigenvalue after switching a single
/// Dirichlet leaf to a Neumann (Kirchhoff) one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RatioObjective {
    Eigenvalues { k: usize, j: usize },
    VertexSwap { leaf: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OptimizeMode {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOpts {
    /// Edge-length floor, relative to total length; below it the edge is
    /// contracted. Below solver resolution anyway.
    pub floor_rel: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Initial step as a fraction of the simplex diameter.
    pub init_step: f64,
    /// Stationarity: projected gradient norm below this times the ratio.
    pub grad_tol_rel: f64,
    pub max_iters: usize,
    /// Relative length jitter applied when an eigenvalue on the path is
    /// degenerate (the derivative formula needs simple eigenvalues).
    pub jitter_rel: f64,
    pub max_jitters: u32,
    pub seed: u64,
}

impl Default for OptimizeOpts {
    fn default() -> Self {
        OptimizeOpts {
            floor_rel: 1e-6,
            armijo_c: 1e-4,
            init_step: 0.1,
            grad_tol_rel: 1e-8,
            max_iters: 400,
            jitter_rel: 1e-9,
            max_jitters: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeIterate {
    pub lengths: Vec<f64>,
    pub ratio: f64,
    pub gradient: Vec<f64>,
    pub step: f64,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeTrace {
    pub iterates: Vec<OptimizeIterate>,
    pub final_lengths: Vec<f64>,
    pub final_ratio: f64,
    pub final_edges: usize,
    pub restarts: usize,
    pub converged: bool,
    #[serde(skip)]
    pub final_graph: Option<MetricGraph>,
}

/// Euclidean projection onto the standard simplex `{x >= 0, sum x = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

struct Objective {
    kind: RatioObjective,
}

impl Objective {
    /// Ratio value on a concrete graph (with a possibly remapped swap leaf).
    fn value(
        &self,
        g: &MetricGraph,
        leaf: Option<usize>,
        opts: &SolveOpts,
    ) -> Result<f64, PerturbError> {
        match self.kind {
            RatioObjective::Eigenvalues { k, j } => {
                let s = compute_spectrum(g, k.max(j), opts)?;
                Ok(s.lambda(k) / s.lambda(j))
            }
            RatioObjective::VertexSwap { .. } => {
                let leaf = leaf.expect("swap objective carries a leaf");
                let tau_graph = g.with_condition(leaf, graph::VertexCondition::kirchhoff())?;
                let num = compute_spectrum(g, 1, opts)?.lambda(1);
                let den = compute_spectrum(&tau_graph, 1, opts)?.lambda(1);
                Ok(num / den)
            }
        }
    }

    fn gradient(
        &self,
        g: &MetricGraph,
        leaf: Option<usize>,
        opts: &SolveOpts,
    ) -> Result<RatioGradient, PerturbError> {
        match self.kind {
            RatioObjective::Eigenvalues { k, j } => {
                let count = k.max(j);
                let s = compute_spectrum(g, count, opts)?;
                for idx in [k, j] {
                    let mult = s.multiplicity_at(idx);
                    if mult != 1 {
                        return Err(PerturbError::NotSimple {
                            index: idx,
                            multiplicity: mult,
                        });
                    }
                }
                let (lk, lj) = (s.lambda(k), s.lambda(j));
                let efk = eigenfunction(g, lk, 0)?;
                let efj = eigenfunction(g, lj, 0)?;
                gradient_from_pair(g, lk, &efk, lj, &efj)
            }
            RatioObjective::VertexSwap { .. } => {
                let leaf = leaf.expect("swap objective carries a leaf");
                let tau_graph = g.with_condition(leaf, graph::VertexCondition::kirchhoff())?;
                let (lk, efk) = simple_lambda(g, 1, opts)?;
                let (lj, efj) = simple_lambda(&tau_graph, 1, opts)?;
                gradient_from_pair(g, lk, &efk, lj, &efj)
            }
        }
    }
}

/// Contracts the marked edges, tracking the swap leaf through the merges.
/// Returns the surviving graph, the surviving lengths (renormalized by the
/// caller), the remapped leaf and the list of contracted source edges.
fn contract_marked(
    template: &MetricGraph,
    lengths: &[f64],
    marked: &[bool],
    leaf: Option<usize>,
) -> Result<(MetricGraph, Vec<f64>, Option<usize>, Vec<usize>), PerturbError> {
    // Placeholder lengths keep the graph valid while the doomed edges are
    // contracted away combinatorially; surviving lengths are untouched.
    let placeholder: Vec<f64> = lengths
        .iter()
        .zip(marked)
        .map(|(&l, &m)| if m { 1.0 } else { l })
        .collect();
    let mut current = template.with_lengths(&placeholder)?;
    let mut live: Vec<f64> = lengths.to_vec();
    let mut doomed: Vec<bool> = marked.to_vec();
    let mut current_ids: Vec<usize> = (0..lengths.len()).collect();
    let mut leaf = leaf;
    let mut contracted = Vec::new();
    loop {
        let Some(pos) = doomed.iter().position(|&d| d) else {
            break;
        };
        if current.num_edges() == 1 {
            break;
        }
        contracted.push(current_ids[pos]);
        let is_loop = current.edges()[pos].is_loop();
        let c = if is_loop {
            contract_loop(&current, pos)?
        } else {
            contract_edge(&current, pos)?
        };
        if let Some(v) = leaf {
            leaf = c.vertex_map[v];
        }
        current = c.graph;
        live.remove(pos);
        doomed.remove(pos);
        current_ids.remove(pos);
    }
    Ok((current, live, leaf, contracted))
}

fn shrink_below_floor(
    template: &MetricGraph,
    lengths: &[f64],
    floor: f64,
    leaf: Option<usize>,
) -> Result<(MetricGraph, Vec<f64>, Option<usize>, Vec<usize>), PerturbError> {
    let marked: Vec<bool> = lengths.iter().map(|&l| l < floor).collect();
    contract_marked(template, lengths, &marked, leaf)
}

/// At a stationary point, edges carrying no mass of either eigenfunction are
/// spectrally dead: the ratio is exactly constant as they shrink to zero, so
/// degeneration continues through the flat directions. Contracts them if the
/// ratio indeed survives unchanged (checked numerically), otherwise leaves
/// the point alone.
fn try_contract_dead_edges(
    template: &MetricGraph,
    lengths: &[f64],
    leaf: Option<usize>,
    grad: &RatioGradient,
    objective: &Objective,
    solve: &SolveOpts,
    ratio: f64,
) -> Result<Option<(MetricGraph, Vec<f64>, Option<usize>, Vec<usize>)>, PerturbError> {
    let max_amp = grad
        .amplitudes_num
        .iter()
        .chain(&grad.amplitudes_den)
        .fold(0.0f64, |a, &b| a.max(b));
    let marked: Vec<bool> = grad
        .amplitudes_num
        .iter()
        .zip(&grad.amplitudes_den)
        .map(|(&a, &b)| a < 1e-6 * max_amp && b < 1e-6 * max_amp)
        .collect();
    let n_dead = marked.iter().filter(|&&m| m).count();
    if n_dead == 0 || n_dead == marked.len() {
        return Ok(None);
    }
    let (g2, live, leaf2, ids) = contract_marked(template, lengths, &marked, leaf)?;
    if g2.num_edges() == template.num_edges() {
        return Ok(None);
    }
    let val = objective.value(&g2, leaf2, solve)?;
    if (val - ratio).abs() <= 1e-9 * ratio.abs().max(1.0) {
        Ok(Some((g2, live, leaf2, ids)))
    } else {
        Ok(None)
    }
}

fn jitter_lengths(lengths: &[f64], rel: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    lengths
        .iter()
        .map(|&l| l * (1.0 + rel * (rng.gen::<f64>() * 2.0 - 1.0)))
        .collect()
}

/// Projected-gradient optimization of an eigenvalue ratio over the edge-length
/// simplex at fixed topology, restarting on the contracted topology whenever
/// an edge degenerates. Returns with `converged = false` when the iteration
/// budget runs out.
pub fn optimize_ratio(
    topology: &Topology,
    lengths0: &[f64],
    mode: OptimizeMode,
    objective: RatioObjective,
    opts: &OptimizeOpts,
) -> Result<OptimizeTrace, PerturbError> {
    assert_eq!(lengths0.len(), topology.num_edges());
    if let RatioObjective::Eigenvalues { k, j } = objective {
        if k == j || k == 0 || j == 0 {
            return Err(PerturbError::BadIndices);
        }
    }
    let solve = SolveOpts::default();
    let objective = Objective { kind: objective };
    let direction = match mode {
        OptimizeMode::Maximize => 1.0,
        OptimizeMode::Minimize => -1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let normalize = |v: &[f64]| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|&x| x / s).collect()
    };

    let mut template = topology.with_lengths(&normalize(lengths0))?;
    let mut lengths = normalize(lengths0);
    let mut leaf = match objective.kind {
        RatioObjective::VertexSwap { leaf } => {
            if !(template.is_leaf(leaf) && template.condition(leaf).is_dirichlet()) {
                return Err(PerturbError::BadLeaf(leaf));
            }
            Some(leaf)
        }
        _ => None,
    };

    let mut trace = OptimizeTrace {
        iterates: Vec::new(),
        final_lengths: Vec::new(),
        final_ratio: f64::NAN,
        final_edges: 0,
        restarts: 0,
        converged: false,
    final_graph: None,
    };

    'outer: loop {
        if template.num_edges() == 1 {
            let g = template.with_lengths(&lengths)?;
            trace.final_ratio = objective.value(&g, leaf, &solve)?;
            trace.converged = true;
            trace.final_lengths = lengths.clone();
            trace.final_edges = 1;
            trace.final_graph = Some(g);
            return Ok(trace);
        }
        let mut jitters = 0u32;
        let mut iter = 0usize;
        while iter < opts.max_iters {
            iter += 1;
            let g = template.with_lengths(&lengths)?;
            let grad = match objective.gradient(&g, leaf, &solve) {
                Ok(r) => r,
                Err(PerturbError::NotSimple { .. }) => {
                    jitters += 1;
                    if jitters > opts.max_jitters {
                        return Err(PerturbError::PersistentDegeneracy(jitters - 1));
                    }
                    lengths = normalize(&jitter_lengths(&lengths, opts.jitter_rel, &mut rng));
                    trace.iterates.push(OptimizeIterate {
                        lengths: lengths.clone(),
                        ratio: f64::NAN,
                        gradient: vec![],
                        step: 0.0,
                        events: vec!["jitter: degenerate eigenvalue".into()],
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let ratio = grad.ratio;
            let mean = grad.gradient.iter().sum::<f64>() / grad.gradient.len() as f64;
            let gproj: Vec<f64> = grad.gradient.iter().map(|&x| x - mean).collect();
            let gnorm = gproj.iter().map(|x| x * x).sum::<f64>().sqrt();

            let mut events = Vec::new();
            if gnorm <= opts.grad_tol_rel * ratio.abs().max(f64::MIN_POSITIVE) {
                if let Some((g2, live, leaf2, ids)) =
                    try_contract_dead_edges(&template, &lengths, leaf, &grad, &objective, &solve, ratio)?
                {
                    let mut events: Vec<String> = ids
                        .iter()
                        .map(|e| format!("contracted spectrally dead edge {e}"))
                        .collect();
                    events.push(format!("restart on {} edges", g2.num_edges()));
                    trace.iterates.push(OptimizeIterate {
                        lengths: lengths.clone(),
                        ratio,
                        gradient: grad.gradient.clone(),
                        step: 0.0,
                        events,
                    });
                    template = g2;
                    lengths = normalize(&live);
                    leaf = leaf2;
                    trace.restarts += 1;
                    continue 'outer;
                }
                trace.iterates.push(OptimizeIterate {
                    lengths: lengths.clone(),
                    ratio,
                    gradient: grad.gradient.clone(),
                    step: 0.0,
                    events: vec!["stationary: projected gradient below tolerance".into()],
                });
                break 'outer;
            }

            let mut t = opts.init_step * std::f64::consts::SQRT_2 / gnorm;
            let mut accepted: Option<(Vec<f64>, f64)> = None;
            let mut used_step = 0.0;
            while t >= 1e-14 {
                let trial: Vec<f64> = lengths
                    .iter()
                    .zip(&gproj)
                    .map(|(&l, &d)| l + direction * t * d)
                    .collect();
                let candidate = project_simplex(&trial);
                let (cg, _, cleaf, _) =
                    shrink_below_floor(&template, &candidate, opts.floor_rel, leaf)?;
                let val = objective.value(&cg, cleaf, &solve)?;
                if direction * (val - ratio) >= opts.armijo_c * t * gnorm * gnorm {
                    used_step = t;
                    accepted = Some((candidate, val));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, val)) = accepted else {
                if let Some((g2, live, leaf2, ids)) =
                    try_contract_dead_edges(&template, &lengths, leaf, &grad, &objective, &solve, ratio)?
                {
                    let mut events: Vec<String> = ids
                        .iter()
                        .map(|e| format!("contracted spectrally dead edge {e}"))
                        .collect();
                    events.push(format!("restart on {} edges", g2.num_edges()));
                    trace.iterates.push(OptimizeIterate {
                        lengths: lengths.clone(),
                        ratio,
                        gradient: grad.gradient.clone(),
                        step: 0.0,
                        events,
                    });
                    template = g2;
                    lengths = normalize(&live);
                    leaf = leaf2;
                    trace.restarts += 1;
                    continue 'outer;
                }
                trace.iterates.push(OptimizeIterate {
                    lengths: lengths.clone(),
                    ratio,
                    gradient: grad.gradient.clone(),
                    step: 0.0,
                    events: vec!["stationary: line search found no improvement".into()],
                });
                break 'outer;
            };
            lengths = next;

            if lengths.iter().any(|&l| l < opts.floor_rel) {
                let (graph2, live, leaf2, contracted) =
                    shrink_below_floor(&template, &lengths, opts.floor_rel, leaf)?;
                for e in &contracted {
                    events.push(format!("contracted edge {e}"));
                }
                events.push(format!("restart on {} edges", graph2.num_edges()));
                trace.iterates.push(OptimizeIterate {
                    lengths: lengths.clone(),
                    ratio: val,
                    gradient: grad.gradient.clone(),
                    step: used_step,
                    events,
                });
                template = graph2;
                lengths = normalize(&live);
                leaf = leaf2;
                trace.restarts += 1;
                continue 'outer;
            }

            trace.iterates.push(OptimizeIterate {
                lengths: lengths.clone(),
                ratio: val,
                gradient: grad.gradient.clone(),
                step: used_step,
                events,
            });
        }
        if iter >= opts.max_iters {
            // Iteration budget exhausted; report the best point reached
            // without claiming convergence.
            let g = template.with_lengths(&lengths)?;
            trace.final_ratio = objective.value(&g, leaf, &solve)?;
            trace.final_lengths = lengths.clone();
            trace.final_edges = template.num_edges();
            trace.final_graph = Some(g);
            trace.converged = false;
            return Ok(trace);
        }
    }

    let g = template.with_lengths(&lengths)?;
    trace.final_ratio = objective.value(&g, leaf, &solve)?;
    trace.final_lengths = lengths.clone();
    trace.final_edges = template.num_edges();
    trace.final_graph = Some(g);
    trace.converged = true;
    Ok(trace)
}

/// Per-pendant-star diagnostics at a candidate critical point of
/// `lambda_1 / tau_1`.
#[derive(Debug, Clone, Serialize)]
pub struct PendantStarDiag {
    pub center: usize,
    pub leaf_edges: Vec<usize>,
    pub leaf_lengths: Vec<f64>,
    pub mean_length: f64,
    pub length_spread: f64,
    /// |k_D + k_N - pi / mean leaf length|.
    pub freq_sum_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    pub lambda_1: f64,
    pub tau_1: f64,
    pub k_d: f64,
    pub k_n: f64,
    /// Wave amplitude per edge of the lambda_1 eigenfunction.
    pub amplitudes_lambda: Vec<f64>,
    /// Wave amplitude per edge of the tau_1 eigenfunction.
    pub amplitudes_tau: Vec<f64>,
    /// Per-edge |c_D - c_N|.
    pub amplitude_residuals: Vec<f64>,
    /// Max per-edge mismatch of relative length-derivatives
    /// |c_D² - c_N²|; zero exactly at interior critical points of the ratio.
    pub balancing_residual: f64,
    pub balancing_holds: bool,
    pub pendant_stars: Vec<PendantStarDiag>,
}

/// Evaluates the equal-amplitude and equal-length relations that interior
/// critical points of `lambda_1 / tau_1` must satisfy on trees. Residuals are
/// reported, not asserted: generic inputs are not critical points.
pub fn critical_point_diagnostics(
    g: &MetricGraph,
    tau_leaf: usize,
    tol: f64,
) -> Result<CriticalPointReport, PerturbError> {
    if !g.is_tree() {
        return Err(PerturbError::NotATree);
    }
    if !(g.is_leaf(tau_leaf) && g.condition(tau_leaf).is_dirichlet()) {
        return Err(PerturbError::BadLeaf(tau_leaf));
    }
    let opts = SolveOpts::default();
    let tau_graph = g.with_condition(tau_leaf, graph::VertexCondition::kirchhoff())?;
    let (l1, ef_d) = simple_lambda(g, 1, &opts)?;
    let (t1, ef_n) = simple_lambda(&tau_graph, 1, &opts)?;
    let (k_d, k_n) = (l1.sqrt(), t1.sqrt());

    let m = g.num_edges();
    let amplitudes_lambda: Vec<f64> = (0..m).map(|e| ef_d.amplitude(e)).collect();
    let amplitudes_tau: Vec<f64> = (0..m).map(|e| ef_n.amplitude(e)).collect();
    let amplitude_residuals: Vec<f64> = amplitudes_lambda
        .iter()
        .zip(&amplitudes_tau)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let balancing_residual = amplitudes_lambda
        .iter()
        .zip(&amplitudes_tau)
        .map(|(a, b)| (a * a - b * b).abs())
        .fold(0.0f64, f64::max);

    // Pendant stars: a non-leaf vertex with >= 2 Dirichlet leaf edges, none
    // of which is the swapped leaf.
    let mut pendant_stars = Vec::new();
    for v in g.vertices() {
        if g.is_leaf(v.id) {
            continue;
        }
        let mut leaf_edges = Vec::new();
        let mut leaf_lengths = Vec::new();
        for e in g.edges() {
            let other = if e.from == v.id {
                e.to
            } else if e.to == v.id {
                e.from
            } else {
                continue;
            };
            if other != tau_leaf && g.is_leaf(other) && g.condition(other).is_dirichlet() {
                leaf_edges.push(e.id);
                leaf_lengths.push(e.length);
            }
        }
        if leaf_edges.len() < 2 {
            continue;
        }
        let mean = leaf_lengths.iter().sum::<f64>() / leaf_lengths.len() as f64;
        let spread = leaf_lengths
            .iter()
            .map(|l| (l - mean).abs())
            .fold(0.0f64, f64::max);
        pendant_stars.push(PendantStarDiag {
            center: v.id,
            leaf_edges,
            leaf_lengths,
            mean_length: mean,
            length_spread: spread,
            freq_sum_residual: (k_d + k_n - std::f64::consts::PI / mean).abs(),
        });
    }

    Ok(CriticalPointReport {
        lambda_1: l1,
        tau_1: t1,
        k_d,
        k_n,
        amplitudes_lambda,
        amplitudes_tau,
        amplitude_residuals,
        balancing_residual,
        balancing_holds: balancing_residual < tol,
        pendant_stars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_family, FamilySpec, VertexCondition};
    use std::f64::consts::PI;

    fn dd_interval() -> MetricGraph {
        make_family(&FamilySpec::Interval {
            length: 1.0,
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
    fn interval_derivative_is_minus_two_pi_squared() {
        // lambda_1(l) = pi²/l², so d lambda/d l at l = 1 is -2 pi².
        let d = hadamard_derivative(&dd_interval(), 1, 0).unwrap();
        assert!((d + 2.0 * PI * PI).abs() < 1e-8, "derivative {d}");
    }

    #[test]
    fn star_ground_state_derivative_from_symmetry() {
        // Scale invariance forces sum of l_e d lambda/d l_e = -2 lambda; with
        // three equal edges each derivative is -2(1/4)/(3 pi) = -1/(6 pi).
        let g = star3_pi();
        for edge in 0..3 {
            let d = hadamard_derivative(&g, 1, edge).unwrap();
            assert!(
                (d + 1.0 / (6.0 * PI)).abs() < 1e-9,
                "edge {edge}: derivative {d}"
            );
        }
    }

    #[test]
    fn degenerate_eigenvalue_is_rejected() {
        let g = star3_pi();
        assert!(matches!(
            hadamard_derivative(&g, 2, 0),
            Err(PerturbError::NotSimple { .. })
        ));
    }

    #[test]
    fn interval_ratio_gradient_vanishes() {
        let rg = ratio_gradient(&dd_interval(), 2, 1).unwrap();
        assert!((rg.ratio - 4.0).abs() < 1e-9);
        // One edge: scale invariance makes the single component zero.
        assert!(rg.gradient[0].abs() < 1e-8, "gradient {:?}", rg.gradient);
        assert!(rg.balancing_residual_norm < 1e-8);
    }

    #[test]
    fn star_fourth_to_first_gradient_is_symmetric() {
        let g = star3_pi();
        let rg = ratio_gradient(&g, 4, 1).unwrap();
        for w in rg.gradient.windows(2) {
            assert!(
                (w[0] - w[1]).abs() < 1e-8,
                "symmetry broken: {:?}",
                rg.gradient
            );
        }
    }

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = project_simplex(&[1.5, -0.7, 0.1]);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(q.iter().all(|&x| x >= 0.0));
        assert_eq!(q[1], 0.0);
    }

    #[test]
    fn single_edge_ratio_objective_is_immediately_stationary() {
        let topo = Topology::of(&dd_interval());
        let trace = optimize_ratio(
            &topo,
            &[1.0],
            OptimizeMode::Maximize,
            RatioObjective::Eigenvalues { k: 2, j: 1 },
            &OptimizeOpts::default(),
        )
        .unwrap();
        assert!(trace.converged);
        assert_eq!(trace.final_edges, 1);
        assert!((trace.final_ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn vc_ratio_maximization_degenerates_to_interval() {
        let star = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let topo = Topology::of(&star);
        let trace = optimize_ratio(
            &topo,
            &[0.5, 0.3, 0.2],
            OptimizeMode::Maximize,
            RatioObjective::VertexSwap { leaf: 1 },
            &OptimizeOpts::default(),
        )
        .unwrap();
        assert!(trace.converged, "did not converge");
        assert_eq!(trace.final_edges, 1, "should contract to a single edge");
        assert!(
            (trace.final_ratio - 4.0).abs() < 1e-3,
            "final ratio {}",
            trace.final_ratio
        );
        assert!(trace.restarts >= 1);
    }

    #[test]
    fn trace_is_monotone_for_maximization() {
        let star = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let trace = optimize_ratio(
            &Topology::of(&star),
            &[0.45, 0.35, 0.2],
            OptimizeMode::Maximize,
            RatioObjective::VertexSwap { leaf: 1 },
            &OptimizeOpts::default(),
        )
        .unwrap();
        let ratios: Vec<f64> = trace
            .iterates
            .iter()
            .map(|it| it.ratio)
            .filter(|r| r.is_finite())
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "ratio decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn interval_diagnostics_report_frequencies() {
        let r = critical_point_diagnostics(&dd_interval(), 0, 1e-6).unwrap();
        assert!((r.k_d - PI).abs() < 1e-9);
        assert!((r.k_n - PI / 2.0).abs() < 1e-9);
        assert!(r.pendant_stars.is_empty());
    }

    #[test]
    fn generic_tree_is_not_balanced() {
        let g = make_family(&FamilySpec::StarWithTail {
            legs: 2,
            leg_length: 0.8,
            tail_length: 1.3,
            tail: VertexCondition::Dirichlet,
        })
        .unwrap();
        // Swap the tail tip (vertex 3).
        let r = critical_point_diagnostics(&g, 3, 1e-6).unwrap();
        assert!(!r.balancing_holds);
        assert!(r.balancing_residual > 1e-3);
        assert_eq!(r.pendant_stars.len(), 1);
    }

    #[test]
    fn non_tree_diagnostics_rejected() {
        let g = make_family(&FamilySpec::BalloonBunch {
            loops: 1,
            loop_length: 0.5,
            tail_length: 1.0,
            tip: VertexCondition::Dirichlet,
        })
        .unwrap();
        assert!(matches!(
            critical_point_diagnostics(&g, 1, 1e-6),
            Err(PerturbError::NotATree)
        ));
    }
}
