//! Piecewise-linear finite elements on metric graphs.
//!
//! This is the second, independent route to the spectrum: conforming P1
//! elements discretize the quadratic form `∫ f'g' + Σ α_v f(v)g(v)` with
//! Dirichlet nodes eliminated, and the generalized symmetric eigenproblem
//! `K x = λ M x` is solved densely. Conformity gives the one-sided bias
//! `λ_k^FEM ≥ λ_k` that the rest of the crate leans on: FEM counts below a
//! cut certify the secular solver's counts, and Richardson extrapolation of
//! the O(h²) bias cross-validates eigenvalues.

use crate::graph::MetricGraph;
use crate::spectral::Spectrum;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Dense solves get slow past this size and the desk-scale graphs in scope
/// never need it.
pub const MAX_NODES: usize = 3000;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("mesh size {h} leaves edge {edge} (length {length}) with fewer than 2 elements")]
    MeshTooCoarse { h: f64, edge: usize, length: f64 },
    #[error("mesh has {nodes} nodes, above the dense-solve cap {MAX_NODES}")]
    TooManyNodes { nodes: usize },
    #[error("requested {count} eigenvalues but the reduced problem has only {available} degrees of freedom")]
    NotEnoughDof { count: usize, available: usize },
    #[error("mass matrix is not positive definite")]
    MassNotSpd,
    #[error("test function must vanish at Dirichlet node {node}")]
    DirichletViolated { node: usize },
    #[error("test function is zero")]
    ZeroFunction,
    #[error("need at least 3 geometrically decreasing mesh sizes")]
    BadMeshSequence,
}

/// Uniform-per-edge P1 mesh. Node numbering: vertices first (one node per
/// graph vertex, shared across edges), then edge interiors.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// For each edge, the full node chain from `from` to `to`.
    pub edge_nodes: Vec<Vec<usize>>,
    /// Element size per edge.
    pub edge_h: Vec<f64>,
    pub num_nodes: usize,
    pub num_vertices: usize,
}

impl Mesh {
    /// Builds a mesh with `ceil(length/h)` elements per edge; errors if any
    /// edge would get fewer than 2.
    pub fn with_target_h(g: &MetricGraph, h: f64) -> Result<Self, FemError> {
        let divisions: Vec<usize> = g
            .edges()
            .iter()
            .map(|e| (e.length / h).ceil() as usize)
            .collect();
        for (e, &d) in g.edges().iter().zip(&divisions) {
            if d < 2 {
                return Err(FemError::MeshTooCoarse {
                    h,
                    edge: e.id,
                    length: e.length,
                });
            }
        }
        Self::with_divisions(g, &divisions)
    }

    /// Builds a mesh with an explicit element count per edge. Nested
    /// refinements (doubling every count) keep the O(h²) error model exact,
    /// which Richardson extrapolation requires.
    pub fn with_divisions(g: &MetricGraph, divisions: &[usize]) -> Result<Self, FemError> {
        assert_eq!(divisions.len(), g.num_edges());
        let nv = g.num_vertices();
        let mut next = nv;
        let mut edge_nodes = Vec::with_capacity(g.num_edges());
        let mut edge_h = Vec::with_capacity(g.num_edges());
        for (e, &d) in g.edges().iter().zip(divisions) {
            assert!(d >= 2, "every edge needs at least 2 elements");
            let mut chain = Vec::with_capacity(d + 1);
            chain.push(e.from);
            for _ in 0..d - 1 {
                chain.push(next);
                next += 1;
            }
            chain.push(e.to);
            edge_nodes.push(chain);
            edge_h.push(e.length / d as f64);
        }
        if next > MAX_NODES {
            return Err(FemError::TooManyNodes { nodes: next });
        }
        Ok(Mesh {
            edge_nodes,
            edge_h,
            num_nodes: next,
            num_vertices: nv,
        })
    }

    /// Interpolates an edgewise function onto mesh nodes. Vertex node values
    /// are taken from the first incident edge endpoint, so `f` must be
    /// continuous at vertices.
    pub fn interpolate<F: Fn(usize, f64) -> f64>(&self, g: &MetricGraph, f: F) -> Vec<f64> {
        let mut values = vec![f64::NAN; self.num_nodes];
        for (edge, chain) in self.edge_nodes.iter().enumerate() {
            let h = self.edge_h[edge];
            for (i, &node) in chain.iter().enumerate() {
                let x = (i as f64 * h).min(g.edges()[edge].length);
                if values[node].is_nan() {
                    values[node] = f(edge, x);
                }
            }
        }
        values
    }
}

/// Assembled stiffness (including delta vertex strengths) and consistent mass
/// matrices on the full node set, before Dirichlet elimination.
pub fn assemble(g: &MetricGraph, mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mesh.num_nodes;
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (edge, chain) in mesh.edge_nodes.iter().enumerate() {
        let h = mesh.edge_h[edge];
        let (ke, me) = (1.0 / h, h / 6.0);
        for w in chain.windows(2) {
            let (a, b) = (w[0], w[1]);
            k[(a, a)] += ke;
            k[(b, b)] += ke;
            k[(a, b)] -= ke;
            k[(b, a)] -= ke;
            m[(a, a)] += 2.0 * me;
            m[(b, b)] += 2.0 * me;
            m[(a, b)] += me;
            m[(b, a)] += me;
        }
    }
    for v in g.vertices() {
        if let Some(alpha) = v.condition.strength() {
            k[(v.id, v.id)] += alpha;
        }
    }
    (k, m)
}

fn free_nodes(g: &MetricGraph, mesh: &Mesh) -> Vec<usize> {
    (0..mesh.num_nodes)
        .filter(|&i| i >= mesh.num_vertices || !g.condition(i).is_dirichlet())
        .collect()
}

fn restrict(a: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let n = keep.len();
    DMatrix::from_fn(n, n, |i, j| a[(keep[i], keep[j])])
}

/// All eigenvalues (ascending) of the reduced problem, plus eigenvectors
/// scattered back to full node vectors when requested.
fn solve_dense(
    g: &MetricGraph,
    mesh: &Mesh,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<DVector<f64>>>), FemError> {
    let (k, m) = assemble(g, mesh);
    let keep = free_nodes(g, mesh);
    let kr = restrict(&k, &keep);
    let mr = restrict(&m, &keep);
    let chol = mr.clone().cholesky().ok_or(FemError::MassNotSpd)?;
    let l = chol.l();
    // B = L^{-1} K L^{-T}, symmetric with the same eigenvalues.
    let z = l
        .solve_lower_triangular(&kr)
        .ok_or(FemError::MassNotSpd)?;
    let b = l
        .solve_lower_triangular(&z.transpose())
        .ok_or(FemError::MassNotSpd)?;
    let b = 0.5 * (&b + b.transpose());
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = eig
        .eigenvalues
        .iter()
        .fold(1.0f64, |acc, &x| acc.max(x.abs()));
    let values: Vec<f64> = order
        .iter()
        .map(|&i| {
            let lam = eig.eigenvalues[i];
            // Kirchhoff-only graphs have an exact zero mode; snap solver noise.
            if lam.abs() <= 1e-10 * scale.max(1.0) {
                0.0
            } else {
                lam
            }
        })
        .collect();
    let vectors = if want_vectors {
        let lt = l.transpose();
        let mut out = Vec::with_capacity(order.len());
        for &i in &order {
            let y = eig.eigenvectors.column(i).into_owned();
            let x = lt
                .solve_upper_triangular(&y)
                .ok_or(FemError::MassNotSpd)?;
            let mut full = DVector::zeros(mesh.num_nodes);
            for (r, &node) in keep.iter().enumerate() {
                full[node] = x[r];
            }
            out.push(full);
        }
        Some(out)
    } else {
        None
    };
    Ok((values, vectors))
}

/// First `count` eigenvalues on a mesh of target size `h`.
pub fn fem_spectrum(g: &MetricGraph, count: usize, h: f64) -> Result<Spectrum, FemError> {
    let mesh = Mesh::with_target_h(g, h)?;
    fem_spectrum_on_mesh(g, count, &mesh)
}

pub fn fem_spectrum_on_mesh(
    g: &MetricGraph,
    count: usize,
    mesh: &Mesh,
) -> Result<Spectrum, FemError> {
    let (values, _) = solve_dense(g, mesh, false)?;
    if values.len() < count {
        return Err(FemError::NotEnoughDof {
            count,
            available: values.len(),
        });
    }
    Ok(Spectrum::from_flattened(
        &values[..count],
        g.fingerprint(),
        1e-9,
    ))
}

/// First `count` eigenpairs; vectors are node-value functions on the mesh.
pub fn fem_eigenpairs(
    g: &MetricGraph,
    count: usize,
    h: f64,
) -> Result<(Mesh, Vec<f64>, Vec<DVector<f64>>), FemError> {
    let mesh = Mesh::with_target_h(g, h)?;
    let (values, vectors) = solve_dense(g, &mesh, true)?;
    if values.len() < count {
        return Err(FemError::NotEnoughDof {
            count,
            available: values.len(),
        });
    }
    let vectors = vectors.unwrap();
    Ok((
        mesh,
        values[..count].to_vec(),
        vectors[..count].to_vec(),
    ))
}

/// Number of FEM eigenvalues strictly below `cut`. With the upward bias of
/// conforming elements this equals the true count whenever the bias at the
/// cut is smaller than the distance from `cut` to the nearest eigenvalue.
pub fn count_below(g: &MetricGraph, cut: f64, h: f64) -> Result<usize, FemError> {
    let mesh = Mesh::with_target_h(g, h)?;
    let (values, _) = solve_dense(g, &mesh, false)?;
    Ok(values.iter().filter(|&&l| l < cut).count())
}

/// Discrete Rayleigh quotient of a node-value function: `(fᵀKf)/(fᵀMf)`.
/// The function must vanish at Dirichlet vertices and be nonzero.
pub fn rayleigh_quotient(
    g: &MetricGraph,
    mesh: &Mesh,
    values: &[f64],
) -> Result<f64, FemError> {
    assert_eq!(values.len(), mesh.num_nodes);
    for v in g.vertices() {
        if g.condition(v.id).is_dirichlet() && values[v.id] != 0.0 {
            return Err(FemError::DirichletViolated { node: v.id });
        }
    }
    let f = DVector::from_column_slice(values);
    let (k, m) = assemble(g, mesh);
    let denom = f.dot(&(&m * &f));
    if denom <= 0.0 {
        return Err(FemError::ZeroFunction);
    }
    Ok(f.dot(&(&k * &f)) / denom)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub k: usize,
    pub lambda: f64,
    /// Observed order from the previous two refinements; present from the
    /// third mesh on.
    pub order: Option<f64>,
    /// Set when the observed order deviates from 2 by more than 0.3.
    pub flagged: bool,
}

/// Eigenvalue convergence table over a geometrically decreasing sequence of
/// mesh sizes. Meshes are nested (element counts scale with 1/h exactly) so
/// the observed order is meaningful.
pub fn convergence_study(
    g: &MetricGraph,
    count: usize,
    hs: &[f64],
) -> Result<Vec<ConvergenceRow>, FemError> {
    if hs.len() < 3 || !hs.windows(2).all(|w| w[1] < w[0]) {
        return Err(FemError::BadMeshSequence);
    }
    let base: Vec<usize> = g
        .edges()
        .iter()
        .map(|e| ((e.length / hs[0]).ceil() as usize).max(2))
        .collect();
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(hs.len());
    let mut ratios = Vec::with_capacity(hs.len());
    for &h in hs {
        let scale = hs[0] / h;
        let divisions: Vec<usize> = base
            .iter()
            .map(|&d| ((d as f64) * scale).round() as usize)
            .collect();
        let mesh = Mesh::with_divisions(g, &divisions)?;
        let (values, _) = solve_dense(g, &mesh, false)?;
        if values.len() < count {
            return Err(FemError::NotEnoughDof {
                count,
                available: values.len(),
            });
        }
        tables.push(values[..count].to_vec());
        ratios.push(scale);
    }
    let mut rows = Vec::new();
    for (i, &h) in hs.iter().enumerate() {
        for k in 0..count {
            let order = if i >= 2 {
                let d1 = tables[i - 2][k] - tables[i - 1][k];
                let d2 = tables[i - 1][k] - tables[i][k];
                let r = (ratios[i] / ratios[i - 1]).ln();
                if d1.abs() > 0.0 && d2.abs() > 0.0 && d1.signum() == d2.signum() {
                    Some((d1 / d2).ln() / r)
                } else {
                    None
                }
            } else {
                None
            };
            let flagged = matches!(order, Some(p) if (p - 2.0).abs() > 0.3);
            rows.push(ConvergenceRow {
                h,
                k: k + 1,
                lambda: tables[i][k],
                order,
                flagged,
            });
        }
    }
    Ok(rows)
}

/// Richardson extrapolation over the (h, h/2) nested pair; kills the O(h²)
/// term of the conforming-element bias.
pub fn richardson_spectrum(g: &MetricGraph, count: usize, h: f64) -> Result<Vec<f64>, FemError> {
    let divisions: Vec<usize> = g
        .edges()
        .iter()
        .map(|e| ((e.length / h).ceil() as usize).max(2))
        .collect();
    let fine: Vec<usize> = divisions.iter().map(|&d| 2 * d).collect();
    let coarse_mesh = Mesh::with_divisions(g, &divisions)?;
    let fine_mesh = Mesh::with_divisions(g, &fine)?;
    let (coarse, _) = solve_dense(g, &coarse_mesh, false)?;
    let (fine, _) = solve_dense(g, &fine_mesh, false)?;
    if fine.len() < count {
        return Err(FemError::NotEnoughDof {
            count,
            available: fine.len(),
        });
    }
    Ok((0..count)
        .map(|k| (4.0 * fine[k] - coarse[k]) / 3.0)
        .collect())
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

    #[test]
    fn interval_first_eigenvalue_biased_up_within_h2() {
        let s = fem_spectrum(&dd_interval(), 1, 1e-3).unwrap();
        let l1 = s.lambda(1);
        assert!(l1 >= PI * PI);
        assert!(l1 <= PI * PI + 1e-4 * PI.powi(4));
    }

    #[test]
    fn star_first_eigenvalue_from_above() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 3,
            length: PI,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let s = fem_spectrum(&g, 1, 5e-3).unwrap();
        let l1 = s.lambda(1);
        assert!(l1 >= 0.25);
        assert!((l1 - 0.25) < 1e-5, "bias too large: {l1}");
    }

    #[test]
    fn kirchhoff_star_has_exact_zero_mode() {
        let g = make_family(&FamilySpec::EquilateralStar {
            legs: 4,
            length: 1.0,
            leaf: VertexCondition::kirchhoff(),
            center: VertexCondition::kirchhoff(),
        })
        .unwrap();
        let (_, values, vectors) = fem_eigenpairs(&g, 1, 0.05).unwrap();
        assert_eq!(values[0], 0.0);
        let v = &vectors[0];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for x in v.iter() {
            assert!((x - mean).abs() < 1e-8 * mean.abs().max(1e-30));
        }
    }

    #[test]
    fn tent_function_rayleigh_quotient() {
        let g = dd_interval();
        let mesh = Mesh::with_target_h(&g, 0.005).unwrap();
        let tent = mesh.interpolate(&g, |_, x| x.min(1.0 - x));
        let r = rayleigh_quotient(&g, &mesh, &tent).unwrap();
        // The tent interpolant is itself piecewise linear with a node at 1/2,
        // so stiffness and consistent mass integrate it exactly: R = 12.
        assert!((r - 12.0).abs() < 1e-9, "R = {r}");
        assert!(r >= PI * PI);
        let s = fem_spectrum(&g, 1, 0.005).unwrap();
        assert!(r >= s.lambda(1));
    }

    #[test]
    fn fem_eigenvector_reproduces_its_eigenvalue() {
        let g = dd_interval();
        let (mesh, values, vectors) = fem_eigenpairs(&g, 1, 0.01).unwrap();
        let r = rayleigh_quotient(&g, &mesh, vectors[0].as_slice()).unwrap();
        assert!((r - values[0]).abs() < 1e-9 * values[0]);
    }

    #[test]
    fn big_star_test_function_quotient_decays() {
        let mut last = f64::INFINITY;
        for m in [5usize, 10, 20, 40] {
            let g = make_family(&FamilySpec::BigStar {
                tail_length: 1.0,
                short_edges: m,
                epsilon: 0.01,
                tip: VertexCondition::kirchhoff(),
            })
            .unwrap();
            let mesh = Mesh::with_target_h(&g, 0.004).unwrap();
            // 0 at the Dirichlet far end, 1 at the center and on every short
            // edge: the classic mass-on-the-flowers test function.
            let f = mesh.interpolate(&g, |edge, x| if edge == 0 { x } else { 1.0 });
            let r = rayleigh_quotient(&g, &mesh, &f).unwrap();
            assert!(r < last, "quotient should decay with m");
            last = r;
        }
        assert!(last < 1.5);
    }

    #[test]
    fn mesh_too_coarse_is_an_error() {
        // ceil(1/1.5) = 1 element on the unit edge.
        let g = dd_interval();
        assert!(matches!(
            fem_spectrum(&g, 1, 1.5),
            Err(FemError::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn interval_convergence_order_is_two() {
        let rows = convergence_study(&dd_interval(), 3, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        let finest: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.order.is_some()).collect();
        assert_eq!(finest.len(), 3);
        for row in finest {
            let p = row.order.unwrap();
            assert!((p - 2.0).abs() < 0.3, "order {p} for k={}", row.k);
            assert!(!row.flagged);
        }
    }

    #[test]
    fn richardson_hits_exact_interval_values() {
        let vals = richardson_spectrum(&dd_interval(), 3, 0.01).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let exact = ((i + 1) as f64 * PI).powi(2);
            assert!(
                (v - exact).abs() < 1e-7 * exact,
                "k={} got {v}, want {exact}",
                i + 1
            );
        }
    }
}
