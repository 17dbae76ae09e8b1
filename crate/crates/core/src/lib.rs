//! Spectral toolkit for compact metric graphs.
//!
//! A metric graph is a combinatorial graph whose edges carry positive lengths;
//! together with vertex conditions (Dirichlet or delta couplings, strength 0
//! being the standard Kirchhoff condition) it defines a Laplacian with a
//! discrete spectrum. This crate computes that spectrum two independent ways
//! (a secular-matrix scan in the trigonometric edge basis, and a P1 finite
//! element discretization), exposes eigenfunctions and nodal counts, takes
//! derivatives of eigenvalues with respect to edge lengths, optimizes
//! eigenvalue ratios over the edge-length simplex, and checks a catalogue of
//! eigenvalue inequalities (ratio bounds, Weyl-scale lower and upper bounds,
//! interlacing under vertex-condition changes).
//!
//! Modules map onto the main subsystems:
//!
//! - [`graph`]: the metric-graph data model, named families, dummy-vertex
//!   calculus, contraction, JSONable format.
//! - [`spectral`]: secular matrix, eigenvalue scan/refine solver,
//!   eigenfunctions, nodal domain counting.
//! - [`fem`]: independent finite-element oracle (variational upper bounds,
//!   eigenvalue counting, Rayleigh quotients, convergence studies).
//! - [`solver`]: the two eigensolvers behind one trait, selectable by name.
//! - [`closed_form`]: transcendental solvers for Robin interval/star problems
//!   and the interval-vs-star comparison diagnostics.
//! - [`perturb`]: eigenvalue derivatives in edge lengths, ratio gradients,
//!   projected-gradient ratio optimization with edge degeneration.
//! - [`bounds`]: inequality reports, interlacing checks, counterexample
//!   sweeps, ratio-infimum witnesses, random ensembles.

pub mod bounds;
pub mod closed_form;
pub mod fem;
pub mod graph;
pub mod io;
pub mod perturb;
pub mod roots;
pub mod solver;
pub mod spectral;

pub use graph::{
    contract_edge, contract_loop, graph_stats, insert_dummy, make_family, suppress_dummies,
    Edge, FamilySpec, GraphError, GraphStats, MetricGraph, Topology, Vertex, VertexCondition,
};
pub use spectral::{compute_spectrum, secular_matrix, SolveOpts, Spectrum};
