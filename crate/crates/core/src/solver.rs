//! The two eigensolvers behind a common trait, registered by name.
//!
//! `secular` is the production path (trigonometric ansatz + singular-value
//! scan); `fem` is the independent variational discretization. Keeping both
//! behind one interface lets the CLI and cross-validation suites select a
//! route at runtime, and keeps the two implementations honest against each
//! other.

use crate::fem;
use crate::graph::MetricGraph;
use crate::spectral::{self, SolveOpts, Spectrum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Secular(#[from] spectral::SpectralError),
    #[error(transparent)]
    Fem(#[from] fem::FemError),
}

pub trait SpectrumSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn spectrum(&self, g: &MetricGraph, count: usize) -> Result<Spectrum, SolverError>;
}

/// Secular-equation solver; exact up to the refinement tolerance.
pub struct SecularSolver {
    pub opts: SolveOpts,
}

impl Default for SecularSolver {
    fn default() -> Self {
        SecularSolver {
            opts: SolveOpts::default(),
        }
    }
}

impl SpectrumSolver for SecularSolver {
    fn name(&self) -> &'static str {
        "secular"
    }

    fn spectrum(&self, g: &MetricGraph, count: usize) -> Result<Spectrum, SolverError> {
        Ok(spectral::compute_spectrum(g, count, &self.opts)?)
    }
}

/// P1 finite-element solver with Richardson extrapolation over a nested mesh
/// pair. Values carry an O(h⁴) residual instead of the raw O(h²) bias.
pub struct FemSolver {
    pub target_h: f64,
    pub richardson: bool,
}

impl Default for FemSolver {
    fn default() -> Self {
        FemSolver {
            target_h: 5e-3,
            richardson: true,
        }
    }
}

impl SpectrumSolver for FemSolver {
    fn name(&self) -> &'static str {
        "fem"
    }

    fn spectrum(&self, g: &MetricGraph, count: usize) -> Result<Spectrum, SolverError> {
        // Never mesh finer than the edges allow.
        let h = self.target_h.min(g.min_edge_length() / 2.01);
        if self.richardson {
            let values = fem::richardson_spectrum(g, count, h)?;
            Ok(Spectrum::from_flattened(&values, g.fingerprint(), 1e-9))
        } else {
            Ok(fem::fem_spectrum(g, count, h)?)
        }
    }
}

pub fn registry() -> Vec<Box<dyn SpectrumSolver>> {
    vec![
        Box::new(SecularSolver::default()),
        Box::new(FemSolver::default()),
    ]
}

pub fn solver_by_name(name: &str) -> Option<Box<dyn SpectrumSolver>> {
    registry().into_iter().find(|s| s.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_family, FamilySpec, VertexCondition};
    use std::f64::consts::PI;

    #[test]
    fn both_routes_agree_on_the_interval() {
        let g = make_family(&FamilySpec::Interval {
            length: 1.0,
            left: VertexCondition::Dirichlet,
            right: VertexCondition::Dirichlet,
        })
        .unwrap();
        for solver in registry() {
            let s = solver.spectrum(&g, 2).unwrap();
            assert!(
                (s.lambda(1) - PI * PI).abs() < 1e-6 * PI * PI,
                "{}: {}",
                solver.name(),
                s.lambda(1)
            );
        }
    }

    #[test]
    fn registry_lookup() {
        assert!(solver_by_name("secular").is_some());
        assert!(solver_by_name("fem").is_some());
        assert!(solver_by_name("cheby").is_none());
    }
}
