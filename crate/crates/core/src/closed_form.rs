//! Transcendental solvers for the Robin interval and one-Robin-leaf star
//! problems, and the interval-versus-star comparison diagnostics built on
//! them.
//!
//! All scalar roots are found by bracketed bisection with a Newton polish;
//! brackets come from the monotonicity intervals of the cotangent, since the
//! secular functions have poles between roots. The arccot branch is fixed to
//! `(0, pi)` everywhere.

use crate::roots::{bisect, newton_polish};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("constraint unsatisfiable for this star: {0}")]
    Infeasible(String),
    #[error("negative Robin strength on the star edge is not supported")]
    NegativeStarStrength,
}

/// Interval with a Dirichlet end and a Robin end of strength `alpha`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RobinIntervalProblem {
    pub length: f64,
    pub alpha: f64,
}

/// Star with `legs >= 2` Dirichlet legs of length `leg_length`, one extra
/// edge of length `robin_length` whose free end carries a Robin condition of
/// strength `alpha`, and a Kirchhoff center.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RobinStarProblem {
    pub legs: usize,
    pub leg_length: f64,
    pub robin_length: f64,
    pub alpha: f64,
}

/// arccot on the branch `(0, pi)`.
pub fn arccot(y: f64) -> f64 {
    1.0f64.atan2(y)
}

fn check_positive(name: &str, v: f64) -> Result<(), ClosedFormError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ClosedFormError::BadInput(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Smallest positive root of `k cos(kL) + alpha sin(kL) = 0`, the first
/// positive eigenfrequency of the Dirichlet-Robin interval.
///
/// For `alpha > -1/L` this is the first eigenfrequency and lies in
/// `(0, pi/L]`. For `alpha <= -1/L` the first eigenvalue is nonpositive (a
/// bound state; see [`robin_interval_lambda1`]) and the smallest positive
/// root, which this function still returns, lies in `(pi/L, 2 pi/L)`.
pub fn robin_interval_k(length: f64, alpha: f64) -> Result<f64, ClosedFormError> {
    check_positive("length", length)?;
    if !alpha.is_finite() {
        return Err(ClosedFormError::BadInput("alpha must be finite".into()));
    }
    let l = length;
    let g = |k: f64| k * (k * l).cos() + alpha * (k * l).sin();
    let dg = |k: f64| (k * l).cos() - k * l * (k * l).sin() + alpha * l * (k * l).cos();
    let root = if 1.0 + alpha * l > 0.0 {
        // g = sin(kL) (k cot(kL) + alpha) changes sign exactly once on (0, pi/L).
        let a = 1e-12 * PI / l;
        let b = PI / l;
        bisect(g, a, b, 0.0)
    } else {
        // First positive root moved into (pi/L, 2 pi/L); bisect the cot form
        // between the poles.
        let t = |k: f64| k * (k * l).cos() / (k * l).sin() + alpha;
        let mut a = PI / l * (1.0 + 1e-6);
        let b = 2.0 * PI / l * (1.0 - 1e-9);
        while t(a) <= 0.0 {
            a = PI / l + (a - PI / l) * 0.25;
            if a - PI / l < f64::EPSILON * PI / l {
                return Err(ClosedFormError::BadInput(
                    "failed to bracket the Robin root".into(),
                ));
            }
        }
        bisect(t, a, b, 0.0)
    };
    Ok(newton_polish(g, dg, root, 0.0, 2.0 * PI / l))
}

/// Dirichlet-Dirichlet variant of the interval problem (`alpha` formally
/// infinite): the first frequency is exactly `pi/L`.
pub fn robin_interval_k_dirichlet(length: f64) -> Result<f64, ClosedFormError> {
    check_positive("length", length)?;
    Ok(PI / length)
}

/// True first eigenvalue of the Dirichlet-Robin interval, including the
/// negative bound state that appears once `alpha < -1/L` (where the
/// eigenfunction is `sinh` and the eigenvalue solves
/// `kappa cosh(kappa L) + alpha sinh(kappa L) = 0`).
pub fn robin_interval_lambda1(length: f64, alpha: f64) -> Result<f64, ClosedFormError> {
    check_positive("length", length)?;
    let l = length;
    let crossing = 1.0 + alpha * l;
    if crossing > 0.0 {
        let k = robin_interval_k(l, alpha)?;
        Ok(k * k)
    } else if crossing == 0.0 {
        Ok(0.0)
    } else {
        let f = |kappa: f64| kappa * (kappa * l).cosh() / (kappa * l).sinh() + alpha;
        let lo = 1e-12 * (-alpha);
        let hi = -alpha + 1.0 / l;
        let kappa = bisect(f, lo, hi, 0.0);
        Ok(-kappa * kappa)
    }
}

/// The unique interval length at which the Dirichlet-Robin problem with
/// strength `alpha` has first eigenfrequency exactly `k`:
/// `L = (pi - arccot(alpha/k)) / k`.
pub fn matched_interval_length(alpha: f64, k: f64) -> Result<f64, ClosedFormError> {
    check_positive("k", k)?;
    if !alpha.is_finite() {
        return Err(ClosedFormError::BadInput("alpha must be finite".into()));
    }
    Ok((PI - arccot(alpha / k)) / k)
}

/// Smallest positive root of the star secular function
/// `n cot(k l) + cot(k r + arccot(alpha/k)) = 0`.
///
/// Supported for `alpha >= 0` (the phase `k r + arccot(alpha/k)` is then
/// strictly increasing in `k`, which pins the bracket between poles). With a
/// single leg the equation collapses to the interval relation, so `legs = 1`
/// is accepted as the degenerate case.
pub fn robin_star_k(
    legs: usize,
    leg_length: f64,
    robin_length: f64,
    alpha: f64,
) -> Result<f64, ClosedFormError> {
    if legs < 1 {
        return Err(ClosedFormError::BadInput("star needs at least one leg".into()));
    }
    check_positive("leg_length", leg_length)?;
    check_positive("robin_length", robin_length)?;
    if !alpha.is_finite() {
        return Err(ClosedFormError::BadInput("alpha must be finite".into()));
    }
    if alpha < 0.0 {
        return Err(ClosedFormError::NegativeStarStrength);
    }
    let (n, l, r) = (legs as f64, leg_length, robin_length);
    let phase = |k: f64| k * r + arccot(alpha / k);
    let s = |k: f64| n * (k * l).cos() / (k * l).sin() + phase(k).cos() / phase(k).sin();

    // First pole of the secular function: either the leg cot pole at pi/l or
    // the phase reaching pi, whichever comes first.
    let pole_leg = PI / l;
    let pole_phase = if phase(1e-12) >= PI {
        1e-12
    } else {
        bisect(|k| phase(k) - PI, 1e-12, PI / r, 0.0)
    };
    let pole = pole_leg.min(pole_phase);

    // S -> +inf at 0+ and -> -inf just left of the pole; shrink the insets
    // until both signs are confirmed.
    let mut a = pole * 1e-6;
    while !(s(a) > 0.0) {
        a *= 0.25;
        if a < pole * 1e-300 {
            return Err(ClosedFormError::BadInput(
                "failed to bracket the star root from the left".into(),
            ));
        }
    }
    let mut b = pole * (1.0 - 1e-9);
    while !(s(b) < 0.0) {
        b = pole - (pole - b) * 0.25;
        if pole - b < pole * f64::EPSILON {
            return Err(ClosedFormError::BadInput(
                "failed to bracket the star root from the right".into(),
            ));
        }
    }
    Ok(bisect(s, a, b, 0.0))
}

/// First frequency of the star with a Dirichlet condition at the free end of
/// the Robin edge (`alpha` formally infinite): smallest positive root of
/// `n cot(k l) + cot(k r) = 0`. This is the supremum of attainable
/// first-eigenfrequencies over real `alpha`.
pub fn star_dirichlet_limit_k(
    legs: usize,
    leg_length: f64,
    robin_length: f64,
) -> Result<f64, ClosedFormError> {
    if legs < 1 {
        return Err(ClosedFormError::BadInput("star needs at least one leg".into()));
    }
    check_positive("leg_length", leg_length)?;
    check_positive("robin_length", robin_length)?;
    let (n, l, r) = (legs as f64, leg_length, robin_length);
    let s = |k: f64| n * (k * l).cos() / (k * l).sin() + (k * r).cos() / (k * r).sin();
    let pole = (PI / l).min(PI / r);
    let mut a = pole * 1e-6;
    while !(s(a) > 0.0) {
        a *= 0.25;
    }
    let mut b = pole * (1.0 - 1e-9);
    while !(s(b) < 0.0) {
        b = pole - (pole - b) * 0.25;
    }
    Ok(bisect(s, a, b, 0.0))
}

/// Strictly positive function appearing in the interval-versus-star length
/// comparison: `f(x) = arccot(n cot(x l))/l - x` on `(pi/(2l), pi/l)`, with
/// the arccot branch in `(0, pi)`. Vanishes at both endpoints and is concave
/// in between.
pub fn appendix_f(x: f64, leg_length: f64, legs: usize) -> Result<f64, ClosedFormError> {
    check_positive("leg_length", leg_length)?;
    if legs < 2 {
        return Err(ClosedFormError::BadInput(
            "comparison function needs at least 2 legs".into(),
        ));
    }
    let l = leg_length;
    if !(x > PI / (2.0 * l) && x < PI / l) {
        return Err(ClosedFormError::BadInput(format!(
            "x = {x} outside the open interval (pi/(2l), pi/l) = ({}, {})",
            PI / (2.0 * l),
            PI / l
        )));
    }
    let n = legs as f64;
    Ok(arccot(n * (x * l).cos() / (x * l).sin()) / l - x)
}

/// Output of the interval-versus-star first-eigenvalue comparison at one
/// admissible operating point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaComparison {
    pub k_d: f64,
    pub k_n: f64,
    pub alpha_d: f64,
    pub alpha_n: f64,
    /// Interval length matched so the interval and star agree at `alpha_d`.
    pub interval_length: f64,
    pub lambda_interval: f64,
    pub lambda_star: f64,
    /// `lambda_star - lambda_interval`; positive on the whole admissible range.
    pub gap: f64,
}

/// Attainable range of star first-frequencies `k_d` for the comparison: the
/// lower end is the symmetric point `pi/(2l)`, the upper end the
/// Dirichlet-limit frequency (capped at `pi/l`).
pub fn admissible_kd_range(
    legs: usize,
    leg_length: f64,
    robin_length: f64,
) -> Result<(f64, f64), ClosedFormError> {
    if legs < 2 {
        return Err(ClosedFormError::BadInput(
            "comparison requires at least 2 Dirichlet legs".into(),
        ));
    }
    let lo = PI / (2.0 * leg_length);
    let hi = star_dirichlet_limit_k(legs, leg_length, robin_length)?.min(PI / leg_length);
    if hi <= lo {
        return Err(ClosedFormError::Infeasible(format!(
            "no admissible frequencies: Dirichlet limit {hi} below pi/(2l) = {lo}"
        )));
    }
    Ok((lo, hi))
}

/// Interval-versus-star comparison parameterized by the target star frequency
/// `k_d` in the admissible range. The matching strengths `alpha_d`, `alpha_n`
/// and the paired frequency `k_n = pi/l - k_d` are solved from the star's
/// continuity and flux relations, the interval length is matched so that the
/// `alpha_d` problems agree, and the comparison gap is evaluated with the
/// true interval ground state (including the bound-state branch for very
/// negative `alpha_n`).
pub fn lemma_comparison_at(
    legs: usize,
    leg_length: f64,
    robin_length: f64,
    k_d: f64,
) -> Result<LemmaComparison, ClosedFormError> {
    if legs < 2 {
        return Err(ClosedFormError::BadInput(
            "comparison requires at least 2 Dirichlet legs".into(),
        ));
    }
    check_positive("leg_length", leg_length)?;
    check_positive("robin_length", robin_length)?;
    let (n, l, r) = (legs as f64, leg_length, robin_length);
    if !(k_d > PI / (2.0 * l) && k_d < PI / l) {
        return Err(ClosedFormError::Infeasible(format!(
            "k_d = {k_d} outside (pi/(2l), pi/l)"
        )));
    }
    let phase_of = |k: f64| arccot(-n * (k * l).cos() / (k * l).sin());
    let theta_d = phase_of(k_d) - k_d * r;
    if !(theta_d > 0.0 && theta_d < PI) {
        return Err(ClosedFormError::Infeasible(format!(
            "no Robin phase for k_d = {k_d}: theta_d = {theta_d}"
        )));
    }
    let alpha_d = k_d * theta_d.cos() / theta_d.sin();
    let k_n = PI / l - k_d;
    if !(k_n > 0.0 && k_n < k_d) {
        return Err(ClosedFormError::Infeasible(
            "paired frequency must satisfy 0 < k_n < k_d".into(),
        ));
    }
    let theta_n = phase_of(k_n) - k_n * r;
    if !(theta_n > 0.0 && theta_n < PI) {
        return Err(ClosedFormError::Infeasible(format!(
            "no Robin phase for k_n = {k_n}: theta_n = {theta_n}"
        )));
    }
    let alpha_n = k_n * theta_n.cos() / theta_n.sin();
    let interval_length = (PI - theta_d) / k_d;
    let lambda_interval = robin_interval_lambda1(interval_length, alpha_n)?;
    let lambda_star = k_n * k_n;
    Ok(LemmaComparison {
        k_d,
        k_n,
        alpha_d,
        alpha_n,
        interval_length,
        lambda_interval,
        lambda_star,
        gap: lambda_star - lambda_interval,
    })
}

/// Comparison entered through the Robin strength: the star frequency is
/// solved first, then checked against the admissible window.
pub fn lemma_comparison(
    legs: usize,
    leg_length: f64,
    robin_length: f64,
    alpha_d: f64,
) -> Result<LemmaComparison, ClosedFormError> {
    let k_d = robin_star_k(legs, leg_length, robin_length, alpha_d)?;
    if !(k_d > PI / (2.0 * leg_length)) {
        return Err(ClosedFormError::Infeasible(format!(
            "alpha_d = {alpha_d} puts the star frequency {k_d} at or below pi/(2l)"
        )));
    }
    lemma_comparison_at(legs, leg_length, robin_length, k_d)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: plain bisection on the defining equation, written
    // without the production bracketing logic.
    fn oracle_interval_root(l: f64, alpha: f64) -> f64 {
        let g = |k: f64| k * (k * l).cos() + alpha * (k * l).sin();
        let (mut a, mut b) = (1e-9, PI / l);
        assert!(g(a) > 0.0 && g(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn neumann_end_gives_half_pi() {
        let k = robin_interval_k(1.0, 0.0).unwrap();
        assert!((k - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_variant_gives_pi() {
        assert_eq!(robin_interval_k_dirichlet(1.0).unwrap(), PI);
    }

    #[test]
    fn unit_strength_root_matches_oracle() {
        // Root of k cot k = -1 in (pi/2, pi), approximately 2.029.
        let want = oracle_interval_root(1.0, 1.0);
        let k = robin_interval_k(1.0, 1.0).unwrap();
        assert!((k - want).abs() < 1e-12);
        assert!((k - 2.029).abs() < 1e-3);
        let residual = k * k.cos() + 1.0 * k.sin();
        assert!(residual.abs() <= 1e-12);
    }

    #[test]
    fn interval_frequency_increases_with_alpha() {
        // On a short interval every grid strength stays above -1/L, so the
        // first eigenfrequency is the scanned root throughout.
        let l = 0.1;
        let mut last = 0.0;
        let mut alpha = -5.0;
        while alpha <= 1000.0 {
            let k = robin_interval_k(l, alpha).unwrap();
            assert!(k > last, "k({alpha}) = {k} not above {last}");
            assert!(k <= PI / l + 1e-12);
            if alpha > 0.0 {
                assert!(k > PI / (2.0 * l));
            }
            last = k;
            alpha += 7.3;
        }
    }

    #[test]
    fn bound_state_branch_is_negative() {
        let lam = robin_interval_lambda1(1.0, -3.0).unwrap();
        assert!(lam < 0.0);
        // kappa cosh(kappa) - 3 sinh(kappa) = 0 residual.
        let kappa = (-lam).sqrt();
        let res = kappa * kappa.cosh() - 3.0 * kappa.sinh();
        assert!(res.abs() < 1e-9, "residual {res}");
        // Continuity with the positive branch.
        let at_crossing = robin_interval_lambda1(1.0, -1.0).unwrap();
        assert_eq!(at_crossing, 0.0);
    }

    #[test]
    fn matched_length_round_trip() {
        for (alpha, k) in [(0.0, PI / 2.0), (1.0, 2.0288), (25.0, 3.0), (-0.5, 1.1)] {
            let l = matched_interval_length(alpha, k).unwrap();
            let back = robin_interval_k(l, alpha).unwrap();
            assert!((back - k).abs() < 1e-10, "alpha={alpha}: {back} vs {k}");
        }
    }

    #[test]
    fn matched_length_monotone_in_alpha_near_top() {
        // Near the Dirichlet end of the frequency window the matched length
        // responds monotonically to the strength.
        let k = 2.8;
        let mut last = f64::NEG_INFINITY;
        for alpha in [0.0, 1.0, 5.0, 50.0, 1000.0] {
            let l = matched_interval_length(alpha, k).unwrap();
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn single_leg_star_collapses_to_interval() {
        let k_star = robin_star_k(1, 0.6, 0.4, 2.0).unwrap();
        let k_int = robin_interval_k(1.0, 2.0).unwrap();
        assert!((k_star - k_int).abs() < 1e-11);
    }

    #[test]
    fn huge_strength_approaches_dirichlet_limit() {
        let k = robin_star_k(3, 1.0, 0.8, 1e6).unwrap();
        let k_dir = star_dirichlet_limit_k(3, 1.0, 0.8).unwrap();
        assert!((k - k_dir).abs() < 1e-4);
    }

    #[test]
    fn star_secular_residual_is_tiny() {
        for &(n, l, r, alpha) in &[(2usize, 1.0, 0.7, 0.0), (4, 0.5, 1.2, 3.0), (2, 2.0, 0.3, 10.0)] {
            let k = robin_star_k(n, l, r, alpha).unwrap();
            let theta = arccot(alpha / k);
            let res = n as f64 * (k * l).cos() / (k * l).sin()
                + (k * r + theta).cos() / (k * r + theta).sin();
            assert!(res.abs() < 1e-10, "residual {res}");
        }
    }

    #[test]
    fn comparison_gap_positive_inside_admissible_range() {
        let (lo, hi) = admissible_kd_range(2, 1.0, 0.7).unwrap();
        assert!(lo < hi);
        let k_d = 0.5 * (lo + hi);
        let c = lemma_comparison_at(2, 1.0, 0.7, k_d).unwrap();
        assert!(c.gap > 0.0, "gap = {}", c.gap);
        assert!(c.lambda_star > c.lambda_interval);
        // Interval matched at alpha_d reproduces k_d.
        let back = robin_interval_k(c.interval_length, c.alpha_d).unwrap();
        assert!((back - c.k_d).abs() < 1e-10);
    }

    #[test]
    fn comparison_gap_vanishes_at_symmetric_point() {
        let (lo, hi) = admissible_kd_range(2, 1.0, 0.7).unwrap();
        let c = lemma_comparison_at(2, 1.0, 0.7, lo + 1e-6 * (hi - lo)).unwrap();
        assert!(c.gap > 0.0);
        assert!(c.gap < 1e-4, "gap should vanish at the symmetric end: {}", c.gap);
    }

    #[test]
    fn infeasible_frequency_is_reported() {
        // 0.6 pi exceeds the Dirichlet-limit frequency of this star, so no
        // real strength attains it.
        let hi = star_dirichlet_limit_k(2, 1.0, 0.7).unwrap();
        assert!(0.6 * PI > hi);
        assert!(matches!(
            lemma_comparison_at(2, 1.0, 0.7, 0.6 * PI),
            Err(ClosedFormError::Infeasible(_))
        ));
    }

    #[test]
    fn comparison_function_positive_and_vanishing_at_ends() {
        for &l in &[0.1, 1.0, 7.0] {
            for n in 2..=10usize {
                let (a, b) = (PI / (2.0 * l), PI / l);
                for i in 1..1000 {
                    let x = a + (b - a) * i as f64 / 1000.0;
                    if x >= b {
                        break;
                    }
                    let f = appendix_f(x, l, n).unwrap();
                    assert!(f > 0.0, "f({x}) = {f} for l={l}, n={n}");
                }
                let near_lo = appendix_f(a + 1e-9 * (b - a), l, n).unwrap();
                let near_hi = appendix_f(b - 1e-9 * (b - a), l, n).unwrap();
                assert!(near_lo.abs() < 1e-6);
                assert!(near_hi.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn comparison_function_is_concave() {
        let l = 1.0;
        let (a, b) = (PI / (2.0 * l), PI / l);
        let h = (b - a) / 500.0;
        for i in 2..499 {
            let x = a + i as f64 * h;
            let f0 = appendix_f(x - h, l, 3).unwrap();
            let f1 = appendix_f(x, l, 3).unwrap();
            let f2 = appendix_f(x + h, l, 3).unwrap();
            assert!(f2 - 2.0 * f1 + f0 < 0.0, "second difference at {x}");
        }
    }

    #[test]
    fn comparison_function_rejects_out_of_range() {
        assert!(appendix_f(PI / 2.0, 1.0, 2).is_err());
        assert!(appendix_f(PI, 1.0, 2).is_err());
        assert!(appendix_f(2.0, 1.0, 1).is_err());
    }
}
