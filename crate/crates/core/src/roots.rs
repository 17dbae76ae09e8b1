//! Scalar root finding and one-dimensional minimization helpers.
//!
//! The transcendental secular functions handled here have poles between
//! their roots, so everything is bracket-based: bisection drives the bracket
//! down to floating point resolution and a few Newton steps polish the result
//! when a derivative is available.

/// Bisection on a sign change. `f(a)` and `f(b)` must have opposite signs.
/// The bracket is shrunk until its width falls below `tol` plus floating
/// point resolution around the root.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        flo.signum() != fhi.signum(),
        "bisect requires a sign change: f({lo})={flo}, f({hi})={fhi}"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < tol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A few Newton iterations from `x0`, kept inside `(lo, hi)`; returns the
/// last iterate that stayed in the bracket.
pub fn newton_polish<F, D>(mut f: F, mut df: D, x0: f64, lo: f64, hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            break;
        }
        x = next;
        if step.abs() < f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Golden-section minimization of a continuous function on `[a, b]`.
/// Returns the midpoint of the final bracket once its width is below `tol`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_simple_root() {
        let root = bisect(|x| x * x - 2.0, 1.0, 2.0, 0.0);
        assert!((root - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_polish_sharpens() {
        let x = newton_polish(|x| x * x - 2.0, |x| 2.0 * x, 1.4142, 1.0, 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn golden_min_locates_vee() {
        let m = golden_min(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-13);
        assert!((m - 0.3).abs() < 1e-12);
    }
}
