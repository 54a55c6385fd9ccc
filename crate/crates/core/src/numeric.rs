//! Shared numeric helpers: boundary-snapped flooring and leftmost-feasible
//! bisection over monotone predicates.

/// Snap grid for floor operations and completion checks. Bisection lands
/// epsilon-below analytic breakpoints; values this close to an integer are
/// treated as that integer before flooring.
pub(crate) const SNAP: f64 = 1e-9;

/// Relative bisection tolerance. Much tighter than the 1e-9 contract so that
/// errors accumulated over long sequence recursions stay below 1e-6.
pub(crate) const BISECT_REL: f64 = 1e-13;

/// Default search horizon in virtual seconds; a threshold not reached by this
/// point is declared unreachable.
pub(crate) const DEFAULT_HORIZON: f64 = 1e12;

/// Floor with snap-to-integer: values within [`SNAP`] of an integer floor to
/// that integer.
pub(crate) fn floor_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= SNAP {
        nearest
    } else {
        x.floor()
    }
}

/// Ceiling with a relative snap, for iteration/batch formulas whose float
/// evaluation may land a few ulps past an exact integer.
pub(crate) fn ceil_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * x.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Floor counterpart of [`ceil_snapped`].
pub(crate) fn floor_snapped_rel(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * x.abs().max(1.0) {
        nearest
    } else {
        x.floor()
    }
}

/// Leftmost `t >= lo` satisfying a monotone predicate (false below some
/// threshold point, true at and above it). The upper bracket grows by
/// doubling the offset from `lo + 1`; if the predicate is still false past
/// `lo + horizon` the threshold is declared unreachable and `None` is
/// returned. Otherwise bisects down to a relative width of [`BISECT_REL`]
/// and returns the feasible endpoint.
pub(crate) fn leftmost_feasible<F>(lo: f64, horizon: f64, pred: F) -> Option<f64>
where
    F: Fn(f64) -> bool,
{
    if pred(lo) {
        return Some(lo);
    }
    let mut offset = 1.0;
    let mut infeasible = lo;
    let mut feasible = loop {
        let hi = lo + offset;
        if pred(hi) {
            break hi;
        }
        if offset > horizon {
            return None;
        }
        infeasible = hi;
        offset *= 2.0;
    };
    loop {
        let width = feasible - infeasible;
        if width <= BISECT_REL * feasible.abs().max(1.0) {
            return Some(feasible);
        }
        let mid = infeasible + 0.5 * width;
        if mid <= infeasible || mid >= feasible {
            // Interval no longer splittable in f64.
            return Some(feasible);
        }
        if pred(mid) {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_snapped_basic() {
        assert_eq!(floor_snapped(2.5), 2.0);
        assert_eq!(floor_snapped(3.0 - 1e-10), 3.0);
        assert_eq!(floor_snapped(3.0 + 1e-10), 3.0);
        assert_eq!(floor_snapped(2.999_999), 2.0);
        assert_eq!(floor_snapped(0.0), 0.0);
    }

    #[test]
    fn leftmost_feasible_step() {
        let t = leftmost_feasible(0.0, 1e12, |t| t >= 3.25).unwrap();
        assert!((t - 3.25).abs() < 1e-9, "got {t}");
    }

    #[test]
    fn leftmost_feasible_at_lo() {
        assert_eq!(leftmost_feasible(2.0, 1e12, |_| true), Some(2.0));
    }

    #[test]
    fn leftmost_feasible_unreachable() {
        assert_eq!(leftmost_feasible(0.0, 1e6, |_| false), None);
    }
}
