//! Scalar root finding for the characteristic-time equation.
//!
//! The occupancy sum `F(T) = sum_j h_j(T) - C` is strictly increasing in `T`
//! with `F(0) = -C`, so a bracket `[0, hi]` is found by doubling and then
//! shrunk with Newton steps that are only accepted when they land strictly
//! inside the bracket. Anything else falls back to bisection.

use crate::error::{Error, Result};

/// Stopping rule for the characteristic-time solver. The default is purely
/// relative: a positive capacity always has a strictly positive root, and a
/// relative rule keeps the solution exactly scale-covariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_iterations: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { relative: 1e-10, absolute: f64::MIN_POSITIVE, max_iterations: 400 }
    }
}

impl Tolerance {
    #[inline]
    fn width(&self, t: f64) -> f64 {
        (self.relative * t.abs()).max(self.absolute)
    }
}

/// Finds the root of an increasing function with `f(0) < 0`.
///
/// `f` returns the value and derivative at `t`. `start` is the first probe
/// (a positive guess such as `1 / mean rate` or a previous solution).
pub fn solve_increasing<F>(mut f: F, start: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut t = if start.is_finite() && start > 0.0 { start } else { 1.0 };

    for iteration in 1..=tol.max_iterations {
        let (value, slope) = f(t);
        if value == 0.0 {
            return Ok(t);
        }
        if value < 0.0 {
            lo = t;
        } else {
            hi = t;
        }

        let newton = if slope > 0.0 && slope.is_finite() { t - value / slope } else { f64::NAN };
        let next = if hi.is_infinite() {
            // No upper bracket yet: double, or take a Newton step that stays
            // within the doubled probe.
            if newton > t && newton <= 2.0 * t {
                newton
            } else {
                2.0 * t
            }
        } else if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };

        if !next.is_finite() || next > f64::MAX / 4.0 {
            return Err(Error::SolverFailure { lo, hi, iterations: iteration });
        }
        if hi.is_finite() && ((next - t).abs() <= tol.width(next) || hi - lo <= tol.width(hi)) {
            return Ok(next.clamp(lo, hi));
        }
        t = next;
    }
    Err(Error::SolverFailure { lo, hi, iterations: tol.max_iterations })
}
