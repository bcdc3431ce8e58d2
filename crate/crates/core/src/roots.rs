//! Scalar root finding: bisection for monotone functions and a safeguarded
//! Newton iteration for the pointwise damping solve.

use crate::math::abs;

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("could not bracket a root below {limit}")]
    Unbounded { limit: f64 },
}

/// Bisection for `f(x) = 0` on `[lo, hi]` where `f(lo)` and `f(hi)` have
/// opposite signs. Stops when the bracket is narrower than `tol` or after
/// `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(RootError::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of a strictly increasing `f` with `f(0) < 0` on `(0, ∞)`: doubles an
/// upper bracket starting at `start` until `f > 0`, then bisects.
pub fn root_increasing_from_zero<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    tol: f64,
) -> Result<f64, RootError> {
    let mut hi = start;
    let limit = 1e300;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if !(hi < limit) {
            return Err(RootError::Unbounded { limit });
        }
    }
    bisect(f, 0.0, hi, tol, BISECTION_MAX_ITER)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSolve {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `v + kappa * g(v) = rhs` for a monotone increasing `g` with
/// `g(0) = 0` and `kappa >= 0`. The root lies between `0` and `rhs`; Newton
/// steps leaving that bracket are replaced by bisection.
pub fn solve_damped_velocity<G>(g: G, kappa: f64, rhs: f64, tol: f64, max_iter: usize) -> MonotoneSolve
where
    G: Fn(f64) -> (f64, f64),
{
    if rhs == 0.0 || kappa == 0.0 {
        return MonotoneSolve {
            value: rhs,
            iterations: 0,
            converged: true,
        };
    }
    let (mut lo, mut hi) = if rhs > 0.0 { (0.0, rhs) } else { (rhs, 0.0) };
    let scale = abs(rhs);
    let mut v = rhs;
    for it in 1..=max_iter {
        let (gv, dg) = g(v);
        let phi = v + kappa * gv - rhs;
        if abs(phi) <= tol * scale {
            return MonotoneSolve {
                value: v,
                iterations: it,
                converged: true,
            };
        }
        if phi > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let slope = 1.0 + kappa * dg;
        let newton = v - phi / slope;
        v = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= tol * scale {
            return MonotoneSolve {
                value: v,
                iterations: it,
                converged: true,
            };
        }
    }
    MonotoneSolve {
        value: v,
        iterations: max_iter,
        converged: false,
    }
}
