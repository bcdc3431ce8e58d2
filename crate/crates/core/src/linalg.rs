//! Conjugate gradients in a diagonal-weighted inner product.
//!
//! Every operator here (`I + c(-Δ_h + 1)`, `I + cΔ²_h`, the stiffness forms
//! used by the constant estimators) is self-adjoint with respect to the
//! quadrature inner product, so CG runs in that inner product directly.

use alloc::vec;

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side.
    pub relative_residual: f64,
    pub converged: bool,
}

fn weighted_dot(w: &[f64], free: &[usize], a: &[f64], b: &[f64]) -> f64 {
    free.iter().map(|&i| w[i] * a[i] * b[i]).sum()
}

/// Solves `A x = rhs` on the `free` entries, starting from `x`. Entries of `x`
/// outside `free` are left untouched; `apply` must write zeros there.
pub fn conjugate_gradient<A>(
    mut apply: A,
    weights: &[f64],
    free: &[usize],
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome
where
    A: FnMut(&[f64], &mut [f64]),
{
    let n = x.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for &i in free {
        r[i] = rhs[i] - ap[i];
    }
    let b_norm = sqrt(weighted_dot(weights, free, rhs, rhs));
    if b_norm == 0.0 {
        for &i in free {
            x[i] = 0.0;
        }
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut p = r.clone();
    let mut rr = weighted_dot(weights, free, &r, &r);
    let target = rel_tol * b_norm;
    let mut it = 0;
    while sqrt(rr) > target && it < max_iter {
        apply(&p, &mut ap);
        let pap = weighted_dot(weights, free, &p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for &i in free {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = weighted_dot(weights, free, &r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for &i in free {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
    let rel = sqrt(rr) / b_norm;
    CgOutcome {
        iterations: it,
        relative_residual: rel,
        converged: rel <= rel_tol,
    }
}
