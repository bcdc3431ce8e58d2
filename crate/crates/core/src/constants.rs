//! Scalar thresholds of the potential-well and positive-energy blow-up
//! theory: the embedding constants `K1`, `K2`, the roots `y0`, `y*`, `y1`,
//! the values `d̂`, `A`, and an upper estimate of the well depth `d`.
//!
//! All thresholds are computed from the discrete embedding constants, so the
//! inequalities between them hold for the discrete problem.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::functionals::{FieldIntegrals, Fiber};
use crate::linalg::conjugate_gradient;
use crate::math::{abs, powf, sqrt};
use crate::mesh::Mesh;
use crate::params::ModelParams;
use crate::roots::{bisect, root_increasing_from_zero, RootError, BISECTION_MAX_ITER};
use crate::sampling::{random_gamma_field, random_omega_field};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ConstantsError {
    #[error("constants need positive finite inputs (M = {m}, K1 = {k1}, K2 = {k2}, p = {p}, q = {q})")]
    BadInput { m: f64, k1: f64, k2: f64, p: f64, q: f64 },
    #[error("d-hat = {0} is not positive; inputs are inconsistent")]
    NonPositiveDhat(f64),
    #[error("hypothesis 𝓔(0)<d̂ violated: 𝓔(0) = {total}, d̂ = {dhat}")]
    AboveDhat { total: f64, dhat: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsOptions {
    /// Multi-start count for each embedding constant.
    pub starts: usize,
    pub max_iter: usize,
    /// Stop when the quotient changes by less than this, relatively.
    pub rel_tol: f64,
    /// Random directions for the depth estimate.
    pub directions: usize,
    pub seed: u64,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iter: 10_000,
            rel_tol: 1e-8,
            directions: 128,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Maximising field, normalised to unit stiffness.
    pub field: Vec<f64>,
}

/// `∫_Ω |u|^{p+1} / ‖∇u‖^{p+1}`.
pub fn wave_quotient(mesh: &Mesh, u: &[f64], p: f64) -> f64 {
    let num: f64 = mesh
        .quad_omega()
        .iter()
        .zip(u)
        .map(|(q, v)| q * powf(abs(*v), p + 1.0))
        .sum();
    num / powf(mesh.grad_sq(u), 0.5 * (p + 1.0))
}

/// `∫_Γ |w|^{q+1} / |Δw|^{q+1}`.
pub fn plate_quotient(mesh: &Mesh, w: &[f64], q: f64) -> f64 {
    let num: f64 = mesh
        .quad_gamma()
        .iter()
        .zip(w)
        .map(|(qw, v)| qw * powf(abs(*v), q + 1.0))
        .sum();
    num / powf(mesh.lap_sq_gamma(w), 0.5 * (q + 1.0))
}

/// Maximises `N(u)/D(u)^{(e+1)/2}` with `N = ∫|u|^{e+1}` and `D = <Au, u>`
/// by ascent along the Sobolev gradient `A⁻¹∇`. With `D = 1` the gradient of
/// `log R` is `(e+1)(A⁻¹(|u|^{e-1}u)/N - u)`, and a step of `1/(e+1)` is the
/// nonlinear power iteration; backtracking keeps the quotient monotone.
struct Ascent<'a, A, D> {
    apply: A,
    denom: D,
    weights: &'a [f64],
    free: &'a [usize],
    exponent: f64,
    max_iter: usize,
    rel_tol: f64,
}

impl<A, D> Ascent<'_, A, D>
where
    A: FnMut(&[f64], &mut [f64]),
    D: Fn(&[f64]) -> f64,
{
    fn numerator(&self, u: &[f64]) -> f64 {
        self.free
            .iter()
            .map(|&i| self.weights[i] * powf(abs(u[i]), self.exponent + 1.0))
            .sum()
    }

    fn normalise(&self, u: &mut [f64]) -> bool {
        let d = (self.denom)(u);
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let s = 1.0 / sqrt(d);
        u.iter_mut().for_each(|v| *v *= s);
        true
    }

    fn run(&mut self, mut u: Vec<f64>) -> KEstimate {
        let e = self.exponent;
        let natural = 1.0 / (e + 1.0);
        if !self.normalise(&mut u) {
            return KEstimate {
                value: 0.0,
                converged: false,
                iterations: 0,
                field: u,
            };
        }
        let mut r = self.numerator(&u);
        let mut z = vec![0.0; u.len()];
        let mut rhs = vec![0.0; u.len()];
        let mut cand = vec![0.0; u.len()];
        let mut tau = natural;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=self.max_iter {
            iterations = it;
            for &i in self.free {
                rhs[i] = powf(abs(u[i]), e - 1.0) * u[i];
            }
            conjugate_gradient(&mut self.apply, self.weights, self.free, &rhs, &mut z, 1e-12, 4 * u.len());
            let mut accepted = None;
            for _ in 0..40 {
                for &i in self.free {
                    cand[i] = u[i] + tau * (e + 1.0) * (z[i] / r - u[i]);
                }
                if self.normalise(&mut cand) {
                    let rc = self.numerator(&cand);
                    if rc >= r {
                        accepted = Some(rc);
                        break;
                    }
                }
                tau *= 0.5;
            }
            let Some(rc) = accepted else {
                // no ascent direction left at machine precision
                converged = true;
                break;
            };
            let change = (rc - r) / r;
            core::mem::swap(&mut u, &mut cand);
            r = rc;
            tau = (tau * 2.0).min(natural);
            if change < self.rel_tol {
                converged = true;
                break;
            }
        }
        KEstimate {
            value: r,
            converged,
            iterations,
            field: u,
        }
    }
}

fn best_of(estimates: impl Iterator<Item = KEstimate>) -> KEstimate {
    estimates
        .reduce(|best, e| if e.value > best.value { e } else { best })
        .expect("at least one start")
}

pub fn estimate_k1(mesh: &Mesh, params: &ModelParams, opts: &ConstantsOptions) -> KEstimate {
    let zero_g = vec![0.0; mesh.gamma_len()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|_| random_omega_field(mesh, &mut rng))
        .collect();
    best_of(starts.into_iter().map(|u0| {
        Ascent {
            apply: |v: &[f64], o: &mut [f64]| mesh.neg_laplacian_into(v, &zero_g, o),
            denom: |v: &[f64]| mesh.grad_sq(v),
            weights: mesh.quad_omega(),
            free: mesh.free_omega(),
            exponent: params.p,
            max_iter: opts.max_iter,
            rel_tol: opts.rel_tol,
        }
        .run(u0)
    }))
}

pub fn estimate_k2(mesh: &Mesh, params: &ModelParams, opts: &ConstantsOptions) -> KEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|_| random_gamma_field(mesh, &mut rng))
        .collect();
    best_of(starts.into_iter().map(|w0| {
        let mut scratch = vec![0.0; mesh.gamma_len()];
        Ascent {
            apply: move |v: &[f64], o: &mut [f64]| mesh.plate_operator_into(v, &mut scratch, o),
            denom: |v: &[f64]| mesh.lap_sq_gamma(v),
            weights: mesh.quad_gamma(),
            free: mesh.free_gamma(),
            exponent: params.q,
            max_iter: opts.max_iter,
            rel_tol: opts.rel_tol,
        }
        .run(w0)
    }))
}

fn check_inputs(m: f64, k1: f64, k2: f64, p: f64, q: f64) -> Result<(), ConstantsError> {
    let ok = [m, k1, k2].iter().all(|v| v.is_finite() && *v > 0.0)
        && p.is_finite()
        && q.is_finite()
        && p > 1.0
        && q > 1.0;
    if ok {
        Ok(())
    } else {
        Err(ConstantsError::BadInput { m, k1, k2, p, q })
    }
}

/// Root of `MK1(p+1)(2y)^{(p-1)/2} + MK2(q+1)(2y)^{(q-1)/2} = 1`.
pub fn solve_y0(m: f64, k1: f64, k2: f64, p: f64, q: f64) -> Result<f64, ConstantsError> {
    check_inputs(m, k1, k2, p, q)?;
    let lhs = |y: f64| {
        m * k1 * (p + 1.0) * powf(2.0 * y, 0.5 * (p - 1.0))
            + m * k2 * (q + 1.0) * powf(2.0 * y, 0.5 * (q - 1.0))
            - 1.0
    };
    // bisect down to adjacent floats
    Ok(root_increasing_from_zero(lhs, 1e-6, 0.0)?)
}

pub fn compute_dhat(m: f64, k1: f64, k2: f64, p: f64, q: f64, y0: f64) -> Result<f64, ConstantsError> {
    let d = f1(m, k1, k2, p, q, y0);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(ConstantsError::NonPositiveDhat(d))
    }
}

pub fn compute_a(lambda: f64, y0: f64) -> f64 {
    lambda / (2.0 * (6.0 + lambda)) * y0
}

/// Root of `MK1(p+1)y^{p-1} + MK2(q+1)y^{q-1} = 1`.
pub fn solve_ystar(m: f64, k1: f64, k2: f64, p: f64, q: f64) -> Result<f64, ConstantsError> {
    check_inputs(m, k1, k2, p, q)?;
    let lhs = |y: f64| {
        m * k1 * (p + 1.0) * powf(y, p - 1.0) + m * k2 * (q + 1.0) * powf(y, q - 1.0) - 1.0
    };
    Ok(root_increasing_from_zero(lhs, 1e-6, 0.0)?)
}

/// `F1(y) = y - MK1(2y)^{(p+1)/2} - MK2(2y)^{(q+1)/2}`.
pub fn f1(m: f64, k1: f64, k2: f64, p: f64, q: f64, y: f64) -> f64 {
    y - m * k1 * powf(2.0 * y, 0.5 * (p + 1.0)) - m * k2 * powf(2.0 * y, 0.5 * (q + 1.0))
}

/// `Λ(y) = y²/2 - MK1 y^{p+1} - MK2 y^{q+1}`.
pub fn big_lambda(m: f64, k1: f64, k2: f64, p: f64, q: f64, y: f64) -> f64 {
    0.5 * y * y - m * k1 * powf(y, p + 1.0) - m * k2 * powf(y, q + 1.0)
}

/// Upper estimate of the well depth: the smallest fiber maximum of `J` over
/// the sampled directions. Directions with zero stiffness, or along which
/// the sources vanish, are skipped. Returns `(d_upper, directions used)`.
pub fn estimate_depth_d(
    mesh: &Mesh,
    params: &ModelParams,
    n_dirs: usize,
    seed: u64,
    extra: &[(Vec<f64>, Vec<f64>)],
) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let zero_u = vec![0.0; mesh.omega_len()];
    let zero_w = vec![0.0; mesh.gamma_len()];
    let mut best = f64::INFINITY;
    let mut used = 0;
    let mut consider = |u: &[f64], w: &[f64]| {
        if let Some(v) = fiber_max(mesh, params, u, w) {
            best = best.min(v);
            used += 1;
        }
    };
    for (u, w) in extra {
        consider(u, w);
    }
    for k in 0..n_dirs {
        // cycle through pure wave, pure plate and mixed directions
        match k % 3 {
            0 => consider(&random_omega_field(mesh, &mut rng), &zero_w),
            1 => consider(&zero_u, &random_gamma_field(mesh, &mut rng)),
            _ => {
                let u = random_omega_field(mesh, &mut rng);
                let w = random_gamma_field(mesh, &mut rng);
                consider(&u, &w)
            }
        }
    }
    (best, used)
}

/// `sup_{λ>=0} J(λ(u, w))`, or `None` if the direction carries no stiffness
/// or the fiber is unbounded.
pub fn fiber_max(mesh: &Mesh, params: &ModelParams, u: &[f64], w: &[f64]) -> Option<f64> {
    let ints = FieldIntegrals::of_displacement(u, w, mesh, params);
    if !(ints.stiffness() > 0.0) {
        return None;
    }
    if params.wave_source.is_power() && params.plate_source.is_power() {
        return Fiber::of(&ints, params).max_value();
    }
    // general sources: the fiber derivative is nehari(λ·)/λ
    let nehari_at = |lam: f64| {
        let su: Vec<f64> = u.iter().map(|v| v * lam).collect();
        let sw: Vec<f64> = w.iter().map(|v| v * lam).collect();
        FieldIntegrals::of_displacement(&su, &sw, mesh, params).nehari()
    };
    let mut hi = 1.0;
    while nehari_at(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e100 {
            return None;
        }
    }
    let mut lo = hi;
    while nehari_at(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-100 {
            return None;
        }
    }
    let lam = bisect(nehari_at, lo, hi, 1e-13 * hi, BISECTION_MAX_ITER).ok()?;
    let su: Vec<f64> = u.iter().map(|v| v * lam).collect();
    let sw: Vec<f64> = w.iter().map(|v| v * lam).collect();
    Some(FieldIntegrals::of_displacement(&su, &sw, mesh, params).potential())
}

/// Thresholds for one `(mesh, params)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WellConstants {
    pub k1: f64,
    pub k2: f64,
    pub k1_converged: bool,
    pub k2_converged: bool,
    /// Source bound `M`.
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub y0: f64,
    pub dhat: f64,
    /// Total-energy threshold `A`.
    pub a_threshold: f64,
    pub ystar: f64,
    /// `+∞` until directions are sampled.
    pub d_upper: f64,
    pub directions: usize,
    pub dim: usize,
    pub wave_maximizer: Vec<f64>,
    pub plate_maximizer: Vec<f64>,
}

impl WellConstants {
    /// Scalar thresholds from given embedding constants. No depth estimate.
    pub fn from_scalars(m: f64, k1: f64, k2: f64, p: f64, q: f64, lambda: f64) -> Result<Self, ConstantsError> {
        let y0 = solve_y0(m, k1, k2, p, q)?;
        let dhat = compute_dhat(m, k1, k2, p, q, y0)?;
        let ystar = solve_ystar(m, k1, k2, p, q)?;
        Ok(Self {
            k1,
            k2,
            k1_converged: true,
            k2_converged: true,
            m,
            p,
            q,
            lambda,
            y0,
            dhat,
            a_threshold: compute_a(lambda, y0),
            ystar,
            d_upper: f64::INFINITY,
            directions: 0,
            dim: 0,
            wave_maximizer: Vec::new(),
            plate_maximizer: Vec::new(),
        })
    }

    pub fn compute(mesh: &Mesh, params: &ModelParams, opts: &ConstantsOptions) -> Result<Self, ConstantsError> {
        let k1 = estimate_k1(mesh, params, opts);
        let k2 = estimate_k2(mesh, params, opts);
        let mut out = Self::from_scalars(params.source_bound(), k1.value, k2.value, params.p, params.q, params.lambda)?;
        out.k1_converged = k1.converged;
        out.k2_converged = k2.converged;
        out.dim = mesh.dim;
        let zero_u = vec![0.0; mesh.omega_len()];
        let zero_w = vec![0.0; mesh.gamma_len()];
        let extra = [
            (k1.field.clone(), zero_w),
            (zero_u, k2.field.clone()),
            (k1.field.clone(), k2.field.clone()),
        ];
        let (d, used) = estimate_depth_d(mesh, params, opts.directions, opts.seed, &extra);
        out.d_upper = d;
        out.directions = used;
        out.wave_maximizer = k1.field;
        out.plate_maximizer = k2.field;
        Ok(out)
    }

    pub fn f1(&self, y: f64) -> f64 {
        f1(self.m, self.k1, self.k2, self.p, self.q, y)
    }

    pub fn big_lambda(&self, y: f64) -> f64 {
        big_lambda(self.m, self.k1, self.k2, self.p, self.q, y)
    }

    /// `min{A, d̂}`, the energy ceiling of the positive-energy regime.
    pub fn positive_energy_ceiling(&self) -> f64 {
        self.a_threshold.min(self.dhat)
    }

    /// The lower bound `y0·min{(p-1)/(p+1), (q-1)/(q+1)}` on `d̂`.
    pub fn dhat_floor(&self) -> f64 {
        self.y0 * ((self.p - 1.0) / (self.p + 1.0)).min((self.q - 1.0) / (self.q + 1.0))
    }

    /// `(name, value, how it was obtained)` rows for reports.
    pub fn provenance(&self) -> Vec<(&'static str, f64, &'static str)> {
        let k_note = |c: bool| {
            if c {
                "multi-start Sobolev-gradient ascent of the discrete quotient"
            } else {
                "multi-start Sobolev-gradient ascent (unconverged)"
            }
        };
        vec![
            ("K1", self.k1, k_note(self.k1_converged)),
            ("K2", self.k2, k_note(self.k2_converged)),
            ("M", self.m, "largest source bound F(u) <= M|u|^{p+1}"),
            ("y0", self.y0, "bisection on the increasing y0 equation"),
            ("dhat", self.dhat, "F1(y0)"),
            ("A", self.a_threshold, "lambda/(2(6+lambda)) * y0"),
            ("ystar", self.ystar, "bisection; ystar^2 = 2 y0"),
            ("d_upper", self.d_upper, "min of fiber maxima over sampled directions"),
        ]
    }

    /// Report note for exponents whose embedding constant depends on the
    /// dimension.
    pub fn dimension_note(&self) -> Option<&'static str> {
        if self.dim == 2 {
            Some("2D chamber: K1 is finite for every p; values are not comparable with 3D")
        } else {
            None
        }
    }
}

/// Root of `F1(y1) = 𝓔(0)` with `y1 > y0`.
pub fn solve_y1(total_e0: f64, c: &WellConstants) -> Result<f64, ConstantsError> {
    if !(total_e0 < c.dhat) {
        return Err(ConstantsError::AboveDhat {
            total: total_e0,
            dhat: c.dhat,
        });
    }
    let g = |y: f64| c.f1(y) - total_e0;
    let mut hi = 2.0 * c.y0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if !(hi < 1e300) {
            return Err(RootError::Unbounded { limit: hi }.into());
        }
    }
    Ok(bisect(g, c.y0, hi, 0.0, BISECTION_MAX_ITER)?)
}
