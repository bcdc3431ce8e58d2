//! Energies, the potential functional, the Nehari functional, well
//! classification and the blow-up bookkeeping functionals `N`, `N'`, `Y`.

use crate::math::{abs, powf};
use crate::mesh::{Mesh, State};
use crate::params::ModelParams;
use crate::roots::{bisect, BISECTION_MAX_ITER};

/// Every integral a snapshot needs, computed in one pass over the fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldIntegrals {
    pub grad_sq: f64,
    pub u_sq: f64,
    pub lap_sq: f64,
    pub ut_sq: f64,
    pub wt_sq: f64,
    pub w_sq: f64,
    /// `∫_Ω F(u)`
    pub src_wave: f64,
    /// `∫_Γ H(w)`
    pub src_plate: f64,
    /// `∫_Ω u f(u)`
    pub work_wave: f64,
    /// `∫_Γ w h(w)`
    pub work_plate: f64,
    /// `∫_Γ γu w`
    pub trace_uw: f64,
    pub u_ut: f64,
    pub w_wt: f64,
}

impl FieldIntegrals {
    pub fn of(state: &State, mesh: &Mesh, params: &ModelParams) -> Self {
        let mut out = Self::of_displacement(&state.u, &state.w, mesh, params);
        out.ut_sq = mesh.l2_sq_omega(&state.ut);
        out.wt_sq = mesh.l2_sq_gamma(&state.wt);
        out.u_ut = mesh.inner_omega(&state.u, &state.ut);
        out.w_wt = mesh.inner_gamma(&state.w, &state.wt);
        out
    }

    /// Integrals that depend on displacements only; velocity terms are zero.
    pub fn of_displacement(u: &[f64], w: &[f64], mesh: &Mesh, params: &ModelParams) -> Self {
        let mut src_wave = 0.0;
        let mut work_wave = 0.0;
        let mut u_sq = 0.0;
        for ((q, &x), _) in mesh.quad_omega().iter().zip(u).zip(0..) {
            let (f, big_f) = params.eval_source_wave(x);
            src_wave += q * big_f;
            work_wave += q * x * f;
            u_sq += q * x * x;
        }
        let mut src_plate = 0.0;
        let mut work_plate = 0.0;
        let mut w_sq = 0.0;
        for (q, &x) in mesh.quad_gamma().iter().zip(w) {
            let (h, big_h) = params.eval_source_plate(x);
            src_plate += q * big_h;
            work_plate += q * x * h;
            w_sq += q * x * x;
        }
        Self {
            grad_sq: mesh.grad_sq(u),
            u_sq,
            lap_sq: mesh.lap_sq_gamma(w),
            w_sq,
            src_wave,
            src_plate,
            work_wave,
            work_plate,
            trace_uw: mesh.trace_inner(u, w),
            ..Self::default()
        }
    }

    /// `‖∇u‖² + ‖u‖² + |Δw|²`, the squared norm of `(u, w)` in the energy space.
    pub fn stiffness(&self) -> f64 {
        self.grad_sq + self.u_sq + self.lap_sq
    }

    pub fn quadratic_energy(&self) -> f64 {
        0.5 * (self.ut_sq + self.stiffness() + self.wt_sq)
    }

    pub fn source_potential(&self) -> f64 {
        self.src_wave + self.src_plate
    }

    pub fn total_energy(&self) -> f64 {
        self.quadratic_energy() - self.source_potential()
    }

    pub fn potential(&self) -> f64 {
        0.5 * self.stiffness() - self.source_potential()
    }

    /// `<J'(u,w), (u,w)> = Q - ∫u f(u) - ∫w h(w)`.
    pub fn nehari(&self) -> f64 {
        self.stiffness() - self.work_wave - self.work_plate
    }

    /// `N'` without history: `∫u u_t + ∫w w_t + ∫γu w`.
    pub fn n_prime(&self) -> f64 {
        self.u_ut + self.w_wt + self.trace_uw
    }

    /// `N` given the accumulated `∫₀ᵗ ∫_Γ γu w`.
    pub fn n_value(&self, history: f64) -> f64 {
        0.5 * (self.u_sq + self.w_sq) + history
    }
}

pub fn quadratic_energy(state: &State, mesh: &Mesh) -> f64 {
    0.5 * (mesh.l2_sq_omega(&state.ut)
        + mesh.grad_sq(&state.u)
        + mesh.l2_sq_omega(&state.u)
        + mesh.l2_sq_gamma(&state.wt)
        + mesh.lap_sq_gamma(&state.w))
}

/// `S = ∫_Ω F(u) + ∫_Γ H(w)`.
pub fn source_potential(state: &State, mesh: &Mesh, params: &ModelParams) -> f64 {
    FieldIntegrals::of_displacement(&state.u, &state.w, mesh, params).source_potential()
}

pub fn potential_j(u: &[f64], w: &[f64], mesh: &Mesh, params: &ModelParams) -> f64 {
    FieldIntegrals::of_displacement(u, w, mesh, params).potential()
}

pub fn nehari_value(u: &[f64], w: &[f64], mesh: &Mesh, params: &ModelParams) -> f64 {
    FieldIntegrals::of_displacement(u, w, mesh, params).nehari()
}

pub fn n_functional(state: &State, history: f64, mesh: &Mesh) -> f64 {
    0.5 * (mesh.l2_sq_omega(&state.u) + mesh.l2_sq_gamma(&state.w)) + history
}

pub fn n_prime(state: &State, mesh: &Mesh) -> f64 {
    mesh.inner_omega(&state.u, &state.ut)
        + mesh.inner_gamma(&state.w, &state.wt)
        + mesh.trace_inner(&state.u, &state.w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellClass {
    /// Stable part of the well (or the origin).
    W1,
    /// Unstable part of the well.
    W2,
    /// On the Nehari manifold within tolerance.
    Boundary,
    /// `J >= d`.
    Outside,
}

impl WellClass {
    pub fn label(self) -> &'static str {
        match self {
            WellClass::W1 => "W1",
            WellClass::W2 => "W2",
            WellClass::Boundary => "boundary",
            WellClass::Outside => "outside",
        }
    }
}

/// Tolerance on the Nehari value, scaled with the stiffness norm.
pub fn nehari_tolerance(stiffness: f64) -> f64 {
    1e-10 * (1.0 + stiffness)
}

pub fn classify_integrals(ints: &FieldIntegrals, depth: f64, is_zero: bool) -> WellClass {
    if ints.potential() >= depth {
        return WellClass::Outside;
    }
    if is_zero {
        return WellClass::W1;
    }
    let tol = nehari_tolerance(ints.stiffness());
    let i = ints.nehari();
    if i > tol {
        WellClass::W1
    } else if i < -tol {
        WellClass::W2
    } else {
        WellClass::Boundary
    }
}

/// Classification from recorded values; the stiffness vanishes only at the
/// zero displacement.
pub fn classify_snapshot(s: &EnergySnapshot, depth: f64) -> WellClass {
    if s.potential >= depth {
        return WellClass::Outside;
    }
    if s.stiffness == 0.0 {
        return WellClass::W1;
    }
    let tol = nehari_tolerance(s.stiffness);
    if s.nehari > tol {
        WellClass::W1
    } else if s.nehari < -tol {
        WellClass::W2
    } else {
        WellClass::Boundary
    }
}

pub fn classify_well(
    u: &[f64],
    w: &[f64],
    mesh: &Mesh,
    params: &ModelParams,
    depth: f64,
) -> WellClass {
    let ints = FieldIntegrals::of_displacement(u, w, mesh, params);
    let zero = u.iter().all(|v| *v == 0.0) && w.iter().all(|v| *v == 0.0);
    classify_integrals(&ints, depth, zero)
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FunctionalError {
    #[error("blow-up functional undefined; check total-energy sign condition (base = {0})")]
    NonPositiveBase(f64),
}

/// `Y = base^{1-a} + eps N'`, where `base` is `G = -𝓔` or `𝓖 = A - 𝓔`.
pub fn y_functional(base: f64, n_prime: f64, eps: f64, a: f64) -> Result<f64, FunctionalError> {
    if !(base > 0.0) {
        return Err(FunctionalError::NonPositiveBase(base));
    }
    Ok(powf(base, 1.0 - a) + eps * n_prime)
}

/// Which energy deficit drives `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyFrame {
    /// `G = -𝓔`
    Negative,
    /// `𝓖 = A - 𝓔`
    Positive { threshold: f64 },
}

impl EnergyFrame {
    pub fn base(self, total: f64) -> f64 {
        match self {
            EnergyFrame::Negative => -total,
            EnergyFrame::Positive { threshold } => threshold - total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySnapshot {
    pub time: f64,
    /// Quadratic energy `E`.
    pub quadratic: f64,
    /// Source potential `S`.
    pub source: f64,
    /// Total energy `𝓔 = E - S`.
    pub total: f64,
    pub potential: f64,
    pub nehari: f64,
    /// `G` or `𝓖`, depending on the frame.
    pub deficit: f64,
    pub n: f64,
    pub n_prime: f64,
    /// `NaN` when no frame is set or the deficit is not positive.
    pub y: f64,
    pub stiffness: f64,
    pub trace_uw: f64,
}

impl EnergySnapshot {
    pub fn from_integrals(
        time: f64,
        ints: &FieldIntegrals,
        history: f64,
        frame: Option<(EnergyFrame, f64, f64)>,
    ) -> Self {
        let total = ints.total_energy();
        let n_prime = ints.n_prime();
        let (deficit, y) = match frame {
            Some((fr, eps, a)) => {
                let base = fr.base(total);
                (base, y_functional(base, n_prime, eps, a).unwrap_or(f64::NAN))
            }
            None => (-total, f64::NAN),
        };
        Self {
            time,
            quadratic: ints.quadratic_energy(),
            source: ints.source_potential(),
            total,
            potential: ints.potential(),
            nehari: ints.nehari(),
            deficit,
            n: ints.n_value(history),
            n_prime,
            y,
            stiffness: ints.stiffness(),
            trace_uw: ints.trace_uw,
        }
    }

    /// Snapshot of a state. `frame` is `(frame, eps, a)` when `Y` is wanted.
    pub fn capture(
        state: &State,
        mesh: &Mesh,
        params: &ModelParams,
        history: f64,
        frame: Option<(EnergyFrame, f64, f64)>,
    ) -> Self {
        let ints = FieldIntegrals::of(state, mesh, params);
        Self::from_integrals(state.time, &ints, history, frame)
    }
}

/// The scalar fiber `φ(λ) = Qλ²/2 - bλ^{p+1} - cλ^{q+1}` of `J` along a ray,
/// valid for homogeneous sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fiber {
    pub stiffness: f64,
    pub wave: f64,
    pub plate: f64,
    pub p: f64,
    pub q: f64,
}

impl Fiber {
    pub fn of(ints: &FieldIntegrals, params: &ModelParams) -> Self {
        Self {
            stiffness: ints.stiffness(),
            wave: ints.src_wave,
            plate: ints.src_plate,
            p: params.p,
            q: params.q,
        }
    }

    pub fn value(&self, lambda: f64) -> f64 {
        0.5 * self.stiffness * lambda * lambda
            - self.wave * powf(lambda, self.p + 1.0)
            - self.plate * powf(lambda, self.q + 1.0)
    }

    /// `φ'(λ)/λ`, strictly decreasing on `(0, ∞)`.
    pub fn reduced_slope(&self, lambda: f64) -> f64 {
        self.stiffness
            - (self.p + 1.0) * self.wave * powf(lambda, self.p - 1.0)
            - (self.q + 1.0) * self.plate * powf(lambda, self.q - 1.0)
    }

    /// The unique interior maximiser, or `None` if the sources vanish along
    /// this ray (the fiber then grows without bound).
    pub fn maximizer(&self) -> Option<f64> {
        if !(self.stiffness > 0.0) || self.wave + self.plate <= 0.0 {
            return None;
        }
        let mut hi = 1.0;
        while self.reduced_slope(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e150 {
                return None;
            }
        }
        let mut lo = hi;
        while self.reduced_slope(lo) <= 0.0 {
            lo *= 0.5;
            if lo < 1e-150 {
                return None;
            }
        }
        let tol = 1e-14 * hi;
        bisect(|l| self.reduced_slope(l), lo, hi, tol, BISECTION_MAX_ITER).ok()
    }

    pub fn max_value(&self) -> Option<f64> {
        self.maximizer().map(|l| self.value(l))
    }
}

/// Relative gap `|a - b| / max(1, |b|)`.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    abs(a - b) / abs(b).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Geometry;
    use crate::params::RawParams;
    use crate::sampling::{random_gamma_field, random_omega_field};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Mesh, ModelParams) {
        (
            Mesh::build(&Geometry::default()).unwrap(),
            RawParams::default().validate(2).unwrap(),
        )
    }

    fn random_state(mesh: &Mesh, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        State {
            u: random_omega_field(mesh, &mut rng),
            ut: random_omega_field(mesh, &mut rng),
            w: random_gamma_field(mesh, &mut rng),
            wt: random_gamma_field(mesh, &mut rng),
            time: 0.0,
        }
    }

    #[test]
    fn zero_state() {
        let (m, p) = setup();
        let s = State::zeros(&m);
        assert_eq!(quadratic_energy(&s, &m), 0.0);
        assert_eq!(source_potential(&s, &m, &p), 0.0);
        assert_eq!(potential_j(&s.u, &s.w, &m, &p), 0.0);
        assert_eq!(nehari_value(&s.u, &s.w, &m, &p), 0.0);
        assert_eq!(classify_well(&s.u, &s.w, &m, &p, 1.0), WellClass::W1);
        assert_eq!(n_functional(&s, 0.7, &m), 0.7);
        assert_eq!(n_prime(&s, &m), 0.0);
    }

    #[test]
    fn unit_velocity_energy() {
        let (m, _) = setup();
        let mut s = State::zeros(&m);
        s.ut.iter_mut().for_each(|v| *v = 1.0);
        assert!((quadratic_energy(&s, &m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn xy_field_energy_converges() {
        // ½(∫x²+y² + ∫x²y²) = 7/18 on the unit square
        let err = |n: usize| {
            let m = Mesh::build(&Geometry {
                n,
                ..Geometry::default()
            })
            .unwrap();
            let mut s = State::zeros(&m);
            s.u = m.omega_field(|[x, y, _]| x * y);
            (quadratic_energy(&s, &m) - 7.0 / 18.0).abs()
        };
        let (e1, e2) = (err(17), err(33));
        assert!(e2 < 1e-3);
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn unit_sources() {
        let (m, p) = setup();
        let mut s = State::zeros(&m);
        s.u.iter_mut().for_each(|v| *v = 1.0);
        assert!((source_potential(&s, &m, &p) - 0.25).abs() < 1e-12);
        s.w.iter_mut().for_each(|v| *v = 1.0);
        let sp = source_potential(&s, &m, &p);
        assert!((sp - 0.5).abs() < 1e-12);
        let lower = p.c0 * m.integrate_omega(&s.u, 4.0).unwrap()
            + p.c2 * m.integrate_gamma(&s.w, 4.0).unwrap();
        assert!((sp - lower).abs() < 1e-12);
    }

    #[test]
    fn total_energy_splits_into_potential_plus_kinetic() {
        let (m, p) = setup();
        for seed in 0..5 {
            let s = random_state(&m, seed).scaled(3.0);
            let ints = FieldIntegrals::of(&s, &m, &p);
            let lhs = ints.total_energy();
            let rhs = ints.potential() + 0.5 * (ints.ut_sq + ints.wt_sq);
            assert!(rel_gap(lhs, rhs) < 1e-12);
            assert!((ints.work_wave - 4.0 * ints.src_wave).abs() <= 1e-12 * ints.work_wave.abs());
            assert!(
                (ints.nehari()
                    - (ints.stiffness() - (p.p + 1.0) * ints.src_wave - (p.q + 1.0) * ints.src_plate))
                    .abs()
                    < 1e-10 * (1.0 + ints.stiffness())
            );
        }
    }

    #[test]
    fn nehari_is_fiber_derivative() {
        let (m, p) = setup();
        let s = random_state(&m, 11).scaled(4.0);
        let j = |lam: f64| {
            let u: alloc::vec::Vec<f64> = s.u.iter().map(|v| v * lam).collect();
            let w: alloc::vec::Vec<f64> = s.w.iter().map(|v| v * lam).collect();
            potential_j(&u, &w, &m, &p)
        };
        let h = 1e-5;
        let fd = (j(1.0 + h) - j(1.0 - h)) / (2.0 * h);
        let nv = nehari_value(&s.u, &s.w, &m, &p);
        assert!((fd - nv).abs() < 1e-6 * (1.0 + nv.abs()), "{fd} {nv}");
    }

    #[test]
    fn scaling_law_of_potential() {
        let (m, p) = setup();
        let s = random_state(&m, 3);
        let ints = FieldIntegrals::of_displacement(&s.u, &s.w, &m, &p);
        let u2: alloc::vec::Vec<f64> = s.u.iter().map(|v| 2.0 * v).collect();
        let w2: alloc::vec::Vec<f64> = s.w.iter().map(|v| 2.0 * v).collect();
        let j2 = potential_j(&u2, &w2, &m, &p);
        let expected = 2.0 * ints.stiffness() - 16.0 * ints.src_wave - 16.0 * ints.src_plate;
        assert!(rel_gap(j2, expected) < 1e-12);
        assert!(rel_gap(Fiber::of(&ints, &p).value(2.0), expected) < 1e-12);
    }

    #[test]
    fn classification_along_a_ray() {
        let (m, p) = setup();
        let s = random_state(&m, 5);
        let ints = FieldIntegrals::of_displacement(&s.u, &s.w, &m, &p);
        let fiber = Fiber::of(&ints, &p);
        let lam_star = fiber.maximizer().unwrap();
        let depth = fiber.max_value().unwrap() * 1.5;

        let class = |lam: f64| {
            let u: alloc::vec::Vec<f64> = s.u.iter().map(|v| v * lam).collect();
            let w: alloc::vec::Vec<f64> = s.w.iter().map(|v| v * lam).collect();
            classify_well(&u, &w, &m, &p, depth)
        };
        assert_eq!(class(1e-3 * lam_star), WellClass::W1);
        assert_eq!(class(1.5 * lam_star), WellClass::W2);
        let mut seen_w2 = false;
        let mut switches = 0;
        let mut last = WellClass::W1;
        for k in 1..400 {
            let c = class(lam_star * k as f64 / 200.0);
            if c != last {
                switches += 1;
                last = c;
            }
            seen_w2 |= c == WellClass::W2;
        }
        assert!(seen_w2);
        assert!(switches <= 2, "switches {switches}");
        // beyond the fiber max the potential drops below zero eventually
        assert_eq!(class(0.0), WellClass::W1);
    }

    #[test]
    fn outside_when_potential_exceeds_depth() {
        let (m, p) = setup();
        let s = random_state(&m, 9);
        let j = potential_j(&s.u, &s.w, &m, &p);
        assert!(j > 0.0);
        assert_eq!(classify_well(&s.u, &s.w, &m, &p, 0.5 * j), WellClass::Outside);
    }

    #[test]
    fn n_prime_examples() {
        let (m, _) = setup();
        let mut s = State::zeros(&m);
        s.w = vec![1.0; m.gamma_len()];
        s.wt = vec![1.0; m.gamma_len()];
        assert!((n_prime(&s, &m) - 1.0).abs() < 1e-12);

        let mut s = State::zeros(&m);
        s.u = m.omega_field(|[_, y, _]| y);
        s.w = vec![2.0; m.gamma_len()];
        let trace_part = m.trace_inner(&s.u, &s.w);
        // γu = 1 on the open wall; corner nodes are rigid
        let expected = 2.0 * m.gamma_measure();
        assert!((trace_part - expected).abs() < 1e-12);
    }

    #[test]
    fn y_functional_cases() {
        assert_eq!(y_functional(1.0, 0.0, 0.3, 0.2).unwrap(), 1.0);
        assert!((y_functional(4.0, -2.0, 0.1, 0.5).unwrap() - 1.8).abs() < 1e-15);
        assert!(y_functional(0.0, 1.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn single_power_fiber_closed_form() {
        let fiber = Fiber {
            stiffness: 3.0,
            wave: 0.7,
            plate: 0.0,
            p: 3.0,
            q: 3.0,
        };
        let p = 3.0f64;
        let expected = (0.5 - 1.0 / (p + 1.0))
            * 3.0
            * (3.0 / ((p + 1.0) * 0.7)).powf(2.0 / (p - 1.0));
        assert!((fiber.max_value().unwrap() - expected).abs() < 1e-12);
    }
}
