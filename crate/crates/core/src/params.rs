//! Model parameters: the source and damping laws, their structural
//! inequalities, and the auxiliary exponents used by the blow-up estimates.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{abs, powf};

/// Pointwise `(f(u), F(u))` for a user-supplied source.
pub type SourceFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
/// Pointwise `(g(s), g'(s))` for a user-supplied damping.
pub type DampingFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// A source term `f` with primitive `F`, plus the constants the theory needs:
/// `F(u) >= c0 |u|^{e+1}`, `u f(u) >= c_euler F(u)` and `F(u) <= bound |u|^{e+1}`.
#[derive(Clone)]
pub struct SourceLaw {
    pub exponent: f64,
    pub c0: f64,
    pub c_euler: f64,
    pub bound: f64,
    kind: SourceKind,
}

#[derive(Clone)]
enum SourceKind {
    Power,
    Custom(SourceFn),
}

impl SourceLaw {
    /// `f(u) = |u|^{e-1} u`, `F(u) = |u|^{e+1}/(e+1)`.
    pub fn power(exponent: f64) -> Self {
        let c = 1.0 / (exponent + 1.0);
        Self {
            exponent,
            c0: c,
            c_euler: exponent + 1.0,
            bound: c,
            kind: SourceKind::Power,
        }
    }

    pub fn custom(exponent: f64, c0: f64, c_euler: f64, bound: f64, eval: SourceFn) -> Self {
        Self {
            exponent,
            c0,
            c_euler,
            bound,
            kind: SourceKind::Custom(eval),
        }
    }

    pub fn is_power(&self) -> bool {
        matches!(self.kind, SourceKind::Power)
    }

    /// Returns `(f(u), F(u))`.
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64) {
        match &self.kind {
            SourceKind::Power => {
                let e = self.exponent;
                let a = abs(u);
                if a == 0.0 {
                    return (0.0, 0.0);
                }
                let pe = powf(a, e);
                (if u < 0.0 { -pe } else { pe }, pe * a / (e + 1.0))
            }
            SourceKind::Custom(f) => f(u),
        }
    }
}

impl fmt::Debug for SourceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceLaw")
            .field("exponent", &self.exponent)
            .field("c0", &self.c0)
            .field("c_euler", &self.c_euler)
            .field("bound", &self.bound)
            .field("power", &self.is_power())
            .finish()
    }
}

/// A monotone damping `g` with `alpha |s|^{e+1} <= g(s) s <= beta |s|^{e+1}`.
#[derive(Clone)]
pub struct DampingLaw {
    pub exponent: f64,
    pub alpha: f64,
    pub beta: f64,
    kind: DampingKind,
}

#[derive(Clone)]
enum DampingKind {
    Power,
    Custom(DampingFn),
}

impl DampingLaw {
    /// `g(s) = alpha |s|^{e-1} s`.
    pub fn power(exponent: f64, alpha: f64) -> Self {
        Self {
            exponent,
            alpha,
            beta: alpha,
            kind: DampingKind::Power,
        }
    }

    pub fn custom(exponent: f64, alpha: f64, beta: f64, eval: DampingFn) -> Self {
        Self {
            exponent,
            alpha,
            beta,
            kind: DampingKind::Custom(eval),
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.eval_with_slope(s).0
    }

    /// Returns `(g(s), g'(s))`.
    #[inline]
    pub fn eval_with_slope(&self, s: f64) -> (f64, f64) {
        match &self.kind {
            DampingKind::Power => {
                let e = self.exponent;
                let a = abs(s);
                if a == 0.0 {
                    // g'(0) is 0 for e > 1 and alpha for e == 1
                    return (0.0, if e == 1.0 { self.alpha } else { 0.0 });
                }
                let pm1 = powf(a, e - 1.0);
                (self.alpha * pm1 * s, self.alpha * e * pm1)
            }
            DampingKind::Custom(g) => g(s),
        }
    }
}

impl fmt::Debug for DampingLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DampingLaw")
            .field("exponent", &self.exponent)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish()
    }
}

/// Unvalidated exponents and damping bounds, as read from a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub p: f64,
    pub q: f64,
    pub m: f64,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            q: 3.0,
            m: 2.0,
            r: 2.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// One violated structural inequality.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} = {value} violates {requirement}")]
    Range {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("p = {p} must exceed m = {m}")]
    SourceBelowDampingWave { p: f64, m: f64 },
    #[error("q = {q} must exceed r = {r}")]
    SourceBelowDampingPlate { q: f64, r: f64 },
    #[error("p(m+1)/m = {value} not < 6")]
    SupercriticalProduct { value: f64 },
    #[error("c1 = {value} <= 3")]
    EulerWave { value: f64 },
    #[error("c3 = {value} <= 3")]
    EulerPlate { value: f64 },
    #[error("p = {p} must be < 5 in three dimensions")]
    ThreeDimExponent { p: f64 },
    #[error("dimension {dim} not supported (2 or 3)")]
    Dimension { dim: usize },
    #[error("derived exponent {name} = {value} violates {requirement}")]
    Derived {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

/// Every violation found by [`RawParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamErrors(pub Vec<ParamError>);

impl fmt::Display for ParamErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ParamErrors {}

/// Source and damping laws to validate against the exponents.
#[derive(Debug, Clone)]
pub struct Nonlinearities {
    pub wave_source: SourceLaw,
    pub plate_source: SourceLaw,
    pub wave_damping: DampingLaw,
    pub plate_damping: DampingLaw,
}

impl Nonlinearities {
    pub fn powers(raw: &RawParams) -> Self {
        let mut wave_damping = DampingLaw::power(raw.m, raw.alpha);
        let mut plate_damping = DampingLaw::power(raw.r, raw.alpha);
        wave_damping.beta = raw.beta;
        plate_damping.beta = raw.beta;
        Self {
            wave_source: SourceLaw::power(raw.p),
            plate_source: SourceLaw::power(raw.q),
            wave_damping,
            plate_damping,
        }
    }
}

/// Validated parameters with every derived exponent filled in.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    pub m: f64,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub wave_source: SourceLaw,
    pub plate_source: SourceLaw,
    pub wave_damping: DampingLaw,
    pub plate_damping: DampingLaw,
    /// `F(u) >= c0 |u|^{p+1}`
    pub c0: f64,
    /// `u f(u) >= c1 F(u)`
    pub c1: f64,
    /// `H(w) >= c2 |w|^{q+1}`
    pub c2: f64,
    /// `w h(w) >= c3 H(w)`
    pub c3: f64,
    /// Upper source bound for the wave source, `F(u) <= M_wave |u|^{p+1}`.
    pub bound_wave: f64,
    pub bound_plate: f64,
    /// `min{c1 - 3, c3 - 3}`
    pub lambda: f64,
    /// Open upper limit on `a`.
    pub a_limit: f64,
    /// Auxiliary exponent, half of `a_limit`.
    pub a: f64,
    pub mu: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma: f64,
}

impl RawParams {
    /// Validates with pure-power sources and dampings.
    pub fn validate(&self, dim: usize) -> Result<ModelParams, ParamErrors> {
        self.validate_with(dim, Nonlinearities::powers(self))
    }

    /// Validates against caller-supplied laws. The laws carry their own
    /// constants; the exponents in `self` must match them.
    pub fn validate_with(
        &self,
        dim: usize,
        laws: Nonlinearities,
    ) -> Result<ModelParams, ParamErrors> {
        let mut errs = Vec::new();
        let fields = [
            ("p", self.p),
            ("q", self.q),
            ("m", self.m),
            ("r", self.r),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                errs.push(ParamError::NonFinite { name, value });
            }
        }
        if !errs.is_empty() {
            return Err(ParamErrors(errs));
        }
        if dim != 2 && dim != 3 {
            errs.push(ParamError::Dimension { dim });
        }

        let Self {
            p,
            q,
            m,
            r,
            alpha,
            beta,
        } = *self;
        let mut range = |ok: bool, name, value, requirement| {
            if !ok {
                errs.push(ParamError::Range {
                    name,
                    value,
                    requirement,
                });
            }
        };
        range(p > 1.0, "p", p, "p > 1");
        range(q > 1.0, "q", q, "q > 1");
        range(m >= 1.0, "m", m, "m >= 1");
        range(r >= 1.0, "r", r, "r >= 1");
        range(alpha > 0.0, "alpha", alpha, "alpha > 0");
        range(beta >= alpha, "beta", beta, "beta >= alpha");
        range(laws.wave_source.c0 > 0.0, "c0", laws.wave_source.c0, "c0 > 0");
        range(laws.plate_source.c0 > 0.0, "c2", laws.plate_source.c0, "c2 > 0");
        range(
            laws.wave_source.bound > 0.0,
            "M",
            laws.wave_source.bound,
            "M > 0",
        );
        range(
            laws.plate_source.bound > 0.0,
            "M",
            laws.plate_source.bound,
            "M > 0",
        );

        if p <= m {
            errs.push(ParamError::SourceBelowDampingWave { p, m });
        }
        if q <= r {
            errs.push(ParamError::SourceBelowDampingPlate { q, r });
        }
        let product = p * (m + 1.0) / m;
        if !(product < 6.0) {
            errs.push(ParamError::SupercriticalProduct { value: product });
        }
        let c1 = laws.wave_source.c_euler;
        let c3 = laws.plate_source.c_euler;
        if !(c1 > 3.0) {
            errs.push(ParamError::EulerWave { value: c1 });
        }
        if !(c3 > 3.0) {
            errs.push(ParamError::EulerPlate { value: c3 });
        }
        if dim == 3 && !(p < 5.0) {
            errs.push(ParamError::ThreeDimExponent { p });
        }
        if !errs.is_empty() {
            return Err(ParamErrors(errs));
        }

        let a_limit = a_upper_limit(p, q, m, r);
        let a = 0.5 * a_limit;
        let mu = 1.0 / (1.0 - a);
        let sigma1 = 1.0 - 2.0 / ((1.0 - 2.0 * a) * (p + 1.0));
        let sigma2 = 1.0 - 2.0 / ((1.0 - 2.0 * a) * (q + 1.0));
        if !(a_limit > 0.0) {
            errs.push(ParamError::Derived {
                name: "a",
                value: a_limit,
                requirement: "positive interval for a",
            });
        }
        if !(sigma1 > 0.0) {
            errs.push(ParamError::Derived {
                name: "sigma1",
                value: sigma1,
                requirement: "sigma1 > 0",
            });
        }
        if !(sigma2 > 0.0) {
            errs.push(ParamError::Derived {
                name: "sigma2",
                value: sigma2,
                requirement: "sigma2 > 0",
            });
        }
        if !(mu > 1.0 && mu < 2.0) {
            errs.push(ParamError::Derived {
                name: "mu",
                value: mu,
                requirement: "1 < mu < 2",
            });
        }
        if !errs.is_empty() {
            return Err(ParamErrors(errs));
        }

        Ok(ModelParams {
            p,
            q,
            m,
            r,
            alpha,
            beta,
            dim,
            c0: laws.wave_source.c0,
            c1,
            c2: laws.plate_source.c0,
            c3,
            bound_wave: laws.wave_source.bound,
            bound_plate: laws.plate_source.bound,
            wave_source: laws.wave_source,
            plate_source: laws.plate_source,
            wave_damping: laws.wave_damping,
            plate_damping: laws.plate_damping,
            lambda: (c1 - 3.0).min(c3 - 3.0),
            a_limit,
            a,
            mu,
            sigma1,
            sigma2,
            sigma: sigma1.max(sigma2),
        })
    }
}

/// The strict upper limit on the auxiliary exponent `a`.
pub fn a_upper_limit(p: f64, q: f64, m: f64, r: f64) -> f64 {
    let candidates = [
        1.0 / (m + 1.0) - 1.0 / (p + 1.0),
        1.0 / (r + 1.0) - 1.0 / (q + 1.0),
        (p - 1.0) / (2.0 * (p + 1.0)),
        (q - 1.0) / (2.0 * (q + 1.0)),
    ];
    candidates.into_iter().fold(f64::INFINITY, f64::min)
}

impl ModelParams {
    /// Single source bound `M`: the larger of the two when they differ.
    pub fn source_bound(&self) -> f64 {
        self.bound_wave.max(self.bound_plate)
    }

    #[inline]
    pub fn eval_source_wave(&self, u: f64) -> (f64, f64) {
        self.wave_source.eval(u)
    }

    #[inline]
    pub fn eval_source_plate(&self, w: f64) -> (f64, f64) {
        self.plate_source.eval(w)
    }

    #[inline]
    pub fn eval_damping_wave(&self, s: f64) -> f64 {
        self.wave_damping.eval(s)
    }

    #[inline]
    pub fn eval_damping_plate(&self, s: f64) -> f64 {
        self.plate_damping.eval(s)
    }

    /// `sigma1` recomputed from `mu`: `1 - 2mu/((2-mu)(p+1))`.
    pub fn sigma1_from_mu(&self) -> f64 {
        1.0 - 2.0 * self.mu / ((2.0 - self.mu) * (self.p + 1.0))
    }

    pub fn sigma2_from_mu(&self) -> f64 {
        1.0 - 2.0 * self.mu / ((2.0 - self.mu) * (self.q + 1.0))
    }

    /// Multi-line summary used in reports.
    pub fn describe(&self) -> String {
        alloc::format!(
            "p={} q={} m={} r={} alpha={} beta={} dim={}\n\
             c0={} c1={} c2={} c3={} M={} lambda={}\n\
             a={} (limit {}) mu={} sigma1={} sigma2={} sigma={}",
            self.p,
            self.q,
            self.m,
            self.r,
            self.alpha,
            self.beta,
            self.dim,
            self.c0,
            self.c1,
            self.c2,
            self.c3,
            self.source_bound(),
            self.lambda,
            self.a,
            self.a_limit,
            self.mu,
            self.sigma1,
            self.sigma2,
            self.sigma
        )
    }
}

/// `F(t u) / F(u)` should be `t^{p+1}`; helper for the homogeneity check.
pub fn homogeneity_defect(law: &SourceLaw, u: f64, t: f64) -> f64 {
    let (_, big_f) = law.eval(u);
    let (_, scaled) = law.eval(t * u);
    let expected = powf(t, law.exponent + 1.0) * big_f;
    if expected == 0.0 {
        abs(scaled)
    } else {
        abs(scaled - expected) / abs(expected)
    }
}

/// `|u f(u) - (p+1) F(u)|` relative to `|u f(u)|`.
pub fn euler_defect(law: &SourceLaw, u: f64) -> f64 {
    let (f, big_f) = law.eval(u);
    let lhs = u * f;
    let rhs = (law.exponent + 1.0) * big_f;
    if lhs == 0.0 {
        abs(rhs)
    } else {
        abs(lhs - rhs) / abs(lhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn default_instance_derives_exponents() {
        let mp = RawParams::default().validate(2).unwrap();
        assert_eq!(mp.lambda, 1.0);
        // min{1/3-1/4, 1/3-1/4, 1/4, 1/4} = 1/12, halved
        assert!(close(mp.a_limit, 1.0 / 12.0, 1e-15));
        assert!(close(mp.a, 1.0 / 24.0, 1e-15));
        assert!(close(mp.mu, 24.0 / 23.0, 1e-15));
        assert!(mp.sigma1 > 0.0 && mp.sigma2 > 0.0);
        assert_eq!(mp.c0, 0.25);
        assert_eq!(mp.source_bound(), 0.25);
    }

    #[test]
    fn supercritical_product_boundary_rejected() {
        let raw = RawParams {
            m: 1.0,
            ..RawParams::default()
        };
        let err = raw.validate(2).unwrap_err();
        assert!(err.0.contains(&ParamError::SupercriticalProduct { value: 6.0 }));
        assert!(err.to_string().contains("p(m+1)/m = 6 not < 6"));
    }

    #[test]
    fn euler_constant_threshold() {
        let ok = RawParams {
            p: 2.5,
            ..RawParams::default()
        };
        assert!(ok.validate(2).is_ok());

        let bad = RawParams {
            p: 1.5,
            m: 1.2,
            ..RawParams::default()
        };
        let err = bad.validate(2).unwrap_err();
        assert!(err.0.contains(&ParamError::EulerWave { value: 2.5 }));
    }

    #[test]
    fn every_violation_reported() {
        let raw = RawParams {
            p: 1.5,
            q: 2.0,
            m: 2.0,
            r: 2.0,
            alpha: -1.0,
            beta: 1.0,
        };
        let err = raw.validate(2).unwrap_err();
        assert!(err.0.len() >= 4, "{err}");
    }

    #[test]
    fn three_dim_exponent_limit() {
        let raw = RawParams {
            p: 5.2,
            m: 4.0,
            ..RawParams::default()
        };
        // p >= 5 already breaks p(m+1)/m < 6 whenever p > m; the 3D rule is
        // reported on top of it
        let err2 = raw.validate(2).unwrap_err();
        assert!(!err2.0.contains(&ParamError::ThreeDimExponent { p: 5.2 }));
        let err = raw.validate(3).unwrap_err();
        assert!(err.0.contains(&ParamError::ThreeDimExponent { p: 5.2 }));
    }

    #[test]
    fn non_finite_rejected() {
        let raw = RawParams {
            p: f64::NAN,
            ..RawParams::default()
        };
        assert!(matches!(
            raw.validate(2).unwrap_err().0[0],
            ParamError::NonFinite { name: "p", .. }
        ));
    }

    #[test]
    fn pointwise_values() {
        let mp = RawParams::default().validate(2).unwrap();
        let (f, big_f) = mp.eval_source_wave(2.0);
        assert_eq!(f, 8.0);
        assert_eq!(big_f, 4.0);
        assert_eq!(2.0 * f, 4.0 * big_f);
        assert_eq!(mp.eval_source_wave(0.0), (0.0, 0.0));
        assert_eq!(mp.eval_damping_wave(0.0), 0.0);
        let g = mp.eval_damping_wave(-3.0);
        assert_eq!(g, -9.0);
        assert_eq!(g * -3.0, 27.0);
    }

    #[test]
    fn custom_source_metadata_drives_lambda() {
        let raw = RawParams::default();
        let mut laws = Nonlinearities::powers(&raw);
        // F(u) = 2|u|^4/4, same homogeneity, doubled bound
        laws.wave_source = SourceLaw::custom(
            3.0,
            0.5,
            4.0,
            0.5,
            Arc::new(|u: f64| (2.0 * u * u * u, 0.5 * u * u * u * u)),
        );
        let mp = raw.validate_with(2, laws).unwrap();
        assert_eq!(mp.source_bound(), 0.5);
        assert_eq!(mp.c0, 0.5);
        assert_eq!(mp.eval_source_wave(1.0), (2.0, 0.5));
    }

    #[test]
    fn sigma_from_mu_matches() {
        let mp = RawParams::default().validate(2).unwrap();
        assert!((mp.sigma1 - mp.sigma1_from_mu()).abs() < 1e-14);
        assert!((mp.sigma2 - mp.sigma2_from_mu()).abs() < 1e-14);
    }
}
