//! Blow-up diagnostics for the negative- and positive-energy regimes: hypothesis checks, the
//! choice of `ε`, the fit of `Y' >= κ Y^μ` along a trajectory, the
//! comparison lifespan and the per-sample positive-energy checks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::constants::{solve_y1, WellConstants};
use crate::functionals::{classify_integrals, EnergySnapshot, FieldIntegrals, WellClass};
use crate::integrator::RunRecord;
use crate::math::powf;
use crate::mesh::{Mesh, State};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `𝓔(0) < 0`.
    NegativeEnergy,
    /// `E(0) > y0` and `0 <= 𝓔(0) < min{A, d̂}`.
    PositiveEnergy,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::NegativeEnergy => "negative_energy",
            Scenario::PositiveEnergy => "positive_energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BlowupError {
    #[error("blow-up functional undefined; check total-energy sign condition (G(0) = {0})")]
    NonPositiveDeficit(f64),
    #[error("trajectory window is empty")]
    EmptyWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub name: &'static str,
    /// Human-readable form of the condition, e.g. `"totalE(0) < 0"`.
    pub condition: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub scenario: Scenario,
    pub entries: Vec<Hypothesis>,
    pub total_energy: f64,
    pub quadratic_energy: f64,
    /// `‖(u0, w0)‖²` in the energy space.
    pub norm_sq: f64,
    pub class: WellClass,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|h| h.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Hypothesis> {
        self.entries.iter().find(|h| h.name == name)
    }
}

fn entry(name: &'static str, condition: String, value: f64, threshold: f64, passed: bool) -> Hypothesis {
    Hypothesis {
        name,
        condition,
        value,
        threshold,
        passed,
    }
}

/// Evaluates every hypothesis of the scenario. Failures are reported, never
/// raised. For the positive-energy case the report also walks the chain
/// `W2 ⇒ ‖(u0,w0)‖² > 2y0 ⇒ E(0) > y0`.
pub fn check_hypotheses(
    initial: &State,
    constants: &WellConstants,
    mesh: &Mesh,
    params: &ModelParams,
    scenario: Scenario,
) -> HypothesisReport {
    let ints = FieldIntegrals::of(initial, mesh, params);
    let total = ints.total_energy();
    let quad = ints.quadratic_energy();
    let norm_sq = ints.stiffness();
    let zero = initial.u.iter().chain(&initial.w).all(|v| *v == 0.0);
    let class = classify_integrals(&ints, constants.d_upper, zero);

    let mut entries = alloc::vec![
        entry("p>m", alloc::format!("p = {} > m = {}", params.p, params.m), params.p, params.m, params.p > params.m),
        entry("q>r", alloc::format!("q = {} > r = {}", params.q, params.r), params.q, params.r, params.q > params.r),
    ];
    match scenario {
        Scenario::NegativeEnergy => {
            entries.push(entry("totalE(0)<0", alloc::format!("totalE(0) = {total} < 0"), total, 0.0, total < 0.0));
        }
        Scenario::PositiveEnergy => {
            let ceiling = constants.positive_energy_ceiling();
            entries.push(entry("totalE(0)>=0", alloc::format!("totalE(0) = {total} >= 0"), total, 0.0, total >= 0.0));
            entries.push(entry(
                "totalE(0)<min(A,dhat)",
                alloc::format!("totalE(0) = {total} < min(A, dhat) = {ceiling}"),
                total,
                ceiling,
                total < ceiling,
            ));
            entries.push(entry(
                "E(0)>y0",
                alloc::format!("E(0) = {quad} > y0 = {}", constants.y0),
                quad,
                constants.y0,
                quad > constants.y0,
            ));
            if class == WellClass::W2 {
                let two_y0 = 2.0 * constants.y0;
                entries.push(entry(
                    "W2=>norm^2>2y0",
                    alloc::format!("W2 datum: |(u0,w0)|^2 = {norm_sq} > 2 y0 = {two_y0}"),
                    norm_sq,
                    two_y0,
                    norm_sq > two_y0,
                ));
                entries.push(entry(
                    "norm^2>2y0=>E(0)>y0",
                    alloc::format!("E(0) = {quad} >= |(u0,w0)|^2 / 2 = {}", 0.5 * norm_sq),
                    quad,
                    0.5 * norm_sq,
                    quad >= 0.5 * norm_sq && 0.5 * norm_sq > constants.y0,
                ));
            }
        }
    }
    HypothesisReport {
        scenario,
        entries,
        total_energy: total,
        quadratic_energy: quad,
        norm_sq,
        class,
    }
}

/// Young's inequality constant: `ab <= δ a^{k+1} + C_δ b^{(k+1)/k}` with
/// `C_δ = (δ(k+1))^{-1/k} k/(k+1)`.
pub fn young_constant(delta: f64, k: f64) -> f64 {
    powf(delta * (k + 1.0), -1.0 / k) * k / (k + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonChoice {
    pub eps: f64,
    /// `-G0^{1-a} / (2 N'(0))` when `N'(0) < 0`, else `+∞`.
    pub barrier: f64,
    /// Largest `ε` keeping the coefficient `ρ >= (1-a)/2`.
    pub rho_budget: f64,
    pub y0: f64,
    /// `Y(0) >= G0^{1-a} / 2`.
    pub guarantee: bool,
}

/// Chooses `ε = min{1, G0, ρ-budget, barrier}`.
///
/// The ρ-budget bounds the damping terms that `εN''` picks up: each is split
/// by Young's inequality with the `δ` fixed below, and `ε` is kept small
/// enough that those terms eat at most half of `(1-a)`.
pub fn select_epsilon(
    g0: f64,
    n0_prime: f64,
    params: &ModelParams,
    mesh: &Mesh,
    scenario: Scenario,
) -> Result<EpsilonChoice, BlowupError> {
    if !(g0 > 0.0) {
        return Err(BlowupError::NonPositiveDeficit(g0));
    }
    let (p, q, m, r, a) = (params.p, params.q, params.m, params.r, params.a);
    let share = match scenario {
        Scenario::NegativeEnergy => 0.25,
        Scenario::PositiveEnergy => 0.125,
    };
    let delta1 = share * params.lambda * powf(g0, 1.0 / (m + 1.0) - 1.0 / (p + 1.0));
    let delta2 = share * params.lambda * powf(g0, 1.0 / (r + 1.0) - 1.0 / (q + 1.0));
    let r1 = params.beta * powf(mesh.omega_measure(), (p - m) / ((p + 1.0) * (m + 1.0))) * powf(params.c0, -1.0 / (p + 1.0));
    let r2 = params.beta * powf(mesh.gamma_measure(), (q - r) / ((q + 1.0) * (r + 1.0))) * powf(params.c2, -1.0 / (q + 1.0));
    let sum = young_constant(delta1, m) * powf(r1, (m + 1.0) / m) / params.alpha
        * powf(g0, a + 1.0 / (p + 1.0) - 1.0 / (m + 1.0))
        + young_constant(delta2, r) * powf(r2, (r + 1.0) / r) / params.alpha
            * powf(g0, a + 1.0 / (q + 1.0) - 1.0 / (r + 1.0));
    let rho_budget = if sum > 0.0 {
        (1.0 - a) / (2.0 * sum)
    } else {
        f64::INFINITY
    };
    let base = powf(g0, 1.0 - a);
    let barrier = if n0_prime < 0.0 {
        -base / (2.0 * n0_prime)
    } else {
        f64::INFINITY
    };
    let eps = 1.0f64.min(g0).min(rho_budget).min(barrier);
    let y0 = base + eps * n0_prime;
    Ok(EpsilonChoice {
        eps,
        barrier,
        rho_budget,
        y0,
        guarantee: y0 >= 0.5 * base,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityFit {
    /// `max(0, min Y'/Y^μ)` over the window.
    pub kappa: f64,
    /// Fraction of samples with `Y' < 0`.
    pub violation_fraction: f64,
    pub samples: usize,
}

/// Fits `Y' >= κ Y^μ` on `(times, ys)`, dropping the final 5% of the time
/// span. `Y'` comes from three-point centred differences on the
/// (possibly non-uniform) grid.
pub fn fit_inequality(times: &[f64], ys: &[f64], mu: f64) -> Result<InequalityFit, BlowupError> {
    let n = times.len().min(ys.len());
    if n < 3 {
        return Err(BlowupError::EmptyWindow);
    }
    let cut = times[0] + 0.95 * (times[n - 1] - times[0]);
    let mut kappa = f64::INFINITY;
    let mut violations = 0;
    let mut samples = 0;
    for i in 1..n - 1 {
        if times[i + 1] > cut {
            break;
        }
        let (hm, hp) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        let dy = (hm * hm * ys[i + 1] - hp * hp * ys[i - 1] - (hm * hm - hp * hp) * ys[i]) / (hm * hp * (hm + hp));
        if !dy.is_finite() || !(ys[i] > 0.0) {
            continue;
        }
        samples += 1;
        if dy < 0.0 {
            violations += 1;
        }
        kappa = kappa.min(dy / powf(ys[i], mu));
    }
    if samples == 0 {
        return Err(BlowupError::EmptyWindow);
    }
    Ok(InequalityFit {
        kappa: kappa.max(0.0),
        violation_fraction: violations as f64 / samples as f64,
        samples,
    })
}

/// Blow-up time of `y' = κ y^μ`, `y(0) = Y0`; `+∞` when `κ <= 0`.
pub fn comparison_lifespan(y0: f64, kappa: f64, mu: f64) -> f64 {
    if !(kappa > 0.0) {
        return f64::INFINITY;
    }
    powf(y0, 1.0 - mu) / (kappa * (mu - 1.0))
}

/// Worst margins of the per-sample positive-energy checks (negative margin
/// means violation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveEnergyReport {
    pub y1: f64,
    /// `min (𝓖(t) - 𝓖(0))` allowing the accumulated defect.
    pub calg_monotone: f64,
    pub calg0: f64,
    /// `min (𝓔(t) - F1(E(t)))`.
    pub f1_margin: f64,
    /// `min (E(t) - y1)`.
    pub y1_margin: f64,
    /// `min (S(t) - 𝓖(t))`.
    pub source_margin: f64,
    pub violations: usize,
    pub samples: usize,
}

impl PositiveEnergyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.calg0 > 0.0
    }
}

/// Per-sample checks over the rows outside the final 5% of `record`.
pub fn positive_energy_quantities(record: &RunRecord, constants: &WellConstants) -> PositiveEnergyReport {
    let rows = &record.snapshots[..record.valid_rows];
    let first = rows[0];
    let y1 = solve_y1(first.total, constants).unwrap_or(f64::NAN);
    let calg = |s: &EnergySnapshot| constants.a_threshold - s.total;
    let calg0 = calg(&first);
    let mut out = PositiveEnergyReport {
        y1,
        calg_monotone: f64::INFINITY,
        calg0,
        f1_margin: f64::INFINITY,
        y1_margin: f64::INFINITY,
        source_margin: f64::INFINITY,
        violations: 0,
        samples: rows.len(),
    };
    let mut drift = 0.0;
    for (k, s) in rows.iter().enumerate() {
        drift += record.rows[k].defect;
        let tol = drift + 1e-12 * (1.0 + s.quadratic);
        let margins = [
            calg(s) - calg0 + tol,
            s.total - constants.f1(s.quadratic) + tol,
            s.quadratic - y1 + tol,
            s.source - calg(s) + tol,
        ];
        out.calg_monotone = out.calg_monotone.min(margins[0] - tol);
        out.f1_margin = out.f1_margin.min(margins[1] - tol);
        out.y1_margin = out.y1_margin.min(margins[2] - tol);
        out.source_margin = out.source_margin.min(margins[3] - tol);
        if margins.iter().any(|m| !(*m >= 0.0)) {
            out.violations += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupVerdict {
    pub scenario: Scenario,
    pub eps: EpsilonChoice,
    pub a: f64,
    pub mu: f64,
    pub sigma: f64,
    pub fit: Option<InequalityFit>,
    pub kappa_fit: f64,
    pub t_comparison: f64,
    pub t_blow_observed: Option<f64>,
    /// One output stride: the uncertainty on `t_blow`.
    pub t_blow_pad: f64,
    pub hypotheses: HypothesisReport,
    /// Fraction of rows with `G` non-decreasing within the step defect.
    pub g_monotone_fraction: f64,
    /// Fraction of rows with `Y` non-decreasing.
    pub y_monotone_fraction: f64,
    /// Whether `G(0) <= G(t) <= S(t)` held at every valid row.
    pub g_bounds_hold: bool,
}

impl BlowupVerdict {
    /// `t_blow <= (1 + slack) T_comparison`, padded by one stride.
    pub fn within_comparison(&self, slack: f64) -> bool {
        match self.t_blow_observed {
            Some(t) => t - self.t_blow_pad <= (1.0 + slack) * self.t_comparison,
            None => false,
        }
    }
}

/// Deficit `G` (or `𝓖`) and `Y` recomputed for the verdict's frame.
fn deficit(s: &EnergySnapshot, scenario: Scenario, constants: &WellConstants) -> f64 {
    match scenario {
        Scenario::NegativeEnergy => -s.total,
        Scenario::PositiveEnergy => constants.a_threshold - s.total,
    }
}

/// Post-processes a run: fits the differential inequality on `Y` and
/// compares the observed blow-up time with the comparison lifespan.
pub fn assess(
    record: &RunRecord,
    hypotheses: HypothesisReport,
    eps: EpsilonChoice,
    params: &ModelParams,
    constants: &WellConstants,
) -> BlowupVerdict {
    let scenario = hypotheses.scenario;
    let rows = &record.snapshots[..record.valid_rows];
    let a = params.a;
    let times: Vec<f64> = rows.iter().map(|s| s.time).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|s| {
            let g = deficit(s, scenario, constants);
            if g > 0.0 {
                powf(g, 1.0 - a) + eps.eps * s.n_prime
            } else {
                f64::NAN
            }
        })
        .collect();
    let fit = fit_inequality(&times, &ys, params.mu).ok();
    let kappa_fit = fit.map(|f| f.kappa).unwrap_or(0.0);
    let y_start = ys.first().copied().unwrap_or(f64::NAN);
    let t_comparison = comparison_lifespan(y_start, kappa_fit, params.mu);

    let g0 = deficit(&rows[0], scenario, constants);
    let mut g_ok = 0;
    let mut y_ok = 0;
    let mut bounds = g0 > 0.0;
    let mut drift = 0.0;
    for k in 1..rows.len() {
        drift += record.rows[k].defect;
        let tol = record.rows[k].defect + 1e-12 * (1.0 + rows[k].quadratic);
        let (gp, gk) = (deficit(&rows[k - 1], scenario, constants), deficit(&rows[k], scenario, constants));
        if gk >= gp - tol {
            g_ok += 1;
        }
        if ys[k] >= ys[k - 1] - tol {
            y_ok += 1;
        }
        let btol = drift + 1e-12 * (1.0 + rows[k].quadratic);
        if scenario == Scenario::NegativeEnergy && !(gk >= g0 - btol && gk <= rows[k].source + btol) {
            bounds = false;
        }
    }
    let pairs = (rows.len() - 1).max(1) as f64;
    let stride_pad = record
        .snapshots
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .fold(0.0, f64::max);
    BlowupVerdict {
        scenario,
        eps,
        a,
        mu: params.mu,
        sigma: params.sigma,
        fit,
        kappa_fit,
        t_comparison,
        t_blow_observed: record.t_blow(),
        t_blow_pad: stride_pad,
        hypotheses,
        g_monotone_fraction: g_ok as f64 / pairs,
        y_monotone_fraction: y_ok as f64 / pairs,
        g_bounds_hold: bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Geometry;
    use crate::params::RawParams;

    #[test]
    fn lifespan_closed_forms() {
        assert!((comparison_lifespan(1.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((comparison_lifespan(4.0, 1.0, 1.5) - 1.0).abs() < 1e-15);
        assert!(comparison_lifespan(1.0, 0.0, 1.5).is_infinite());
        assert!(comparison_lifespan(1.0, 1e-300, 1.5) > 1e290);
    }

    #[test]
    fn fit_on_exponential() {
        let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|s| s.exp()).collect();
        let fit = fit_inequality(&t, &y, 1.5).unwrap();
        // window ends at 0.95 * 2 = 1.9
        let t_max = t.iter().filter(|s| **s < 1.9).fold(0.0f64, |a, b| a.max(*b));
        assert!((fit.kappa - (-t_max / 2.0).exp()).abs() < 1e-3);
        assert_eq!(fit.violation_fraction, 0.0);
    }

    #[test]
    fn fit_on_constant_and_nonuniform() {
        let t: Vec<f64> = (0..50).map(|k| (k as f64).powf(1.3)).collect();
        let fit = fit_inequality(&t, &alloc::vec![2.0; 50], 1.2).unwrap();
        assert_eq!(fit.kappa, 0.0);
        // quadratic Y is differentiated exactly on any grid
        let y: Vec<f64> = t.iter().map(|s| 1.0 + s * s).collect();
        let fit = fit_inequality(&t, &y, 1.0).unwrap();
        let expect = t[1..]
            .iter()
            .zip(&y[1..])
            .take(fit.samples)
            .map(|(s, v)| 2.0 * s / v)
            .fold(f64::INFINITY, f64::min);
        assert!((fit.kappa - expect).abs() < 1e-12);
        assert!(fit_inequality(&t[..2], &y[..2], 1.0).is_err());
    }

    #[test]
    fn epsilon_branches() {
        let mesh = Mesh::build(&Geometry::default()).unwrap();
        let params = RawParams::default().validate(2).unwrap();
        let e = select_epsilon(1.0, 0.0, &params, &mesh, Scenario::NegativeEnergy).unwrap();
        assert!(e.barrier.is_infinite());
        assert_eq!(e.eps, 1.0f64.min(e.rho_budget));

        let mut half = params.clone();
        half.a = 0.5;
        let e = select_epsilon(4.0, -1.0, &half, &mesh, Scenario::NegativeEnergy).unwrap();
        assert!((e.barrier - 1.0).abs() < 1e-15);
        assert!(e.eps <= 1.0 && e.guarantee);

        for (g0, np) in [(0.01, -5.0), (3.0, -100.0), (1e-4, 1.0), (50.0, -0.1)] {
            let e = select_epsilon(g0, np, &params, &mesh, Scenario::PositiveEnergy).unwrap();
            assert!(e.eps > 0.0);
            assert!(e.y0 >= 0.5 * powf(g0, 1.0 - params.a));
        }
        assert!(select_epsilon(0.0, 1.0, &params, &mesh, Scenario::NegativeEnergy).is_err());
    }

    #[test]
    fn young_inequality_holds() {
        for (a, b, d, k) in [(0.3, 2.0, 0.5, 2.0), (4.0, 0.1, 3.0, 1.5), (1.0, 1.0, 0.01, 3.0)] {
            let c = young_constant(d, k);
            assert!(a * b <= d * powf(a, k + 1.0) + c * powf(b, (k + 1.0) / k) + 1e-14);
        }
        // equality at the optimal pair b = δ(k+1) a^k
        let (a, d, k) = (0.7f64, 0.4, 2.0);
        let b = d * (k + 1.0) * a.powf(k);
        let c = young_constant(d, k);
        assert!((a * b - d * a.powf(k + 1.0) - c * b.powf((k + 1.0) / k)).abs() < 1e-14);
    }

    #[test]
    fn zero_data_fails_negative_energy() {
        let mesh = Mesh::build(&Geometry::default()).unwrap();
        let params = RawParams::default().validate(2).unwrap();
        let c = WellConstants::from_scalars(0.25, 1.0, 1.0, 3.0, 3.0, 1.0).unwrap();
        let rep = check_hypotheses(&State::zeros(&mesh), &c, &mesh, &params, Scenario::NegativeEnergy);
        assert!(!rep.passed());
        assert!(!rep.get("totalE(0)<0").unwrap().passed);
        assert!(rep.get("p>m").unwrap().passed);
    }
}
