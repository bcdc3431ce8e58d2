// Values with closed forms, checked against the public API.

use wavewall_core::blowup::{comparison_lifespan, fit_inequality, young_constant};
use wavewall_core::constants::{big_lambda, f1, solve_y1};
use wavewall_core::functionals::{FieldIntegrals, Fiber};
use wavewall_core::params::RawParams;
use wavewall_core::{Geometry, Mesh, WellConstants};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn equal_exponents_give_closed_form_thresholds() {
    // p = q = 3, M = 1, K1 = K2 = k: y0 = 1/(16k), dhat = y0/2, ystar² = 2 y0
    for k in [1e-4, 3e-3, 0.02, 0.5] {
        let c = WellConstants::from_scalars(1.0, k, k, 3.0, 3.0, 1.0).unwrap();
        let y0 = 1.0 / (16.0 * k);
        assert!(close(c.y0, y0, 1e-12), "{} vs {}", c.y0, y0);
        assert!(close(c.dhat, 0.5 * y0, 1e-12));
        assert!(close(c.ystar * c.ystar, 2.0 * y0, 1e-12));
        assert!(close(c.a_threshold, y0 / 14.0, 1e-12));
    }
}

#[test]
fn merged_sources_match_power_formula() {
    // with p = q the two sources merge into K = K1 + K2:
    // y0 = (MK(p+1))^{-2/(p-1)}/2 and dhat = y0 (p-1)/(p+1)
    let (m, k1, k2, p) = (1.5, 0.006, 0.004, 4.0);
    let c = WellConstants::from_scalars(m, k1, k2, p, p, 1.0).unwrap();
    let y0 = 0.5 * (m * (k1 + k2) * (p + 1.0)).powf(-2.0 / (p - 1.0));
    assert!(close(c.y0, y0, 1e-12));
    assert!(close(c.dhat, y0 * (p - 1.0) / (p + 1.0), 1e-12));
}

#[test]
fn f1_and_lambda_agree_on_the_square_root() {
    let (m, k1, k2, p, q) = (1.0, 0.01, 0.003, 3.0, 2.5);
    for y in [0.1f64, 1.0, 4.0] {
        let lam = big_lambda(m, k1, k2, p, q, (2.0 * y).sqrt());
        assert!(close(lam, f1(m, k1, k2, p, q, y), 1e-13));
    }
}

#[test]
fn y1_sits_past_y0_on_the_f1_branch() {
    let c = WellConstants::from_scalars(1.0, 0.01, 0.01, 3.0, 3.0, 1.0).unwrap();
    for frac in [0.0, 0.3, 0.9] {
        let e0 = frac * c.dhat;
        let y1 = solve_y1(e0, &c).unwrap();
        assert!(y1 > c.y0);
        assert!((c.f1(y1) - e0).abs() < 1e-10 * (1.0 + c.dhat));
    }
    assert!(solve_y1(c.dhat * 1.01, &c).is_err());
}

#[test]
fn comparison_lifespan_of_known_ode() {
    // y' = 2 y², y(0) = 1 blows up at 1/2
    assert!(close(comparison_lifespan(1.0, 2.0, 2.0), 0.5, 1e-15));
    assert_eq!(comparison_lifespan(1.0, 0.0, 2.0), f64::INFINITY);
}

#[test]
fn fit_recovers_riccati_rate() {
    // y = 1/(1 - t) satisfies y' = y², so κ = 1 for μ = 2
    let times: Vec<f64> = (0..400).map(|i| 0.9 * i as f64 / 399.0).collect();
    let ys: Vec<f64> = times.iter().map(|t| 1.0 / (1.0 - t)).collect();
    let fit = fit_inequality(&times, &ys, 2.0).unwrap();
    assert!((fit.kappa - 1.0).abs() < 2e-3, "{}", fit.kappa);
}

#[test]
fn young_constant_is_tight() {
    // sup over a of ab - δa^{k+1} equals C_δ b^{(k+1)/k}
    let (delta, k, b) = (0.3, 2.0, 1.7);
    let c = young_constant(delta, k);
    let best = (1..20000)
        .map(|i| i as f64 * 1e-3)
        .map(|a| a * b - delta * a.powf(k + 1.0))
        .fold(f64::MIN, f64::max);
    assert!(close(best, c * b.powf((k + 1.0) / k), 1e-5));
}

#[test]
fn fiber_maximum_for_a_single_power() {
    // φ(λ) = Qλ²/2 - bλ⁴ peaks at λ² = Q/(4b) with value Q²/(16b)
    let mesh = Mesh::build(&Geometry { n: 17, ..Geometry::default() }).unwrap();
    let params = RawParams::default().validate(2).unwrap();
    let u = mesh.omega_field(|[x, y, _]| (std::f64::consts::PI * x).sin() * y);
    let w = vec![0.0; mesh.gamma_len()];
    let ints = FieldIntegrals::of_displacement(&u, &w, &mesh, &params);
    let fib = Fiber::of(&ints, &params);
    let (q, b) = (fib.stiffness, fib.wave);
    assert!(close(fib.maximizer().unwrap(), (q / (4.0 * b)).sqrt(), 1e-12));
    assert!(close(fib.max_value().unwrap(), q * q / (16.0 * b), 1e-12));
}
