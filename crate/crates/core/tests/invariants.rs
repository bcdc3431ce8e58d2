use proptest::prelude::*;

use wavewall_core::constants::{plate_quotient, wave_quotient};
use wavewall_core::functionals::{classify_well, y_functional, FieldIntegrals, Fiber};
use wavewall_core::params::{euler_defect, homogeneity_defect, SourceLaw};
use wavewall_core::sampling::{random_omega, random_state};
use wavewall_core::{Geometry, Mesh, RawParams, WellClass};

fn mesh(n: usize, dim: usize) -> Mesh {
    Mesh::build(&Geometry { n, dim, ..Geometry::default() }).unwrap()
}

proptest! {
    #[test]
    fn power_law_is_homogeneous(p in 1.05f64..4.9, u in -50.0f64..50.0, t in 0.01f64..20.0) {
        let law = SourceLaw::power(p);
        prop_assert!(homogeneity_defect(&law, u, t) < 1e-12);
        prop_assert!(euler_defect(&law, u) < 1e-12);
    }

    #[test]
    fn random_states_are_admissible(seed in any::<u64>(), dim in 2usize..=3) {
        let m = mesh(9, dim);
        prop_assert!(random_state(&m, seed).satisfies_masks(&m));
    }

    #[test]
    fn wave_operator_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let m = mesh(17, 2);
        let (u, v) = (random_omega(&m, a), random_omega(&m, b));
        let zero = vec![0.0; m.gamma_len()];
        let au = m.wave_operator(&u, &zero).unwrap();
        let av = m.wave_operator(&v, &zero).unwrap();
        let (l, r) = (m.inner_omega(&au, &v), m.inner_omega(&u, &av));
        let energy = m.grad_inner(&u, &v) + m.inner_omega(&u, &v);
        prop_assert!((l - r).abs() < 1e-10 * (1.0 + l.abs()));
        prop_assert!((l - energy).abs() < 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn plate_operator_matches_weak_form(seed in any::<u64>()) {
        let m = mesh(17, 2);
        let s = random_state(&m, seed);
        let bw = m.plate_operator(&s.w).unwrap();
        let weak = m.inner_gamma(&m.laplacian_gamma(&s.w), &m.laplacian_gamma(&s.wt));
        let strong = m.inner_gamma(&bw, &s.wt);
        prop_assert!((weak - strong).abs() < 1e-9 * (1.0 + weak.abs()));
    }

    #[test]
    fn quotients_are_scale_invariant(seed in any::<u64>(), t in 1e-3f64..1e3) {
        let m = mesh(17, 2);
        let s = random_state(&m, seed);
        let su: Vec<f64> = s.u.iter().map(|x| x * t).collect();
        let sw: Vec<f64> = s.w.iter().map(|x| x * t).collect();
        let (a, b) = (wave_quotient(&m, &s.u, 3.0), wave_quotient(&m, &su, 3.0));
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let (a, b) = (plate_quotient(&m, &s.w, 2.5), plate_quotient(&m, &sw, 2.5));
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn fiber_matches_scaled_potential(seed in any::<u64>(), lam in 0.01f64..30.0) {
        let m = mesh(9, 2);
        let params = RawParams { q: 2.5, ..RawParams::default() }.validate(2).unwrap();
        let s = random_state(&m, seed);
        let fib = Fiber::of(&FieldIntegrals::of_displacement(&s.u, &s.w, &m, &params), &params);
        let scaled = s.scaled(lam);
        let j = FieldIntegrals::of_displacement(&scaled.u, &scaled.w, &m, &params).potential();
        prop_assert!((fib.value(lam) - j).abs() < 1e-10 * (1.0 + j.abs()));
    }

    #[test]
    fn rays_cross_the_nehari_manifold_once(seed in any::<u64>()) {
        let m = mesh(9, 2);
        let params = RawParams::default().validate(2).unwrap();
        let s = random_state(&m, seed);
        let fib = Fiber::of(&FieldIntegrals::of_displacement(&s.u, &s.w, &m, &params), &params);
        let star = fib.maximizer().unwrap();
        let depth = f64::INFINITY;
        let below = s.scaled(0.5 * star);
        let above = s.scaled(2.0 * star);
        prop_assert_eq!(classify_well(&below.u, &below.w, &m, &params, depth), WellClass::W1);
        prop_assert_eq!(classify_well(&above.u, &above.w, &m, &params, depth), WellClass::W2);
        let top = s.scaled(star);
        let at = fib.max_value().unwrap() * (1.0 - 1e-9);
        prop_assert_eq!(classify_well(&top.u, &top.w, &m, &params, at), WellClass::Outside);
    }

    #[test]
    fn y_functional_is_linear_in_n_prime(base in 1e-6f64..1e6, np in -1e3f64..1e3, eps in 0.0f64..1.0, a in 0.0f64..0.4) {
        let y = y_functional(base, np, eps, a).unwrap();
        prop_assert!((y - base.powf(1.0 - a) - eps * np).abs() < 1e-9 * (1.0 + y.abs()));
    }
}

#[test]
fn y_functional_rejects_nonpositive_base() {
    assert!(y_functional(0.0, 1.0, 0.1, 0.2).is_err());
    assert!(y_functional(-1.0, 1.0, 0.1, 0.2).is_err());
}
