//! Seeded random admissible fields: smooth combinations of low modes that
//! vanish on Γ0 (chamber) or satisfy the clamped conditions (wall).

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::sin;
use crate::mesh::{Mesh, State};

const MODES: usize = 4;

pub fn random_omega_field(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = mesh.dim;
    let combos = MODES.pow(dim as u32);
    let coeffs: Vec<(f64, [usize; 3])> = (0..combos)
        .map(|c| {
            let mut k = [1usize; 3];
            let mut rest = c;
            let mut decay = 1.0;
            for slot in k.iter_mut().take(dim) {
                *slot = rest % MODES + 1;
                rest /= MODES;
                decay *= *slot as f64;
            }
            (rng.gen_range(-1.0..1.0) / decay, k)
        })
        .collect();
    let mut field = mesh.omega_field(|x| {
        coeffs
            .iter()
            .map(|(a, k)| {
                let mut v = *a;
                for axis in 0..dim {
                    let t = x[axis] / mesh.extents[axis];
                    v *= if axis == dim - 1 {
                        // zero at the floor, zero slope at the wall
                        sin((k[axis] as f64 - 0.5) * PI * t)
                    } else {
                        sin(k[axis] as f64 * PI * t)
                    };
                }
                v
            })
            .sum()
    });
    mesh.mask_omega(&mut field);
    field
}

pub fn random_gamma_field(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gd = mesh.dim - 1;
    let combos = MODES.pow(gd as u32);
    let coeffs: Vec<(f64, [usize; 2])> = (0..combos)
        .map(|c| {
            let mut k = [1usize; 2];
            let mut rest = c;
            let mut decay = 1.0;
            for slot in k.iter_mut().take(gd) {
                *slot = rest % MODES + 1;
                rest /= MODES;
                decay *= *slot as f64;
            }
            (rng.gen_range(-1.0..1.0) / decay, k)
        })
        .collect();
    let mut field = mesh.gamma_field(|x| {
        coeffs
            .iter()
            .map(|(a, k)| {
                let mut v = *a;
                for axis in 0..gd {
                    let t = x[axis] / mesh.extents[axis];
                    // sin(πt) sin(kπt): zero value and slope at both ends
                    v *= sin(PI * t) * sin(k[axis] as f64 * PI * t);
                }
                v
            })
            .sum()
    });
    mesh.mask_gamma(&mut field);
    field
}

/// A random admissible chamber field from a seed.
pub fn random_omega(mesh: &Mesh, seed: u64) -> Vec<f64> {
    random_omega_field(mesh, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Displacements and velocities all drawn from one seeded stream.
pub fn random_state(mesh: &Mesh, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    State {
        u: random_omega_field(mesh, &mut rng),
        ut: random_omega_field(mesh, &mut rng),
        w: random_gamma_field(mesh, &mut rng),
        wt: random_gamma_field(mesh, &mut rng),
        time: 0.0,
    }
}
