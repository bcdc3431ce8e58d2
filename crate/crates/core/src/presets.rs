//! Named initial data and the amplitude search that places them in a
//! requested regime.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::functionals::FieldIntegrals;
use crate::math::sin;
use crate::mesh::{Mesh, State};
use crate::params::ModelParams;
use crate::roots::{bisect, BISECTION_MAX_ITER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    BumpWave,
    BumpPlate,
    BumpBoth,
    W1Small,
    W2Large,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::BumpWave,
        Preset::BumpPlate,
        Preset::BumpBoth,
        Preset::W1Small,
        Preset::W2Large,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BumpWave => "bump_wave",
            Preset::BumpPlate => "bump_plate",
            Preset::BumpBoth => "bump_both",
            Preset::W1Small => "W1_small",
            Preset::W2Large => "W2_large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PresetError {
    #[error("unknown preset '{0}' (expected bump_wave, bump_plate, bump_both, W1_small or W2_large)")]
    Unknown(alloc::string::String),
    #[error("requested condition is infeasible within the amplitude bracket: {0}")]
    Infeasible(&'static str),
}

impl FromStr for Preset {
    type Err = PresetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| PresetError::Unknown(s.into()))
    }
}

/// `sin²` bump supported on `[0.2, 0.8]` of the unit interval.
fn bump(t: f64) -> f64 {
    if (0.2..=0.8).contains(&t) {
        let s = sin(PI * (t - 0.2) / 0.6);
        s * s
    } else {
        0.0
    }
}

/// Zero initial velocities; displacements are products of `sin²` bumps.
pub fn preset_initial_data(preset: Preset, amplitude: f64, mesh: &Mesh) -> State {
    let mut s = State::zeros(mesh);
    let wave = matches!(preset, Preset::BumpWave | Preset::BumpBoth | Preset::W1Small | Preset::W2Large);
    let plate = matches!(preset, Preset::BumpPlate | Preset::BumpBoth | Preset::W1Small | Preset::W2Large);
    if wave {
        s.u = mesh.omega_field(|x| {
            (0..mesh.dim)
                .map(|k| bump(x[k] / mesh.extents[k]))
                .product::<f64>()
                * amplitude
        });
    }
    if plate {
        s.w = mesh.gamma_field(|x| {
            (0..mesh.dim - 1)
                .map(|k| {
                    let v = sin(PI * x[k] / mesh.extents[k]);
                    v * v
                })
                .product::<f64>()
                * amplitude
        });
    }
    s.enforce_masks(mesh);
    s
}

/// What the amplitude search should achieve. Velocities are zero, so
/// `𝓔(0) = J(u0, w0)` throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `S(0) = ratio · E(0)`; with `ratio > 1` this gives `𝓔(0) < 0`.
    NegativeEnergy { ratio: f64 },
    /// `𝓔(0) = level` on the branch past the fiber maximum (Nehari value < 0).
    UnstableWell { level: f64 },
    /// `𝓔(0) = level` below the fiber maximum (Nehari value > 0).
    StableWell { level: f64 },
}

fn integrals_at(base: &State, lam: f64, mesh: &Mesh, params: &ModelParams) -> FieldIntegrals {
    let u: Vec<f64> = base.u.iter().map(|v| v * lam).collect();
    let w: Vec<f64> = base.w.iter().map(|v| v * lam).collect();
    FieldIntegrals::of_displacement(&u, &w, mesh, params)
}

/// Largest bracket the search will look in.
const AMPLITUDE_LIMIT: f64 = 1e6;

/// Bisects the amplitude of `preset` so that `target` holds. Returns the
/// amplitude and the scaled state.
pub fn solve_amplitude(preset: Preset, target: Target, mesh: &Mesh, params: &ModelParams) -> Result<(f64, State), PresetError> {
    let base = preset_initial_data(preset, 1.0, mesh);
    let ints = |lam: f64| integrals_at(&base, lam, mesh, params);
    let one = ints(1.0);
    if !(one.stiffness() > 0.0) {
        return Err(PresetError::Infeasible("preset has no stiffness on this mesh"));
    }
    let tol = 1e-14;

    // λ* where the Nehari value changes sign, found on demand
    let maximizer = || -> Result<f64, PresetError> {
        let mut hi = 1.0;
        while ints(hi).nehari() > 0.0 {
            hi *= 2.0;
            if hi > AMPLITUDE_LIMIT {
                return Err(PresetError::Infeasible("sources vanish along the preset"));
            }
        }
        let mut lo = hi;
        while ints(lo).nehari() <= 0.0 {
            lo *= 0.5;
        }
        bisect(|l| ints(l).nehari(), lo, hi, tol * hi, BISECTION_MAX_ITER)
            .map_err(|_| PresetError::Infeasible("no Nehari crossing"))
    };

    let lam = match target {
        Target::NegativeEnergy { ratio } => {
            let g = |l: f64| {
                let i = ints(l);
                i.source_potential() - ratio * i.quadratic_energy()
            };
            let mut hi = 1.0;
            while g(hi) <= 0.0 {
                hi *= 2.0;
                if hi > AMPLITUDE_LIMIT {
                    return Err(PresetError::Infeasible("S/E ratio not reached"));
                }
            }
            let mut lo = hi;
            while g(lo) > 0.0 {
                lo *= 0.5;
                if lo < 1e-12 {
                    return Err(PresetError::Infeasible("S/E ratio not bracketed"));
                }
            }
            bisect(g, lo, hi, tol * hi, BISECTION_MAX_ITER).map_err(|_| PresetError::Infeasible("S/E ratio"))?
        }
        Target::UnstableWell { level } => {
            let star = maximizer()?;
            let g = |l: f64| ints(l).potential() - level;
            if !(g(star) > 0.0) {
                return Err(PresetError::Infeasible("level above the fiber maximum"));
            }
            let mut hi = 2.0 * star;
            while g(hi) > 0.0 {
                hi *= 2.0;
                if hi > AMPLITUDE_LIMIT {
                    return Err(PresetError::Infeasible("level not reached past the maximum"));
                }
            }
            bisect(g, star, hi, tol * hi, BISECTION_MAX_ITER).map_err(|_| PresetError::Infeasible("unstable branch"))?
        }
        Target::StableWell { level } => {
            if !(level > 0.0) {
                return Err(PresetError::Infeasible("stable-well level must be positive"));
            }
            let star = maximizer()?;
            let g = |l: f64| ints(l).potential() - level;
            if !(g(star) > 0.0) {
                return Err(PresetError::Infeasible("level above the fiber maximum"));
            }
            bisect(g, 0.0, star, tol * star, BISECTION_MAX_ITER).map_err(|_| PresetError::Infeasible("stable branch"))?
        }
    };
    Ok((lam, base.scaled(lam)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{classify_well, WellClass};
    use crate::mesh::Geometry;
    use crate::params::RawParams;

    fn setup() -> (Mesh, ModelParams) {
        (
            Mesh::build(&Geometry {
                n: 17,
                ..Geometry::default()
            })
            .unwrap(),
            RawParams::default().validate(2).unwrap(),
        )
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("bump".parse::<Preset>().is_err());
    }

    #[test]
    fn presets_are_admissible() {
        let (m, _) = setup();
        for p in Preset::ALL {
            let s = preset_initial_data(p, 2.0, &m);
            assert!(s.satisfies_masks(&m));
        }
        let s = preset_initial_data(Preset::BumpPlate, 1.0, &m);
        assert!(s.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn small_amplitude_is_stable() {
        let (m, p) = setup();
        let s = preset_initial_data(Preset::BumpBoth, 1e-3, &m);
        let ints = FieldIntegrals::of(&s, &m, &p);
        assert!(ints.total_energy() > 0.0);
        assert_eq!(classify_well(&s.u, &s.w, &m, &p, 1.0), WellClass::W1);
    }

    #[test]
    fn amplitude_targets() {
        let (m, p) = setup();
        let (_, s) = solve_amplitude(Preset::BumpWave, Target::NegativeEnergy { ratio: 2.0 }, &m, &p).unwrap();
        let i = FieldIntegrals::of(&s, &m, &p);
        assert!((i.source_potential() - 2.0 * i.quadratic_energy()).abs() < 1e-9 * i.source_potential());
        assert!(i.total_energy() < 0.0);

        let (l2, s2) = solve_amplitude(Preset::W2Large, Target::UnstableWell { level: 0.01 }, &m, &p).unwrap();
        let (l1, s1) = solve_amplitude(Preset::W1Small, Target::StableWell { level: 0.01 }, &m, &p).unwrap();
        assert!(l1 < l2);
        for (s, want) in [(&s1, WellClass::W1), (&s2, WellClass::W2)] {
            let i = FieldIntegrals::of(s, &m, &p);
            assert!((i.total_energy() - 0.01).abs() < 1e-9);
            assert_eq!(classify_well(&s.u, &s.w, &m, &p, 1.0), want);
        }
        assert!(solve_amplitude(Preset::W1Small, Target::StableWell { level: 1e9 }, &m, &p).is_err());
    }
}
