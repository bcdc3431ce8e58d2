//! Numerical laboratory for a semilinear wave equation in a box-shaped chamber
//! coupled, through a flat elastic wall, to a clamped plate equation.
//!
//! The chamber field `u` solves `u_tt - Δu + u + g1(u_t) = f(u)` with `u = 0` on
//! the rigid walls and `∂_ν u = w_t` on the elastic wall; the wall displacement
//! `w` solves `w_tt + Δ²w + g2(w_t) + u_t|_Γ = h(w)` with clamped edges.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! clocks or the command line lives in the `wavewall` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// stencils read better with explicit axis and node indices
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod blowup;
pub mod constants;
pub mod functionals;
pub mod integrator;
pub mod linalg;
pub mod mesh;
pub mod params;
pub mod presets;
pub mod roots;
pub mod sampling;

mod math;

pub use blowup::{BlowupVerdict, EpsilonChoice, HypothesisReport, Scenario};
pub use constants::{ConstantsOptions, WellConstants};
pub use functionals::{EnergySnapshot, WellClass};
pub use integrator::{Physics, RunOptions, RunRecord, StepReport, Termination};
pub use mesh::{Geometry, Mesh, State};
pub use params::{ModelParams, RawParams};
