//! Semi-implicit time stepping for the coupled chamber/wall system.
//!
//! One step of size `dt`:
//!
//! 1. damping for half a step, pointwise implicit: `v* + dt/2 g(v*) = v`;
//! 2. wave, Crank–Nicolson in `(u, u_t)` with the source evaluated at the
//!    predicted midpoint `u + dt/2 v*` and the wall flux `∂_ν u = w_t` taken
//!    from the damped plate velocity;
//! 3. plate, Crank–Nicolson in `(w, w_t)` with `h` at the predicted midpoint
//!    and the forcing `-γu_t` taken from the *new* chamber velocity;
//! 4. damping for the second half step.
//!
//! The symmetric damping split keeps `(u1 - u)/dt` within `O(dt²)` of the
//! recorded velocities.
//!
//! The ordering in 2–3 makes the coupling defect telescope:
//! per step it is `dt/2 (x_n - x_{n+1})` with `x = <w_t, γu_t>`, so energy
//! drift stays bounded and the per-step residual is `O(dt²)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::functionals::{EnergyFrame, EnergySnapshot, FieldIntegrals};
use crate::linalg::conjugate_gradient;
use crate::math::{abs, sqrt};
use crate::mesh::{Mesh, NodeKind, State};
use crate::params::{DampingLaw, ModelParams, SourceLaw};
use crate::roots::solve_damped_velocity;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegratorError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("t_end must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("output stride must be at least 1")]
    BadStride,
    #[error("initial state does not fit the mesh or violates the boundary conditions")]
    BadState,
    #[error("pointwise damping solve did not converge (rhs = {0})")]
    DampingSolve(f64),
}

/// Which terms are active. Disabled terms are replaced by zero laws, so the
/// energies reported by a run match the equations actually integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Physics {
    pub sources: bool,
    pub damping: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            sources: true,
            damping: true,
        }
    }
}

impl Physics {
    pub const LINEAR: Physics = Physics {
        sources: false,
        damping: false,
    };

    pub fn apply(&self, params: &ModelParams) -> ModelParams {
        let mut out = params.clone();
        if !self.sources {
            let zero: crate::params::SourceFn = Arc::new(|_| (0.0, 0.0));
            out.wave_source = SourceLaw::custom(params.p, 0.0, params.p + 1.0, 0.0, zero.clone());
            out.plate_source = SourceLaw::custom(params.q, 0.0, params.q + 1.0, 0.0, zero);
        }
        if !self.damping {
            let zero: crate::params::DampingFn = Arc::new(|_| (0.0, 0.0));
            out.wave_damping = DampingLaw::custom(params.m, 0.0, 0.0, zero.clone());
            out.plate_damping = DampingLaw::custom(params.r, 0.0, 0.0, zero);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFlag {
    Ok,
    /// The step was shortened (fast-scale limiter or residual retry).
    Clipped,
    /// The residual budget was still exceeded after all retries.
    Unreliable,
    Diverged,
}

impl StepFlag {
    pub fn label(self) -> &'static str {
        match self {
            StepFlag::Ok => "ok",
            StepFlag::Clipped => "clipped",
            StepFlag::Unreliable => "unreliable",
            StepFlag::Diverged => "diverged",
        }
    }

    /// The more severe of two flags.
    pub fn worst(self, other: StepFlag) -> StepFlag {
        let rank = |f: StepFlag| match f {
            StepFlag::Ok => 0,
            StepFlag::Clipped => 1,
            StepFlag::Unreliable => 2,
            StepFlag::Diverged => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// `|Δ𝓔 + dissipation| / (1 + |𝓔|)` over the step.
    pub energy_residual: f64,
    /// Signed `Δ𝓔 + dissipation`.
    pub defect: f64,
    /// `dt/2 Σ g(v') v'` over both half steps and both fields; never negative.
    pub damping_dissipation: f64,
    /// `<f(ũ), u1 - u> + <h(w̃), w1 - w>`.
    pub source_work: f64,
    pub newton_iters: usize,
    pub flag: StepFlag,
    /// `dt/2 (<γu, w>_n + <γu, w>_{n+1})`, the history increment of `N`.
    pub history_increment: f64,
}

/// `|𝓔_{k+1} - 𝓔_k + dissipation| / (1 + |𝓔_k|)`.
pub fn energy_identity_residual(before: &EnergySnapshot, after: &EnergySnapshot, report: &StepReport) -> f64 {
    abs(after.total - before.total + report.damping_dissipation) / (1.0 + abs(before.total))
}

/// Scratch buffers reused across steps.
pub struct Stepper<'a> {
    mesh: &'a Mesh,
    params: &'a ModelParams,
    cg_tol: f64,
    zero_g: Vec<f64>,
    a_u: Vec<f64>,
    a_v: Vec<f64>,
    rhs_o: Vec<f64>,
    src_o: Vec<f64>,
    b_w: Vec<f64>,
    b_v: Vec<f64>,
    rhs_g: Vec<f64>,
    src_g: Vec<f64>,
    scratch_g: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(mesh: &'a Mesh, params: &'a ModelParams) -> Self {
        let no = mesh.omega_len();
        let ng = mesh.gamma_len();
        Self {
            mesh,
            params,
            cg_tol: 1e-10,
            zero_g: vec![0.0; ng],
            a_u: vec![0.0; no],
            a_v: vec![0.0; no],
            rhs_o: vec![0.0; no],
            src_o: vec![0.0; no],
            b_w: vec![0.0; ng],
            b_v: vec![0.0; ng],
            rhs_g: vec![0.0; ng],
            src_g: vec![0.0; ng],
            scratch_g: vec![0.0; ng],
        }
    }

    pub fn with_cg_tol(mut self, tol: f64) -> Self {
        self.cg_tol = tol;
        self
    }

    /// Solves `v' + kappa g(v') = v` at every free node. Returns the
    /// dissipated energy `kappa Σ q g(v') v'` and the worst iteration count.
    fn damp(&self, state: &mut State, kappa: f64) -> Result<(f64, usize), IntegratorError> {
        let mesh = self.mesh;
        let params = self.params;
        let mut dissipation = 0.0;
        let mut newton = 0;
        let fields = [
            (&mut state.ut, mesh.free_omega(), mesh.quad_omega(), &params.wave_damping),
            (&mut state.wt, mesh.free_gamma(), mesh.quad_gamma(), &params.plate_damping),
        ];
        for (vel, free, quad, law) in fields {
            for &i in free {
                let rhs = vel[i];
                let out = solve_damped_velocity(|s| law.eval_with_slope(s), kappa, rhs, NEWTON_TOL, NEWTON_MAX_ITER);
                if !out.converged {
                    return Err(IntegratorError::DampingSolve(rhs));
                }
                newton = newton.max(out.iterations);
                dissipation += quad[i] * (rhs - out.value) * out.value;
                vel[i] = out.value;
            }
        }
        Ok((dissipation, newton))
    }

    /// Advances `state` in place by `dt`. `before` must be the integrals of
    /// the incoming state; the integrals of the outgoing state are returned.
    pub fn advance(
        &mut self,
        state: &mut State,
        dt: f64,
        before: &FieldIntegrals,
    ) -> Result<(StepReport, FieldIntegrals), IntegratorError> {
        let mesh = self.mesh;
        let params = self.params;
        let c = 0.25 * dt * dt;
        let h_vert = mesh.h[mesh.dim - 1];

        // 1. implicit damping, first half
        let (mut dissipation, mut newton) = self.damp(state, 0.5 * dt)?;

        // 2. wave
        mesh.wave_operator_into(&state.u, &self.zero_g, &mut self.a_u);
        mesh.wave_operator_into(&state.ut, &self.zero_g, &mut self.a_v);
        for &i in mesh.free_omega() {
            let mid = state.u[i] + 0.5 * dt * state.ut[i];
            let mut b = params.eval_source_wave(mid).0;
            self.src_o[i] = b;
            if mesh.kind(i) == NodeKind::Wall {
                b += 2.0 / h_vert * state.wt[i - mesh.wall_node(0)];
            }
            self.rhs_o[i] = state.ut[i] - dt * self.a_u[i] - c * self.a_v[i] + dt * b;
        }
        let mut v1 = state.ut.clone();
        {
            let zero_g = &self.zero_g;
            conjugate_gradient(
                |x, out| {
                    mesh.wave_operator_into(x, zero_g, out);
                    for &i in mesh.free_omega() {
                        out[i] = x[i] + c * out[i];
                    }
                },
                mesh.quad_omega(),
                mesh.free_omega(),
                &self.rhs_o,
                &mut v1,
                self.cg_tol,
                10 * mesh.free_omega().len() + 100,
            );
        }
        let mut work = 0.0;
        for &i in mesh.free_omega() {
            let du = 0.5 * dt * (state.ut[i] + v1[i]);
            work += mesh.quad_omega()[i] * self.src_o[i] * du;
            state.u[i] += du;
        }
        state.ut = v1;

        // 3. plate, forced by the new chamber velocity
        mesh.plate_operator_into(&state.w, &mut self.scratch_g, &mut self.b_w);
        mesh.plate_operator_into(&state.wt, &mut self.scratch_g, &mut self.b_v);
        for &ig in mesh.free_gamma() {
            let mid = state.w[ig] + 0.5 * dt * state.wt[ig];
            let hv = params.eval_source_plate(mid).0;
            self.src_g[ig] = hv;
            let forcing = hv - state.ut[mesh.wall_node(ig)];
            self.rhs_g[ig] = state.wt[ig] - dt * self.b_w[ig] - c * self.b_v[ig] + dt * forcing;
        }
        let mut wt1 = state.wt.clone();
        {
            let scratch = &mut self.scratch_g;
            conjugate_gradient(
                |x, out| {
                    mesh.plate_operator_into(x, scratch, out);
                    for &ig in mesh.free_gamma() {
                        out[ig] = x[ig] + c * out[ig];
                    }
                },
                mesh.quad_gamma(),
                mesh.free_gamma(),
                &self.rhs_g,
                &mut wt1,
                self.cg_tol,
                10 * mesh.free_gamma().len() + 100,
            );
        }
        for &ig in mesh.free_gamma() {
            let dw = 0.5 * dt * (state.wt[ig] + wt1[ig]);
            work += mesh.quad_gamma()[ig] * self.src_g[ig] * dw;
            state.w[ig] += dw;
        }
        state.wt = wt1;
        state.time += dt;

        // 4. implicit damping, second half
        let (d2, n2) = self.damp(state, 0.5 * dt)?;
        dissipation += d2;
        newton = newton.max(n2);

        let after = FieldIntegrals::of(state, mesh, params);
        let defect = after.total_energy() - before.total_energy() + dissipation;
        let finite = after.quadratic_energy().is_finite() && defect.is_finite();
        Ok((
            StepReport {
                dt,
                energy_residual: abs(defect) / (1.0 + abs(before.total_energy())),
                defect,
                damping_dissipation: dissipation,
                source_work: work,
                newton_iters: newton,
                flag: if finite { StepFlag::Ok } else { StepFlag::Diverged },
                history_increment: 0.5 * dt * (before.trace_uw + after.trace_uw),
            },
            after,
        ))
    }
}

/// Single step with fresh buffers.
pub fn step(state: &State, dt: f64, mesh: &Mesh, params: &ModelParams) -> Result<(State, StepReport), IntegratorError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IntegratorError::BadStep(dt));
    }
    if state.conforms(mesh).is_err() || !state.satisfies_masks(mesh) {
        return Err(IntegratorError::BadState);
    }
    let before = FieldIntegrals::of(state, mesh, params);
    let mut next = state.clone();
    let (report, _) = Stepper::new(mesh, params).advance(&mut next, dt, &before)?;
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot every `stride` steps.
    pub stride: usize,
    /// Absolute cap on `E`; defaults to `1e8 E(0) + 1e8`.
    pub cap: Option<f64>,
    /// Per-step raw defect allowed, relative to `1 + E`.
    pub residual_budget: f64,
    pub max_halvings: u32,
    pub max_steps: usize,
    pub cg_tol: f64,
    /// Enforce `dt <= 0.1 / (1 + max(|f|∞, |h|∞)^{1/2})`.
    pub limit_fast_scale: bool,
    pub physics: Physics,
    /// `(frame, eps, a)` for the `Y` column.
    pub frame: Option<(EnergyFrame, f64, f64)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            stride: 10,
            cap: None,
            residual_budget: 1e-3,
            max_halvings: 3,
            max_steps: 5_000_000,
            cg_tol: 1e-10,
            limit_fast_scale: true,
            physics: Physics::default(),
            frame: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(IntegratorError::BadStep(self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(IntegratorError::BadHorizon(self.t_end));
        }
        if self.stride == 0 {
            return Err(IntegratorError::BadStride);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// `E` crossed the cap (or a value became non-finite) during the step
    /// from `t_prev` to `t_blow`.
    Diverged { t_blow: f64, t_prev: f64 },
    StepLimit,
    /// The fast-scale limiter drove `dt` below `1e-12 dt`.
    Stalled,
    /// The caller's monitor asked to stop (e.g. a wall-clock budget).
    Interrupted,
}

impl Termination {
    pub fn t_blow(&self) -> Option<f64> {
        match self {
            Termination::Diverged { t_blow, .. } => Some(*t_blow),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Diverged { .. } => "diverged",
            Termination::StepLimit => "step_limit",
            Termination::Stalled => "stalled",
            Termination::Interrupted => "interrupted",
        }
    }
}

/// Per-row step statistics, aligned with `RunRecord::snapshots`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStats {
    /// Largest normalised step residual since the previous row.
    pub residual: f64,
    /// Sum of `|defect|` since the previous row.
    pub defect: f64,
    pub flag: StepFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub snapshots: Vec<EnergySnapshot>,
    pub rows: Vec<RowStats>,
    /// `(t, dt, residual)` for every accepted step.
    pub step_log: Vec<(f64, f64, f64)>,
    pub steps: usize,
    pub termination: Termination,
    pub final_state: State,
    pub final_snapshot: EnergySnapshot,
    pub history: f64,
    pub dissipation: f64,
    pub cap: f64,
    pub min_dt: f64,
    pub max_newton: usize,
    pub retried_steps: usize,
    pub unreliable_steps: usize,
    pub clipped_steps: usize,
    /// Rows with index `< valid_rows` lie outside the final 5% of the run.
    pub valid_rows: usize,
}

impl RunRecord {
    pub fn t_blow(&self) -> Option<f64> {
        self.termination.t_blow()
    }

    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }

    /// Largest residual over rows outside the final 5%.
    pub fn max_valid_residual(&self) -> f64 {
        self.rows[..self.valid_rows]
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

fn fast_scale_limit(state: &State, params: &ModelParams) -> f64 {
    let fmax = state
        .u
        .iter()
        .map(|v| abs(params.eval_source_wave(*v).0))
        .chain(state.w.iter().map(|v| abs(params.eval_source_plate(*v).0)))
        .fold(0.0, f64::max);
    0.1 / (1.0 + sqrt(fmax))
}

/// Integrates from `initial` until `t_end`, divergence, or the step limit.
pub fn run(initial: &State, mesh: &Mesh, params: &ModelParams, opts: &RunOptions) -> Result<RunRecord, IntegratorError> {
    run_with_monitor(initial, mesh, params, opts, |_, _| false)
}

/// As [`run`], but `stop(state, steps)` is polled before every step; returning
/// `true` ends the run with [`Termination::Interrupted`].
pub fn run_with_monitor<M>(
    initial: &State,
    mesh: &Mesh,
    params: &ModelParams,
    opts: &RunOptions,
    mut stop: M,
) -> Result<RunRecord, IntegratorError>
where
    M: FnMut(&State, usize) -> bool,
{
    opts.validate()?;
    if initial.conforms(mesh).is_err() || !initial.satisfies_masks(mesh) {
        return Err(IntegratorError::BadState);
    }
    let params = opts.physics.apply(params);
    let mut stepper = Stepper::new(mesh, &params).with_cg_tol(opts.cg_tol);

    let mut state = initial.clone();
    let mut ints = FieldIntegrals::of(&state, mesh, &params);
    let e0 = ints.quadratic_energy();
    let cap = opts.cap.unwrap_or(1e8 * e0 + 1e8);
    let mut history = 0.0;
    let t0 = state.time;
    let t_end = t0 + opts.t_end;

    let snap = |s: &State, i: &FieldIntegrals, h: f64| EnergySnapshot::from_integrals(s.time, i, h, opts.frame);
    let mut snapshots = vec![snap(&state, &ints, history)];
    let mut rows = vec![RowStats {
        residual: 0.0,
        defect: 0.0,
        flag: StepFlag::Ok,
    }];
    let mut step_log = Vec::new();
    let mut row = rows[0];

    let mut steps = 0;
    let mut dissipation = 0.0;
    let mut min_dt = f64::INFINITY;
    let mut max_newton = 0;
    let mut retried = 0;
    let mut unreliable = 0;
    let mut clipped = 0;
    let mut termination = Termination::Completed;
    let mut dt_hint = f64::INFINITY;

    while t_end - state.time > 1e-12 * opts.t_end {
        if steps >= opts.max_steps {
            termination = Termination::StepLimit;
            break;
        }
        if stop(&state, steps) {
            termination = Termination::Interrupted;
            break;
        }
        let mut dt = opts.dt.min(t_end - state.time);
        let mut flag = StepFlag::Ok;
        if opts.limit_fast_scale {
            let lim = fast_scale_limit(&state, &params);
            if lim < dt {
                dt = lim;
                flag = StepFlag::Clipped;
            }
        }
        // a retried step shortens the next one; growth is at most 25% per step
        if dt_hint < dt {
            dt = dt_hint;
            flag = StepFlag::Clipped;
        }
        if dt < 1e-12 * opts.dt {
            termination = Termination::Stalled;
            break;
        }

        let t_prev = state.time;
        let budget = opts.residual_budget * (1.0 + ints.quadratic_energy());
        let mut halvings = 0;
        let (next, next_ints, defect, diss, hist, newton, sub_dt) = loop {
            let pieces = 1usize << halvings;
            let sub = dt / pieces as f64;
            let mut trial = state.clone();
            let mut trial_ints = ints;
            let (mut diss, mut hist, mut newton) = (0.0, 0.0, 0);
            let mut blown = false;
            for _ in 0..pieces {
                let (rep, after) = stepper.advance(&mut trial, sub, &trial_ints)?;
                diss += rep.damping_dissipation;
                hist += rep.history_increment;
                newton = newton.max(rep.newton_iters);
                trial_ints = after;
                if rep.flag == StepFlag::Diverged || !(after.quadratic_energy() <= cap) {
                    blown = true;
                    break;
                }
            }
            let defect = trial_ints.total_energy() - ints.total_energy() + diss;
            if blown || abs(defect) <= budget || halvings >= opts.max_halvings {
                if !blown && abs(defect) > budget {
                    flag = flag.worst(StepFlag::Unreliable);
                    unreliable += 1;
                }
                if blown {
                    flag = StepFlag::Diverged;
                }
                break (trial, trial_ints, defect, diss, hist, newton, sub);
            }
            halvings += 1;
        };
        if halvings > 0 {
            retried += 1;
            flag = flag.worst(StepFlag::Clipped);
        }
        if flag == StepFlag::Clipped {
            clipped += 1;
        }
        let residual = abs(defect) / (1.0 + abs(ints.total_energy()));
        state = next;
        ints = next_ints;
        history += hist;
        dissipation += diss;
        steps += 1;
        min_dt = min_dt.min(sub_dt);
        dt_hint = 1.25 * sub_dt;
        max_newton = max_newton.max(newton);
        step_log.push((state.time, dt, residual));

        row.residual = row.residual.max(residual);
        row.defect += abs(defect);
        row.flag = row.flag.worst(flag);

        if flag == StepFlag::Diverged {
            termination = Termination::Diverged {
                t_blow: state.time,
                t_prev,
            };
        }
        if steps % opts.stride == 0 {
            snapshots.push(snap(&state, &ints, history));
            rows.push(row);
            row = RowStats {
                residual: 0.0,
                defect: 0.0,
                flag: StepFlag::Ok,
            };
        }
        if flag == StepFlag::Diverged {
            break;
        }
    }

    let t_last = state.time;
    let cut = t0 + 0.95 * (t_last - t0);
    let valid_rows = snapshots.iter().take_while(|s| s.time <= cut).count().max(1);
    Ok(RunRecord {
        final_snapshot: snap(&state, &ints, history),
        snapshots,
        rows,
        step_log,
        steps,
        termination,
        final_state: state,
        history,
        dissipation,
        cap,
        min_dt,
        max_newton,
        retried_steps: retried,
        unreliable_steps: unreliable,
        clipped_steps: clipped,
        valid_rows,
    })
}
