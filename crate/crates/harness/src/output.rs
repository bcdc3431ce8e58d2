//! CSV, text report and the per-run file set.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wavewall_core::{RunRecord, Termination};

use crate::checkpoint::write_checkpoint;
use crate::config::KEYS;
use crate::plots::emit_plots;
use crate::scenario::{HarnessError, ScenarioOutcome};

pub const CSV_HEADER: &str = "t,E,S,totalE,J,nehari,G_or_calG,N,Nprime,Y,energy_residual,flag";

/// One row per snapshot, then `#` lines with the verdict. Floats use the
/// shortest round-trip form, so identical runs give identical bytes.
pub fn format_csv(outcome: &ScenarioOutcome) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if let Some(rec) = &outcome.record {
        for (s, row) in rec.snapshots.iter().zip(&rec.rows) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.time,
                s.quadratic,
                s.source,
                s.total,
                s.potential,
                s.nehari,
                s.deficit,
                s.n,
                s.n_prime,
                s.y,
                row.residual,
                row.flag.label()
            );
        }
    }
    for line in verdict_lines(outcome) {
        let _ = writeln!(out, "# {line}");
    }
    out
}

fn verdict_lines(o: &ScenarioOutcome) -> Vec<String> {
    let mut v = vec![format!("scenario={}", o.prepared.config.scenario.name())];
    if let Some(rec) = &o.record {
        v.push(format!("termination={}", rec.termination.label()));
        if let Termination::Diverged { t_blow, t_prev } = rec.termination {
            v.push(format!("t_blow={t_blow}"));
            v.push(format!("t_prev={t_prev}"));
        }
    }
    if let Some(verdict) = &o.verdict {
        v.push(format!("eps={}", verdict.eps.eps));
        v.push(format!("kappa_fit={}", verdict.kappa_fit));
        v.push(format!("T_comparison={}", verdict.t_comparison));
    }
    for c in &o.checks {
        v.push(c.line());
    }
    v
}

pub fn emit_csv(outcome: &ScenarioOutcome, path: &Path) -> Result<(), HarnessError> {
    write(path, &format_csv(outcome))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn config_echo(o: &ScenarioOutcome, out: &mut String) {
    let c = &o.prepared.config;
    let g = &c.geometry;
    let ext: Vec<String> = g.extents[..g.dim].iter().map(|e| e.to_string()).collect();
    let _ = writeln!(out, "scenario = {}", c.scenario.name());
    let _ = writeln!(out, "geometry = dim {}, n {}, extents {}", g.dim, g.n, ext.join(" x "));
    let _ = writeln!(out, "{}", o.prepared.params.describe());
    match (&c.initial.checkpoint, o.prepared.amplitude) {
        (Some(path), _) => {
            let _ = writeln!(out, "initial = checkpoint {}", path.display());
        }
        (None, Some(a)) => {
            let _ = writeln!(out, "initial = {} at amplitude {a}", c.preset().name());
        }
        (None, None) => {}
    }
    let _ = writeln!(
        out,
        "time = dt {}, t_end {}, stride {}; sources {}, damping {}",
        c.time.dt,
        c.t_end(),
        c.time.stride,
        c.sources,
        c.damping
    );
}

pub fn format_report(o: &ScenarioOutcome) -> String {
    let p = &o.prepared;
    let mut out = String::new();
    let _ = writeln!(out, "== configuration");
    config_echo(o, &mut out);

    let _ = writeln!(out, "\n== constants");
    let _ = writeln!(out, "{:<8} {:>24}  how", "name", "value");
    for (name, value, how) in p.constants.provenance() {
        let _ = writeln!(out, "{name:<8} {value:>24.16e}  {how}");
    }
    let _ = writeln!(out, "directions sampled for d_upper: {}", p.constants.directions);
    let _ = writeln!(out, "dhat floor y0*min((p-1)/(p+1),(q-1)/(q+1)) = {:.16e}", p.constants.dhat_floor());
    if let Some(note) = p.constants.dimension_note() {
        let _ = writeln!(out, "note: {note}");
    }

    let _ = writeln!(out, "\n== initial data");
    let _ = writeln!(out, "totalE(0) = {:.16e}", p.initial_total);
    let _ = writeln!(out, "E(0)      = {:.16e}", p.initial_quadratic);
    let _ = writeln!(out, "class     = {}", p.initial_class.label());

    let _ = writeln!(out, "\n== hypotheses");
    if p.hypotheses.is_empty() {
        let _ = writeln!(out, "(none for this scenario)");
    }
    for h in &p.hypotheses {
        let _ = writeln!(out, "[{}] {:<22} {}", if h.passed { "ok" } else { "FAILED" }, h.name, h.condition);
    }

    let _ = writeln!(out, "\n== run");
    match &o.record {
        None => {
            let _ = writeln!(out, "skipped: hypotheses failed");
        }
        Some(rec) => run_block(rec, o, &mut out),
    }

    if let Some(v) = &o.verdict {
        let _ = writeln!(out, "\n== blow-up verdict ({})", v.scenario.label());
        let _ = writeln!(out, "eps = {:.6e} (barrier {:.6e}, rho budget {:.6e}, Y(0) = {:.6e}, Y(0) >= G0^(1-a)/2: {})",
            v.eps.eps, v.eps.barrier, v.eps.rho_budget, v.eps.y0, v.eps.guarantee);
        let _ = writeln!(out, "a = {:.6}, mu = {:.6}, sigma = {:.6}", v.a, v.mu, v.sigma);
        match v.fit {
            Some(f) => {
                let _ = writeln!(out, "kappa_fit = {:.6e} over {} samples ({:.2}% below the fitted rate)",
                    f.kappa, f.samples, 100.0 * f.violation_fraction);
            }
            None => {
                let _ = writeln!(out, "kappa_fit: no usable window");
            }
        }
        let _ = writeln!(out, "T_comparison = {:.6e}", v.t_comparison);
        match v.t_blow_observed {
            Some(t) => {
                let _ = writeln!(out, "t_blow observed = {t:.6e} +- {:.3e}", v.t_blow_pad);
            }
            None => {
                let _ = writeln!(out, "t_blow observed: none");
            }
        }
        let _ = writeln!(out, "G monotone in {:.2}% of pairs, Y monotone in {:.2}%, G(0) <= G <= S: {}",
            100.0 * v.g_monotone_fraction, 100.0 * v.y_monotone_fraction, v.g_bounds_hold);
    }
    if let Some(pe) = &o.positive {
        let _ = writeln!(out, "\n== positive-energy samples");
        let _ = writeln!(out, "y1 = {:.6e}, calG(0) = {:.6e}", pe.y1, pe.calg0);
        let _ = writeln!(out, "worst margins: calG(t)-calG(0) {:.3e}, totalE-F1(E) {:.3e}, E-y1 {:.3e}, S-calG {:.3e}",
            pe.calg_monotone, pe.f1_margin, pe.y1_margin, pe.source_margin);
        let _ = writeln!(out, "{} of {} samples violate a check", pe.violations, pe.samples);
    }

    let _ = writeln!(out, "\n== acceptance");
    for c in &o.checks {
        let _ = writeln!(out, "{}", c.line());
    }
    let _ = writeln!(out, "elapsed {:.3} s", o.elapsed.as_secs_f64());
    out
}

fn run_block(rec: &RunRecord, o: &ScenarioOutcome, out: &mut String) {
    let _ = writeln!(out, "termination = {} at t = {}", rec.termination.label(), rec.final_state.time);
    let _ = writeln!(out, "steps = {}, snapshots = {}, divergence cap E > {:.3e}", rec.steps, rec.snapshots.len(), rec.cap);
    let _ = writeln!(out, "smallest dt = {:.3e}; retried {}, clipped {}, unreliable {}",
        rec.min_dt, rec.retried_steps, rec.clipped_steps, rec.unreliable_steps);
    let _ = writeln!(out, "damping dissipation = {:.6e}", rec.dissipation);
    let _ = writeln!(out, "max residual outside the final 5% = {:.3e}", rec.max_valid_residual());
    let mut counts = [0usize; 4];
    for c in &o.classes {
        counts[match c {
            wavewall_core::WellClass::W1 => 0,
            wavewall_core::WellClass::W2 => 1,
            wavewall_core::WellClass::Boundary => 2,
            wavewall_core::WellClass::Outside => 3,
        }] += 1;
    }
    let _ = writeln!(out, "classification: W1 {}, W2 {}, boundary {}, outside {}", counts[0], counts[1], counts[2], counts[3]);
}

pub fn emit_report(outcome: &ScenarioOutcome, path: &Path) -> Result<(), HarnessError> {
    write(path, &format_report(outcome))
}

/// Writes the CSV, the report and, if enabled, plots and a checkpoint into
/// the configured directory. Returns the paths written.
pub fn emit_all(outcome: &ScenarioOutcome) -> Result<Vec<PathBuf>, HarnessError> {
    let cfg = &outcome.prepared.config;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let name = |suffix: &str| dir.join(format!("{}{suffix}", cfg.output.prefix));
    let mut written = Vec::new();
    let csv = name(".csv");
    emit_csv(outcome, &csv)?;
    written.push(csv);
    let report = name("_report.txt");
    emit_report(outcome, &report)?;
    written.push(report);
    if cfg.output.plots && outcome.record.is_some() {
        written.extend(emit_plots(outcome, dir)?);
    }
    if let (true, Some(rec)) = (cfg.output.checkpoint, &outcome.record) {
        let path = name(".ckpt");
        write_checkpoint(&path, &rec.final_state, &outcome.prepared.mesh)?;
        written.push(path);
    }
    Ok(written)
}

/// Markdown table of every config key, for the README.
pub fn key_table() -> String {
    let mut out = String::from("| key | default | meaning |\n|---|---|---|\n");
    for (k, d, m) in KEYS {
        let _ = writeln!(out, "| `{k}` | {d} | {m} |");
    }
    out
}
