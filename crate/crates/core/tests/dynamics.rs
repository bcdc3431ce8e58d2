use wavewall_core::presets::{preset_initial_data, solve_amplitude, Preset, Target};
use wavewall_core::{integrator::run, Geometry, Mesh, Physics, RawParams, RunOptions, Termination};

fn setup() -> (Mesh, wavewall_core::ModelParams) {
    let mesh = Mesh::build(&Geometry { n: 17, ..Geometry::default() }).unwrap();
    (mesh, RawParams::default().validate(2).unwrap())
}

#[test]
fn damped_run_keeps_the_energy_budget() {
    let (m, p) = setup();
    let s = preset_initial_data(Preset::BumpBoth, 0.8, &m);
    let rec = run(&s, &m, &p, &RunOptions { t_end: 2.0, stride: 5, ..RunOptions::default() }).unwrap();
    assert_eq!(rec.termination, Termination::Completed);
    assert!(rec.max_valid_residual() < 1e-3);
    assert!(rec.dissipation > 0.0);
    let e0 = rec.snapshots[0].total;
    let drift = rec.final_snapshot.total + rec.dissipation - e0;
    let defects: f64 = rec.rows.iter().map(|r| r.defect).sum();
    assert!(drift.abs() <= defects + 1e-9, "{drift} vs {defects}");
}

#[test]
fn linear_run_conserves_energy() {
    let (m, p) = setup();
    let s = preset_initial_data(Preset::BumpBoth, 5.0, &m);
    let opts = RunOptions { dt: 1e-3, t_end: 0.2, physics: Physics::LINEAR, ..RunOptions::default() };
    let rec = run(&s, &m, &p, &opts).unwrap();
    let e0 = rec.snapshots[0].quadratic;
    // the partitioned coupling leaves an O(dt) wobble that telescopes
    for snap in &rec.snapshots {
        assert!((snap.quadratic - e0).abs() < 5e-3 * e0, "{} {}", snap.time, snap.quadratic / e0);
        assert_eq!(snap.source, 0.0);
    }
}

#[test]
fn negative_energy_data_diverges() {
    let (m, p) = setup();
    let (_, s) = solve_amplitude(Preset::BumpWave, Target::NegativeEnergy { ratio: 2.0 }, &m, &p).unwrap();
    let opts = RunOptions { t_end: 5.0, stride: 5, cap: Some(1e6), ..RunOptions::default() };
    let rec = run(&s, &m, &p, &opts).unwrap();
    assert!(rec.diverged(), "{:?}", rec.termination);
    let t = rec.t_blow().unwrap();
    assert!(t > 0.0 && t < 5.0);
}
