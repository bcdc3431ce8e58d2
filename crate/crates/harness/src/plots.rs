//! SVG plots of a run.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use wavewall_core::WellClass;

use crate::scenario::{HarnessError, ScenarioOutcome};

const SIZE: (u32, u32) = (800, 480);

fn plot_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Plot {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    Some((lo - pad, hi + pad))
}

fn line_plot(path: &Path, title: &str, ylabel: &str, pts: &[(f64, f64)]) -> Result<(), HarnessError> {
    let Some((x0, x1)) = range(pts.iter().map(|p| p.0)) else {
        return Ok(());
    };
    let Some((y0, y1)) = range(pts.iter().map(|p| p.1)) else {
        return Ok(());
    };
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc(ylabel)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(LineSeries::new(pts.iter().copied().filter(|p| p.1.is_finite()), &BLUE))
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}

fn log_plot(path: &Path, title: &str, pts: &[(f64, f64)]) -> Result<bool, HarnessError> {
    let pos: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
    let Some((x0, x1)) = range(pos.iter().map(|p| p.0)) else {
        return Ok(false);
    };
    let lo = pos.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pos.iter().map(|p| p.1).fold(0.0, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (0.5 * lo, 2.0 * hi) };
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, (lo..hi).log_scale())
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc("Y (log)")
        .draw()
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(LineSeries::new(pos, &RED))
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))?;
    Ok(true)
}

fn class_level(c: WellClass) -> f64 {
    match c {
        WellClass::W1 => 0.0,
        WellClass::Boundary => 1.0,
        WellClass::W2 => 2.0,
        WellClass::Outside => 3.0,
    }
}

fn class_plot(path: &Path, pts: &[(f64, WellClass)]) -> Result<(), HarnessError> {
    let Some((x0, x1)) = range(pts.iter().map(|p| p.0)) else {
        return Ok(());
    };
    // step function: hold each class until the next sample
    let mut steps = Vec::with_capacity(2 * pts.len());
    for (k, (t, c)) in pts.iter().enumerate() {
        if k > 0 {
            steps.push((*t, class_level(pts[k - 1].1)));
        }
        steps.push((*t, class_level(*c)));
    }
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("well classification", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, -0.5f64..3.5)
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_labels(4)
        .y_label_formatter(&|v| {
            match v.round() as i64 {
                0 => "W1",
                1 => "boundary",
                2 => "W2",
                3 => "outside",
                _ => "",
            }
            .to_string()
        })
        .draw()
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(LineSeries::new(steps, &BLACK))
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}

/// `E(t)`, `𝓔(t)`, `Y(t)` on a log axis (when defined) and the class
/// timeline. Returns the files written.
pub fn emit_plots(outcome: &ScenarioOutcome, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let Some(rec) = &outcome.record else {
        return Ok(Vec::new());
    };
    let prefix = &outcome.prepared.config.output.prefix;
    let file = |s: &str| dir.join(format!("{prefix}_{s}.svg"));
    let series = |f: fn(&wavewall_core::EnergySnapshot) -> f64| -> Vec<(f64, f64)> {
        rec.snapshots.iter().map(|s| (s.time, f(s))).collect()
    };
    let mut written = Vec::new();

    let path = file("E");
    line_plot(&path, "quadratic energy E(t)", "E", &series(|s| s.quadratic))?;
    written.push(path);
    let path = file("totalE");
    line_plot(&path, "total energy", "totalE", &series(|s| s.total))?;
    written.push(path);
    let path = file("Y");
    if log_plot(&path, "blow-up functional Y(t)", &series(|s| s.y))? {
        written.push(path);
    }
    let path = file("class");
    let classes: Vec<(f64, WellClass)> = rec
        .snapshots
        .iter()
        .zip(&outcome.classes)
        .map(|(s, c)| (s.time, *c))
        .collect();
    class_plot(&path, &classes)?;
    written.push(path);
    Ok(written)
}
