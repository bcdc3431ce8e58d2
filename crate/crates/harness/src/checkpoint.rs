//! Plain-text state dump.
//!
//! ```text
//! wavewall-checkpoint 1
//! dim 2
//! n 33
//! extents 1 1
//! time 0.25
//! u 1089
//! <1089 values, one per line>
//! ut 1089
//! ...
//! w 33
//! ...
//! wt 33
//! ...
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so a dump reads back
//! bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wavewall_core::{Mesh, State};

const MAGIC: &str = "wavewall-checkpoint 1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("checkpoint is for {found}, mesh is {expected}")]
    Mismatch { found: String, expected: String },
}

fn header(mesh: &Mesh) -> String {
    let ext: Vec<String> = mesh.extents[..mesh.dim].iter().map(|e| e.to_string()).collect();
    format!("dim {}\nn {}\nextents {}\n", mesh.dim, mesh.n, ext.join(" "))
}

pub fn format_checkpoint(state: &State, mesh: &Mesh) -> String {
    let mut out = format!("{MAGIC}\n{}time {}\n", header(mesh), state.time);
    for (name, field) in [("u", &state.u), ("ut", &state.ut), ("w", &state.w), ("wt", &state.wt)] {
        let _ = writeln!(out, "{name} {}", field.len());
        for v in field.iter() {
            let _ = writeln!(out, "{v}");
        }
    }
    out
}

pub fn write_checkpoint(path: &Path, state: &State, mesh: &Mesh) -> Result<(), CheckpointError> {
    std::fs::write(path, format_checkpoint(state, mesh)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_checkpoint(text: &str, mesh: &Mesh) -> Result<State, CheckpointError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| CheckpointError::Format {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    };
    let (l, magic) = next("header")?;
    if magic != MAGIC {
        return Err(CheckpointError::Format {
            line: l,
            message: format!("expected '{MAGIC}'"),
        });
    }
    let mut found = String::new();
    for key in ["dim", "n", "extents"] {
        let (l, line) = next(key)?;
        let rest = line.strip_prefix(key).ok_or_else(|| CheckpointError::Format {
            line: l,
            message: format!("expected '{key}'"),
        })?;
        let _ = writeln!(found, "{key}{rest}");
    }
    let expected = header(mesh);
    let normalise = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalise(&found) != normalise(&expected) {
        return Err(CheckpointError::Mismatch {
            found: normalise(&found),
            expected: normalise(&expected),
        });
    }
    let (l, line) = next("time")?;
    let time = line
        .strip_prefix("time ")
        .and_then(|t| t.trim().parse::<f64>().ok())
        .ok_or_else(|| CheckpointError::Format {
            line: l,
            message: "expected 'time <value>'".into(),
        })?;

    let mut state = State::zeros(mesh);
    state.time = time;
    for (name, field) in [
        ("u", &mut state.u),
        ("ut", &mut state.ut),
        ("w", &mut state.w),
        ("wt", &mut state.wt),
    ] {
        let (l, line) = next(name)?;
        let len_ok = line
            .strip_prefix(name)
            .and_then(|r| r.trim().parse::<usize>().ok())
            .is_some_and(|n| n == field.len());
        if !len_ok {
            return Err(CheckpointError::Format {
                line: l,
                message: format!("expected '{name} {}'", field.len()),
            });
        }
        for slot in field.iter_mut() {
            let (l, v) = next("value")?;
            *slot = v.parse().map_err(|_| CheckpointError::Format {
                line: l,
                message: format!("'{v}' is not a number"),
            })?;
        }
    }
    if !state.satisfies_masks(mesh) {
        return Err(CheckpointError::Format {
            line: 0,
            message: "state violates the boundary conditions".into(),
        });
    }
    Ok(state)
}

pub fn read_checkpoint(path: &Path, mesh: &Mesh) -> Result<State, CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_checkpoint(&text, mesh)
}
