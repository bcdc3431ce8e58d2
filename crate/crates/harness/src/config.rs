//! Flat `key = value` configuration with dotted section prefixes.
//!
//! Blank lines and `#` comments are ignored. Every key is listed in
//! [`KEYS`]; anything else is rejected with its line number.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use wavewall_core::params::ParamErrors;
use wavewall_core::presets::Preset;
use wavewall_core::{Geometry, ModelParams, RawParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamErrors),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    GlobalW1,
    BlowupNegative,
    BlowupPositiveW2,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::GlobalW1 => "global_W1",
            ScenarioKind::BlowupNegative => "blowup_negative",
            ScenarioKind::BlowupPositiveW2 => "blowup_positive_W2",
            ScenarioKind::Custom => "custom",
        }
    }

    fn default_preset(self) -> Preset {
        match self {
            ScenarioKind::GlobalW1 => Preset::W1Small,
            ScenarioKind::BlowupNegative => Preset::BumpWave,
            ScenarioKind::BlowupPositiveW2 => Preset::W2Large,
            ScenarioKind::Custom => Preset::BumpBoth,
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            ScenarioKind::GlobalW1,
            ScenarioKind::BlowupNegative,
            ScenarioKind::BlowupPositiveW2,
            ScenarioKind::Custom,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown scenario '{s}' (expected global_W1, blowup_negative, blowup_positive_W2 or custom)"))
    }
}

/// What the amplitude search aims for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    None,
    NegativeEnergy,
    UnstableWell,
    StableWell,
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(TargetKind::None),
            "negative_energy" => Ok(TargetKind::NegativeEnergy),
            "unstable_well" => Ok(TargetKind::UnstableWell),
            "stable_well" => Ok(TargetKind::StableWell),
            _ => Err(format!(
                "unknown target '{s}' (expected none, negative_energy, unstable_well or stable_well)"
            )),
        }
    }
}

/// Energy scale a well target is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetReference {
    DUpper,
    Dhat,
    MinADhat,
}

impl FromStr for TargetReference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "d_upper" => Ok(TargetReference::DUpper),
            "dhat" => Ok(TargetReference::Dhat),
            "min_A_dhat" => Ok(TargetReference::MinADhat),
            _ => Err(format!("unknown reference '{s}' (expected d_upper, dhat or min_A_dhat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub preset: Option<Preset>,
    pub amplitude: Option<f64>,
    pub target: Option<TargetKind>,
    pub target_ratio: f64,
    pub target_energy: Option<f64>,
    pub target_reference: Option<TargetReference>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: Option<f64>,
    pub stride: usize,
    pub cap: Option<f64>,
    pub cap_factor: f64,
    pub max_steps: usize,
    pub residual_budget: f64,
    pub max_halvings: u32,
    /// Seconds; zero disables the budget.
    pub wall_clock: f64,
    pub fast_scale_limit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsSpec {
    pub starts: usize,
    pub directions: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub prefix: String,
    pub plots: bool,
    pub checkpoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub geometry: Geometry,
    pub params: RawParams,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    pub sources: bool,
    pub damping: bool,
    pub constants: ConstantsSpec,
    pub eps_multiplier: f64,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Custom,
            seed: 0x5eed,
            geometry: Geometry::default(),
            params: RawParams::default(),
            initial: InitialSpec {
                preset: None,
                amplitude: None,
                target: None,
                target_ratio: 2.0,
                target_energy: None,
                target_reference: None,
                checkpoint: None,
            },
            time: TimeSpec {
                dt: 1e-2,
                t_end: None,
                stride: 10,
                cap: None,
                cap_factor: 1e8,
                max_steps: 5_000_000,
                residual_budget: 1e-3,
                max_halvings: 3,
                wall_clock: 0.0,
                fast_scale_limit: true,
            },
            sources: true,
            damping: true,
            constants: ConstantsSpec {
                starts: 8,
                directions: 128,
                max_iter: 10_000,
                rel_tol: 1e-8,
            },
            eps_multiplier: 1.0,
            output: OutputSpec {
                dir: PathBuf::from("out"),
                prefix: "run".into(),
                plots: true,
                checkpoint: false,
            },
        }
    }
}

/// Every accepted key, its default, and what it sets. The README table
/// mirrors this list and a test keeps the two in step.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scenario", "custom", "global_W1, blowup_negative, blowup_positive_W2 or custom"),
    ("seed", "24301", "seed for the constants estimator; sweeps add the member index"),
    ("geometry.dim", "2", "2 or 3"),
    ("geometry.extents", "1,1", "side lengths, one per axis; the last axis is vertical"),
    ("geometry.n", "33", "grid points per axis"),
    ("params.p", "3", "wave source exponent"),
    ("params.q", "3", "plate source exponent"),
    ("params.m", "2", "wave damping exponent"),
    ("params.r", "2", "plate damping exponent"),
    ("params.alpha", "1", "lower damping bound"),
    ("params.beta", "1", "upper damping bound"),
    ("initial.preset", "by scenario", "bump_wave, bump_plate, bump_both, W1_small or W2_large"),
    ("initial.amplitude", "unset", "fixed amplitude; disables the scenario's default target"),
    ("initial.target", "by scenario", "none, negative_energy, unstable_well or stable_well"),
    ("initial.target_ratio", "2", "S(0)/E(0) for negative_energy"),
    ("initial.target_energy", "0.25 / 0.5", "totalE(0) as a fraction of the reference (stable / unstable)"),
    ("initial.target_reference", "d_upper / min_A_dhat", "d_upper, dhat or min_A_dhat (stable / unstable)"),
    ("initial.checkpoint", "unset", "start from a checkpoint file instead of a preset"),
    ("time.dt", "0.01", "nominal step"),
    ("time.t_end", "20 / 50 / 1", "horizon (global_W1 / blow-up / custom)"),
    ("time.stride", "10", "snapshot every stride steps"),
    ("time.cap", "unset", "absolute divergence cap on E; overrides cap_factor"),
    ("time.cap_factor", "1e8", "cap = factor * E(0) + factor"),
    ("time.max_steps", "5000000", "step limit"),
    ("time.residual_budget", "1e-3", "per-step energy defect allowed, relative to 1 + E"),
    ("time.max_halvings", "3", "step halvings before a step is accepted as unreliable"),
    ("time.wall_clock", "0", "wall-clock budget in seconds; 0 disables it"),
    ("time.fast_scale_limit", "true", "shorten dt where the sources are stiff"),
    ("physics.sources", "true", "false replaces both sources by zero"),
    ("physics.damping", "true", "false replaces both dampings by zero"),
    ("constants.starts", "8", "multi-starts per embedding constant"),
    ("constants.directions", "128", "directions sampled for d_upper"),
    ("constants.max_iter", "10000", "ascent iterations per start"),
    ("constants.rel_tol", "1e-8", "ascent stopping tolerance"),
    ("blowup.eps_multiplier", "1", "scales the selected epsilon (for epsilon sweeps)"),
    ("output.dir", "out", "output directory"),
    ("output.prefix", "run", "file name prefix"),
    ("output.plots", "true", "write SVG plots"),
    ("output.checkpoint", "false", "write the final state as a checkpoint"),
];

fn num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("'{value}': {e}"))
}

fn boolean(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{value}' is not a boolean")),
    }
}

impl RunConfig {
    /// Applies one `key = value` pair. Used by the parser and by sweeps.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value;
        match key {
            "scenario" => self.scenario = v.parse()?,
            "seed" => self.seed = num(v)?,
            "geometry.dim" => self.geometry.dim = num(v)?,
            "geometry.extents" => {
                let parts: Vec<f64> = v.split(',').map(|s| num(s.trim())).collect::<Result<_, _>>()?;
                if parts.is_empty() || parts.len() > 3 {
                    return Err(format!("expected 1 to 3 extents, got {}", parts.len()));
                }
                let mut e = [1.0; 3];
                e[..parts.len()].copy_from_slice(&parts);
                self.geometry.extents = e;
            }
            "geometry.n" => self.geometry.n = num(v)?,
            "params.p" => self.params.p = num(v)?,
            "params.q" => self.params.q = num(v)?,
            "params.m" => self.params.m = num(v)?,
            "params.r" => self.params.r = num(v)?,
            "params.alpha" => self.params.alpha = num(v)?,
            "params.beta" => self.params.beta = num(v)?,
            "initial.preset" => self.initial.preset = Some(v.parse().map_err(|e| format!("{e}"))?),
            "initial.amplitude" => self.initial.amplitude = Some(num(v)?),
            "initial.target" => self.initial.target = Some(v.parse()?),
            "initial.target_ratio" => self.initial.target_ratio = num(v)?,
            "initial.target_energy" => self.initial.target_energy = Some(num(v)?),
            "initial.target_reference" => self.initial.target_reference = Some(v.parse()?),
            "initial.checkpoint" => self.initial.checkpoint = Some(PathBuf::from(v)),
            "time.dt" => self.time.dt = num(v)?,
            "time.t_end" => self.time.t_end = Some(num(v)?),
            "time.stride" => self.time.stride = num(v)?,
            "time.cap" => self.time.cap = Some(num(v)?),
            "time.cap_factor" => self.time.cap_factor = num(v)?,
            "time.max_steps" => self.time.max_steps = num::<f64>(v)? as usize,
            "time.residual_budget" => self.time.residual_budget = num(v)?,
            "time.max_halvings" => self.time.max_halvings = num(v)?,
            "time.wall_clock" => self.time.wall_clock = num(v)?,
            "time.fast_scale_limit" => self.time.fast_scale_limit = boolean(v)?,
            "physics.sources" => self.sources = boolean(v)?,
            "physics.damping" => self.damping = boolean(v)?,
            "constants.starts" => self.constants.starts = num(v)?,
            "constants.directions" => self.constants.directions = num(v)?,
            "constants.max_iter" => self.constants.max_iter = num(v)?,
            "constants.rel_tol" => self.constants.rel_tol = num(v)?,
            "blowup.eps_multiplier" => self.eps_multiplier = num(v)?,
            "output.dir" => self.output.dir = PathBuf::from(v),
            "output.prefix" => self.output.prefix = v.to_string(),
            "output.plots" => self.output.plots = boolean(v)?,
            "output.checkpoint" => self.output.checkpoint = boolean(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn preset(&self) -> Preset {
        self.initial.preset.unwrap_or(self.scenario.default_preset())
    }

    /// The target after scenario defaults. An explicit amplitude without an
    /// explicit target means "use the amplitude as given".
    pub fn target(&self) -> TargetKind {
        if let Some(t) = self.initial.target {
            return t;
        }
        if self.initial.amplitude.is_some() {
            return TargetKind::None;
        }
        match self.scenario {
            ScenarioKind::GlobalW1 => TargetKind::StableWell,
            ScenarioKind::BlowupNegative => TargetKind::NegativeEnergy,
            ScenarioKind::BlowupPositiveW2 => TargetKind::UnstableWell,
            ScenarioKind::Custom => TargetKind::None,
        }
    }

    pub fn target_energy(&self) -> f64 {
        self.initial.target_energy.unwrap_or(match self.target() {
            TargetKind::StableWell => 0.25,
            _ => 0.5,
        })
    }

    pub fn target_reference(&self) -> TargetReference {
        self.initial.target_reference.unwrap_or(match self.target() {
            TargetKind::StableWell => TargetReference::DUpper,
            _ => TargetReference::MinADhat,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.initial.amplitude.unwrap_or(1.0)
    }

    pub fn t_end(&self) -> f64 {
        self.time.t_end.unwrap_or(match self.scenario {
            ScenarioKind::GlobalW1 => 20.0,
            ScenarioKind::BlowupNegative | ScenarioKind::BlowupPositiveW2 => 50.0,
            ScenarioKind::Custom => 1.0,
        })
    }

    /// Structural checks plus parameter validation.
    pub fn validate(&self) -> Result<ModelParams, ConfigError> {
        let g = &self.geometry;
        if !(2..=3).contains(&g.dim) {
            return Err(ConfigError::Invalid(format!("geometry.dim = {} (expected 2 or 3)", g.dim)));
        }
        if g.extents[..g.dim].iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(ConfigError::Invalid("geometry.extents must be positive".into()));
        }
        if g.n < 5 {
            return Err(ConfigError::Invalid(format!("geometry.n = {} (need at least 5)", g.n)));
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(ConfigError::Invalid(format!("time.dt = {} must be positive", t.dt)));
        }
        if !(self.t_end() > 0.0 && self.t_end().is_finite()) {
            return Err(ConfigError::Invalid("time.t_end must be positive".into()));
        }
        if t.stride == 0 {
            return Err(ConfigError::Invalid("time.stride must be at least 1".into()));
        }
        if !(t.cap_factor > 0.0) || t.cap.is_some_and(|c| !(c > 0.0)) {
            return Err(ConfigError::Invalid("divergence cap must be positive".into()));
        }
        if !(self.eps_multiplier > 0.0) {
            return Err(ConfigError::Invalid("blowup.eps_multiplier must be positive".into()));
        }
        if let Some(e) = self.initial.target_energy {
            if !(e.is_finite() && e >= 0.0) {
                return Err(ConfigError::Invalid("initial.target_energy must be a non-negative fraction".into()));
            }
        }
        Ok(self.params.validate(g.dim)?)
    }
}

/// Parses config text. Later lines override earlier ones.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line: i + 1, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
        cfg.set(key.trim(), value.trim()).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.geometry.dim, 2);
        assert_eq!(cfg.t_end(), 1.0);
    }

    #[test]
    fn four_dimensions_rejected() {
        assert!(matches!(parse_config("geometry.dim = 4"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn unknown_key_reports_line() {
        match parse_config("scenario = custom\n\nparams.z = 1\n") {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("params.z"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("time.dt"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_exponents_delegate_to_params() {
        assert!(matches!(parse_config("params.p = 1.5\nparams.m = 2"), Err(ConfigError::Params(_))));
    }

    #[test]
    fn scenario_defaults_and_overrides() {
        let cfg = parse_config("scenario = blowup_negative").unwrap();
        assert_eq!(cfg.preset(), Preset::BumpWave);
        assert_eq!(cfg.target(), TargetKind::NegativeEnergy);
        assert_eq!(cfg.t_end(), 50.0);
        let cfg = parse_config("scenario = blowup_negative\ninitial.amplitude = 0.1").unwrap();
        assert_eq!(cfg.target(), TargetKind::None);
        let cfg = parse_config("scenario=global_W1\ngeometry.extents = 2, 1\ninitial.target_reference=dhat").unwrap();
        assert_eq!(cfg.target(), TargetKind::StableWell);
        assert_eq!(cfg.target_reference(), TargetReference::Dhat);
        assert_eq!(cfg.geometry.extents, [2.0, 1.0, 1.0]);
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let mut cfg = RunConfig::default();
        for (key, _, _) in KEYS {
            let value = match *key {
                "scenario" => "custom",
                "geometry.extents" => "1,1",
                "initial.preset" => "bump_both",
                "initial.target" => "none",
                "initial.target_reference" => "dhat",
                "initial.checkpoint" | "output.dir" | "output.prefix" => "x",
                k if k.starts_with("physics.") || k == "output.plots" || k == "output.checkpoint" || k == "time.fast_scale_limit" => "true",
                "geometry.dim" => "2",
                _ => "3",
            };
            cfg.set(key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
