//! Experiment configuration: file loading, flag overrides and validation.
//!
//! Frequencies are given as ordinary frequencies (MHz, GHz) and converted to
//! rad/ns on use. Every key has a default, so an empty file is a valid config
//! that reproduces the device parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stadrag_core::experiment::{PhysicsParams, RunOptions};
use stadrag_core::fields::ScheduleKind;
use stadrag_core::quantum::Truncation;
use stadrag_core::tomography::{CalibrationTable, Readout, TomographyMode};
use stadrag_core::units::{defaults, ghz, mhz};

use crate::error::AppError;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "STADRAG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Transfer,
    QstTrajectory,
    SshRealtime,
    SshVirtual,
    SshSweep,
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleChoice {
    Sinusoidal,
    Hanning,
}

impl ScheduleChoice {
    pub fn kind(self) -> ScheduleKind {
        match self {
            ScheduleChoice::Sinusoidal => ScheduleKind::Linear,
            ScheduleChoice::Hanning => ScheduleKind::Hanning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Levels {
    Two,
    Three,
}

impl Levels {
    pub fn truncation(self) -> Truncation {
        match self {
            Levels::Two => Truncation::TwoLevel,
            Levels::Three => Truncation::ThreeLevel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomographyChoice {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SshMode {
    Realtime,
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Ω/2π for the transfer pulse.
    pub omega_mhz: f64,
    /// Ω₂/2π for the SSH geometry; Ω₁ = αΩ₂.
    pub omega2_mhz: f64,
    pub delta2_mhz: f64,
    pub qubit_ghz: f64,
    pub t1_ns: f64,
    pub t2_star_ns: f64,
    pub schedule: ScheduleChoice,
    /// Pulse length; 15 ns for transfer/QST and 20 ns for SSH when unset.
    pub duration_ns: Option<f64>,
    pub dt_ns: f64,
    pub record_interval_ns: f64,
    pub lab_dt_ns: f64,
    pub dissipation: bool,
    pub drag: bool,
    pub levels: Levels,
    pub tomography: TomographyChoice,
    pub shots: u32,
    pub seed: u64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f0p: f64,
    pub f1p: f64,
    pub f2p: f64,
    pub alphas: Vec<f64>,
    pub ssh_mode: SshMode,
    pub momentum_points: u32,
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_points: u32,
    pub lattice_cells: usize,
    pub lattice_alpha_points: u32,
    pub edge_alpha: f64,
    /// Edge-state threshold as a fraction of Ω₂.
    pub edge_threshold: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let [f0, f1, f2] = defaults::CALIBRATION_PRIMARY;
        let [f0p, f1p, f2p] = defaults::CALIBRATION_SECONDARY;
        Self {
            experiment: ExperimentKind::Transfer,
            omega_mhz: defaults::DRIVE_MHZ,
            omega2_mhz: defaults::DRIVE_MHZ,
            delta2_mhz: defaults::ANHARMONICITY_MHZ,
            qubit_ghz: defaults::QUBIT_GHZ,
            t1_ns: defaults::T1_NS,
            t2_star_ns: defaults::T2_STAR_NS,
            schedule: ScheduleChoice::Hanning,
            duration_ns: None,
            dt_ns: defaults::TIME_STEP_NS,
            record_interval_ns: defaults::RECORD_INTERVAL_NS,
            lab_dt_ns: defaults::LAB_TIME_STEP_NS,
            dissipation: true,
            drag: true,
            levels: Levels::Three,
            tomography: TomographyChoice::Exact,
            shots: defaults::SHOTS,
            seed: 0,
            f0,
            f1,
            f2,
            f0p,
            f1p,
            f2p,
            alphas: vec![0.0, 0.6, 1.0, 1.2, 1.6],
            ssh_mode: SshMode::Realtime,
            momentum_points: defaults::MOMENTUM_POINTS,
            sweep_start: 0.0,
            sweep_stop: 2.0,
            sweep_points: 21,
            lattice_cells: 40,
            lattice_alpha_points: 81,
            edge_alpha: 0.5,
            edge_threshold: 1e-3,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

fn config_error(source: &str, key: &str, message: impl std::fmt::Display) -> AppError {
    let line = source
        .lines()
        .position(|l| {
            let l = l.trim_start().trim_start_matches('"');
            l.starts_with(key) && l[key.len()..].trim_start_matches('"').trim_start().starts_with([':', '='])
        })
        .map(|i| format!("line {}: ", i + 1))
        .unwrap_or_default();
    AppError::Config(format!("{line}`{key}`: {message}"))
}

impl ExperimentConfig {
    pub fn parse(source: &str, format: ConfigFormat) -> Result<Self, AppError> {
        let cfg: Self = match format {
            ConfigFormat::Json => serde_json::from_str(source).map_err(|e| AppError::Config(e.to_string()))?,
            ConfigFormat::Toml => toml::from_str(source).map_err(|e| AppError::Config(e.to_string()))?,
        };
        cfg.validate_with_source(source)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&source, ConfigFormat::from_path(path))
            .map_err(|e| match e {
                AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises to JSON")
    }

    /// Applies `key = value` overrides. Values are read as JSON scalars, and
    /// fall back to plain strings, so `--schedule hanning` and
    /// `--alphas [0,0.5]` both work.
    pub fn with_overrides<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(self, overrides: I) -> Result<Self, AppError> {
        let mut value = serde_json::to_value(&self).expect("config serialises to JSON");
        let map = value.as_object_mut().expect("config is a JSON object");
        for (key, raw) in overrides {
            if !map.contains_key(key) {
                return Err(AppError::Config(format!("unknown key `{key}`")));
            }
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_owned()));
            map.insert(key.to_owned(), parsed);
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| AppError::Config(format!("override: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.validate_with_source("")
    }

    fn validate_with_source(&self, src: &str) -> Result<(), AppError> {
        let positive = [
            ("omega_mhz", self.omega_mhz),
            ("omega2_mhz", self.omega2_mhz),
            ("qubit_ghz", self.qubit_ghz),
            ("t1_ns", self.t1_ns),
            ("t2_star_ns", self.t2_star_ns),
            ("dt_ns", self.dt_ns),
            ("record_interval_ns", self.record_interval_ns),
            ("lab_dt_ns", self.lab_dt_ns),
            ("edge_threshold", self.edge_threshold),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(src, key, format!("must be a positive number, got {v}")));
            }
        }
        if !(self.delta2_mhz < 0.0) {
            return Err(config_error(src, "delta2_mhz", "anharmonicity must be negative"));
        }
        if self.t2_star_ns > 2.0 * self.t1_ns {
            return Err(config_error(src, "t2_star_ns", "T2* may not exceed 2 T1"));
        }
        if let Some(d) = self.duration_ns {
            if !(d > 0.0 && d.is_finite()) {
                return Err(config_error(src, "duration_ns", "must be positive"));
            }
        }
        if self.alphas.is_empty() {
            return Err(config_error(src, "alphas", "needs at least one hopping ratio"));
        }
        if let Some(a) = self.alphas.iter().chain([&self.edge_alpha]).find(|a| !(**a >= 0.0)) {
            return Err(config_error(src, "alphas", format!("hopping ratios must be non-negative, got {a}")));
        }
        if self.momentum_points < 1 {
            return Err(config_error(src, "momentum_points", "must be at least 1"));
        }
        if self.sweep_points < 2 || !(self.sweep_stop > self.sweep_start) || self.sweep_start < 0.0 {
            return Err(config_error(src, "sweep_points", "sweep needs at least 2 points on 0 <= start < stop"));
        }
        if self.lattice_cells < 2 {
            return Err(config_error(src, "lattice_cells", "needs at least 2 unit cells"));
        }
        if self.lattice_alpha_points < 2 {
            return Err(config_error(src, "lattice_alpha_points", "needs at least 2 points"));
        }
        if self.tomography == TomographyChoice::Sampled && self.shots == 0 {
            return Err(config_error(src, "shots", "sampled tomography needs at least one shot"));
        }
        for (key, v) in [("f0", self.f0), ("f1", self.f1), ("f2", self.f2), ("f0p", self.f0p), ("f1p", self.f1p), ("f2p", self.f2p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(config_error(src, key, "calibration probabilities must lie in [0, 1]"));
            }
        }
        for (key, d) in [("duration_ns", self.duration(ExperimentKind::Transfer)), ("duration_ns", self.duration(ExperimentKind::SshRealtime))] {
            let n = d / self.record_interval_ns;
            if (n - n.round()).abs() > 1e-9 {
                return Err(config_error(src, key, "must be a multiple of record_interval_ns"));
            }
        }
        Ok(())
    }

    pub fn physics(&self) -> PhysicsParams {
        PhysicsParams {
            omega: mhz(self.omega_mhz),
            omega2: mhz(self.omega2_mhz),
            delta2: mhz(self.delta2_mhz),
            omega10: ghz(self.qubit_ghz),
            t1: self.t1_ns,
            t2_star: self.t2_star_ns,
        }
    }

    pub fn duration(&self, experiment: ExperimentKind) -> f64 {
        self.duration_ns.unwrap_or(match experiment {
            ExperimentKind::Transfer | ExperimentKind::QstTrajectory => defaults::TRANSFER_DURATION_NS,
            _ => defaults::SSH_DURATION_NS,
        })
    }

    pub fn run_options(&self, experiment: ExperimentKind) -> RunOptions {
        RunOptions {
            duration: self.duration(experiment),
            dt: self.dt_ns,
            record_interval: self.record_interval_ns,
            dissipation: self.dissipation,
            drag: self.drag,
            truncation: self.levels.truncation(),
        }
    }

    pub fn calibration(&self) -> Result<CalibrationTable, AppError> {
        Ok(CalibrationTable::new([self.f0, self.f1, self.f2], [self.f0p, self.f1p, self.f2p])?)
    }

    /// Readout for one parallel cell, seeded with `seed ⊕ cell`.
    pub fn readout(&self, cell: u64) -> Result<Readout, AppError> {
        let mode = match self.tomography {
            TomographyChoice::Exact => TomographyMode::Exact,
            TomographyChoice::Sampled => TomographyMode::Sampled { shots: self.shots, seed: self.seed ^ cell },
        };
        Ok(Readout::new(self.calibration()?, mode)?)
    }

    pub fn sweep_alphas(&self) -> Vec<f64> {
        linspace(self.sweep_start, self.sweep_stop, self.sweep_points)
    }

    pub fn lattice_alphas(&self) -> Vec<f64> {
        linspace(self.sweep_start, self.sweep_stop, self.lattice_alpha_points)
    }
}

fn linspace(a: f64, b: f64, n: u32) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
