//! Campaign configuration file and the inputs it resolves to.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ChannelMode, ControlError, FeedbackConfig, Shaping, DEFAULT_BANDWIDTH_HZ, DEFAULT_REDUCED_ORDER};
use crate::forces::reference::{shipped_coefficients, REFERENCE_LEAD};
use crate::forces::{identify_pwem, ForceCoefficientSet, ForceError, PwemModel};
use crate::metrics::{default_load_cases, LoadCase, WoehlerExponents};
use crate::plant::{demo_parameters, PlantError, PlantParameters};
use crate::sim::{Mode, Scenario, SimulationContext, WaveInput};

/// Overrides `output_dir` when set.
pub const OUT_ENV: &str = "WAVEFEED_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Forces(#[from] ForceError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

impl ConfigError {
    /// True for errors caused by unreadable or malformed input files.
    pub fn is_parse(&self) -> bool {
        matches!(self, ConfigError::Read { .. } | ConfigError::Parse { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Plant parameter TOML; the shipped demo plant when absent.
    pub plant: Option<PathBuf>,
    /// Wave force coefficient CSV; the shipped set when absent.
    pub coefficients: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub modes: Vec<Mode>,
    /// Each seed `s` drives waves with seed `s` and wind with `1000 + s`.
    pub seeds: Vec<u64>,
    pub load_cases: Vec<LoadCase>,
    pub k_ff: f64,
    pub shaping: bool,
    pub ff_order: usize,
    /// rad/s
    pub hp_corner: f64,
    pub channel_mode: ChannelMode,
    pub pwem_order: usize,
    /// Prediction horizon and PWEM delay t_p (s).
    pub prediction_delay: f64,
    /// m
    pub upstream_distance: f64,
    pub n_components: usize,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    pub turbulence_intensity: f64,
    pub bandwidth_hz: f64,
    pub damping_ratio: f64,
    pub woehler: WoehlerExponents,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    /// Write one CSV and JSON per run.
    pub write_records: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let shaping = Shaping::default();
        CampaignConfig {
            plant: None,
            coefficients: None,
            output_dir: PathBuf::from("wavefeed-out"),
            modes: Mode::ALL.to_vec(),
            seeds: vec![1, 2],
            load_cases: default_load_cases(),
            k_ff: 1.0,
            shaping: true,
            ff_order: DEFAULT_REDUCED_ORDER,
            hp_corner: shaping.hp_corner,
            channel_mode: ChannelMode::Auto,
            pwem_order: 9,
            prediction_delay: REFERENCE_LEAD,
            upstream_distance: 313.0,
            n_components: 200,
            duration: 3600.0,
            dt: 0.05,
            turbulence_intensity: 0.04,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            damping_ratio: 0.7,
            woehler: WoehlerExponents::default(),
            threads: 0,
            write_records: true,
        }
    }
}

fn file_error(path: &Path, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Parse { path: path.display().to_string(), msg: e.to_string() }
}

/// Wave band used for identification and prediction, rad/s.
pub const WAVE_BAND: (f64, f64) = (std::f64::consts::TAU / 20.0, std::f64::consts::TAU / 3.0);

impl CampaignConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: CampaignConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        // input paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.plant, &mut cfg.coefficients].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the values that do not need the input files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.modes.is_empty() {
            return bad("at least one mode is required");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.load_cases.is_empty() {
            return bad("at least one load case is required");
        }
        for c in &self.load_cases {
            c.validate().map_err(ConfigError::Invalid)?;
        }
        if self.shaping && (self.ff_order == 0 || !(self.hp_corner > 0.0)) {
            return bad("shaping needs ff_order ≥ 1 and hp_corner > 0");
        }
        if self.pwem_order == 0 {
            return bad("pwem_order must be at least 1");
        }
        self.scenario(Mode::Baseline, &self.load_cases[0], self.seeds[0])
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Output directory after the environment override.
    pub fn resolved_output(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }

    pub fn shaping(&self) -> Option<Shaping> {
        self.shaping.then_some(Shaping { order: self.ff_order, hp_corner: self.hp_corner })
    }

    pub fn scenario(&self, mode: Mode, case: &LoadCase, seed: u64) -> Scenario {
        Scenario {
            load_case: *case,
            duration: self.duration,
            dt: self.dt,
            wave_seed: seed,
            wind_seed: 1000 + seed,
            mode,
            k_ff: self.k_ff,
            turbulence_intensity: self.turbulence_intensity,
            distance: self.upstream_distance,
            horizon: self.prediction_delay,
            channel_mode: self.channel_mode,
            shaping: self.shaping(),
            waves: WaveInput::Irregular { components: self.n_components },
            force_model: Default::default(),
        }
    }

    pub fn load_plant(&self) -> Result<PlantParameters, ConfigError> {
        match &self.plant {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?;
                PlantParameters::from_toml(&text).map_err(|e| file_error(p, e))
            }
            None => Ok(demo_parameters()),
        }
    }

    pub fn load_coefficients(&self) -> Result<ForceCoefficientSet<f64>, ConfigError> {
        match &self.coefficients {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?;
                ForceCoefficientSet::from_csv(&text).map_err(|e| file_error(p, e))
            }
            None => Ok(shipped_coefficients()),
        }
    }

    pub fn identify(&self, coefficients: &ForceCoefficientSet<f64>) -> Result<PwemModel<f64>, ConfigError> {
        Ok(identify_pwem(coefficients, self.prediction_delay, self.pwem_order, WAVE_BAND)?)
    }

    /// Loads the inputs, identifies the PWEM and designs the feedback.
    pub fn context(&self) -> Result<SimulationContext, ConfigError> {
        self.validate()?;
        let params = self.load_plant()?;
        let coefficients = self.load_coefficients()?;
        let pwem = self.identify(&coefficients)?;
        let feedback = FeedbackConfig::design(&params, self.bandwidth_hz, self.damping_ratio)?;
        Ok(SimulationContext { params, coefficients, pwem, feedback })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = CampaignConfig::default();
        assert_eq!(CampaignConfig::from_toml(&cfg.to_toml(), "mem").unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_the_default_campaign() {
        let cfg = CampaignConfig::from_toml("", "mem").unwrap();
        assert_eq!(cfg, CampaignConfig::default());
        assert_eq!(cfg.modes.len() * cfg.load_cases.len() * cfg.seeds.len(), 42);
    }

    #[test]
    fn partial_file_overrides_keys() {
        let cfg = CampaignConfig::from_toml("modes = [\"BL\", \"BL+FF\"]\nseeds = [7]\nk_ff = 0.5\n", "mem").unwrap();
        assert_eq!(cfg.modes, vec![Mode::Baseline, Mode::Feedforward]);
        let sc = cfg.scenario(Mode::Feedforward, &cfg.load_cases[3], 7);
        assert_eq!((sc.wave_seed, sc.wind_seed, sc.k_ff), (7, 1007, 0.5));
        assert_eq!(sc.load_case.wind_speed, 13.9);
    }

    #[test]
    fn invalid_files_are_rejected() {
        for text in ["modes = []", "seeds = []", "dt = -1.0", "unknown_key = 3", "k_ff = \"one\"", "pwem_order = 0"] {
            assert!(CampaignConfig::from_toml(text, "mem").is_err(), "{text}");
        }
        let parse = CampaignConfig::from_toml("k_ff = [", "mem").unwrap_err();
        assert!(parse.is_parse());
        assert!(!CampaignConfig::from_toml("modes = []", "mem").unwrap_err().is_parse());
    }

    #[test]
    fn missing_input_files_fail_to_load() {
        let cfg = CampaignConfig { plant: Some("/nonexistent/plant.toml".into()), ..Default::default() };
        assert!(matches!(cfg.load_plant(), Err(ConfigError::Read { .. })));
        let cfg = CampaignConfig { coefficients: Some("/nonexistent/c.csv".into()), ..Default::default() };
        assert!(cfg.context().unwrap_err().is_parse());
    }

    #[test]
    fn relative_inputs_resolve_against_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "plant = \"p.toml\"\n").unwrap();
        let cfg = CampaignConfig::load(&path).unwrap();
        assert_eq!(cfg.plant.unwrap(), dir.path().join("p.toml"));
    }
}
