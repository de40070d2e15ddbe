//! Baseline feedback, wave feedforward synthesis and channel scheduling.

pub mod feedback;
pub mod feedforward;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lti::LtiError;
use crate::plant::{OperatingPoint, PlantError, BLADE_PITCH, GENERATOR_TORQUE};

pub use feedback::{closed_loop, BaselineController, FeedbackConfig, GainPoint, DEFAULT_BANDWIDTH_HZ};
pub use feedforward::{
    design_feedforward, shape_controller, synthesize_ff, wave_response, BodePoint, FeedforwardController, Shaping, LEAD_EPS,
    DEFAULT_REDUCED_ORDER, PREDICTED_ELEVATION, SHAPING_BUDGET_DB,
};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model for synthesis: {0}")]
    InvalidModel(String),
    #[error("G_u→Ω is non-minimum-phase; right-half-plane zeros at {zeros:?}")]
    NonMinimumPhase { zeros: Vec<Complex<f64>> },
    #[error("reduced controller deviates {deviation_db:.2} dB from the full-order one on the wave band; raise the reduced order above {order} (full order {full_order})")]
    ShapingBudget { deviation_db: f64, order: usize, full_order: usize },
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

/// Actuator the feedforward acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Torque,
    Pitch,
}

impl Channel {
    /// Plant input name.
    pub fn input(self) -> &'static str {
        match self {
            Channel::Torque => GENERATOR_TORQUE,
            Channel::Pitch => BLADE_PITCH,
        }
    }
}

/// Channel selection: automatic or forced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    #[default]
    Auto,
    Torque,
    Pitch,
}

impl std::str::FromStr for ChannelMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(ChannelMode::Auto),
            "torque" => Ok(ChannelMode::Torque),
            "pitch" => Ok(ChannelMode::Pitch),
            _ => Err(format!("unknown channel mode {s:?} (expected auto, torque or pitch)")),
        }
    }
}

/// Width of the hysteresis band centred on rated wind speed (m/s).
pub const SCHEDULE_HYSTERESIS: f64 = 0.5;

/// Torque below rated, pitch above, with a hysteresis band around rated.
#[derive(Clone, Debug)]
pub struct ChannelScheduler {
    rated_wind: f64,
    current: Option<Channel>,
}

impl ChannelScheduler {
    pub fn new(rated_wind: f64) -> Self {
        ChannelScheduler { rated_wind, current: None }
    }

    pub fn current(&self) -> Option<Channel> {
        self.current
    }

    /// Channel for mean wind `wind`. Inside the band the previous choice is
    /// kept; the first call inside the band picks torque below rated and
    /// pitch at or above.
    pub fn select(&mut self, wind: f64) -> Channel {
        let half = 0.5 * SCHEDULE_HYSTERESIS;
        let ch = if wind < self.rated_wind - half {
            Channel::Torque
        } else if wind > self.rated_wind + half {
            Channel::Pitch
        } else {
            match self.current {
                Some(c) => c,
                None if wind < self.rated_wind => Channel::Torque,
                None => Channel::Pitch,
            }
        };
        self.current = Some(ch);
        ch
    }
}

/// Stateless scheduling of one operating point.
pub fn schedule_channel(op: &OperatingPoint, rated_wind: f64, previous: Option<Channel>) -> Channel {
    let mut s = ChannelScheduler { rated_wind, current: previous };
    s.select(op.wind_speed)
}

/// Resolves a [`ChannelMode`] at an operating point.
pub fn resolve_channel(mode: ChannelMode, op: &OperatingPoint, rated_wind: f64) -> Channel {
    match mode {
        ChannelMode::Torque => Channel::Torque,
        ChannelMode::Pitch => Channel::Pitch,
        ChannelMode::Auto => schedule_channel(op, rated_wind, None),
    }
}
