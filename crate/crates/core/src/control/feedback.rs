//! Baseline variable-speed variable-pitch controller.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::lti::{feedback, StateSpaceModel};
use crate::plant::rotor::torque_law;
use crate::plant::{OperatingPoint, PlantParameters, RatedValues, BLADE_PITCH, GENERATOR_TORQUE, ROTOR_SPEED};

/// PI gains designed at one steady pitch angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    /// rad
    pub pitch: f64,
    /// rad per rad/s
    pub kp: f64,
    /// rad per rad
    pub ki: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    /// Torque law and rated values (shared with the plant's steady states).
    pub rated: RatedValues,
    /// Gain schedule over the feedback pitch command, increasing in pitch.
    pub schedule: Vec<GainPoint>,
    /// Corner of the first-order rotor-speed filter (rad/s).
    pub speed_filter_corner: f64,
    pub max_pitch: f64,
    /// rad/s
    pub pitch_rate_limit: f64,
    /// Upper torque limit (N·m).
    pub max_torque: f64,
    /// N·m/s
    pub torque_rate_limit: f64,
    /// Closed-loop regulator bandwidth used for the schedule (Hz).
    pub bandwidth_hz: f64,
    pub damping_ratio: f64,
}

/// Default regulator bandwidth (Hz), below the demo platform pitch mode.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 0.025;

impl FeedbackConfig {
    /// Pole-placement design of the pitch PI at every above-rated entry of
    /// the gradient table. The rotor-only loop
    /// `J·Ω̇ = (∂Q/∂Ω + τ_r/Ω_r)·Ω + ∂Q/∂θ·θ` with `θ = kp·Ω + ki·∫Ω` gets
    /// characteristic polynomial `s² + 2ζω s + ω²`.
    pub fn design(params: &PlantParameters, bandwidth_hz: f64, damping_ratio: f64) -> Result<Self, ControlError> {
        params.validate()?;
        if !(bandwidth_hz > 0.0 && damping_ratio > 0.0) {
            return Err(ControlError::InvalidConfig("bandwidth and damping must be positive".into()));
        }
        let r = &params.rated;
        let w = std::f64::consts::TAU * bandwidth_hz;
        let j = params.structure.rotor_inertia;
        let mut schedule = Vec::new();
        for e in params.aero.iter().filter(|e| e.wind_speed >= r.wind_speed) {
            let a = e.dq_domega + r.torque / r.rotor_speed;
            let kp = -(2.0 * damping_ratio * w * j + a) / e.dq_dpitch;
            let ki = -w * w * j / e.dq_dpitch;
            schedule.push(GainPoint { pitch: e.pitch, kp, ki });
        }
        let cfg = FeedbackConfig {
            rated: r.clone(),
            schedule,
            speed_filter_corner: 2.0,
            max_pitch: 90f64.to_radians(),
            pitch_rate_limit: 10f64.to_radians(),
            max_torque: 1.1 * r.torque,
            torque_rate_limit: 0.3 * r.torque,
            bandwidth_hz,
            damping_ratio,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_for(params: &PlantParameters) -> Result<Self, ControlError> {
        Self::design(params, DEFAULT_BANDWIDTH_HZ, 0.7)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if self.schedule.is_empty() {
            return Err(ControlError::InvalidConfig("empty gain schedule".into()));
        }
        for g in &self.schedule {
            if !(g.kp.is_finite() && g.ki.is_finite() && g.pitch.is_finite()) {
                return Err(ControlError::InvalidConfig("non-finite gain".into()));
            }
        }
        if self.schedule.windows(2).any(|w| w[1].pitch <= w[0].pitch) {
            return Err(ControlError::InvalidConfig("gain schedule pitch angles must increase".into()));
        }
        for (name, v) in [
            ("speed_filter_corner", self.speed_filter_corner),
            ("max_pitch", self.max_pitch),
            ("pitch_rate_limit", self.pitch_rate_limit),
            ("max_torque", self.max_torque),
            ("torque_rate_limit", self.torque_rate_limit),
        ] {
            if !(v > 0.0) {
                return Err(ControlError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// PI gains at pitch angle `pitch` (linear interpolation, clamped).
    pub fn gains(&self, pitch: f64) -> (f64, f64) {
        let s = &self.schedule;
        if pitch <= s[0].pitch {
            return (s[0].kp, s[0].ki);
        }
        let last = &s[s.len() - 1];
        if pitch >= last.pitch {
            return (last.kp, last.ki);
        }
        let i = s.partition_point(|g| g.pitch <= pitch);
        let (a, b) = (&s[i - 1], &s[i]);
        let f = (pitch - a.pitch) / (b.pitch - a.pitch);
        (a.kp + (b.kp - a.kp) * f, a.ki + (b.ki - a.ki) * f)
    }

    /// `dτ/dΩ` of the torque law at `omega` (one-sided above rated).
    pub fn torque_slope(&self, omega: f64) -> f64 {
        let r = &self.rated;
        if omega >= r.rotor_speed {
            -r.power / (r.generator_efficiency * omega * omega)
        } else if omega > r.transition_speed() {
            let w1 = r.transition_speed();
            (r.torque - r.optimal_gain * w1 * w1) / (r.rotor_speed - w1)
        } else {
            2.0 * r.optimal_gain * omega
        }
    }

    fn above_rated(&self, op: &OperatingPoint) -> bool {
        op.wind_speed >= self.rated.wind_speed
    }

    /// Linearization of the controller about `op`: input rotor-speed
    /// perturbation, outputs `[generator_torque, blade_pitch]` perturbations.
    /// States: filtered speed, and the pitch integrator above rated.
    pub fn linear_model(&self, op: &OperatingPoint) -> StateSpaceModel<f64> {
        let wc = self.speed_filter_corner;
        let slope = self.torque_slope(op.rotor_speed);
        let names = (vec![ROTOR_SPEED.to_string()], vec![GENERATOR_TORQUE.to_string(), BLADE_PITCH.to_string()]);
        if self.above_rated(op) {
            let (kp, ki) = self.gains(op.pitch);
            StateSpaceModel::new(
                DMatrix::from_row_slice(2, 2, &[-wc, 0.0, ki, 0.0]),
                DMatrix::from_column_slice(2, 1, &[wc, 0.0]),
                DMatrix::from_row_slice(2, 2, &[slope, 0.0, kp, 1.0]),
                DMatrix::zeros(2, 1),
                names.0,
                names.1,
            )
        } else {
            StateSpaceModel::new(
                DMatrix::from_element(1, 1, -wc),
                DMatrix::from_element(1, 1, wc),
                DMatrix::from_column_slice(2, 1, &[slope, 0.0]),
                DMatrix::zeros(2, 1),
                names.0,
                names.1,
            )
        }
        .expect("controller realization is consistent")
    }
}

/// Closes the linearized baseline loop around `plant` at `op`. External
/// inputs remain the plant inputs (added to the controller commands).
pub fn closed_loop(plant: &StateSpaceModel<f64>, cfg: &FeedbackConfig, op: &OperatingPoint) -> Result<StateSpaceModel<f64>, ControlError> {
    let u = [plant.input_index(GENERATOR_TORQUE)?, plant.input_index(BLADE_PITCH)?];
    let y = [plant.output_index(ROTOR_SPEED)?];
    Ok(feedback(plant, &cfg.linear_model(op), &u, &y)?)
}

/// Run-time state of the baseline controller.
#[derive(Clone, Debug)]
pub struct BaselineController {
    cfg: FeedbackConfig,
    filtered_speed: Option<f64>,
    integrator: f64,
    /// Saturated PI output before feedforward; the gain-scheduling variable,
    /// so feedforward never alters the feedback gains.
    pitch_fb: f64,
    torque: f64,
    pitch: f64,
}

impl BaselineController {
    /// Controller at rest: fine pitch, zero torque, filter initialized on
    /// the first measurement.
    pub fn new(cfg: FeedbackConfig) -> Self {
        let fine = cfg.rated.fine_pitch;
        BaselineController { cfg, filtered_speed: None, integrator: fine, pitch_fb: fine, torque: 0.0, pitch: fine }
    }

    /// Controller in equilibrium at `op`.
    pub fn at_operating_point(cfg: FeedbackConfig, op: &OperatingPoint) -> Self {
        BaselineController {
            filtered_speed: Some(op.rotor_speed),
            integrator: op.pitch,
            pitch_fb: op.pitch,
            torque: op.torque,
            pitch: op.pitch,
            cfg,
        }
    }

    pub fn config(&self) -> &FeedbackConfig {
        &self.cfg
    }

    /// Last applied `(torque, pitch)`.
    pub fn command(&self) -> (f64, f64) {
        (self.torque, self.pitch)
    }

    /// Baseline action only.
    pub fn step(&mut self, omega_meas: f64, dt: f64) -> (f64, f64) {
        self.step_with_feedforward(omega_meas, dt, 0.0, 0.0)
    }

    /// One control update. The feedforward increments are added to the
    /// saturated feedback commands; magnitude and rate limits act last.
    pub fn step_with_feedforward(&mut self, omega_meas: f64, dt: f64, torque_ff: f64, pitch_ff: f64) -> (f64, f64) {
        let cfg = &self.cfg;
        let omega_meas = omega_meas.max(0.0);
        let wf = match self.filtered_speed {
            None => omega_meas,
            Some(prev) => prev + (1.0 - (-cfg.speed_filter_corner * dt).exp()) * (omega_meas - prev),
        };
        self.filtered_speed = Some(wf);

        let fine = cfg.rated.fine_pitch;
        let err = wf - cfg.rated.rotor_speed;
        let (kp, ki) = cfg.gains(self.pitch_fb);
        self.integrator += ki * err * dt;
        let mut pitch_fb = self.integrator + kp * err;
        // anti-windup by back-calculation onto the active limit
        if pitch_fb < fine {
            pitch_fb = fine;
            self.integrator = fine - kp * err;
        } else if pitch_fb > cfg.max_pitch {
            pitch_fb = cfg.max_pitch;
            self.integrator = cfg.max_pitch - kp * err;
        }
        self.pitch_fb = pitch_fb;
        let torque_fb = torque_law(&cfg.rated, wf).clamp(0.0, cfg.max_torque);

        let pitch_cmd = (pitch_fb + pitch_ff).clamp(fine, cfg.max_pitch);
        let torque_cmd = (torque_fb + torque_ff).clamp(0.0, cfg.max_torque);
        let dp = cfg.pitch_rate_limit * dt;
        let dtq = cfg.torque_rate_limit * dt;
        self.pitch = pitch_cmd.clamp(self.pitch - dp, self.pitch + dp);
        self.torque = torque_cmd.clamp(self.torque - dtq, self.torque + dtq);
        (self.torque, self.pitch)
    }
}
