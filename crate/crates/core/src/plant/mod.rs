//! Surrogate floating-turbine plant: platform surge and pitch, tower-top
//! deflection and rotor speed, linearized about a mean wind speed.
//!
//! State order: `[x_p, β_p, x_d, ẋ_p, β̇_p, ẋ_d, Ω, M_lss]`, all perturbations
//! from the operating point. The mechanical DOF share a coupled mass matrix
//! (tower-top mass rides on the platform), thrust acts at the hub and the
//! rotor sees the relative wind `v_0 − ẋ_p − h·β̇_p − ẋ_d`.

pub mod rotor;

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forces::{PwemModel, PITCH_MOMENT, SURGE_FORCE};
use crate::lti::{series, LtiError, StateSpaceModel};
use crate::Real;

pub const GENERATOR_TORQUE: &str = "generator_torque";
pub const BLADE_PITCH: &str = "blade_pitch";
pub const WIND_SPEED: &str = "wind_speed";

pub const ROTOR_SPEED: &str = "rotor_speed";
pub const PLATFORM_PITCH: &str = "platform_pitch";
pub const PLATFORM_SURGE: &str = "platform_surge";
pub const TOWER_DEFLECTION: &str = "tower_deflection";
pub const TOWER_BASE_MOMENT: &str = "tower_base_moment";
pub const BLADE_ROOT_MOMENT: &str = "blade_root_moment";
pub const SHAFT_MOMENT: &str = "shaft_moment";
pub const POWER: &str = "power";
pub const THRUST: &str = "thrust";

pub const INPUTS: [&str; 5] = [GENERATOR_TORQUE, BLADE_PITCH, WIND_SPEED, SURGE_FORCE, PITCH_MOMENT];
pub const OUTPUTS: [&str; 9] = [
    ROTOR_SPEED,
    PLATFORM_PITCH,
    PLATFORM_SURGE,
    TOWER_DEFLECTION,
    TOWER_BASE_MOMENT,
    BLADE_ROOT_MOMENT,
    SHAFT_MOMENT,
    POWER,
    THRUST,
];
pub const STATES: usize = 8;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant parameters: {0}")]
    Invalid(String),
    #[error("wind speed {speed} m/s outside the gradient table [{lo}, {hi}] m/s")]
    OutOfRange { speed: f64, lo: f64, hi: f64 },
    #[error("parameter file: {0}")]
    Parse(String),
    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Masses, stiffnesses and damping of the mechanical model (SI units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureParameters {
    pub platform_mass: f64,
    pub platform_pitch_inertia: f64,
    pub tower_top_mass: f64,
    pub hub_height: f64,
    pub surge_stiffness: f64,
    pub pitch_stiffness: f64,
    pub tower_stiffness: f64,
    pub surge_damping: f64,
    pub pitch_damping: f64,
    pub tower_damping: f64,
    /// Total drivetrain inertia about the low-speed shaft.
    pub rotor_inertia: f64,
    /// Generator share of `rotor_inertia`; sets how much of the aerodynamic
    /// torque reaches the shaft load proxy.
    pub generator_inertia_fraction: f64,
    /// Corner of the first-order shaft-moment filter (rad/s).
    pub shaft_filter_corner: f64,
    /// Radial lever of the blade thrust resultant (m).
    pub blade_lever: f64,
    pub gravity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatedValues {
    /// rad/s
    pub rotor_speed: f64,
    /// W (electrical)
    pub power: f64,
    /// N·m (low-speed shaft)
    pub torque: f64,
    pub generator_efficiency: f64,
    /// `K` in `τ_g = K·Ω²`.
    pub optimal_gain: f64,
    /// Rotor speed, as a fraction of rated, where the torque ramp begins.
    pub transition_fraction: f64,
    /// rad
    pub fine_pitch: f64,
    /// Wind speed at which rated torque is reached (m/s).
    pub wind_speed: f64,
}

impl RatedValues {
    pub fn transition_speed(&self) -> f64 {
        self.transition_fraction * self.rotor_speed
    }
}

/// Steady state and aerodynamic gradients at one mean wind speed. Pitch in
/// radians, gradients per rad and per rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeroEntry {
    pub wind_speed: f64,
    pub rotor_speed: f64,
    pub pitch: f64,
    pub torque: f64,
    pub thrust: f64,
    pub dq_dv: f64,
    pub dq_dpitch: f64,
    pub dq_domega: f64,
    pub dt_dv: f64,
    pub dt_dpitch: f64,
    pub dt_domega: f64,
}

impl AeroEntry {
    fn lerp(a: &AeroEntry, b: &AeroEntry, f: f64) -> AeroEntry {
        let l = |x: f64, y: f64| x + (y - x) * f;
        AeroEntry {
            wind_speed: l(a.wind_speed, b.wind_speed),
            rotor_speed: l(a.rotor_speed, b.rotor_speed),
            pitch: l(a.pitch, b.pitch),
            torque: l(a.torque, b.torque),
            thrust: l(a.thrust, b.thrust),
            dq_dv: l(a.dq_dv, b.dq_dv),
            dq_dpitch: l(a.dq_dpitch, b.dq_dpitch),
            dq_domega: l(a.dq_domega, b.dq_domega),
            dt_dv: l(a.dt_dv, b.dt_dv),
            dt_dpitch: l(a.dt_dpitch, b.dt_dpitch),
            dt_domega: l(a.dt_domega, b.dt_domega),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParameters {
    pub name: String,
    pub structure: StructureParameters,
    pub rated: RatedValues,
    /// Gradient table, strictly increasing in wind speed.
    pub aero: Vec<AeroEntry>,
}

/// Operating point with the steady platform attitude under mean thrust.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub wind_speed: f64,
    pub rotor_speed: f64,
    pub pitch: f64,
    pub torque: f64,
    pub thrust: f64,
    pub platform_surge: f64,
    pub platform_pitch: f64,
    pub tower_deflection: f64,
    /// Interpolated gradients at `wind_speed`.
    pub aero: AeroEntry,
}

impl OperatingPoint {
    /// Steady values of every plant output, in [`OUTPUTS`] order.
    pub fn output_offsets(&self, params: &PlantParameters) -> [f64; 9] {
        let s = &params.structure;
        let r = &params.rated;
        [
            self.rotor_speed,
            self.platform_pitch,
            self.platform_surge,
            self.tower_deflection,
            tower_moment(s, self.tower_deflection, self.platform_pitch),
            self.thrust * s.blade_lever / 3.0,
            self.torque,
            r.generator_efficiency * self.torque * self.rotor_speed,
            self.thrust,
        ]
    }
}

fn tower_moment(s: &StructureParameters, deflection: f64, pitch: f64) -> f64 {
    s.hub_height * (s.tower_stiffness * deflection + s.tower_top_mass * s.gravity * pitch)
}

impl PlantParameters {
    pub fn validate(&self) -> Result<(), PlantError> {
        let s = &self.structure;
        let positive = [
            ("platform_mass", s.platform_mass),
            ("platform_pitch_inertia", s.platform_pitch_inertia),
            ("tower_top_mass", s.tower_top_mass),
            ("hub_height", s.hub_height),
            ("surge_stiffness", s.surge_stiffness),
            ("pitch_stiffness", s.pitch_stiffness),
            ("tower_stiffness", s.tower_stiffness),
            ("rotor_inertia", s.rotor_inertia),
            ("shaft_filter_corner", s.shaft_filter_corner),
            ("blade_lever", s.blade_lever),
            ("gravity", s.gravity),
            ("rated.rotor_speed", self.rated.rotor_speed),
            ("rated.power", self.rated.power),
            ("rated.torque", self.rated.torque),
            ("rated.generator_efficiency", self.rated.generator_efficiency),
            ("rated.optimal_gain", self.rated.optimal_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlantError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("surge_damping", s.surge_damping),
            ("pitch_damping", s.pitch_damping),
            ("tower_damping", s.tower_damping),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PlantError::Invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&s.generator_inertia_fraction) {
            return Err(PlantError::Invalid("generator_inertia_fraction must lie in [0, 1)".into()));
        }
        if !(self.rated.transition_fraction > 0.0 && self.rated.transition_fraction < 1.0) {
            return Err(PlantError::Invalid("rated.transition_fraction must lie in (0, 1)".into()));
        }
        if self.aero.len() < 2 {
            return Err(PlantError::Invalid("gradient table needs at least two wind speeds".into()));
        }
        for pair in self.aero.windows(2) {
            if pair[1].wind_speed <= pair[0].wind_speed {
                return Err(PlantError::Invalid(format!(
                    "gradient table wind speeds must increase ({} after {})",
                    pair[1].wind_speed, pair[0].wind_speed
                )));
            }
        }
        let (lo, hi) = self.wind_range();
        if lo > 4.0 || hi < 25.0 {
            return Err(PlantError::Invalid(format!("gradient table covers [{lo}, {hi}] m/s, need [4, 25]")));
        }
        if self.aero.iter().any(|e| {
            [e.rotor_speed, e.pitch, e.torque, e.thrust, e.dq_dv, e.dq_dpitch, e.dq_domega, e.dt_dv, e.dt_dpitch, e.dt_domega]
                .iter()
                .any(|v| !v.is_finite())
        }) {
            return Err(PlantError::Invalid("gradient table contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn wind_range(&self) -> (f64, f64) {
        (self.aero[0].wind_speed, self.aero[self.aero.len() - 1].wind_speed)
    }

    /// Gradient entry linearly interpolated in wind speed.
    pub fn aero_at(&self, wind: f64) -> Result<AeroEntry, PlantError> {
        let (lo, hi) = self.wind_range();
        if !(wind >= lo && wind <= hi) {
            return Err(PlantError::OutOfRange { speed: wind, lo, hi });
        }
        let i = self.aero.partition_point(|e| e.wind_speed <= wind).clamp(1, self.aero.len() - 1);
        let (a, b) = (&self.aero[i - 1], &self.aero[i]);
        let f = (wind - a.wind_speed) / (b.wind_speed - a.wind_speed);
        Ok(AeroEntry::lerp(a, b, f))
    }

    /// Operating point at mean wind `wind`, including the static platform
    /// offset under mean thrust.
    pub fn operating_point(&self, wind: f64) -> Result<OperatingPoint, PlantError> {
        let aero = self.aero_at(wind)?;
        let s = &self.structure;
        let q = stiffness(s)
            .try_inverse()
            .ok_or_else(|| PlantError::Invalid("singular stiffness matrix".into()))?
            * (hub_vector(s) * aero.thrust);
        Ok(OperatingPoint {
            wind_speed: wind,
            rotor_speed: aero.rotor_speed,
            pitch: aero.pitch,
            torque: aero.torque,
            thrust: aero.thrust,
            platform_surge: q[0],
            platform_pitch: q[1],
            tower_deflection: q[2],
            aero,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, PlantError> {
        let p: PlantParameters = toml::from_str(text).map_err(|e| PlantError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn load(path: &Path) -> Result<Self, PlantError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// The shipped demo parameter file.
pub const DEMO_TOML: &str = include_str!("../../fixtures/demo_triplespar_like.toml");

pub fn demo_parameters() -> PlantParameters {
    PlantParameters::from_toml(DEMO_TOML).expect("shipped parameter file parses")
}

fn mass_matrix(s: &StructureParameters) -> DMatrix<f64> {
    let (mp, ip, md, h) = (s.platform_mass, s.platform_pitch_inertia, s.tower_top_mass, s.hub_height);
    DMatrix::from_row_slice(
        3,
        3,
        &[mp + md, md * h, md, md * h, ip + md * h * h, md * h, md, md * h, md],
    )
}

fn stiffness(s: &StructureParameters) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![s.surge_stiffness, s.pitch_stiffness, s.tower_stiffness]))
}

/// Hub displacement per generalized coordinate.
fn hub_vector(s: &StructureParameters) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_vec(vec![1.0, s.hub_height, 1.0])
}

/// Linear model about `op` with inputs [`INPUTS`] and outputs [`OUTPUTS`].
pub fn linearize<T: Real>(params: &PlantParameters, op: &OperatingPoint) -> Result<StateSpaceModel<T>, PlantError> {
    params.validate()?;
    let g = params.aero_at(op.wind_speed)?;
    let s = &params.structure;
    let minv = mass_matrix(s)
        .try_inverse()
        .ok_or_else(|| PlantError::Invalid("singular mass matrix".into()))?;
    let e = hub_vector(s);
    let damping = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![s.surge_damping, s.pitch_damping, s.tower_damping]));
    let j = s.rotor_inertia;
    let w = s.generator_inertia_fraction;
    let wf = s.shaft_filter_corner;

    let mut a = DMatrix::<f64>::zeros(STATES, STATES);
    let mut b = DMatrix::<f64>::zeros(STATES, 5);
    a.view_mut((0, 3), (3, 3)).fill_with_identity();
    // thrust δT = T_v (v − eᵀq̇) + T_θ θ + T_Ω Ω acts along e
    a.view_mut((3, 0), (3, 3)).copy_from(&(-&minv * stiffness(s)));
    a.view_mut((3, 3), (3, 3)).copy_from(&(-&minv * (damping + &e * e.transpose() * g.dt_dv)));
    let me = &minv * &e;
    a.view_mut((3, 6), (3, 1)).copy_from(&(&me * g.dt_domega));
    b.view_mut((3, 1), (3, 1)).copy_from(&(&me * g.dt_dpitch));
    b.view_mut((3, 2), (3, 1)).copy_from(&(&me * g.dt_dv));
    b.view_mut((3, 3), (3, 1)).copy_from(&minv.column(0));
    b.view_mut((3, 4), (3, 1)).copy_from(&minv.column(1));

    // aerodynamic torque perturbation δQ = q_x·x + q_u·u
    let mut q_x = nalgebra::RowDVector::<f64>::zeros(STATES);
    q_x.view_mut((0, 3), (1, 3)).copy_from(&(e.transpose() * -g.dq_dv));
    q_x[6] = g.dq_domega;
    let q_u = nalgebra::RowDVector::from_vec(vec![0.0, g.dq_dpitch, g.dq_dv, 0.0, 0.0]);
    let tau_u = nalgebra::RowDVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);

    // J Ω̇ = δQ − δτ_g
    a.row_mut(6).copy_from(&(&q_x / j));
    b.row_mut(6).copy_from(&((&q_u - &tau_u) / j));
    // shaft moment filter, input w·δQ + (1 − w)·δτ_g
    let mut arow = &q_x * (w * wf);
    arow[7] -= wf;
    a.row_mut(7).copy_from(&arow);
    b.row_mut(7).copy_from(&((&q_u * w + &tau_u * (1.0 - w)) * wf));

    let mut c = DMatrix::<f64>::zeros(OUTPUTS.len(), STATES);
    let mut d = DMatrix::<f64>::zeros(OUTPUTS.len(), 5);
    c[(0, 6)] = 1.0;
    c[(1, 1)] = 1.0;
    c[(2, 0)] = 1.0;
    c[(3, 2)] = 1.0;
    c[(4, 2)] = s.hub_height * s.tower_stiffness;
    c[(4, 1)] = s.hub_height * s.tower_top_mass * s.gravity;
    let mut t_x = nalgebra::RowDVector::<f64>::zeros(STATES);
    t_x.view_mut((0, 3), (1, 3)).copy_from(&(e.transpose() * -g.dt_dv));
    t_x[6] = g.dt_domega;
    let t_u = nalgebra::RowDVector::from_vec(vec![0.0, g.dt_dpitch, g.dt_dv, 0.0, 0.0]);
    c.row_mut(5).copy_from(&(&t_x * (s.blade_lever / 3.0)));
    d.row_mut(5).copy_from(&(&t_u * (s.blade_lever / 3.0)));
    c[(6, 7)] = 1.0;
    let eta = params.rated.generator_efficiency;
    c[(7, 6)] = eta * op.torque;
    d[(7, 0)] = eta * op.rotor_speed;
    c.row_mut(8).copy_from(&t_x);
    d.row_mut(8).copy_from(&t_u);

    let cast = |m: &DMatrix<f64>| m.map(T::lit);
    Ok(StateSpaceModel::new(
        cast(&a),
        cast(&b),
        cast(&c),
        cast(&d),
        INPUTS.iter().map(|s| s.to_string()).collect(),
        OUTPUTS.iter().map(|s| s.to_string()).collect(),
    )?)
}

/// Single-input single-output path of `model`.
pub fn subsystem<T: Real>(model: &StateSpaceModel<T>, input: &str, output: &str) -> Result<StateSpaceModel<T>, PlantError> {
    Ok(model.subsystem(&[input], &[output])?)
}

/// Elevation-to-outputs model: the PWEM drives the plant's force inputs.
pub fn wave_path<T: Real>(plant: &StateSpaceModel<T>, pwem: &PwemModel<T>) -> Result<StateSpaceModel<T>, PlantError> {
    let outs = pwem.model.outputs();
    for name in outs {
        if plant.input_index(name).is_err() {
            return Err(PlantError::ChannelMismatch(format!(
                "PWEM output {name:?} is not a plant input (plant inputs {:?})",
                plant.inputs()
            )));
        }
    }
    let names: Vec<&str> = outs.iter().map(String::as_str).collect();
    let all: Vec<&str> = plant.outputs().iter().map(String::as_str).collect();
    let forces = plant.subsystem(&names, &all)?;
    Ok(series(&forces, &pwem.model)?)
}

#[cfg(test)]
mod tests;
