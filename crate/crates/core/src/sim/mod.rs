//! Fixed-step closed-loop simulation of the linearized plant under irregular
//! waves and turbulent wind.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{
    design_feedforward, resolve_channel, BaselineController, ChannelMode, ControlError, FeedbackConfig,
    FeedforwardController, Shaping,
};
use crate::forces::{ForceCoefficientSet, PwemModel, PITCH_MOMENT, SURGE_FORCE};
use crate::lti::{discretize, discretize_tustin, DiscreteModel, LtiError};
use crate::metrics::LoadCase;
use crate::plant::{
    linearize, PlantError, PlantParameters, BLADE_PITCH, BLADE_ROOT_MOMENT, GENERATOR_TORQUE, PLATFORM_PITCH,
    PLATFORM_SURGE, POWER, ROTOR_SPEED, SHAFT_MOMENT, TOWER_BASE_MOMENT, TOWER_DEFLECTION, WIND_SPEED,
};
use crate::scalar::cis;
use crate::wave::{
    check_causal_band, synthesize_realization, CausalPredictor, PredictionConfig, WaveError, WaveRealization,
    WaveSpectrumParams,
};

/// Metrics ignore the first 200 s of every record.
pub const TRANSIENT: f64 = 200.0;
/// Corner of the rotor-effective turbulence filter (Hz).
pub const WIND_CORNER_HZ: f64 = 0.02;
/// Any state beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("simulation diverged at t = {time:.2} s: state {state} reached {value:e}")]
    Diverged { time: f64, state: usize, value: f64 },
    #[error("record has {len} samples ({duration:.1} s), shorter than the {TRANSIENT} s transient window")]
    TooShort { len: usize, duration: f64 },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Controller configuration of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "BL")]
    Baseline,
    #[serde(rename = "BL+FF")]
    Feedforward,
    #[serde(rename = "BL-no-waves")]
    NoWaves,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Baseline, Mode::Feedforward, Mode::NoWaves];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Baseline => "BL",
            Mode::Feedforward => "BL+FF",
            Mode::NoWaves => "BL-no-waves",
        }
    }

    /// File-name friendly label.
    pub fn slug(self) -> &'static str {
        match self {
            Mode::Baseline => "bl",
            Mode::Feedforward => "bl_ff",
            Mode::NoWaves => "bl_no_waves",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bl" | "baseline" => Ok(Mode::Baseline),
            "bl+ff" | "bl-ff" | "ff" | "feedforward" => Ok(Mode::Feedforward),
            "bl-no-waves" | "no-waves" | "nowaves" => Ok(Mode::NoWaves),
            _ => Err(format!("unknown mode {s:?} (expected BL, BL+FF or BL-no-waves)")),
        }
    }
}

/// Sea state driving a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveInput {
    /// JONSWAP sea from the load case's Hs and Ts.
    Irregular { components: usize },
    /// Single regular wave.
    Regular { amplitude: f64, period: f64 },
}

impl Default for WaveInput {
    fn default() -> Self {
        WaveInput::Irregular { components: 200 }
    }
}

/// Source of the wave excitation acting on the plant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceModel {
    /// Interpolated force coefficient table.
    #[default]
    Coefficients,
    /// The identified PWEM driven by the true future elevation; the
    /// feedforward then acts on a perfectly matched model.
    Pwem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub load_case: LoadCase,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    pub wave_seed: u64,
    pub wind_seed: u64,
    pub mode: Mode,
    pub k_ff: f64,
    pub turbulence_intensity: f64,
    /// Distance of the up-wave measurement point (m).
    pub distance: f64,
    /// Prediction horizon t_p (s).
    pub horizon: f64,
    pub channel_mode: ChannelMode,
    /// Reduction and high-pass shaping of the feedforward; `None` uses the
    /// full-order controller.
    pub shaping: Option<Shaping>,
    pub waves: WaveInput,
    pub force_model: ForceModel,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            load_case: LoadCase { wind_speed: 10.3, hs: 2.2, ts: 8.0, probability: 0.26 },
            duration: 3600.0,
            dt: 0.05,
            wave_seed: 1,
            wind_seed: 1001,
            mode: Mode::Baseline,
            k_ff: 1.0,
            turbulence_intensity: 0.04,
            distance: 313.0,
            horizon: 10.0,
            channel_mode: ChannelMode::Auto,
            shaping: Some(Shaping::default()),
            waves: WaveInput::default(),
            force_model: ForceModel::Coefficients,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.duration >= 600.0) {
            return bad(format!("duration {} s is below 600 s", self.duration));
        }
        if !(self.dt > 0.0 && self.dt <= 0.25) {
            return bad(format!("dt {} s outside (0, 0.25]", self.dt));
        }
        if !(self.turbulence_intensity >= 0.0 && self.turbulence_intensity.is_finite()) {
            return bad("turbulence intensity must be non-negative".into());
        }
        if !self.k_ff.is_finite() {
            return bad("k_ff must be finite".into());
        }
        if !(self.distance > 0.0 && self.horizon > 0.0) {
            return bad("measurement distance and horizon must be positive".into());
        }
        self.load_case.validate().map_err(SimError::InvalidScenario)?;
        if let WaveInput::Regular { amplitude, period } = self.waves {
            if !(amplitude >= 0.0 && period > 0.0) {
                return bad("regular wave needs amplitude ≥ 0 and period > 0".into());
            }
        }
        Ok(())
    }

    fn realization(&self, gravity: f64) -> Result<WaveRealization<f64>, SimError> {
        if self.mode == Mode::NoWaves {
            return Ok(WaveRealization { components: Vec::new(), gravity });
        }
        Ok(match self.waves {
            WaveInput::Irregular { components } => {
                let mut p = WaveSpectrumParams::new(self.load_case.hs, self.load_case.ts, self.wave_seed);
                p.n_components = components;
                synthesize_realization(&p, gravity)?
            }
            WaveInput::Regular { amplitude, period } => {
                WaveRealization::monochromatic(amplitude, std::f64::consts::TAU / period, 0.0, gravity)
            }
        })
    }
}

/// Plant description, force data and controller settings shared by runs.
#[derive(Clone, Debug)]
pub struct SimulationContext {
    pub params: PlantParameters,
    pub coefficients: ForceCoefficientSet<f64>,
    pub pwem: PwemModel<f64>,
    pub feedback: FeedbackConfig,
}

/// One recorded channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub name: &'static str,
    pub unit: &'static str,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRecord {
    pub dt: f64,
    /// Samples before this time are excluded from metrics (s).
    pub transient: f64,
    pub signals: Vec<Signal>,
}

pub const CH_ROTOR_SPEED: &str = "rotor_speed";
pub const CH_POWER: &str = "power";
pub const CH_PITCH: &str = "pitch";
pub const CH_PITCH_RATE: &str = "pitch_rate";
pub const CH_TORQUE: &str = "generator_torque";
pub const CH_PLATFORM_PITCH: &str = "platform_pitch";
pub const CH_PLATFORM_SURGE: &str = "platform_surge";
pub const CH_TOWER_DEFLECTION: &str = "tower_deflection";
pub const CH_TOWER_BASE_MOMENT: &str = "tower_base_moment";
pub const CH_BLADE_ROOT_MOMENT: &str = "blade_root_moment";
pub const CH_SHAFT_MOMENT: &str = "shaft_moment";
pub const CH_WIND: &str = "wind_speed";
pub const CH_ELEVATION_A: &str = "elevation_upwave";
pub const CH_ELEVATION_0: &str = "elevation_platform";
pub const CH_ELEVATION_PRED: &str = "elevation_predicted";
pub const CH_SURGE_FORCE: &str = "wave_surge_force";
pub const CH_PITCH_MOMENT: &str = "wave_pitch_moment";
pub const CH_FF: &str = "ff_command";

const LAYOUT: [(&str, &str); 18] = [
    (CH_ROTOR_SPEED, "rad/s"),
    (CH_POWER, "W"),
    (CH_PITCH, "rad"),
    (CH_PITCH_RATE, "rad/s"),
    (CH_TORQUE, "N*m"),
    (CH_PLATFORM_PITCH, "rad"),
    (CH_PLATFORM_SURGE, "m"),
    (CH_TOWER_DEFLECTION, "m"),
    (CH_TOWER_BASE_MOMENT, "N*m"),
    (CH_BLADE_ROOT_MOMENT, "N*m"),
    (CH_SHAFT_MOMENT, "N*m"),
    (CH_WIND, "m/s"),
    (CH_ELEVATION_A, "m"),
    (CH_ELEVATION_0, "m"),
    (CH_ELEVATION_PRED, "m"),
    (CH_SURGE_FORCE, "N"),
    (CH_PITCH_MOMENT, "N*m"),
    (CH_FF, "N*m|rad"),
];

impl SimulationRecord {
    fn with_capacity(dt: f64, n: usize) -> Self {
        SimulationRecord {
            dt,
            transient: TRANSIENT,
            signals: LAYOUT.iter().map(|&(name, unit)| Signal { name, unit, values: Vec::with_capacity(n) }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.signals.first().map_or(0, |s| s.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.signals.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    /// Channel `name` after the transient window.
    pub fn steady(&self, name: &str) -> Result<&[f64], SimError> {
        let skip = (self.transient / self.dt).round() as usize;
        if self.len() <= skip + 1 {
            return Err(SimError::TooShort { len: self.len(), duration: self.duration() });
        }
        let s = self.signal(name).ok_or_else(|| SimError::InvalidScenario(format!("no channel {name:?}")))?;
        Ok(&s[skip..])
    }

    /// CSV with a `time[s]` column and `<name>[<unit>]` headers.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| SimError::Io(std::io::Error::other(e));
        let mut header = vec!["time[s]".to_string()];
        header.extend(self.signals.iter().map(|s| format!("{}[{}]", s.name, s.unit)));
        w.write_record(&header).map_err(io)?;
        let mut row = Vec::with_capacity(header.len());
        for k in 0..self.len() {
            row.clear();
            row.push((k as f64 * self.dt).to_string());
            row.extend(self.signals.iter().map(|s| s.values[k].to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    fn push(&mut self, values: [f64; 18]) {
        for (s, v) in self.signals.iter_mut().zip(values) {
            s.values.push(v);
        }
    }
}

/// Scenario echo written next to each record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub scenario: Scenario,
    pub plant: String,
    pub samples: usize,
    pub transient: f64,
    pub feedforward_channel: Option<crate::control::Channel>,
    pub feedforward_order: Option<usize>,
    pub software_version: String,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_record(dir: &Path, stem: &str, record: &SimulationRecord, meta: &RecordMetadata) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;
    let f = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
    record.write_csv(std::io::BufWriter::new(f))?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

/// Rotor-effective wind: mean plus first-order filtered Gaussian noise with
/// corner 0.02 Hz and standard deviation `ti·mean`, started from its
/// stationary distribution.
pub fn wind_series(mean: f64, ti: f64, seed: u64, duration: f64, dt: f64) -> Vec<f64> {
    let n = (duration / dt).round() as usize;
    let sigma = ti * mean;
    if sigma == 0.0 {
        return vec![mean; n];
    }
    let a = (-std::f64::consts::TAU * WIND_CORNER_HZ * dt).exp();
    let drive = sigma * (1.0 - a * a).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = sigma * draw();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(mean + x);
        x = a * x + drive * draw();
    }
    out
}

/// Per-component phasors: elevation at the platform and up-wave, and the two
/// wave loads, all as complex amplitudes of `e^{i(ωt + φ)}`.
struct Excitation {
    omega: Vec<f64>,
    phase: Vec<f64>,
    eta0: Vec<f64>,
    eta_a: Vec<Complex<f64>>,
    surge: Vec<Complex<f64>>,
    pitch: Vec<Complex<f64>>,
}

impl Excitation {
    fn new(
        real: &WaveRealization<f64>,
        distance: f64,
        force_model: ForceModel,
        coeffs: &ForceCoefficientSet<f64>,
        pwem: &PwemModel<f64>,
    ) -> Result<Self, SimError> {
        let mut ex = Excitation {
            omega: Vec::new(),
            phase: Vec::new(),
            eta0: Vec::new(),
            eta_a: Vec::new(),
            surge: Vec::new(),
            pitch: Vec::new(),
        };
        let (si, pi) = (pwem.model.output_index(SURGE_FORCE)?, pwem.model.output_index(PITCH_MOMENT)?);
        for c in &real.components {
            let (fx, my) = match force_model {
                ForceModel::Coefficients => match coeffs.response().interpolate(c.omega) {
                    Some(m) => (m[(0, 0)], m[(1, 0)]),
                    None => {
                        return Err(SimError::InvalidScenario(format!(
                            "wave component at {:.4} rad/s lies outside the force coefficient table",
                            c.omega
                        )))
                    }
                },
                ForceModel::Pwem => {
                    let g = pwem.model.evaluate(c.omega)?;
                    let lead = cis(c.omega * pwem.t_p);
                    (g[(si, 0)] * lead, g[(pi, 0)] * lead)
                }
            };
            ex.omega.push(c.omega);
            ex.phase.push(c.phase);
            ex.eta0.push(c.amplitude);
            ex.eta_a.push(cis(c.wavenumber * distance) * c.amplitude);
            ex.surge.push(fx * c.amplitude);
            ex.pitch.push(my * c.amplitude);
        }
        Ok(ex)
    }

    /// `(η_0, η_A, F_x, M_y)` at time `t`.
    fn at(&self, t: f64) -> (f64, f64, f64, f64) {
        let (mut e0, mut ea, mut fx, mut my) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..self.omega.len() {
            let (s, c) = (self.omega[j] * t + self.phase[j]).sin_cos();
            let z = Complex::new(c, s);
            e0 += self.eta0[j] * c;
            ea += (self.eta_a[j] * z).re;
            fx += (self.surge[j] * z).re;
            my += (self.pitch[j] * z).re;
        }
        (e0, ea, fx, my)
    }

    fn up_wave(&self, t: f64) -> f64 {
        let mut ea = 0.0;
        for j in 0..self.omega.len() {
            let (s, c) = (self.omega[j] * t + self.phase[j]).sin_cos();
            ea += (self.eta_a[j] * Complex::new(c, s)).re;
        }
        ea
    }
}

/// Discretized feedforward controller and its state.
struct FeedforwardPath {
    controller: DiscreteModel<f64>,
    state: DVector<f64>,
    channel: crate::control::Channel,
}

impl FeedforwardPath {
    fn step(&mut self, pred: f64) -> f64 {
        let u = DVector::from_element(1, pred);
        // + 0.0 turns a -0.0 from a zero controller into +0.0
        self.controller.step(&mut self.state, &u)[0] + 0.0
    }
}

/// Synthesizes the feedforward controller a scenario would use.
pub fn scenario_feedforward(scenario: &Scenario, ctx: &SimulationContext) -> Result<FeedforwardController<f64>, SimError> {
    let op = ctx.params.operating_point(scenario.load_case.wind_speed)?;
    let plant = linearize::<f64>(&ctx.params, &op)?;
    let channel = resolve_channel(scenario.channel_mode, &op, ctx.params.rated.wind_speed);
    Ok(design_feedforward(&plant, &ctx.pwem, channel, scenario.k_ff, scenario.shaping)?)
}

/// Runs one scenario. Returns the record and its metadata.
pub fn run(scenario: &Scenario, ctx: &SimulationContext) -> Result<(SimulationRecord, RecordMetadata), SimError> {
    scenario.validate()?;
    let params = &ctx.params;
    let dt = scenario.dt;
    let n = (scenario.duration / dt).round() as usize;
    let op = params.operating_point(scenario.load_case.wind_speed)?;
    let plant = linearize::<f64>(params, &op)?;
    let disc = discretize(&plant, dt)?;
    let idx = |name: &str| plant.input_index(name);
    let (i_tq, i_th, i_v, i_fx, i_my) =
        (idx(GENERATOR_TORQUE)?, idx(BLADE_PITCH)?, idx(WIND_SPEED)?, idx(SURGE_FORCE)?, idx(PITCH_MOMENT)?);
    let out = |name: &str| plant.output_index(name);
    let outputs = [
        out(ROTOR_SPEED)?,
        out(POWER)?,
        out(PLATFORM_PITCH)?,
        out(PLATFORM_SURGE)?,
        out(TOWER_DEFLECTION)?,
        out(TOWER_BASE_MOMENT)?,
        out(BLADE_ROOT_MOMENT)?,
        out(SHAFT_MOMENT)?,
    ];
    let offsets = op.output_offsets(params);

    let realization = scenario.realization(params.structure.gravity)?;
    let excitation = Excitation::new(&realization, scenario.distance, scenario.force_model, &ctx.coefficients, &ctx.pwem)?;
    let wind = wind_series(op.wind_speed, scenario.turbulence_intensity, scenario.wind_seed, scenario.duration, dt);

    // the wave sensor and predictor run whenever there are waves; only the
    // feedforward mode acts on the prediction
    let band = (std::f64::consts::TAU / 20.0, std::f64::consts::TAU / 3.0);
    let cfg = PredictionConfig::new(scenario.distance, scenario.horizon);
    let mut predictor = None;
    if !excitation.omega.is_empty() {
        check_causal_band(&cfg, &crate::quad::linspace(band.0, band.1, 200))?;
        predictor = Some(CausalPredictor::design(&cfg, band, dt)?);
    }
    let mut ff = None;
    let mut meta_channel = None;
    let mut meta_order = None;
    if scenario.mode == Mode::Feedforward {
        if (ctx.pwem.t_p - scenario.horizon).abs() > 1e-9 {
            return Err(SimError::InvalidScenario(format!(
                "PWEM was identified for t_p = {} s but the scenario predicts {} s ahead",
                ctx.pwem.t_p, scenario.horizon
            )));
        }
        let ctrl = scenario_feedforward(scenario, ctx)?;
        let controller = discretize_tustin(&ctrl.transfer, dt)?;
        let state = DVector::zeros(controller.order());
        meta_channel = Some(ctrl.channel);
        meta_order = Some(ctrl.transfer.order());
        ff = Some(FeedforwardPath { controller, state, channel: ctrl.channel });
    }
    if let Some(p) = predictor.as_mut() {
        // the sensor has been running before t = 0: fill the predictor
        // history and let the controller settle on past measurements
        let pre = p.span() + 10.0 * std::f64::consts::TAU / band.0;
        let pre_steps = (pre / dt).ceil() as usize;
        for k in (1..=pre_steps).rev() {
            let pred = p.push(excitation.up_wave(-(k as f64) * dt));
            if let Some(path) = ff.as_mut() {
                path.step(pred);
            }
        }
    }

    let mut fb = BaselineController::at_operating_point(ctx.feedback.clone(), &op);
    let mut x = DVector::<f64>::zeros(disc.order());
    let mut u = DVector::<f64>::zeros(plant.n_inputs());
    let mut rec = SimulationRecord::with_capacity(dt, n);
    let mut prev_pitch = op.pitch;
    for (k, &v) in wind.iter().enumerate() {
        let t = k as f64 * dt;
        let (eta0, eta_a, fx, my) = excitation.at(t);
        let pred = predictor.as_mut().map_or(0.0, |p| p.push(eta_a));
        let u_ff = ff.as_mut().map_or(0.0, |p| p.step(pred));
        let omega = offsets[0] + (disc.c.row(outputs[0]) * &x)[0];
        let (tq_ff, th_ff) = match ff.as_ref().map(|p| p.channel) {
            Some(crate::control::Channel::Torque) => (u_ff, 0.0),
            Some(crate::control::Channel::Pitch) => (0.0, u_ff),
            None => (0.0, 0.0),
        };
        let (torque, pitch) = fb.step_with_feedforward(omega, dt, tq_ff, th_ff);
        u[i_tq] = torque - op.torque;
        u[i_th] = pitch - op.pitch;
        u[i_v] = v - op.wind_speed;
        u[i_fx] = fx;
        u[i_my] = my;
        let y = disc.step(&mut x, &u);
        if let Some((state, value)) = x.iter().enumerate().find(|(_, s)| !(s.abs() <= DIVERGENCE_LIMIT)) {
            return Err(SimError::Diverged { time: t, state, value: *value });
        }
        let yo = |i: usize| offsets[outputs[i]] + y[outputs[i]];
        rec.push([
            yo(0),
            yo(1),
            pitch,
            (pitch - prev_pitch) / dt,
            torque,
            yo(2),
            yo(3),
            yo(4),
            yo(5),
            yo(6),
            yo(7),
            v,
            eta_a,
            eta0,
            pred,
            fx,
            my,
            u_ff,
        ]);
        prev_pitch = pitch;
    }
    let meta = RecordMetadata {
        scenario: scenario.clone(),
        plant: params.name.clone(),
        samples: rec.len(),
        transient: rec.transient,
        feedforward_channel: meta_channel,
        feedforward_order: meta_order,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok((rec, meta))
}
