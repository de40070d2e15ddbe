//! Model-inverse wave feedforward.

use serde::{Deserialize, Serialize};

use super::{Channel, ControlError};
use crate::forces::{PwemModel, ELEVATION};
use crate::lti::{invert, log_grid, reduce_order, series, LtiError, StateSpaceModel};
use crate::plant::{subsystem, wave_path, ROTOR_SPEED};
use crate::scalar::cabs;
use crate::Real;

/// Time constant of the lead factor that makes `G_u→Ω` biproper (s).
pub const LEAD_EPS: f64 = 0.05;
/// Input name of every feedforward controller.
pub const PREDICTED_ELEVATION: &str = "predicted_elevation";

/// Allowed deviation of the shaped controller from the full-order one on the
/// wave band (dB).
pub const SHAPING_BUDGET_DB: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shaping {
    pub order: usize,
    /// rad/s
    pub hp_corner: f64,
}

/// Default reduced order. Balanced truncation of the demo plant's controllers
/// to 8 states leaves 3.1 to 4.6 dB of band deviation; 10 stays below 2 dB.
pub const DEFAULT_REDUCED_ORDER: usize = 10;

impl Default for Shaping {
    fn default() -> Self {
        Shaping { order: DEFAULT_REDUCED_ORDER, hp_corner: std::f64::consts::TAU / 200.0 }
    }
}

#[derive(Clone, Debug)]
pub struct FeedforwardController<T: Real> {
    pub channel: Channel,
    /// Predicted elevation to control increment, including `−k_ff`.
    pub transfer: StateSpaceModel<T>,
    /// Unshaped controller for `k_ff = 1`.
    pub full: StateSpaceModel<T>,
    /// Reduced controller before the high-pass, for `k_ff = 1` (absent
    /// without shaping).
    pub reduced: Option<StateSpaceModel<T>>,
    pub k_ff: T,
    pub shaping: Option<Shaping>,
}

/// Wave band used for the shaping budget, rad/s.
fn wave_band<T: Real>() -> (T, T) {
    (T::two_pi() / T::lit(20.0), T::two_pi() / T::lit(3.0))
}

fn zero_controller<T: Real>(output: &str) -> StateSpaceModel<T> {
    StateSpaceModel::static_gain(nalgebra::DMatrix::zeros(1, 1))
        .with_names(vec![PREDICTED_ELEVATION.into()], vec![output.into()])
        .expect("1x1 names")
}

/// Full-order `C = −G_η→Ω · G_u→Ω⁻¹` for unit gain.
///
/// When `G_u→Ω` has relative degree `r`, both models are multiplied by
/// `(ε s + 1)^r`, which leaves the quotient unchanged and makes the inverse
/// proper. If `G_η→Ω` has lower relative degree than `r`, only `G_u→Ω` is
/// augmented, which low-pass filters the quotient by `1/(ε s + 1)^r`.
fn full_order<T: Real>(g_eta: &StateSpaceModel<T>, g_u: &StateSpaceModel<T>, output: &str) -> Result<StateSpaceModel<T>, ControlError> {
    for (name, g) in [("G_eta", g_eta), ("G_u", g_u)] {
        if g.n_inputs() != 1 || g.n_outputs() != 1 {
            return Err(ControlError::InvalidModel(format!("{name} must be SISO")));
        }
        if !g.is_stable() {
            return Err(ControlError::InvalidModel(format!("{name} is not stable")));
        }
    }
    let Some(r_eta) = g_eta.relative_degree() else {
        return Ok(zero_controller(output));
    };
    let Some(r) = g_u.relative_degree() else {
        return Err(ControlError::InvalidModel("G_u has an identically zero response".into()));
    };
    let eps = T::lit(LEAD_EPS);
    let mut gu = g_u.clone();
    for _ in 0..r {
        gu = gu.times_lead(eps)?;
    }
    let inverse = match invert(&gu) {
        Ok(inv) => inv.model,
        Err(LtiError::UnstableInverse { zeros }) => return Err(ControlError::NonMinimumPhase { zeros }),
        Err(e) => return Err(e.into()),
    };
    let mut ge = g_eta.clone();
    if r_eta >= r {
        for _ in 0..r {
            ge = ge.times_lead(eps)?;
        }
    }
    let c = series(&inverse, &ge)?;
    Ok(c.scaled(-T::one()).with_names(vec![PREDICTED_ELEVATION.into()], vec![output.into()])?)
}

/// Reduces `full` to `target_order` states and cascades `s/(s + hp_corner)`.
pub fn shape_controller<T: Real>(full: &StateSpaceModel<T>, target_order: usize, hp_corner: T) -> Result<StateSpaceModel<T>, ControlError> {
    Ok(shape_stages(full, target_order, hp_corner)?.1)
}

/// `(reduced, reduced + high-pass)`.
fn shape_stages<T: Real>(full: &StateSpaceModel<T>, target_order: usize, hp_corner: T) -> Result<(StateSpaceModel<T>, StateSpaceModel<T>), ControlError> {
    if !(hp_corner > T::zero()) {
        return Err(ControlError::InvalidConfig("high-pass corner must be positive".into()));
    }
    if target_order == 0 {
        return Err(ControlError::InvalidConfig("reduced order must be at least 1".into()));
    }
    full.require_stable()?;
    let reduced = if full.order() == 0 {
        full.clone()
    } else if is_zero(full) {
        zero_controller(&full.outputs()[0])
    } else {
        reduce_order(full, target_order.min(full.order()))?.model
    };
    let hp = StateSpaceModel::high_pass(hp_corner)
        .with_names(vec![full.outputs()[0].clone()], vec![full.outputs()[0].clone()])?;
    let shaped = series(&hp, &reduced)?;
    let (lo, hi) = wave_band::<T>();
    let mut worst = T::zero();
    for w in log_grid(lo, hi, 200) {
        let a = cabs(full.evaluate(w)?[(0, 0)]);
        let b = cabs(shaped.evaluate(w)?[(0, 0)]);
        if a == T::zero() && b == T::zero() {
            continue;
        }
        let db = if a == T::zero() || b == T::zero() {
            T::max_value().expect("bounded")
        } else {
            (T::lit(20.0) * (b / a).log10()).magnitude()
        };
        if db > worst {
            worst = db;
        }
    }
    if worst > T::lit(SHAPING_BUDGET_DB) {
        return Err(ControlError::ShapingBudget {
            deviation_db: worst.as_f64(),
            order: target_order,
            full_order: full.order(),
        });
    }
    Ok((reduced, shaped))
}

fn is_zero<T: Real>(m: &StateSpaceModel<T>) -> bool {
    m.c().iter().all(|v| *v == T::zero()) && m.d().iter().all(|v| *v == T::zero())
}

/// Feedforward controller `u_ff = −k_ff · G_η→Ω · G_u→Ω⁻¹ · η_p`, optionally
/// reduced and high-pass shaped. Synthesis is done for unit gain and scaled
/// last, so the response is exactly linear in `k_ff`.
pub fn synthesize_ff<T: Real>(
    g_eta_to_omega: &StateSpaceModel<T>,
    g_u_to_omega: &StateSpaceModel<T>,
    channel: Channel,
    k_ff: T,
    shaping: Option<Shaping>,
) -> Result<FeedforwardController<T>, ControlError> {
    if !k_ff.is_finite() {
        return Err(ControlError::InvalidConfig("k_ff must be finite".into()));
    }
    let full = full_order(g_eta_to_omega, g_u_to_omega, channel.input())?;
    let (reduced, unit) = match shaping {
        Some(s) => {
            let (r, shaped) = shape_stages(&full, s.order, T::lit(s.hp_corner))?;
            (Some(r), shaped)
        }
        None => (None, full.clone()),
    };
    Ok(FeedforwardController { channel, transfer: unit.scaled(k_ff), full, reduced, k_ff, shaping })
}

/// Builds the feedforward controller for a linearized plant and PWEM.
pub fn design_feedforward<T: Real>(
    plant: &StateSpaceModel<T>,
    pwem: &PwemModel<T>,
    channel: Channel,
    k_ff: T,
    shaping: Option<Shaping>,
) -> Result<FeedforwardController<T>, ControlError> {
    let g_eta = subsystem(&wave_path(plant, pwem)?, ELEVATION, ROTOR_SPEED)?;
    let g_u = subsystem(plant, channel.input(), ROTOR_SPEED)?;
    synthesize_ff(&g_eta, &g_u, channel, k_ff, shaping)
}

/// Magnitude (dB) and phase (deg) of the three controller stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodePoint {
    /// rad/s
    pub omega: f64,
    pub full_db: f64,
    pub full_deg: f64,
    pub reduced_db: f64,
    pub reduced_deg: f64,
    pub shaped_db: f64,
    pub shaped_deg: f64,
}

impl<T: Real> FeedforwardController<T> {
    /// Bode data of the full, reduced and shaped controllers, each scaled by
    /// `−k_ff` as applied. Without shaping all three curves coincide.
    pub fn bode(&self, grid: &[T]) -> Result<Vec<BodePoint>, ControlError> {
        let reduced = self.reduced.as_ref().unwrap_or(&self.full);
        let polar = |m: &StateSpaceModel<T>, w: T| -> Result<(f64, f64), ControlError> {
            let z = m.evaluate(w)?[(0, 0)] * self.k_ff;
            Ok((20.0 * cabs(z).as_f64().log10(), crate::scalar::carg(z).as_f64().to_degrees()))
        };
        grid.iter()
            .map(|&w| {
                let (full_db, full_deg) = polar(&self.full, w)?;
                let (reduced_db, reduced_deg) = polar(reduced, w)?;
                let (shaped_db, shaped_deg) = match self.k_ff == T::zero() {
                    true => (f64::NEG_INFINITY, 0.0),
                    false => {
                        let z = self.transfer.evaluate(w)?[(0, 0)];
                        (20.0 * cabs(z).as_f64().log10(), crate::scalar::carg(z).as_f64().to_degrees())
                    }
                };
                Ok(BodePoint { omega: w.as_f64(), full_db, full_deg, reduced_db, reduced_deg, shaped_db, shaped_deg })
            })
            .collect()
    }
}

/// Predicted-elevation to rotor-speed response of the plant under baseline
/// feedback, with the PWEM forces and, if given, the feedforward command.
pub fn wave_response(
    plant: &StateSpaceModel<f64>,
    cfg: &super::FeedbackConfig,
    op: &crate::plant::OperatingPoint,
    pwem: &PwemModel<f64>,
    ff: Option<&FeedforwardController<f64>>,
) -> Result<StateSpaceModel<f64>, ControlError> {
    let cl = super::closed_loop(plant, cfg, op)?;
    let names: Vec<&str> = pwem.model.outputs().iter().map(String::as_str).collect();
    let forces = cl.subsystem(&names, &[ROTOR_SPEED])?;
    let waves = series(&forces, &pwem.model)?;
    let Some(ff) = ff else {
        return Ok(waves);
    };
    let actuator = cl.subsystem(&[ff.channel.input()], &[ROTOR_SPEED])?;
    let commanded = series(&actuator, &ff.transfer)?;
    Ok(crate::lti::parallel(&waves, &commanded)?)
}
