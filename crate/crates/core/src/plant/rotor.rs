//! Quasi-steady rotor surrogate used to build the aerodynamic gradient table
//! of the demo parameter set.
//!
//! Power coefficient from a Heier-type analytic fit (pitch in degrees), thrust
//! coefficient from actuator-disc momentum theory at the same induction.

use super::{AeroEntry, PlantParameters, RatedValues, StructureParameters};

pub const AIR_DENSITY: f64 = 1.225;
pub const ROTOR_RADIUS: f64 = 89.15;
/// Betz-limited power coefficient at which axial induction reaches 1/3.
const CP_BETZ: f64 = 16.0 / 27.0;

/// Heier-type power coefficient; `pitch_deg` in degrees.
///
/// The usual `0.035/(θ³ + 1)` term is frozen at its fine-pitch value 0.035:
/// the original kinks between 0° and 8° and makes ∂Q/∂Ω positive just above
/// rated, which no pitch-regulated rotor shows.
pub fn power_coefficient(tsr: f64, pitch_deg: f64) -> f64 {
    let inv_li = 1.0 / (tsr + 0.08 * pitch_deg) - 0.035;
    0.5176 * (116.0 * inv_li - 0.4 * pitch_deg - 5.0) * (-21.0 * inv_li).exp() + 0.0068 * tsr
}

/// Thrust coefficient `4a(1−a)` with `a` the momentum-theory induction that
/// produces the power coefficient (clamped to `[0, 1/3]`).
pub fn thrust_coefficient(tsr: f64, pitch_deg: f64) -> f64 {
    let cp = power_coefficient(tsr, pitch_deg).clamp(0.0, CP_BETZ);
    let a = bisect(|a| 4.0 * a * (1.0 - a) * (1.0 - a) - cp, 0.0, 1.0 / 3.0);
    4.0 * a * (1.0 - a)
}

fn swept_area() -> f64 {
    std::f64::consts::PI * ROTOR_RADIUS * ROTOR_RADIUS
}

/// Aerodynamic torque (N·m); pitch in radians.
pub fn aero_torque(wind: f64, omega: f64, pitch: f64) -> f64 {
    let tsr = omega * ROTOR_RADIUS / wind;
    0.5 * AIR_DENSITY * swept_area() * wind.powi(3) * power_coefficient(tsr, pitch.to_degrees()) / omega
}

/// Rotor thrust (N); pitch in radians.
pub fn aero_thrust(wind: f64, omega: f64, pitch: f64) -> f64 {
    let tsr = omega * ROTOR_RADIUS / wind;
    0.5 * AIR_DENSITY * swept_area() * wind * wind * thrust_coefficient(tsr, pitch.to_degrees())
}

/// Root of a function that changes sign on `[lo, hi]`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) <= 1e-15 * hi.abs().max(1e-300) {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generator torque demanded by the variable-speed law at rotor speed
/// `omega`: `K·Ω²` up to the transition speed, a linear ramp to rated
/// torque at rated speed, then constant power.
pub fn torque_law(rated: &RatedValues, omega: f64) -> f64 {
    let w1 = rated.transition_speed();
    if omega <= w1 {
        rated.optimal_gain * omega * omega
    } else if omega <= rated.rotor_speed {
        let t1 = rated.optimal_gain * w1 * w1;
        t1 + (rated.torque - t1) * (omega - w1) / (rated.rotor_speed - w1)
    } else {
        rated.power / (rated.generator_efficiency * omega)
    }
}

/// Steady rotor speed, pitch and torque at a mean wind speed.
pub fn steady_state(rated: &RatedValues, wind: f64) -> (f64, f64, f64) {
    let balance = |w: f64| aero_torque(wind, w, rated.fine_pitch) - torque_law(rated, w);
    if balance(rated.rotor_speed) < 0.0 {
        let w = bisect(balance, 0.05, rated.rotor_speed);
        (w, rated.fine_pitch, torque_law(rated, w))
    } else {
        let pitch = bisect(
            |p| aero_torque(wind, rated.rotor_speed, p) - rated.torque,
            rated.fine_pitch,
            45f64.to_radians(),
        );
        (rated.rotor_speed, pitch, rated.torque)
    }
}

/// Wind speed at which rated torque is first reached at fine pitch.
pub fn rated_wind_speed(rated: &RatedValues) -> f64 {
    bisect(|v| aero_torque(v, rated.rotor_speed, rated.fine_pitch) - rated.torque, 6.0, 20.0)
}

/// Steady state and central-difference gradients at `wind`.
pub fn gradient_entry(rated: &RatedValues, wind: f64) -> AeroEntry {
    let (w, p, tau) = steady_state(rated, wind);
    let (dv, dw, dp) = (1e-3, 1e-4, 1e-3f64.to_radians());
    let cd = |f: &dyn Fn(f64, f64, f64) -> f64, which: usize| {
        let (h, a, b) = match which {
            0 => (dv, f(wind + dv, w, p), f(wind - dv, w, p)),
            1 => (dw, f(wind, w + dw, p), f(wind, w - dw, p)),
            _ => (dp, f(wind, w, p + dp), f(wind, w, p - dp)),
        };
        (a - b) / (2.0 * h)
    };
    AeroEntry {
        wind_speed: wind,
        rotor_speed: w,
        pitch: p,
        torque: tau,
        thrust: aero_thrust(wind, w, p),
        dq_dv: cd(&aero_torque, 0),
        dq_domega: cd(&aero_torque, 1),
        dq_dpitch: cd(&aero_torque, 2),
        dt_dv: cd(&aero_thrust, 0),
        dt_domega: cd(&aero_thrust, 1),
        dt_dpitch: cd(&aero_thrust, 2),
    }
}

/// Tip-speed ratio maximizing the power coefficient at fine pitch.
pub fn optimal_tip_speed_ratio() -> (f64, f64) {
    // golden-section search on the unimodal fine-pitch curve
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (4.0, 12.0);
    while b - a > 1e-10 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if power_coefficient(c, 0.0) > power_coefficient(d, 0.0) {
            b = d;
        } else {
            a = c;
        }
    }
    let tsr = 0.5 * (a + b);
    (tsr, power_coefficient(tsr, 0.0))
}

/// Wind speeds of the demo gradient table.
fn table_speeds(rated_wind: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (4..=25).map(f64::from).collect();
    v.extend([7.1, 10.3, 13.9, 17.9, 22.1, rated_wind]);
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v
}

/// The `demo_triplespar_like` parameter set: a 10 MW class rotor on a
/// deep-draft semi-submersible surrogate.
pub fn generate_demo_parameters() -> PlantParameters {
    let (tsr, cp) = optimal_tip_speed_ratio();
    let efficiency = 0.94;
    let rotor_speed = 1.005;
    let power = 10.0e6;
    let mut rated = RatedValues {
        rotor_speed,
        power,
        torque: power / (efficiency * rotor_speed),
        generator_efficiency: efficiency,
        optimal_gain: 0.5 * AIR_DENSITY * swept_area() * ROTOR_RADIUS.powi(3) * cp / tsr.powi(3),
        transition_fraction: 0.95,
        fine_pitch: 0.0,
        wind_speed: 0.0,
    };
    rated.wind_speed = rated_wind_speed(&rated);

    let (mp, ip, md, h) = (4.0e7, 1.5e10, 7.0e5, 119.0);
    let (kx, kb, kd) = (2.0e5, 1.3e9, 2.0e7);
    let structure = StructureParameters {
        platform_mass: mp,
        platform_pitch_inertia: ip,
        tower_top_mass: md,
        hub_height: h,
        surge_stiffness: kx,
        pitch_stiffness: kb,
        tower_stiffness: kd,
        surge_damping: 2.0 * 0.15 * (kx * (mp + md)).sqrt(),
        pitch_damping: 2.0 * 0.30 * (kb * (ip + md * h * h)).sqrt(),
        tower_damping: 2.0 * 0.01 * (kd * md).sqrt(),
        rotor_inertia: 1.6e8,
        generator_inertia_fraction: 0.02,
        shaft_filter_corner: std::f64::consts::TAU,
        blade_lever: 2.0 * ROTOR_RADIUS / 3.0,
        gravity: crate::wave::GRAVITY,
    };
    let aero = table_speeds(rated.wind_speed).into_iter().map(|v| gradient_entry(&rated, v)).collect();
    PlantParameters { name: "demo_triplespar_like".into(), structure, rated, aero }
}
