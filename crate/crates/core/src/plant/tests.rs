use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use proptest::prelude::*;

use super::rotor::*;
use super::*;
use crate::forces::reference::reference_force_model;
use crate::forces::{FitReport, PwemModel, ELEVATION};
use crate::lti::discretize;

fn params() -> PlantParameters {
    demo_parameters()
}

fn plant_at(v: f64) -> StateSpaceModel<f64> {
    let p = params();
    linearize(&p, &p.operating_point(v).unwrap()).unwrap()
}

fn dc(model: &StateSpaceModel<f64>, input: &str, output: &str) -> f64 {
    subsystem(model, input, output).unwrap().evaluate(0.0).unwrap()[(0, 0)].re
}

fn pwem_from(model: StateSpaceModel<f64>) -> PwemModel<f64> {
    PwemModel {
        model,
        t_p: 10.0,
        fit: FitReport { fit_percent: vec![], fpe: vec![], parameters: 0, samples: 0, band: (0.0, 0.0) },
    }
}

#[test]
fn shipped_parameters_match_generator() {
    let shipped = params();
    let generated = generate_demo_parameters();
    assert_eq!(shipped.structure, generated.structure);
    assert_eq!(shipped.aero.len(), generated.aero.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    for (a, b) in shipped.aero.iter().zip(&generated.aero) {
        for (x, y) in [
            (a.wind_speed, b.wind_speed),
            (a.rotor_speed, b.rotor_speed),
            (a.pitch, b.pitch),
            (a.torque, b.torque),
            (a.thrust, b.thrust),
            (a.dq_dv, b.dq_dv),
            (a.dq_dpitch, b.dq_dpitch),
            (a.dq_domega, b.dq_domega),
            (a.dt_dv, b.dt_dv),
            (a.dt_dpitch, b.dt_dpitch),
            (a.dt_domega, b.dt_domega),
        ] {
            assert!(close(x, y), "{x} vs {y} at {} m/s", a.wind_speed);
        }
    }
    assert_eq!(PlantParameters::from_toml(&shipped.to_toml()).unwrap(), shipped);
}

#[test]
fn demo_rated_values() {
    let p = params();
    assert!((p.rated.wind_speed - 11.32).abs() < 0.05, "{}", p.rated.wind_speed);
    let (lo, hi) = p.wind_range();
    assert!(lo <= 4.0 && hi >= 25.0);
    let (tsr, cp) = optimal_tip_speed_ratio();
    assert!((7.5..9.0).contains(&tsr) && (0.45..0.5).contains(&cp), "{tsr} {cp}");
    // K Ω² equals the optimal aerodynamic torque on the optimal-TSR line
    let v = 6.0;
    let w = tsr * v / ROTOR_RADIUS;
    assert!((aero_torque(v, w, 0.0) - p.rated.optimal_gain * w * w).abs() < 1e-9 * aero_torque(v, w, 0.0));
}

#[test]
fn steady_states_balance_the_nonlinear_rotor() {
    let p = params();
    for e in &p.aero {
        let q = aero_torque(e.wind_speed, e.rotor_speed, e.pitch);
        assert!((q - e.torque).abs() < 1e-8 * e.torque, "{} m/s", e.wind_speed);
        assert!((torque_law(&p.rated, e.rotor_speed) - e.torque).abs() < 1e-8 * e.torque);
        assert!(e.rotor_speed <= p.rated.rotor_speed * (1.0 + 1e-12));
        assert!(e.pitch >= p.rated.fine_pitch);
    }
    let op = p.operating_point(10.3).unwrap();
    let s = &p.structure;
    // static offset solves K q = e T
    assert!((s.surge_stiffness * op.platform_surge - op.thrust).abs() < 1e-6 * op.thrust);
    assert!((s.pitch_stiffness * op.platform_pitch - s.hub_height * op.thrust).abs() < 1e-6 * op.thrust * s.hub_height);
}

#[test]
fn torque_law_is_continuous() {
    let r = params().rated;
    for w in [r.transition_speed(), r.rotor_speed] {
        let a = torque_law(&r, w * (1.0 - 1e-12));
        let b = torque_law(&r, w * (1.0 + 1e-12));
        assert!((a - b).abs() < 1e-6 * a);
    }
    assert_eq!(torque_law(&r, 0.0), 0.0);
}

#[test]
fn validation_rejects_bad_parameters() {
    let mut p = params();
    p.structure.rotor_inertia = -1.0;
    assert!(matches!(p.validate(), Err(PlantError::Invalid(_))));
    let mut p = params();
    p.structure.pitch_damping = -1.0;
    assert!(p.validate().is_err());
    let mut p = params();
    p.aero.swap(2, 3);
    assert!(p.validate().is_err());
    let mut p = params();
    p.aero.truncate(10);
    assert!(p.validate().is_err());
    assert!(PlantParameters::from_toml("name = 3").is_err());
}

#[test]
fn out_of_range_operating_point() {
    let p = params();
    assert!(matches!(p.operating_point(3.0), Err(PlantError::OutOfRange { .. })));
    assert!(matches!(p.operating_point(26.0), Err(PlantError::OutOfRange { .. })));
    assert!(p.operating_point(f64::NAN).is_err());
}

#[test]
fn interpolation_hits_table_entries() {
    let p = params();
    for e in &p.aero {
        assert_eq!(&p.aero_at(e.wind_speed).unwrap(), e);
    }
    let a = p.aero_at(8.5).unwrap();
    let (lo, hi) = (p.aero_at(8.0).unwrap(), p.aero_at(9.0).unwrap());
    assert!((a.dq_dv - 0.5 * (lo.dq_dv + hi.dq_dv)).abs() < 1e-9 * a.dq_dv.abs());
}

#[test]
fn model_shape_and_names() {
    let g = plant_at(8.0);
    assert_eq!(g.order(), STATES);
    assert_eq!(g.inputs(), INPUTS.map(String::from));
    assert_eq!(g.outputs(), OUTPUTS.map(String::from));
    let g32 = linearize::<f32>(&params(), &params().operating_point(8.0).unwrap()).unwrap();
    assert!(g32.is_stable());
}

#[test]
fn equilibrium_holds_for_1000_seconds() {
    let g = plant_at(13.9);
    let d = discretize(&g, 0.05).unwrap();
    let mut x = DVector::zeros(STATES);
    let u = DVector::zeros(5);
    for _ in 0..20_000 {
        let y = d.step(&mut x, &u);
        assert!(y.amax() < 1e-9);
    }
}

#[test]
fn open_loop_stable_at_every_table_entry() {
    let p = params();
    for e in &p.aero {
        let g = linearize::<f64>(&p, &p.operating_point(e.wind_speed).unwrap()).unwrap();
        assert!(g.spectral_abscissa() < 0.0, "{} m/s: {}", e.wind_speed, g.spectral_abscissa());
    }
}

#[test]
fn torque_slows_rotor_everywhere() {
    for e in &params().aero {
        assert!(dc(&plant_at(e.wind_speed), GENERATOR_TORQUE, ROTOR_SPEED) < 0.0);
    }
}

/// Steady rotor speed of the nonlinear surrogate at fixed generator torque.
fn nonlinear_speed(wind: f64, pitch: f64, torque: f64, guess: f64) -> f64 {
    bisect(|w| aero_torque(wind, w, pitch) - torque, 0.9 * guess, 1.1 * guess)
}

#[test]
fn dc_gains_match_nonlinear_steps() {
    let p = params();
    // above rated: pitch step at fixed torque
    let op = p.operating_point(17.9).unwrap();
    let dp = 1e-4;
    let w = nonlinear_speed(17.9, op.pitch + dp, op.torque, op.rotor_speed);
    let nonlinear = (w - op.rotor_speed) / dp;
    let linear = dc(&plant_at(17.9), BLADE_PITCH, ROTOR_SPEED);
    assert!(linear < 0.0);
    assert!((linear - nonlinear).abs() < 0.02 * nonlinear.abs(), "{linear} vs {nonlinear}");
    // below rated: wind step at fixed torque
    let op = p.operating_point(8.0).unwrap();
    let dv = 1e-3;
    let w = nonlinear_speed(8.0 + dv, op.pitch, op.torque, op.rotor_speed);
    let nonlinear = (w - op.rotor_speed) / dv;
    let linear = dc(&plant_at(8.0), WIND_SPEED, ROTOR_SPEED);
    assert!(linear > 0.0);
    assert!((linear - nonlinear).abs() < 0.02 * nonlinear, "{linear} vs {nonlinear}");
}

#[test]
fn natural_periods() {
    let g = plant_at(8.0);
    let mut periods: Vec<f64> = g
        .poles()
        .iter()
        .filter(|z| z.im > 1e-6)
        .map(|z| std::f64::consts::TAU / z.im)
        .collect();
    periods.sort_by(|a, b| b.total_cmp(a));
    assert!((60.0..=120.0).contains(&periods[0]), "{periods:?}");
    assert!((25.0..=40.0).contains(&periods[1]), "{periods:?}");
}

#[test]
fn pitch_step_reduces_thrust_and_tilts_platform_forward() {
    let g = plant_at(17.9);
    let ip = g.input_index(BLADE_PITCH).unwrap();
    let it = g.output_index(THRUST).unwrap();
    let ib = g.output_index(PLATFORM_PITCH).unwrap();
    assert!(g.d()[(it, ip)] < 0.0);
    let d = discretize(&g, 0.05).unwrap();
    let mut x = DVector::zeros(STATES);
    let mut u = DVector::zeros(5);
    u[ip] = 1f64.to_radians();
    let first = d.step(&mut x, &u);
    assert!(first[it] < 0.0);
    let mut y = first;
    for _ in 0..200 {
        y = d.step(&mut x, &u);
    }
    assert!(y[ib] < 0.0, "platform pitch {}", y[ib]);
}

#[test]
fn power_and_load_outputs() {
    let p = params();
    let op = p.operating_point(10.3).unwrap();
    let g = plant_at(10.3);
    let y = op.output_offsets(&p);
    assert!((y[7] - p.rated.generator_efficiency * op.torque * op.rotor_speed).abs() < 1e-6);
    // small torque step: power channel matches the product rule
    let ip = g.output_index(POWER).unwrap();
    assert!((g.d()[(ip, 0)] - p.rated.generator_efficiency * op.rotor_speed).abs() < 1e-12);
    // shaft moment settles at the generator torque step
    let sm = dc(&g, GENERATOR_TORQUE, SHAFT_MOMENT);
    let speed = dc(&g, GENERATOR_TORQUE, ROTOR_SPEED);
    let expected = 1.0 * (1.0 - p.structure.generator_inertia_fraction)
        + p.structure.generator_inertia_fraction * (op.aero.dq_domega * speed);
    assert!((sm - expected).abs() < 1e-9, "{sm} vs {expected}");
}

#[test]
fn subsystem_is_a_projection() {
    let g = plant_at(8.0);
    let s = subsystem(&g, GENERATOR_TORQUE, ROTOR_SPEED).unwrap();
    let (i, o) = (g.input_index(GENERATOR_TORQUE).unwrap(), g.output_index(ROTOR_SPEED).unwrap());
    for w in crate::lti::log_grid(0.01, 10.0, 20) {
        let full = g.evaluate(w).unwrap()[(o, i)];
        assert!((s.evaluate(w).unwrap()[(0, 0)] - full).norm() <= 1e-12 * full.norm());
    }
    assert!(matches!(subsystem(&g, "yaw", ROTOR_SPEED), Err(PlantError::Lti(_))));
    assert!(subsystem(&g, GENERATOR_TORQUE, "yaw_rate").is_err());
}

#[test]
fn wave_path_composes_forces() {
    let g = plant_at(8.0);
    let pwem = pwem_from(reference_force_model());
    let path = wave_path(&g, &pwem).unwrap();
    assert_eq!(path.inputs(), [ELEVATION.to_string()]);
    let (fx, my) = (g.input_index(SURGE_FORCE).unwrap(), g.input_index(PITCH_MOMENT).unwrap());
    for w in crate::lti::log_grid(0.05, 4.0, 25) {
        let gm = g.evaluate(w).unwrap();
        let f = pwem.model.evaluate(w).unwrap();
        let oracle = gm.columns(fx, 1) * f[(0, 0)] + gm.columns(my, 1) * f[(1, 0)];
        let got = path.evaluate(w).unwrap();
        for o in 0..OUTPUTS.len() {
            assert!((got[(o, 0)] - oracle[(o, 0)]).norm() <= 1e-9 * oracle[(o, 0)].norm().max(1e-300));
        }
    }
}

#[test]
fn wave_path_static_and_zero_pwem() {
    let g = plant_at(13.9);
    let zero = StateSpaceModel::static_gain(DMatrix::zeros(2, 1))
        .with_names(vec![ELEVATION.into()], vec![SURGE_FORCE.into(), PITCH_MOMENT.into()])
        .unwrap();
    let path = wave_path(&g, &pwem_from(zero)).unwrap();
    assert!(path.evaluate(0.7).unwrap().iter().all(|z| z.norm() == 0.0));
    let unit = StateSpaceModel::static_gain(DMatrix::from_element(2, 1, 1.0))
        .with_names(vec![ELEVATION.into()], vec![SURGE_FORCE.into(), PITCH_MOMENT.into()])
        .unwrap();
    let path = wave_path(&g, &pwem_from(unit)).unwrap();
    let forces = g.subsystem(&[SURGE_FORCE, PITCH_MOMENT], &OUTPUTS).unwrap();
    for w in [0.1, 0.7, 2.0] {
        let f = forces.evaluate(w).unwrap();
        let p = path.evaluate(w).unwrap();
        for o in 0..OUTPUTS.len() {
            let sum: Complex<f64> = f[(o, 0)] + f[(o, 1)];
            assert!((p[(o, 0)] - sum).norm() <= 1e-10 * sum.norm().max(1e-300));
        }
    }
}

#[test]
fn wave_path_channel_mismatch() {
    let g = plant_at(8.0);
    let bad = StateSpaceModel::static_gain(DMatrix::from_element(2, 1, 1.0))
        .with_names(vec![ELEVATION.into()], vec!["heave_force".into(), PITCH_MOMENT.into()])
        .unwrap();
    assert!(matches!(wave_path(&g, &pwem_from(bad)), Err(PlantError::ChannelMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stable_with_negative_torque_gain_at_any_wind(v in 4.0f64..25.0) {
        let g = plant_at(v);
        prop_assert!(g.is_stable());
        prop_assert!(dc(&g, GENERATOR_TORQUE, ROTOR_SPEED) < 0.0);
    }
}
