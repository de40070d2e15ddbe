use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::scalar::carg;

const G: f64 = 9.81;

fn band() -> (f64, f64) {
    (std::f64::consts::TAU / 20.0, std::f64::consts::TAU / 3.0)
}

fn random_realization(seed: u64, n: usize, band: (f64, f64)) -> WaveRealization<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (0..n)
        .map(|_| {
            let omega = rng.random_range(band.0..band.1);
            WaveComponent {
                amplitude: rng.random_range(0.05..0.5),
                omega,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                wavenumber: omega * omega / G,
            }
        })
        .collect();
    WaveRealization { components, gravity: G }
}

fn nrmse(pred: &[f64], truth: &[f64]) -> f64 {
    let e: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    let s: f64 = truth.iter().map(|t| t * t).sum();
    (e / s).sqrt()
}

#[test]
fn jonswap_integrates_to_hs_squared_over_16() {
    let spec = Jonswap::new(2.2, 8.0, 3.3);
    let grid = linspace(0.01, 30.0, 300_001);
    let vals: Vec<f64> = grid.iter().map(|&w| spec.density(w)).collect();
    assert_relative_eq!(trapezoid(&grid, &vals), 2.2 * 2.2 / 16.0, max_relative = 1e-4);
    // peak of the density sits at the peak frequency
    let peak = grid.iter().zip(&vals).fold((0.0, 0.0), |acc, (&w, &v)| if v > acc.1 { (w, v) } else { acc });
    assert!((peak.0 - spec.peak_frequency()).abs() < 1e-3);
}

#[test]
fn three_hour_variance_matches_hs() {
    let params = WaveSpectrumParams::new(2.2, 8.0, 3);
    let real = synthesize_realization(&params, G).unwrap();
    assert_eq!(real.components.len(), 200);
    let eta = real.series(0.0, 0.0, 0.5, 21_600);
    let mean = eta.iter().sum::<f64>() / eta.len() as f64;
    let var = eta.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / eta.len() as f64;
    let target = (2.2f64 / 4.0).powi(2);
    assert!((var / target - 1.0).abs() < 0.05, "variance {var} vs {target}");
}

#[test]
fn vanishing_sea_state() {
    let params = WaveSpectrumParams::new(1e-9, 8.0, 1);
    let real = synthesize_realization(&params, G).unwrap();
    for k in 0..200 {
        assert!(real.elevation_at(-313.0 * (k % 3) as f64, k as f64 * 3.7).abs() < 1e-8);
    }
}

#[test]
fn single_component_band() {
    let mut params = WaveSpectrumParams::new(2.0, 8.0, 7);
    params.n_components = 1;
    params.band = (0.7, 0.7 + 1e-6);
    let real = synthesize_realization(&params, G).unwrap();
    let c = real.components[0];
    let spec = Jonswap::new(2.0, 8.0, 3.3);
    let want = (2.0 * spec.density(c.omega) * 1e-6).sqrt();
    assert_relative_eq!(c.amplitude, want, max_relative = 1e-9);
    let eta = real.series(0.0, 0.0, 0.1, 2000);
    let peak = eta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert_relative_eq!(peak, want, max_relative = 1e-3);
}

#[test]
fn invalid_params_are_rejected() {
    let ok = WaveSpectrumParams::new(2.0, 8.0, 0);
    for bad in [
        WaveSpectrumParams { hs: 0.0, ..ok.clone() },
        WaveSpectrumParams { tp: -1.0, ..ok.clone() },
        WaveSpectrumParams { gamma: 0.5, ..ok.clone() },
        WaveSpectrumParams { n_components: 0, ..ok.clone() },
        WaveSpectrumParams { band: (1.0, 0.5), ..ok.clone() },
    ] {
        assert!(matches!(synthesize_realization(&bad, G), Err(WaveError::InvalidParams(_))));
    }
}

#[test]
fn single_component_elevation() {
    let r = WaveRealization::monochromatic(1.0, 1.0, 0.0, G);
    assert_relative_eq!(r.elevation_at(0.0, 0.0), 1.0);
    let wavelength = std::f64::consts::TAU * G;
    assert_relative_eq!(r.elevation_at(wavelength, 0.0), 1.0, epsilon = 1e-12);
}

#[test]
fn upwave_point_is_phase_shifted_component_wise() {
    let real = random_realization(50, 50, band());
    let l = 313.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let t = rng.random_range(0.0..1000.0);
        // each component seen at A equals the same component at the platform
        // evaluated kL/ω seconds later
        let shifted: f64 = real
            .components
            .iter()
            .map(|c| {
                let single = WaveRealization { components: vec![*c], gravity: G };
                single.elevation_at(0.0, t + c.wavenumber * l / c.omega)
            })
            .sum();
        assert!((real.elevation_at(-l, t) - shifted).abs() < 1e-9);
    }
}

#[test]
fn prediction_response_examples() {
    let cfg = PredictionConfig::<f64>::new(313.0, 10.0);
    let h0 = prediction_response(&cfg, 1e-9);
    assert!((h0.norm() - 1.0).abs() < 1e-15 && carg(h0).abs() < 1e-8);
    let root = cfg.gravity * cfg.delay / cfg.distance;
    assert!(carg(prediction_response(&cfg, root)).abs() < 1e-14);
    let w = std::f64::consts::TAU / 20.0;
    let phase = carg(prediction_response(&cfg, w));
    assert_relative_eq!(phase, w * (10.0 - w * 313.0 / G), epsilon = 1e-14);
    assert!((phase - (-0.0074)).abs() < 2e-4, "phase {phase}");
}

#[test]
fn prediction_filter_flags_noncausal_points() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let grid = linspace(0.05, 3.0, 60);
    let f = prediction_filter(&cfg, &grid).unwrap();
    assert!(!f.noncausal.is_empty());
    assert!(f.noncausal.iter().all(|&w| w < f.cutoff));
    assert!(check_causal_band(&cfg, &linspace(band().0, band().1, 50)).is_ok());
    let short = PredictionConfig::new(150.0, 10.0);
    match check_causal_band(&short, &linspace(band().0, band().1, 50)) {
        Err(WaveError::Causality { offending, cutoff }) => {
            assert!(!offending.is_empty());
            assert!(offending.iter().all(|&w| w < cutoff));
        }
        other => panic!("expected causality error, got {other:?}"),
    }
}

#[test]
fn measurement_distance_examples() {
    let l = min_measurement_distance(20.0, 10.0, G);
    assert!((l - 312.2).abs() < 0.1, "L = {l}");
    assert!(l <= 313.0 && l.ceil() == 313.0);
    assert_eq!(min_measurement_distance(20.0, 0.0, G), 0.0);
    assert_relative_eq!(min_measurement_distance(20.0, 20.0, G), 2.0 * l, max_relative = 1e-15);
}

#[test]
fn prediction_of_monochromatic_wave() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let dt = 0.05;
    let n = 40_000;
    let skip = (transient_skip(&cfg, band()) / dt).ceil() as usize;
    for omega in [0.35, std::f64::consts::TAU / 10.0, 2.0] {
        let wave = WaveRealization::monochromatic(1.0, omega, 0.3, G);
        let at_a = wave.series(-313.0, 0.0, dt, n);
        let truth = wave.series(0.0, 10.0, dt, n);
        let pred = predict_elevation(&at_a, dt, &cfg, band()).unwrap();
        let err = pred[skip..n - skip].iter().zip(&truth[skip..n - skip]).fold(0.0f64, |m, (p, t)| m.max((p - t).abs()));
        assert!(err < 1e-3, "omega {omega}: max error {err}");
    }
}

#[test]
fn prediction_of_zero_is_zero() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let out = predict_elevation(&vec![0.0; 5000], 0.05, &cfg, band()).unwrap();
    assert!(out.iter().all(|&v| v == 0.0));
    assert!(predict_elevation::<f64>(&[], 0.05, &cfg, band()).unwrap().is_empty());
}

#[test]
fn prediction_of_irregular_sea() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let real = random_realization(11, 50, band());
    let dt = 0.05;
    let n = 36_000;
    let at_a = real.series(-313.0, 0.0, dt, n);
    let truth = real.series(0.0, 10.0, dt, n);
    let pred = predict_elevation(&at_a, dt, &cfg, band()).unwrap();
    let skip = (transient_skip(&cfg, band()) / dt).ceil() as usize;
    let e = nrmse(&pred[skip..], &truth[skip..]);
    assert!(e < 0.02, "NRMSE {e}");
}

#[test]
fn causal_predictor_tracks_ideal_response() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let p = CausalPredictor::design(&cfg, band(), 0.05).unwrap();
    assert_eq!(p.stride(), 5);
    for w in linspace(band().0, band().1, 60) {
        let err = (p.response(w) - prediction_response(&cfg, w)).norm();
        assert!(err < 2e-3, "omega {w}: {err}");
    }
}

#[test]
fn causal_predictor_matches_offline_prediction() {
    let cfg = PredictionConfig::new(313.0, 10.0);
    let real = random_realization(12, 50, band());
    let dt = 0.05;
    let n = 24_000;
    let at_a = real.series(-313.0, 0.0, dt, n);
    let truth = real.series(0.0, 10.0, dt, n);
    let mut p = CausalPredictor::design(&cfg, band(), dt).unwrap();
    let online = p.filter(&at_a);
    let skip = (p.span() / dt).ceil() as usize;
    assert!(nrmse(&online[skip..], &truth[skip..]) < 0.01);
    p.reset();
    assert_eq!(p.push(0.0), 0.0);
}

#[test]
fn series_csv_round_trip() {
    let values = vec![0.1, -0.25, 0.5, 1.0];
    let mut buf = Vec::new();
    write_series_csv(&mut buf, 0.0, 0.05, &values).unwrap();
    let (dt, back) = read_series_csv(buf.as_slice()).unwrap();
    assert_relative_eq!(dt, 0.05, max_relative = 1e-12);
    assert_eq!(back, values);
    let bad = "time_s,elevation_m\n0,1\n0.1,abc\n";
    assert!(matches!(read_series_csv(bad.as_bytes()), Err(WaveError::Parse { line: 3, .. })));
    let uneven = "time_s,elevation_m\n0,1\n0.1,2\n0.3,3\n";
    assert!(matches!(read_series_csv(uneven.as_bytes()), Err(WaveError::Parse { line: 4, .. })));
}

#[test]
fn f32_realization() {
    let params = WaveSpectrumParams::<f32>::new(2.0, 8.0, 1);
    let real = synthesize_realization(&params, 9.81f32).unwrap();
    let var64 = synthesize_realization(&WaveSpectrumParams::<f64>::new(2.0, 8.0, 1), G).unwrap().variance();
    assert!((real.variance() as f64 / var64 - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prediction_filter_is_pure_phase(l in 50.0f64..1000.0, tp in 0.5f64..30.0, w in 0.0f64..10.0) {
        let cfg = PredictionConfig::new(l, tp);
        prop_assert!((prediction_response(&cfg, w).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dispersion_holds_for_every_component(hs in 0.5f64..8.0, tp in 4.0f64..15.0, n in 1usize..120, seed in any::<u64>()) {
        let mut params = WaveSpectrumParams::new(hs, tp, seed);
        params.n_components = n;
        let real = synthesize_realization(&params, G).unwrap();
        prop_assert_eq!(real.components.len(), n);
        for c in &real.components {
            prop_assert!(c.amplitude >= 0.0 && c.omega > 0.0);
            prop_assert!((c.wavenumber - c.omega * c.omega / G).abs() <= 1e-12 * c.wavenumber);
        }
        let mut prev = 0.0;
        for c in &real.components {
            prop_assert!(c.omega > prev);
            prev = c.omega;
        }
    }

    #[test]
    fn distance_boundary_is_causal(t_bar in 3.0f64..40.0, tp in 0.5f64..30.0, frac in 0.0f64..3.0) {
        let l = min_measurement_distance(t_bar, tp, G);
        let w = std::f64::consts::TAU / t_bar * (1.0 + frac);
        prop_assert!(tp - w * l / G <= 1e-12 * tp);
        let cfg = PredictionConfig::new(l, tp);
        prop_assert!(check_causal_band(&cfg, &[w]).is_ok());
    }

    #[test]
    fn realized_variance_is_parseval(seed in any::<u64>(), n in 1usize..40) {
        // sample over a common period of all components: place them on a harmonic grid
        let base = 2.0 * std::f64::consts::PI / 400.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let components = (0..n).map(|j| {
            let omega = base * (j + 20) as f64;
            WaveComponent { amplitude: rng.random_range(0.0..1.0), omega, phase: rng.random_range(0.0..6.0), wavenumber: omega * omega / G }
        }).collect();
        let real = WaveRealization { components, gravity: G };
        let m = 4000;
        let eta = real.series(0.0, 0.0, 400.0 / m as f64, m);
        let var = eta.iter().map(|v| v * v).sum::<f64>() / m as f64;
        prop_assert!((var - real.variance()).abs() < 1e-10 * real.variance().max(1e-12));
    }

    #[test]
    fn prediction_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), alpha in -2.0f64..2.0) {
        let cfg = PredictionConfig::new(313.0, 10.0);
        let r1 = random_realization(s1, 10, band());
        let r2 = random_realization(s2, 10, band());
        let dt = 0.1;
        let n = 6000;
        let x1 = r1.series(-313.0, 0.0, dt, n);
        let x2 = r2.series(-313.0, 0.0, dt, n);
        let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + alpha * b).collect();
        let p1 = predict_elevation(&x1, dt, &cfg, band()).unwrap();
        let p2 = predict_elevation(&x2, dt, &cfg, band()).unwrap();
        let ps = predict_elevation(&sum, dt, &cfg, band()).unwrap();
        for k in 0..n {
            prop_assert!((ps[k] - (p1[k] + alpha * p2[k])).abs() < 1e-10);
        }
    }
}
