use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

type C64 = Complex<f64>;

fn siso(a: &[f64], b: &[f64], c: &[f64], d: f64) -> StateSpaceModel<f64> {
    let n = b.len();
    StateSpaceModel::from_matrices(
        DMatrix::from_row_slice(n, n, a),
        DMatrix::from_column_slice(n, 1, b),
        DMatrix::from_row_slice(1, n, c),
        DMatrix::from_element(1, 1, d),
    )
    .unwrap()
}

/// Random stable model with distinct real poles, returned together with its
/// residues so that the transfer function can be evaluated as a partial-fraction sum.
struct PartialFractions {
    model: StateSpaceModel<f64>,
    poles: Vec<f64>,
    residues: Vec<f64>,
    d: f64,
}

fn random_partial_fractions(rng: &mut ChaCha8Rng, n: usize) -> PartialFractions {
    let poles: Vec<f64> = (0..n).map(|i| -(0.2 + i as f64 * 0.7 + rng.random_range(0.0..0.3))).collect();
    let residues: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let d = rng.random_range(-1.0..1.0);
    let t = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
    let ti = t.clone().try_inverse().unwrap();
    let a = &t * DMatrix::from_diagonal(&DVector::from_vec(poles.clone())) * &ti;
    let b = &t * DMatrix::from_column_slice(n, 1, &residues);
    let c = DMatrix::from_element(1, n, 1.0) * &ti;
    let model = StateSpaceModel::from_matrices(a, b, c, DMatrix::from_element(1, 1, d)).unwrap();
    PartialFractions { model, poles, residues, d }
}

fn pf_eval(pf: &PartialFractions, w: f64) -> C64 {
    let s = C64::new(0.0, w);
    pf.poles.iter().zip(&pf.residues).map(|(&p, &r)| r / (s - p)).sum::<C64>() + pf.d
}

/// Random stable MIMO model: a random matrix shifted left of its spectral abscissa.
fn random_stable(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpaceModel<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let abscissa = r.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    let a = r - DMatrix::identity(n, n) * (abscissa + rng.random_range(0.1..1.0));
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let d = DMatrix::from_fn(p, m, |_, _| rng.random_range(-0.5..0.5));
    StateSpaceModel::from_matrices(a, b, c, d).unwrap()
}

fn rel_err(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

#[test]
fn evaluate_first_order() {
    let g = siso(&[-1.0], &[1.0], &[1.0], 0.0);
    let dc = g.evaluate(0.0).unwrap()[(0, 0)];
    assert_relative_eq!(dc.re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(dc.im, 0.0, epsilon = 1e-14);
    let h = g.evaluate(1.0).unwrap()[(0, 0)];
    assert_relative_eq!(h.re, 0.5, epsilon = 1e-14);
    assert_relative_eq!(h.im, -0.5, epsilon = 1e-14);
}

#[test]
fn evaluate_matches_partial_fraction_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pf = random_partial_fractions(&mut rng, 4);
    let got = pf.model.evaluate(0.5).unwrap()[(0, 0)];
    let want = pf_eval(&pf, 0.5);
    assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
}

#[test]
fn evaluate_at_pole_is_reported() {
    let integrator = siso(&[0.0], &[1.0], &[1.0], 0.0);
    assert!(matches!(integrator.evaluate(0.0), Err(LtiError::EvaluationAtPole { .. })));
    let osc = siso(&[0.0, 1.0, -4.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], 0.0);
    assert!(matches!(osc.evaluate(2.0), Err(LtiError::EvaluationAtPole { .. })));
    assert!(osc.evaluate(1.0).is_ok());
    assert!(matches!(integrator.evaluate(-1.0), Err(LtiError::InvalidFrequency(_))));
}

#[test]
fn constructor_rejects_bad_shapes_and_names() {
    let err = StateSpaceModel::<f64>::new(
        DMatrix::zeros(2, 2),
        DMatrix::zeros(3, 1),
        DMatrix::zeros(1, 2),
        DMatrix::zeros(1, 1),
        vec!["u".into()],
        vec!["y".into()],
    );
    assert!(matches!(err, Err(LtiError::Dimension(_))));
    let dup = StateSpaceModel::<f64>::new(
        DMatrix::zeros(0, 0),
        DMatrix::zeros(0, 2),
        DMatrix::zeros(1, 0),
        DMatrix::zeros(1, 2),
        vec!["u".into(), "u".into()],
        vec!["y".into()],
    );
    assert!(matches!(dup, Err(LtiError::DuplicateChannel(_))));
}

#[test]
fn series_with_identity_is_transparent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = random_stable(&mut rng, 3, 1, 1);
    let s = series(&StateSpaceModel::identity(1), &g).unwrap();
    for _ in 0..20 {
        let w = rng.random_range(0.01..10.0);
        assert!(rel_err(&s.evaluate(w).unwrap(), &g.evaluate(w).unwrap()) < 1e-12);
    }
}

#[test]
fn series_of_first_orders() {
    let g2 = siso(&[-1.0], &[1.0], &[1.0], 0.0);
    let g1 = siso(&[-2.0], &[1.0], &[1.0], 0.0);
    let got = series(&g2, &g1).unwrap().evaluate(1.0).unwrap()[(0, 0)];
    let want = C64::new(1.0, 0.0) / (C64::new(1.0, 1.0) * C64::new(2.0, 1.0));
    assert!((got - want).norm() < 1e-14);
}

#[test]
fn series_dimension_mismatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g1 = random_stable(&mut rng, 2, 1, 2);
    let g2 = random_stable(&mut rng, 2, 1, 1);
    assert!(matches!(series(&g2, &g1), Err(LtiError::Dimension(_))));
}

#[test]
fn series_of_random_models_multiplies_responses() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g1 = random_stable(&mut rng, 4, 2, 3);
    let g2 = random_stable(&mut rng, 5, 3, 2);
    let s = series(&g2, &g1).unwrap();
    for w in log_grid(0.01, 100.0, 50) {
        let want = g2.evaluate(w).unwrap() * g1.evaluate(w).unwrap();
        assert!(rel_err(&s.evaluate(w).unwrap(), &want) < 1e-10);
    }
}

#[test]
fn invert_static_gain() {
    let inv = invert(&StateSpaceModel::static_gain(DMatrix::from_element(1, 1, 2.0))).unwrap();
    assert_eq!(inv.model.order(), 0);
    assert_relative_eq!(inv.model.d()[(0, 0)], 0.5);
    assert!(inv.poles.is_empty());
}

#[test]
fn invert_lead_lag() {
    // (s+2)/(s+1) = 1 + 1/(s+1)
    let g = siso(&[-1.0], &[1.0], &[1.0], 1.0);
    let inv = invert(&g).unwrap();
    assert_eq!(inv.poles.len(), 1);
    assert_relative_eq!(inv.poles[0].re, -2.0, epsilon = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let w = rng.random_range(0.0..20.0);
        let s = C64::new(0.0, w);
        let want = (s + 1.0) / (s + 2.0);
        let got = inv.model.evaluate(w).unwrap()[(0, 0)];
        assert!((got - want).norm() < 1e-12);
        let prod = got * g.evaluate(w).unwrap()[(0, 0)];
        assert!((prod - 1.0).norm() < 1e-10);
    }
}

#[test]
fn invert_rejects_non_minimum_phase_and_strictly_proper() {
    // (s-1)/(s+1) = 1 - 2/(s+1)
    let g = siso(&[-1.0], &[1.0], &[-2.0], 1.0);
    match invert(&g) {
        Err(LtiError::UnstableInverse { zeros }) => {
            assert_eq!(zeros.len(), 1);
            assert_relative_eq!(zeros[0].re, 1.0, epsilon = 1e-12);
        }
        other => panic!("expected unstable inverse, got {other:?}"),
    }
    let sp = siso(&[-1.0], &[1.0], &[1.0], 0.0);
    assert!(matches!(invert(&sp), Err(LtiError::NotBiproper)));
}

#[test]
fn feedback_static_loop() {
    // plant y = 2u + r, controller u = 0.25 y: closed loop y = r / (1 - 0.5)
    let plant = StateSpaceModel::static_gain(DMatrix::from_row_slice(1, 2, &[2.0, 1.0]));
    let k = StateSpaceModel::static_gain(DMatrix::from_element(1, 1, 0.25));
    let cl = feedback(&plant, &k, &[0], &[0]).unwrap();
    assert_relative_eq!(cl.d()[(0, 1)], 2.0, epsilon = 1e-14);
}

#[test]
fn feedback_matches_frequency_domain_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let plant = random_stable(&mut rng, 4, 2, 2);
    let k = random_stable(&mut rng, 2, 1, 1).scaled(0.1);
    let cl = feedback(&plant, &k, &[0], &[1]).unwrap();
    for w in log_grid(0.05, 20.0, 15) {
        let g = plant.evaluate(w).unwrap();
        let kk = k.evaluate(w).unwrap()[(0, 0)];
        // u0 = k·y1 + r0 ; y = G [u0, r1]
        let loop_gain = C64::new(1.0, 0.0) - kk * g[(1, 0)];
        let mut want = g.clone();
        for j in 0..2 {
            let u0 = kk * g[(1, j)] / loop_gain;
            for i in 0..2 {
                want[(i, j)] = g[(i, j)] + g[(i, 0)] * u0;
            }
        }
        assert!(rel_err(&cl.evaluate(w).unwrap(), &want) < 1e-10);
    }
}

#[test]
fn relative_degree_and_lead() {
    // 1/((s+1)(s+2))
    let g = siso(&[-1.0, 0.0, 1.0, -2.0], &[1.0, 0.0], &[0.0, 1.0], 0.0);
    assert_eq!(g.relative_degree(), Some(2));
    let lead = g.times_lead(0.1).unwrap();
    assert_eq!(lead.relative_degree(), Some(1));
    let w = 1.3;
    let s = C64::new(0.0, w);
    let want = g.evaluate(w).unwrap()[(0, 0)] * (s * 0.1 + 1.0);
    assert!((lead.evaluate(w).unwrap()[(0, 0)] - want).norm() < 1e-14);
    assert_eq!(StateSpaceModel::<f64>::static_gain(DMatrix::zeros(1, 1)).relative_degree(), None);
}

#[test]
fn subsystem_selects_named_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_stable(&mut rng, 3, 2, 2)
        .with_names(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()])
        .unwrap();
    let sub = g.subsystem(&["b"], &["x"]).unwrap();
    assert_eq!(sub.inputs(), &["b".to_string()]);
    let w = 0.7;
    assert!((sub.evaluate(w).unwrap()[(0, 0)] - g.evaluate(w).unwrap()[(0, 1)]).norm() < 1e-14);
    assert!(matches!(g.subsystem(&["c"], &["x"]), Err(LtiError::UnknownChannel(_))));
}

#[test]
fn lyapunov_residual_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = random_stable(&mut rng, 7, 2, 1);
    let q = g.b() * g.b().transpose();
    let x = lyapunov(g.a(), &q).unwrap();
    let res = g.a() * &x + &x * g.a().transpose() + &q;
    assert!(res.amax() < 1e-10 * q.amax().max(1.0));
}

#[test]
fn reduce_redundant_parallel_branch() {
    let branch = siso(&[-1.0], &[1.0], &[1.0], 0.0);
    let two = parallel(&branch, &branch).unwrap();
    assert_eq!(two.order(), 2);
    let red = reduce_order(&two, 1).unwrap();
    assert_eq!(red.model.order(), 1);
    let err = max_response_error(&red.model, &two, &log_grid(0.01, 100.0, 50)).unwrap();
    assert!(err < 1e-8, "err = {err}");
}

#[test]
fn reduce_random_18_state_respects_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let g = random_stable(&mut rng, 18, 1, 1);
    let grid = log_grid(0.01, 100.0, 50);
    for target in [4, 8, 12] {
        let red = reduce_order(&g, target).unwrap();
        assert_eq!(red.model.order(), target);
        let err = max_response_error(&red.model, &g, &grid).unwrap();
        assert!(err <= red.error_bound * (1.0 + 1e-9), "target {target}: {err} > {}", red.error_bound);
    }
}

#[test]
fn reduce_to_full_order_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = random_stable(&mut rng, 5, 2, 2);
    let red = reduce_order(&g, 5).unwrap();
    assert_eq!(red.error_bound, 0.0);
    assert!(max_response_error(&red.model, &g, &log_grid(0.01, 100.0, 30)).unwrap() < 1e-10);
}

#[test]
fn reduce_rejects_unstable_and_zero_target() {
    let unstable = siso(&[0.5], &[1.0], &[1.0], 0.0);
    assert!(matches!(reduce_order(&unstable, 1), Err(LtiError::Unstable { .. })));
    let g = siso(&[-1.0], &[1.0], &[1.0], 0.0);
    assert!(matches!(reduce_order(&g, 0), Err(LtiError::InvalidOrder { .. })));
}

#[test]
fn hsv_match_known_first_order() {
    // 1/(s+a): P = 1/(2a), Q = 1/(2a), σ = 1/(2a)
    let g = siso(&[-4.0], &[1.0], &[1.0], 0.0);
    let hsv = hankel_singular_values(&g).unwrap();
    assert_relative_eq!(hsv[0], 0.125, epsilon = 1e-14);
}

#[test]
fn discretize_integrator() {
    let d = discretize(&siso(&[0.0], &[1.0], &[1.0], 0.0), 0.1).unwrap();
    assert_relative_eq!(d.ad[(0, 0)], 1.0, epsilon = 1e-15);
    assert_relative_eq!(d.bd[(0, 0)], 0.1, epsilon = 1e-15);
}

#[test]
fn discretize_first_order() {
    let d = discretize(&siso(&[-1.0], &[1.0], &[1.0], 0.0), 0.05).unwrap();
    assert_relative_eq!(d.ad[(0, 0)], (-0.05f64).exp(), epsilon = 1e-15);
    assert!(matches!(
        discretize(&siso(&[-1.0], &[1.0], &[1.0], 0.0), 0.0),
        Err(LtiError::InvalidStep(_))
    ));
}

#[test]
fn tustin_matches_warped_continuous_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let g = random_stable(&mut rng, 5, 2, 2);
    let dt = 0.2;
    let dm = discretize_tustin(&g, dt).unwrap();
    let cplx = |m: &DMatrix<f64>| m.map(|v| C64::new(v, 0.0));
    for w in [0.05, 0.7, 3.0, 12.0] {
        let z = C64::from_polar(1.0, w * dt);
        let zi = DMatrix::<C64>::identity(5, 5) * z - cplx(&dm.ad);
        let hd = cplx(&dm.c) * zi.lu().solve(&cplx(&dm.bd)).unwrap() + cplx(&dm.d);
        let warped = 2.0 / dt * (w * dt / 2.0).tan();
        let hc = g.evaluate(warped).unwrap();
        for (a, b) in hd.iter().zip(hc.iter()) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "w={w}: {a} vs {b}");
        }
    }
    assert!(matches!(discretize_tustin(&g, -1.0), Err(LtiError::InvalidStep(_))));
}

#[test]
fn tustin_of_static_gain_is_the_gain() {
    let g = StateSpaceModel::static_gain(DMatrix::from_element(1, 1, -2.5));
    let dm = discretize_tustin(&g, 0.05).unwrap();
    assert_eq!(dm.order(), 0);
    assert_eq!(dm.step(&mut DVector::zeros(0), &DVector::from_element(1, 2.0))[0], -5.0);
}

fn rk4_step(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DVector<f64>, u: &DVector<f64>, h: f64) -> DVector<f64> {
    let f = |x: &DVector<f64>| a * x + b * u;
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

#[test]
fn discrete_step_response_matches_fine_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = random_stable(&mut rng, 4, 1, 1);
    let dt = 0.1;
    let dm = discretize(&g, dt).unwrap();
    let u = vec![DVector::from_element(1, 1.0); 100];
    let y = dm.simulate(&u);
    let sub = 200;
    let mut x = DVector::zeros(4);
    for (k, yk) in y.iter().enumerate() {
        let want = g.c() * &x + g.d() * &u[k];
        assert!((yk[0] - want[0]).abs() < 1e-6, "k={k}");
        for _ in 0..sub {
            x = rk4_step(g.a(), g.b(), &x, &u[k], dt / sub as f64);
        }
    }
}

#[test]
fn json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_stable(&mut rng, 3, 2, 1);
    let back = StateSpaceModel::<f64>::from_json(&g.to_json()).unwrap();
    assert_eq!(back, g);
    assert!(StateSpaceModel::<f64>::from_json("{\"a\": 1}").is_err());
}

#[test]
fn frequency_response_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = random_stable(&mut rng, 3, 1, 2);
    let fr = g.frequency_response(&log_grid(0.1, 10.0, 25)).unwrap();
    let back = FrequencyResponseSet::<f64>::from_csv(&fr.to_csv()).unwrap();
    assert_eq!(back.len(), 25);
    for (a, b) in fr.samples().iter().zip(back.samples()) {
        assert!(rel_err(b, a) < 1e-14);
    }
    assert!(FrequencyResponseSet::<f64>::from_csv("omega_rad_s,y_re,y_im\n1.0,2.0\n").is_err());
    assert!(FrequencyResponseSet::<f64>::from_csv("omega_rad_s,y_re,y_im\n1.0,2.0,0\n0.5,1,1\n").is_err());
}

#[test]
fn f32_models_work() {
    let g = StateSpaceModel::<f32>::first_order(1.0, 1.0);
    let h = g.evaluate(1.0).unwrap()[(0, 0)];
    assert!((h.re - 0.5).abs() < 1e-6 && (h.im + 0.5).abs() < 1e-6);
    let red = reduce_order(&parallel(&g, &g).unwrap(), 1).unwrap();
    assert_eq!(red.model.order(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluate_is_linear_in_bcd(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, w in 0.01f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = random_stable(&mut rng, 4, 2, 2);
        let b2 = DMatrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
        let c2 = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
        let d2 = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let mk = |b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>| {
            StateSpaceModel::from_matrices(g1.a().clone(), b, c, d).unwrap()
        };
        // linear in (C, D) for fixed B, and in (B, D) for fixed C
        let gc = mk(g1.b().clone(), c2.clone(), d2.clone());
        let mix = mk(g1.b().clone(), g1.c() * alpha + &c2 * beta, g1.d() * alpha + &d2 * beta);
        let want = g1.evaluate(w).unwrap() * C64::new(alpha, 0.0) + gc.evaluate(w).unwrap() * C64::new(beta, 0.0);
        prop_assert!((mix.evaluate(w).unwrap() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9);
        let gb = mk(b2.clone(), g1.c().clone(), d2.clone());
        let mix = mk(g1.b() * alpha + &b2 * beta, g1.c().clone(), g1.d() * alpha + &d2 * beta);
        let want = g1.evaluate(w).unwrap() * C64::new(alpha, 0.0) + gb.evaluate(w).unwrap() * C64::new(beta, 0.0);
        prop_assert!((mix.evaluate(w).unwrap() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9);
    }

    #[test]
    fn series_is_a_homomorphism(seed in any::<u64>(), n1 in 1usize..6, n2 in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = random_stable(&mut rng, n1, 2, 2);
        let g2 = random_stable(&mut rng, n2, 2, 1);
        let s = series(&g2, &g1).unwrap();
        for w in log_grid(0.01, 100.0, 50) {
            let want = g2.evaluate(w).unwrap() * g1.evaluate(w).unwrap();
            prop_assert!(rel_err(&s.evaluate(w).unwrap(), &want) < 1e-10);
        }
    }

    #[test]
    fn inverse_cancels_original(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = random_stable(&mut rng, n, 1, 1);
        let d = DMatrix::from_element(1, 1, rng.random_range(0.5..2.0));
        g = StateSpaceModel::from_matrices(g.a().clone(), g.b().clone(), g.c().clone(), d).unwrap();
        if let Ok(inv) = invert(&g) {
            let id = series(&inv.model, &g).unwrap();
            for w in log_grid(0.01, 100.0, 50) {
                prop_assert!((id.evaluate(w).unwrap()[(0, 0)] - 1.0).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn reduction_respects_hsv_bound(seed in any::<u64>(), n in 3usize..12, frac in 0.2f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_stable(&mut rng, n, 1, 2);
        let target = ((n as f64 * frac) as usize).clamp(1, n - 1);
        let red = reduce_order(&g, target).unwrap();
        let err = max_response_error(&red.model, &g, &log_grid(0.01, 100.0, 50)).unwrap();
        prop_assert!(err <= red.error_bound * (1.0 + 1e-8) + 1e-12);
    }

    #[test]
    fn zoh_matches_fine_integration(seed in any::<u64>(), n in 1usize..5, dt in 0.02f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_stable(&mut rng, n, 1, 1);
        let dm = discretize(&g, dt).unwrap();
        let u: Vec<DVector<f64>> = (0..30).map(|_| DVector::from_element(1, rng.random_range(-1.0..1.0))).collect();
        let y = dm.simulate(&u);
        let mut x = DVector::zeros(n);
        for (k, yk) in y.iter().enumerate() {
            let want = g.c() * &x + g.d() * &u[k];
            prop_assert!((yk[0] - want[0]).abs() < 1e-6);
            for _ in 0..100 {
                x = rk4_step(g.a(), g.b(), &x, &u[k], dt / 100.0);
            }
        }
    }
}
