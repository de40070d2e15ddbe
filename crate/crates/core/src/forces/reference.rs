//! Synthetic spar-type excitation coefficients with a known rational ground
//! truth.
//!
//! Both channels share a 9th-order denominator. Numerators carry a double
//! zero at the origin (no static wave force) and the set is multiplied by a
//! 10 s anticausal lead, so that a 9-state model fits the data exactly once
//! the lead is removed.

use nalgebra::DMatrix;
use num_complex::Complex;

use super::{ForceCoefficientSet, ForceError, ELEVATION, PITCH_MOMENT, SURGE_FORCE};
use crate::lti::StateSpaceModel;
use crate::quad::linspace;
use crate::scalar::{cis, Real};

/// Anticausal lead built into the reference set, in seconds.
pub const REFERENCE_LEAD: f64 = 10.0;

const REAL_POLE: f64 = 0.9;
/// (natural frequency rad/s, damping ratio) of the four denominator modes.
const MODES: [(f64, f64); 4] = [(0.35, 0.5), (0.75, 0.35), (1.25, 0.3), (1.9, 0.45)];
/// Gains giving peaks of 5.0e6 N/m and 1.4e8 N·m/m.
const SURGE_GAIN: f64 = 1.853e6;
const PITCH_GAIN: f64 = 5.794e7;

/// Polynomial product; coefficients in ascending powers.
pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_eval(p: &[f64], s: Complex<f64>) -> Complex<f64> {
    p.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn product(factors: &[&[f64]]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| poly_mul(&acc, f))
}

fn quad(w: f64, zeta: f64) -> [f64; 3] {
    [w * w, 2.0 * zeta * w, 1.0]
}

/// Denominator and the two numerators (ascending powers).
pub fn reference_polynomials() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut den = vec![REAL_POLE, 1.0];
    for (w, z) in MODES {
        den = poly_mul(&den, &quad(w, z));
    }
    let surge = product(&[&[0.0, 0.0, 1.0], &quad(1.0, 0.4), &[1.6, 1.0], &[3.0, 1.0], &[SURGE_GAIN]]);
    let pitch = product(&[&[0.0, 0.0, 1.0], &[0.25, 1.0], &quad(1.45, 0.08), &[3.0, 1.0], &[PITCH_GAIN]]);
    (den, surge, pitch)
}

/// The causal 9-state force model (controllable canonical form).
pub fn reference_force_model<T: Real>() -> StateSpaceModel<T> {
    let (den, surge, pitch) = reference_polynomials();
    let n = den.len() - 1;
    let lead = den[n];
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = T::one();
    }
    for j in 0..n {
        a[(n - 1, j)] = T::lit(-den[j] / lead);
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = T::lit(1.0 / lead);
    let mut c = DMatrix::zeros(2, n);
    for (row, num) in [&surge, &pitch].into_iter().enumerate() {
        for (j, &v) in num.iter().enumerate() {
            c[(row, j)] = T::lit(v);
        }
    }
    StateSpaceModel::new(
        a,
        b,
        c,
        DMatrix::zeros(2, 1),
        vec![ELEVATION.into()],
        vec![SURGE_FORCE.into(), PITCH_MOMENT.into()],
    )
    .expect("reference model dimensions are consistent")
}

/// Exact rational responses (no lead) at `omega`.
pub fn reference_response(omega: f64) -> (Complex<f64>, Complex<f64>) {
    let (den, surge, pitch) = reference_polynomials();
    let s = Complex::new(0.0, omega);
    let d = poly_eval(&den, s);
    (poly_eval(&surge, s) / d, poly_eval(&pitch, s) / d)
}

/// Default tabulation grid: 400 points from 0.02 to 4 rad/s.
pub fn reference_grid<T: Real>() -> Vec<T> {
    linspace(T::lit(0.02), T::lit(4.0), 400)
}

/// Reference coefficients including the anticausal lead, on `grid`.
pub fn reference_coefficients<T: Real>(grid: &[T]) -> Result<ForceCoefficientSet<T>, ForceError> {
    let mut fx = Vec::with_capacity(grid.len());
    let mut my = Vec::with_capacity(grid.len());
    for &w in grid {
        let (f, m) = reference_response(w.as_f64());
        let lead = cis(w.as_f64() * REFERENCE_LEAD);
        let (f, m) = (f * lead, m * lead);
        fx.push(Complex::new(T::lit(f.re), T::lit(f.im)));
        my.push(Complex::new(T::lit(m.re), T::lit(m.im)));
    }
    ForceCoefficientSet::from_samples(grid.to_vec(), fx, my)
}

/// The coefficient table shipped with the crate.
pub const SHIPPED_CSV: &str = include_str!("../../fixtures/wave_force_coefficients.csv");

pub fn shipped_coefficients() -> ForceCoefficientSet<f64> {
    ForceCoefficientSet::from_csv(SHIPPED_CSV).expect("shipped coefficient table parses")
}
