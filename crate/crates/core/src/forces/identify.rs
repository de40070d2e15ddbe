//! Frequency-domain identification of the parametric wave excitation model.
//!
//! The causalized coefficients are mapped onto the unit circle through a
//! bilinear frequency warp, inverted to Markov parameters and realized with
//! the eigensystem realization algorithm. The inverse bilinear map then
//! returns a continuous model whose response matches the discrete one at the
//! warped frequencies exactly. Pole relocation on the band then polishes the
//! realization when it improves the fit.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{causalize, resample, ForceCoefficientSet, ForceError, ELEVATION, PITCH_MOMENT, SURGE_FORCE};
use crate::lti::StateSpaceModel;
use crate::scalar::{cplx, Real};

/// Half-length of the Hermitian spectrum on the unit circle (IDFT length 2N).
const CIRCLE_POINTS: usize = 1024;
/// Block rows/columns of the Hankel matrix.
const HANKEL_BLOCKS: usize = 200;
/// Fraction of π at which the top of the coefficient table lands after warping.
const WARP_TOP: f64 = 0.9;
/// Real part given to eigenvalues that are unstable or on the axis.
const STABILITY_MARGIN: f64 = 1e-6;

/// Fit of a parametric model to the causalized coefficients on a band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T: Real> {
    /// Normalized fit per output, percent.
    pub fit_percent: Vec<T>,
    /// Final prediction error per output (squared units of the output).
    pub fpe: Vec<T>,
    pub parameters: usize,
    pub samples: usize,
    pub band: (T, T),
}

/// Elevation → [surge force, pitch moment] model valid for an elevation
/// signal advanced by `t_p` seconds.
#[derive(Clone, Debug)]
pub struct PwemModel<T: Real> {
    pub model: StateSpaceModel<T>,
    pub t_p: T,
    pub fit: FitReport<T>,
}

/// `100·(1 − ‖model − data‖ / ‖data − mean(data)‖)`.
pub fn fit_percent<T: Real>(model: &[Complex<T>], data: &[Complex<T>]) -> T {
    let n = T::lit(data.len().max(1) as f64);
    let mean = data.iter().fold(cplx(T::zero()), |a, &b| a + b) / n;
    let err = model.iter().zip(data).fold(T::zero(), |a, (&m, &d)| a + (m - d).norm_sqr());
    let spread = data.iter().fold(T::zero(), |a, &d| a + (d - mean).norm_sqr());
    if spread == T::zero() {
        return if err == T::zero() { T::lit(100.0) } else { T::lit(f64::NEG_INFINITY) };
    }
    T::lit(100.0) * (T::one() - (err / spread).sqrt())
}

/// Akaike's final prediction error `V·(1 + d/N)/(1 − d/N)`.
pub fn final_prediction_error<T: Real>(v: T, parameters: usize, samples: usize) -> T {
    if parameters >= samples {
        return T::lit(f64::INFINITY);
    }
    let r = T::lit(parameters as f64 / samples as f64);
    v * (T::one() + r) / (T::one() - r)
}

fn parameter_count(order: usize) -> usize {
    // identifiable parameters of a 1-input 2-output realization
    order * 3 + 2
}

fn compute_fit<T: Real>(
    model: &StateSpaceModel<T>,
    t_p: T,
    coeffs: &ForceCoefficientSet<T>,
    band: (T, T),
) -> Result<FitReport<T>, ForceError> {
    let causal = causalize(coeffs, t_p);
    let idx = causal.response().band_indices(band.0, band.1);
    if idx.is_empty() {
        return Err(ForceError::InvalidRequest("band contains no coefficient samples".into()));
    }
    let mut fit_percent = Vec::with_capacity(2);
    let mut fpe = Vec::with_capacity(2);
    let d = parameter_count(model.order());
    let responses: Vec<DMatrix<Complex<T>>> = idx
        .iter()
        .map(|&i| model.evaluate(causal.frequencies()[i]))
        .collect::<Result<_, _>>()?;
    for o in 0..2 {
        let data: Vec<Complex<T>> = idx.iter().map(|&i| causal.response().samples()[i][(o, 0)]).collect();
        let fitted: Vec<Complex<T>> = responses.iter().map(|r| r[(o, 0)]).collect();
        fit_percent.push(self::fit_percent(&fitted, &data));
        let v = fitted.iter().zip(&data).fold(T::zero(), |a, (&m, &x)| a + (m - x).norm_sqr())
            / T::lit(data.len() as f64);
        fpe.push(final_prediction_error(v, d, data.len()));
    }
    Ok(FitReport { fit_percent, fpe, parameters: d, samples: idx.len(), band })
}

/// Recomputes the fit report of `pwem` against `coeffs` on `band`.
pub fn fit_metrics<T: Real>(
    pwem: &PwemModel<T>,
    coeffs: &ForceCoefficientSet<T>,
    band: (T, T),
) -> Result<FitReport<T>, ForceError> {
    compute_fit(&pwem.model, pwem.t_p, coeffs, band)
}

/// Identifies an `order`-state model of the coefficients delayed by `t_p`.
pub fn identify_pwem<T: Real>(
    coeffs: &ForceCoefficientSet<T>,
    t_p: T,
    order: usize,
    band: (T, T),
) -> Result<PwemModel<T>, ForceError> {
    if order == 0 {
        return Err(ForceError::InvalidRequest("model order must be at least 1".into()));
    }
    if order >= HANKEL_BLOCKS {
        return Err(ForceError::InvalidRequest(format!("model order must be below {HANKEL_BLOCKS}")));
    }
    if !(t_p >= T::zero()) || !t_p.is_finite() {
        return Err(ForceError::InvalidRequest("delay must be finite and non-negative".into()));
    }
    let freq = coeffs.frequencies();
    if !(band.0 < band.1 && band.0 >= freq[0] && band.1 <= coeffs.max_frequency()) {
        return Err(ForceError::InvalidRequest(format!(
            "band [{}, {}] must lie within the coefficient grid [{}, {}]",
            band.0.as_f64(),
            band.1.as_f64(),
            freq[0].as_f64(),
            coeffs.max_frequency().as_f64()
        )));
    }
    let causal = causalize(coeffs, t_p);
    let warp = coeffs.max_frequency() / (T::lit(WARP_TOP) * T::frac_pi_2()).tan();
    let markov = markov_parameters(&causal, warp);
    let (ad, bd, cd, dd) = era(&markov, order)?;
    let (a, b, c, d) = inverse_bilinear(&ad, &bd, &cd, &dd, warp)?;
    let (a, _) = stabilize(a);
    let (b, d) = refit_input_map(&a, &c, &causal, band).unwrap_or((b, d));
    let build = |(a, b, c, d): Realization<T>| {
        StateSpaceModel::new(a, b, c, d, vec![ELEVATION.into()], vec![SURGE_FORCE.into(), PITCH_MOMENT.into()])
    };
    let relocated = relocate_poles(&a, &causal, band);
    let mut model = build((a, b, c, d))?;
    let mut fit = compute_fit(&model, t_p, coeffs, band)?;
    // the ERA poles carry the error of the tapered tail; keep the relocated
    // model only where it fits the band better
    if let Some(r) = relocated {
        let candidate = build(r)?;
        let candidate_fit = compute_fit(&candidate, t_p, coeffs, band)?;
        if misfit(&candidate_fit) < misfit(&fit) {
            model = candidate;
            fit = candidate_fit;
        }
    }
    Ok(PwemModel { model, t_p, fit })
}

fn misfit<T: Real>(fit: &FitReport<T>) -> T {
    fit.fit_percent.iter().fold(T::zero(), |s, &f| {
        let e = T::lit(100.0) - f;
        s + e * e
    })
}

/// Iterations of pole relocation.
const RELOCATION_STEPS: usize = 8;

/// Real block-diagonal realization `(A, b)` of a set of poles, one entry per
/// real pole or conjugate pair (positive imaginary part).
fn pole_blocks<T: Real>(poles: &[Complex<T>]) -> (DMatrix<T>, DVector<T>) {
    let n = poles.iter().map(|p| if p.im > T::zero() { 2 } else { 1 }).sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let mut i = 0;
    for p in poles {
        a[(i, i)] = p.re;
        b[i] = T::one();
        if p.im > T::zero() {
            a[(i + 1, i + 1)] = p.re;
            a[(i, i + 1)] = p.im;
            a[(i + 1, i)] = -p.im;
            i += 2;
        } else {
            i += 1;
        }
    }
    (a, b)
}

/// Stable poles of `a` with conjugate pairs collapsed to one representative.
fn pole_set<T: Real>(a: &DMatrix<T>) -> Option<Vec<Complex<T>>> {
    let n = a.nrows();
    let scale = a.amax().max(T::one());
    let tol = scale * T::default_epsilon() * T::lit(1e4);
    let mut out = Vec::new();
    let mut count = 0;
    for p in a.clone().complex_eigenvalues().iter() {
        if !p.re.is_finite() || !p.im.is_finite() {
            return None;
        }
        let re = -p.re.magnitude().max(T::lit(STABILITY_MARGIN));
        if p.im > tol {
            out.push(Complex::new(re, p.im));
            count += 2;
        } else if p.im.magnitude() <= tol {
            out.push(Complex::new(re, T::zero()));
            count += 1;
        }
    }
    (count == n).then_some(out)
}

/// Sanathanan-Koerner pole relocation (vector fitting) on the band, started
/// from the poles of `a`, followed by a least-squares fit of `C` and `D`.
fn relocate_poles<T: Real>(a: &DMatrix<T>, causal: &ForceCoefficientSet<T>, band: (T, T)) -> Option<Realization<T>> {
    let idx = causal.response().band_indices(band.0, band.1);
    let n = a.nrows();
    if idx.len() * 4 < 3 * n + 2 {
        return None;
    }
    let weights: Vec<T> = (0..2)
        .map(|o| {
            let ms = idx
                .iter()
                .fold(T::zero(), |s, &i| s + causal.response().samples()[i][(o, 0)].norm_sqr())
                / T::lit(idx.len() as f64);
            if ms > T::zero() {
                T::one() / ms.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let basis = |a: &DMatrix<T>, b: &DVector<T>| -> Option<Vec<DVector<Complex<T>>>> {
        let ac = a.map(cplx);
        let bc = b.map(cplx);
        idx.iter()
            .map(|&i| {
                let s = Complex::new(T::zero(), causal.frequencies()[i]);
                let m = DMatrix::<Complex<T>>::identity(n, n) * s - &ac;
                m.lu().solve(&bc)
            })
            .collect()
    };
    let mut poles = pole_set(a)?;
    for _ in 0..RELOCATION_STEPS {
        let (ap, bp) = pole_blocks(&poles);
        let phi = basis(&ap, &bp)?;
        // unknowns: [c_0, d_0, c_1, d_1, sigma]
        let unknowns = 3 * n + 2;
        let mut lhs = DMatrix::zeros(idx.len() * 4, unknowns);
        let mut rhs = DVector::zeros(idx.len() * 4);
        let mut row = 0;
        for (k, &i) in idx.iter().enumerate() {
            for o in 0..2 {
                let w = weights[o];
                let g = causal.response().samples()[i][(o, 0)];
                let off = o * (n + 1);
                for j in 0..n {
                    let v = phi[k][j] * w;
                    let u = -(phi[k][j] * g) * w;
                    lhs[(row, off + j)] = v.re;
                    lhs[(row + 1, off + j)] = v.im;
                    lhs[(row, 2 * n + 2 + j)] = u.re;
                    lhs[(row + 1, 2 * n + 2 + j)] = u.im;
                }
                lhs[(row, off + n)] = w;
                rhs[row] = g.re * w;
                rhs[row + 1] = g.im * w;
                row += 2;
            }
        }
        let sol = solve_scaled(lhs, rhs)?;
        let sigma = DVector::from_fn(n, |j, _| sol[2 * n + 2 + j]);
        poles = pole_set(&(&ap - &bp * sigma.transpose()))?;
    }
    let (ap, bp) = pole_blocks(&poles);
    let phi = basis(&ap, &bp)?;
    let mut c = DMatrix::zeros(2, n);
    let mut d = DMatrix::zeros(2, 1);
    for o in 0..2 {
        let mut lhs = DMatrix::zeros(idx.len() * 2, n + 1);
        let mut rhs = DVector::zeros(idx.len() * 2);
        for (k, &i) in idx.iter().enumerate() {
            let g = causal.response().samples()[i][(o, 0)];
            for j in 0..n {
                lhs[(2 * k, j)] = phi[k][j].re;
                lhs[(2 * k + 1, j)] = phi[k][j].im;
            }
            lhs[(2 * k, n)] = T::one();
            rhs[2 * k] = g.re;
            rhs[2 * k + 1] = g.im;
        }
        let sol = solve_scaled(lhs, rhs)?;
        for j in 0..n {
            c[(o, j)] = sol[j];
        }
        d[(o, 0)] = sol[n];
    }
    Some((ap, DMatrix::from_column_slice(n, 1, bp.as_slice()), c, d))
}

/// Least squares with unit-norm columns.
fn solve_scaled<T: Real>(mut lhs: DMatrix<T>, rhs: DVector<T>) -> Option<DVector<T>> {
    let norms: Vec<T> = lhs.column_iter().map(|c| c.norm()).collect();
    for (j, &s) in norms.iter().enumerate() {
        if s > T::zero() {
            lhs.column_mut(j).scale_mut(T::one() / s);
        }
    }
    let mut sol = lhs.svd(true, true).solve(&rhs, T::default_epsilon() * T::lit(1e3)).ok()?;
    for (j, &s) in norms.iter().enumerate() {
        if s > T::zero() {
            sol[j] /= s;
        }
    }
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Markov parameters `h[k]` (2 outputs) of the discrete system whose response
/// at `θ` equals the data at `ω = warp·tan(θ/2)`.
fn markov_parameters<T: Real>(causal: &ForceCoefficientSet<T>, warp: T) -> [Vec<T>; 2] {
    let n = CIRCLE_POINTS;
    let m = 2 * n;
    let theta_top = T::lit(WARP_TOP) * T::pi();
    let mut planner = FftPlanner::<T>::new();
    let ifft: Arc<dyn Fft<T>> = planner.plan_fft_inverse(m);
    let freq = causal.frequencies();
    let top = freq.len() - 1;
    let mut out: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    for (o, slot) in out.iter_mut().enumerate() {
        let chan = causal.response().channel(o, 0);
        let mut buf = vec![cplx(T::zero()); m];
        for (k, x) in buf.iter_mut().enumerate().take(n + 1) {
            let theta = T::pi() * T::lit(k as f64 / n as f64);
            *x = if theta <= theta_top {
                let w = warp * (theta * T::lit(0.5)).tan();
                resample(freq, &chan, w.min(freq[top]))
            } else {
                let f = (theta - theta_top) / (T::pi() - theta_top);
                chan[top] * (T::lit(0.5) + T::lit(0.5) * (T::pi() * f).cos())
            };
        }
        buf[0] = cplx(buf[0].re);
        buf[n] = cplx(buf[n].re);
        for k in 1..n {
            buf[m - k] = buf[k].conj();
        }
        ifft.process(&mut buf);
        let scale = T::one() / T::lit(m as f64);
        *slot = buf.iter().map(|z| z.re * scale).collect();
    }
    out
}

type Realization<T> = (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>);

/// Ho-Kalman realization from single-input, two-output Markov parameters.
fn era<T: Real>(h: &[Vec<T>; 2], order: usize) -> Result<Realization<T>, ForceError> {
    let r = HANKEL_BLOCKS;
    let q = HANKEL_BLOCKS;
    let hank = |shift: usize| DMatrix::from_fn(2 * r, q, |i, j| h[i % 2][i / 2 + j + 1 + shift]);
    let h0 = hank(0);
    let h1 = hank(1);
    let svd = h0.svd(true, true);
    let s = &svd.singular_values;
    let s1 = s[0];
    let tol = s1 * T::default_epsilon() * T::lit(1e4);
    let rank = s.iter().filter(|&&v| v > tol).count();
    if rank < order {
        return Err(ForceError::RankDeficient { order, rank });
    }
    let u = svd.u.as_ref().expect("left vectors requested").columns(0, order).into_owned();
    let vt = svd.v_t.as_ref().expect("right vectors requested").rows(0, order).into_owned();
    let sqrt_s = DVector::from_fn(order, |i, _| s[i].sqrt());
    let inv_sqrt = DMatrix::from_diagonal(&sqrt_s.map(|v| T::one() / v));
    let obs = &u * DMatrix::from_diagonal(&sqrt_s);
    let ctrl = DMatrix::from_diagonal(&sqrt_s) * &vt;
    let ad = &inv_sqrt * u.transpose() * h1 * vt.transpose() * &inv_sqrt;
    let bd = ctrl.columns(0, 1).into_owned();
    let cd = obs.rows(0, 2).into_owned();
    let dd = DMatrix::from_column_slice(2, 1, &[h[0][0], h[1][0]]);
    Ok((ad, bd, cd, dd))
}

/// Continuous model from a discrete one under `z = (c + s)/(c − s)`.
fn inverse_bilinear<T: Real>(
    ad: &DMatrix<T>,
    bd: &DMatrix<T>,
    cd: &DMatrix<T>,
    dd: &DMatrix<T>,
    c: T,
) -> Result<Realization<T>, ForceError> {
    let n = ad.nrows();
    let e = (DMatrix::identity(n, n) + ad)
        .try_inverse()
        .ok_or_else(|| ForceError::InvalidRequest("identified model has a pole at z = -1".into()))?;
    let k = (T::lit(2.0) * c).sqrt();
    let a = &e * (ad - DMatrix::identity(n, n)) * c;
    let b = &e * bd * k;
    let cc = cd * &e * k;
    let d = dd - cd * &e * bd;
    Ok((a, b, cc, d))
}

/// Reflects eigenvalues with real part above `−margin` into the left half-plane
/// by shifting the diagonal blocks of the real Schur form.
pub(crate) fn stabilize<T: Real>(a: DMatrix<T>) -> (DMatrix<T>, bool) {
    let n = a.nrows();
    if n == 0 {
        return (a, false);
    }
    let scale = a.amax().max(T::one());
    let (q, mut t) = Schur::new(a).unpack();
    let margin = T::lit(STABILITY_MARGIN);
    let mut changed = false;
    let mut i = 0;
    while i < n {
        let block = i + 1 < n && t[(i + 1, i)].magnitude() > T::default_epsilon() * scale;
        let size = if block { 2 } else { 1 };
        let re = if block { (t[(i, i)] + t[(i + 1, i + 1)]) * T::lit(0.5) } else { t[(i, i)] };
        if re > -margin {
            let shift = re + re.magnitude().max(margin);
            for j in i..i + size {
                t[(j, j)] -= shift;
            }
            changed = true;
        }
        i += size;
    }
    (&q * t * q.transpose(), changed)
}

/// Least-squares `B`, `D` for fixed `A`, `C`, each output weighted by the
/// inverse RMS of its data on the band.
fn refit_input_map<T: Real>(
    a: &DMatrix<T>,
    c: &DMatrix<T>,
    causal: &ForceCoefficientSet<T>,
    band: (T, T),
) -> Option<(DMatrix<T>, DMatrix<T>)> {
    let n = a.nrows();
    let idx = causal.response().band_indices(band.0, band.1);
    let unknowns = n + 2;
    let rows = idx.len() * 2 * 2;
    if rows < unknowns {
        return None;
    }
    let weights: Vec<T> = (0..2)
        .map(|o| {
            let ms = idx
                .iter()
                .fold(T::zero(), |s, &i| s + causal.response().samples()[i][(o, 0)].norm_sqr())
                / T::lit(idx.len() as f64);
            if ms > T::zero() {
                T::one() / ms.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let ac = a.map(cplx);
    let cc = c.map(cplx);
    let mut lhs = DMatrix::zeros(rows, unknowns);
    let mut rhs = DVector::zeros(rows);
    let mut row = 0;
    for &i in &idx {
        let w = causal.frequencies()[i];
        let mut res = DMatrix::<Complex<T>>::identity(n, n) * Complex::new(T::zero(), w) - &ac;
        if !res.try_inverse_mut() {
            return None;
        }
        let phi = &cc * res;
        for o in 0..2 {
            let g = causal.response().samples()[i][(o, 0)] * weights[o];
            for j in 0..n {
                let v = phi[(o, j)] * weights[o];
                lhs[(row, j)] = v.re;
                lhs[(row + 1, j)] = v.im;
            }
            lhs[(row, n + o)] = weights[o];
            rhs[row] = g.re;
            rhs[row + 1] = g.im;
            row += 2;
        }
    }
    let sol = lhs.svd(true, true).solve(&rhs, T::default_epsilon() * T::lit(1e3)).ok()?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let b = DMatrix::from_fn(n, 1, |j, _| sol[j]);
    let d = DMatrix::from_column_slice(2, 1, &[sol[n], sol[n + 1]]);
    Some((b, d))
}
