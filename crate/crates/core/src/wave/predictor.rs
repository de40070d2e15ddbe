use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::predict::{check_causal_band, max_group_delay, prediction_response, PredictionConfig};
use super::WaveError;
use crate::quad::linspace;
use crate::scalar::{cis, Real};

/// Tap spacing of the streaming predictor, in seconds.
const TAP_SPACING: f64 = 0.25;
/// Minimum impulse-response span, in seconds.
const MIN_SPAN: f64 = 240.0;

/// Streaming causal approximation of the prediction filter.
///
/// A sparse FIR whose taps sit every `stride` samples, fitted in the
/// least-squares sense to the ideal response over the wave band. The normal
/// equations have a closed-form Toeplitz matrix; a small ridge keeps the
/// out-of-band gain bounded.
#[derive(Clone, Debug)]
pub struct CausalPredictor<T: Real> {
    taps: Vec<T>,
    stride: usize,
    dt: T,
    history: Vec<T>,
    head: usize,
}

impl<T: Real> CausalPredictor<T> {
    pub fn design(cfg: &PredictionConfig<T>, band: (T, T), dt: T) -> Result<Self, WaveError> {
        if !(dt > T::zero()) || !(band.0 > T::zero() && band.1 > band.0) {
            return Err(WaveError::InvalidParams("dt and band must be positive and ordered".into()));
        }
        check_causal_band(cfg, &linspace(band.0, band.1, 200))?;
        let dt64 = dt.as_f64();
        let stride = ((TAP_SPACING / dt64).round() as usize).max(1);
        let spacing = stride as f64 * dt64;
        let (lo, hi) = (band.0.as_f64(), band.1.as_f64());
        let settle = max_group_delay(cfg, band).as_f64().max(0.0) + 2.0 * std::f64::consts::TAU / lo;
        let span = MIN_SPAN.max(2.0 * settle);
        let ntaps = (span / spacing).round() as usize;

        let r = |tau: f64| if tau == 0.0 { hi - lo } else { ((hi * tau).sin() - (lo * tau).sin()) / tau };
        let ridge = 1e-8 * r(0.0);
        let gram = DMatrix::from_fn(ntaps, ntaps, |i, j| {
            let v = r((i as f64 - j as f64) * spacing);
            if i == j {
                v + ridge
            } else {
                v
            }
        });

        // Simpson quadrature of Re(H(ω) e^{iωτ}) over the band.
        let cfg64 = PredictionConfig {
            distance: cfg.distance.as_f64(),
            delay: cfg.delay.as_f64(),
            gravity: cfg.gravity.as_f64(),
        };
        let nq = 8001;
        let grid = linspace(lo, hi, nq);
        let hq = (hi - lo) / (nq - 1) as f64;
        let weights: Vec<f64> = (0..nq)
            .map(|i| {
                let w = if i == 0 || i == nq - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * hq / 3.0
            })
            .collect();
        let hd: Vec<Complex<f64>> = grid.iter().map(|&w| prediction_response(&cfg64, w)).collect();
        let rhs = DVector::from_fn(ntaps, |n, _| {
            let tau = n as f64 * spacing;
            grid.iter()
                .zip(&hd)
                .zip(&weights)
                .map(|((&w, h), q)| q * (h * cis(w * tau)).re)
                .sum::<f64>()
        });
        let chol = gram
            .cholesky()
            .ok_or_else(|| WaveError::InvalidParams("predictor normal equations are not positive definite".into()))?;
        let taps64 = chol.solve(&rhs);
        let taps = taps64.iter().map(|&v| T::lit(v)).collect();
        let hist_len = (ntaps - 1) * stride + 1;
        Ok(CausalPredictor { taps, stride, dt, history: vec![T::zero(); hist_len], head: 0 })
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Length of the impulse response in seconds.
    pub fn span(&self) -> T {
        self.dt * T::lit(((self.taps.len() - 1) * self.stride) as f64)
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|v| *v = T::zero());
        self.head = 0;
    }

    /// Feeds one sample of the up-wave elevation and returns the current
    /// estimate of the platform elevation `t_p` seconds ahead.
    pub fn push(&mut self, x: T) -> T {
        let len = self.history.len();
        self.head = (self.head + 1) % len;
        self.history[self.head] = x;
        let mut acc = T::zero();
        for (n, &h) in self.taps.iter().enumerate() {
            let idx = (self.head + len - n * self.stride) % len;
            acc += h * self.history[idx];
        }
        acc
    }

    pub fn filter(&mut self, series: &[T]) -> Vec<T> {
        series.iter().map(|&x| self.push(x)).collect()
    }

    /// Frequency response `Σ h_n e^{-iω n Δ}`.
    pub fn response(&self, omega: T) -> Complex<T> {
        let spacing = self.dt * T::lit(self.stride as f64);
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| cis(-omega * spacing * T::lit(n as f64)) * h)
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }
}
