use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::WaveError;
use crate::lti::FrequencyResponseSet;
use crate::quad::linspace;
use crate::scalar::{cis, Real};

/// Up-wave measurement geometry: point A sits `distance` metres up-wave of the
/// platform and the prediction horizon is `delay` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig<T: Real> {
    pub distance: T,
    pub delay: T,
    pub gravity: T,
}

impl<T: Real> PredictionConfig<T> {
    pub fn new(distance: T, delay: T) -> Self {
        PredictionConfig { distance, delay, gravity: T::lit(super::GRAVITY) }
    }

    pub fn validate(&self) -> Result<(), WaveError> {
        if !(self.distance > T::zero() && self.delay > T::zero() && self.gravity > T::zero()) {
            return Err(WaveError::InvalidParams("distance, delay and gravity must be positive".into()));
        }
        Ok(())
    }

    /// Lowest frequency at which propagation from A outlasts the horizon.
    pub fn causal_cutoff(&self) -> T {
        self.gravity * self.delay / self.distance
    }
}

/// `exp(iω(t_p − ωL/g))`: spatial shift from A to the platform followed by
/// a time advance of `t_p`.
pub fn prediction_response<T: Real>(cfg: &PredictionConfig<T>, omega: T) -> Complex<T> {
    cis(omega * (cfg.delay - omega * cfg.distance / cfg.gravity))
}

/// Group delay `2ωL/g − t_p` of the prediction filter.
pub fn group_delay<T: Real>(cfg: &PredictionConfig<T>, omega: T) -> T {
    T::lit(2.0) * omega * cfg.distance / cfg.gravity - cfg.delay
}

pub fn max_group_delay<T: Real>(cfg: &PredictionConfig<T>, band: (T, T)) -> T {
    group_delay(cfg, band.1).max(group_delay(cfg, band.0))
}

/// Start-up interval after which the prediction is fully informed: the
/// largest in-band group delay plus four periods of the slowest wave.
pub fn transient_skip<T: Real>(cfg: &PredictionConfig<T>, band: (T, T)) -> T {
    max_group_delay(cfg, band).max(T::zero()) + T::lit(4.0) * T::two_pi() / band.0
}

/// Minimum up-wave distance for which every period up to `t_bar` is causal.
pub fn min_measurement_distance<T: Real>(t_bar: T, t_p: T, g: T) -> T {
    g * t_bar * t_p / T::two_pi()
}

fn is_noncausal<T: Real>(cfg: &PredictionConfig<T>, omega: T) -> bool {
    let arg = cfg.delay - omega * cfg.distance / cfg.gravity;
    arg > cfg.delay * T::default_epsilon() * T::lit(16.0)
}

/// Prediction filter sampled on a grid, with the grid points below the causal
/// cutoff listed separately.
#[derive(Clone, Debug)]
pub struct PredictionFilter<T: Real> {
    pub response: FrequencyResponseSet<T>,
    pub noncausal: Vec<T>,
    pub cutoff: T,
}

pub fn prediction_filter<T: Real>(cfg: &PredictionConfig<T>, grid: &[T]) -> Result<PredictionFilter<T>, WaveError> {
    cfg.validate()?;
    let samples = grid.iter().map(|&w| DMatrix::from_element(1, 1, prediction_response(cfg, w))).collect();
    let response = FrequencyResponseSet::new(grid.to_vec(), samples, vec!["eta_a".into()], vec!["eta_0".into()])
        .map_err(|e| WaveError::InvalidParams(e.to_string()))?;
    let noncausal = grid.iter().copied().filter(|&w| is_noncausal(cfg, w)).collect();
    Ok(PredictionFilter { response, noncausal, cutoff: cfg.causal_cutoff() })
}

/// Fails when any of `grid` lies below the causal cutoff.
pub fn check_causal_band<T: Real>(cfg: &PredictionConfig<T>, grid: &[T]) -> Result<(), WaveError> {
    cfg.validate()?;
    let offending: Vec<f64> = grid.iter().filter(|&&w| is_noncausal(cfg, w)).map(|w| w.as_f64()).collect();
    if offending.is_empty() {
        Ok(())
    } else {
        Err(WaveError::Causality { offending, cutoff: cfg.causal_cutoff().as_f64() })
    }
}

/// Raised-cosine passband: unity on `band`, rolling off over `lo_w` below and
/// `hi_w` above.
pub(crate) fn band_taper<T: Real>(w: T, band: (T, T), lo_w: T, hi_w: T) -> T {
    let (lo, hi) = band;
    let half = T::lit(0.5);
    if w >= lo && w <= hi {
        T::one()
    } else if w < lo && w > lo - lo_w {
        half - half * (T::pi() * (w - (lo - lo_w)) / lo_w).cos()
    } else if w > hi && w < hi + hi_w {
        half + half * (T::pi() * (w - hi) / hi_w).cos()
    } else {
        T::zero()
    }
}

/// Offline prediction of the platform elevation `t_p` seconds ahead from a
/// uniformly sampled series at point A.
///
/// Hann-windowed blocks at 50% overlap are filtered with the band-limited
/// prediction response in the frequency domain and overlap-added. Output
/// sample `k` estimates `η_0(t_k + t_p)`; the first
/// [`transient_skip`] seconds lack up-wave history and are unreliable.
pub fn predict_elevation<T: Real>(
    series: &[T],
    dt: T,
    cfg: &PredictionConfig<T>,
    band: (T, T),
) -> Result<Vec<T>, WaveError> {
    cfg.validate()?;
    if !(dt > T::zero()) || !(band.0 > T::zero() && band.1 > band.0) {
        return Err(WaveError::InvalidParams("dt and band must be positive and ordered".into()));
    }
    check_causal_band(cfg, &linspace(band.0, band.1, 200))?;
    let n = series.len();
    let mut out = vec![T::zero(); n];
    if n == 0 {
        return Ok(out);
    }
    let block = ((T::lit(400.0) / dt).ceil().as_f64() as usize).next_power_of_two().max(64);
    let hop = block / 2;
    let nfft = 4 * block;
    let neg_reserve = nfft / 4;

    let lo_w = (band.0 * T::lit(0.5)).min(T::lit(0.1));
    let hi_w = T::lit(0.5);
    let df = T::two_pi() / (T::lit(nfft as f64) * dt);
    let mut filt = vec![Complex::new(T::zero(), T::zero()); nfft];
    for k in 0..=nfft / 2 {
        let w = df * T::lit(k as f64);
        let h = prediction_response(cfg, w) * band_taper(w, band, lo_w, hi_w);
        filt[k] = h;
        if k > 0 && k < nfft / 2 {
            filt[nfft - k] = h.conj();
        }
    }
    // Nyquist bin must stay real for a real output.
    filt[nfft / 2] = Complex::new(filt[nfft / 2].re, T::zero());

    let mut planner = FftPlanner::<T>::new();
    let fwd: Arc<dyn Fft<T>> = planner.plan_fft_forward(nfft);
    let inv: Arc<dyn Fft<T>> = planner.plan_fft_inverse(nfft);
    let window: Vec<T> = (0..block)
        .map(|i| T::lit(0.5) - T::lit(0.5) * (T::two_pi() * T::lit(i as f64 / block as f64)).cos())
        .collect();
    let scale = T::one() / T::lit(nfft as f64);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); nfft];

    let mut start: isize = -(hop as isize);
    while start < n as isize {
        let mut any = false;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(T::zero(), T::zero());
            if i < block {
                let idx = start + i as isize;
                if idx >= 0 && (idx as usize) < n {
                    let v = series[idx as usize] * window[i];
                    any |= v != T::zero();
                    *slot = Complex::new(v, T::zero());
                }
            }
        }
        if any {
            fwd.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(&filt) {
                *b *= *h;
            }
            inv.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                let lag = if j < nfft - neg_reserve { j as isize } else { j as isize - nfft as isize };
                let idx = start + lag;
                if idx >= 0 && (idx as usize) < n {
                    out[idx as usize] += b.re * scale;
                }
            }
        }
        start += hop as isize;
    }
    Ok(out)
}
