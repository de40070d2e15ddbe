//! Irregular long-crested linear waves in deep water and up-wave elevation
//! prediction.

mod predict;
mod predictor;

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{cumulative_trapezoid, interp, linspace, trapezoid};
use crate::scalar::Real;

pub use predict::{
    check_causal_band, group_delay, max_group_delay, min_measurement_distance, predict_elevation,
    prediction_filter, prediction_response, transient_skip, PredictionConfig, PredictionFilter,
};
pub use predictor::CausalPredictor;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("prediction is non-causal at {} frequencies (first {:.4} rad/s, causal cutoff {cutoff:.4} rad/s)", offending.len(), offending.first().copied().unwrap_or(f64::NAN))]
    Causality { offending: Vec<f64>, cutoff: f64 },
    #[error("series parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// JONSWAP sea state and component discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSpectrumParams<T: Real> {
    pub hs: T,
    pub tp: T,
    pub gamma: T,
    pub n_components: usize,
    pub band: (T, T),
    pub seed: u64,
}

impl<T: Real> WaveSpectrumParams<T> {
    /// Sea state with the default band `[2π/20, 2π/3]`, γ = 3.3 and 200 components.
    pub fn new(hs: T, tp: T, seed: u64) -> Self {
        let two_pi = T::two_pi();
        Self {
            hs,
            tp,
            gamma: T::lit(3.3),
            n_components: 200,
            band: (two_pi / T::lit(20.0), two_pi / T::lit(3.0)),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), WaveError> {
        let bad = |m: &str| Err(WaveError::InvalidParams(m.to_string()));
        if !(self.hs > T::zero()) {
            return bad("hs must be positive");
        }
        if !(self.tp > T::zero()) {
            return bad("tp must be positive");
        }
        if !(self.gamma >= T::one()) {
            return bad("gamma must be at least 1");
        }
        if self.n_components == 0 {
            return bad("at least one component is required");
        }
        let (lo, hi) = self.band;
        if !(lo > T::zero() && hi > lo) {
            return bad("band must satisfy 0 < lo < hi");
        }
        Ok(())
    }
}

/// JONSWAP density normalized so that its full integral is `Hs²/16`.
#[derive(Clone, Copy, Debug)]
pub struct Jonswap<T: Real> {
    wp: T,
    gamma: T,
    scale: T,
}

impl<T: Real> Jonswap<T> {
    pub fn new(hs: T, tp: T, gamma: T) -> Self {
        let wp = T::two_pi() / tp;
        let unit = Jonswap { wp, gamma, scale: T::one() };
        let grid = linspace(wp * T::lit(0.1), wp * T::lit(40.0), 40_001);
        let vals: Vec<T> = grid.iter().map(|&w| unit.density(w)).collect();
        let m0 = trapezoid(&grid, &vals);
        Jonswap { wp, gamma, scale: hs * hs / (T::lit(16.0) * m0) }
    }

    pub fn peak_frequency(&self) -> T {
        self.wp
    }

    pub fn density(&self, w: T) -> T {
        if w <= T::zero() {
            return T::zero();
        }
        let sigma = if w <= self.wp { T::lit(0.07) } else { T::lit(0.09) };
        let r = (w / self.wp).powi(4);
        let pm = w.powi(-5) * (-T::lit(1.25) / r).exp();
        let dev = (w - self.wp) / (sigma * self.wp);
        let peak = self.gamma.powf((-dev * dev * T::lit(0.5)).exp());
        self.scale * pm * peak
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent<T: Real> {
    pub amplitude: T,
    pub omega: T,
    pub phase: T,
    pub wavenumber: T,
}

/// Sum of regular components travelling in +x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveRealization<T: Real> {
    pub components: Vec<WaveComponent<T>>,
    pub gravity: T,
}

impl<T: Real> WaveRealization<T> {
    /// Single regular wave.
    pub fn monochromatic(amplitude: T, omega: T, phase: T, gravity: T) -> Self {
        WaveRealization {
            components: vec![WaveComponent { amplitude, omega, phase, wavenumber: omega * omega / gravity }],
            gravity,
        }
    }

    pub fn elevation_at(&self, x: T, t: T) -> T {
        self.components
            .iter()
            .map(|c| c.amplitude * (c.omega * t - c.wavenumber * x + c.phase).cos())
            .fold(T::zero(), |a, b| a + b)
    }

    /// Elevation sampled at `t0 + k·dt`, `k < n`.
    pub fn series(&self, x: T, t0: T, dt: T, n: usize) -> Vec<T> {
        (0..n).map(|k| self.elevation_at(x, t0 + dt * T::lit(k as f64))).collect()
    }

    /// Ensemble variance `Σ a²/2`.
    pub fn variance(&self) -> T {
        self.components
            .iter()
            .map(|c| c.amplitude * c.amplitude * T::lit(0.5))
            .fold(T::zero(), |a, b| a + b)
    }

    /// Sum of two realizations.
    pub fn superpose(&self, other: &Self) -> Self {
        let mut components = self.components.clone();
        components.extend_from_slice(&other.components);
        WaveRealization { components, gravity: self.gravity }
    }
}

/// Draws a JONSWAP realization on an equal-energy frequency grid.
///
/// Each bin holds the same spectral energy; the component sits at the energy
/// midpoint of its bin with `a = sqrt(2·S(ω)·Δω)` and a uniform random phase.
pub fn synthesize_realization<T: Real>(params: &WaveSpectrumParams<T>, gravity: T) -> Result<WaveRealization<T>, WaveError> {
    params.validate()?;
    if !(gravity > T::zero()) {
        return Err(WaveError::InvalidParams("gravity must be positive".into()));
    }
    let spec = Jonswap::new(params.hs, params.tp, params.gamma);
    let (lo, hi) = params.band;
    let n = params.n_components;
    let grid = linspace(lo, hi, (n * 50).max(4001));
    let dens: Vec<T> = grid.iter().map(|&w| spec.density(w)).collect();
    let cum = cumulative_trapezoid(&grid, &dens);
    let total = cum[cum.len() - 1];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let two_pi = T::two_pi();
    let at_energy = |e: T| if total > T::zero() { interp(&cum, &grid, e) } else { lo + (hi - lo) * e };
    let energy = |j: f64| if total > T::zero() { total * T::lit(j / n as f64) } else { T::lit(j / n as f64) };
    let mut components = Vec::with_capacity(n);
    for j in 0..n {
        let w0 = if j == 0 { lo } else { at_energy(energy(j as f64)) };
        let w1 = if j + 1 == n { hi } else { at_energy(energy((j + 1) as f64)) };
        let w = at_energy(energy(j as f64 + 0.5));
        let dw = w1 - w0;
        let amplitude = (T::lit(2.0) * spec.density(w) * dw).sqrt();
        let phase = T::lit(rng.random_range(0.0..1.0)) * two_pi;
        components.push(WaveComponent { amplitude, omega: w, phase, wavenumber: w * w / gravity });
    }
    Ok(WaveRealization { components, gravity })
}

/// Writes a `time_s,elevation_m` series.
pub fn write_series_csv<W: Write, T: Real>(out: W, t0: T, dt: T, values: &[T]) -> Result<(), WaveError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| WaveError::Io(std::io::Error::other(e));
    w.write_record(["time_s", "elevation_m"]).map_err(io)?;
    for (k, v) in values.iter().enumerate() {
        let t = t0 + dt * T::lit(k as f64);
        w.write_record([t.as_f64().to_string(), v.as_f64().to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `time_s,elevation_m` series and returns `(dt, values)`.
///
/// Sampling must be uniform to within 1e-6 relative.
pub fn read_series_csv<R: Read>(input: R) -> Result<(f64, Vec<f64>), WaveError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| WaveError::Parse { line, msg: e.to_string() })?;
        if rec.len() != 2 {
            return Err(WaveError::Parse { line, msg: format!("expected 2 columns, found {}", rec.len()) });
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| WaveError::Parse { line, msg: format!("{s:?}: {e}") });
        times.push(num(&rec[0])?);
        values.push(num(&rec[1])?);
    }
    if times.len() < 2 {
        return Err(WaveError::Parse { line: 1, msg: "need at least two samples".into() });
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(WaveError::Parse { line: 3, msg: "time must increase".into() });
    }
    for (k, t) in times.iter().enumerate() {
        let want = times[0] + dt * k as f64;
        if (t - want).abs() > 1e-6 * dt.max(want.abs()) {
            return Err(WaveError::Parse { line: k + 2, msg: "non-uniform sampling".into() });
        }
    }
    Ok((dt, values))
}

#[cfg(test)]
mod tests;
