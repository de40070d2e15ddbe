//! Wave-excitation force coefficients and their parametric (state-space)
//! approximation.

pub(crate) mod identify;
pub mod reference;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::lti::{FrequencyResponseSet, LtiError};
use crate::quad::linspace;
use crate::scalar::{cabs, cis, cplx, Real};

pub use identify::{fit_metrics, identify_pwem, FitReport, PwemModel};

pub const ELEVATION: &str = "elevation";
pub const SURGE_FORCE: &str = "surge_force";
pub const PITCH_MOMENT: &str = "pitch_moment";

/// Delay search grid step and cap, in seconds.
pub const DELAY_STEP: f64 = 0.5;
pub const DELAY_CAP: f64 = 60.0;

#[derive(Debug, Error)]
pub enum ForceError {
    #[error("coefficient file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid coefficient set: {0}")]
    Invalid(String),
    #[error("no delay up to {cap} s brings the pre-zero impulse energy below {tolerance} (best {best:.4} at {cap} s)")]
    NoCausalDelay { tolerance: f64, cap: f64, best: f64 },
    #[error("Hankel matrix has numerical rank {rank} < requested order {order}; try order {rank} or lower")]
    RankDeficient { order: usize, rank: usize },
    #[error("invalid identification request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Force and moment per metre of wave elevation at the platform.
#[derive(Clone, Debug)]
pub struct ForceCoefficientSet<T: Real> {
    set: FrequencyResponseSet<T>,
}

impl<T: Real> ForceCoefficientSet<T> {
    /// Wraps a 1-input, 2-output response set named
    /// `elevation → [surge_force, pitch_moment]`.
    pub fn new(set: FrequencyResponseSet<T>) -> Result<Self, ForceError> {
        if set.inputs().len() != 1 || set.outputs() != [SURGE_FORCE, PITCH_MOMENT] {
            return Err(ForceError::Invalid(format!(
                "expected outputs [{SURGE_FORCE}, {PITCH_MOMENT}] from one input, found {:?} from {:?}",
                set.outputs(),
                set.inputs()
            )));
        }
        Ok(ForceCoefficientSet { set })
    }

    pub fn from_samples(frequencies: Vec<T>, surge: Vec<Complex<T>>, pitch: Vec<Complex<T>>) -> Result<Self, ForceError> {
        if surge.len() != frequencies.len() || pitch.len() != frequencies.len() {
            return Err(ForceError::Invalid("sample count does not match the frequency grid".into()));
        }
        let samples = surge.iter().zip(&pitch).map(|(&f, &m)| DMatrix::from_column_slice(2, 1, &[f, m])).collect();
        let set = FrequencyResponseSet::new(
            frequencies,
            samples,
            vec![ELEVATION.into()],
            vec![SURGE_FORCE.into(), PITCH_MOMENT.into()],
        )?;
        Ok(ForceCoefficientSet { set })
    }

    pub fn response(&self) -> &FrequencyResponseSet<T> {
        &self.set
    }

    pub fn frequencies(&self) -> &[T] {
        self.set.frequencies()
    }

    pub fn surge(&self) -> Vec<Complex<T>> {
        self.set.channel(0, 0)
    }

    pub fn pitch(&self) -> Vec<Complex<T>> {
        self.set.channel(1, 0)
    }

    pub fn max_frequency(&self) -> T {
        let f = self.frequencies();
        f[f.len() - 1]
    }

    /// Outputs whose magnitude at the top of the grid is 10% of their peak or
    /// more, i.e. that have not decayed within the tabulated range.
    pub fn undecayed_outputs(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (o, name) in [SURGE_FORCE, PITCH_MOMENT].into_iter().enumerate() {
            let mags: Vec<T> = self.set.channel(o, 0).into_iter().map(cabs).collect();
            let peak = mags.iter().copied().fold(T::zero(), |a, b| a.max(b));
            if mags[mags.len() - 1] >= peak * T::lit(0.1) {
                out.push(name);
            }
        }
        out
    }

    /// Writes the `omega_rad_s,Fx_re,Fx_im,My_re,My_im` format.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,Fx_re,Fx_im,My_re,My_im\n");
        for (w, m) in self.frequencies().iter().zip(self.set.samples()) {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                w.as_f64(),
                m[(0, 0)].re.as_f64(),
                m[(0, 0)].im.as_f64(),
                m[(1, 0)].re.as_f64(),
                m[(1, 0)].im.as_f64()
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, ForceError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| ForceError::Parse { line: 1, msg: e.to_string() })?.clone();
        let want = ["omega_rad_s", "Fx_re", "Fx_im", "My_re", "My_im"];
        if header.len() != want.len() || header.iter().zip(want).any(|(h, w)| h != w) {
            return Err(ForceError::Parse { line: 1, msg: format!("header must be {}", want.join(",")) });
        }
        let (mut w, mut fx, mut my) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ForceError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 5 {
                return Err(ForceError::Parse { line, msg: format!("expected 5 columns, found {}", rec.len()) });
            }
            let mut v = [0.0f64; 5];
            for (slot, field) in v.iter_mut().zip(rec.iter()) {
                *slot = field
                    .parse()
                    .map_err(|e| ForceError::Parse { line, msg: format!("{field:?}: {e}") })?;
                if !slot.is_finite() {
                    return Err(ForceError::Parse { line, msg: format!("non-finite value {field:?}") });
                }
            }
            if let Some(&prev) = w.last() {
                if T::lit(v[0]) <= prev {
                    return Err(ForceError::Parse { line, msg: "frequencies must be strictly increasing".into() });
                }
            }
            if v[0] <= 0.0 {
                return Err(ForceError::Parse { line, msg: "frequencies must be positive".into() });
            }
            w.push(T::lit(v[0]));
            fx.push(Complex::new(T::lit(v[1]), T::lit(v[2])));
            my.push(Complex::new(T::lit(v[3]), T::lit(v[4])));
        }
        if w.len() < 2 {
            return Err(ForceError::Parse { line: 1, msg: "need at least two frequency rows".into() });
        }
        Self::from_samples(w, fx, my)
    }
}

/// Delays every sample by `t_p`: multiplies by `exp(−iω t_p)`.
pub fn causalize<T: Real>(coeffs: &ForceCoefficientSet<T>, t_p: T) -> ForceCoefficientSet<T> {
    let set = coeffs.set.map_samples(|w, m| {
        let shift = cis(-w * t_p);
        m.map(|z| z * shift)
    });
    ForceCoefficientSet { set }
}

/// Number of uniform frequency points used for impulse responses.
const IMPULSE_POINTS: usize = 2048;
/// Zero-padding factor of the impulse-response spectrum (finer time grid).
const IMPULSE_PADDING: usize = 8;

/// Fraction of impulse-response energy at negative times, per output, after
/// delaying by `t_p`.
///
/// The response is resampled on a uniform grid from 0 to the top of the
/// table (linear ramp below the first sample, cosine taper over the top 20%),
/// zero-padded and inverted with a Hermitian real IFFT; the second half of
/// the periodic result is read as negative time.
pub fn pre_zero_energy<T: Real>(coeffs: &ForceCoefficientSet<T>, t_p: T) -> [T; 2] {
    let n = IMPULSE_POINTS;
    let grid = linspace(T::zero(), coeffs.max_frequency(), n);
    let half = n * IMPULSE_PADDING;
    let m = 2 * half;
    let mut planner = FftPlanner::<T>::new();
    let ifft: Arc<dyn Fft<T>> = planner.plan_fft_inverse(m);
    let taper_len = n / 5;
    let mut out = [T::zero(); 2];
    for (o, slot) in out.iter_mut().enumerate() {
        let chan = coeffs.set.channel(o, 0);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
        for (k, &w) in grid.iter().enumerate() {
            let mut x = resample(coeffs.frequencies(), &chan, w) * cis(-w * t_p);
            if k + taper_len >= n {
                let j = T::lit((k + taper_len + 1 - n) as f64 / taper_len as f64);
                x *= T::lit(0.5) + T::lit(0.5) * (T::pi() * j).cos();
            }
            buf[k] = x;
        }
        buf[0] = cplx(buf[0].re);
        for k in 1..half {
            buf[m - k] = buf[k].conj();
        }
        ifft.process(&mut buf);
        let total = buf.iter().fold(T::zero(), |a, z| a + z.re * z.re);
        let neg = buf[half..].iter().fold(T::zero(), |a, z| a + z.re * z.re);
        *slot = if total > T::zero() { neg / total } else { T::zero() };
    }
    out
}

/// Linear resampling of complex data; ramps from the real part of the first
/// sample at ω = 0 and returns zero above the table.
pub(crate) fn resample<T: Real>(freq: &[T], data: &[Complex<T>], w: T) -> Complex<T> {
    let last = freq.len() - 1;
    if w > freq[last] {
        return Complex::new(T::zero(), T::zero());
    }
    if w <= freq[0] {
        let f = w / freq[0];
        let dc = cplx(data[0].re);
        return dc + (data[0] - dc) * f;
    }
    let i = freq.partition_point(|&v| v <= w).clamp(1, last);
    let f = (w - freq[i - 1]) / (freq[i] - freq[i - 1]);
    data[i - 1] + (data[i] - data[i - 1]) * f
}

/// Smallest delay on a 0.5 s grid for which the pre-zero impulse energy of
/// both outputs is at most `tolerance`.
pub fn select_causalization_delay<T: Real>(coeffs: &ForceCoefficientSet<T>, tolerance: T) -> Result<T, ForceError> {
    if !(tolerance > T::zero() && tolerance < T::one()) {
        return Err(ForceError::InvalidRequest("energy tolerance must lie in (0, 1)".into()));
    }
    let steps = (DELAY_CAP / DELAY_STEP).round() as usize;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let t = T::lit(k as f64 * DELAY_STEP);
        let e = pre_zero_energy(coeffs, t);
        let worst = e[0].max(e[1]);
        if worst <= tolerance {
            return Ok(t);
        }
        best = worst.as_f64();
    }
    Err(ForceError::NoCausalDelay { tolerance: tolerance.as_f64(), cap: DELAY_CAP, best })
}
