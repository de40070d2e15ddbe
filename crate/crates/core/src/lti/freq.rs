use nalgebra::DMatrix;
use num_complex::Complex;

use super::LtiError;
use crate::scalar::Real;

/// Complex frequency-response samples (`p` outputs × `m` inputs per grid point).
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponseSet<T: Real> {
    frequencies: Vec<T>,
    samples: Vec<DMatrix<Complex<T>>>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl<T: Real> FrequencyResponseSet<T> {
    pub fn new(
        frequencies: Vec<T>,
        samples: Vec<DMatrix<Complex<T>>>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    ) -> Result<Self, LtiError> {
        if frequencies.is_empty() {
            return Err(LtiError::InvalidGrid("empty grid".into()));
        }
        if frequencies[0] <= T::zero() || !frequencies[0].is_finite() {
            return Err(LtiError::InvalidGrid(format!(
                "grid must be positive, first point {}",
                frequencies[0].as_f64()
            )));
        }
        if let Some(w) = frequencies.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(LtiError::InvalidGrid(format!(
                "grid must be strictly increasing ({} then {})",
                w[0].as_f64(),
                w[1].as_f64()
            )));
        }
        if samples.len() != frequencies.len() {
            return Err(LtiError::Dimension(format!(
                "{} samples for {} grid points",
                samples.len(),
                frequencies.len()
            )));
        }
        let (p, m) = (outputs.len(), inputs.len());
        if samples.iter().any(|s| s.shape() != (p, m)) {
            return Err(LtiError::Dimension(format!("samples must be {p}x{m}")));
        }
        Ok(Self { frequencies, samples, inputs, outputs })
    }

    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }
    pub fn samples(&self) -> &[DMatrix<Complex<T>>] {
        &self.samples
    }
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }
    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Response of one output/input pair across the grid.
    pub fn channel(&self, output: usize, input: usize) -> Vec<Complex<T>> {
        self.samples.iter().map(|s| s[(output, input)]).collect()
    }

    /// Applies `f(omega, sample)` to every sample, keeping the grid and names.
    pub fn map_samples<F>(&self, mut f: F) -> Self
    where
        F: FnMut(T, &DMatrix<Complex<T>>) -> DMatrix<Complex<T>>,
    {
        let samples = self
            .frequencies
            .iter()
            .zip(&self.samples)
            .map(|(&w, s)| f(w, s))
            .collect();
        Self { samples, ..self.clone() }
    }

    /// Grid indices whose frequency lies in `[lo, hi]`.
    pub fn band_indices(&self, lo: T, hi: T) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.frequencies[i] >= lo && self.frequencies[i] <= hi)
            .collect()
    }

    /// Linear interpolation of the real and imaginary parts at `omega`.
    /// Returns `None` outside the grid.
    pub fn interpolate(&self, omega: T) -> Option<DMatrix<Complex<T>>> {
        let f = &self.frequencies;
        if omega < f[0] || omega > f[f.len() - 1] {
            return None;
        }
        let hi = f.partition_point(|&x| x < omega).min(f.len() - 1);
        if hi == 0 {
            return Some(self.samples[0].clone());
        }
        let lo = hi - 1;
        let t = (omega - f[lo]) / (f[hi] - f[lo]);
        let w0 = Complex::new(T::one() - t, T::zero());
        let w1 = Complex::new(t, T::zero());
        Some(self.samples[lo].map(|z| z * w0) + self.samples[hi].map(|z| z * w1))
    }

    /// CSV text: `omega_rad_s` then `<name>_re,<name>_im` for every
    /// output/input pair (pair name is the output name for single-input sets,
    /// `<output>:<input>` otherwise).
    pub fn to_csv(&self) -> String {
        let names = self.pair_names();
        let mut out = String::from("omega_rad_s");
        for n in &names {
            out.push_str(&format!(",{n}_re,{n}_im"));
        }
        out.push('\n');
        for (w, s) in self.frequencies.iter().zip(&self.samples) {
            out.push_str(&format!("{:e}", w.as_f64()));
            for o in 0..self.outputs.len() {
                for i in 0..self.inputs.len() {
                    let z = s[(o, i)];
                    out.push_str(&format!(",{:e},{:e}", z.re.as_f64(), z.im.as_f64()));
                }
            }
            out.push('\n');
        }
        out
    }

    fn pair_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for o in &self.outputs {
            for i in &self.inputs {
                if self.inputs.len() == 1 {
                    names.push(o.clone());
                } else {
                    names.push(format!("{o}:{i}"));
                }
            }
        }
        names
    }

    /// Parses the format written by [`Self::to_csv`]. Single-input sets get
    /// the input name `input`.
    pub fn from_csv(text: &str) -> Result<Self, LtiError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| LtiError::Parse { line: 1, msg: e.to_string() })?
            .clone();
        if header.len() < 3 || (header.len() - 1) % 2 != 0 || &header[0] != "omega_rad_s" {
            return Err(LtiError::Parse {
                line: 1,
                msg: "expected `omega_rad_s` followed by _re/_im column pairs".into(),
            });
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        for k in 0..(header.len() - 1) / 2 {
            let re = &header[1 + 2 * k];
            let im = &header[2 + 2 * k];
            let base = re.strip_suffix("_re").ok_or_else(|| LtiError::Parse {
                line: 1,
                msg: format!("column `{re}` must end in _re"),
            })?;
            if im.strip_suffix("_im") != Some(base) {
                return Err(LtiError::Parse { line: 1, msg: format!("column `{im}` must be `{base}_im`") });
            }
            match base.split_once(':') {
                Some((o, i)) => pairs.push((o.to_string(), i.to_string())),
                None => pairs.push((base.to_string(), "input".to_string())),
            }
        }
        let mut outputs: Vec<String> = Vec::new();
        let mut inputs: Vec<String> = Vec::new();
        for (o, i) in &pairs {
            if !outputs.contains(o) {
                outputs.push(o.clone());
            }
            if !inputs.contains(i) {
                inputs.push(i.clone());
            }
        }
        if outputs.len() * inputs.len() != pairs.len() {
            return Err(LtiError::Parse { line: 1, msg: "incomplete output/input pair table".into() });
        }
        let mut freqs = Vec::new();
        let mut samples = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| LtiError::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                msg: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let parse = |k: usize| -> Result<T, LtiError> {
                rec[k]
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| LtiError::Parse { line, msg: format!("invalid number `{}`", &rec[k]) })
            };
            freqs.push(parse(0)?);
            let mut s = DMatrix::from_element(outputs.len(), inputs.len(), Complex::new(T::zero(), T::zero()));
            for (k, (o, i)) in pairs.iter().enumerate() {
                let oi = outputs.iter().position(|x| x == o).unwrap();
                let ii = inputs.iter().position(|x| x == i).unwrap();
                s[(oi, ii)] = Complex::new(parse(1 + 2 * k)?, parse(2 + 2 * k)?);
            }
            samples.push(s);
        }
        Self::new(freqs, samples, inputs, outputs)
    }
}
