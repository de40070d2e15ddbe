//! Continuous-time LTI algebra.
//!
//! [`StateSpaceModel`] is the carrier for the plant, the wave-excitation model
//! and every controller. All operations are pure and return new models.

mod discrete;
mod freq;
mod io;
mod reduce;

pub use discrete::{discretize, discretize_tustin, DiscreteModel};
pub use freq::FrequencyResponseSet;
pub use io::{read_model, write_model};
pub use reduce::{hankel_singular_values, lyapunov, reduce_order, ReducedModel};

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cabs, Real};

#[derive(Debug, Error)]
pub enum LtiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("resolvent is singular at omega = {omega} rad/s (pole on the imaginary axis)")]
    EvaluationAtPole { omega: f64 },
    #[error("invalid frequency {0}")]
    InvalidFrequency(f64),
    #[error("model is not square ({inputs} inputs, {outputs} outputs)")]
    NotSquare { inputs: usize, outputs: usize },
    #[error("feedthrough matrix is singular; model is not biproper")]
    NotBiproper,
    #[error("inverse is unstable: zeros at {}", fmt_roots(.zeros))]
    UnstableInverse { zeros: Vec<Complex<f64>> },
    #[error("model is not asymptotically stable: poles at {}", fmt_roots(.poles))]
    Unstable { poles: Vec<Complex<f64>> },
    #[error("invalid target order {target} for a model of order {order}")]
    InvalidOrder { target: usize, order: usize },
    #[error("sample time must be positive, got {0}")]
    InvalidStep(f64),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_roots(r: &[Complex<f64>]) -> String {
    let parts: Vec<String> = r.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

pub(crate) fn roots_f64<T: Real>(r: &[Complex<T>]) -> Vec<Complex<f64>> {
    r.iter().map(|z| Complex::new(z.re.as_f64(), z.im.as_f64())).collect()
}

/// Continuous-time realization `x' = A x + B u`, `y = C x + D u` with named channels.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

fn check_unique(names: &[String]) -> Result<(), LtiError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(LtiError::DuplicateChannel(n.clone()));
        }
    }
    Ok(())
}

fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl<T: Real> StateSpaceModel<T> {
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    ) -> Result<Self, LtiError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LtiError::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        let m = d.ncols();
        let p = d.nrows();
        if b.nrows() != n || b.ncols() != m {
            return Err(LtiError::Dimension(format!(
                "B is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                n,
                m
            )));
        }
        if c.nrows() != p || c.ncols() != n {
            return Err(LtiError::Dimension(format!(
                "C is {}x{}, expected {}x{}",
                c.nrows(),
                c.ncols(),
                p,
                n
            )));
        }
        if inputs.len() != m || outputs.len() != p {
            return Err(LtiError::Dimension(format!(
                "{} input / {} output names for a {}x{} system",
                inputs.len(),
                outputs.len(),
                p,
                m
            )));
        }
        check_unique(&inputs)?;
        check_unique(&outputs)?;
        Ok(Self { a, b, c, d, inputs, outputs })
    }

    /// Realization with generated channel names `u0..`, `y0..`.
    pub fn from_matrices(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
    ) -> Result<Self, LtiError> {
        let (m, p) = (d.ncols(), d.nrows());
        Self::new(a, b, c, d, default_names("u", m), default_names("y", p))
    }

    /// Memoryless gain `y = D u`.
    pub fn static_gain(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            inputs: default_names("u", m),
            outputs: default_names("y", p),
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::static_gain(DMatrix::identity(m, m))
    }

    /// SISO first-order lag `gain·corner / (s + corner)`.
    pub fn first_order(gain: T, corner: T) -> Self {
        Self::from_matrices(
            DMatrix::from_element(1, 1, -corner),
            DMatrix::from_element(1, 1, corner),
            DMatrix::from_element(1, 1, gain),
            DMatrix::zeros(1, 1),
        )
        .expect("1x1 realization")
    }

    /// SISO high-pass `s / (s + corner)`.
    pub fn high_pass(corner: T) -> Self {
        Self::from_matrices(
            DMatrix::from_element(1, 1, -corner),
            DMatrix::from_element(1, 1, corner),
            DMatrix::from_element(1, 1, -T::one()),
            DMatrix::from_element(1, 1, T::one()),
        )
        .expect("1x1 realization")
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.d.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.d.nrows()
    }

    pub fn with_names(mut self, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self, LtiError> {
        if inputs.len() != self.n_inputs() || outputs.len() != self.n_outputs() {
            return Err(LtiError::Dimension("channel name count".into()));
        }
        check_unique(&inputs)?;
        check_unique(&outputs)?;
        self.inputs = inputs;
        self.outputs = outputs;
        Ok(self)
    }

    pub fn input_index(&self, name: &str) -> Result<usize, LtiError> {
        self.inputs
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| LtiError::UnknownChannel(name.to_string()))
    }

    pub fn output_index(&self, name: &str) -> Result<usize, LtiError> {
        self.outputs
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| LtiError::UnknownChannel(name.to_string()))
    }

    /// Frequency response `C (iωI − A)⁻¹ B + D`.
    pub fn evaluate(&self, omega: T) -> Result<DMatrix<Complex<T>>, LtiError> {
        if !omega.is_finite() || omega < T::zero() {
            return Err(LtiError::InvalidFrequency(omega.as_f64()));
        }
        let d = self.d.map(|v| Complex::new(v, T::zero()));
        let n = self.order();
        if n == 0 {
            return Ok(d);
        }
        // conditioning is judged on the balanced realization so that state
        // scaling alone never makes a regular point look singular
        let (a, scale) = balance_diagonal(&self.a);
        let resolvent = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { omega } else { T::zero() };
            Complex::new(-a[(i, j)], diag)
        });
        let sv = resolvent.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smin <= T::zero() || smax / smin > T::cond_limit() {
            return Err(LtiError::EvaluationAtPole { omega: omega.as_f64() });
        }
        let b = DMatrix::from_fn(n, self.n_inputs(), |i, j| Complex::new(self.b[(i, j)] / scale[i], T::zero()));
        let x = resolvent
            .lu()
            .solve(&b)
            .ok_or(LtiError::EvaluationAtPole { omega: omega.as_f64() })?;
        let c = DMatrix::from_fn(self.n_outputs(), n, |i, j| Complex::new(self.c[(i, j)] * scale[j], T::zero()));
        Ok(c * x + d)
    }

    /// Frequency response sampled on `grid` (strictly increasing, positive).
    pub fn frequency_response(&self, grid: &[T]) -> Result<FrequencyResponseSet<T>, LtiError> {
        let samples = grid.iter().map(|&w| self.evaluate(w)).collect::<Result<Vec<_>, _>>()?;
        FrequencyResponseSet::new(grid.to_vec(), samples, self.inputs.clone(), self.outputs.clone())
    }

    pub fn poles(&self) -> Vec<Complex<T>> {
        if self.order() == 0 {
            return Vec::new();
        }
        balance_diagonal(&self.a).0.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part among the poles; `-inf` for static models.
    pub fn spectral_abscissa(&self) -> T {
        let mut worst = -T::max_value().expect("bounded scalar");
        for p in self.poles() {
            if p.re > worst {
                worst = p.re;
            }
        }
        worst
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < T::zero())
    }

    pub fn require_stable(&self) -> Result<(), LtiError> {
        let poles = self.poles();
        if poles.iter().all(|p| p.re < T::zero()) {
            Ok(())
        } else {
            Err(LtiError::Unstable { poles: roots_f64(&poles) })
        }
    }

    /// Multiplies every output by `k`.
    pub fn scaled(&self, k: T) -> Self {
        let mut out = self.clone();
        out.c *= k;
        out.d *= k;
        out
    }

    /// Sub-model mapping the named inputs to the named outputs.
    pub fn subsystem(&self, inputs: &[&str], outputs: &[&str]) -> Result<Self, LtiError> {
        let ii = inputs.iter().map(|n| self.input_index(n)).collect::<Result<Vec<_>, _>>()?;
        let oi = outputs.iter().map(|n| self.output_index(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.select(&ii, &oi))
    }

    /// Sub-model by channel index.
    pub fn select(&self, inputs: &[usize], outputs: &[usize]) -> Self {
        let n = self.order();
        let b = DMatrix::from_fn(n, inputs.len(), |r, c| self.b[(r, inputs[c])]);
        let c = DMatrix::from_fn(outputs.len(), n, |r, col| self.c[(outputs[r], col)]);
        let d = DMatrix::from_fn(outputs.len(), inputs.len(), |r, col| self.d[(outputs[r], inputs[col])]);
        Self {
            a: self.a.clone(),
            b,
            c,
            d,
            inputs: inputs.iter().map(|&i| self.inputs[i].clone()).collect(),
            outputs: outputs.iter().map(|&i| self.outputs[i].clone()).collect(),
        }
    }

    /// Relative degree of a SISO model: smallest `r` with `C A^(r-1) B ≠ 0`
    /// (0 when `D ≠ 0`). `None` if the response is identically zero.
    pub fn relative_degree(&self) -> Option<usize> {
        assert_eq!(self.n_inputs(), 1, "relative degree defined for SISO models");
        assert_eq!(self.n_outputs(), 1, "relative degree defined for SISO models");
        // a Markov parameter counts as zero when it lies within a multiple of
        // its componentwise rounding envelope |C|·|A|^k·|B|, which does not
        // depend on state scaling
        let rel = T::lit(1e-10).max(T::default_epsilon() * T::lit(1e4));
        let abs_a = self.a.map(|v| v.magnitude());
        let abs_c = self.c.map(|v| v.magnitude());
        let d = self.d[(0, 0)];
        if d != T::zero() {
            let envelope = (&abs_c * self.b.map(|v| v.magnitude()))[(0, 0)];
            if d.magnitude() > rel * envelope {
                return Some(0);
            }
        }
        let mut v = self.b.clone();
        let mut env = self.b.map(|v| v.magnitude());
        for r in 1..=self.order() {
            let h = (&self.c * &v)[(0, 0)];
            let bound = (&abs_c * &env)[(0, 0)];
            if h != T::zero() && h.magnitude() > rel * bound {
                return Some(r);
            }
            v = &self.a * v;
            env = &abs_a * env;
        }
        None
    }

    fn markov_scale(&self) -> T {
        let s = self.c.norm() * self.b.norm() + self.d.norm();
        if s > T::zero() {
            s
        } else {
            T::one()
        }
    }

    /// Multiplies a strictly proper SISO/SIMO model by `(eps·s + 1)` using
    /// `C ← eps·C·A + C`, `D ← eps·C·B`. Requires `D = 0`.
    pub fn times_lead(&self, eps: T) -> Result<Self, LtiError> {
        if self.d.iter().any(|v| *v != T::zero()) {
            let scale = self.markov_scale();
            if self.d.norm() > scale * T::lit(1e-12) {
                return Err(LtiError::Numerical(
                    "lead factor applied to a model with nonzero feedthrough".into(),
                ));
            }
        }
        let mut out = self.clone();
        out.c = &self.c * &self.a * eps + &self.c;
        out.d = &self.c * &self.b * eps;
        Ok(out)
    }
}

/// Cascade `g2 ∘ g1`: `g1` drives `g2`.
pub fn series<T: Real>(g2: &StateSpaceModel<T>, g1: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>, LtiError> {
    if g1.n_outputs() != g2.n_inputs() {
        return Err(LtiError::Dimension(format!(
            "series: g1 has {} outputs, g2 has {} inputs",
            g1.n_outputs(),
            g2.n_inputs()
        )));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let n = n1 + n2;
    let m = g1.n_inputs();
    let p = g2.n_outputs();
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(&g2.b * &g1.c));
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&g1.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&(&g2.b * &g1.d));
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, n1)).copy_from(&(&g2.d * &g1.c));
    c.view_mut((0, n1), (p, n2)).copy_from(&g2.c);
    let d = &g2.d * &g1.d;
    StateSpaceModel::new(a, b, c, d, g1.inputs.clone(), g2.outputs.clone())
}

/// Sum of two models sharing input and output dimensions; names from `g1`.
pub fn parallel<T: Real>(g1: &StateSpaceModel<T>, g2: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>, LtiError> {
    if g1.n_inputs() != g2.n_inputs() || g1.n_outputs() != g2.n_outputs() {
        return Err(LtiError::Dimension("parallel: channel counts differ".into()));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let n = n1 + n2;
    let (m, p) = (g1.n_inputs(), g1.n_outputs());
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&g1.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&g2.b);
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, n1)).copy_from(&g1.c);
    c.view_mut((0, n1), (p, n2)).copy_from(&g2.c);
    let d = &g1.d + &g2.d;
    StateSpaceModel::new(a, b, c, d, g1.inputs.clone(), g1.outputs.clone())
}

/// Stacks the outputs of two models driven by the same inputs.
pub fn stack_outputs<T: Real>(g1: &StateSpaceModel<T>, g2: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>, LtiError> {
    if g1.n_inputs() != g2.n_inputs() {
        return Err(LtiError::Dimension("stack_outputs: input counts differ".into()));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let (p1, p2, m) = (g1.n_outputs(), g2.n_outputs(), g1.n_inputs());
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    let mut b = DMatrix::zeros(n1 + n2, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&g1.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&g2.b);
    let mut c = DMatrix::zeros(p1 + p2, n1 + n2);
    c.view_mut((0, 0), (p1, n1)).copy_from(&g1.c);
    c.view_mut((p1, n1), (p2, n2)).copy_from(&g2.c);
    let mut d = DMatrix::zeros(p1 + p2, m);
    d.view_mut((0, 0), (p1, m)).copy_from(&g1.d);
    d.view_mut((p1, 0), (p2, m)).copy_from(&g2.d);
    let outputs = g1.outputs.iter().chain(&g2.outputs).cloned().collect();
    StateSpaceModel::new(a, b, c, d, g1.inputs.clone(), outputs)
}

/// Result of [`invert`]: the inverse realization and its poles (the zeros of
/// the original model).
#[derive(Clone, Debug)]
pub struct InverseModel<T: Real> {
    pub model: StateSpaceModel<T>,
    pub poles: Vec<Complex<T>>,
}

/// Inverse of a square biproper model with stable zeros.
pub fn invert<T: Real>(model: &StateSpaceModel<T>) -> Result<InverseModel<T>, LtiError> {
    let inv = invert_unchecked(model)?;
    let poles = inv.poles();
    if poles.iter().any(|p| p.re >= T::zero()) {
        let zeros: Vec<_> = poles.iter().filter(|p| p.re >= T::zero()).copied().collect();
        return Err(LtiError::UnstableInverse { zeros: roots_f64(&zeros) });
    }
    Ok(InverseModel { model: inv, poles })
}

/// Inverse realization without the minimum-phase check.
pub fn invert_unchecked<T: Real>(model: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>, LtiError> {
    let (m, p) = (model.n_inputs(), model.n_outputs());
    if m != p {
        return Err(LtiError::NotSquare { inputs: m, outputs: p });
    }
    let sv = model.d.clone().singular_values();
    if m == 0 || sv.min() <= T::zero() || sv.max() / sv.min() > T::cond_limit() {
        return Err(LtiError::NotBiproper);
    }
    let dinv = model.d.clone().try_inverse().ok_or(LtiError::NotBiproper)?;
    let a = &model.a - &model.b * &dinv * &model.c;
    let b = &model.b * &dinv;
    let c = -(&dinv * &model.c);
    StateSpaceModel::new(a, b, c, dinv, model.outputs.clone(), model.inputs.clone())
}

/// Closes a loop around `plant`: `u[u_idx] += K · y[y_idx]` (positive
/// feedback convention, the sign lives in `controller`). External inputs and
/// outputs of the result are those of the plant.
pub fn feedback<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &StateSpaceModel<T>,
    u_idx: &[usize],
    y_idx: &[usize],
) -> Result<StateSpaceModel<T>, LtiError> {
    if controller.n_inputs() != y_idx.len() || controller.n_outputs() != u_idx.len() {
        return Err(LtiError::Dimension("feedback: controller does not match selected channels".into()));
    }
    let (n, m, p) = (plant.order(), plant.n_inputs(), plant.n_outputs());
    let nk = controller.order();
    if u_idx.iter().any(|&i| i >= m) || y_idx.iter().any(|&i| i >= p) {
        return Err(LtiError::Dimension("feedback: channel index out of range".into()));
    }
    let mut e = DMatrix::<T>::zeros(m, u_idx.len());
    for (k, &i) in u_idx.iter().enumerate() {
        e[(i, k)] = T::one();
    }
    let mut f = DMatrix::<T>::zeros(y_idx.len(), p);
    for (k, &i) in y_idx.iter().enumerate() {
        f[(k, i)] = T::one();
    }
    let (ak, bk, ck, dk) = (&controller.a, &controller.b, &controller.c, &controller.d);
    let loop_gain = DMatrix::identity(p, p) - &plant.d * &e * dk * &f;
    let phi = loop_gain
        .try_inverse()
        .ok_or_else(|| LtiError::Numerical("algebraic loop is singular".into()))?;
    // y = Φ (C x + D E Ck z + D r)
    let y_x = &phi * &plant.c;
    let y_z = &phi * &plant.d * &e * ck;
    let y_r = &phi * &plant.d;
    // u_k = Ck z + Dk F y
    let uk_x = dk * &f * &y_x;
    let uk_z = ck + dk * &f * &y_z;
    let uk_r = dk * &f * &y_r;
    let nt = n + nk;
    let mut a = DMatrix::zeros(nt, nt);
    a.view_mut((0, 0), (n, n)).copy_from(&(&plant.a + &plant.b * &e * &uk_x));
    a.view_mut((0, n), (n, nk)).copy_from(&(&plant.b * &e * &uk_z));
    a.view_mut((n, 0), (nk, n)).copy_from(&(bk * &f * &y_x));
    a.view_mut((n, n), (nk, nk)).copy_from(&(ak + bk * &f * &y_z));
    let mut b = DMatrix::zeros(nt, m);
    b.view_mut((0, 0), (n, m)).copy_from(&(&plant.b + &plant.b * &e * &uk_r));
    b.view_mut((n, 0), (nk, m)).copy_from(&(bk * &f * &y_r));
    let mut c = DMatrix::zeros(p, nt);
    c.view_mut((0, 0), (p, n)).copy_from(&y_x);
    c.view_mut((0, n), (p, nk)).copy_from(&y_z);
    StateSpaceModel::new(a, b, c, y_r, plant.inputs.clone(), plant.outputs.clone())
}

/// Largest absolute entrywise difference between two responses on a grid.
pub fn max_response_error<T: Real>(
    g1: &StateSpaceModel<T>,
    g2: &StateSpaceModel<T>,
    grid: &[T],
) -> Result<T, LtiError> {
    let mut worst = T::zero();
    for &w in grid {
        let r = g1.evaluate(w)? - g2.evaluate(w)?;
        for z in r.iter() {
            let v = cabs(*z);
            if v > worst {
                worst = v;
            }
        }
    }
    Ok(worst)
}

/// Diagonal similarity `D⁻¹ A D` with power-of-two entries that roughly
/// equalizes off-diagonal row and column norms. Returns the balanced matrix
/// and the diagonal of `D`.
pub(crate) fn balance_diagonal<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = vec![T::one(); n];
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mut done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].magnitude();
                    r += m[(i, j)].magnitude();
                }
            }
            if c == T::zero() && r == T::zero() {
                continue;
            }
            // a state that feeds nothing (or is fed by nothing) is scaled to
            // bring its only nonzero coupling to unit size
            if c == T::zero() || r == T::zero() {
                let norm = if c == T::zero() { r } else { T::one() / c };
                let mut f = T::one();
                while norm / f > two {
                    f *= two;
                }
                while norm / f < T::one() / two {
                    f /= two;
                }
                if f != T::one() {
                    done = false;
                    d[i] *= f;
                    for j in 0..n {
                        m[(i, j)] /= f;
                        m[(j, i)] *= f;
                    }
                }
                continue;
            }
            let total = c + r;
            let mut f = T::one();
            while c < r / two {
                c *= two;
                r /= two;
                f *= two;
            }
            while c >= r * two {
                c /= two;
                r *= two;
                f /= two;
            }
            if (c + r) / f < T::lit(0.95) * total {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    (m, d)
}

/// Logarithmically spaced grid of `n` points in `[lo, hi]`.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * T::lit(i as f64 / (n - 1) as f64)).exp())
        .collect()
}

#[cfg(test)]
mod tests;
