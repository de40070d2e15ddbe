use nalgebra::{DMatrix, DVector};

use super::{LtiError, StateSpaceModel};
use crate::scalar::Real;

/// Discrete equivalent of a continuous model.
#[derive(Clone, Debug)]
pub struct DiscreteModel<T: Real> {
    pub ad: DMatrix<T>,
    pub bd: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    pub dt: T,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// ZOH discretization through the exponential of the augmented matrix
/// `[[A, B], [0, 0]]·dt`.
pub fn discretize<T: Real>(model: &StateSpaceModel<T>, dt: T) -> Result<DiscreteModel<T>, LtiError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(LtiError::InvalidStep(dt.as_f64()));
    }
    let n = model.order();
    let m = model.n_inputs();
    let (ad, bd) = if n == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, m))
    } else {
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(model.a() * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(model.b() * dt));
        let e = aug.exp();
        (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
    };
    Ok(DiscreteModel {
        ad,
        bd,
        c: model.c().clone(),
        d: model.d().clone(),
        dt,
        inputs: model.inputs().to_vec(),
        outputs: model.outputs().to_vec(),
    })
}

/// Bilinear (trapezoidal) discretization. Unlike ZOH it adds no half-step
/// delay, which suits controllers whose output is applied in the same step.
pub fn discretize_tustin<T: Real>(model: &StateSpaceModel<T>, dt: T) -> Result<DiscreteModel<T>, LtiError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(LtiError::InvalidStep(dt.as_f64()));
    }
    let n = model.order();
    let h = dt / T::lit(2.0);
    let mut out = DiscreteModel {
        ad: DMatrix::zeros(n, n),
        bd: DMatrix::zeros(n, model.n_inputs()),
        c: model.c().clone(),
        d: model.d().clone(),
        dt,
        inputs: model.inputs().to_vec(),
        outputs: model.outputs().to_vec(),
    };
    if n == 0 {
        return Ok(out);
    }
    let eye = DMatrix::<T>::identity(n, n);
    let m = (&eye - model.a() * h)
        .lu()
        .try_inverse()
        .ok_or_else(|| LtiError::Numerical(format!("A has an eigenvalue at 2/dt = {}", 2.0 / dt.as_f64())))?;
    out.ad = (&eye + model.a() * h) * &m;
    out.bd = &m * model.b() * dt;
    out.c = model.c() * &m;
    out.d = model.d() + model.c() * &m * model.b() * h;
    Ok(out)
}

impl<T: Real> DiscreteModel<T> {
    pub fn order(&self) -> usize {
        self.ad.nrows()
    }

    /// One update: returns `y_k = C x_k + D u_k` and advances `x`.
    pub fn step(&self, x: &mut DVector<T>, u: &DVector<T>) -> DVector<T> {
        let y = &self.c * &*x + &self.d * u;
        *x = &self.ad * &*x + &self.bd * u;
        y
    }

    /// Response to a sequence of held inputs from zero initial state.
    pub fn simulate(&self, inputs: &[DVector<T>]) -> Vec<DVector<T>> {
        let mut x = DVector::zeros(self.order());
        inputs.iter().map(|u| self.step(&mut x, u)).collect()
    }
}
