//! Balanced truncation.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex;

use super::{roots_f64, LtiError, StateSpaceModel};
use crate::scalar::Real;

/// Solves `A X + X Aᵀ + Q = 0` for stable `A` (complex Schur form, column
/// back-substitution).
pub fn lyapunov<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>, LtiError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let ac = a.map(|v| Complex::new(v, T::zero()));
    let schur = Schur::try_new(ac, T::default_epsilon(), 10_000)
        .ok_or_else(|| LtiError::Numerical("Schur decomposition did not converge".into()))?;
    let (u, t) = schur.unpack();
    let uh = u.adjoint();
    let f = -(&uh * q.map(|v| Complex::new(v, T::zero())) * &u);
    let mut y = DMatrix::<Complex<T>>::zeros(n, n);
    for j in (0..n).rev() {
        let tjj = t[(j, j)].conj();
        let mut rhs = f.column(j).into_owned();
        for k in (j + 1)..n {
            let coef = t[(j, k)].conj();
            rhs -= y.column(k) * coef;
        }
        // back substitution with (T + conj(t_jj) I)
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in (i + 1)..n {
                s -= t[(i, k)] * y[(k, j)];
            }
            let diag = t[(i, i)] + tjj;
            if nalgebra::ComplexField::modulus(diag) <= T::default_epsilon() {
                return Err(LtiError::Numerical("Lyapunov equation is singular (A not stable)".into()));
            }
            y[(i, j)] = s / diag;
        }
    }
    let x = (&u * y * uh).map(|z| z.re);
    Ok((&x + x.transpose()) * T::lit(0.5))
}

fn psd_factor<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(m);
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = if lam > T::zero() { lam.sqrt() } else { T::zero() };
        l.column_mut(j).scale_mut(s);
    }
    l
}

struct Balancing<T: Real> {
    hsv: Vec<T>,
    lp: DMatrix<T>,
    lq: DMatrix<T>,
    u: DMatrix<T>,
    v: DMatrix<T>,
}

fn balance<T: Real>(model: &StateSpaceModel<T>) -> Result<Balancing<T>, LtiError> {
    let p = lyapunov(model.a(), &(model.b() * model.b().transpose()))?;
    let at = model.a().transpose();
    let q = lyapunov(&at, &(model.c().transpose() * model.c()))?;
    let lp = psd_factor(p);
    let lq = psd_factor(q);
    let svd = (lq.transpose() * &lp).svd(true, true);
    let u = svd.u.ok_or_else(|| LtiError::Numerical("SVD failed".into()))?;
    let v = svd.v_t.ok_or_else(|| LtiError::Numerical("SVD failed".into()))?.transpose();
    Ok(Balancing { hsv: svd.singular_values.iter().copied().collect(), lp, lq, u, v })
}

/// Hankel singular values in decreasing order.
pub fn hankel_singular_values<T: Real>(model: &StateSpaceModel<T>) -> Result<Vec<T>, LtiError> {
    model.require_stable()?;
    Ok(balance(model)?.hsv)
}

/// Reduced model together with its Hankel singular values and the
/// `2·Σ(truncated HSV)` H∞ error bound.
#[derive(Clone, Debug)]
pub struct ReducedModel<T: Real> {
    pub model: StateSpaceModel<T>,
    pub hsv: Vec<T>,
    pub error_bound: T,
}

/// Square-root balanced truncation to `target_order` states.
///
/// States whose Hankel singular value is numerically zero are never kept, so a
/// non-minimal input may come back smaller than `target_order`.
pub fn reduce_order<T: Real>(model: &StateSpaceModel<T>, target_order: usize) -> Result<ReducedModel<T>, LtiError> {
    let n = model.order();
    if target_order == 0 || target_order > n {
        return Err(LtiError::InvalidOrder { target: target_order, order: n });
    }
    let poles = model.poles();
    if poles.iter().any(|p| p.re >= T::zero()) {
        return Err(LtiError::Unstable { poles: roots_f64(&poles) });
    }
    let bal = balance(model)?;
    if target_order == n {
        return Ok(ReducedModel { model: model.clone(), hsv: bal.hsv, error_bound: T::zero() });
    }
    let s1 = bal.hsv.first().copied().unwrap_or(T::zero());
    let floor = s1 * T::default_epsilon() * T::lit(1e3 * n as f64);
    let keep = bal.hsv.iter().take(target_order).take_while(|&&s| s > floor).count();
    let error_bound = bal.hsv[keep..].iter().fold(T::zero(), |acc, &s| acc + s) * T::lit(2.0);
    if keep == 0 {
        let reduced = StateSpaceModel::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, model.n_inputs()),
            DMatrix::zeros(model.n_outputs(), 0),
            model.d().clone(),
            model.inputs().to_vec(),
            model.outputs().to_vec(),
        )?;
        return Ok(ReducedModel { model: reduced, hsv: bal.hsv, error_bound });
    }
    let mut scale = DMatrix::zeros(keep, keep);
    for i in 0..keep {
        scale[(i, i)] = T::one() / bal.hsv[i].sqrt();
    }
    let right = &bal.lp * bal.v.columns(0, keep) * &scale;
    let left = &bal.lq * bal.u.columns(0, keep) * &scale;
    let lt = left.transpose();
    let reduced = StateSpaceModel::new(
        &lt * model.a() * &right,
        &lt * model.b(),
        model.c() * &right,
        model.d().clone(),
        model.inputs().to_vec(),
        model.outputs().to_vec(),
    )?;
    Ok(ReducedModel { model: reduced, hsv: bal.hsv, error_bound })
}
