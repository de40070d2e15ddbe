//! Small quadrature helpers.

use crate::scalar::Real;

/// Trapezoid rule on a non-uniform grid.
pub fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    let mut acc = T::zero();
    for i in 1..x.len().min(y.len()) {
        acc += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) * T::lit(0.5);
    }
    acc
}

/// Cumulative trapezoid integral, starting at zero.
pub fn cumulative_trapezoid<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = T::zero();
    out.push(acc);
    for i in 1..x.len() {
        acc += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) * T::lit(0.5);
        out.push(acc);
    }
    out
}

/// `n` evenly spaced points in `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::lit((n - 1) as f64);
    (0..n).map(|i| lo + step * T::lit(i as f64)).collect()
}

/// Linear interpolation on a sorted grid, clamped at the ends.
pub fn interp<T: Real>(x: &[T], y: &[T], at: T) -> T {
    if at <= x[0] {
        return y[0];
    }
    let last = x.len() - 1;
    if at >= x[last] {
        return y[last];
    }
    let i = x.partition_point(|&v| v <= at).max(1);
    let f = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + (y[i] - y[i - 1]) * f
}
