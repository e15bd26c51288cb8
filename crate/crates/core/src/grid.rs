//! Uniform grids, finite differences and trapezoid quadrature.

use crate::error::{Result, ShockError};
use crate::scalar::Scalar;

/// Uniform node set `x_i = x0 + i * dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid<T> {
    pub x0: T,
    pub dx: T,
    pub n: usize,
}

impl<T: Scalar> UniformGrid<T> {
    pub fn new(x0: T, dx: T, n: usize) -> Result<Self> {
        if !(dx > T::zero()) || !dx.is_finite() || !x0.is_finite() {
            return Err(ShockError::InvalidArgument(format!("grid spacing must be positive, got {dx}")));
        }
        if n < 5 {
            return Err(ShockError::InvalidArgument(format!("grid needs at least 5 nodes, got {n}")));
        }
        Ok(Self { x0, dx, n })
    }

    /// Grid symmetric about 0 with a node at 0 covering `[-extent/2, extent/2]`.
    pub fn centered(extent: T, dx: T) -> Result<Self> {
        if !(extent > T::zero()) {
            return Err(ShockError::InvalidArgument(format!("grid extent must be positive, got {extent}")));
        }
        let half = (extent / (T::c(2.0) * dx) - T::c(1e-9)).ceil();
        let n_half = half.to_usize().unwrap_or(0);
        Self::new(-T::from_usize_lossy(n_half) * dx, dx, 2 * n_half + 1)
    }

    #[inline]
    #[must_use]
    pub fn x(&self, i: usize) -> T {
        self.x0 + T::from_usize_lossy(i) * self.dx
    }

    /// Abscissa of a possibly negative index (ghost nodes).
    #[inline]
    #[must_use]
    pub fn x_signed(&self, i: isize) -> T {
        self.x0 + T::from_isize(i).expect("index") * self.dx
    }

    #[must_use]
    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    #[must_use]
    pub fn extent(&self) -> T {
        T::from_usize_lossy(self.n - 1) * self.dx
    }

    #[must_use]
    pub fn last(&self) -> T {
        self.x(self.n - 1)
    }

    /// Same nodes with coordinates multiplied by `factor`.
    #[must_use]
    pub fn scaled(&self, factor: T) -> Self {
        Self { x0: self.x0 * factor, dx: self.dx * factor, n: self.n }
    }

    /// Index of the node nearest to `x`, if inside the grid.
    #[must_use]
    pub fn nearest(&self, x: T) -> Option<usize> {
        let k = ((x - self.x0) / self.dx).round();
        if k < T::zero() {
            return None;
        }
        k.to_usize().filter(|&k| k < self.n)
    }
}

/// Composite trapezoid rule on a uniform grid.
#[must_use]
pub fn trapezoid<T: Scalar>(values: &[T], dx: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().copied().sum();
            dx * (inner + T::c(0.5) * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid weights, so that `sum(w_i f_i)` is [`trapezoid`].
#[must_use]
pub fn trapezoid_weights<T: Scalar>(n: usize, dx: T) -> Vec<T> {
    let mut w = vec![dx; n];
    if n > 0 {
        w[0] = dx * T::c(0.5);
        w[n - 1] = dx * T::c(0.5);
    }
    w
}

/// Second-order derivative: centered inside, one-sided three-point at the ends.
#[must_use]
pub fn derivative<T: Scalar>(values: &[T], dx: T) -> Vec<T> {
    let n = values.len();
    assert!(n >= 3, "derivative needs at least three samples");
    let half = T::c(0.5) / dx;
    let mut d = vec![T::zero(); n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) * half;
    }
    d[0] = (-T::c(3.0) * values[0] + T::c(4.0) * values[1] - values[2]) * half;
    d[n - 1] = (T::c(3.0) * values[n - 1] - T::c(4.0) * values[n - 2] + values[n - 3]) * half;
    d
}

/// Largest absolute entry of `a - b`.
#[must_use]
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_has_origin_node() {
        let g = UniformGrid::centered(10.0_f64, 0.3).unwrap();
        let k = g.nearest(0.0).unwrap();
        assert!(g.x(k).abs() < 1e-14);
        assert!(g.x0 <= -5.0 && g.last() >= 5.0);
        assert_eq!(g.n % 2, 1);
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let g = UniformGrid::new(0.0_f64, 0.1, 11).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&f, g.dx) - 2.0).abs() < 1e-14);
        let w = trapezoid_weights(11, 0.1);
        let s: f64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_exact_for_quadratic() {
        let g = UniformGrid::new(-1.0_f64, 0.25, 9).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x * x - 3.0 * x).collect();
        let d = derivative(&f, g.dx);
        for (i, di) in d.iter().enumerate() {
            assert!((di - (2.0 * g.x(i) - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(UniformGrid::new(0.0_f64, 0.0, 10).is_err());
        assert!(UniformGrid::new(0.0_f64, 0.1, 2).is_err());
    }
}
