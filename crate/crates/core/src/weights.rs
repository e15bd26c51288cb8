//! The shock-dependent weight and the pressure-level truncations.

use std::sync::Arc;

use crate::error::{Result, ShockError};
use crate::grid::UniformGrid;
use crate::profile::ShockProfile;
use crate::scalar::Scalar;
use crate::thermo::GasModel;

/// `a(xi) = 1 - lambda (p(v~(xi)) - p(v_-)) / (p(v_+) - p(v_-))`.
#[derive(Debug, Clone)]
pub struct WeightFunction<T> {
    pub profile: Arc<ShockProfile<T>>,
    pub lambda: T,
    p_minus: T,
    jump: T,
}

impl<T: Scalar> WeightFunction<T> {
    /// Requires `0 < lambda < 1/2`.
    pub fn new(profile: Arc<ShockProfile<T>>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda < T::c(0.5)) {
            return Err(ShockError::InvalidArgument(format!("weight strength must lie in (0, 1/2), got {lambda}")));
        }
        let m = &profile.model;
        let p_minus = m.pressure(profile.ends.v_minus);
        let jump = profile.ends.pressure_jump(m);
        Ok(Self { profile, lambda, p_minus, jump })
    }

    /// Weight at a profile volume `v~`.
    #[inline]
    #[must_use]
    pub fn of_volume(&self, v: T) -> T {
        T::one() - self.lambda * (self.profile.model.pressure(v) - self.p_minus) / self.jump
    }

    /// Weight derivative given `v~` and `v~'`: `-lambda p'(v~) v~' / [p]`.
    #[inline]
    #[must_use]
    pub fn derivative_of(&self, v: T, dv: T) -> T {
        -self.lambda * self.profile.model.pressure_prime(v) * dv / self.jump
    }

    #[must_use]
    pub fn a_at(&self, xi: T) -> T {
        self.of_volume(self.profile.v_at(xi))
    }

    #[must_use]
    pub fn da_at(&self, xi: T) -> T {
        let v = self.profile.v_at(xi);
        self.derivative_of(v, self.profile.slope_at_volume(v))
    }

    /// `(a, a')` at `x_i - shift`.
    #[must_use]
    pub fn tabulate(&self, grid: &UniformGrid<T>, shift: T) -> (Vec<T>, Vec<T>) {
        (0..grid.n)
            .map(|i| {
                let v = self.profile.v_at(grid.x(i) - shift);
                (self.of_volume(v), self.derivative_of(v, self.profile.slope_at_volume(v)))
            })
            .unzip()
    }
}

/// Which side of the pressure difference a truncation cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `clamp(., -k, k)`.
    Both,
    /// `min(k, .)`: removes large positive pressure excess (small volumes).
    Small,
    /// `max(-k, .)`: removes large negative pressure excess (big volumes).
    Big,
}

/// Applies the truncation `psi_k` of the chosen kind to `y`.
#[inline]
#[must_use]
pub fn psi<T: Scalar>(y: T, k: T, kind: Truncation) -> T {
    match kind {
        Truncation::Both => y.max(-k).min(k),
        Truncation::Small => y.min(k),
        Truncation::Big => y.max(-k),
    }
}

/// Volume `v_bar` with `p(v_bar) - p(v~) = psi_k(p(v) - p(v~))`.
#[inline]
#[must_use]
pub fn truncate_volume<T: Scalar>(m: &GasModel<T>, v: T, v_tilde: T, k: T, kind: Truncation) -> T {
    let pt = m.pressure(v_tilde);
    let w = m.pressure(v) - pt;
    let cut = psi(w, k, kind);
    if cut == w {
        v
    } else {
        m.inverse_pressure(pt + cut)
    }
}

/// Pointwise [`truncate_volume`] over a state; `k` must be positive.
pub fn truncate_state<T: Scalar>(m: &GasModel<T>, v: &[T], v_tilde: &[T], k: T, kind: Truncation) -> Result<Vec<T>> {
    if !(k > T::zero()) {
        return Err(ShockError::InvalidArgument(format!("truncation level must be positive, got {k}")));
    }
    if v.len() != v_tilde.len() {
        return Err(ShockError::InvalidArgument("state and profile lengths differ".into()));
    }
    Ok(v.iter().zip(v_tilde).map(|(&vi, &ti)| truncate_volume(m, vi, ti, k, kind)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid;
    use crate::profile::{rankine_hugoniot, solve_profile_vh};
    use proptest::prelude::*;

    fn weight(lambda: f64) -> WeightFunction<f64> {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        let p = solve_profile_vh(&m, &e, 30.0 / e.strength(&m), 0.05).unwrap();
        WeightFunction::new(Arc::new(p), lambda).unwrap()
    }

    #[test]
    fn reference_value_at_origin() {
        let w = weight(0.3);
        assert!((w.a_at(0.0) - 0.86184).abs() < 1e-5);
    }

    #[test]
    fn bounds_sign_and_total_variation() {
        let w = weight(0.3);
        let g = w.profile.grid;
        let (a, da) = w.tabulate(&g, 0.0);
        let sigma = w.profile.ends.sigma;
        for i in 0..g.n {
            assert!(a[i] >= 0.7 - 1e-15 && a[i] <= 1.0 + 1e-15);
            assert!(da[i] < 0.0 && sigma * da[i] > 0.0);
        }
        let tv = trapezoid(&da.iter().map(|d| d.abs()).collect::<Vec<_>>(), g.dx);
        assert!((tv - 0.3).abs() < 1e-2 * 0.3, "{tv}");
        // The weight derivative matches a finite difference of the weight.
        for &xi in &[-3.0, 0.0, 2.5] {
            let fd = (w.a_at(xi + 1e-5) - w.a_at(xi - 1e-5)) / 2e-5;
            assert!((fd - w.da_at(xi)).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_out_of_range_strength() {
        let w = weight(0.3);
        assert!(WeightFunction::new(w.profile.clone(), 0.6).is_err());
        assert!(WeightFunction::new(w.profile.clone(), 0.0).is_err());
    }

    #[test]
    fn rejects_nonpositive_level() {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        assert!(truncate_state(&m, &[1.0], &[1.0], 0.0, Truncation::Both).is_err());
    }

    proptest! {
        #[test]
        fn truncation_identities(v in 0.05_f64..8.0, vt in 0.5_f64..1.5, k in 0.01_f64..2.0) {
            let m = GasModel::standard(2.0, 1.0).unwrap();
            let w = m.pressure(v) - m.pressure(vt);
            let vs = truncate_volume(&m, v, vt, k, Truncation::Small);
            let vb = truncate_volume(&m, v, vt, k, Truncation::Big);
            let vc = truncate_volume(&m, v, vt, k, Truncation::Both);
            let scale = 1e-14 * (1.0 + m.pressure(v) + m.pressure(vt));
            prop_assert!((m.pressure(v) - m.pressure(vs) - (w - k).max(0.0)).abs() <= scale);
            prop_assert!((m.pressure(vb) - m.pressure(v) - (-w - k).max(0.0)).abs() <= scale);
            prop_assert!(((m.pressure(v) - m.pressure(vc)).abs() - (w.abs() - k).max(0.0)).abs() <= scale);
            for kind in [Truncation::Both, Truncation::Small, Truncation::Big] {
                let once = truncate_volume(&m, v, vt, k, kind);
                let twice = truncate_volume(&m, once, vt, k, kind);
                prop_assert!((once - twice).abs() <= 1e-13 * once);
                prop_assert!(m.relative_entropy(v, vt) + 1e-14 >= m.relative_entropy(once, vt));
            }
        }

        #[test]
        fn weight_between_bounds(lambda in 0.01_f64..0.49, xi in -200.0_f64..200.0) {
            let w = weight(lambda);
            let a = w.a_at(xi);
            prop_assert!(a >= 1.0 - lambda - 1e-15 && a <= 1.0 + 1e-15);
            prop_assert!(w.da_at(xi) <= 0.0);
        }
    }
}
