//! Rankine-Hugoniot end states, viscous shock profiles and their diagnostics.
//!
//! The profile solves an autonomous first-order ODE for the volume, started
//! at the midpoint `(v_- + v_+)/2` at `xi = 0` and integrated outward with
//! RK4 on a fine uniform table. Off-table values use cubic Hermite
//! interpolation with the exact ODE slope; beyond the table the linearized
//! exponential tail is used, so evaluation is defined on all of `R`.

use serde::Serialize;

use crate::error::{Result, ShockError};
use crate::grid::UniformGrid;
use crate::scalar::Scalar;
use crate::thermo::GasModel;

/// Which second unknown a state or profile carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Volume and effective velocity `h`.
    Vh,
    /// Volume and velocity `u`.
    Vu,
}

/// Left and right states of a 1-shock with its speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndStates<T> {
    pub v_minus: T,
    pub u_minus: T,
    pub v_plus: T,
    pub u_plus: T,
    /// Shock speed, negative for a 1-shock.
    pub sigma: T,
}

/// Completes `(v_-, u_-, v_+)` into a 1-shock; requires `0 < v_+ < v_-`.
pub fn rankine_hugoniot<T: Scalar>(m: &GasModel<T>, v_minus: T, u_minus: T, v_plus: T) -> Result<EndStates<T>> {
    if !(v_plus > T::zero() && v_minus.is_finite() && u_minus.is_finite()) {
        return Err(ShockError::InvalidShock(format!("volumes must be positive and finite, got v_+ = {v_plus}")));
    }
    if !(v_plus < v_minus) {
        return Err(ShockError::InvalidShock(format!(
            "a 1-shock needs v_+ < v_-, got v_- = {v_minus}, v_+ = {v_plus}"
        )));
    }
    let jump_p = m.pressure(v_plus) - m.pressure(v_minus);
    let sigma = -(jump_p / (v_minus - v_plus)).sqrt();
    let u_plus = u_minus - sigma * (v_plus - v_minus);
    Ok(EndStates { v_minus, u_minus, v_plus, u_plus, sigma })
}

impl<T: Scalar> EndStates<T> {
    /// Shock strength `|p(v_-) - p(v_+)|`.
    #[must_use]
    pub fn strength(&self, m: &GasModel<T>) -> T {
        (m.pressure(self.v_minus) - m.pressure(self.v_plus)).abs()
    }

    /// Pressure jump `p(v_+) - p(v_-) > 0`.
    #[must_use]
    pub fn pressure_jump(&self, m: &GasModel<T>) -> T {
        m.pressure(self.v_plus) - m.pressure(self.v_minus)
    }

    /// Rankine-Hugoniot defects for the `(v, u)` system; both vanish for a valid shock.
    #[must_use]
    pub fn rh_defects(&self, m: &GasModel<T>) -> (T, T) {
        let dv = self.v_plus - self.v_minus;
        let du = self.u_plus - self.u_minus;
        let dp = m.pressure(self.v_plus) - m.pressure(self.v_minus);
        (-self.sigma * dv - du, -self.sigma * du + dp)
    }

    /// Lax conditions for a 1-shock: `lambda_1(U_+) < sigma < lambda_1(U_-)`.
    #[must_use]
    pub fn lax_holds(&self, m: &GasModel<T>) -> bool {
        let lam_minus = -m.sound_speed(self.v_minus);
        let lam_plus = -m.sound_speed(self.v_plus);
        lam_plus < self.sigma && self.sigma < lam_minus
    }
}

/// Inviscid shock `(v, u)` at `(x, t)`; the discontinuity point belongs to the right state.
#[must_use]
pub fn entropy_shock<T: Scalar>(ends: &EndStates<T>, x: T, t: T) -> (T, T) {
    if x - ends.sigma * t < T::zero() {
        (ends.v_minus, ends.u_minus)
    } else {
        (ends.v_plus, ends.u_plus)
    }
}

/// Tabulated viscous shock profile.
#[derive(Debug, Clone)]
pub struct ShockProfile<T> {
    pub model: GasModel<T>,
    pub ends: EndStates<T>,
    pub formulation: Formulation,
    /// User grid the profile was tabulated on.
    pub grid: UniformGrid<T>,
    pub v: Vec<T>,
    pub u: Vec<T>,
    pub h: Vec<T>,
    table: UniformGrid<T>,
    table_v: Vec<T>,
    rate_minus: T,
    rate_plus: T,
}

impl<T: Scalar> ShockProfile<T> {
    /// `sigma^2 (v - v_-) + p(v) - p(v_-)`, non-positive between the end states.
    #[inline]
    #[must_use]
    pub fn chord(&self, v: T) -> T {
        chord(&self.model, &self.ends, v)
    }

    /// Exact ODE slope at volume `v`.
    #[inline]
    #[must_use]
    pub fn slope_at_volume(&self, v: T) -> T {
        ode_rhs(&self.model, &self.ends, self.formulation, v)
    }

    /// `v~(xi)` for any real `xi`.
    #[must_use]
    pub fn v_at(&self, xi: T) -> T {
        let t = &self.table;
        let n = t.n;
        let s = (xi - t.x0) / t.dx;
        if s <= T::zero() {
            let v0 = self.table_v[0];
            return self.ends.v_minus + (v0 - self.ends.v_minus) * (self.rate_minus * (xi - t.x0)).exp();
        }
        let last = T::from_usize_lossy(n - 1);
        if s >= last {
            let vn = self.table_v[n - 1];
            return self.ends.v_plus + (vn - self.ends.v_plus) * (self.rate_plus * (xi - t.last())).exp();
        }
        let k = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let tau = s - T::from_usize_lossy(k);
        let (y0, y1) = (self.table_v[k], self.table_v[k + 1]);
        let (mut d0, mut d1) = (self.slope_at_volume(y0) * t.dx, self.slope_at_volume(y1) * t.dx);
        // Fritsch-Carlson limiter keeps the interpolant monotone.
        let delta = y1 - y0;
        if delta == T::zero() {
            d0 = T::zero();
            d1 = T::zero();
        } else {
            let (a, b) = (d0 / delta, d1 / delta);
            let r2 = a * a + b * b;
            if r2 > T::c(9.0) {
                let scale = T::c(3.0) / r2.sqrt();
                d0 = d0 * scale;
                d1 = d1 * scale;
            }
        }
        let tau2 = tau * tau;
        let tau3 = tau2 * tau;
        let two = T::c(2.0);
        let three = T::c(3.0);
        let h00 = two * tau3 - three * tau2 + T::one();
        let h10 = tau3 - two * tau2 + tau;
        let h01 = -two * tau3 + three * tau2;
        let h11 = tau3 - tau2;
        h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
    }

    /// `v~'(xi)` from the ODE at the interpolated volume.
    #[must_use]
    pub fn dv_at(&self, xi: T) -> T {
        self.slope_at_volume(self.v_at(xi))
    }

    /// `u~ = u_- - sigma (v~ - v_-)`.
    #[must_use]
    pub fn u_of_volume(&self, v: T) -> T {
        self.ends.u_minus - self.ends.sigma * (v - self.ends.v_minus)
    }

    /// `h~ = u_- + (p(v~) - p(v_-)) / sigma`.
    #[must_use]
    pub fn h_of_volume(&self, v: T) -> T {
        let m = &self.model;
        self.ends.u_minus + (m.pressure(v) - m.pressure(self.ends.v_minus)) / self.ends.sigma
    }

    /// Second component matching `formulation` at volume `v`.
    #[must_use]
    pub fn second_of_volume(&self, v: T, formulation: Formulation) -> T {
        match formulation {
            Formulation::Vh => self.h_of_volume(v),
            Formulation::Vu => self.u_of_volume(v),
        }
    }

    /// Shock strength of the underlying end states.
    #[must_use]
    pub fn strength(&self) -> T {
        self.ends.strength(&self.model)
    }

    /// Samples `(v~, second component)` on an arbitrary grid, shifted by `shift`.
    #[must_use]
    pub fn sample(&self, grid: &UniformGrid<T>, shift: T, formulation: Formulation) -> (Vec<T>, Vec<T>) {
        let v: Vec<T> = (0..grid.n).map(|i| self.v_at(grid.x(i) - shift)).collect();
        let w = v.iter().map(|&vi| self.second_of_volume(vi, formulation)).collect();
        (v, w)
    }

    /// Largest deviation of the tabulated volume from the far-field states at the grid ends.
    #[must_use]
    pub fn far_field_gap(&self) -> T {
        let n = self.v.len();
        (self.v[0] - self.ends.v_minus).abs().max((self.v[n - 1] - self.ends.v_plus).abs())
    }

    /// Max of `|D_c v~ - G(v~)|` over interior nodes, `D_c` the centered difference.
    #[must_use]
    pub fn ode_residual(&self) -> T {
        let dx = self.grid.dx;
        let mut worst = T::zero();
        for i in 1..self.v.len() - 1 {
            let fd = (self.v[i + 1] - self.v[i - 1]) / (T::c(2.0) * dx);
            worst = worst.max((fd - self.slope_at_volume(self.v[i])).abs());
        }
        worst
    }

    /// Max of `|sigma (v~ - v_-) + (p(v~) - p(v_-))/sigma - s v~^beta D_c p(v~)|`, with `s` the
    /// `(v, h)` diffusion scale.
    #[must_use]
    pub fn first_integral_residual(&self) -> T {
        let m = &self.model;
        let e = &self.ends;
        let dx = self.grid.dx;
        let s = m.vh_diffusion_scale();
        let pm = m.pressure(e.v_minus);
        let mut worst = T::zero();
        for i in 1..self.v.len() - 1 {
            let dp = (m.pressure(self.v[i + 1]) - m.pressure(self.v[i - 1])) / (T::c(2.0) * dx);
            let lhs = s * m.v_beta(self.v[i]) * dp;
            let rhs = e.sigma * (self.v[i] - e.v_minus) + (m.pressure(self.v[i]) - pm) / e.sigma;
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

#[inline]
fn chord<T: Scalar>(m: &GasModel<T>, e: &EndStates<T>, v: T) -> T {
    e.sigma * e.sigma * (v - e.v_minus) + m.pressure(v) - m.pressure(e.v_minus)
}

#[inline]
fn ode_rhs<T: Scalar>(m: &GasModel<T>, e: &EndStates<T>, formulation: Formulation, v: T) -> T {
    match formulation {
        // s v^beta p'(v) v' = sigma (v - v_-) + (p(v) - p(v_-)) / sigma
        Formulation::Vh => {
            let rhs = e.sigma * (v - e.v_minus) + (m.pressure(v) - m.pressure(e.v_minus)) / e.sigma;
            rhs / (m.vh_diffusion_scale() * m.v_beta(v) * m.pressure_prime(v))
        }
        // nu (mu(v)/v) (-sigma v') = sigma^2 (v - v_-) + p(v) - p(v_-)
        Formulation::Vu => chord(m, e, v) / (-e.sigma * m.nu * m.viscosity(v) / v),
    }
}

/// Linearization of the ODE at an end state: `F'(v) / (-sigma D(v))`.
fn endpoint_rate<T: Scalar>(m: &GasModel<T>, e: &EndStates<T>, v: T) -> T {
    (e.sigma * e.sigma + m.pressure_prime(v)) / (-e.sigma * m.diffusivity(v))
}

fn solve_profile<T: Scalar>(
    m: &GasModel<T>,
    ends: &EndStates<T>,
    xi_extent: T,
    dx: T,
    formulation: Formulation,
) -> Result<ShockProfile<T>> {
    if ends.v_plus >= ends.v_minus {
        return Err(ShockError::InvalidShock("profile needs v_+ < v_-".into()));
    }
    let (d_rh1, d_rh2) = ends.rh_defects(m);
    let tol = T::c(1e3) * T::epsilon() * (T::one() + m.pressure(ends.v_plus) + ends.u_plus.abs());
    if d_rh1.abs() > tol || d_rh2.abs() > tol {
        return Err(ShockError::InvalidShock("end states violate the Rankine-Hugoniot conditions".into()));
    }
    let grid = UniformGrid::centered(xi_extent, dx)?;

    // Fine step from the ODE Lipschitz constant on [v_+, v_-].
    let samples = 200;
    let mut lip = T::zero();
    let width = ends.v_minus - ends.v_plus;
    for j in 0..=samples {
        let v = ends.v_plus + width * T::from_usize_lossy(j) / T::from_usize_lossy(samples);
        let hv = T::c(1e-6) * width;
        let d = (ode_rhs(m, ends, formulation, v + hv) - ode_rhs(m, ends, formulation, v - hv)) / (T::c(2.0) * hv);
        lip = lip.max(d.abs());
    }
    let h_target = T::c(0.01) / lip.max(T::c(1e-12));
    let refine = (dx / h_target).ceil().max(T::one()).to_usize().unwrap_or(1).min(1 << 16);
    let h = dx / T::from_usize_lossy(refine);
    let half_cells = (T::c(2.0) * (-grid.x0) / h).ceil().to_usize().unwrap_or(0).max(8);
    let table = UniformGrid::new(-T::from_usize_lossy(half_cells) * h, h, 2 * half_cells + 1)?;

    let rk4 = |v: T, step: T| {
        let f = |x: T| ode_rhs(m, ends, formulation, x);
        let k1 = f(v);
        let k2 = f(v + T::c(0.5) * step * k1);
        let k3 = f(v + T::c(0.5) * step * k2);
        let k4 = f(v + step * k3);
        v + step / T::c(6.0) * (k1 + T::c(2.0) * k2 + T::c(2.0) * k3 + k4)
    };
    let mut table_v = vec![T::zero(); table.n];
    let mid = half_cells;
    table_v[mid] = T::c(0.5) * (ends.v_minus + ends.v_plus);
    for k in mid + 1..table.n {
        table_v[k] = rk4(table_v[k - 1], h);
    }
    for k in (0..mid).rev() {
        table_v[k] = rk4(table_v[k + 1], -h);
    }
    for k in 0..table.n {
        let v = table_v[k];
        let ok = v.is_finite() && v > ends.v_plus && v < ends.v_minus && (k == 0 || v < table_v[k - 1]);
        if !ok {
            return Err(ShockError::ProfileFailure(format!(
                "profile left (v_+, v_-) or lost monotonicity at xi = {}",
                table.x(k)
            )));
        }
    }

    let mut profile = ShockProfile {
        model: *m,
        ends: *ends,
        formulation,
        grid,
        v: Vec::new(),
        u: Vec::new(),
        h: Vec::new(),
        table,
        table_v,
        rate_minus: endpoint_rate(m, ends, ends.v_minus),
        rate_plus: endpoint_rate(m, ends, ends.v_plus),
    };
    profile.v = (0..grid.n).map(|i| profile.v_at(grid.x(i))).collect();
    profile.u = profile.v.iter().map(|&v| profile.u_of_volume(v)).collect();
    profile.h = profile.v.iter().map(|&v| profile.h_of_volume(v)).collect();
    Ok(profile)
}

/// Profile of the `(v, h)` system (diffusion `s (v^beta p_xi)_xi`, `s = nu b / gamma`).
pub fn solve_profile_vh<T: Scalar>(m: &GasModel<T>, ends: &EndStates<T>, xi_extent: T, dx: T) -> Result<ShockProfile<T>> {
    solve_profile(m, ends, xi_extent, dx, Formulation::Vh)
}

/// Profile of the `(v, u)` system with viscosity `nu mu(v)`.
pub fn solve_profile_vu<T: Scalar>(m: &GasModel<T>, ends: &EndStates<T>, xi_extent: T, dx: T) -> Result<ShockProfile<T>> {
    solve_profile(m, ends, xi_extent, dx, Formulation::Vu)
}

/// Exponential tail fit and derivative bounds of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiagnostics {
    /// Decay rate of `|v~'|` as `xi -> -inf`.
    pub rate_minus: f64,
    /// Decay rate of `|v~'|` as `xi -> +inf`.
    pub rate_plus: f64,
    /// `max |v~'| / eps^2` over the grid.
    pub upper_constant: f64,
    /// `min |v~'| / eps^2` over `|xi| <= 1/eps`.
    pub lower_constant: f64,
    /// Largest `|v~ - v_+-|` at the grid ends.
    pub far_field_gap: f64,
    pub fit_points: usize,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits `log|v~'|` against `|xi|` on the outer 30% of each half of the grid.
pub fn tail_diagnostics<T: Scalar>(profile: &ShockProfile<T>) -> Result<TailDiagnostics> {
    let g = &profile.grid;
    let eps = profile.strength().f64();
    let half = (g.n - 1) / 2;
    let outer = (0.3 * half as f64).floor() as usize;
    if outer < 50 {
        return Err(ShockError::InvalidArgument(format!(
            "tail fit needs at least 50 points per side, grid gives {outer}"
        )));
    }
    let collect = |range: std::ops::Range<usize>| {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in range {
            let d = profile.slope_at_volume(profile.v[i]).f64().abs();
            if d > 0.0 {
                xs.push(g.x(i).f64().abs());
                ys.push(d.ln());
            }
        }
        (xs, ys)
    };
    let (xl, yl) = collect(0..outer);
    let (xr, yr) = collect(g.n - outer..g.n);
    let mut upper = 0.0_f64;
    let mut lower = f64::INFINITY;
    for i in 0..g.n {
        let d = profile.slope_at_volume(profile.v[i]).f64().abs();
        upper = upper.max(d);
        if g.x(i).f64().abs() <= 1.0 / eps {
            lower = lower.min(d);
        }
    }
    Ok(TailDiagnostics {
        rate_minus: -fit_slope(&xl, &yl),
        rate_plus: -fit_slope(&xr, &yr),
        upper_constant: upper / (eps * eps),
        lower_constant: lower / (eps * eps),
        far_field_gap: profile.far_field_gap().f64(),
        fit_points: outer,
    })
}

/// Diagnostics of `y = (p(v~) - p(v_-)) / (p(v_+) - p(v_-))`.
#[derive(Debug, Clone, PartialEq)]
pub struct YDiagnostics {
    pub y: Vec<f64>,
    /// `gamma sqrt(-p'(v_-)) p(v_-) / (gamma + 1)`.
    pub alpha_gamma: f64,
    /// `max |s v~^beta y' / (y(1-y)) - eps/(2 alpha_gamma)| / eps^2`.
    pub deviation_constant: f64,
    pub y_in_unit_interval: bool,
    pub y_increasing: bool,
}

/// Computes `y` on the profile grid and the normalized deviation of its logistic rate.
///
/// Uses the identity `s v~^beta y' = F(v~) / (sigma eps)`, with `F` the chord function, so
/// the ratio stays well conditioned in the tails. Only nodes with `y(1-y) >= 1e-6` enter.
#[must_use]
pub fn change_of_variables_y<T: Scalar>(profile: &ShockProfile<T>) -> YDiagnostics {
    let m = &profile.model;
    let e = &profile.ends;
    let eps = profile.strength().f64();
    let pm = m.pressure(e.v_minus);
    let jump = e.pressure_jump(m);
    let y: Vec<f64> = profile.v.iter().map(|&v| ((m.pressure(v) - pm) / jump).f64()).collect();
    let g = m.gamma.f64();
    let alpha_gamma = g * m.sound_speed(e.v_minus).f64() * pm.f64() / (g + 1.0);
    let target = eps / (2.0 * alpha_gamma);
    let mut worst = 0.0_f64;
    for (i, &yi) in y.iter().enumerate() {
        let w = yi * (1.0 - yi);
        if w >= 1e-6 {
            let rate = profile.chord(profile.v[i]).f64() / (e.sigma.f64() * eps * w);
            worst = worst.max((rate - target).abs());
        }
    }
    YDiagnostics {
        y_in_unit_interval: y.iter().all(|&t| t > 0.0 && t < 1.0),
        y_increasing: y.windows(2).all(|p| p[1] > p[0]),
        y,
        alpha_gamma,
        deviation_constant: worst / (eps * eps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gas() -> GasModel<f64> {
        GasModel::standard(2.0, 1.0).unwrap()
    }

    fn reference() -> (GasModel<f64>, EndStates<f64>) {
        let m = gas();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        (m, e)
    }

    #[test]
    fn rankine_hugoniot_reference_values() {
        let (m, e) = reference();
        let eps_direct = 1.0 / 0.81 - 1.0;
        assert!((e.strength(&m) - eps_direct).abs() < 1e-15);
        assert!((e.strength(&m) - 0.234568).abs() < 1e-6);
        assert!((e.sigma + (eps_direct / 0.1).sqrt()).abs() < 1e-14);
        assert!((e.sigma + 1.53156).abs() < 1e-5);
        assert!((e.u_plus + 0.153156).abs() < 1e-6);
        assert!(e.lax_holds(&m));
    }

    #[test]
    fn rejects_non_compressive_states() {
        let m = gas();
        assert!(rankine_hugoniot(&m, 0.9, 0.0, 1.0).is_err());
        assert!(rankine_hugoniot(&m, 1.0, 0.0, 1.0).is_err());
        assert!(rankine_hugoniot(&m, 1.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn entropy_shock_tie_goes_right() {
        let (_, e) = reference();
        assert_eq!(entropy_shock(&e, 0.0, 0.0), (e.v_plus, e.u_plus));
        assert_eq!(entropy_shock(&e, e.sigma * 2.0, 2.0), (e.v_plus, e.u_plus));
        assert_eq!(entropy_shock(&e, -1e-9, 0.0), (e.v_minus, e.u_minus));
    }

    #[test]
    fn profile_normalization_and_monotonicity() {
        let (m, e) = reference();
        let eps = e.strength(&m);
        let p = solve_profile_vh(&m, &e, 30.0 / eps, 0.05).unwrap();
        let k = p.grid.nearest(0.0).unwrap();
        assert!((p.v[k] - 0.95).abs() < 1e-14);
        assert!(p.v.windows(2).all(|w| w[1] < w[0]));
        assert!(p.v.iter().all(|&v| v > e.v_plus && v < e.v_minus));
        assert!(p.v.iter().all(|&v| chord(&m, &e, v) <= 0.0));
    }

    #[test]
    fn profile_residual_is_second_order() {
        let (m, e) = reference();
        let eps = e.strength(&m);
        let coarse = solve_profile_vh(&m, &e, 30.0 / eps, 0.2).unwrap();
        let fine = solve_profile_vh(&m, &e, 30.0 / eps, 0.1).unwrap();
        let order = (coarse.ode_residual() / fine.ode_residual()).log2();
        assert!(order >= 1.8, "order {order}");
        let order = (coarse.first_integral_residual() / fine.first_integral_residual()).log2();
        assert!(order >= 1.8, "order {order}");
    }

    #[test]
    fn effective_velocity_matches_transform_of_velocity_profile() {
        let (m, e) = reference();
        let eps = e.strength(&m);
        let pu = solve_profile_vu(&m, &e, 30.0 / eps, 0.05).unwrap();
        let ph = solve_profile_vh(&m, &e, 30.0 / eps, 0.05).unwrap();
        let h = m.bd_velocity(&pu.v, &pu.u, pu.grid.dx);
        let n = h.len();
        let err = crate::grid::max_abs_diff(&h[1..n - 1], &ph.h[1..n - 1]);
        assert!(err < 1e-6, "{err}");
        assert!(crate::grid::max_abs_diff(&pu.v, &ph.v) < 1e-12);
    }

    #[test]
    fn viscosity_rescales_profile() {
        let (m, e) = reference();
        let eps = e.strength(&m);
        let m_half = m.with_nu(0.5).unwrap();
        let p1 = solve_profile_vu(&m, &e, 30.0 / eps, 0.05).unwrap();
        let ph = solve_profile_vu(&m_half, &e, 15.0 / eps, 0.025).unwrap();
        for &xi in &[-7.0, -1.3, 0.0, 0.4, 3.3, 11.0] {
            assert!((ph.v_at(xi) - p1.v_at(xi / 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluation_beyond_table_continues_the_tail() {
        let (m, e) = reference();
        let eps = e.strength(&m);
        let p = solve_profile_vh(&m, &e, 30.0 / eps, 0.1).unwrap();
        let far = 5.0 * 30.0 / eps;
        assert!(p.v_at(far) >= e.v_plus && p.v_at(far) - e.v_plus < 1e-12);
        assert!(p.v_at(-far) <= e.v_minus && e.v_minus - p.v_at(-far) < 1e-12);
        let edge = p.table.last();
        assert!((p.v_at(edge - 1e-9) - p.v_at(edge + 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn weight_reference_value() {
        // a(0) = 1 - lambda (p(0.95) - p(1)) / (p(0.9) - p(1)) at lambda = 0.3.
        let (m, e) = reference();
        let a0: f64 = 1.0 - 0.3 * (1.0 / 0.9025 - 1.0) / (1.0 / 0.81 - 1.0);
        assert!((a0 - 0.86184).abs() < 1e-5);
        let p = solve_profile_vh(&m, &e, 30.0 / e.strength(&m), 0.05).unwrap();
        let y0 = (m.pressure(p.v_at(0.0)) - 1.0) / e.pressure_jump(&m);
        assert!((1.0 - 0.3 * y0 - a0).abs() < 1e-14);
    }

    #[test]
    fn alpha_gamma_reference_and_bounded_deviation() {
        let (m, e) = reference();
        let p = solve_profile_vh(&m, &e, 30.0 / e.strength(&m), 0.1).unwrap();
        let d = change_of_variables_y(&p);
        assert!((d.alpha_gamma - 2.0 * 2.0_f64.sqrt() / 3.0).abs() < 1e-14);
        assert!((d.alpha_gamma - 0.94281).abs() < 1e-5);
        assert!(d.y_in_unit_interval && d.y_increasing);
        let mut constants = Vec::new();
        for vp in [0.9, 0.95, 0.975] {
            let e = rankine_hugoniot(&m, 1.0, 0.0, vp).unwrap();
            let eps = e.strength(&m);
            let p = solve_profile_vh(&m, &e, 30.0 / eps, 1.0 / (40.0 * eps)).unwrap();
            constants.push(change_of_variables_y(&p).deviation_constant);
        }
        assert!(constants.windows(2).all(|c| c[1] <= 2.2 * c[0]), "{constants:?}");
    }

    #[test]
    fn tail_rates_scale_with_strength() {
        let m = gas();
        let mut ratios = Vec::new();
        for eps_target in [0.05, 0.1, 0.2] {
            let vp = 1.0 / (1.0_f64 + eps_target).sqrt();
            let e = rankine_hugoniot(&m, 1.0, 0.0, vp).unwrap();
            let eps = e.strength(&m);
            let p = solve_profile_vh(&m, &e, 30.0 / eps, 1.0 / (40.0 * eps)).unwrap();
            let t = tail_diagnostics(&p).unwrap();
            ratios.push(t.rate_minus / eps);
            ratios.push(t.rate_plus / eps);
            assert!(t.upper_constant.is_finite() && t.lower_constant > 0.0);
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        assert!(hi <= 1.2 * lo, "{ratios:?}");
    }

    #[test]
    fn tail_fit_needs_enough_points() {
        let (m, e) = reference();
        let p = solve_profile_vh(&m, &e, 20.0, 0.5).unwrap();
        assert!(tail_diagnostics(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rankine_hugoniot_defects_vanish(g in 1.1_f64..3.0, vm in 0.5_f64..2.0, frac in 0.3_f64..0.99, um in -1.0_f64..1.0) {
            let m = GasModel::standard(g, g - 0.5 * (g - 1.0).min(0.9)).unwrap();
            let e = rankine_hugoniot(&m, vm, um, frac * vm).unwrap();
            let (d1, d2) = e.rh_defects(&m);
            prop_assert!(d1.abs() < 1e-12 && d2.abs() < 1e-12 * (1.0 + m.pressure(e.v_plus)));
            prop_assert!(e.sigma < 0.0 && e.u_plus < e.u_minus);
            prop_assert!(e.lax_holds(&m));
        }

        #[test]
        fn profiles_are_monotone_between_states(frac in 0.75_f64..0.98) {
            let m = gas();
            let e = rankine_hugoniot(&m, 1.0, 0.0, frac).unwrap();
            let eps = e.strength(&m);
            let p = solve_profile_vh(&m, &e, 30.0 / eps, 1.0 / (20.0 * eps)).unwrap();
            prop_assert!(p.v.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(p.v.iter().all(|&v| v > e.v_plus && v < e.v_minus));
            prop_assert!(p.h.windows(2).all(|w| w[1] < w[0]));
        }
    }
}
