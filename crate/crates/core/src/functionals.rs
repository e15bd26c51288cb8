//! Weighted relative-entropy functionals of a `(v, h)` state against the shifted profile.
//!
//! All integrals use the trapezoid rule on the state grid. The reference
//! (profile and weight) is evaluated at `xi - shift` while the state stays
//! put. `w = p(v) - p(v~)`, `dh = h - h~`, and `Omega = {w <= delta}`
//! (ties belong to `Omega`). Diffusive terms carry the `(v, h)` diffusion
//! scale `s = nu b / gamma`, which is 1 in the standard setting.

use serde::Serialize;

use crate::error::{Result, ShockError};
use crate::grid::{derivative, trapezoid_weights};
use crate::profile::Formulation;
use crate::scalar::Scalar;
use crate::solver::FluidState;
use crate::weights::{truncate_volume, Truncation, WeightFunction};

/// Profile and weight data at the shifted abscissas `x_i - shift`.
#[derive(Debug, Clone)]
pub struct ShiftedReference<T> {
    pub v: Vec<T>,
    pub dv: Vec<T>,
    pub h: Vec<T>,
    pub dh: Vec<T>,
    /// `d_xi p(v~)`.
    pub dp: Vec<T>,
    pub a: Vec<T>,
    pub da: Vec<T>,
}

impl<T: Scalar> ShiftedReference<T> {
    #[must_use]
    pub fn new(weight: &WeightFunction<T>, grid: &crate::grid::UniformGrid<T>, shift: T) -> Self {
        let p = &weight.profile;
        let m = &p.model;
        let n = grid.n;
        let mut r = Self {
            v: Vec::with_capacity(n),
            dv: Vec::with_capacity(n),
            h: Vec::with_capacity(n),
            dh: Vec::with_capacity(n),
            dp: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            da: Vec::with_capacity(n),
        };
        for i in 0..n {
            let v = p.v_at(grid.x(i) - shift);
            let dv = p.slope_at_volume(v);
            let dp = m.pressure_prime(v) * dv;
            r.v.push(v);
            r.dv.push(dv);
            r.h.push(p.h_of_volume(v));
            r.dh.push(dp / p.ends.sigma);
            r.dp.push(dp);
            r.a.push(weight.of_volume(v));
            r.da.push(weight.derivative_of(v, dv));
        }
        r
    }
}

/// Every functional at one time instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport<T> {
    pub time: T,
    pub shift: T,
    /// `int a eta(U | U~)`.
    pub weighted_entropy: T,
    pub y: T,
    pub j_bad: T,
    pub j_good: T,
    pub b1: T,
    pub b2_minus: T,
    pub b2_plus: T,
    pub b3: T,
    pub b4: T,
    pub b5: T,
    pub g1_minus: T,
    pub g1_plus: T,
    pub g2: T,
    pub d: T,
    pub b_delta: T,
    pub g_delta: T,
    pub y_g: T,
    pub y_b: T,
    pub y_l: T,
    pub y_s: T,
    /// Volume-only quantities over the whole line.
    pub y_g_line: T,
    pub i1: T,
    pub i2: T,
    /// Unweighted `int eta(U | U~)`.
    pub plain_entropy: T,
    /// `int |v~'| Q(v | v~)`.
    pub layer_entropy: T,
    /// `int v^beta |w_xi|^2` without the diffusion scale.
    pub gradient_energy: T,
}

impl<T: Scalar> FunctionalReport<T> {
    /// `|(J_bad - J_good) - (B_delta - G_delta)|`.
    #[must_use]
    pub fn split_defect(&self) -> T {
        ((self.j_bad - self.j_good) - (self.b_delta - self.g_delta)).abs()
    }

    /// `|Y - (Y_g + Y_b + Y_l + Y_s)|`.
    #[must_use]
    pub fn y_split_defect(&self) -> T {
        (self.y - (self.y_g + self.y_b + self.y_l + self.y_s)).abs()
    }

    /// `Y Xdot + J_bad - J_good` for a given shift velocity.
    #[must_use]
    pub fn entropy_rate(&self, shift_velocity: T) -> T {
        shift_velocity * self.y + self.j_bad - self.j_good
    }

    /// Components that must be non-negative: `G1-, G1+, G2, D, I1, I2`.
    #[must_use]
    pub fn good_parts(&self) -> [T; 6] {
        [self.g1_minus, self.g1_plus, self.g2, self.d, self.i1, self.i2]
    }
}

fn require_vh<T: Scalar>(state: &FluidState<T>) -> Result<()> {
    if state.formulation != Formulation::Vh {
        return Err(ShockError::InvalidArgument("functionals need a (v, h) state".into()));
    }
    Ok(())
}

/// `int a(xi - X) eta(U(xi) | U~(xi - X)) d xi`.
pub fn weighted_entropy<T: Scalar>(state: &FluidState<T>, weight: &WeightFunction<T>, shift: T) -> Result<T> {
    require_vh(state)?;
    let m = &state.model;
    let p = &weight.profile;
    let q = trapezoid_weights(state.grid.n, state.grid.dx);
    Ok((0..state.grid.n)
        .map(|i| {
            let vt = p.v_at(state.grid.x(i) - shift);
            q[i] * weight.of_volume(vt) * m.eta_rel((state.v[i], state.w[i]), (vt, p.h_of_volume(vt)))
        })
        .sum())
}

/// Evaluates every functional at shift `shift` with threshold `delta`.
pub fn compute_report<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    shift: T,
    delta: T,
) -> Result<FunctionalReport<T>> {
    require_vh(state)?;
    let r = ShiftedReference::new(weight, &state.grid, shift);
    Ok(report_with_reference(state, &r, weight.profile.ends.sigma, shift, delta))
}

/// [`compute_report`] with a precomputed reference.
#[must_use]
pub fn report_with_reference<T: Scalar>(
    state: &FluidState<T>,
    r: &ShiftedReference<T>,
    sigma: T,
    shift: T,
    delta: T,
) -> FunctionalReport<T> {
    let m = &state.model;
    let n = state.grid.n;
    let q = trapezoid_weights(n, state.grid.dx);
    let s = m.vh_diffusion_scale();
    let wv: Vec<T> = (0..n).map(|i| m.pressure(state.v[i]) - m.pressure(r.v[i])).collect();
    let wx = derivative(&wv, state.grid.dx);
    let half = T::c(0.5);
    let z = T::zero();
    let mut out = FunctionalReport {
        time: state.time,
        shift,
        weighted_entropy: z,
        y: z,
        j_bad: z,
        j_good: z,
        b1: z,
        b2_minus: z,
        b2_plus: z,
        b3: z,
        b4: z,
        b5: z,
        g1_minus: z,
        g1_plus: z,
        g2: z,
        d: z,
        b_delta: z,
        g_delta: z,
        y_g: z,
        y_b: z,
        y_l: z,
        y_s: z,
        y_g_line: z,
        i1: z,
        i2: z,
        plain_entropy: z,
        layer_entropy: z,
        gradient_energy: z,
    };
    for i in 0..n {
        let (v, a, da) = (state.v[i], r.a[i], r.da[i]);
        let qi = q[i];
        let dhh = state.w[i] - r.h[i];
        let w = wv[i];
        let qrel = m.relative_entropy(v, r.v[i]);
        let prel = m.relative_pressure(v, r.v[i]);
        let vb = s * m.v_beta(v);
        let vtb = s * m.v_beta(r.v[i]);
        let eta = half * dhh * dhh + qrel;
        let dvol = v - r.v[i];

        let y_i = -da * eta + a * (-r.dp[i] * dvol + r.dh[i] * dhh);
        let b1 = sigma * a * r.dv[i] * prel;
        let b3 = -da * vb * w * wx[i];
        let b4 = -da * w * (vb - vtb) * r.dp[i];
        let b5 = -a * wx[i] * (vb - vtb) * r.dp[i];
        let g2 = sigma * da * qrel;
        let d = a * vb * wx[i] * wx[i];
        let jb = da * w * dhh + b1 + b3 + b4 + b5;
        let jg = half * sigma * da * dhh * dhh + g2 + d;
        let yg_i = -da * w * w / (T::c(2.0) * sigma * sigma) - da * qrel - a * r.dp[i] * dvol + a * r.dh[i] * w / sigma;

        out.weighted_entropy = out.weighted_entropy + qi * a * eta;
        out.plain_entropy = out.plain_entropy + qi * eta;
        out.layer_entropy = out.layer_entropy + qi * r.dv[i].abs() * qrel;
        out.gradient_energy = out.gradient_energy + qi * m.v_beta(v) * wx[i] * wx[i];
        out.y = out.y + qi * y_i;
        out.j_bad = out.j_bad + qi * jb;
        out.j_good = out.j_good + qi * jg;
        out.b1 = out.b1 + qi * b1;
        out.b3 = out.b3 + qi * b3;
        out.b4 = out.b4 + qi * b4;
        out.b5 = out.b5 + qi * b5;
        out.g2 = out.g2 + qi * g2;
        out.d = out.d + qi * d;
        out.y_g_line = out.y_g_line + qi * yg_i;
        out.i1 = out.i1 + qi * b1;
        out.i2 = out.i2 + qi * da * w * w / (T::c(2.0) * sigma);
        if w <= delta {
            let zeta = dhh - w / sigma;
            out.b2_plus = out.b2_plus + qi * da * w * w / (T::c(2.0) * sigma);
            out.g1_plus = out.g1_plus + qi * half * sigma * da * zeta * zeta;
            out.y_g = out.y_g + qi * yg_i;
            out.y_b = out.y_b + qi * (-half * da * zeta * zeta - da * w * zeta / sigma);
            out.y_l = out.y_l + qi * a * r.dh[i] * zeta;
        } else {
            out.b2_minus = out.b2_minus + qi * da * w * dhh;
            out.g1_minus = out.g1_minus + qi * half * sigma * da * dhh * dhh;
            out.y_s = out.y_s + qi * y_i;
        }
    }
    out.b_delta = out.b1 + out.b2_minus + out.b2_plus + out.b3 + out.b4 + out.b5;
    out.g_delta = out.g1_minus + out.g1_plus + out.g2 + out.d;
    out
}

/// `Y_g` evaluated on the volume alone over the whole line (`h` plays no role).
pub fn y_good_of_volume<T: Scalar>(state: &FluidState<T>, r: &ShiftedReference<T>, sigma: T, v: &[T]) -> T {
    let m = &state.model;
    let q = trapezoid_weights(state.grid.n, state.grid.dx);
    (0..v.len())
        .map(|i| {
            let w = m.pressure(v[i]) - m.pressure(r.v[i]);
            let yg = -r.da[i] * w * w / (T::c(2.0) * sigma * sigma) - r.da[i] * m.relative_entropy(v[i], r.v[i])
                - r.a[i] * r.dp[i] * (v[i] - r.v[i])
                + r.a[i] * r.dh[i] * w / sigma;
            q[i] * yg
        })
        .sum()
}

/// Normalized diagnostics available when `|Y| <= eps^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallYDiagnostics {
    /// `(int |a'| |dh|^2 + int |a'| Q(v|v~)) lambda / eps^2`.
    pub weighted_l2: f64,
    /// `|Y_g(v_bar)| lambda / eps^2`, `v_bar` truncated at level `delta3`.
    pub truncated_y_good: f64,
}

/// Returns `None` ("not applicable") when `|Y| > eps^2`.
pub fn diagnostics_small_y<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    shift: T,
    delta3: T,
) -> Result<Option<SmallYDiagnostics>> {
    require_vh(state)?;
    let m = &state.model;
    let eps = weight.profile.strength();
    let sigma = weight.profile.ends.sigma;
    let r = ShiftedReference::new(weight, &state.grid, shift);
    let rep = report_with_reference(state, &r, sigma, shift, delta3);
    if rep.y.abs() > eps * eps {
        return Ok(None);
    }
    let q = trapezoid_weights(state.grid.n, state.grid.dx);
    let mut l2 = T::zero();
    for i in 0..state.grid.n {
        let dhh = state.w[i] - r.h[i];
        l2 = l2 + q[i] * r.da[i].abs() * (dhh * dhh + m.relative_entropy(state.v[i], r.v[i]));
    }
    let vbar: Vec<T> = (0..state.grid.n)
        .map(|i| truncate_volume(m, state.v[i], r.v[i], delta3, Truncation::Both))
        .collect();
    let yg = y_good_of_volume(state, &r, sigma, &vbar);
    let norm = weight.lambda / (eps * eps);
    Ok(Some(SmallYDiagnostics { weighted_l2: (l2 * norm).f64(), truncated_y_good: (yg.abs() * norm).f64() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{rankine_hugoniot, solve_profile_vh};
    use crate::solver::{init_state, Field, Perturbation};
    use crate::thermo::GasModel;
    use std::sync::Arc;

    fn weight() -> WeightFunction<f64> {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        let p = solve_profile_vh(&m, &e, 30.0 / e.strength(&m), 0.1).unwrap();
        WeightFunction::new(Arc::new(p), 0.3).unwrap()
    }

    fn noisy(w: &WeightFunction<f64>, seed: u64, amp: f64) -> FluidState<f64> {
        let pert = [
            Perturbation::Noise { field: Field::Volume, amplitude: amp, count: 6, window: 15.0, min_width: 1.0, max_width: 5.0, seed },
            Perturbation::Noise { field: Field::Velocity, amplitude: amp, count: 6, window: 15.0, min_width: 1.0, max_width: 5.0, seed: seed + 1000 },
        ];
        init_state(&w.profile, Formulation::Vh, &pert).unwrap()
    }

    #[test]
    fn profile_gives_zero_functionals() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let r = compute_report(&s, &w, 0.0, 0.1).unwrap();
        for x in [r.weighted_entropy, r.y, r.j_bad, r.j_good, r.b_delta, r.g_delta] {
            assert!(x.abs() < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn identities_hold_on_noisy_states() {
        let w = weight();
        for seed in 0..10 {
            let s = noisy(&w, seed, 0.25);
            for shift in [0.0, 1.7, -3.2] {
                let r = compute_report(&s, &w, shift, 0.1).unwrap();
                let scale = 1.0 + r.j_bad.abs() + r.j_good.abs();
                assert!(r.split_defect() <= 1e-12 * scale);
                assert!(r.y_split_defect() <= 1e-12 * (1.0 + r.y.abs()));
                assert!(r.good_parts().iter().all(|&g| g >= 0.0));
                assert!((r.weighted_entropy - weighted_entropy(&s, &w, shift).unwrap()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn localized_and_split_good_parts_agree_inside_omega() {
        let w = weight();
        let s = noisy(&w, 3, 0.01);
        let r = compute_report(&s, &w, 0.0, 0.1).unwrap();
        assert_eq!(r.y_s, 0.0);
        assert!((r.y_g - r.y_g_line).abs() <= 1e-12 * (1.0 + r.y_g.abs()));
        assert!((r.b2_plus - r.i2).abs() <= 1e-14);
    }

    #[test]
    fn small_y_diagnostics_only_when_applicable() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let d = diagnostics_small_y(&s, &w, 0.0, 0.1).unwrap().unwrap();
        assert!(d.weighted_l2.abs() < 1e-12 && d.truncated_y_good.abs() < 1e-12);
        let big = noisy(&w, 1, 0.3);
        let r = compute_report(&big, &w, 0.0, 0.1).unwrap();
        let eps = w.profile.strength();
        let res = diagnostics_small_y(&big, &w, 0.0, 0.1).unwrap();
        assert_eq!(res.is_none(), r.y.abs() > eps * eps);
    }

    #[test]
    fn shift_moves_reference_not_state() {
        // A state equal to the profile translated by s has zero entropy at shift s.
        let w = weight();
        let g = w.profile.grid;
        let (v, h) = w.profile.sample(&g, 2.0, Formulation::Vh);
        let mut s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        s.v = v;
        s.w = h;
        assert!(weighted_entropy(&s, &w, 2.0).unwrap() < 1e-14);
        assert!(weighted_entropy(&s, &w, 0.0).unwrap() > 1e-6);
    }

    #[test]
    fn rejects_velocity_states() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vu, &[]).unwrap();
        assert!(compute_report(&s, &w, 0.0, 0.1).is_err());
    }
}
