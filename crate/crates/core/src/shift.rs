//! Shift ODE `X' = Phi_eps(Y) (2 |J_bad| + 1)` co-advanced with the PDE.
//!
//! `X` is measured in the moving frame (the profile sits at `xi = X`); the
//! laboratory position of the shock is `sigma t + X`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShockError};
use crate::functionals::{report_with_reference, FunctionalReport, ShiftedReference};
use crate::scalar::Scalar;
use crate::solver::FluidState;
use crate::weights::WeightFunction;

/// Substep displacement cap as a fraction of the grid spacing.
pub const SUBSTEP_FRACTION: f64 = 0.1;
/// Substep budget per solver step before reporting stiffness.
pub const MAX_SUBSTEPS: usize = 10_000;

/// `1/eps^2` below `-eps^2`, `-y/eps^4` in between, `-1/eps^2` above `eps^2`.
#[inline]
#[must_use]
pub fn phi_eps<T: Scalar>(y: T, eps: T) -> T {
    let e2 = eps * eps;
    if y <= -e2 {
        T::one() / e2
    } else if y >= e2 {
        -T::one() / e2
    } else {
        -y / (e2 * e2)
    }
}

/// Right side of the shift ODE at a shift, with the report it was built from.
pub fn shift_velocity<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    shift: T,
    eps: T,
    delta: T,
) -> (T, FunctionalReport<T>) {
    let r = ShiftedReference::new(weight, &state.grid, shift);
    velocity_with_reference(state, weight, &r, shift, eps, delta)
}

fn velocity_with_reference<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    r: &ShiftedReference<T>,
    shift: T,
    eps: T,
    delta: T,
) -> (T, FunctionalReport<T>) {
    let rep = report_with_reference(state, r, weight.profile.ends.sigma, shift, delta);
    (phi_eps(rep.y, eps) * (T::c(2.0) * rep.j_bad.abs() + T::one()), rep)
}

/// Reference tabulated at the last accepted shift; it depends on the shift only.
#[derive(Debug, Clone)]
pub struct ReferenceCache<T> {
    shift: T,
    reference: ShiftedReference<T>,
}

impl<T: Scalar> ReferenceCache<T> {
    fn get<'a>(slot: &'a mut Option<Self>, weight: &WeightFunction<T>, state: &FluidState<T>, shift: T) -> &'a ShiftedReference<T> {
        if slot.as_ref().map_or(true, |c| c.shift != shift || c.reference.v.len() != state.grid.n) {
            *slot = Some(Self { shift, reference: ShiftedReference::new(weight, &state.grid, shift) });
        }
        &slot.as_ref().expect("filled above").reference
    }
}

/// Result of one shared-clock shift step.
#[derive(Debug, Clone)]
pub struct ShiftStep<T> {
    pub shift: T,
    pub velocity: T,
    /// Report at the new shift.
    pub report: FunctionalReport<T>,
    pub substeps: usize,
    /// Set when a Heun stage reversed the direction of the predictor.
    pub chattering: bool,
}

/// Advances `shift` by `dt` against the (already advanced) state with Heun
/// substeps that move `X` by at most `0.1 dx` each.
pub fn advance_shift<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    shift: T,
    dt: T,
    eps: T,
    delta: T,
) -> Result<ShiftStep<T>> {
    advance_shift_cached(state, weight, shift, dt, eps, delta, &mut None)
}

/// [`advance_shift`] reusing the reference from the previous call when the shift is unchanged.
pub fn advance_shift_cached<T: Scalar>(
    state: &FluidState<T>,
    weight: &WeightFunction<T>,
    shift: T,
    dt: T,
    eps: T,
    delta: T,
    cache: &mut Option<ReferenceCache<T>>,
) -> Result<ShiftStep<T>> {
    if !(dt >= T::zero()) {
        return Err(ShockError::InvalidArgument(format!("shift step must be non-negative, got {dt}")));
    }
    let cap = T::c(SUBSTEP_FRACTION) * state.grid.dx;
    let mut x = shift;
    let mut elapsed = T::zero();
    let mut substeps = 0;
    let mut chattering = false;
    let (mut k1, mut rep) = {
        let r = ReferenceCache::get(cache, weight, state, x);
        velocity_with_reference(state, weight, r, x, eps, delta)
    };
    while elapsed < dt {
        let remaining = dt - elapsed;
        let h = if k1.abs() * remaining > cap { cap / k1.abs() } else { remaining };
        substeps += 1;
        if substeps > MAX_SUBSTEPS {
            return Err(ShockError::ShiftStiff { substeps, time: state.time.f64() });
        }
        let trial = x + h * k1;
        let k2 = if trial == x { k1 } else { shift_velocity(state, weight, trial, eps, delta).0 };
        if k1 * k2 < T::zero() {
            chattering = true;
        }
        x = x + T::c(0.5) * h * (k1 + k2);
        if !x.is_finite() {
            return Err(ShockError::NonFinite(format!("shift at t = {}", state.time)));
        }
        elapsed = if h == remaining { dt } else { elapsed + h };
        let r = ReferenceCache::get(cache, weight, state, x);
        let next = velocity_with_reference(state, weight, r, x, eps, delta);
        k1 = next.0;
        rep = next.1;
    }
    Ok(ShiftStep { shift: x, velocity: k1, report: rep, substeps, chattering })
}

/// Recorded time series of a co-advanced run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub y: Vec<f64>,
    pub j_bad: Vec<f64>,
    pub entropy: Vec<f64>,
    /// Running time integral of `G2`.
    pub g2_accum: Vec<f64>,
    /// Running time integral of `D`.
    pub d_accum: Vec<f64>,
    pub chattering: bool,
    #[serde(skip)]
    last_g2: f64,
    #[serde(skip)]
    last_d: f64,
}

impl ShiftTrajectory {
    /// Appends a record; the accumulators integrate `G2` and `D` by the trapezoid rule.
    pub fn push<T: Scalar>(&mut self, time: T, velocity: T, rep: &FunctionalReport<T>) {
        let (t, g2, d) = (time.f64(), rep.g2.f64(), rep.d.f64());
        let (g_acc, d_acc) = match self.t.last() {
            None => (0.0, 0.0),
            Some(&t0) => {
                let k = self.t.len() - 1;
                let dt = t - t0;
                (
                    self.g2_accum[k] + 0.5 * dt * (self.last_g2 + g2),
                    self.d_accum[k] + 0.5 * dt * (self.last_d + d),
                )
            }
        };
        self.t.push(t);
        self.x.push(rep.shift.f64());
        self.xdot.push(velocity.f64());
        self.y.push(rep.y.f64());
        self.j_bad.push(rep.j_bad.f64());
        self.entropy.push(rep.weighted_entropy.f64());
        self.g2_accum.push(g_acc);
        self.d_accum.push(d_acc);
        self.last_g2 = g2;
        self.last_d = d;
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.t.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest `|Xdot| / ((2 |J_bad| + 1) / eps^2)` over the records.
    #[must_use]
    pub fn velocity_budget_ratio(&self, eps: f64) -> f64 {
        self.xdot
            .iter()
            .zip(&self.j_bad)
            .map(|(v, j)| v.abs() * eps * eps / (2.0 * j.abs() + 1.0))
            .fold(0.0, f64::max)
    }
}

/// `X_nu(t) = nu X(t / nu)`: returns the rescaled time and shift samples.
#[must_use]
pub fn rescale_shift(t: &[f64], x: &[f64], nu: f64) -> (Vec<f64>, Vec<f64>) {
    (t.iter().map(|s| s * nu).collect(), x.iter().map(|s| s * nu).collect())
}

/// Piecewise-linear interpolation of `(t, x)` at `at`, constant beyond the ends.
#[must_use]
pub fn interpolate(t: &[f64], x: &[f64], at: f64) -> f64 {
    match t.iter().position(|&s| s >= at) {
        None => *x.last().unwrap_or(&0.0),
        Some(0) => x[0],
        Some(k) => {
            let w = (at - t[k - 1]) / (t[k] - t[k - 1]);
            x[k - 1] + w * (x[k] - x[k - 1])
        }
    }
}

/// [`rescale_shift`] followed by regridding onto `targets`.
#[must_use]
pub fn rescale_shift_onto(t: &[f64], x: &[f64], nu: f64, targets: &[f64]) -> Vec<f64> {
    let (tn, xn) = rescale_shift(t, x, nu);
    targets.iter().map(|&s| interpolate(&tn, &xn, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::compute_report;
    use crate::profile::{rankine_hugoniot, solve_profile_vh, Formulation};
    use crate::solver::init_state;
    use crate::thermo::GasModel;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn weight() -> WeightFunction<f64> {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        let p = solve_profile_vh(&m, &e, 30.0 / e.strength(&m), 0.1).unwrap();
        WeightFunction::new(Arc::new(p), 0.3).unwrap()
    }

    #[test]
    fn phi_reference_values() {
        let eps = 0.2_f64;
        assert_eq!(phi_eps(0.0, eps), 0.0);
        assert!((phi_eps(eps * eps, eps) + 1.0 / (eps * eps)).abs() < 1e-12);
        assert!((phi_eps(-eps * eps / 2.0, eps) - 1.0 / (2.0 * eps * eps)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn phi_is_odd_bounded_and_continuous(y in -1.0_f64..1.0, eps in 0.05_f64..1.0) {
            prop_assert_eq!(phi_eps(-y, eps), -phi_eps(y, eps));
            prop_assert!(phi_eps(y, eps).abs() <= 1.0 / (eps * eps) * (1.0 + 1e-15));
            let h = 1e-9;
            prop_assert!((phi_eps(y + h, eps) - phi_eps(y, eps)).abs() <= h / eps.powi(4) * (1.0 + 1e-6));
        }

        #[test]
        fn rescaling_composes_to_identity(nu in 0.05_f64..2.0) {
            let t: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
            let x: Vec<f64> = t.iter().map(|s| (s * 1.3).sin()).collect();
            let (t1, x1) = rescale_shift(&t, &x, nu);
            let back = rescale_shift_onto(&t1, &x1, 1.0 / nu, &t);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescaling_identity_and_linear_fixed_point() {
        let sigma = -0.7;
        let t: Vec<f64> = (0..20).map(|k| 0.25 * k as f64).collect();
        let x: Vec<f64> = t.iter().map(|s| sigma * s).collect();
        assert_eq!(rescale_shift(&t, &x, 1.0), (t.clone(), x.clone()));
        let lin = rescale_shift_onto(&t, &x, 0.3, &t[..6]);
        for (k, v) in lin.iter().enumerate() {
            assert!((v - sigma * t[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_state_keeps_shift_fixed() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let eps = w.profile.strength();
        let st = advance_shift(&s, &w, 0.0, 0.5, eps, 0.1).unwrap();
        assert!(st.shift.abs() < 1e-12 && st.velocity.abs() < 1e-10);
        assert_eq!(st.substeps, 1);
    }

    #[test]
    fn translated_profile_attracts_shift() {
        let w = weight();
        let eps = w.profile.strength();
        let shift_true = 0.8;
        let mut s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let (v, h) = w.profile.sample(&s.grid, shift_true, Formulation::Vh);
        s.v = v;
        s.w = h;
        // Y changes sign across the translation: attracting fixed point.
        let below = compute_report(&s, &w, shift_true - 0.3, 0.1).unwrap();
        let above = compute_report(&s, &w, shift_true + 0.3, 0.1).unwrap();
        assert!(below.y < 0.0 && above.y > 0.0);
        let mut x = 0.0;
        for _ in 0..400 {
            let st = advance_shift(&s, &w, x, 0.1, eps, 0.1).unwrap();
            let bound = (2.0 * st.report.j_bad.abs() + 1.0) / (eps * eps);
            assert!(st.velocity.abs() <= bound * (1.0 + 1e-12));
            assert!((st.shift - shift_true).abs() <= (x - shift_true).abs());
            x = st.shift;
        }
        assert!((x - shift_true).abs() < 1e-3, "{x}");
    }

    #[test]
    fn stiffness_is_reported() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let (v, h) = w.profile.sample(&s.grid, 5.0, Formulation::Vh);
        let mut s = s;
        s.v = v;
        s.w = h;
        let err = advance_shift(&s, &w, 0.0, 1e4, 1e-3, 0.1).unwrap_err();
        assert!(matches!(err, ShockError::ShiftStiff { .. }));
    }

    #[test]
    fn trajectory_accumulates_by_trapezoid() {
        let w = weight();
        let s = init_state(&w.profile, Formulation::Vh, &[]).unwrap();
        let mut rep = compute_report(&s, &w, 0.0, 0.1).unwrap();
        let mut tr = ShiftTrajectory::default();
        for k in 0..4 {
            rep.g2 = 1.0;
            rep.d = k as f64;
            tr.push(0.5 * k as f64, 0.0, &rep);
        }
        assert!((tr.g2_accum[3] - 1.5).abs() < 1e-15);
        assert!((tr.d_accum[3] - 2.25).abs() < 1e-15);
        assert_eq!(tr.velocity_budget_ratio(0.2), 0.0);
    }
}
