//! Method-of-lines solver for both formulations in the frame moving with the shock.
//!
//! Space: conservative second-order central fluxes on a uniform grid, with
//! the diffusive flux using the arithmetic mean of the nodal coefficient at
//! each interface. Time: classical RK4. One ghost node per side holds the
//! far-field reference (the exact profile, or constants) at the ghost
//! abscissa; the ghosts never change in time.
//!
//! `(v, h)`: `v_t - sigma v_xi - h_xi = -s (v^beta p(v)_xi)_xi`, `h_t - sigma h_xi + p(v)_xi = 0`,
//! with `s = nu b / gamma`.
//! `(v, u)`: `v_t - sigma v_xi - u_xi = 0`, `u_t - sigma u_xi + p(v)_xi = nu (mu(v)/v u_xi)_xi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShockError};
use crate::grid::UniformGrid;
use crate::profile::{EndStates, Formulation, ShockProfile};
use crate::scalar::Scalar;
use crate::thermo::GasModel;

/// Default Courant factor.
pub const DEFAULT_CFL: f64 = 0.4;

/// Far-field values at the two ghost abscissas, for every second component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField<T> {
    /// `(v, u, h)` at the left ghost.
    pub left: (T, T, T),
    /// `(v, u, h)` at the right ghost.
    pub right: (T, T, T),
}

impl<T: Scalar> FarField<T> {
    /// Exact profile values at the ghost abscissas of `grid`.
    #[must_use]
    pub fn from_profile(profile: &ShockProfile<T>, grid: &UniformGrid<T>) -> Self {
        let at = |x: T| {
            let v = profile.v_at(x);
            (v, profile.u_of_volume(v), profile.h_of_volume(v))
        };
        Self { left: at(grid.x_signed(-1)), right: at(grid.x(grid.n)) }
    }

    /// Constant end states; `u` and `h` coincide.
    #[must_use]
    pub fn from_ends(ends: &EndStates<T>) -> Self {
        Self {
            left: (ends.v_minus, ends.u_minus, ends.u_minus),
            right: (ends.v_plus, ends.u_plus, ends.u_plus),
        }
    }

    fn ghosts(&self, formulation: Formulation) -> ((T, T), (T, T)) {
        match formulation {
            Formulation::Vu => ((self.left.0, self.left.1), (self.right.0, self.right.1)),
            Formulation::Vh => ((self.left.0, self.left.2), (self.right.0, self.right.2)),
        }
    }
}

/// Solution snapshot on a uniform grid.
#[derive(Debug, Clone)]
pub struct FluidState<T> {
    pub model: GasModel<T>,
    pub grid: UniformGrid<T>,
    pub formulation: Formulation,
    /// Speed of the moving frame.
    pub sigma: T,
    pub v: Vec<T>,
    /// `u` or `h`, per `formulation`.
    pub w: Vec<T>,
    pub time: T,
    pub far_field: FarField<T>,
    /// Time-integrated net inflow of `v` and `w` through the two ends.
    pub inflow: [T; 2],
    /// Volumes at or below this abort the run.
    pub v_floor: T,
}

impl<T: Scalar> FluidState<T> {
    /// Builds a state from raw arrays.
    pub fn new(
        model: GasModel<T>,
        grid: UniformGrid<T>,
        formulation: Formulation,
        sigma: T,
        v: Vec<T>,
        w: Vec<T>,
        far_field: FarField<T>,
    ) -> Result<Self> {
        if v.len() != grid.n || w.len() != grid.n {
            return Err(ShockError::InvalidArgument("state arrays must match the grid".into()));
        }
        let v_floor = T::c(1e-6) * far_field.left.0.min(far_field.right.0);
        let s = Self { model, grid, formulation, sigma, v, w, time: T::zero(), far_field, inflow: [T::zero(); 2], v_floor };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        for (i, (&v, &w)) in self.v.iter().zip(&self.w).enumerate() {
            if !v.is_finite() || !w.is_finite() {
                return Err(ShockError::NonFinite(format!("state at x = {}", self.grid.x(i))));
            }
            if v <= self.v_floor {
                return Err(ShockError::Vacuum {
                    value: v.f64(),
                    floor: self.v_floor.f64(),
                    position: self.grid.x(i).f64(),
                });
            }
        }
        Ok(())
    }

    /// `(sum v dx, sum w dx)`, the discretely conserved totals.
    #[must_use]
    pub fn totals(&self) -> (T, T) {
        let dx = self.grid.dx;
        (self.v.iter().copied().sum::<T>() * dx, self.w.iter().copied().sum::<T>() * dx)
    }

    fn ghosts(&self) -> ((T, T), (T, T)) {
        self.far_field.ghosts(self.formulation)
    }
}

/// Field a perturbation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Volume,
    /// The second component (`u` or `h`).
    Velocity,
}

/// Smooth compactly supported perturbation of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `amplitude * exp(1 - 1/(1 - r^2))`, `r = (xi - center)/width`, supported on `|r| < 1`.
    Bump { field: Field, amplitude: f64, center: f64, width: f64 },
    /// Sum of `count` bumps with seeded random amplitudes in `[-amplitude, amplitude]`,
    /// centers in `[-window, window]` and widths in `[min_width, max_width]`.
    Noise { field: Field, amplitude: f64, count: usize, window: f64, min_width: f64, max_width: f64, seed: u64 },
}

/// Unit-height `C^inf` bump on `(-1, 1)`.
#[must_use]
pub fn bump_shape(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

impl Perturbation {
    fn bumps(&self) -> Vec<(Field, f64, f64, f64)> {
        match *self {
            Self::Bump { field, amplitude, center, width } => vec![(field, amplitude, center, width)],
            Self::Noise { field, amplitude, count, window, min_width, max_width, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let a = amplitude * (2.0 * rng.gen::<f64>() - 1.0);
                        let c = window * (2.0 * rng.gen::<f64>() - 1.0);
                        let w = min_width + (max_width - min_width) * rng.gen::<f64>();
                        (field, a, c, w)
                    })
                    .collect()
            }
        }
    }

    /// Every bump needs finite amplitude and center and a positive width.
    pub fn validate(&self) -> Result<()> {
        for (_, a, c, w) in self.bumps() {
            if !(w > 0.0) || !a.is_finite() || !c.is_finite() {
                return Err(ShockError::InvalidArgument(format!(
                    "perturbation needs finite amplitude/center and positive width, got ({a}, {c}, {w})"
                )));
            }
        }
        Ok(())
    }

    /// Value `(delta v, delta w)` at `x`.
    #[must_use]
    pub fn value(&self, x: f64) -> (f64, f64) {
        let mut out = (0.0, 0.0);
        for (field, a, c, w) in self.bumps() {
            let d = a * bump_shape((x - c) / w);
            match field {
                Field::Volume => out.0 += d,
                Field::Velocity => out.1 += d,
            }
        }
        out
    }
}

/// Profile plus perturbations on the profile's grid, with profile far-field ghosts.
pub fn init_state<T: Scalar>(
    profile: &ShockProfile<T>,
    formulation: Formulation,
    perturbations: &[Perturbation],
) -> Result<FluidState<T>> {
    for p in perturbations {
        p.validate()?;
    }
    let grid = profile.grid;
    let mut v = profile.v.clone();
    let mut w = match formulation {
        Formulation::Vh => profile.h.clone(),
        Formulation::Vu => profile.u.clone(),
    };
    for i in 0..grid.n {
        let x = grid.x(i).f64();
        for p in perturbations {
            let (dv, dw) = p.value(x);
            v[i] = v[i] + T::c(dv);
            w[i] = w[i] + T::c(dw);
        }
    }
    FluidState::new(
        profile.model,
        grid,
        formulation,
        profile.ends.sigma,
        v,
        w,
        FarField::from_profile(profile, &grid),
    )
}

/// Largest stable step: `cfl * min(dx / (|sigma| + max c), dx^2 / (2 max D))`.
#[must_use]
pub fn stability_bound<T: Scalar>(state: &FluidState<T>, cfl: T) -> T {
    let m = &state.model;
    let ((vl, _), (vr, _)) = state.ghosts();
    let vmin = state.v.iter().copied().fold(vl.min(vr), T::min);
    // Sound speed and diffusivity both decrease in v.
    let c = m.sound_speed(vmin);
    let d = m.diffusivity(vmin);
    let dx = state.grid.dx;
    cfl * (dx / (state.sigma.abs() + c)).min(dx * dx / (T::c(2.0) * d))
}

/// Semi-discrete right-hand side; returns the fluxes through the left and right ends.
fn rhs<T: Scalar>(state: &FluidState<T>, v: &[T], w: &[T], dv: &mut [T], dw: &mut [T]) -> ([T; 2], [T; 2]) {
    let m = &state.model;
    let n = v.len();
    let dx = state.grid.dx;
    let sigma = state.sigma;
    let half = T::c(0.5);
    let ((vl, wl), (vr, wr)) = state.ghosts();
    let cell = |i: usize| -> (T, T) {
        if i == 0 {
            (vl, wl)
        } else if i == n + 1 {
            (vr, wr)
        } else {
            (v[i - 1], w[i - 1])
        }
    };
    // Extended index k = i + 1; interface j sits between extended cells j and j + 1.
    let vh = state.formulation == Formulation::Vh;
    let scale = if vh { m.vh_diffusion_scale() } else { m.nu * m.b };
    let coef = |x: T| if vh { m.v_beta(x) } else { m.diffusivity(x) / (m.nu * m.b) };
    let mut prev = {
        let (v0, w0) = cell(0);
        (v0, w0, m.pressure(v0), coef(v0))
    };
    let mut first = [T::zero(); 2];
    let mut flux_prev = [T::zero(); 2];
    for j in 0..=n {
        let (v1, w1) = cell(j + 1);
        let p1 = m.pressure(v1);
        let c1 = coef(v1);
        let (v0, w0, p0, c0) = prev;
        let mean_c = half * (c0 + c1) * scale / dx;
        let (fv, fw) = if vh {
            (
                -sigma * half * (v0 + v1) - half * (w0 + w1) + mean_c * (p1 - p0),
                -sigma * half * (w0 + w1) + half * (p0 + p1),
            )
        } else {
            (
                -sigma * half * (v0 + v1) - half * (w0 + w1),
                -sigma * half * (w0 + w1) + half * (p0 + p1) - mean_c * (w1 - w0),
            )
        };
        if j == 0 {
            first = [fv, fw];
        } else {
            dv[j - 1] = -(fv - flux_prev[0]) / dx;
            dw[j - 1] = -(fw - flux_prev[1]) / dx;
        }
        flux_prev = [fv, fw];
        prev = (v1, w1, p1, c1);
    }
    (first, flux_prev)
}

/// One RK4 step of size `dt`; fails if `dt` exceeds the stability bound at `cfl = 1`
/// or if the volume leaves `(v_floor, inf)`.
pub fn step<T: Scalar>(state: &mut FluidState<T>, dt: T) -> Result<()> {
    let bound = stability_bound(state, T::one());
    if !(dt > T::zero()) || dt > bound * (T::one() + T::c(1e-9)) {
        return Err(ShockError::StabilityViolation { dt: dt.f64(), bound: bound.f64() });
    }
    let n = state.grid.n;
    let mut k = [(vec![T::zero(); n], vec![T::zero(); n]), (vec![T::zero(); n], vec![T::zero(); n]),
                 (vec![T::zero(); n], vec![T::zero(); n]), (vec![T::zero(); n], vec![T::zero(); n])];
    let mut tv = vec![T::zero(); n];
    let mut tw = vec![T::zero(); n];
    let stage_dt = [T::zero(), T::c(0.5) * dt, T::c(0.5) * dt, dt];
    let weights = [T::one(), T::c(2.0), T::c(2.0), T::one()];
    let mut inflow = [T::zero(); 2];
    for s in 0..4 {
        let (vs, ws): (&[T], &[T]) = if s == 0 {
            (&state.v, &state.w)
        } else {
            let (pv, pw) = &k[s - 1];
            for i in 0..n {
                tv[i] = state.v[i] + stage_dt[s] * pv[i];
                tw[i] = state.w[i] + stage_dt[s] * pw[i];
            }
            (&tv, &tw)
        };
        let (mut dv, mut dw) = std::mem::take(&mut k[s]);
        let (fl, fr) = rhs(state, vs, ws, &mut dv, &mut dw);
        k[s] = (dv, dw);
        inflow[0] = inflow[0] + weights[s] * (fl[0] - fr[0]);
        inflow[1] = inflow[1] + weights[s] * (fl[1] - fr[1]);
    }
    let sixth = dt / T::c(6.0);
    for i in 0..n {
        state.v[i] = state.v[i] + sixth * (k[0].0[i] + T::c(2.0) * (k[1].0[i] + k[2].0[i]) + k[3].0[i]);
        state.w[i] = state.w[i] + sixth * (k[0].1[i] + T::c(2.0) * (k[1].1[i] + k[2].1[i]) + k[3].1[i]);
    }
    state.inflow[0] = state.inflow[0] + sixth * inflow[0];
    state.inflow[1] = state.inflow[1] + sixth * inflow[1];
    state.time = state.time + dt;
    state.check()
}

/// Steps until `state.time == t_end` with the largest stable steps at `cfl`.
pub fn advance_to<T: Scalar>(state: &mut FluidState<T>, t_end: T, cfl: T) -> Result<usize> {
    let mut steps = 0;
    while state.time < t_end {
        let dt = stability_bound(state, cfl).min(t_end - state.time);
        step(state, dt)?;
        steps += 1;
        if t_end - state.time < T::c(1e-12) * t_end.abs().max(T::one()) {
            state.time = t_end;
        }
    }
    Ok(steps)
}

/// `d_xi v^-alpha` with the ghost values in the centered stencil at the ends.
fn potential_gradient<T: Scalar>(state: &FluidState<T>) -> Vec<T> {
    let m = &state.model;
    let n = state.grid.n;
    let ((vl, _), (vr, _)) = state.ghosts();
    let at = |i: isize| -> T {
        let v = if i < 0 {
            vl
        } else if i as usize >= n {
            vr
        } else {
            state.v[i as usize]
        };
        m.bd_potential(v)
    };
    let inv = T::c(0.5) / state.grid.dx;
    (0..n as isize).map(|i| (at(i + 1) - at(i - 1)) * inv).collect()
}

/// `(v, u) -> (v, h)` with `h = u + (b/alpha) nu d_xi v^-alpha`.
pub fn bd_transform<T: Scalar>(state: &FluidState<T>) -> Result<FluidState<T>> {
    if state.formulation != Formulation::Vu {
        return Err(ShockError::InvalidArgument("effective-velocity transform expects a (v, u) state".into()));
    }
    let k = state.model.bd_coefficient() * state.model.nu;
    let grad = potential_gradient(state);
    let mut out = state.clone();
    out.formulation = Formulation::Vh;
    out.w = state.w.iter().zip(&grad).map(|(&u, &g)| u + k * g).collect();
    Ok(out)
}

/// Inverse of [`bd_transform`].
pub fn bd_inverse<T: Scalar>(state: &FluidState<T>) -> Result<FluidState<T>> {
    if state.formulation != Formulation::Vh {
        return Err(ShockError::InvalidArgument("inverse transform expects a (v, h) state".into()));
    }
    let k = state.model.bd_coefficient() * state.model.nu;
    let grad = potential_gradient(state);
    let mut out = state.clone();
    out.formulation = Formulation::Vu;
    out.w = state.w.iter().zip(&grad).map(|(&h, &g)| h - k * g).collect();
    Ok(out)
}

/// Viscosity rescaling `U^(f nu)(f t, f x) = U^nu(t, x)`: same nodal values on the grid
/// scaled by `factor`, time scaled by `factor`, viscosity multiplied by `factor`.
pub fn rescale_nu<T: Scalar>(state: &FluidState<T>, factor: T) -> Result<FluidState<T>> {
    if !(factor > T::zero()) {
        return Err(ShockError::InvalidArgument(format!("rescaling factor must be positive, got {factor}")));
    }
    let mut out = state.clone();
    out.model = state.model.with_nu(state.model.nu * factor)?;
    out.grid = state.grid.scaled(factor);
    out.time = state.time * factor;
    out.inflow = [state.inflow[0] * factor, state.inflow[1] * factor];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::max_abs_diff;
    use crate::profile::{rankine_hugoniot, solve_profile_vh, solve_profile_vu};
    use proptest::prelude::*;

    fn setup(dx: f64) -> ShockProfile<f64> {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        solve_profile_vh(&m, &e, 30.0 / e.strength(&m), dx).unwrap()
    }

    fn bump(field: Field, amplitude: f64, center: f64, width: f64) -> Perturbation {
        Perturbation::Bump { field, amplitude, center, width }
    }

    #[test]
    fn constant_state_is_steady() {
        let m = GasModel::<f64>::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        let g = UniformGrid::new(0.0, 0.1, 50).unwrap();
        let ff = FarField { left: (0.9, e.u_plus, e.u_plus), right: (0.9, e.u_plus, e.u_plus) };
        let mut s = FluidState::new(m, g, Formulation::Vh, e.sigma, vec![0.9; 50], vec![e.u_plus; 50], ff).unwrap();
        advance_to(&mut s, 0.5, 0.4).unwrap();
        assert!(s.v.iter().all(|&v| (v - 0.9).abs() < 1e-14));
        assert!(s.w.iter().all(|&w| (w - e.u_plus).abs() < 1e-14));
    }

    #[test]
    fn rejects_oversized_step() {
        let p = setup(0.2);
        let mut s = init_state(&p, Formulation::Vh, &[]).unwrap();
        let bound = stability_bound(&s, DEFAULT_CFL);
        assert!(matches!(step(&mut s, 3.0 * bound), Err(ShockError::StabilityViolation { .. })));
        assert!(step(&mut s, bound).is_ok());
    }

    #[test]
    fn vacuum_is_reported() {
        let p = setup(0.2);
        let r = init_state(&p, Formulation::Vh, &[bump(Field::Volume, -0.95, 0.0, 2.0)]);
        assert!(matches!(r, Err(ShockError::Vacuum { .. })));
    }

    #[test]
    fn profile_residual_of_velocity_equation_vanishes() {
        // sigma D h~ = D p(v~) holds node by node, so the h-update of the exact profile is round-off.
        let p = setup(0.1);
        let s = init_state(&p, Formulation::Vh, &[]).unwrap();
        let n = s.grid.n;
        let (mut dv, mut dw) = (vec![0.0_f64; n], vec![0.0_f64; n]);
        rhs(&s, &s.v, &s.w, &mut dv, &mut dw);
        assert!(dw.iter().all(|d| d.abs() < 1e-12));
        assert!(dv.iter().all(|d| d.abs() < 1e-4));
    }

    #[test]
    fn conservation_up_to_boundary_flux() {
        let p = setup(0.1);
        for formulation in [Formulation::Vh, Formulation::Vu] {
            let mut s = init_state(
                &p,
                formulation,
                &[bump(Field::Volume, 0.05, -3.0, 2.0), bump(Field::Velocity, -0.03, 4.0, 3.0)],
            )
            .unwrap();
            let (m0, w0) = s.totals();
            advance_to(&mut s, 1.0, 0.4).unwrap();
            let (m1, w1) = s.totals();
            assert!((m1 - m0 - s.inflow[0]).abs() < 1e-10, "{formulation:?}");
            assert!((w1 - w0 - s.inflow[1]).abs() < 1e-10, "{formulation:?}");
        }
    }

    #[test]
    fn transform_round_trip() {
        let m = GasModel::standard(2.0, 1.0).unwrap();
        let e = rankine_hugoniot(&m, 1.0, 0.0, 0.9).unwrap();
        let pu = solve_profile_vu(&m, &e, 30.0 / e.strength(&m), 0.1).unwrap();
        let s = init_state(&pu, Formulation::Vu, &[bump(Field::Volume, 0.05, 0.0, 2.0)]).unwrap();
        let back = bd_inverse(&bd_transform(&s).unwrap()).unwrap();
        assert!(max_abs_diff(&back.w, &s.w) < 1e-14);
        assert!(bd_transform(&bd_transform(&s).unwrap()).is_err());
        // Transform of the velocity profile reproduces the effective-velocity profile to O(dx^2).
        let unperturbed = init_state(&pu, Formulation::Vu, &[]).unwrap();
        let h = bd_transform(&unperturbed).unwrap();
        assert!(max_abs_diff(&h.w, &pu.h) < 1e-5);
    }

    #[test]
    fn rescaling_round_trip() {
        let p = setup(0.2);
        let mut s = init_state(&p, Formulation::Vu, &[bump(Field::Volume, 0.02, 1.0, 2.0)]).unwrap();
        s.time = 0.7;
        let r = rescale_nu(&s, 0.5).unwrap();
        assert!((r.model.nu - 0.5).abs() < 1e-15 && (r.time - 0.35).abs() < 1e-15);
        assert!((r.grid.dx - 0.1).abs() < 1e-15);
        let back = rescale_nu(&r, 2.0).unwrap();
        assert_eq!(back.v, s.v);
        assert!((back.grid.x0 - s.grid.x0).abs() < 1e-12 && (back.time - 0.7).abs() < 1e-15);
        assert!(rescale_nu(&s, 0.0).is_err());
    }

    #[test]
    fn noise_is_reproducible() {
        let noise = Perturbation::Noise {
            field: Field::Volume,
            amplitude: 0.1,
            count: 5,
            window: 10.0,
            min_width: 1.0,
            max_width: 3.0,
            seed: 7,
        };
        let a: Vec<f64> = (0..50).map(|i| noise.value(i as f64 * 0.4 - 10.0).0).collect();
        let b: Vec<f64> = (0..50).map(|i| noise.value(i as f64 * 0.4 - 10.0).0).collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|x| x.abs() > 0.0));
    }

    #[test]
    fn bump_is_compact_and_smooth() {
        assert_eq!(bump_shape(1.0), 0.0);
        assert_eq!(bump_shape(0.0), 1.0);
        assert!(bump_shape(0.999) < 1e-200 + 1e-100);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn short_runs_conserve(amp in -0.08_f64..0.08, center in -5.0_f64..5.0, width in 1.0_f64..4.0) {
            let p = setup(0.25);
            let mut s = init_state(&p, Formulation::Vh, &[bump(Field::Volume, amp, center, width)]).unwrap();
            let (m0, _) = s.totals();
            advance_to(&mut s, 0.5, 0.4).unwrap();
            let (m1, _) = s.totals();
            prop_assert!((m1 - m0 - s.inflow[0]).abs() < 1e-11);
        }
    }
}
