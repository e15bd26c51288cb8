//! Gas law, entropy and the relative quantities built from them.
//!
//! The model is the barotropic law `p(v) = v^-gamma` with viscosity
//! `mu(v) = b v^-alpha`. Relative quantities are evaluated in a
//! cancellation-free form so they stay non-negative near the diagonal.

pub mod lemmas;

use crate::error::{Result, ShockError};
use crate::grid::derivative;
use crate::scalar::{Power, Scalar};

/// Constitutive parameters of the viscous gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel<T> {
    pub gamma: T,
    pub alpha: T,
    /// Viscosity prefactor in `mu(v) = b v^-alpha`.
    pub b: T,
    /// Viscosity strength.
    pub nu: T,
    pow_p: Power<T>,
    pow_dp: Power<T>,
    pow_q: Power<T>,
    pow_beta: Power<T>,
    pow_diff: Power<T>,
    pow_bd: Power<T>,
    pow_inv: Power<T>,
}

impl<T: Scalar> GasModel<T> {
    /// Validates `gamma > 1`, `0 < alpha <= gamma <= alpha + 1`, `b > 0`, `nu > 0`.
    pub fn new(gamma: T, alpha: T, b: T, nu: T) -> Result<Self> {
        let all = [gamma, alpha, b, nu];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ShockError::InvalidModel("parameters must be finite".into()));
        }
        if !(gamma > T::one()) {
            return Err(ShockError::InvalidModel(format!("gamma > 1 required, got {gamma}")));
        }
        if !(alpha > T::zero()) {
            return Err(ShockError::InvalidModel(format!("alpha > 0 required, got {alpha}")));
        }
        if !(alpha <= gamma && gamma <= alpha + T::one()) {
            return Err(ShockError::InvalidModel(format!(
                "alpha <= gamma <= alpha + 1 required, got gamma = {gamma}, alpha = {alpha}"
            )));
        }
        if !(b > T::zero()) {
            return Err(ShockError::InvalidModel(format!("viscosity prefactor b > 0 required, got {b}")));
        }
        if !(nu > T::zero()) {
            return Err(ShockError::InvalidModel(format!("viscosity strength nu > 0 required, got {nu}")));
        }
        Ok(Self {
            gamma,
            alpha,
            b,
            nu,
            pow_p: Power::new(-gamma),
            pow_dp: Power::new(-gamma - T::one()),
            pow_q: Power::new(T::one() - gamma),
            pow_beta: Power::new(gamma - alpha),
            pow_diff: Power::new(-alpha - T::one()),
            pow_bd: Power::new(-alpha),
            pow_inv: Power::new(-T::one() / gamma),
        })
    }

    /// Model with `b = gamma` and `nu = 1`, the setting of the contraction analysis.
    pub fn standard(gamma: T, alpha: T) -> Result<Self> {
        Self::new(gamma, alpha, gamma, T::one())
    }

    /// Same gas with a different viscosity strength.
    pub fn with_nu(&self, nu: T) -> Result<Self> {
        Self::new(self.gamma, self.alpha, self.b, nu)
    }

    /// `gamma - alpha`, in `(0, 1]`.
    #[must_use]
    pub fn beta(&self) -> T {
        self.gamma - self.alpha
    }

    #[inline]
    #[must_use]
    pub fn pressure(&self, v: T) -> T {
        self.pow_p.of(v)
    }

    #[inline]
    #[must_use]
    pub fn pressure_prime(&self, v: T) -> T {
        -self.gamma * self.pow_dp.of(v)
    }

    /// Volume with pressure `q > 0`.
    #[inline]
    #[must_use]
    pub fn inverse_pressure(&self, q: T) -> T {
        self.pow_inv.of(q)
    }

    /// Entropy `Q(v) = v^(1-gamma) / (gamma - 1)`, with `Q' = -p`.
    #[inline]
    #[must_use]
    pub fn entropy(&self, v: T) -> T {
        self.pow_q.of(v) / (self.gamma - T::one())
    }

    /// `v^beta`.
    #[inline]
    #[must_use]
    pub fn v_beta(&self, v: T) -> T {
        self.pow_beta.of(v)
    }

    /// `mu(v) = b v^-alpha`.
    #[inline]
    #[must_use]
    pub fn viscosity(&self, v: T) -> T {
        self.b * self.pow_bd.of(v)
    }

    /// `p(v)^(alpha/gamma) = v^-alpha`.
    #[inline]
    #[must_use]
    pub fn bd_potential(&self, v: T) -> T {
        self.pow_bd.of(v)
    }

    /// Factor `b / alpha` in `h = u + (b/alpha) nu d_x p(v)^(alpha/gamma)`.
    #[must_use]
    pub fn bd_coefficient(&self) -> T {
        self.b / self.alpha
    }

    /// Factor `nu b / gamma` multiplying `-(v^beta p(v)_x)_x` in the `(v, h)` system.
    #[must_use]
    pub fn vh_diffusion_scale(&self) -> T {
        self.nu * self.b / self.gamma
    }

    /// Parabolic diffusivity `nu b v^(-alpha-1)`, shared by both formulations.
    #[inline]
    #[must_use]
    pub fn diffusivity(&self, v: T) -> T {
        self.nu * self.b * self.pow_diff.of(v)
    }

    /// Lagrangian sound speed `sqrt(-p'(v))`.
    #[inline]
    #[must_use]
    pub fn sound_speed(&self, v: T) -> T {
        (-self.pressure_prime(v)).sqrt()
    }

    /// `Q(v|w) = Q(v) - Q(w) - Q'(w)(v - w)`.
    #[must_use]
    pub fn relative_entropy(&self, v: T, w: T) -> T {
        let d = v / w - T::one();
        let l = d.ln_1p();
        let g = self.gamma;
        let bracket = ((T::one() - g) * l).exp_m1() / (g - T::one()) + d;
        (self.pow_q.of(w) * bracket).pos()
    }

    /// `p(v|w) = p(v) - p(w) - p'(w)(v - w)`.
    #[must_use]
    pub fn relative_pressure(&self, v: T, w: T) -> T {
        let d = v / w - T::one();
        let l = d.ln_1p();
        let g = self.gamma;
        let bracket = (-g * l).exp_m1() + g * d;
        (self.pow_p.of(w) * bracket).pos()
    }

    /// `|u1 - u2|^2 / 2 + Q(v1|v2)`; works for either second component `u` or `h`.
    #[must_use]
    pub fn eta_rel(&self, (v1, u1): (T, T), (v2, u2): (T, T)) -> T {
        let du = u1 - u2;
        T::c(0.5) * du * du + self.relative_entropy(v1, v2)
    }

    /// Effective velocity `h = u + (b/alpha) nu d_x p(v)^(alpha/gamma)` on a uniform grid.
    #[must_use]
    pub fn bd_velocity(&self, v: &[T], u: &[T], dx: T) -> Vec<T> {
        let pot: Vec<T> = v.iter().map(|&x| self.bd_potential(x)).collect();
        let d = derivative(&pot, dx);
        let k = self.bd_coefficient() * self.nu;
        u.iter().zip(d).map(|(&ui, di)| ui + k * di).collect()
    }

    /// Pointwise density of the effective-velocity relative functional between two `(v, u)` states.
    #[must_use]
    pub fn bd_functional_density(&self, first: (&[T], &[T]), second: (&[T], &[T]), dx: T) -> Vec<T> {
        let h1 = self.bd_velocity(first.0, first.1, dx);
        let h2 = self.bd_velocity(second.0, second.1, dx);
        (0..h1.len())
            .map(|i| self.eta_rel((first.0[i], h1[i]), (second.0[i], h2[i])))
            .collect()
    }
}
