//! Scenario drivers: single runs, contraction runs with the shift, the
//! vanishing-viscosity sweep, and the convergence scenarios used by the
//! acceptance suite. Everything here is `f64`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Result, ShockError};
use crate::functionals::FunctionalReport;
use crate::grid::{max_abs_diff, trapezoid_weights, UniformGrid};
use crate::profile::{entropy_shock, solve_profile_vh, EndStates, Formulation, ShockProfile};
use crate::shift::{advance_shift_cached, shift_velocity, ShiftTrajectory};
use crate::solver::{
    advance_to, bd_transform, bump_shape, init_state, rescale_nu, stability_bound, step, FarField, FluidState,
    Perturbation,
};
use crate::thermo::lemmas::{global_constants, local_constants, truncation_constants, LemmaReport};
use crate::thermo::GasModel;
use crate::weights::WeightFunction;

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV: &str = "SHOCKLAB_THREADS";

/// Model, end states, profile and weight built from a validated config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: GasModel<f64>,
    pub ends: EndStates<f64>,
    pub profile: Arc<ShockProfile<f64>>,
    pub weight: WeightFunction<f64>,
    pub eps: f64,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Self::with_grid(cfg, cfg.resolved_extent()?, cfg.dx)
    }

    /// Same physics on a different grid.
    pub fn with_grid(cfg: &ExperimentConfig, extent: f64, dx: f64) -> Result<Self> {
        let model = cfg.model()?;
        let ends = cfg.ends()?;
        let profile = Arc::new(solve_profile_vh(&model, &ends, extent, dx)?);
        let weight = WeightFunction::new(profile.clone(), cfg.lambda)?;
        let eps = ends.strength(&model);
        Ok(Self { model, ends, profile, weight, eps })
    }
}

/// Result of [`run_simulation`].
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub initial: FluidState<f64>,
    pub state: FluidState<f64>,
    pub steps: usize,
}

/// Perturbed profile evolved to `t_end` in the configured formulation.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimulationOutcome> {
    let s = Setup::new(cfg)?;
    let initial = init_state(&s.profile, cfg.formulation.into(), &cfg.effective_perturbations())?;
    let mut state = initial.clone();
    let steps = advance_to(&mut state, cfg.t_end, cfg.cfl)?;
    Ok(SimulationOutcome { initial, state, steps })
}

/// Global, local and truncation inequality oracles on the configured ranges.
pub fn run_lemmas(cfg: &ExperimentConfig) -> Result<Vec<LemmaReport>> {
    let m = cfg.model()?;
    let l = &cfg.lemmas;
    Ok(vec![
        global_constants(&m, cfg.v_minus, l.w_range)?,
        local_constants(&m, cfg.v_minus, l.local_delta)?,
        truncation_constants(&m, l.big_m, l.k)?,
    ])
}

/// Per-step bookkeeping of a PDE run with the shift co-advanced (Lie splitting).
#[derive(Debug, Clone, Default)]
pub struct CoAdvance {
    pub trajectory: ShiftTrajectory,
    /// Every `record_every`-th report, first and last always kept.
    pub reports: Vec<FunctionalReport<f64>>,
    pub steps: usize,
    pub max_substeps: usize,
    /// `sup_t int eta(U | U~(. - X))`.
    pub plain_entropy_sup: f64,
    /// `int_0^T int |v~'| Q` (trapezoid in time).
    pub layer_integral: f64,
    /// `int_0^T int v^beta |w_xi|^2` (trapezoid in time).
    pub gradient_integral: f64,
}

/// Advances `state` to `t_end` and the shift after every step.
pub fn co_advance(
    state: &mut FluidState<f64>,
    weight: &WeightFunction<f64>,
    eps: f64,
    delta3: f64,
    t_end: f64,
    cfl: f64,
    record_every: usize,
) -> Result<CoAdvance> {
    let mut out = CoAdvance::default();
    let (v0, rep0) = shift_velocity(state, weight, 0.0, eps, delta3);
    out.trajectory.push(state.time, v0, &rep0);
    out.plain_entropy_sup = rep0.plain_entropy;
    out.reports.push(rep0);
    let mut last = rep0;
    let mut x = 0.0;
    let mut cache = None;
    while state.time < t_end {
        let dt = stability_bound(state, cfl).min(t_end - state.time);
        step(state, dt)?;
        if t_end - state.time < 1e-12 * t_end.max(1.0) {
            state.time = t_end;
        }
        let st = advance_shift_cached(state, weight, x, dt, eps, delta3, &mut cache)?;
        x = st.shift;
        out.steps += 1;
        out.max_substeps = out.max_substeps.max(st.substeps);
        out.trajectory.chattering |= st.chattering;
        out.trajectory.push(state.time, st.velocity, &st.report);
        let r = st.report;
        out.plain_entropy_sup = out.plain_entropy_sup.max(r.plain_entropy);
        out.layer_integral += 0.5 * dt * (last.layer_entropy + r.layer_entropy);
        out.gradient_integral += 0.5 * dt * (last.gradient_energy + r.gradient_energy);
        if out.steps % record_every == 0 || state.time >= t_end {
            out.reports.push(r);
        }
        last = r;
    }
    Ok(out)
}

/// Scalar outcomes of a contraction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub eps: f64,
    pub lambda: f64,
    pub delta3: f64,
    pub delta0: f64,
    pub t_end: f64,
    pub steps: usize,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    /// `max_n (E_{n+1} - E_n)_+`.
    pub monotonicity_defect: f64,
    /// `1e-8 E(0) + 1e-14`.
    pub defect_tolerance: f64,
    /// First time a step increment exceeded the tolerance.
    pub violation_time: Option<f64>,
    /// `max |Xdot| eps^2 / (2 |J_bad| + 1)`; at most 1 by construction.
    pub velocity_budget_ratio: f64,
    pub g2_integral: f64,
    pub d_integral: f64,
    /// `(E(T) + delta0 ((eps / lambda) int G2 + int D)) / E(0)`.
    pub dissipation_ratio: f64,
    /// `int_0^T (eps^2 |Xdot| - 1)_+ dt`.
    pub shift_excess: f64,
    /// `(2 lambda / (delta0 eps)) int eta(U_0 | U~)`, the reference budget for `shift_excess`.
    pub shift_budget: f64,
    pub final_shift: f64,
    pub chattering: bool,
    pub max_substeps: usize,
}

impl ContractionSummary {
    #[must_use]
    pub fn contracting(&self) -> bool {
        self.violation_time.is_none()
    }
}

/// Result of [`run_contraction`].
#[derive(Debug, Clone)]
pub struct ContractionOutcome {
    pub trajectory: ShiftTrajectory,
    pub reports: Vec<FunctionalReport<f64>>,
    pub summary: ContractionSummary,
    pub state: FluidState<f64>,
}

/// Perturbed viscous shock in `(v, h)` with the shift co-advanced to `t_end`.
pub fn run_contraction(cfg: &ExperimentConfig) -> Result<ContractionOutcome> {
    let s = Setup::new(cfg)?;
    let mut state = init_state(&s.profile, Formulation::Vh, &cfg.effective_perturbations())?;
    let run = co_advance(&mut state, &s.weight, s.eps, cfg.delta3, cfg.t_end, cfg.cfl, cfg.record_every)?;
    let tr = &run.trajectory;
    let e0 = tr.entropy[0];
    let tol = 1e-8 * e0 + 1e-14;
    let mut defect = 0.0_f64;
    let mut violation = None;
    for k in 1..tr.len() {
        let inc = tr.entropy[k] - tr.entropy[k - 1];
        defect = defect.max(inc);
        if inc > tol && violation.is_none() {
            violation = Some(tr.t[k]);
        }
    }
    let last = tr.len() - 1;
    let (g2, d) = (tr.g2_accum[last], tr.d_accum[last]);
    let e_final = tr.entropy[last];
    let dissipation = e_final + cfg.delta0 * (s.eps / cfg.lambda * g2 + d);
    let mut excess = 0.0;
    for k in 1..tr.len() {
        let f = |j: usize| (s.eps * s.eps * tr.xdot[j].abs() - 1.0).max(0.0);
        excess += 0.5 * (tr.t[k] - tr.t[k - 1]) * (f(k) + f(k - 1));
    }
    let plain0 = run.reports[0].plain_entropy;
    let summary = ContractionSummary {
        eps: s.eps,
        lambda: cfg.lambda,
        delta3: cfg.delta3,
        delta0: cfg.delta0,
        t_end: cfg.t_end,
        steps: run.steps,
        initial_entropy: e0,
        final_entropy: e_final,
        monotonicity_defect: defect,
        defect_tolerance: tol,
        violation_time: violation,
        velocity_budget_ratio: tr.velocity_budget_ratio(s.eps),
        g2_integral: g2,
        d_integral: d,
        dissipation_ratio: if e0 > 0.0 { dissipation / e0 } else { 0.0 },
        shift_excess: excess,
        shift_budget: 2.0 * cfg.lambda / (cfg.delta0 * s.eps) * plain0,
        final_shift: tr.x[last],
        chattering: tr.chattering,
        max_substeps: run.max_substeps,
    };
    Ok(ContractionOutcome { trajectory: run.trajectory, reports: run.reports, summary, state })
}

/// Discrepancy between the finite-difference entropy rate and `Xdot Y + J_bad - J_good`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub dx: f64,
    pub max_abs_error: f64,
    pub max_rate: f64,
    /// `max_abs_error / max_rate`.
    pub relative_error: f64,
}

/// Compares `(E_{n+1} - E_n) / dt` with the trapezoid average of the right side.
/// Needs a run recorded at every step.
pub fn evolution_identity(trajectory: &ShiftTrajectory, reports: &[FunctionalReport<f64>], dx: f64) -> Result<IdentityCheck> {
    if reports.len() != trajectory.len() {
        return Err(ShockError::InvalidArgument("evolution identity needs a report at every step".into()));
    }
    let rate: Vec<f64> = reports.iter().zip(&trajectory.xdot).map(|(r, &xd)| r.entropy_rate(xd)).collect();
    let mut err = 0.0_f64;
    for k in 1..rate.len() {
        let fd = (trajectory.entropy[k] - trajectory.entropy[k - 1]) / (trajectory.t[k] - trajectory.t[k - 1]);
        err = err.max((fd - 0.5 * (rate[k] + rate[k - 1])).abs());
    }
    let max_rate = rate.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(IdentityCheck { dx, max_abs_error: err, max_rate, relative_error: err / max_rate })
}

/// Contraction run to `t_end` at spacing `dx` followed by [`evolution_identity`].
pub fn identity_check(cfg: &ExperimentConfig, dx: f64, t_end: f64) -> Result<IdentityCheck> {
    let mut c = cfg.clone();
    c.dx = dx;
    c.t_end = t_end;
    c.record_every = 1;
    let out = run_contraction(&c)?;
    evolution_identity(&out.trajectory, &out.reports, dx)
}

/// Max-norm drift of the unperturbed profile over `[0, t_end]` at spacing `dx`.
pub fn steady_drift(cfg: &ExperimentConfig, dx: f64, t_end: f64) -> Result<f64> {
    let s = Setup::with_grid(cfg, cfg.resolved_extent()?, dx)?;
    let initial = init_state(&s.profile, Formulation::Vh, &[])?;
    let mut state = initial.clone();
    advance_to(&mut state, t_end, cfg.cfl)?;
    Ok(max_abs_diff(&state.v, &initial.v).max(max_abs_diff(&state.w, &initial.w)))
}

/// Max-norm gap between "evolve `(v, u)` then transform" and "transform then evolve `(v, h)`".
pub fn bd_equivalence_gap(cfg: &ExperimentConfig, dx: f64, t_end: f64) -> Result<f64> {
    let s = Setup::with_grid(cfg, cfg.resolved_extent()?, dx)?;
    let start = init_state(&s.profile, Formulation::Vu, &cfg.effective_perturbations())?;
    let mut via_u = start.clone();
    advance_to(&mut via_u, t_end, cfg.cfl)?;
    let via_u = bd_transform(&via_u)?;
    let mut via_h = bd_transform(&start)?;
    advance_to(&mut via_h, t_end, cfg.cfl)?;
    Ok(max_abs_diff(&via_u.v, &via_h.v).max(max_abs_diff(&via_u.w, &via_h.w)))
}

/// Max-norm gap between a direct run at viscosity `nu` (spacing `nu dx`) and the
/// unit-viscosity run at spacing `dx` rescaled by `nu`.
pub fn rescaling_gap(cfg: &ExperimentConfig, nu: f64, dx: f64, t_end: f64) -> Result<f64> {
    let mut unit_cfg = cfg.clone();
    unit_cfg.nu = 1.0;
    let s = Setup::with_grid(&unit_cfg, cfg.resolved_extent()?, dx)?;
    let unit = init_state(&s.profile, Formulation::Vu, &cfg.effective_perturbations())?;
    let mut direct = rescale_nu(&unit, nu)?;
    let mut unit = unit;
    advance_to(&mut unit, t_end / nu, cfg.cfl)?;
    advance_to(&mut direct, t_end, cfg.cfl)?;
    let back = rescale_nu(&unit, nu)?;
    Ok(max_abs_diff(&back.v, &direct.v).max(max_abs_diff(&back.w, &direct.w)))
}

/// `r`-truncation (`r = nu^(1/4)`) then mollification at radius `sqrt(nu)`.
///
/// Inside `|x| <= 1/r` the data is clamped to `v in [r, 1/r]`, `u in [-1/r, 1/r]`;
/// outside it is replaced by the end states. Returns `(v, u)` at the grid nodes.
pub fn well_prepared_data(
    v0: impl Fn(f64) -> f64 + Sync,
    u0: impl Fn(f64) -> f64 + Sync,
    ends: &EndStates<f64>,
    nu: f64,
    grid: &UniformGrid<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(nu > 0.0) {
        return Err(ShockError::InvalidArgument(format!("nu must be positive, got {nu}")));
    }
    let r = nu.powf(0.25);
    let truncated = |x: f64| -> (f64, f64) {
        if x.abs() <= 1.0 / r {
            (v0(x).clamp(r, 1.0 / r), u0(x).clamp(-1.0 / r, 1.0 / r))
        } else if x < 0.0 {
            (ends.v_minus, ends.u_minus)
        } else {
            (ends.v_plus, ends.u_plus)
        }
    };
    let radius = nu.sqrt();
    let half = (radius / grid.dx).ceil() as isize;
    let kernel: Vec<(f64, f64)> = (-half..=half)
        .map(|j| {
            let off = j as f64 * grid.dx;
            (off, bump_shape(off / radius))
        })
        .filter(|&(_, k)| k > 0.0)
        .collect();
    let total: f64 = kernel.iter().map(|k| k.1).sum();
    let (v, u): (Vec<f64>, Vec<f64>) = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            if total == 0.0 {
                return truncated(x);
            }
            kernel.iter().fold((0.0, 0.0), |acc, &(off, k)| {
                let (a, b) = truncated(x - off);
                (acc.0 + k * a / total, acc.1 + k * b / total)
            })
        })
        .unzip();
    if v.iter().chain(&u).any(|x| !x.is_finite()) {
        return Err(ShockError::NonFinite("prepared data".into()));
    }
    Ok((v, u))
}

/// `int eta((v, u) | (v_bar, u_bar)(x - position))` by the trapezoid rule.
#[must_use]
pub fn entropy_shock_distance(
    model: &GasModel<f64>,
    ends: &EndStates<f64>,
    grid: &UniformGrid<f64>,
    v: &[f64],
    u: &[f64],
    position: f64,
) -> f64 {
    let q = trapezoid_weights(grid.n, grid.dx);
    (0..grid.n)
        .map(|i| q[i] * model.eta_rel((v[i], u[i]), entropy_shock(ends, grid.x(i) - position, 0.0)))
        .sum()
}

/// Entropy shock plus the configured perturbations, in physical coordinates.
fn perturbed_shock(ends: &EndStates<f64>, perturbations: &[Perturbation], x: f64) -> (f64, f64) {
    let (mut v, mut u) = entropy_shock(ends, x, 0.0);
    for p in perturbations {
        let (dv, du) = p.value(x);
        v += dv;
        u += du;
    }
    (v, u)
}

/// Ordinary least squares of `d(t) ~ a + b (1 + t)`; returns `(a, b)`.
fn affine_fit(t: &[f64], d: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let xs: Vec<f64> = t.iter().map(|s| 1.0 + s).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = d.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(d).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Diagnostics of one viscosity in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub nu: f64,
    /// Physical spacing `nu dx_1`.
    pub dx: f64,
    pub steps: usize,
    /// Relative max-norm gap between the direct run and the rescaled unit run.
    pub rescaling_mismatch: f64,
    /// `int eta(U_nu(0) | U_bar)` of the prepared data.
    pub prepared_entropy: f64,
    /// (a): left side of the uniform estimate against the shifted viscous shock.
    pub viscous_distance: f64,
    /// (a) divided by `E_0`; absent when `E_0 = 0`.
    pub viscous_ratio: Option<f64>,
    /// (b) at the final time: distance of `(v, u)` to the shifted entropy shock.
    pub entropy_distance: f64,
    /// (b), supremum over the recorded times.
    pub entropy_distance_sup: f64,
    /// (c): `sup_t |X_nu(t) - sigma t|`.
    pub shift_drift: f64,
    /// Fitted `A`, `B` in `A E_0 + B (1 + t) sqrt(E_0)`; absent when `E_0 = 0`.
    pub fit_a: Option<f64>,
    pub fit_b: Option<f64>,
    /// `B |v_- - v_+|`, comparable across shock amplitudes.
    pub drift_times_jump: Option<f64>,
    pub chattering: bool,
    /// `(t, X_nu(t) - sigma t)` in physical units.
    pub shift_series: Vec<(f64, f64)>,
}

/// Result of [`run_nu_sweep`]; failed entries carry their error instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub eps: f64,
    pub sigma: f64,
    /// `int eta((v0, u0) | (v_bar, u_bar))`.
    pub initial_energy: f64,
    pub t_end: f64,
    pub dx_unit: f64,
    pub truncation_rule: String,
    pub entries: Vec<SweepEntry>,
    pub failures: Vec<(f64, String)>,
    /// Largest `(a)/E_0` ratio between consecutive viscosities.
    pub max_ratio_growth: Option<f64>,
    /// `max B / min B` over the entries.
    pub fit_b_spread: Option<f64>,
}

fn sweep_entry(cfg: &ExperimentConfig, nu: f64, dx1: f64, e0: f64) -> Result<SweepEntry> {
    let pert = cfg.effective_perturbations();
    let mut unit_cfg = cfg.clone();
    unit_cfg.nu = 1.0;
    let extent = cfg.resolved_extent()?;
    let s = Setup::with_grid(&unit_cfg, extent, dx1)?;
    let unit_grid = s.profile.grid;
    let grid = unit_grid.scaled(nu);
    let data_v = |x: f64| perturbed_shock(&s.ends, &pert, x).0;
    let data_u = |x: f64| perturbed_shock(&s.ends, &pert, x).1;
    let (v, u) = well_prepared_data(data_v, data_u, &s.ends, nu, &grid)?;
    let far = FarField::from_ends(&s.ends);
    let prepared_entropy = entropy_shock_distance(&s.model, &s.ends, &grid, &v, &u, 0.0);

    // Unit-viscosity (v, h) run with the shift.
    let unit_vu = FluidState::new(s.model, unit_grid, Formulation::Vu, s.ends.sigma, v.clone(), u.clone(), far)?;
    let mut unit_vh = bd_transform(&unit_vu)?;
    let t_unit = cfg.sweep.t_end / nu;
    let run = co_advance(&mut unit_vh, &s.weight, s.eps, cfg.delta3, t_unit, cfg.cfl, usize::MAX)?;
    let tr = &run.trajectory;
    let viscous_distance = nu * (run.plain_entropy_sup + run.layer_integral + run.gradient_integral);
    let series: Vec<(f64, f64)> = tr.t.iter().zip(&tr.x).map(|(t, x)| (nu * t, nu * x)).collect();
    let shift_at = |t: f64| crate::shift::interpolate(&tr.t, &tr.x, t / nu) * nu;

    // Direct run at viscosity nu, tracking the distance to the shifted entropy shock.
    let model_nu = s.model.with_nu(nu)?;
    let mut direct = FluidState::new(model_nu, grid, Formulation::Vu, s.ends.sigma, v, u, far)?;
    let mut dist_sup = entropy_shock_distance(&model_nu, &s.ends, &grid, &direct.v, &direct.w, 0.0);
    let mut steps = 0;
    while direct.time < cfg.sweep.t_end {
        let dt = stability_bound(&direct, cfg.cfl).min(cfg.sweep.t_end - direct.time);
        step(&mut direct, dt)?;
        steps += 1;
        if cfg.sweep.t_end - direct.time < 1e-12 * cfg.sweep.t_end.max(1.0) {
            direct.time = cfg.sweep.t_end;
        }
        let d = entropy_shock_distance(&model_nu, &s.ends, &grid, &direct.v, &direct.w, shift_at(direct.time));
        dist_sup = dist_sup.max(d);
    }
    let entropy_distance =
        entropy_shock_distance(&model_nu, &s.ends, &grid, &direct.v, &direct.w, shift_at(cfg.sweep.t_end));

    // Rescaling gate: the unit (v, u) run rescaled must reproduce the direct run.
    let mut unit = unit_vu;
    advance_to(&mut unit, t_unit, cfg.cfl)?;
    let scale = direct.v.iter().chain(&direct.w).fold(1.0_f64, |m, x| m.max(x.abs()));
    let mismatch = max_abs_diff(&unit.v, &direct.v).max(max_abs_diff(&unit.w, &direct.w)) / scale;
    if !(mismatch <= cfg.sweep.rescaling_tolerance) {
        return Err(ShockError::RescalingMismatch { mismatch, tolerance: cfg.sweep.rescaling_tolerance });
    }

    let drift = series.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    let (fit_a, fit_b) = if e0 > 0.0 {
        let mut running = 0.0_f64;
        let env: Vec<f64> = series.iter().map(|p| {
            running = running.max(p.1.abs());
            running
        }).collect();
        let ts: Vec<f64> = series.iter().map(|p| p.0).collect();
        let (a, b) = affine_fit(&ts, &env);
        (Some(a / e0), Some(b / e0.sqrt()))
    } else {
        (None, None)
    };
    Ok(SweepEntry {
        nu,
        dx: grid.dx,
        steps,
        rescaling_mismatch: mismatch,
        prepared_entropy,
        viscous_distance,
        viscous_ratio: (e0 > 0.0).then(|| viscous_distance / e0),
        entropy_distance,
        entropy_distance_sup: dist_sup,
        shift_drift: drift,
        fit_a,
        fit_b,
        drift_times_jump: fit_b.map(|b| b * (s.ends.v_minus - s.ends.v_plus)),
        chattering: tr.chattering,
        shift_series: series,
    })
}

/// `int eta((v0, u0) | (v_bar, u_bar))` on the finest sweep grid refined eightfold.
pub fn initial_energy(cfg: &ExperimentConfig) -> Result<f64> {
    let ends = cfg.ends()?;
    let model = cfg.model()?;
    let pert = cfg.effective_perturbations();
    let nu_min = cfg.nu_list.iter().copied().fold(f64::INFINITY, f64::min);
    let dx1 = sweep_dx(cfg)?;
    let grid = UniformGrid::centered(cfg.resolved_extent()? * nu_min, dx1 * nu_min / 8.0)?;
    let (v, u): (Vec<f64>, Vec<f64>) = grid.nodes().iter().map(|&x| perturbed_shock(&ends, &pert, x)).unzip();
    let e0 = entropy_shock_distance(&model, &ends, &grid, &v, &u, 0.0);
    if !e0.is_finite() {
        return Err(ShockError::InvalidArgument("initial relative entropy is not integrable".into()));
    }
    Ok(e0)
}

/// Unit-viscosity sweep spacing: configured, or `1 / (40 eps)`.
pub fn sweep_dx(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.sweep.dx {
        Some(d) => Ok(d),
        None => Ok(1.0 / (40.0 * cfg.strength()?)),
    }
}

/// Worker pool honoring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| ShockError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| ShockError::InvalidConfig(e.to_string()))
}

/// Vanishing-viscosity sweep over `cfg.nu_list` with prepared entropy-shock data.
pub fn run_nu_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let ends = cfg.ends()?;
    let eps = cfg.strength()?;
    let e0 = initial_energy(cfg)?;
    let dx1 = sweep_dx(cfg)?;
    let results: Vec<Result<SweepEntry>> =
        thread_pool()?.install(|| cfg.nu_list.par_iter().map(|&nu| sweep_entry(cfg, nu, dx1, e0)).collect());
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (&nu, r) in cfg.nu_list.iter().zip(results) {
        match r {
            Ok(e) => entries.push(e),
            Err(e) => failures.push((nu, e.to_string())),
        }
    }
    let ratios: Vec<f64> = entries.iter().filter_map(|e| e.viscous_ratio).collect();
    let max_ratio_growth = (ratios.len() >= 2).then(|| ratios.windows(2).map(|w| w[1] / w[0]).fold(f64::MIN, f64::max));
    let bs: Vec<f64> = entries.iter().filter_map(|e| e.fit_b).collect();
    let fit_b_spread = (bs.len() >= 2).then(|| {
        let hi = bs.iter().copied().fold(f64::MIN, f64::max);
        let lo = bs.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    });
    Ok(SweepReport {
        eps,
        sigma: ends.sigma,
        initial_energy: e0,
        t_end: cfg.sweep.t_end,
        dx_unit: dx1,
        truncation_rule: "r = nu^(1/4), mollifier radius sqrt(nu)".into(),
        entries,
        failures,
        max_ratio_growth,
        fit_b_spread,
    })
}
