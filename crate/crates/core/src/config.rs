//! Experiment configuration: JSON schema, defaults and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShockError};
use crate::poincare::StressConfig;
use crate::profile::{rankine_hugoniot, EndStates, Formulation};
use crate::solver::{Perturbation, DEFAULT_CFL};
use crate::thermo::GasModel;

/// Minimum grid half-width in units of `1 / eps`.
pub const MIN_EXTENT_OVER_EPS: f64 = 30.0;
pub const MAX_NU_LIST: usize = 5;

fn one() -> f64 {
    1.0
}
fn zero() -> f64 {
    0.0
}
fn default_lambda() -> f64 {
    0.3
}
fn default_delta3() -> f64 {
    0.1
}
fn default_dx() -> f64 {
    0.1
}
fn default_t_end() -> f64 {
    10.0
}
fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_nu_list() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_record_every() -> usize {
    1
}
fn default_delta0() -> f64 {
    0.25
}
fn default_formulation() -> FormulationName {
    FormulationName::Vh
}

/// Serialized name of a [`Formulation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationName {
    Vh,
    Vu,
}

impl From<FormulationName> for Formulation {
    fn from(f: FormulationName) -> Self {
        match f {
            FormulationName::Vh => Formulation::Vh,
            FormulationName::Vu => Formulation::Vu,
        }
    }
}

/// Settings of the vanishing-viscosity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    /// Physical horizon; the unit-viscosity runs go to `t_end / nu`.
    #[serde(default = "default_sweep_t_end")]
    pub t_end: f64,
    /// Unit-viscosity grid spacing; `None` means `1 / (40 eps)`.
    #[serde(default)]
    pub dx: Option<f64>,
    /// Relative tolerance of the rescaling-equivalence gate.
    #[serde(default = "default_rescaling_tolerance")]
    pub rescaling_tolerance: f64,
}

fn default_sweep_t_end() -> f64 {
    0.5
}
fn default_rescaling_tolerance() -> f64 {
    1e-9
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { t_end: default_sweep_t_end(), dx: None, rescaling_tolerance: default_rescaling_tolerance() }
    }
}

/// Settings of the Poincare stress search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSettings {
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_poincare_delta")]
    pub delta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_bisection_steps")]
    pub bisection_steps: usize,
}

fn default_c1() -> f64 {
    10.0
}
fn default_poincare_delta() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    10_000
}
fn default_refine() -> usize {
    8
}
fn default_sweeps() -> usize {
    12
}
fn default_bisection_steps() -> usize {
    30
}

impl Default for PoincareSettings {
    fn default() -> Self {
        Self {
            c1: default_c1(),
            delta: default_poincare_delta(),
            samples: default_samples(),
            refine: default_refine(),
            sweeps: default_sweeps(),
            bisection_steps: default_bisection_steps(),
        }
    }
}

/// Ranges sampled by the relative-quantity inequality oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSettings {
    #[serde(default = "default_w_range")]
    pub w_range: (f64, f64),
    #[serde(default = "default_local_delta")]
    pub local_delta: f64,
    #[serde(default = "default_big_m")]
    pub big_m: f64,
    #[serde(default = "default_k")]
    pub k: f64,
}

fn default_w_range() -> (f64, f64) {
    (0.5, 2.0)
}
fn default_local_delta() -> f64 {
    0.2
}
fn default_big_m() -> f64 {
    2.0
}
fn default_k() -> f64 {
    6.0
}

impl Default for LemmaSettings {
    fn default() -> Self {
        Self { w_range: default_w_range(), local_delta: default_local_delta(), big_m: default_big_m(), k: default_k() }
    }
}

/// Everything a run needs. Deserialize, then pass through [`validate_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gamma: f64,
    pub alpha: f64,
    /// Viscosity prefactor; defaults to `gamma`.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default = "one")]
    pub nu: f64,
    pub v_minus: f64,
    #[serde(default = "zero")]
    pub u_minus: f64,
    pub v_plus: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_delta3")]
    pub delta3: f64,
    /// Grid half-width; defaults to `30 / eps`.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_formulation")]
    pub formulation: FormulationName,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    /// Descending viscosities for sweeps.
    #[serde(default = "default_nu_list")]
    pub nu_list: Vec<f64>,
    /// Offsets every noise seed and seeds the Poincare sampler.
    #[serde(default)]
    pub seed: u64,
    /// Keep every `record_every`-th functional report.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Dissipation weight in the contraction budget.
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub poincare: PoincareSettings,
    #[serde(default)]
    pub lemmas: LemmaSettings,
}

impl ExperimentConfig {
    /// Acceptance setting: `gamma = 2`, `alpha = 1`, `v_- = 1`, `v_+ = 0.9`.
    #[must_use]
    pub fn reference() -> Self {
        serde_json::from_str(r#"{"gamma": 2.0, "alpha": 1.0, "v_minus": 1.0, "v_plus": 0.9}"#)
            .expect("reference config parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ShockError::InvalidConfig(e.to_string()))
    }

    pub fn model(&self) -> Result<GasModel<f64>> {
        GasModel::new(self.gamma, self.alpha, self.b.unwrap_or(self.gamma), self.nu)
    }

    pub fn ends(&self) -> Result<EndStates<f64>> {
        rankine_hugoniot(&self.model()?, self.v_minus, self.u_minus, self.v_plus)
    }

    /// `|p(v_-) - p(v_+)|`.
    pub fn strength(&self) -> Result<f64> {
        Ok(self.ends()?.strength(&self.model()?))
    }

    /// Resolved grid half-width.
    pub fn resolved_extent(&self) -> Result<f64> {
        match self.extent {
            Some(e) => Ok(e),
            None => Ok(MIN_EXTENT_OVER_EPS / self.strength()?),
        }
    }

    /// Perturbations with noise seeds offset by [`ExperimentConfig::seed`].
    #[must_use]
    pub fn effective_perturbations(&self) -> Vec<Perturbation> {
        self.perturbations
            .iter()
            .map(|p| match p.clone() {
                Perturbation::Noise { field, amplitude, count, window, min_width, max_width, seed } => Perturbation::Noise {
                    field,
                    amplitude,
                    count,
                    window,
                    min_width,
                    max_width,
                    seed: seed.wrapping_add(self.seed),
                },
                other => other,
            })
            .collect()
    }

    #[must_use]
    pub fn stress_config(&self) -> StressConfig {
        let p = &self.poincare;
        let mut c = StressConfig::new(p.c1, p.delta, p.samples, self.seed);
        c.refine = p.refine;
        c.sweeps = p.sweeps;
        c.bisection_steps = p.bisection_steps;
        c
    }
}

fn invalid(msg: String) -> ShockError {
    ShockError::InvalidConfig(msg)
}

/// Checks every hypothesis and fills `b` and `extent`.
pub fn validate_config(raw: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut c = raw;
    let finite = [
        ("gamma", c.gamma),
        ("alpha", c.alpha),
        ("nu", c.nu),
        ("v_minus", c.v_minus),
        ("u_minus", c.u_minus),
        ("v_plus", c.v_plus),
        ("lambda", c.lambda),
        ("delta3", c.delta3),
        ("dx", c.dx),
        ("t_end", c.t_end),
        ("cfl", c.cfl),
        ("delta0", c.delta0),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            return Err(invalid(format!("{name} must be finite, got {v}")));
        }
    }
    if !(c.gamma > 1.0) {
        return Err(invalid(format!("gamma = {} violates gamma > 1 (pressure law hypothesis)", c.gamma)));
    }
    if !(c.alpha > 0.0) {
        return Err(invalid(format!("alpha = {} violates alpha > 0 (viscosity law hypothesis)", c.alpha)));
    }
    if !(c.alpha <= c.gamma && c.gamma <= c.alpha + 1.0) {
        return Err(invalid(format!(
            "alpha = {}, gamma = {} violate alpha <= gamma <= alpha + 1 (viscosity exponent window)",
            c.alpha, c.gamma
        )));
    }
    let b = c.b.unwrap_or(c.gamma);
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("b = {b} must be positive (viscosity law hypothesis)")));
    }
    c.b = Some(b);
    if !(c.nu > 0.0) {
        return Err(invalid(format!("nu = {} must be positive", c.nu)));
    }
    if !(c.lambda > 0.0 && c.lambda < 0.5) {
        return Err(invalid(format!("lambda = {} violates 0 < lambda < 1/2 (weight strength hypothesis)", c.lambda)));
    }
    if !(c.v_plus > 0.0 && c.v_plus < c.v_minus) {
        return Err(invalid(format!(
            "v_plus = {}, v_minus = {} violate 0 < v_plus < v_minus (Lax compressive shock)",
            c.v_plus, c.v_minus
        )));
    }
    if !(c.delta3 > 0.0) {
        return Err(invalid(format!("delta3 = {} must be positive (truncation level)", c.delta3)));
    }
    if !(c.dx > 0.0) || !(c.t_end > 0.0) {
        return Err(invalid(format!("dx = {} and t_end = {} must be positive", c.dx, c.t_end)));
    }
    if !(c.cfl > 0.0 && c.cfl <= 1.0) {
        return Err(invalid(format!("cfl = {} must lie in (0, 1]", c.cfl)));
    }
    if c.record_every == 0 {
        return Err(invalid("record_every must be at least 1".into()));
    }
    if !(c.delta0 > 0.0) {
        return Err(invalid(format!("delta0 = {} must be positive", c.delta0)));
    }
    let eps = c.strength()?;
    let min_extent = MIN_EXTENT_OVER_EPS / eps;
    let extent = c.extent.unwrap_or(min_extent);
    // Relative slack keeps the filled default stable under a JSON round trip.
    if !(extent >= min_extent * (1.0 - 1e-12)) {
        return Err(invalid(format!("extent = {extent} is below 30 / eps = {min_extent} (far-field resolution)")));
    }
    c.extent = Some(extent);
    if c.nu_list.is_empty() || c.nu_list.len() > MAX_NU_LIST {
        return Err(invalid(format!("nu_list needs 1 to {MAX_NU_LIST} entries, got {}", c.nu_list.len())));
    }
    if c.nu_list.iter().any(|&n| !(n > 0.0 && n.is_finite())) || c.nu_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid(format!("nu_list must be positive and strictly descending, got {:?}", c.nu_list)));
    }
    if !(c.sweep.t_end > 0.0) || c.sweep.dx.is_some_and(|d| !(d > 0.0)) || !(c.sweep.rescaling_tolerance > 0.0) {
        return Err(invalid("sweep settings need positive t_end, dx and rescaling_tolerance".into()));
    }
    let p = &c.poincare;
    if !(p.c1 > 0.0 && p.delta > 0.0) {
        return Err(invalid(format!("poincare c1 = {} and delta = {} must be positive", p.c1, p.delta)));
    }
    let l = &c.lemmas;
    if !(l.w_range.0 > 0.0 && l.w_range.0 < l.w_range.1) || !(l.local_delta > 0.0) || !(l.big_m > 1.0) {
        return Err(invalid("lemma ranges need 0 < w_lo < w_hi, positive local_delta and big_m > 1".into()));
    }
    if !(l.k >= 3.0 * l.big_m) {
        return Err(invalid(format!("lemma level k = {} violates k >= 3 M = {}", l.k, 3.0 * l.big_m)));
    }
    for pert in &c.perturbations {
        pert.validate().map_err(|e| invalid(e.to_string()))?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        validate_config(ExperimentConfig::from_json(text)?)
    }

    #[test]
    fn shallow_water_is_accepted_with_defaults() {
        let c = parse(r#"{"gamma": 2, "alpha": 1, "v_minus": 1, "v_plus": 0.9}"#).unwrap();
        assert_eq!(c.b, Some(2.0));
        let eps = c.strength().unwrap();
        assert!((c.extent.unwrap() - 30.0 / eps).abs() < 1e-12);
        assert_eq!(c.nu_list, vec![0.1, 0.05, 0.025]);
        assert_eq!(c, validate_config(ExperimentConfig::reference()).unwrap());
    }

    #[test]
    fn constraint_violations_are_rejected() {
        let base = r#""v_minus": 1, "v_plus": 0.9"#;
        for (bad, needle) in [
            (format!(r#"{{"gamma": 2, "alpha": 0.5, {base}}}"#), "alpha + 1"),
            (format!(r#"{{"gamma": 2, "alpha": 1, "lambda": 0.6, {base}}}"#), "lambda"),
            (format!(r#"{{"gamma": 0.9, "alpha": 0.5, {base}}}"#), "gamma > 1"),
            (r#"{"gamma": 2, "alpha": 1, "v_minus": 0.9, "v_plus": 1}"#.to_string(), "Lax"),
            (format!(r#"{{"gamma": 2, "alpha": 1, "extent": 10, {base}}}"#), "30 / eps"),
            (format!(r#"{{"gamma": 2, "alpha": 1, "nu_list": [0.1, 0.2], {base}}}"#), "descending"),
        ] {
            let e = parse(&bad).unwrap_err();
            assert!(e.is_validation());
            assert!(e.to_string().contains(needle), "{e}");
        }
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let e = parse(r#"{"alpha": 1, "v_minus": 1, "v_plus": 0.9}"#).unwrap_err();
        assert!(e.to_string().contains("gamma") && e.is_validation());
        let e = parse(r#"{"gamma": 2, "alpha": 1, "v_minus": 1, "v_plus": 0.9, "lamda": 0.2}"#).unwrap_err();
        assert!(e.to_string().contains("lamda"));
    }

    #[test]
    fn validation_round_trip_is_idempotent() {
        let text = r#"{"gamma": 1.4, "alpha": 0.7, "v_minus": 1.2, "v_plus": 1.0, "seed": 5,
            "perturbations": [{"kind": "bump", "field": "volume", "amplitude": 0.05, "center": 0, "width": 2}]}"#;
        let once = parse(text).unwrap();
        let twice = parse(&serde_json::to_string(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn seed_offsets_noise_only() {
        let mut c = ExperimentConfig::reference();
        c.seed = 10;
        c.perturbations = vec![
            Perturbation::Noise { field: crate::solver::Field::Volume, amplitude: 0.1, count: 2, window: 1.0, min_width: 0.5, max_width: 1.0, seed: 3 },
            Perturbation::Bump { field: crate::solver::Field::Volume, amplitude: 0.1, center: 0.0, width: 1.0 },
        ];
        let eff = c.effective_perturbations();
        assert!(matches!(eff[0], Perturbation::Noise { seed: 13, .. }));
        assert_eq!(eff[1], c.perturbations[1]);
    }
}
