//! Empirical oracles for the inequalities between relative entropy,
//! relative pressure and pressure differences.
//!
//! Each oracle scans a deterministic sample set, fits the sharpest constant
//! on it, then re-checks the inequality on an offset, denser set with a 10%
//! margin. Anything failing the re-check is counted as a violation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GasModel;
use crate::error::{Result, ShockError};

/// Margin applied to fitted constants when re-checking on the dense set.
const RECHECK_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub range: BTreeMap<String, f64>,
    pub empirical_constants: BTreeMap<String, f64>,
    pub worst_witness: BTreeMap<String, f64>,
    pub violations: usize,
}

impl LemmaReport {
    fn new(lemma: &str) -> Self {
        Self {
            lemma: lemma.to_string(),
            range: BTreeMap::new(),
            empirical_constants: BTreeMap::new(),
            worst_witness: BTreeMap::new(),
            violations: 0,
        }
    }

    /// All fitted constants finite and strictly positive, and no violations.
    #[must_use]
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.empirical_constants.values().all(|c| c.is_finite() && *c > 0.0)
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_space_open(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

/// Tracks an extremum and the sample attaining it.
struct Extremum {
    value: f64,
    witness: [f64; 3],
    maximize: bool,
}

impl Extremum {
    fn min() -> Self {
        Self { value: f64::INFINITY, witness: [f64::NAN; 3], maximize: false }
    }

    fn max() -> Self {
        Self { value: f64::NEG_INFINITY, witness: [f64::NAN; 3], maximize: true }
    }

    fn offer(&mut self, value: f64, v: f64, w: f64) {
        self.offer3(value, [v, w, f64::NAN]);
    }

    fn offer3(&mut self, value: f64, witness: [f64; 3]) {
        if !value.is_finite() {
            return;
        }
        if (self.maximize && value > self.value) || (!self.maximize && value < self.value) {
            self.value = value;
            self.witness = witness;
        }
    }
}

fn check_left_state(v_minus: f64) -> Result<()> {
    if !(v_minus > 0.0 && v_minus.is_finite()) {
        return Err(ShockError::InvalidArgument(format!("left volume must be positive, got {v_minus}")));
    }
    Ok(())
}

/// Global comparison constants for `w` in `w_range` (inside `(v_minus/2, v_minus)`):
/// `c1` with `Q(v|w) >= c1 |v-w|^2` on `v <= 3 v_minus`,
/// `c2` with `Q(v|w) >= c2 |v-w|` on `v >= 3 v_minus`,
/// `c5` with `|p(v)-p(w)| <= c5 |v-w|` on `v >= v_minus/2`, `w in (v_minus/4, v_minus)`.
pub fn global_constants(m: &GasModel<f64>, v_minus: f64, w_range: (f64, f64)) -> Result<LemmaReport> {
    check_left_state(v_minus)?;
    let (wl, wh) = w_range;
    if !(0.0 < wl && wl < wh) {
        return Err(ShockError::InvalidArgument(format!("bad w range ({wl}, {wh})")));
    }
    let scan = |nv: usize, nw: usize, shift: f64| {
        let ws = lin_space_open(wl, wh, nw);
        let near = log_space(1e-3 * v_minus * shift, 3.0 * v_minus, nv);
        let far = log_space(3.0 * v_minus, 1e3 * v_minus * shift, nv);
        let ws5 = lin_space_open(0.25 * v_minus, v_minus, nw);
        let far5 = log_space(0.5 * v_minus, 1e3 * v_minus * shift, 2 * nv);
        (ws, near, far, ws5, far5)
    };
    let (ws, near, far, ws5, far5) = scan(600, 40, 1.0);
    let mut c1 = Extremum::min();
    let mut c2 = Extremum::min();
    let mut c5 = Extremum::max();
    for &w in &ws {
        for &v in &near {
            if (v - w).abs() > 1e-9 * w {
                c1.offer(m.relative_entropy(v, w) / ((v - w) * (v - w)), v, w);
            }
        }
        for &v in &far {
            c2.offer(m.relative_entropy(v, w) / (v - w).abs(), v, w);
        }
    }
    for &w in &ws5 {
        for &v in &far5 {
            if (v - w).abs() > 1e-9 * w {
                c5.offer((m.pressure(v) - m.pressure(w)).abs() / (v - w).abs(), v, w);
            }
        }
    }

    let mut violations = 0;
    let (ws, near, far, ws5, far5) = scan(1499, 57, 0.999);
    for &w in &ws {
        for &v in &near {
            if m.relative_entropy(v, w) * RECHECK_MARGIN < c1.value * (v - w) * (v - w) {
                violations += 1;
            }
        }
        for &v in &far {
            if m.relative_entropy(v, w) * RECHECK_MARGIN < c2.value * (v - w).abs() {
                violations += 1;
            }
        }
    }
    for &w in &ws5 {
        for &v in &far5 {
            if (m.pressure(v) - m.pressure(w)).abs() > RECHECK_MARGIN * c5.value * (v - w).abs() {
                violations += 1;
            }
        }
    }

    let mut r = LemmaReport::new("global_relative_entropy_bounds");
    r.range.insert("v_minus".into(), v_minus);
    r.range.insert("w_min".into(), wl);
    r.range.insert("w_max".into(), wh);
    r.empirical_constants.insert("c1".into(), c1.value);
    r.empirical_constants.insert("c2".into(), c2.value);
    r.empirical_constants.insert("c5".into(), c5.value);
    for (name, e) in [("c1", &c1), ("c2", &c2), ("c5", &c5)] {
        r.worst_witness.insert(format!("{name}_v"), e.witness[0]);
        r.worst_witness.insert(format!("{name}_w"), e.witness[1]);
    }
    r.violations = violations;
    Ok(r)
}

/// Fitted local constants at pressure radius `delta`.
struct LocalFit {
    c_sharp: Extremum,
    c_equiv: Extremum,
}

fn local_fit(m: &GasModel<f64>, v_minus: f64, delta: f64, n: usize) -> LocalFit {
    let g = m.gamma;
    let p_minus = m.pressure(v_minus);
    let mut c_sharp = Extremum::max();
    let mut c_equiv = Extremum::max();
    for s in lin_space_open(-1.0, 1.0, n) {
        let pw = p_minus + s * delta;
        let w = m.inverse_pressure(pw);
        let lead = (g + 1.0) / (2.0 * g * pw);
        for t in lin_space_open(-1.0, 1.0, n) {
            let dp = t * delta;
            if dp.abs() < 1e-6 * delta {
                continue;
            }
            let v = m.inverse_pressure(pw + dp);
            c_sharp.offer((m.relative_pressure(v, w) / (dp * dp) - lead) / delta, v, w);
            let q = m.relative_entropy(v, w);
            if q > 0.0 {
                c_equiv.offer(dp * dp / q, v, w);
            }
        }
    }
    LocalFit { c_sharp, c_equiv }
}

/// Local constants near `v_minus`: `C` in
/// `p(v|w) <= ((gamma+1)/(2 gamma p(w)) + C delta) |p(v)-p(w)|^2` and `C'` in
/// `|p(v)-p(w)|^2 <= C' Q(v|w)`, for pressures within `delta` of `p(v_minus)`.
/// `delta` starts at `delta0` and halves until both constants move less than 5%.
pub fn local_constants(m: &GasModel<f64>, v_minus: f64, delta0: f64) -> Result<LemmaReport> {
    check_left_state(v_minus)?;
    let p_minus = m.pressure(v_minus);
    if !(delta0 > 0.0 && 2.0 * delta0 < p_minus) {
        return Err(ShockError::InvalidArgument(format!(
            "pressure radius must lie in (0, p(v_minus)/2), got {delta0}"
        )));
    }
    let mut delta = delta0;
    let mut fit = local_fit(m, v_minus, delta, 81);
    let mut halvings = 0;
    loop {
        let next = local_fit(m, v_minus, 0.5 * delta, 81);
        let stable = |a: f64, b: f64| (a - b).abs() <= 0.05 * a.abs().max(b.abs());
        let done = stable(fit.c_sharp.value, next.c_sharp.value) && stable(fit.c_equiv.value, next.c_equiv.value);
        delta *= 0.5;
        fit = next;
        halvings += 1;
        if done || halvings >= 16 {
            break;
        }
    }

    let g = m.gamma;
    let mut violations = 0;
    for s in lin_space_open(-1.0, 1.0, 133) {
        let pw = p_minus + s * delta;
        let w = m.inverse_pressure(pw);
        let lead = (g + 1.0) / (2.0 * g * pw);
        for t in lin_space_open(-1.0, 1.0, 133) {
            let dp = t * delta;
            if dp.abs() < 1e-6 * delta {
                continue;
            }
            let v = m.inverse_pressure(pw + dp);
            let bound = (lead + RECHECK_MARGIN * fit.c_sharp.value.max(0.0) * delta) * dp * dp;
            if m.relative_pressure(v, w) > bound * (1.0 + 1e-12) {
                violations += 1;
            }
            if dp * dp > RECHECK_MARGIN * fit.c_equiv.value * m.relative_entropy(v, w) {
                violations += 1;
            }
        }
    }

    let mut r = LemmaReport::new("local_relative_pressure_bounds");
    r.range.insert("v_minus".into(), v_minus);
    r.range.insert("delta".into(), delta);
    r.range.insert("halvings".into(), halvings as f64);
    r.empirical_constants.insert("c_sharp".into(), fit.c_sharp.value);
    r.empirical_constants.insert("c_equiv".into(), fit.c_equiv.value);
    r.worst_witness.insert("c_sharp_v".into(), fit.c_sharp.witness[0]);
    r.worst_witness.insert("c_sharp_w".into(), fit.c_sharp.witness[1]);
    r.worst_witness.insert("c_equiv_v".into(), fit.c_equiv.witness[0]);
    r.worst_witness.insert("c_equiv_w".into(), fit.c_equiv.witness[1]);
    r.violations = violations;
    Ok(r)
}

/// Truncation comparison constants for `w in (1/big_m, big_m)` and cut level `k >= 3 big_m`:
/// `C1` with `max{(1/k - v)+, (v - k)+} <= C1 Q(v|w)` for all `v > 0`, and
/// `C2` with `Q(v|w1) <= C2 Q(v|w2)` for `v` outside `(1/k, k)`.
pub fn truncation_constants(m: &GasModel<f64>, big_m: f64, k: f64) -> Result<LemmaReport> {
    if !(big_m > 1.0) {
        return Err(ShockError::InvalidArgument(format!("bound M must exceed 1, got {big_m}")));
    }
    if !(k >= 3.0 * big_m) {
        return Err(ShockError::InvalidArgument(format!("cut level k must be at least 3M, got {k}")));
    }
    let scan = |nv: usize, nw: usize, shift: f64| {
        let ws = log_space(1.0 / big_m * (1.0 + 1e-3), big_m * (1.0 - 1e-3), nw);
        let low = log_space(1e-4 / k * shift, 1.0 / k, nv);
        let high = log_space(k, 1e4 * k * shift, nv);
        (ws, low, high)
    };
    let numerator = |v: f64| (1.0 / k - v).max(v - k).max(0.0);

    let (ws, low, high) = scan(400, 31, 1.0);
    let mut c1 = Extremum::max();
    let mut c2 = Extremum::max();
    for &w in &ws {
        for &v in low.iter().chain(&high) {
            let num = numerator(v);
            if num > 0.0 {
                c1.offer(num / m.relative_entropy(v, w), v, w);
            }
        }
    }
    for &w1 in &ws {
        for &w2 in &ws {
            for &v in low.iter().chain(&high) {
                c2.offer3(m.relative_entropy(v, w1) / m.relative_entropy(v, w2), [v, w1, w2]);
            }
        }
    }
    let mut violations = 0;
    let (ws, low, high) = scan(977, 23, 0.997);
    for &w in &ws {
        for &v in low.iter().chain(&high) {
            if numerator(v) > RECHECK_MARGIN * c1.value * m.relative_entropy(v, w) {
                violations += 1;
            }
        }
    }
    for &w1 in &ws {
        for &w2 in &ws {
            for &v in low.iter().chain(&high) {
                if m.relative_entropy(v, w1) > RECHECK_MARGIN * c2.value * m.relative_entropy(v, w2) {
                    violations += 1;
                }
            }
        }
    }

    let mut r = LemmaReport::new("truncation_comparison_bounds");
    r.range.insert("M".into(), big_m);
    r.range.insert("k".into(), k);
    r.empirical_constants.insert("C1".into(), c1.value);
    r.empirical_constants.insert("C2".into(), c2.value);
    r.worst_witness.insert("C1_v".into(), c1.witness[0]);
    r.worst_witness.insert("C1_w".into(), c1.witness[1]);
    r.worst_witness.insert("C2_v".into(), c2.witness[0]);
    r.worst_witness.insert("C2_w1".into(), c2.witness[1]);
    r.worst_witness.insert("C2_w2".into(), c2.witness[2]);
    r.violations = violations;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas() -> GasModel<f64> {
        GasModel::standard(2.0, 1.0).unwrap()
    }

    #[test]
    fn sharp_local_ratio_near_leading_constant() {
        // (gamma+1)/(2 gamma p(w)) = 3/4 at gamma = 2, w = 1.
        let m = gas();
        let v: f64 = 1.01;
        let ratio = m.relative_pressure(v, 1.0) / (m.pressure(v) - 1.0).powi(2);
        assert!((ratio - 0.75).abs() < 0.075);
    }

    #[test]
    fn truncation_witness_is_finite() {
        let m = gas();
        // Q(10|1) = 0.1 - 1 + 9.
        let q = m.relative_entropy(10.0, 1.0);
        assert!((q - 8.1).abs() < 1e-12);
        let ratio = (10.0 - 6.0) / q;
        assert!(ratio.is_finite() && ratio > 0.0);
    }

    #[test]
    fn global_constants_positive() {
        let r = global_constants(&gas(), 1.0, (0.55, 0.95)).unwrap();
        assert!(r.passed(), "{r:?}");
        // Quadratic lower bound near the diagonal is at most Q''(w)/2 = p'(w)/... bounded by gamma/2 w^(-gamma-1).
        assert!(r.empirical_constants["c1"] <= 0.5 * 2.0 / 0.55_f64.powi(3));
    }

    #[test]
    fn local_constants_positive() {
        let r = local_constants(&gas(), 1.0, 0.1).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn truncation_constants_positive() {
        let r = truncation_constants(&gas(), 2.0, 6.0).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(truncation_constants(&gas(), 2.0, 5.0).is_err());
    }

    #[test]
    fn report_serializes() {
        let r = truncation_constants(&gas(), 2.0, 6.0).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        for key in ["lemma", "range", "empirical_constants", "worst_witness"] {
            assert!(s.contains(key));
        }
    }
}
