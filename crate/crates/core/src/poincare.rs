//! Stress test of the nonlinear Poincare-type inequality on `[0, 1]`:
//!
//! `-(A + 2B)^2 / delta + (1 + delta) A + (2/3) C + delta D - (1 - delta) E <= 0`
//!
//! with `A = int W^2`, `B = int W`, `C = int W^3`, `D = int |W|^3` and
//! `E = int y (1 - y) W'^2`. Test functions live in the span of shifted
//! Legendre polynomials and sine modes.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShockError};

pub const POLY_DEGREE: usize = 12;
pub const SINE_MODES: usize = 12;
pub const BASIS_LEN: usize = POLY_DEGREE + 1 + SINE_MODES;
pub const DEFAULT_NODES: usize = 128;
/// Allowed change of the left side when the node count doubles.
pub const NODE_DOUBLING_TOLERANCE: f64 = 1e-10;
const LINE_SCAN_POINTS: usize = 240;

const ROOT_SCAN_CELLS: usize = 256;

fn unit_rule(points: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).unzip()
}

fn combine(basis: &[f64; BASIS_LEN], coefficients: &[f64]) -> f64 {
    basis.iter().zip(coefficients).map(|(b, c)| b * c).sum()
}

/// Basis values and derivatives tabulated at Gauss-Legendre nodes on `[0, 1]`.
///
/// `int |W|^3` is not smooth where `W` changes sign, so it is integrated
/// piecewise between the located sign changes with the same rule on each piece.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    values: Vec<[f64; BASIS_LEN]>,
    slopes: Vec<[f64; BASIS_LEN]>,
    scan: Vec<[f64; BASIS_LEN]>,
    piece_nodes: Vec<f64>,
    piece_weights: Vec<f64>,
}

impl BasisTable {
    #[must_use]
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = unit_rule(points);
        let (values, slopes) = nodes.iter().map(|&y| basis_at(y)).unzip();
        let scan = (0..=ROOT_SCAN_CELLS).map(|k| basis_at(k as f64 / ROOT_SCAN_CELLS as f64).0).collect();
        let (piece_nodes, piece_weights) = unit_rule(points);
        Self { nodes, weights, values, slopes, scan, piece_nodes, piece_weights }
    }

    /// Sign changes of `W` on `[0, 1]` by scanning and regula falsi (Illinois).
    fn sign_changes(&self, coefficients: &[f64]) -> Vec<f64> {
        let w = |y: f64| combine(&basis_at(y).0, coefficients);
        let h = 1.0 / ROOT_SCAN_CELLS as f64;
        let vals: Vec<f64> = self.scan.iter().map(|b| combine(b, coefficients)).collect();
        let mut roots = Vec::new();
        for k in 0..ROOT_SCAN_CELLS {
            let (mut a, mut b, mut fa, mut fb) = (k as f64 * h, (k + 1) as f64 * h, vals[k], vals[k + 1]);
            if fa == 0.0 && k > 0 {
                roots.push(a);
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let mut side = 0;
            for _ in 0..60 {
                let c = (a * fb - b * fa) / (fb - fa);
                let fc = w(c);
                if fc == 0.0 || (b - a) < 1e-15 {
                    a = c;
                    b = c;
                    break;
                }
                if fc * fb < 0.0 {
                    a = b;
                    fa = fb;
                    side = 0;
                } else {
                    fa *= if side == 1 { 0.5 } else { 1.0 };
                    side = 1;
                }
                b = c;
                fb = fc;
            }
            roots.push(0.5 * (a + b));
        }
        roots
    }

    fn abs_cubic(&self, coefficients: &[f64]) -> f64 {
        let mut breaks = vec![0.0];
        breaks.extend(self.sign_changes(coefficients));
        breaks.push(1.0);
        breaks
            .windows(2)
            .map(|p| {
                let len = p[1] - p[0];
                self.piece_nodes
                    .iter()
                    .zip(&self.piece_weights)
                    .map(|(&y, &q)| q * len * combine(&basis_at(p[0] + len * y).0, coefficients).abs().powi(3))
                    .sum::<f64>()
            })
            .sum()
    }

    /// The five integrals of `sum_k c_k phi_k`.
    #[must_use]
    pub fn integrals(&self, coefficients: &[f64]) -> WIntegrals {
        let mut out = WIntegrals::default();
        for (q, ((val, der), &y)) in self.weights.iter().zip(self.values.iter().zip(&self.slopes).zip(&self.nodes)) {
            let w = combine(val, coefficients);
            let dw = combine(der, coefficients);
            let w2 = w * w;
            out.mass += q * w2;
            out.mean += q * w;
            out.cubic += q * w2 * w;
            out.dirichlet += q * y * (1.0 - y) * dw * dw;
        }
        out.abs_cubic = self.abs_cubic(coefficients);
        out
    }
}

/// Shifted Legendre `P_n(2y - 1)` for `n <= 12`, then `sin(k pi y)` for `k = 1..=12`.
fn basis_at(y: f64) -> ([f64; BASIS_LEN], [f64; BASIS_LEN]) {
    let mut v = [0.0; BASIS_LEN];
    let mut d = [0.0; BASIS_LEN];
    let x = 2.0 * y - 1.0;
    // P'_{n+1} = P'_{n-1} + (2n + 1) P_n, derivatives taken in x then scaled by 2.
    let mut dx = [0.0; POLY_DEGREE + 1];
    v[0] = 1.0;
    v[1] = x;
    dx[1] = 1.0;
    for n in 1..POLY_DEGREE {
        let nf = n as f64;
        v[n + 1] = ((2.0 * nf + 1.0) * x * v[n] - nf * v[n - 1]) / (nf + 1.0);
        dx[n + 1] = dx[n - 1] + (2.0 * nf + 1.0) * v[n];
    }
    for n in 0..=POLY_DEGREE {
        d[n] = 2.0 * dx[n];
    }
    for k in 1..=SINE_MODES {
        let f = k as f64 * std::f64::consts::PI;
        v[POLY_DEGREE + k] = (f * y).sin();
        d[POLY_DEGREE + k] = f * (f * y).cos();
    }
    (v, d)
}

/// Integrals entering the left side; each scales homogeneously under `W -> t W`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WIntegrals {
    pub mass: f64,
    pub mean: f64,
    pub cubic: f64,
    pub abs_cubic: f64,
    pub dirichlet: f64,
}

impl WIntegrals {
    #[must_use]
    pub fn lhs(&self, delta: f64) -> f64 {
        let s = self.mass + 2.0 * self.mean;
        -s * s / delta + (1.0 + delta) * self.mass + 2.0 / 3.0 * self.cubic + delta * self.abs_cubic
            - (1.0 - delta) * self.dirichlet
    }

    /// Left side of `t W` evaluated from the integrals of `W`.
    #[must_use]
    pub fn lhs_scaled(&self, t: f64, delta: f64) -> f64 {
        let [c1, c2, c3, c4] = self.scaling_coefficients(delta, t >= 0.0);
        t * (c1 + t * (c2 + t * (c3 + t * c4)))
    }

    /// Coefficients of `t, t^2, t^3, t^4` in the left side of `t W`, on the
    /// half-line `t >= 0` or `t < 0`.
    #[must_use]
    pub fn scaling_coefficients(&self, delta: f64, nonnegative: bool) -> [f64; 4] {
        let (a, b) = (self.mass, self.mean);
        let sign = if nonnegative { 1.0 } else { -1.0 };
        [
            0.0,
            -4.0 * b * b / delta + (1.0 + delta) * a - (1.0 - delta) * self.dirichlet,
            -4.0 * a * b / delta + 2.0 / 3.0 * self.cubic + sign * delta * self.abs_cubic,
            -a * a / delta,
        ]
    }

    #[must_use]
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            mass: t * t * self.mass,
            mean: t * self.mean,
            cubic: t * t * t * self.cubic,
            abs_cubic: (t * t * t).abs() * self.abs_cubic,
            dirichlet: t * t * self.dirichlet,
        }
    }
}

/// A test function given by its basis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionW {
    pub coefficients: Vec<f64>,
}

impl TestFunctionW {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != BASIS_LEN {
            return Err(ShockError::InvalidArgument(format!(
                "expected {BASIS_LEN} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { coefficients })
    }

    #[must_use]
    pub fn constant(c: f64) -> Self {
        let mut coefficients = vec![0.0; BASIS_LEN];
        coefficients[0] = c;
        Self { coefficients }
    }

    /// `sin(k pi y)`.
    #[must_use]
    pub fn sine(k: usize) -> Self {
        let mut coefficients = vec![0.0; BASIS_LEN];
        coefficients[POLY_DEGREE + k] = 1.0;
        Self { coefficients }
    }

    #[must_use]
    pub fn value(&self, y: f64) -> f64 {
        combine(&basis_at(y).0, &self.coefficients)
    }

    #[must_use]
    pub fn scaled(&self, t: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|c| c * t).collect() }
    }

    /// Rescaled so that `int W^2 = c1`; the zero function is returned unchanged.
    #[must_use]
    pub fn normalized(&self, table: &BasisTable, c1: f64) -> Self {
        let a = table.integrals(&self.coefficients).mass;
        if a > 0.0 {
            self.scaled((c1 / a).sqrt())
        } else {
            self.clone()
        }
    }
}

/// Left side at `delta` with the default rule, checked against twice the nodes.
pub fn poincare_lhs(w: &TestFunctionW, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(ShockError::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let coarse = BasisTable::new(DEFAULT_NODES).integrals(&w.coefficients).lhs(delta);
    let fine = BasisTable::new(2 * DEFAULT_NODES).integrals(&w.coefficients).lhs(delta);
    let change = (coarse - fine).abs();
    if !(change <= NODE_DOUBLING_TOLERANCE) {
        return Err(ShockError::Quadrature { change });
    }
    Ok(coarse)
}

/// Best `t in [-t_max, t_max]` for the left side of `t W`; returns `(t, value)`.
#[must_use]
pub fn line_maximum(integrals: &WIntegrals, delta: f64, t_max: f64) -> (f64, f64) {
    let f = |t: f64| integrals.lhs_scaled(t, delta);
    let mut best = (0.0, 0.0);
    let h = 2.0 * t_max / LINE_SCAN_POINTS as f64;
    for k in 0..=LINE_SCAN_POINTS {
        let t = -t_max + h * k as f64;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    // Golden-section polish inside the bracketing cells.
    let (mut lo, mut hi) = ((best.0 - h).max(-t_max), (best.0 + h).min(t_max));
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = f(t);
    if v > best.1 {
        best = (t, v);
    }
    best
}

/// Sampler and search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub c1: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    /// Candidates refined by coordinate ascent.
    pub refine: usize,
    /// Coordinate-ascent sweeps per candidate.
    pub sweeps: usize,
    /// Bisection bracket and iteration count for the empirical threshold.
    pub bisection_low: f64,
    pub bisection_high: f64,
    pub bisection_steps: usize,
}

impl StressConfig {
    #[must_use]
    pub fn new(c1: f64, delta: f64, samples: usize, seed: u64) -> Self {
        Self {
            c1,
            delta,
            samples,
            seed,
            refine: 8,
            sweeps: 12,
            bisection_low: 1e-4,
            bisection_high: 0.5,
            bisection_steps: 30,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.delta > 0.0) {
            return Err(ShockError::InvalidArgument("C1 and delta must be positive".into()));
        }
        if !(self.bisection_low > 0.0 && self.bisection_low < self.bisection_high) {
            return Err(ShockError::InvalidArgument("bisection bracket must satisfy 0 < low < high".into()));
        }
        Ok(())
    }
}

/// A stored witness: coefficients of `W` (already scaled) and its left side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub delta: f64,
    pub lhs: f64,
    pub coefficients: Vec<f64>,
}

/// Outcome of [`stress_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub max_lhs: f64,
    /// Largest bisection `delta` at which no positive left side was found.
    pub empirical_delta_threshold: f64,
    pub witness_coefficients: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    /// Positive witness at the smallest failing bisection `delta`, if any.
    pub threshold_witness: Option<Witness>,
    /// Maximum over the final candidate pool at each bisection `delta` (ascending).
    pub delta_scan: Vec<(f64, f64)>,
}

/// Random direction with decaying coefficients; every fourth draw is nearly constant.
fn sample_direction(rng: &mut ChaCha8Rng, index: usize) -> Vec<f64> {
    let mut c: Vec<f64> = (0..BASIS_LEN)
        .map(|k| {
            let order = if k <= POLY_DEGREE { k } else { k - POLY_DEGREE };
            rng.gen_range(-1.0..1.0) / (1.0 + order as f64)
        })
        .collect();
    if index % 4 == 0 {
        c[0] += rng.gen_range(-4.0..4.0);
    }
    c
}

/// Candidate directions, normalized to `int W^2 = 1`, with their integrals.
struct Pool {
    directions: Vec<Vec<f64>>,
    integrals: Vec<WIntegrals>,
}

impl Pool {
    fn push(&mut self, table: &BasisTable, dir: Vec<f64>) {
        let unit = TestFunctionW { coefficients: dir }.normalized(table, 1.0);
        let i = table.integrals(&unit.coefficients);
        self.directions.push(unit.coefficients);
        self.integrals.push(i);
    }

    /// Index, scale and value of the best member (first index wins ties).
    fn best(&self, delta: f64, t_max: f64) -> (usize, f64, f64) {
        let scores: Vec<(f64, f64)> = self.integrals.par_iter().map(|i| line_maximum(i, delta, t_max)).collect();
        let mut best = (0, 0.0, f64::NEG_INFINITY);
        for (k, (t, v)) in scores.into_iter().enumerate() {
            if v > best.2 {
                best = (k, t, v);
            }
        }
        best
    }

    fn top(&self, delta: f64, t_max: f64, count: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f64)> =
            self.integrals.par_iter().map(|i| line_maximum(i, delta, t_max).1).enumerate().collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.into_iter().take(count).map(|(k, _)| k).collect()
    }
}

/// Coordinate ascent on the line maximum, starting from a unit direction.
fn ascend(table: &BasisTable, start: &[f64], delta: f64, t_max: f64, sweeps: usize) -> Vec<f64> {
    let score = |c: &[f64]| {
        let unit = TestFunctionW { coefficients: c.to_vec() }.normalized(table, 1.0);
        line_maximum(&table.integrals(&unit.coefficients), delta, t_max).1
    };
    let mut x = start.to_vec();
    let mut fx = score(&x);
    let mut step = 0.25;
    for _ in 0..sweeps {
        for k in 0..BASIS_LEN {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += dir * step;
                let fy = score(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    break;
                }
            }
        }
        step *= 0.6;
    }
    x
}

fn refine_pool(pool: &mut Pool, table: &BasisTable, cfg: &StressConfig, delta: f64, t_max: f64) {
    let starts: Vec<Vec<f64>> =
        pool.top(delta, t_max, cfg.refine).into_iter().map(|k| pool.directions[k].clone()).collect();
    let refined: Vec<Vec<f64>> = starts.par_iter().map(|s| ascend(table, s, delta, t_max, cfg.sweeps)).collect();
    for r in refined {
        pool.push(table, r);
    }
}

/// Seeded random search plus ascent for the largest left side over `int W^2 <= C1`,
/// followed by bisection for the empirical `delta` threshold.
pub fn stress_search(cfg: &StressConfig) -> Result<PoincareReport> {
    cfg.validate()?;
    let table = BasisTable::new(DEFAULT_NODES);
    let t_max = cfg.c1.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw: Vec<Vec<f64>> = (0..cfg.samples).map(|k| sample_direction(&mut rng, k)).collect();
    let mut pool = Pool { directions: Vec::new(), integrals: Vec::new() };
    let units: Vec<(Vec<f64>, WIntegrals)> = raw
        .into_par_iter()
        .map(|d| {
            let u = TestFunctionW { coefficients: d }.normalized(&table, 1.0);
            let i = table.integrals(&u.coefficients);
            (u.coefficients, i)
        })
        .collect();
    for (d, i) in units {
        // The zero direction contributes nothing beyond `t = 0`.
        if i.mass > 0.0 {
            pool.directions.push(d);
            pool.integrals.push(i);
        }
    }

    let (max_lhs, witness) = if pool.directions.is_empty() {
        (0.0, vec![0.0; BASIS_LEN])
    } else {
        refine_pool(&mut pool, &table, cfg, cfg.delta, t_max);
        let (k, t, v) = pool.best(cfg.delta, t_max);
        (v.max(0.0), pool.directions[k].iter().map(|c| c * t + 0.0).collect())
    };

    // Bisection on delta; the candidate pool only grows.
    let (mut lo, mut hi) = (cfg.bisection_low, cfg.bisection_high);
    let mut threshold_witness = None;
    if !pool.directions.is_empty() {
        refine_pool(&mut pool, &table, cfg, hi, t_max);
        let (k, t, v) = pool.best(hi, t_max);
        if v > 0.0 {
            threshold_witness = Some(Witness { delta: hi, lhs: v, coefficients: pool.directions[k].iter().map(|c| c * t).collect() });
            for _ in 0..cfg.bisection_steps {
                let mid = 0.5 * (lo + hi);
                refine_pool(&mut pool, &table, cfg, mid, t_max);
                let (k, t, v) = pool.best(mid, t_max);
                if v > 0.0 {
                    hi = mid;
                    threshold_witness =
                        Some(Witness { delta: mid, lhs: v, coefficients: pool.directions[k].iter().map(|c| c * t).collect() });
                } else {
                    lo = mid;
                }
            }
        } else {
            lo = hi;
        }
    }
    let threshold = if pool.directions.is_empty() { hi } else { lo };

    let grid: Vec<f64> = (0..=20).map(|k| cfg.bisection_low + (cfg.bisection_high - cfg.bisection_low) * f64::from(k) / 20.0).collect();
    let delta_scan = if pool.directions.is_empty() {
        grid.iter().map(|&d| (d, 0.0)).collect()
    } else {
        grid.iter().map(|&d| (d, pool.best(d, t_max).2.max(0.0))).collect()
    };

    Ok(PoincareReport {
        delta: cfg.delta,
        c1: cfg.c1,
        max_lhs,
        empirical_delta_threshold: threshold,
        witness_coefficients: witness,
        seed: cfg.seed,
        samples: cfg.samples,
        threshold_witness,
        delta_scan,
    })
}
