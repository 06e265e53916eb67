//! Geometry of the kernel `φ(x) = H(2H−1)|x|^{2H−2}`.
//!
//! Every `φ`-integral against a step function is evaluated through exact
//! antiderivatives; the kernel is singular at the origin, so no quadrature is
//! used except where a random integrand multiplies it.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{covariance_unchecked, DiscretePath, FbmPath, HurstParameter, TimeGrid};
use crate::path_space::{vertical_derivative, vertical_derivative_along, Functional, StoppedPath};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiKernel {
    hurst: HurstParameter,
}

impl PhiKernel {
    pub fn new(hurst: HurstParameter) -> Self {
        Self { hurst }
    }

    /// `φ(x)`; infinite at `x = 0` when `H > ½`.
    pub fn value(&self, x: f64) -> f64 {
        let h = self.hurst.value();
        h * (2.0 * h - 1.0) * x.abs().powf(2.0 * h - 2.0)
    }

    /// `∫_a^b φ(t − s) ds = H(sgn(t−a)|t−a|^{2H−1} − sgn(t−b)|t−b|^{2H−1})`.
    pub fn cell_mass(&self, t: f64, a: f64, b: f64) -> f64 {
        let h = self.hurst.value();
        let p = 2.0 * h - 1.0;
        let signed = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x.signum() * x.abs().powf(p)
            }
        };
        h * (signed(t - a) - signed(t - b))
    }
}

/// `⟨1_{[a,b]}, 1_{[c,d]}⟩ = ½(|b−c|^{2H} + |a−d|^{2H} − |a−c|^{2H} − |b−d|^{2H})`.
pub fn indicator_inner_product(a: f64, b: f64, c: f64, d: f64, hurst: HurstParameter) -> Result<f64> {
    if !(0.0 <= a && a <= b && 0.0 <= c && c <= d) {
        return Err(Error::Domain(format!(
            "indicator endpoints must satisfy 0 ≤ a ≤ b and 0 ≤ c ≤ d, got [{a}, {b}], [{c}, {d}]"
        )));
    }
    Ok(indicator_unchecked(a, b, c, d, hurst.two_h()))
}

fn indicator_unchecked(a: f64, b: f64, c: f64, d: f64, two_h: f64) -> f64 {
    let p = |x: f64| x.abs().powf(two_h);
    0.5 * (p(b - c) + p(a - d) - p(a - c) - p(b - d))
}

/// `⟨1_{cell_i}, 1_{cell_{i+k}}⟩` for the uniform cells of `grid`, lags `0..n`.
pub fn cell_kernel(grid: TimeGrid, hurst: HurstParameter) -> Vec<f64> {
    let dt = grid.dt();
    let two_h = hurst.two_h();
    (0..grid.steps())
        .map(|k| {
            let c = k as f64 * dt;
            indicator_unchecked(0.0, dt, c, c + dt, two_h)
        })
        .collect()
}

/// `Σ_{i,j} x_i y_j K(|i − j|)` for a Toeplitz lag table.
pub(crate) fn toeplitz_form(x: &[f64], y: &[f64], lags: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = x[i] * y[i] * lags[0];
        for j in 0..i {
            row += (x[i] * y[j] + x[j] * y[i]) * lags[i - j];
        }
        acc += row;
    }
    acc
}

/// Piecewise-constant function with coefficient `a_i` on `[t_{i−1}, t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    grid: TimeGrid,
    coefficients: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: TimeGrid, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for {} cells",
                coefficients.len(),
                grid.steps()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("step function coefficient".into()));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self {
            grid,
            coefficients: vec![c; grid.steps()],
        }
    }

    /// `1_{[a,b)}` for grid times `a ≤ b`.
    pub fn indicator(grid: TimeGrid, a: f64, b: f64) -> Result<Self> {
        let (i, j) = match (grid.index_of(a), grid.index_of(b)) {
            (Some(i), Some(j)) if i <= j => (i, j),
            _ => {
                return Err(Error::Domain(format!(
                    "indicator endpoints [{a}, {b}] must be ordered grid times"
                )))
            }
        };
        let coefficients = (0..grid.steps())
            .map(|c| if c >= i && c < j { 1.0 } else { 0.0 })
            .collect();
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Right-continuous lookup; `t = T` reads the last cell, times outside `[0, T]` read zero.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.grid.horizon() {
            return 0.0;
        }
        let i = self.grid.floor_index(t).min(self.grid.steps() - 1);
        self.coefficients[i]
    }

    /// Same function on a grid with `factor` times as many cells.
    pub fn refine(&self, factor: usize) -> Self {
        let grid = TimeGrid::new(self.grid.horizon(), self.grid.steps() * factor)
            .expect("refinement of a valid grid");
        let coefficients = self
            .coefficients
            .iter()
            .flat_map(|c| std::iter::repeat_n(*c, factor))
            .collect();
        Self { grid, coefficients }
    }

    /// `∫₀ᵀ ξ dB = Σ_j a_j (B(t_j) − B(t_{j−1}))` along a path on a grid refining this one.
    pub fn integrate(&self, path: &DiscretePath) -> f64 {
        let grid = path.grid();
        path.increments()
            .enumerate()
            .map(|(j, d)| self.value_at(grid.time(j)) * d)
            .sum()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `⟨ξ, η⟩_T` by bilinear expansion over indicator products on the common refinement.
pub fn step_inner_product(xi: &StepFunction, eta: &StepFunction, hurst: HurstParameter) -> Result<f64> {
    let (gx, gy) = (xi.grid(), eta.grid());
    if (gx.horizon() - gy.horizon()).abs() > 1e-12 * gx.horizon() {
        return Err(Error::GridMismatch(format!(
            "step functions on horizons {} and {} have no common refinement",
            gx.horizon(),
            gy.horizon()
        )));
    }
    let common = gx.steps() / gcd(gx.steps(), gy.steps()) * gy.steps();
    let x = xi.refine(common / gx.steps());
    let y = eta.refine(common / gy.steps());
    let lags = cell_kernel(x.grid(), hurst);
    Ok(toeplitz_form(x.coefficients(), y.coefficients(), &lags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldOrigin {
    /// Chain rule through the weighted integrals of a cylindrical variable.
    Cylindrical,
    /// `Δ_x F(B_t) 1_{[0,t]}(s)` for a path functional.
    PathFunctional,
}

/// `s ↦ D_s F` as a step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeField {
    pub field: StepFunction,
    pub origin: FieldOrigin,
}

impl DerivativeField {
    pub fn value_at(&self, s: f64) -> f64 {
        self.field.value_at(s)
    }
}

type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `F = f(∫ξ₁ dB, …, ∫ξ_m dB)` with deterministic step weights.
#[derive(Clone)]
pub struct CylindricalVariable {
    weights: Vec<StepFunction>,
    f: VectorFn,
    gradient: Option<GradientFn>,
}

impl CylindricalVariable {
    pub fn new(weights: Vec<StepFunction>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            weights,
            f: Arc::new(f),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn integrals(&self, path: &DiscretePath) -> Vec<f64> {
        self.weights.iter().map(|w| w.integrate(path)).collect()
    }

    pub fn value(&self, path: &DiscretePath) -> f64 {
        (self.f)(&self.integrals(path))
    }
}

/// `D_s F = Σ_i ∂_i f(…) ξ_i(s)` along a sampled path.
pub fn malliavin_derivative_cylindrical(
    variable: &CylindricalVariable,
    path: &DiscretePath,
) -> Result<DerivativeField> {
    let gradient = variable
        .gradient
        .as_ref()
        .ok_or_else(|| Error::DerivativeUnavailable("cylindrical variable has no gradient".into()))?;
    let x = variable.integrals(path);
    let g = gradient(&x);
    if g.len() != variable.weights.len() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::DerivativeUnavailable(
            "gradient is malformed or non-finite at the sampled point".into(),
        ));
    }
    let grid = path.grid();
    let coefficients = (0..grid.steps())
        .map(|j| {
            let s = grid.time(j);
            variable
                .weights
                .iter()
                .zip(&g)
                .map(|(w, gi)| gi * w.value_at(s))
                .sum()
        })
        .collect();
    Ok(DerivativeField {
        field: StepFunction::new(grid, coefficients)?,
        origin: FieldOrigin::Cylindrical,
    })
}

/// `D_s F(B_t) = Δ_x F(B_t) 1_{[0,t]}(s)`.
pub fn malliavin_derivative_path(f: &dyn Functional, path: &StoppedPath<'_>) -> Result<DerivativeField> {
    let dx = vertical_derivative(f, path)?.value;
    let grid = path.grid();
    let coefficients = (0..grid.steps())
        .map(|j| if j < path.cursor() { dx } else { 0.0 })
        .collect();
    Ok(DerivativeField {
        field: StepFunction::new(grid, coefficients)?,
        origin: FieldOrigin::PathFunctional,
    })
}

/// `D^φ_t F = ∫₀ᵀ φ(t − s) D_s F ds`, cell by cell through the antiderivative of `φ`.
pub fn d_phi_derivative(field: &DerivativeField, t: f64, hurst: HurstParameter) -> f64 {
    let kernel = PhiKernel::new(hurst);
    let grid = field.field.grid();
    field
        .field
        .coefficients()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(j, a)| a * kernel.cell_mass(t, grid.time(j), grid.time(j + 1)))
        .sum()
}

/// The term removed from `F · (B(t_cur) − B(t_prev))` to form the Wick product
/// when `D_s F = Δ_x F · 1_{[0, t_prev]}(s)`.
pub fn wick_correction(dx_f: f64, t_prev: f64, t_cur: f64, hurst: HurstParameter) -> f64 {
    if dx_f == 0.0 {
        return 0.0;
    }
    dx_f * indicator_unchecked(0.0, t_prev, t_prev, t_cur, hurst.two_h())
}

/// `F ⋄ ∫g dB = F ∫g dB − ⟨D F, g⟩_T`.
pub fn wick_product(
    value: f64,
    derivative: &DerivativeField,
    g: &StepFunction,
    path: &DiscretePath,
    hurst: HurstParameter,
) -> Result<f64> {
    Ok(value * g.integrate(path) - step_inner_product(&derivative.field, g, hurst)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WisVarianceEstimate {
    /// Estimate of `E|∫F ⋄ dB|²`: `kernel_term + cross_term`.
    pub value: Summary,
    /// `E ∫∫ φ(u−v) F(u) F(v) du dv`.
    pub kernel_term: Summary,
    /// `E ∫∫ D^φ_s F(t) D^φ_t F(s) ds dt`.
    pub cross_term: Summary,
    /// `E (∫ D^φ_s F(s) ds)²`. Replacing the cross term by this one overstates the
    /// second moment: for `F = B` the sum is not `T^{4H}/2`.
    pub derivative_term: Summary,
}

/// `a(s, t) = ∫₀ᵗ φ(s − r) dr`, so that `D^φ_s F(t) = Δ_x F(t) a(s, t)` when `D_r F(t) = Δ_x F(t) 1_{[0,t]}(r)`.
fn phi_indicator(s: f64, t: f64, kernel: &PhiKernel) -> f64 {
    kernel.cell_mass(s, 0.0, t)
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `W_ij = ∫_{cell i}∫_{cell j} a(s, t) a(t, s) ds dt` (row-major, symmetric), three-point
/// Gauss–Legendre per cell and axis.
pub fn cross_kernel(grid: TimeGrid, hurst: HurstParameter) -> Vec<f64> {
    let n = grid.steps();
    let kernel = PhiKernel::new(hurst);
    let half = 0.5 * grid.dt();
    let nodes: Vec<[(f64, f64); 3]> = (0..n)
        .map(|i| {
            let c = 0.5 * (grid.time(i) + grid.time(i + 1));
            GAUSS3.map(|(x, w)| (c + half * x, half * w))
        })
        .collect();
    let mut w = vec![0.0; n * n];
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| {
                    let mut acc = 0.0;
                    for &(t, wt) in &nodes[i] {
                        for &(s, ws) in &nodes[j] {
                            acc += wt * ws * phi_indicator(s, t, &kernel) * phi_indicator(t, s, &kernel);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            w[i * n + j] = *v;
            w[j * n + i] = *v;
        }
    }
    w
}

/// Monte Carlo estimate of the second moment of the WIS integral of `F(B_t)`.
///
/// Paths must be on doubled grids: cell `i` of the working grid is sampled at
/// its midpoint (odd index). Kernel masses are exact per cell.
pub fn wis_variance(f: &dyn Functional, refined_paths: &[FbmPath]) -> Result<WisVarianceEstimate> {
    let first = refined_paths
        .first()
        .ok_or_else(|| Error::Domain("wis_variance needs at least one path".into()))?;
    let fine = first.grid();
    if fine.steps() % 2 != 0 {
        return Err(Error::NotRefined(format!("{} steps", fine.steps())));
    }
    let grid = fine.coarsened(2)?;
    let hurst = first.hurst();
    let lags = cell_kernel(grid, hurst);
    let cross = cross_kernel(grid, hurst);
    let n = grid.steps();
    let two_h = hurst.two_h();
    // ∫_{cell} H s^{2H−1} ds
    let masses: Vec<f64> = (0..grid.steps())
        .map(|i| 0.5 * (grid.time(i + 1).powf(two_h) - grid.time(i).powf(two_h)))
        .collect();

    let terms: Vec<(f64, f64, f64)> = refined_paths
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64)> {
            if p.grid() != fine {
                return Err(Error::GridMismatch("paths must share one grid".into()));
            }
            let values = f.eval_prefixes(p);
            let dx = vertical_derivative_along(f, p)?;
            let mid: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
            let kernel = toeplitz_form(&mid, &mid, &lags);
            let dmid: Vec<f64> = dx.iter().skip(1).step_by(2).copied().collect();
            let d: f64 = dmid.iter().zip(&masses).map(|(a, m)| a * m).sum();
            let c: f64 = (0..n)
                .map(|i| dmid[i] * cross[i * n..(i + 1) * n].iter().zip(&dmid).map(|(w, v)| w * v).sum::<f64>())
                .sum();
            let d2 = d * d;
            if !(kernel.is_finite() && d2.is_finite() && c.is_finite()) {
                return Err(Error::NonFinite("WIS variance term".into()));
            }
            Ok((kernel, c, d2))
        })
        .collect::<Result<_>>()?;

    let column = |k: usize| -> Vec<f64> {
        terms
            .iter()
            .map(|t| match k {
                0 => t.0,
                1 => t.1,
                _ => t.2,
            })
            .collect()
    };
    let total: Vec<f64> = terms.iter().map(|t| t.0 + t.1).collect();
    Ok(WisVarianceEstimate {
        value: Summary::of(&total),
        kernel_term: Summary::of(&column(0)),
        cross_term: Summary::of(&column(1)),
        derivative_term: Summary::of(&column(2)),
    })
}

/// `∫∫ φ(u−v) E[B(u)B(v)] du dv`: midpoint covariances against exact cell masses.
pub fn kernel_covariance_quadrature(grid: TimeGrid, hurst: HurstParameter) -> f64 {
    let lags = cell_kernel(grid, hurst);
    let two_h = hurst.two_h();
    let n = grid.steps();
    let mids: Vec<f64> = (0..n).map(|i| 0.5 * (grid.time(i) + grid.time(i + 1))).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = covariance_unchecked(mids[i], mids[i], two_h) * lags[0];
            for j in 0..i {
                row += 2.0 * covariance_unchecked(mids[i], mids[j], two_h) * lags[i - j];
            }
            row
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}
