use std::sync::Arc;

use super::{Functional, Smoothness, StoppedPath};
use crate::fbm::DiscretePath;
use crate::malliavin::StepFunction;

/// `(t, x) ↦ value`.
pub type TimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `F(γ_t) = f(t, γ(t))`; derivatives are the classical partials of `f`.
#[derive(Clone)]
pub struct Cylindrical {
    label: String,
    f: TimeFn,
    ft: Option<TimeFn>,
    fx: Option<TimeFn>,
    fxx: Option<TimeFn>,
    smoothness: Smoothness,
}

impl Cylindrical {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            ft: None,
            fx: None,
            fxx: None,
            smoothness: Smoothness::C12,
        }
    }

    pub fn with_derivatives(
        mut self,
        ft: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fxx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.ft = Some(Arc::new(ft));
        self.fx = Some(Arc::new(fx));
        self.fxx = Some(Arc::new(fxx));
        self
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// `γ(t)`.
    pub fn endpoint() -> Self {
        Self::affine(0.0, 1.0).relabel("endpoint")
    }

    pub fn constant(c: f64) -> Self {
        Self::affine(c, 0.0).relabel(format!("constant({c})"))
    }

    /// `a + b γ(t)`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(format!("affine({a},{b})"), move |_, x| a + b * x)
            .with_derivatives(|_, _| 0.0, move |_, _| b, |_, _| 0.0)
    }

    /// `γ(t)^k`.
    pub fn power(k: i32) -> Self {
        let kf = f64::from(k);
        Self::new(format!("power({k})"), move |_, x| x.powi(k)).with_derivatives(
            |_, _| 0.0,
            move |_, x| if k == 0 { 0.0 } else { kf * x.powi(k - 1) },
            move |_, x| {
                if k < 2 {
                    0.0
                } else {
                    kf * (kf - 1.0) * x.powi(k - 2)
                }
            },
        )
    }

    /// `t · γ(t)²`.
    pub fn time_weighted_square() -> Self {
        Self::new("time_square", |t, x| t * x * x).with_derivatives(
            |_, x| x * x,
            |t, x| 2.0 * t * x,
            |t, _| 2.0 * t,
        )
    }

    /// `t · γ(t)`.
    pub fn time_times_endpoint() -> Self {
        Self::new("time_endpoint", |t, x| t * x).with_derivatives(|_, x| x, |t, _| t, |_, _| 0.0)
    }

    fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn at(g: &Option<TimeFn>, path: &StoppedPath<'_>) -> Option<f64> {
        g.as_ref().map(|g| g(path.time(), path.current()))
    }
}

impl Functional for Cylindrical {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        (self.f)(path.time(), path.current())
    }

    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Self::at(&self.ft, path)
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Self::at(&self.fx, path)
    }

    fn dxx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Self::at(&self.fxx, path)
    }
}

/// Left-endpoint running sums `I_k = Σ_{j<k} γ(t_j) Δt`, all prefixes at once.
fn running_sums(path: &DiscretePath) -> Vec<f64> {
    let dt = path.grid().dt();
    let mut out = Vec::with_capacity(path.steps() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in &path.values()[..path.steps()] {
        acc += v * dt;
        out.push(acc);
    }
    out
}

fn prefix_integral(path: &StoppedPath<'_>) -> f64 {
    let dt = path.grid().dt();
    let p = path.prefix();
    p[..p.len() - 1].iter().sum::<f64>() * dt
}

/// `∫₀ᵗ γ(s) ds` with left-endpoint cells.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningIntegral;

impl Functional for RunningIntegral {
    fn name(&self) -> String {
        "running_integral".into()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C12
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        prefix_integral(path)
    }

    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Some(path.current())
    }

    fn dx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        Some(0.0)
    }

    fn dxx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        Some(0.0)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        running_sums(path)
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(path.values().to_vec())
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(vec![0.0; path.steps() + 1])
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(vec![0.0; path.steps() + 1])
    }
}

/// `γ(t) · ∫₀ᵗ γ(s) ds`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductIntegral;

impl Functional for ProductIntegral {
    fn name(&self) -> String {
        "product_integral".into()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C12
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        path.current() * prefix_integral(path)
    }

    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Some(path.current() * path.current())
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        Some(prefix_integral(path))
    }

    fn dxx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        Some(0.0)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        running_sums(path)
            .into_iter()
            .zip(path.values())
            .map(|(i, v)| i * v)
            .collect()
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(path.values().iter().map(|v| v * v).collect())
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(running_sums(path))
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        Some(vec![0.0; path.steps() + 1])
    }
}

/// `∫₀ᵗ ξ(s) dγ(s) = Σ_{j ≤ k} ξ(t_{j−1})(γ(t_j) − γ(t_{j−1}))` for a deterministic step `ξ`.
#[derive(Debug, Clone)]
pub struct WeightedIntegral {
    weight: StepFunction,
}

impl WeightedIntegral {
    pub fn new(weight: StepFunction) -> Self {
        Self { weight }
    }

    pub fn weight(&self) -> &StepFunction {
        &self.weight
    }
}

impl Functional for WeightedIntegral {
    fn name(&self) -> String {
        "weighted_integral".into()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C12
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        let grid = path.grid();
        path.prefix()
            .windows(2)
            .enumerate()
            .map(|(j, w)| self.weight.value_at(grid.time(j)) * (w[1] - w[0]))
            .sum()
    }

    fn dt(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        Some(0.0)
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        let k = path.cursor();
        Some(if k == 0 {
            0.0
        } else {
            self.weight.value_at(path.grid().time(k - 1))
        })
    }

    fn dxx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        Some(0.0)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        let grid = path.grid();
        let mut out = Vec::with_capacity(path.steps() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for (j, w) in path.values().windows(2).enumerate() {
            acc += self.weight.value_at(grid.time(j)) * (w[1] - w[0]);
            out.push(acc);
        }
        out
    }
}

/// `sup_{s ≤ t} γ(s)`; continuous only.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMax;

impl Functional for RunningMax {
    fn name(&self) -> String {
        "running_max".into()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C00
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        path.prefix().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        let mut m = f64::NEG_INFINITY;
        path.values()
            .iter()
            .map(|&v| {
                m = m.max(v);
                m
            })
            .collect()
    }
}

/// Ad-hoc functional from a closure over the stopped path (no closed-form derivatives).
#[derive(Clone)]
pub struct PathFn {
    label: String,
    smoothness: Smoothness,
    f: Arc<dyn Fn(&StoppedPath<'_>) -> f64 + Send + Sync>,
}

impl PathFn {
    pub fn new(
        label: impl Into<String>,
        smoothness: Smoothness,
        f: impl Fn(&StoppedPath<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            smoothness,
            f: Arc::new(f),
        }
    }
}

impl Functional for PathFn {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        (self.f)(path)
    }
}
