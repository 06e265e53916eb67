use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::derivatives::{vertical_derivative, vertical_derivative_along};
use super::StoppedPath;
use crate::fbm::DiscretePath;
use crate::malliavin::StepFunction;

/// Horizontal/vertical differentiability class `C^{j,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Smoothness {
    C00,
    C11,
    C12,
}

/// A non-anticipative map `Λ → ℝ` with optional closed-form derivatives.
///
/// `eval` and the derivative hooks may only read `path.prefix()`. The
/// `*_prefixes` methods evaluate at every cursor of a sampled path; the
/// defaults call the pointwise methods, builtins override them with running
/// updates so a whole path costs `O(n)`.
pub trait Functional: Send + Sync {
    fn name(&self) -> String;

    fn smoothness(&self) -> Smoothness;

    fn eval(&self, path: &StoppedPath<'_>) -> f64;

    /// Closed-form `Δ_t F`, if known.
    fn dt(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        None
    }

    /// Closed-form `Δ_x F`, if known.
    fn dx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        None
    }

    /// Closed-form `Δ_xx F`, if known.
    fn dxx(&self, _path: &StoppedPath<'_>) -> Option<f64> {
        None
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        (0..=path.steps()).map(|k| self.eval(&path.stopped(k))).collect()
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        (0..=path.steps()).map(|k| self.dt(&path.stopped(k))).collect()
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        (0..=path.steps()).map(|k| self.dx(&path.stopped(k))).collect()
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        (0..=path.steps()).map(|k| self.dxx(&path.stopped(k))).collect()
    }
}

pub type SharedFunctional = Arc<dyn Functional>;

/// `c · F`.
#[derive(Clone)]
pub struct Scaled {
    factor: f64,
    inner: SharedFunctional,
}

impl Scaled {
    pub fn new(factor: f64, inner: SharedFunctional) -> Self {
        Self { factor, inner }
    }
}

fn scale(c: f64, v: Option<Vec<f64>>) -> Option<Vec<f64>> {
    v.map(|mut v| {
        v.iter_mut().for_each(|x| *x *= c);
        v
    })
}

impl Functional for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }

    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        self.factor * self.inner.eval(path)
    }

    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dt(path).map(|v| self.factor * v)
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dx(path).map(|v| self.factor * v)
    }

    fn dxx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dxx(path).map(|v| self.factor * v)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        scale(self.factor, Some(self.inner.eval_prefixes(path))).unwrap_or_default()
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        scale(self.factor, self.inner.dt_prefixes(path))
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        scale(self.factor, self.inner.dx_prefixes(path))
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        scale(self.factor, self.inner.dxx_prefixes(path))
    }
}

/// `F(γ_t) · a(t)` for a deterministic step coefficient `a`.
#[derive(Clone)]
pub struct StepWeighted {
    inner: SharedFunctional,
    coefficient: StepFunction,
}

impl StepWeighted {
    pub fn new(inner: SharedFunctional, coefficient: StepFunction) -> Self {
        Self { inner, coefficient }
    }

    fn weights(&self, path: &DiscretePath) -> Vec<f64> {
        path.grid().times().map(|t| self.coefficient.value_at(t)).collect()
    }

    fn weigh(&self, path: &DiscretePath, v: Option<Vec<f64>>) -> Option<Vec<f64>> {
        v.map(|v| v.iter().zip(self.weights(path)).map(|(x, w)| x * w).collect())
    }
}

impl Functional for StepWeighted {
    fn name(&self) -> String {
        format!("{}*step", self.inner.name())
    }

    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        self.inner.eval(path) * self.coefficient.value_at(path.time())
    }

    // right-continuous steps are constant on [t, t + h) for small h
    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dt(path).map(|v| v * self.coefficient.value_at(path.time()))
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dx(path).map(|v| v * self.coefficient.value_at(path.time()))
    }

    fn dxx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dxx(path).map(|v| v * self.coefficient.value_at(path.time()))
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        self.weigh(path, Some(self.inner.eval_prefixes(path)))
            .unwrap_or_default()
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.weigh(path, self.inner.dt_prefixes(path))
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.weigh(path, self.inner.dx_prefixes(path))
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.weigh(path, self.inner.dxx_prefixes(path))
    }
}

/// `Σ c_b F_b`.
#[derive(Clone)]
pub struct LinearCombination {
    terms: Vec<(f64, SharedFunctional)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, SharedFunctional)>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[(f64, SharedFunctional)] {
        &self.terms
    }

    fn combine(
        &self,
        get: impl Fn(&SharedFunctional) -> Option<Vec<f64>>,
        len: usize,
    ) -> Option<Vec<f64>> {
        let mut out = vec![0.0; len];
        for (c, f) in &self.terms {
            for (o, v) in out.iter_mut().zip(get(f)?) {
                *o += c * v;
            }
        }
        Some(out)
    }

    fn combine_at(&self, get: impl Fn(&SharedFunctional) -> Option<f64>) -> Option<f64> {
        self.terms
            .iter()
            .map(|(c, f)| get(f).map(|v| c * v))
            .sum()
    }
}

impl Functional for LinearCombination {
    fn name(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, f)| format!("{c}*{}", f.name()))
            .collect();
        parts.join("+")
    }

    fn smoothness(&self) -> Smoothness {
        self.terms
            .iter()
            .map(|(_, f)| f.smoothness())
            .min()
            .unwrap_or(Smoothness::C12)
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.eval(path)).sum()
    }

    fn dt(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.combine_at(|f| f.dt(path))
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.combine_at(|f| f.dx(path))
    }

    fn dxx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.combine_at(|f| f.dxx(path))
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        self.combine(|f| Some(f.eval_prefixes(path)), path.steps() + 1)
            .unwrap_or_default()
    }

    fn dt_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.combine(|f| f.dt_prefixes(path), path.steps() + 1)
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.combine(|f| f.dx_prefixes(path), path.steps() + 1)
    }

    fn dxx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.combine(|f| f.dxx_prefixes(path), path.steps() + 1)
    }
}

/// The functional `γ_t ↦ Δ_x F(γ_t)`; its own vertical derivative is `Δ_xx F`.
#[derive(Clone)]
pub struct VerticalDerivative {
    inner: SharedFunctional,
}

impl VerticalDerivative {
    pub fn new(inner: SharedFunctional) -> Self {
        Self { inner }
    }
}

impl Functional for VerticalDerivative {
    fn name(&self) -> String {
        format!("dx[{}]", self.inner.name())
    }

    fn smoothness(&self) -> Smoothness {
        match self.inner.smoothness() {
            Smoothness::C12 => Smoothness::C11,
            _ => Smoothness::C00,
        }
    }

    fn eval(&self, path: &StoppedPath<'_>) -> f64 {
        vertical_derivative(self.inner.as_ref(), path)
            .map(|d| d.value)
            .unwrap_or(f64::NAN)
    }

    fn dx(&self, path: &StoppedPath<'_>) -> Option<f64> {
        self.inner.dxx(path)
    }

    fn eval_prefixes(&self, path: &DiscretePath) -> Vec<f64> {
        vertical_derivative_along(self.inner.as_ref(), path)
            .unwrap_or_else(|_| vec![f64::NAN; path.steps() + 1])
    }

    fn dx_prefixes(&self, path: &DiscretePath) -> Option<Vec<f64>> {
        self.inner.dxx_prefixes(path)
    }
}
