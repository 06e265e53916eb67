//! Exact-law fractional Brownian motion on uniform grids.
//!
//! Two exact samplers are provided: a Cholesky reference generator and a
//! circulant-embedding fast path. Both honour the per-path stream contract
//! of [`crate::rng::PathStream`].

mod cholesky;
mod circulant;
mod refine;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_space::StoppedPath;
use crate::rng::PathStream;

pub use cholesky::{generate_cholesky, CholeskyGenerator, DEFAULT_CHOLESKY_CAP};
pub use circulant::{generate_circulant, CirculantGenerator};
pub use refine::{refine, REFINE_CAP};

/// Hurst exponent of the driver. `0.5` is admitted as the Brownian case.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && (0.5..1.0).contains(&h) {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn brownian() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }

    pub fn two_h(self) -> f64 {
        2.0 * self.0
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<HurstParameter> for f64 {
    fn from(h: HurstParameter) -> f64 {
        h.0
    }
}

/// Uniform partition `t_i = i T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step is required".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.time(i))
    }

    /// The doubled grid carrying the cell midpoints.
    pub fn refined(&self) -> Self {
        Self {
            horizon: self.horizon,
            steps: 2 * self.steps,
        }
    }

    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.steps
            )));
        }
        Ok(Self {
            horizon: self.horizon,
            steps: self.steps / factor,
        })
    }

    /// Index of a time lying on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let i = x.round();
        if i < 0.0 || i > self.steps as f64 || (x - i).abs() > 1e-9 * self.steps as f64 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Index of the grid point at or before `t` (càdlàg step lookup).
    pub fn floor_index(&self, t: f64) -> usize {
        if let Some(i) = self.index_of(t) {
            return i;
        }
        ((t / self.dt()).floor().max(0.0) as usize).min(self.steps)
    }
}

/// Values of a path sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl DiscretePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} steps",
                values.len(),
                grid.steps()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("path value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Path whose value is `f(t_i)` at every grid point.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn increment(&self, i: usize) -> f64 {
        self.values[i] - self.values[i - 1]
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Every `stride`-th value, i.e. the same path seen on a coarser grid.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let grid = self.grid.coarsened(stride)?;
        let values = self.values.iter().step_by(stride).copied().collect();
        Ok(Self { grid, values })
    }

    /// The path stopped at grid index `cursor`.
    pub fn stopped(&self, cursor: usize) -> StoppedPath<'_> {
        StoppedPath::borrowed(self.grid, &self.values, cursor)
    }
}

/// A sample of fractional Brownian motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmPath {
    path: DiscretePath,
    hurst: HurstParameter,
    seed_tag: u64,
}

impl FbmPath {
    pub fn new(path: DiscretePath, hurst: HurstParameter, seed_tag: u64) -> Result<Self> {
        if path.values()[0] != 0.0 {
            return Err(Error::Domain("fractional Brownian motion starts at the origin".into()));
        }
        Ok(Self {
            path,
            hurst,
            seed_tag,
        })
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn seed_tag(&self) -> u64 {
        self.seed_tag
    }

    pub fn path(&self) -> &DiscretePath {
        &self.path
    }

    /// View on a coarser grid (every `stride`-th value).
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        Ok(Self {
            path: self.path.subsample(stride)?,
            hurst: self.hurst,
            seed_tag: self.seed_tag,
        })
    }
}

impl Deref for FbmPath {
    type Target = DiscretePath;

    fn deref(&self) -> &DiscretePath {
        &self.path
    }
}

/// Immutable, shareable sampler for one `(grid, H)` pair.
pub trait FbmGenerator: Send + Sync {
    fn grid(&self) -> TimeGrid;
    fn hurst(&self) -> HurstParameter;
    fn generate(&self, stream: &PathStream) -> FbmPath;
}

/// `E[B(s) B(t)] = ½(t^{2H} + s^{2H} − |t−s|^{2H})`.
pub fn covariance(s: f64, t: f64, h: HurstParameter) -> Result<f64> {
    if s < 0.0 || t < 0.0 || !s.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!("covariance needs nonnegative times, got ({s}, {t})")));
    }
    Ok(covariance_unchecked(s, t, h.two_h()))
}

pub(crate) fn covariance_unchecked(s: f64, t: f64, two_h: f64) -> f64 {
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
pub(crate) fn noise_autocovariance(k: usize, two_h: f64) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) + (k - 1.0).abs().powf(two_h) - 2.0 * k.powf(two_h))
}

/// `Σ_i (B(t_i) − B(t_{i−1}))²`.
pub fn quadratic_variation(path: &DiscretePath) -> f64 {
    path.increments().map(|d| d * d).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(covariance(1.0, 1.0, h(0.7)).unwrap(), 1.0);
        assert_eq!(covariance(0.0, 0.37, h(0.7)).unwrap(), 0.0);
        // ½(0.9^1.4 + 0.4^1.4 − 0.5^1.4), evaluated independently to 10 digits
        let v = covariance(0.4, 0.9, h(0.7)).unwrap();
        assert!((v - 0.380_593_58).abs() < 1e-8, "{v}");
    }

    #[test]
    fn covariance_rejects_negative_time() {
        assert!(matches!(covariance(-0.1, 1.0, h(0.7)), Err(Error::Domain(_))));
    }

    #[test]
    fn hurst_range() {
        assert!(HurstParameter::new(0.5).unwrap().is_brownian());
        assert!(!h(0.7).is_brownian());
        assert!(HurstParameter::new(0.3).is_err());
        assert!(HurstParameter::new(1.0).is_err());
        assert!(HurstParameter::new(f64::NAN).is_err());
    }

    #[test]
    fn grid_points() {
        let g = TimeGrid::new(2.0, 8).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(8), 2.0);
        assert_eq!(g.index_of(0.5), Some(2));
        assert_eq!(g.index_of(0.6), None);
        assert_eq!(g.floor_index(0.6), 2);
        assert_eq!(g.refined().steps(), 16);
        assert!(g.coarsened(3).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn quadratic_variation_of_zero_path() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let p = DiscretePath::new(g, vec![0.0; 17]).unwrap();
        assert_eq!(quadratic_variation(&p), 0.0);
    }

    #[test]
    fn subsample_keeps_every_other_value() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = DiscretePath::new(g, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = p.subsample(2).unwrap();
        assert_eq!(q.values(), &[0.0, 2.0, 4.0]);
        assert_eq!(q.grid().steps(), 2);
    }

    #[test]
    fn fbm_path_must_start_at_origin() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let p = DiscretePath::new(g, vec![1.0, 2.0]).unwrap();
        assert!(FbmPath::new(p, h(0.7), 0).is_err());
    }
}
