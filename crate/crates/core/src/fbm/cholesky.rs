use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{covariance_unchecked, DiscretePath, FbmGenerator, FbmPath, HurstParameter, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::PathStream;

pub const DEFAULT_CHOLESKY_CAP: usize = 2048;

type FactorKey = (usize, u64, u64);

fn factor_cache() -> &'static Mutex<HashMap<FactorKey, Arc<DMatrix<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<FactorKey, Arc<DMatrix<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Reference sampler: lower Cholesky factor of `Cov(B(t_i), B(t_j))`, `i, j ≥ 1`.
#[derive(Debug, Clone)]
pub struct CholeskyGenerator {
    grid: TimeGrid,
    hurst: HurstParameter,
    factor: Arc<DMatrix<f64>>,
}

impl CholeskyGenerator {
    pub fn new(grid: TimeGrid, hurst: HurstParameter) -> Result<Self> {
        Self::with_cap(grid, hurst, DEFAULT_CHOLESKY_CAP)
    }

    pub fn with_cap(grid: TimeGrid, hurst: HurstParameter, cap: usize) -> Result<Self> {
        let n = grid.steps();
        if n > cap {
            return Err(Error::CapExceeded { steps: n, cap });
        }
        let key = (n, grid.horizon().to_bits(), hurst.value().to_bits());
        if let Some(factor) = factor_cache().lock().expect("factor cache poisoned").get(&key) {
            return Ok(Self {
                grid,
                hurst,
                factor: Arc::clone(factor),
            });
        }

        let two_h = hurst.two_h();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            covariance_unchecked(grid.time(i + 1), grid.time(j + 1), two_h)
        });
        let factor = cov
            .cholesky()
            .ok_or(Error::FactorizationFailed {
                steps: n,
                hurst: hurst.value(),
            })?
            .unpack();
        let factor = Arc::new(factor);
        factor_cache()
            .lock()
            .expect("factor cache poisoned")
            .insert(key, Arc::clone(&factor));
        Ok(Self {
            grid,
            hurst,
            factor,
        })
    }

    pub(crate) fn sample_values(&self, z: &[f64]) -> Vec<f64> {
        let n = self.grid.steps();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        for i in 0..n {
            let row = self.factor.row(i);
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += row[j] * zj;
            }
            values.push(acc);
        }
        values
    }
}

impl FbmGenerator for CholeskyGenerator {
    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn generate(&self, stream: &PathStream) -> FbmPath {
        let mut rng = stream.rng();
        let z: Vec<f64> = (0..self.grid.steps())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let values = self.sample_values(&z);
        let path = DiscretePath::new(self.grid, values).expect("factor output has grid length");
        FbmPath::new(path, self.hurst, stream.tag()).expect("sampled path starts at zero")
    }
}

pub fn generate_cholesky(grid: TimeGrid, hurst: HurstParameter, stream: &PathStream) -> Result<FbmPath> {
    Ok(CholeskyGenerator::new(grid, hurst)?.generate(stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::quadratic_variation;

    #[test]
    fn single_step_is_standard_normal_at_unit_horizon() {
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let gen = CholeskyGenerator::new(grid, HurstParameter::new(0.7).unwrap()).unwrap();
        assert!((gen.factor[(0, 0)] - 1.0).abs() < 1e-15);
        let m = 20_000;
        let var: f64 = (0..m)
            .map(|i| gen.generate(&PathStream::new(3, i)).terminal().powi(2))
            .sum::<f64>()
            / m as f64;
        assert!((var - 1.0).abs() < 4.0 * (2.0f64 / m as f64).sqrt(), "{var}");
    }

    #[test]
    fn terminal_variance_matches_law() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let gen = CholeskyGenerator::new(grid, HurstParameter::new(0.75).unwrap()).unwrap();
        let m = 20_000u64;
        let sq: Vec<f64> = (0..m)
            .map(|i| gen.generate(&PathStream::new(11, i)).terminal().powi(2))
            .collect();
        let mean = sq.iter().sum::<f64>() / m as f64;
        let sd = (sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * sd / (m as f64).sqrt(), "{mean}");
    }

    #[test]
    fn fixed_stream_is_bit_identical() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let h = HurstParameter::new(0.6).unwrap();
        let a = generate_cholesky(grid, h, &PathStream::new(5, 9)).unwrap();
        let b = generate_cholesky(grid, h, &PathStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
        assert!(quadratic_variation(&a) > 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let err = CholeskyGenerator::with_cap(grid, HurstParameter::new(0.6).unwrap(), 32).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { steps: 64, cap: 32 }));
    }
}
