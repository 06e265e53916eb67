use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{noise_autocovariance, DiscretePath, FbmGenerator, FbmPath, HurstParameter, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::PathStream;

const EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Davies–Harte sampler: the increment autocovariance is embedded in a
/// circulant matrix of size `2n` and diagonalised once by FFT.
#[derive(Clone)]
pub struct CirculantGenerator {
    grid: TimeGrid,
    hurst: HurstParameter,
    // sqrt(λ_k / 2n)
    scales: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantGenerator")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .finish()
    }
}

impl CirculantGenerator {
    pub fn new(grid: TimeGrid, hurst: HurstParameter) -> Result<Self> {
        let n = grid.steps();
        let m = 2 * n;
        let two_h = hurst.two_h();
        let scale = grid.dt().powf(two_h);

        let mut row: Vec<Complex64> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex64::new(scale * noise_autocovariance(lag, two_h), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);

        let largest = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let mut scales = Vec::with_capacity(m);
        for (index, c) in row.iter().enumerate() {
            let value = c.re;
            if value < -EIGENVALUE_TOLERANCE * largest {
                return Err(Error::NegativeEigenvalue { index, value });
            }
            scales.push((value.max(0.0) / m as f64).sqrt());
        }
        Ok(Self {
            grid,
            hurst,
            scales,
            fft,
        })
    }

    /// Fractional Gaussian noise increments for one stream.
    pub fn increments(&self, stream: &PathStream) -> Vec<f64> {
        let mut rng = stream.rng();
        let mut buffer: Vec<Complex64> = self
            .scales
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buffer);
        buffer[..self.grid.steps()].iter().map(|c| c.re).collect()
    }
}

impl FbmGenerator for CirculantGenerator {
    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn generate(&self, stream: &PathStream) -> FbmPath {
        let increments = self.increments(stream);
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for d in increments {
            acc += d;
            values.push(acc);
        }
        let path = DiscretePath::new(self.grid, values).expect("embedding output has grid length");
        FbmPath::new(path, self.hurst, stream.tag()).expect("sampled path starts at zero")
    }
}

pub fn generate_circulant(grid: TimeGrid, hurst: HurstParameter, stream: &PathStream) -> Result<FbmPath> {
    Ok(CirculantGenerator::new(grid, hurst)?.generate(stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::covariance;
    use rayon::prelude::*;

    #[test]
    fn brownian_case_has_flat_spectrum() {
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let gen = CirculantGenerator::new(grid, HurstParameter::brownian()).unwrap();
        let expected = (grid.dt() / 128.0).sqrt();
        assert!(gen.scales.iter().all(|s| (s - expected).abs() < 1e-12));
    }

    #[test]
    fn brownian_increments_are_iid_with_step_variance() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let gen = CirculantGenerator::new(grid, HurstParameter::brownian()).unwrap();
        let m = 5_000u64;
        let mut lag0 = 0.0;
        let mut lag1 = 0.0;
        for i in 0..m {
            let d = gen.increments(&PathStream::new(1, i));
            lag0 += d[10] * d[10];
            lag1 += d[10] * d[11];
        }
        let dt = grid.dt();
        let se = dt * (2.0 / m as f64).sqrt();
        assert!((lag0 / m as f64 - dt).abs() < 4.0 * se);
        assert!((lag1 / m as f64).abs() < 4.0 * dt / (m as f64).sqrt());
    }

    #[test]
    fn two_point_covariance_matches_law() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let h = HurstParameter::new(0.7).unwrap();
        let gen = CirculantGenerator::new(grid, h).unwrap();
        let m = 20_000u64;
        let prods: Vec<f64> = (0..m)
            .map(|i| {
                let p = gen.generate(&PathStream::new(2, i));
                p.values()[128] * p.values()[256]
            })
            .collect();
        let mean = prods.iter().sum::<f64>() / m as f64;
        let sd = (prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
        let target = covariance(0.5, 1.0, h).unwrap();
        assert!((mean - target).abs() < 4.0 * sd / (m as f64).sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn output_independent_of_thread_count() {
        let grid = TimeGrid::new(1.0, 128).unwrap();
        let gen = CirculantGenerator::new(grid, HurstParameter::new(0.8).unwrap()).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (0..64u64)
                        .into_par_iter()
                        .map(|i| gen.generate(&PathStream::new(4, i)).terminal())
                        .collect::<Vec<_>>()
                })
        };
        assert_eq!(run(1), run(4));
    }
}
