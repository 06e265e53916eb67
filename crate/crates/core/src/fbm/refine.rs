//! Exact midpoint augmentation of a sampled path.
//!
//! Given `B(t_0), …, B(t_n)`, the midpoints are drawn from their Gaussian
//! conditional law. Experiments that need midpoints for many paths generate on
//! the doubled grid instead; this is for paths that already exist.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{covariance_unchecked, DiscretePath, FbmPath, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::PathStream;

pub const REFINE_CAP: usize = 1024;

struct Conditional {
    // E[M | C] = gain · C
    gain: DMatrix<f64>,
    // lower factor of Cov(M | C)
    factor: DMatrix<f64>,
}

type Key = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Conditional>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Conditional>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn conditional(grid: TimeGrid, two_h: f64) -> Result<Arc<Conditional>> {
    let n = grid.steps();
    let key = (n, grid.horizon().to_bits(), two_h.to_bits());
    if let Some(c) = cache().lock().expect("refine cache poisoned").get(&key) {
        return Ok(Arc::clone(c));
    }
    let coarse = |i: usize| grid.time(i + 1);
    let mid = |i: usize| 0.5 * (grid.time(i) + grid.time(i + 1));
    let cc = DMatrix::from_fn(n, n, |i, j| covariance_unchecked(coarse(i), coarse(j), two_h));
    let cm = DMatrix::from_fn(n, n, |i, j| covariance_unchecked(coarse(i), mid(j), two_h));
    let mm = DMatrix::from_fn(n, n, |i, j| covariance_unchecked(mid(i), mid(j), two_h));
    let failed = || Error::FactorizationFailed {
        steps: n,
        hurst: two_h / 2.0,
    };

    let chol = cc.cholesky().ok_or_else(failed)?;
    // gainᵀ = Σ_CC⁻¹ Σ_CM
    let gain = chol.solve(&cm).transpose();
    let mut cond = mm - &gain * &cm;
    cond = 0.5 * (&cond + cond.transpose());
    let factor = cond.cholesky().ok_or_else(failed)?.unpack();

    let c = Arc::new(Conditional { gain, factor });
    cache()
        .lock()
        .expect("refine cache poisoned")
        .insert(key, Arc::clone(&c));
    Ok(c)
}

/// Returns the path on the doubled grid; even-indexed values are the input.
pub fn refine(path: &FbmPath, stream: &PathStream) -> Result<FbmPath> {
    let grid = path.grid();
    let n = grid.steps();
    if n > REFINE_CAP {
        return Err(Error::CapExceeded {
            steps: n,
            cap: REFINE_CAP,
        });
    }
    let cond = conditional(grid, path.hurst().two_h())?;
    let coarse = &path.values()[1..];
    let mut rng = stream.rng();
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut values = Vec::with_capacity(2 * n + 1);
    values.push(0.0);
    for i in 0..n {
        let mean: f64 = cond.gain.row(i).iter().zip(coarse).map(|(g, c)| g * c).sum();
        let noise: f64 = cond
            .factor
            .row(i)
            .iter()
            .zip(&z)
            .take(i + 1)
            .map(|(l, z)| l * z)
            .sum();
        values.push(mean + noise);
        values.push(coarse[i]);
    }
    let refined = DiscretePath::new(grid.refined(), values)?;
    FbmPath::new(refined, path.hurst(), path.seed_tag())
}
