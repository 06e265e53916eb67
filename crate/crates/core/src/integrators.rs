//! Discrete Itô-type, Stratonovich and Wick–Itô–Skorohod sums, and the
//! driven processes they integrate along.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{DiscretePath, FbmPath, HurstParameter, TimeGrid};
use crate::malliavin::{wick_correction, StepFunction};
use crate::path_space::{vertical_derivative_along, Functional, Smoothness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralKind {
    ItoType,
    Stratonovich,
    Wis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralSample {
    pub value: f64,
    /// Number of cells of the working grid.
    pub resolution: usize,
    pub kind: IntegralKind,
}

fn sample(value: f64, resolution: usize, kind: IntegralKind) -> Result<IntegralSample> {
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{kind:?} sum at n = {resolution}")));
    }
    Ok(IntegralSample {
        value,
        resolution,
        kind,
    })
}

fn same_grid(a: &DiscretePath, b: &DiscretePath) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "driver on {:?} but integrand path on {:?}",
            a.grid(),
            b.grid()
        )));
    }
    Ok(())
}

/// `Σ_i v_{i−1}(d_i − d_{i−1})` for prefix values `v_0..v_{n−1}`.
pub(crate) fn left_point(values: &[f64], driver: &[f64]) -> f64 {
    values
        .iter()
        .zip(driver.windows(2))
        .map(|(v, d)| v * (d[1] - d[0]))
        .sum()
}

/// `Σ_i v_{2i−1}(d_{2i} − d_{2i−2})` over a doubled grid.
pub(crate) fn midpoint(refined_values: &[f64], refined_driver: &[f64]) -> f64 {
    refined_driver
        .windows(3)
        .step_by(2)
        .zip(refined_values.iter().skip(1).step_by(2))
        .map(|(d, v)| v * (d[2] - d[0]))
        .sum()
}

/// Per-cell Wick corrections `Δ_x F(t_{i−1}) ⟨1_{[0,t_{i−1}]}, 1_{[t_{i−1},t_i]}⟩`.
pub(crate) fn wick_corrections(dx: &[f64], grid: TimeGrid, hurst: HurstParameter) -> Vec<f64> {
    (1..=grid.steps())
        .map(|i| wick_correction(dx[i - 1], grid.time(i - 1), grid.time(i), hurst))
        .collect()
}

/// `Σ F(X_{t_{i−1}})(driver(t_i) − driver(t_{i−1}))`.
pub fn ito_type_sum(f: &dyn Functional, driver: &DiscretePath, x: &DiscretePath) -> Result<IntegralSample> {
    same_grid(driver, x)?;
    let values = f.eval_prefixes(x);
    sample(
        left_point(&values[..x.steps()], driver.values()),
        x.steps(),
        IntegralKind::ItoType,
    )
}

/// `Σ F(X_{(t_{i−1}+t_i)/2})(driver(t_i) − driver(t_{i−1}))` from paths on the doubled grid.
pub fn stratonovich_sum(
    f: &dyn Functional,
    refined_driver: &DiscretePath,
    refined_x: &DiscretePath,
) -> Result<IntegralSample> {
    same_grid(refined_driver, refined_x)?;
    let steps = refined_x.steps();
    if !steps.is_multiple_of(2) {
        return Err(Error::NotRefined(format!(
            "{steps} steps; midpoint sums need paths on a doubled grid"
        )));
    }
    let values = f.eval_prefixes(refined_x);
    sample(
        midpoint(&values, refined_driver.values()),
        steps / 2,
        IntegralKind::Stratonovich,
    )
}

/// `Σ [F(B_{t_{i−1}})ΔB_i − Δ_x F(B_{t_{i−1}})⟨1_{[0,t_{i−1}]}, 1_{[t_{i−1},t_i]}⟩]`.
pub fn wis_sum(f: &dyn Functional, path: &FbmPath) -> Result<IntegralSample> {
    if path.hurst().is_brownian() {
        return Err(Error::NotFractional);
    }
    if f.smoothness() == Smoothness::C00 {
        return Err(Error::DerivativeUnavailable(format!(
            "{} has no vertical derivative; the Wick correction is undefined",
            f.name()
        )));
    }
    let n = path.steps();
    let values = f.eval_prefixes(path);
    let dx = vertical_derivative_along(f, path)?;
    let corrections: f64 = wick_corrections(&dx, path.grid(), path.hurst()).iter().sum();
    sample(
        left_point(&values[..n], path.values()) - corrections,
        n,
        IntegralKind::Wis,
    )
}

/// `X(t) = x₀ + ∫ψ ds + ∫φ dB` with deterministic step coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoProcessSpec {
    pub x0: f64,
    pub drift: StepFunction,
    pub volatility: StepFunction,
}

impl ItoProcessSpec {
    pub fn new(x0: f64, drift: StepFunction, volatility: StepFunction) -> Result<Self> {
        let (a, b) = (drift.grid(), volatility.grid());
        if (a.horizon() - b.horizon()).abs() > 1e-12 * a.horizon() {
            return Err(Error::GridMismatch("drift and volatility horizons differ".into()));
        }
        Ok(Self {
            x0,
            drift,
            volatility,
        })
    }

    /// Constant coefficients on `[0, horizon]`.
    pub fn constant(horizon: f64, x0: f64, psi: f64, phi: f64) -> Result<Self> {
        let grid = TimeGrid::new(horizon, 1)?;
        Self::new(x0, StepFunction::constant(grid, psi), StepFunction::constant(grid, phi))
    }

    /// `X = B`.
    pub fn driver(horizon: f64) -> Result<Self> {
        Self::constant(horizon, 0.0, 0.0, 1.0)
    }

    pub fn horizon(&self) -> f64 {
        self.drift.grid().horizon()
    }
}

/// `X(t_k) = x₀ + Σ_{j<k} ψ(t_j)Δt + φ(t_j)(B(t_{j+1}) − B(t_j))`, exact for step coefficients
/// whose jumps lie on the driver grid.
pub fn build_ito_process(spec: &ItoProcessSpec, driver: &DiscretePath) -> Result<DiscretePath> {
    let grid = driver.grid();
    if (grid.horizon() - spec.horizon()).abs() > 1e-12 * grid.horizon() {
        return Err(Error::GridMismatch(format!(
            "coefficients on [0, {}] but driver on [0, {}]",
            spec.horizon(),
            grid.horizon()
        )));
    }
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut x = spec.x0;
    values.push(x);
    for (j, db) in driver.increments().enumerate() {
        let t = grid.time(j);
        x += spec.drift.value_at(t) * dt + spec.volatility.value_at(t) * db;
        values.push(x);
    }
    DiscretePath::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{generate_circulant, quadratic_variation};
    use crate::path_space::{Cylindrical, RunningMax};
    use crate::rng::PathStream;

    fn path(values: Vec<f64>) -> DiscretePath {
        let n = values.len() - 1;
        DiscretePath::new(TimeGrid::new(1.0, n).unwrap(), values).unwrap()
    }

    #[test]
    fn constant_integrand_telescopes() {
        let d = path(vec![0.0, 0.4, -0.2, 0.1, 0.7]);
        let s = ito_type_sum(&Cylindrical::constant(3.0), &d, &d).unwrap();
        assert!((s.value - 2.1).abs() < 1e-14);
        let s = stratonovich_sum(&Cylindrical::constant(3.0), &d, &d).unwrap();
        assert!((s.value - 2.1).abs() < 1e-14);
        assert_eq!(s.resolution, 2);
    }

    #[test]
    fn ito_sum_of_endpoint_is_algebraic() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let h = HurstParameter::new(0.7).unwrap();
        let b = generate_circulant(grid, h, &PathStream::new(3, 0)).unwrap();
        let s = ito_type_sum(&Cylindrical::endpoint(), &b, &b).unwrap();
        let expected = 0.5 * (b.terminal().powi(2) - quadratic_variation(&b));
        assert!((s.value - expected).abs() < 1e-12);
    }

    #[test]
    fn riemann_sum_against_time() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let t = DiscretePath::from_fn(grid, |t| t).unwrap();
        let s = ito_type_sum(&Cylindrical::endpoint(), &t, &t).unwrap();
        assert!((s.value - 0.5).abs() < 1e-3);
    }

    #[test]
    fn grid_mismatch_and_parity() {
        let a = path(vec![0.0, 1.0, 2.0]);
        let b = path(vec![0.0, 1.0, 2.0, 3.0]);
        assert!(ito_type_sum(&Cylindrical::endpoint(), &a, &b).is_err());
        assert!(matches!(
            stratonovich_sum(&Cylindrical::endpoint(), &b, &b),
            Err(Error::NotRefined(_))
        ));
    }

    #[test]
    fn wis_sum_of_one_is_terminal_value() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let h = HurstParameter::new(0.7).unwrap();
        let b = generate_circulant(grid, h, &PathStream::new(5, 2)).unwrap();
        let s = wis_sum(&Cylindrical::constant(1.0), &b).unwrap();
        assert!((s.value - b.terminal()).abs() < 1e-12);
    }

    #[test]
    fn wis_decomposition_identity() {
        let grid = TimeGrid::new(1.0, 128).unwrap();
        let h = HurstParameter::new(0.65).unwrap();
        let b = generate_circulant(grid, h, &PathStream::new(9, 1)).unwrap();
        let f = Cylindrical::power(3);
        let w = wis_sum(&f, &b).unwrap().value;
        let ito = ito_type_sum(&f, &b, &b).unwrap().value;
        let dx = vertical_derivative_along(&f, &b).unwrap();
        let c: f64 = wick_corrections(&dx, grid, h).iter().sum();
        assert!((w - (ito - c)).abs() < 1e-12);
    }

    #[test]
    fn wis_rejects_brownian_and_c00() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let w = generate_circulant(grid, HurstParameter::brownian(), &PathStream::new(1, 0)).unwrap();
        assert!(matches!(wis_sum(&Cylindrical::endpoint(), &w), Err(Error::NotFractional)));
        let b = generate_circulant(grid, HurstParameter::new(0.7).unwrap(), &PathStream::new(1, 0)).unwrap();
        assert!(wis_sum(&RunningMax, &b).is_err());
    }

    #[test]
    fn ito_process_examples() {
        let d = path(vec![0.0, 0.5, 0.25, 1.0, 0.75]);
        let x = build_ito_process(&ItoProcessSpec::constant(1.0, 2.0, 0.0, 1.0).unwrap(), &d).unwrap();
        assert_eq!(x.values(), &[2.0, 2.5, 2.25, 3.0, 2.75]);
        let x = build_ito_process(&ItoProcessSpec::constant(1.0, 1.0, 1.0, 0.0).unwrap(), &d).unwrap();
        for (i, v) in x.values().iter().enumerate() {
            assert!((v - (1.0 + 0.25 * i as f64)).abs() < 1e-15);
        }
        let other = ItoProcessSpec::constant(2.0, 0.0, 0.0, 1.0).unwrap();
        assert!(build_ito_process(&other, &d).is_err());
    }
}
