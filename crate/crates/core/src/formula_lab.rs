//! Monte Carlo residual pipelines for the functional Itô, Itô–Stratonovich
//! and Wick–Itô–Skorohod formulas.
//!
//! Every case samples one path per index on the finest grid it needs and reads
//! every coarser resolution off that path by subsampling, so differences between
//! resolutions measure discretization error only.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{
    CholeskyGenerator, CirculantGenerator, DiscretePath, FbmGenerator, FbmPath, HurstParameter, TimeGrid,
};
use crate::integrators::{build_ito_process, left_point, midpoint, wick_corrections, ItoProcessSpec};
use crate::path_space::{
    horizontal_derivative_along, vertical_derivative_along, vertical_second_along, SharedFunctional, Smoothness,
};
use crate::rng::PathStream;
use crate::stats::{rms, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// Functional Itô formula for Brownian motion.
    Theorem20,
    /// Functional Itô–Stratonovich formula for Brownian motion.
    BmStratonovich,
    /// Brownian Stratonovich minus Itô equals `½∫Δ_x F φ dt`.
    Prop43,
    /// Fractional Stratonovich and Itô-type sums agree for `H > ½`.
    Prop45,
    /// Functional Itô formula for processes driven by fBm.
    Theorem32,
    /// WIS integral equals Stratonovich minus `H∫Δ_x F t^{2H−1} dt`.
    Prop54,
    /// Functional Itô formula in WIS form.
    Theorem50,
}

impl FormulaId {
    pub const ALL: [FormulaId; 7] = [
        FormulaId::Theorem20,
        FormulaId::BmStratonovich,
        FormulaId::Prop43,
        FormulaId::Prop45,
        FormulaId::Theorem32,
        FormulaId::Prop54,
        FormulaId::Theorem50,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FormulaId::Theorem20 => "theorem20",
            FormulaId::BmStratonovich => "bm_stratonovich",
            FormulaId::Prop43 => "prop43",
            FormulaId::Prop45 => "prop45",
            FormulaId::Theorem32 => "theorem32",
            FormulaId::Prop54 => "prop54",
            FormulaId::Theorem50 => "theorem50",
        }
    }

    pub fn required_smoothness(self) -> Smoothness {
        match self {
            FormulaId::Prop43 | FormulaId::Prop45 | FormulaId::Prop54 => Smoothness::C11,
            _ => Smoothness::C12,
        }
    }

    pub fn brownian(self) -> bool {
        matches!(self, FormulaId::Theorem20 | FormulaId::BmStratonovich | FormulaId::Prop43)
    }

    pub fn needs_midpoints(self) -> bool {
        !matches!(self, FormulaId::Theorem20 | FormulaId::Theorem50)
    }

    /// Formulas whose integrand must be a functional of the driver itself.
    pub fn driver_only(self) -> bool {
        matches!(self, FormulaId::Prop54 | FormulaId::Theorem50)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FormulaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Clone)]
pub struct FormulaCase {
    pub formula: FormulaId,
    pub functional: SharedFunctional,
    /// `None` integrates along the driver itself.
    pub process: Option<ItoProcessSpec>,
    pub hurst: HurstParameter,
    pub horizon: f64,
    /// Increasing resolutions; the largest must be a multiple of every other.
    pub ladder: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResidual {
    pub n: usize,
    pub rms: f64,
    /// Delta-method standard error of `rms`.
    pub rms_se: f64,
    pub mean: f64,
    pub se: f64,
    /// `rms(n) / rms(previous n)`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    /// Standard error of the paired difference against the target.
    pub se: f64,
    pub target: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub formula: FormulaId,
    pub functional: String,
    pub hurst: f64,
    pub paths: usize,
    pub levels: Vec<ResolutionResidual>,
    pub checks: Vec<ExpectationCheck>,
}

impl ResidualReport {
    pub fn level(&self, n: usize) -> Option<&ResolutionResidual> {
        self.levels.iter().find(|l| l.n == n)
    }

    pub fn final_rms(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.rms)
    }
}

/// Statistical threshold for expectation checks, in standard errors.
pub const CHECK_SE: f64 = 4.0;

/// RMS nonincreasing along the ladder, tolerating one increase no larger than one SE.
pub fn rms_nonincreasing(levels: &[ResolutionResidual]) -> bool {
    let mut inversions = 0;
    for w in levels.windows(2) {
        if w[1].rms > w[0].rms {
            inversions += 1;
            if inversions > 1 || w[1].rms - w[0].rms > w[0].rms_se.max(w[1].rms_se) {
                return false;
            }
        }
    }
    true
}

pub fn rms_strictly_decreasing(levels: &[ResolutionResidual]) -> bool {
    levels.windows(2).all(|w| w[1].rms < w[0].rms)
}

pub fn verify(case: &FormulaCase) -> Result<ResidualReport> {
    let plan = Plan::new(case)?;
    let per_path: Vec<Vec<LevelOut>> = (0..case.paths)
        .into_par_iter()
        .map(|i| plan.run_path(case, &PathStream::new(case.seed, i as u64)))
        .collect::<Result<_>>()?;
    Ok(plan.reduce(case, per_path))
}

fn with_formula(case: &FormulaCase, formula: FormulaId) -> Result<ResidualReport> {
    let mut case = case.clone();
    case.formula = formula;
    verify(&case)
}

pub fn verify_theorem20(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Theorem20)
}

pub fn verify_bm_stratonovich_theorem(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::BmStratonovich)
}

pub fn verify_prop43(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Prop43)
}

pub fn verify_prop45(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Prop45)
}

pub fn verify_theorem32(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Theorem32)
}

pub fn verify_prop54(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Prop54)
}

pub fn verify_theorem50(case: &FormulaCase) -> Result<ResidualReport> {
    with_formula(case, FormulaId::Theorem50)
}

/// One path, one resolution: the residual and `(observed, comparator)` pairs.
struct LevelOut {
    residual: f64,
    checks: Vec<(f64, f64)>,
}

struct Plan {
    generator: Box<dyn FbmGenerator>,
    fine: TimeGrid,
    spec: ItoProcessSpec,
    labels: &'static [&'static str],
}

/// Sampler for a grid: circulant embedding, Cholesky if the embedding fails.
pub fn sampler(grid: TimeGrid, hurst: HurstParameter) -> Result<Box<dyn FbmGenerator>> {
    match CirculantGenerator::new(grid, hurst) {
        Ok(g) => Ok(Box::new(g)),
        Err(Error::NegativeEigenvalue { .. }) => Ok(Box::new(CholeskyGenerator::new(grid, hurst)?)),
        Err(e) => Err(e),
    }
}

impl Plan {
    fn new(case: &FormulaCase) -> Result<Self> {
        let formula = case.formula;
        let f = &case.functional;
        if f.smoothness() < formula.required_smoothness() {
            return Err(Error::Hypothesis(format!(
                "{formula} needs a {:?} functional, {} is {:?}",
                formula.required_smoothness(),
                f.name(),
                f.smoothness()
            )));
        }
        if formula.brownian() != case.hurst.is_brownian() {
            return Err(Error::Hypothesis(format!(
                "{formula} needs {} driver, got H = {}",
                if formula.brownian() { "a Brownian" } else { "a fractional" },
                case.hurst.value()
            )));
        }
        if formula.driver_only() && case.process.is_some() {
            return Err(Error::Hypothesis(format!(
                "{formula} integrates functionals of the driver only"
            )));
        }
        if case.paths == 0 {
            return Err(Error::Config("paths must be positive".into()));
        }
        let ladder = &case.ladder;
        if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) || ladder[0] == 0 {
            return Err(Error::InvalidGrid(format!("ladder {ladder:?} must be increasing and positive")));
        }
        let top = *ladder.last().unwrap();
        if let Some(n) = ladder.iter().find(|n| !top.is_multiple_of(**n)) {
            return Err(Error::InvalidGrid(format!("{n} does not divide the finest resolution {top}")));
        }
        let fine_steps = if formula.needs_midpoints() { 2 * top } else { top };
        let fine = TimeGrid::new(case.horizon, fine_steps)?;
        let spec = match &case.process {
            Some(p) => p.clone(),
            None => ItoProcessSpec::driver(case.horizon)?,
        };
        let labels: &'static [&'static str] = match formula {
            FormulaId::Prop43 => &["stratonovich_minus_ito"],
            FormulaId::Prop54 => &["stratonovich"],
            FormulaId::Theorem50 => &["wis_mean"],
            _ => &[],
        };
        Ok(Self {
            generator: sampler(fine, case.hurst)?,
            fine,
            spec,
            labels,
        })
    }

    fn run_path(&self, case: &FormulaCase, stream: &PathStream) -> Result<Vec<LevelOut>> {
        let b = self.generator.generate(stream);
        case.ladder
            .iter()
            .map(|&n| self.level(case, &b, n))
            .collect()
    }

    fn level(&self, case: &FormulaCase, b: &FbmPath, n: usize) -> Result<LevelOut> {
        let f = case.functional.as_ref();
        let stride = self.fine.steps() / n;
        let (driver, refined) = if case.formula.needs_midpoints() {
            let refined_driver = b.subsample(stride / 2)?;
            let refined_x = build_ito_process(&self.spec, &refined_driver)?;
            (refined_driver.subsample(2)?, Some((refined_driver, refined_x)))
        } else {
            (b.subsample(stride)?, None)
        };
        let x = match &refined {
            Some((_, rx)) => rx.subsample(2)?,
            None => build_ito_process(&self.spec, &driver)?,
        };
        let grid = x.grid();
        let dt = grid.dt();
        let psi: Vec<f64> = (0..n).map(|i| self.spec.drift.value_at(grid.time(i))).collect();
        let phi: Vec<f64> = (0..n).map(|i| self.spec.volatility.value_at(grid.time(i))).collect();
        let values = f.eval_prefixes(&x);
        let change = values[n] - values[0];

        // Σ Δ_t F Δt + Σ Δ_x F ψ Δt
        let drift_terms = |dx: &[f64]| -> Result<f64> {
            let ft = horizontal_derivative_along(f, &x)?;
            Ok((0..n).map(|i| (ft[i] + dx[i] * psi[i]) * dt).sum())
        };
        let strat = |g: &[f64]| -> f64 {
            let (rd, _) = refined.as_ref().expect("midpoint formula");
            midpoint(g, rd.values())
        };
        let refined_x = || &refined.as_ref().expect("midpoint formula").1;
        let masses = || -> Vec<f64> {
            let two_h = case.hurst.two_h();
            (1..=n)
                .map(|i| 0.5 * (grid.time(i).powf(two_h) - grid.time(i - 1).powf(two_h)))
                .collect()
        };

        let out = match case.formula {
            FormulaId::Theorem20 => {
                let dx = vertical_derivative_along(f, &x)?;
                let dxx = vertical_second_along(f, &x)?;
                let noise: f64 = (0..n).map(|i| dx[i] * phi[i] * driver.increment(i + 1)).sum();
                let ito_correction: f64 = (0..n).map(|i| 0.5 * dxx[i] * phi[i] * phi[i] * dt).sum();
                LevelOut {
                    residual: change - drift_terms(&dx)? - noise - ito_correction,
                    checks: vec![],
                }
            }
            FormulaId::BmStratonovich | FormulaId::Theorem32 => {
                let dx = vertical_derivative_along(f, &x)?;
                let rx = refined_x();
                let rdx = vertical_derivative_along(f, rx)?;
                let rg = rx.grid();
                let weighted: Vec<f64> = rdx
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * self.spec.volatility.value_at(rg.time(k)))
                    .collect();
                LevelOut {
                    residual: change - drift_terms(&dx)? - strat(&weighted),
                    checks: vec![],
                }
            }
            FormulaId::Prop43 => {
                let dx = vertical_derivative_along(f, &x)?;
                let gap = strat(&f.eval_prefixes(refined_x())) - left_point(&values[..n], driver.values());
                let correction: f64 = (0..n).map(|i| 0.5 * dx[i] * phi[i] * dt).sum();
                LevelOut {
                    residual: gap - correction,
                    checks: vec![(gap, correction)],
                }
            }
            FormulaId::Prop45 => {
                let gap = strat(&f.eval_prefixes(refined_x())) - left_point(&values[..n], driver.values());
                LevelOut {
                    residual: gap,
                    checks: vec![],
                }
            }
            FormulaId::Prop54 => {
                let dx = vertical_derivative_along(f, &x)?;
                let corrections: f64 = wick_corrections(&dx, grid, case.hurst).iter().sum();
                let wis = left_point(&values[..n], driver.values()) - corrections;
                let s = strat(&f.eval_prefixes(refined_x()));
                let drift: f64 = masses().iter().zip(&dx).map(|(m, d)| m * d).sum();
                LevelOut {
                    residual: wis - (s - drift),
                    checks: vec![(s, drift)],
                }
            }
            FormulaId::Theorem50 => {
                let dx = vertical_derivative_along(f, &x)?;
                let dxx = vertical_second_along(f, &x)?;
                let corrections: f64 = wick_corrections(&dxx, grid, case.hurst).iter().sum();
                let wis = left_point(&dx[..n], driver.values()) - corrections;
                let ft = horizontal_derivative_along(f, &x)?;
                let horizontal: f64 = ft.iter().map(|v| v * dt).sum();
                let second: f64 = masses().iter().zip(&dxx).map(|(m, d)| m * d).sum();
                LevelOut {
                    residual: change - horizontal - wis - second,
                    checks: vec![(wis, 0.0)],
                }
            }
        };
        if !out.residual.is_finite() {
            return Err(Error::NonFinite(format!("{} residual at n = {n}", case.formula)));
        }
        Ok(out)
    }

    fn reduce(&self, case: &FormulaCase, per_path: Vec<Vec<LevelOut>>) -> ResidualReport {
        let mut levels: Vec<ResolutionResidual> = Vec::with_capacity(case.ladder.len());
        let mut checks = Vec::new();
        for (l, &n) in case.ladder.iter().enumerate() {
            let r: Vec<f64> = per_path.iter().map(|p| p[l].residual).collect();
            let s = Summary::of(&r);
            let squares: Vec<f64> = r.iter().map(|x| x * x).collect();
            let value = rms(&r);
            let rms_se = if value > 0.0 {
                Summary::of(&squares).se / (2.0 * value)
            } else {
                0.0
            };
            let ratio = levels.last().map(|prev| value / prev.rms);
            levels.push(ResolutionResidual {
                n,
                rms: value,
                rms_se,
                mean: s.mean,
                se: s.se,
                ratio,
            });
            for (c, label) in self.labels.iter().enumerate() {
                let obs: Vec<f64> = per_path.iter().map(|p| p[l].checks[c].0).collect();
                let cmp: Vec<f64> = per_path.iter().map(|p| p[l].checks[c].1).collect();
                let diff: Vec<f64> = obs.iter().zip(&cmp).map(|(a, b)| a - b).collect();
                let (o, d) = (Summary::of(&obs), Summary::of(&diff));
                let target = Summary::of(&cmp).mean;
                checks.push(ExpectationCheck {
                    label: (*label).to_string(),
                    n,
                    mean: o.mean,
                    se: d.se,
                    target,
                    passed: d.mean.abs() <= CHECK_SE * d.se,
                });
            }
        }
        ResidualReport {
            formula: case.formula,
            functional: case.functional.name(),
            hurst: case.hurst.value(),
            paths: case.paths,
            levels,
            checks,
        }
    }
}

/// Driver paths for ad-hoc experiments: `paths` samples on `grid`, indexed by stream.
pub fn sample_paths(grid: TimeGrid, hurst: HurstParameter, paths: usize, seed: u64) -> Result<Vec<FbmPath>> {
    let generator = sampler(grid, hurst)?;
    Ok((0..paths)
        .into_par_iter()
        .map(|i| generator.generate(&PathStream::new(seed, i as u64)))
        .collect())
}

/// The driver path of `b` seen on an `n`-step grid.
pub fn at_resolution(b: &FbmPath, n: usize) -> Result<DiscretePath> {
    if !b.steps().is_multiple_of(n) {
        return Err(Error::InvalidGrid(format!("{n} does not divide {}", b.steps())));
    }
    b.subsample(b.steps() / n)
}
