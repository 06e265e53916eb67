//! Path-dependent semilinear PDEs with diffusion coefficient `σ(t) = H t^{2H−1}`
//! and the fractional BSDEs they solve.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{FbmPath, HurstParameter, TimeGrid};
use crate::integrators::wick_corrections;
use crate::path_space::{
    vertical_derivative, vertical_derivative_along, vertical_second, vertical_second_along, Cylindrical, Functional,
    SharedFunctional, StoppedPath,
};
use crate::stats::Summary;

pub type DriverFn = Arc<dyn Fn(&StoppedPath<'_>, f64, f64) -> f64 + Send + Sync>;

/// Driver `f(γ_t, y, z)`, terminal functional `g` and Hurst index of one PDE/BSDE pair.
#[derive(Clone)]
pub struct PdeSpec {
    pub label: String,
    pub hurst: HurstParameter,
    pub horizon: f64,
    pub terminal: SharedFunctional,
    driver: DriverFn,
    /// Declared Lipschitz constant of `f` in `(y, z)`.
    pub lipschitz: f64,
}

impl PdeSpec {
    pub fn new(
        label: impl Into<String>,
        hurst: HurstParameter,
        horizon: f64,
        terminal: SharedFunctional,
        driver: impl Fn(&StoppedPath<'_>, f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Self {
        Self {
            label: label.into(),
            hurst,
            horizon,
            terminal,
            driver: Arc::new(driver),
            lipschitz,
        }
    }

    /// `f ≡ 0`.
    pub fn driftless(label: impl Into<String>, hurst: HurstParameter, horizon: f64, terminal: SharedFunctional) -> Self {
        Self::new(label, hurst, horizon, terminal, |_, _, _| 0.0, 0.0)
    }

    pub fn driver(&self, path: &StoppedPath<'_>, y: f64, z: f64) -> f64 {
        (self.driver)(path, y, z)
    }
}

/// `σ(t) = H t^{2H−1}`.
pub fn sigma(t: f64, hurst: HurstParameter) -> f64 {
    let h = hurst.value();
    if hurst.is_brownian() {
        h
    } else {
        h * t.powf(2.0 * h - 1.0)
    }
}

/// `u(γ_t) = γ(t)² + T^{2H} − t^{2H}`, solving the driftless equation with `g = γ(T)²`.
pub fn square_solution(horizon: f64, hurst: HurstParameter) -> Cylindrical {
    let two_h = hurst.two_h();
    let top = horizon.powf(two_h);
    Cylindrical::new("square_solution", move |t, x| x * x + top - t.powf(two_h)).with_derivatives(
        move |t, _| -two_h * t.powf(two_h - 1.0),
        |_, x| 2.0 * x,
        |_, _| 2.0,
    )
}

/// `u(γ_t) = γ(t) + c(T − t)`, solving the equation with `f ≡ c` and `g = γ(T)`.
pub fn drift_solution(c: f64, horizon: f64) -> Cylindrical {
    Cylindrical::new("drift_solution", move |t, x| x + c * (horizon - t))
        .with_derivatives(move |_, _| -c, |_, _| 1.0, |_, _| 0.0)
}

/// `Δ_t u + σ(t)Δ_xx u + f(γ_t, u, −Δ_x u)` from closed-form derivatives.
pub fn pde_residual(u: &dyn Functional, spec: &PdeSpec, path: &StoppedPath<'_>) -> Result<f64> {
    let missing = |what: &str| Error::DerivativeUnavailable(format!("{} has no closed-form {what}", u.name()));
    let ut = u.dt(path).ok_or_else(|| missing("Δ_t"))?;
    let ux = u.dx(path).ok_or_else(|| missing("Δ_x"))?;
    let uxx = u.dxx(path).ok_or_else(|| missing("Δ_xx"))?;
    let value = u.eval(path);
    Ok(ut + sigma(path.time(), spec.hurst) * uxx + spec.driver(path, value, -ux))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromPde,
    Picard,
}

/// Per-path `Y`, `Z` and `Δ_x Z` on the grid; `y[p][k]` is `Y(t_k)` on path `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsdeSolution {
    pub grid: TimeGrid,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Vertical derivative of `Z`, used by the Wick corrections of `∫Z ⋄ dB`.
    pub z_dx: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub trace: Option<PicardTrace>,
}

impl BsdeSolution {
    /// Sample mean of `Y(0)`.
    pub fn y0(&self) -> f64 {
        Summary::of(&self.y.iter().map(|y| y[0]).collect::<Vec<_>>()).mean
    }
}

fn check_paths(paths: &[FbmPath], spec: &PdeSpec) -> Result<TimeGrid> {
    let first = paths
        .first()
        .ok_or_else(|| Error::Config("at least one path is required".into()))?;
    let grid = first.grid();
    if (grid.horizon() - spec.horizon).abs() > 1e-12 * spec.horizon {
        return Err(Error::GridMismatch(format!(
            "paths end at {} but the equation at {}",
            grid.horizon(),
            spec.horizon
        )));
    }
    if let Some(p) = paths.iter().find(|p| p.grid() != grid) {
        return Err(Error::GridMismatch(format!("path grid {:?} differs from {grid:?}", p.grid())));
    }
    if paths.iter().any(|p| p.hurst() != spec.hurst) {
        return Err(Error::Config("paths were sampled with a different Hurst index".into()));
    }
    Ok(grid)
}

/// `Y(t) = u(B_t)`, `Z(t) = −Δ_x u(B_t)` after checking that `u` solves the PDE and
/// matches `g` at the horizon on every sampled prefix.
pub fn bsde_from_pde(u: &dyn Functional, spec: &PdeSpec, paths: &[FbmPath], tolerance: f64) -> Result<BsdeSolution> {
    let grid = check_paths(paths, spec)?;
    let n = grid.steps();
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64, usize)> = paths
        .par_iter()
        .map(|p| -> Result<_> {
            let mut worst = (0.0f64, 0usize);
            for k in 0..=n {
                let r = pde_residual(u, spec, &p.stopped(k))?.abs();
                if r > worst.0 || r.is_nan() {
                    worst = (r, k);
                }
            }
            let terminal_gap = (u.eval(&p.stopped(n)) - spec.terminal.eval(&p.stopped(n))).abs();
            if terminal_gap > worst.0 || terminal_gap.is_nan() {
                worst = (terminal_gap, n);
            }
            let y = u.eval_prefixes(p);
            let z = vertical_derivative_along(u, p)?.into_iter().map(|v| -v).collect();
            let z_dx = vertical_second_along(u, p)?.into_iter().map(|v| -v).collect();
            Ok((y, z, z_dx, worst.0, worst.1))
        })
        .collect::<Result<_>>()?;

    let mut worst: Option<(f64, usize, usize)> = None;
    for (p, r) in rows.iter().enumerate() {
        if !(r.3 <= tolerance) && worst.is_none_or(|w| !(r.3 <= w.0)) {
            worst = Some((r.3, p, r.4));
        }
    }
    if let Some((residual, path, index)) = worst {
        return Err(Error::PdeResidual { residual, path, index });
    }
    let mut solution = BsdeSolution {
        grid,
        y: Vec::with_capacity(rows.len()),
        z: Vec::with_capacity(rows.len()),
        z_dx: Vec::with_capacity(rows.len()),
        provenance: Provenance::FromPde,
        trace: None,
    };
    for (y, z, z_dx, _, _) in rows {
        solution.y.push(y);
        solution.z.push(z);
        solution.z_dx.push(z_dx);
    }
    Ok(solution)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsdeResidual {
    pub n: usize,
    pub paths: usize,
    /// RMS over paths and grid times.
    pub rms: f64,
    pub max_abs: f64,
    /// Residual at `t = 0` across paths.
    pub at_origin: Summary,
}

/// Residual of `Y(t_k) = g(B_T) + ∫_{t_k}^T f ds + ∫_{t_k}^T Z ⋄ dB` at every grid time.
///
/// Tail cells `[t_{i−1}, t_i]` are paired with `[0, t_{i−1}]` in the Wick
/// correction regardless of where the integral starts.
pub fn bsde_residual(solution: &BsdeSolution, paths: &[FbmPath], spec: &PdeSpec) -> Result<BsdeResidual> {
    let grid = check_paths(paths, spec)?;
    if grid != solution.grid || paths.len() != solution.y.len() {
        return Err(Error::GridMismatch("solution and paths disagree".into()));
    }
    if spec.hurst.is_brownian() {
        return Err(Error::NotFractional);
    }
    let n = grid.steps();
    let dt = grid.dt();
    let per_path: Vec<(f64, f64, f64)> = paths
        .par_iter()
        .enumerate()
        .map(|(p, b)| {
            let (y, z, zdx) = (&solution.y[p], &solution.z[p], &solution.z_dx[p]);
            let corrections = wick_corrections(zdx, grid, spec.hurst);
            let mut tail = spec.terminal.eval(&b.stopped(n));
            let mut sq = (y[n] - tail).powi(2);
            let mut max = (y[n] - tail).abs();
            for i in (1..=n).rev() {
                let prev = b.stopped(i - 1);
                tail += spec.driver(&prev, y[i - 1], z[i - 1]) * dt;
                tail += z[i - 1] * b.increment(i) - corrections[i - 1];
                let r = y[i - 1] - tail;
                sq += r * r;
                max = max.max(r.abs());
            }
            (sq, max, y[0] - tail)
        })
        .collect();
    let total: f64 = per_path.iter().map(|r| r.0).sum();
    let count = (paths.len() * (n + 1)) as f64;
    let origin: Vec<f64> = per_path.iter().map(|r| r.2).collect();
    let rms = (total / count).sqrt();
    if !rms.is_finite() {
        return Err(Error::NonFinite("BSDE residual".into()));
    }
    Ok(BsdeResidual {
        n,
        paths: paths.len(),
        rms,
        max_abs: per_path.iter().fold(0.0, |m, r| m.max(r.1)),
        at_origin: Summary::of(&origin),
    })
}

/// `max |v(B_t) + Δ_x u(B_t)|` over all sampled prefixes.
pub fn z_relation_check(u: &dyn Functional, v: &dyn Functional, paths: &[FbmPath]) -> Result<f64> {
    let worst: Vec<f64> = paths
        .par_iter()
        .map(|p| -> Result<f64> {
            let ux = vertical_derivative_along(u, p)?;
            let vv = v.eval_prefixes(p);
            Ok(ux.iter().zip(&vv).fold(0.0, |m, (a, b)| m.max((a + b).abs())))
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[derive(Clone)]
pub struct PicardConfig {
    /// Regression dictionary; every element needs a vertical derivative.
    pub basis: Vec<SharedFunctional>,
    pub iterations: usize,
    pub beta: f64,
    pub ridge: f64,
}

impl PicardConfig {
    pub fn new(basis: Vec<SharedFunctional>, iterations: usize) -> Self {
        Self {
            basis,
            iterations,
            beta: 0.0,
            ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub beta: f64,
    /// `‖Y^{k+1} − Y^k‖_β` for `k = 0, 1, …`.
    pub differences: Vec<f64>,
    pub y0: Vec<f64>,
    pub warning: Option<String>,
    pub method: String,
}

/// `(𝔼 Σ_{j<n} e^{β t_j} |ΔY(t_j)|² Δt)^{½}` from path-mean squared differences per grid time.
pub fn beta_norm(mean_squares: &[f64], grid: TimeGrid, beta: f64) -> f64 {
    let dt = grid.dt();
    mean_squares
        .iter()
        .take(grid.steps())
        .enumerate()
        .map(|(j, s)| (beta * grid.time(j)).exp() * s * dt)
        .sum::<f64>()
        .sqrt()
}

/// Fitted functional `Y(t_j) = Σ_b c_{j,b} φ_b(B_{t_j})`, `Z = −Δ_x Y`.
#[derive(Clone)]
pub struct PicardFit {
    basis: Vec<SharedFunctional>,
    coefficients: Vec<Vec<f64>>,
}

/// `φ_b`, `Δ_x φ_b`, `Δ_xx φ_b` at one prefix, flattened as `[φ.., dφ.., d²φ..]`.
fn slice_row(basis: &[SharedFunctional], path: &FbmPath, j: usize, out: &mut [f64]) -> Result<()> {
    let b = basis.len();
    let stopped = path.stopped(j);
    for (i, f) in basis.iter().enumerate() {
        out[i] = f.eval(&stopped);
        out[b + i] = vertical_derivative(f.as_ref(), &stopped)?.value;
        out[2 * b + i] = vertical_second(f.as_ref(), &stopped)?.value;
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PicardFit {
    fn zero(basis: Vec<SharedFunctional>, n: usize) -> Self {
        let b = basis.len();
        Self {
            basis,
            coefficients: vec![vec![0.0; b]; n + 1],
        }
    }

    pub fn coefficients(&self, j: usize) -> &[f64] {
        &self.coefficients[j]
    }

    /// `Y(0)`; every path shares the prefix at the origin.
    pub fn y0(&self) -> f64 {
        let b = self.basis.len();
        let origin = crate::fbm::DiscretePath::new(TimeGrid::new(1.0, 1).expect("unit grid"), vec![0.0, 0.0])
            .expect("zero path");
        let values: Vec<f64> = self.basis[..b].iter().map(|f| f.eval(&origin.stopped(0))).collect();
        dot(&self.coefficients[0], &values)
    }

    /// `(Y, Z, Δ_x Z)` along one path, each read from the prefix only.
    pub fn evaluate(&self, path: &FbmPath) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = path.steps();
        let b = self.basis.len();
        let mut row = vec![0.0; 3 * b];
        let (mut y, mut z, mut zdx) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
        for j in 0..=n {
            slice_row(&self.basis, path, j, &mut row)?;
            let c = &self.coefficients[j];
            y.push(dot(c, &row[..b]));
            z.push(-dot(c, &row[b..2 * b]));
            zdx.push(-dot(c, &row[2 * b..]));
        }
        Ok((y, z, zdx))
    }
}

const CHUNK: usize = 256;

/// Least squares `min Σ_p (target_p − c·x_p)²/M + ridge |c|²`, skipping columns that vanish on every path.
fn regress(xs: &[f64], targets: &[f64], b: usize, ridge: f64, index: usize) -> Result<Vec<f64>> {
    let m = targets.len();
    let partial: Vec<(DMatrix<f64>, DVector<f64>)> = xs
        .par_chunks(CHUNK * b)
        .zip(targets.par_chunks(CHUNK))
        .map(|(x, t)| {
            let mut gram = DMatrix::zeros(b, b);
            let mut rhs = DVector::zeros(b);
            for (row, target) in x.chunks(b).zip(t) {
                let v = DVector::from_column_slice(row);
                gram.ger(1.0, &v, &v, 1.0);
                rhs.axpy(*target, &v, 1.0);
            }
            (gram, rhs)
        })
        .collect();
    let mut gram = DMatrix::<f64>::zeros(b, b);
    let mut rhs = DVector::<f64>::zeros(b);
    for (g, r) in &partial {
        gram += g;
        rhs += r;
    }
    gram /= m as f64;
    rhs /= m as f64;
    let scale = gram.diagonal().iter().fold(0.0f64, |a, v| a.max(*v));
    let active: Vec<usize> = (0..b).filter(|&i| gram[(i, i)] > 1e-14 * scale.max(1e-300)).collect();
    let mut coefficients = vec![0.0; b];
    if active.is_empty() {
        return Ok(coefficients);
    }
    let k = active.len();
    let mut g = DMatrix::from_fn(k, k, |r, c| gram[(active[r], active[c])]);
    for d in 0..k {
        g[(d, d)] += ridge;
    }
    let r = DVector::from_fn(k, |i, _| rhs[active[i]]);
    // rank check relative to the diagonal, Cholesky alone accepts near-singular systems
    let conditioned = g.clone().symmetric_eigenvalues();
    let (lo, hi) = conditioned
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(lo > 1e-12 * hi) {
        return Err(Error::SingularRegression { index });
    }
    let chol = g.cholesky().ok_or(Error::SingularRegression { index })?;
    let c = chol.solve(&r);
    for (i, a) in active.iter().enumerate() {
        coefficients[*a] = c[i];
    }
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularRegression { index });
    }
    Ok(coefficients)
}

/// Regression Picard iteration for `Y(t) = g + ∫_t^T f ds + ∫_t^T Z ⋄ dB`.
///
/// Iterate `k + 1` runs backward over the grid. Each path carries the tail
/// `S_{j+1} = g + Σ_{i>j} (f_i Δt + Z_i ΔB_{i+1} − Δ_x Z_i ⟨1_{[0,t_i]}, 1_{[t_i,t_{i+1}]}⟩)`
/// built from the slices already fitted. At `t_j` the target `S_{j+1} + f(B_{t_j}, Y^k, Z^k)Δt`
/// is regressed onto `φ_b + Δ_x φ_b ΔB_{j+1} − Δ_xx φ_b ⟨…⟩`, the basis with the
/// one-step Wick increment of `Z = −Δ_x Y` folded in, so `Y` and `Z` come from one fit.
pub fn picard_solve(spec: &PdeSpec, config: &PicardConfig, paths: &[FbmPath]) -> Result<BsdeSolution> {
    let (solution, _) = picard_fit(spec, config, paths)?;
    Ok(solution)
}

/// [`picard_solve`] that also returns the fitted functional.
pub fn picard_fit(spec: &PdeSpec, config: &PicardConfig, paths: &[FbmPath]) -> Result<(BsdeSolution, PicardFit)> {
    if config.basis.is_empty() {
        return Err(Error::Config("Picard basis must be nonempty".into()));
    }
    if config.iterations == 0 {
        return Err(Error::Config("Picard iterations must be at least 1".into()));
    }
    if !(config.beta >= 0.0 && config.ridge >= 0.0) {
        return Err(Error::Config("beta and ridge must be nonnegative".into()));
    }
    if spec.hurst.is_brownian() {
        return Err(Error::NotFractional);
    }
    let grid = check_paths(paths, spec)?;
    let n = grid.steps();
    let dt = grid.dt();
    let b = config.basis.len();
    let m = paths.len();
    let unit = wick_corrections(&vec![1.0; n + 1], grid, spec.hurst);
    let basis = &config.basis;

    let mut fit = PicardFit::zero(basis.clone(), n);
    let mut differences = Vec::with_capacity(config.iterations);
    let mut y0_history = Vec::with_capacity(config.iterations);
    let mut rows = vec![0.0; m * 3 * b];
    let mut xs = vec![0.0; m * b];

    for _ in 0..config.iterations {
        let mut next = PicardFit::zero(basis.clone(), n);
        let mut tail: Vec<f64> = paths.par_iter().map(|p| spec.terminal.eval(&p.stopped(n))).collect();
        let mut squares = vec![0.0; n + 1];

        rows.par_chunks_mut(3 * b)
            .zip(paths.par_iter())
            .try_for_each(|(row, p)| slice_row(basis, p, n, row))?;
        for (x, row) in xs.chunks_mut(b).zip(rows.chunks(3 * b)) {
            x.copy_from_slice(&row[..b]);
        }
        next.coefficients[n] = regress(&xs, &tail, b, config.ridge, n)?;

        for j in (0..n).rev() {
            rows.par_chunks_mut(3 * b)
                .zip(paths.par_iter())
                .try_for_each(|(row, p)| slice_row(basis, p, j, row))?;
            let old = &fit.coefficients[j];
            let targets: Vec<f64> = rows
                .par_chunks(3 * b)
                .zip(paths.par_iter())
                .zip(tail.par_iter())
                .map(|((row, p), s)| {
                    let y = dot(old, &row[..b]);
                    let z = -dot(old, &row[b..2 * b]);
                    s + spec.driver(&p.stopped(j), y, z) * dt
                })
                .collect();
            xs.par_chunks_mut(b)
                .zip(rows.par_chunks(3 * b))
                .zip(paths.par_iter())
                .for_each(|((x, row), p)| {
                    let db = p.increment(j + 1);
                    for i in 0..b {
                        x[i] = row[i] + row[b + i] * db - row[2 * b + i] * unit[j];
                    }
                });
            let c = regress(&xs, &targets, b, config.ridge, j)?;
            let deltas: Vec<f64> = rows
                .par_chunks(3 * b)
                .zip(paths.par_iter())
                .zip(tail.par_iter_mut())
                .zip(targets.par_iter())
                .map(|(((row, p), s), target)| {
                    let z = -dot(&c, &row[b..2 * b]);
                    let zdx = -dot(&c, &row[2 * b..]);
                    *s = target + z * p.increment(j + 1) - zdx * unit[j];
                    let d = dot(&c, &row[..b]) - dot(old, &row[..b]);
                    d * d
                })
                .collect();
            squares[j] = deltas.iter().sum::<f64>() / m as f64;
            next.coefficients[j] = c;
        }

        differences.push(beta_norm(&squares, grid, config.beta));
        fit = next;
        y0_history.push(fit.y0());
    }

    let warning = differences
        .windows(4)
        .position(|w| w[0] > 0.0 && w[1] >= w[0] && w[2] >= w[1] && w[3] >= w[2])
        .map(|k| format!("β-norm differences did not decrease over iterations {}..{}", k + 1, k + 4));

    let evaluated: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> =
        paths.par_iter().map(|p| fit.evaluate(p)).collect::<Result<_>>()?;
    let mut solution = BsdeSolution {
        grid,
        y: Vec::with_capacity(m),
        z: Vec::with_capacity(m),
        z_dx: Vec::with_capacity(m),
        provenance: Provenance::Picard,
        trace: Some(PicardTrace {
            beta: config.beta,
            differences,
            y0: y0_history,
            warning,
            method: "backward least-squares regression over path prefixes with pathwise Wick tails; \
                     Z = -dx of the fitted combination"
                .into(),
        }),
    };
    for (y, z, z_dx) in evaluated {
        solution.y.push(y);
        solution.z.push(z);
        solution.z_dx.push(z_dx);
    }
    Ok((solution, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula_lab::sample_paths;

    fn h() -> HurstParameter {
        HurstParameter::new(0.7).unwrap()
    }

    fn paths(n: usize, m: usize) -> Vec<FbmPath> {
        sample_paths(TimeGrid::new(1.0, n).unwrap(), h(), m, 21).unwrap()
    }

    fn endpoint_spec() -> PdeSpec {
        PdeSpec::driftless("endpoint", h(), 1.0, Arc::new(Cylindrical::endpoint()))
    }

    fn square_spec() -> PdeSpec {
        PdeSpec::driftless("square", h(), 1.0, Arc::new(Cylindrical::power(2)))
    }

    #[test]
    fn pde_residual_examples() {
        let p = paths(32, 2);
        let s = endpoint_spec();
        let u = square_solution(1.0, h());
        let c = 0.7;
        let drift = PdeSpec::new("drift", h(), 1.0, Arc::new(Cylindrical::endpoint()), move |_, _, _| c, 0.0);
        for k in 0..=32 {
            let g = p[0].stopped(k);
            assert_eq!(pde_residual(&Cylindrical::endpoint(), &s, &g).unwrap(), 0.0);
            assert!(pde_residual(&u, &s, &g).unwrap().abs() < 1e-12);
            assert!(pde_residual(&drift_solution(c, 1.0), &drift, &g).unwrap().abs() < 1e-15);
        }
        let bare = crate::path_space::RunningMax;
        assert!(pde_residual(&bare, &s, &p[0].stopped(3)).is_err());
    }

    #[test]
    fn from_pde_examples() {
        let p = paths(64, 20);
        let sol = bsde_from_pde(&Cylindrical::endpoint(), &endpoint_spec(), &p, 1e-9).unwrap();
        assert_eq!(sol.y[3], p[3].values());
        assert!(sol.z.iter().flatten().all(|z| *z == -1.0));
        let r = bsde_residual(&sol, &p, &endpoint_spec()).unwrap();
        assert!(r.rms < 1e-13, "{}", r.rms);

        let sol = bsde_from_pde(&square_solution(1.0, h()), &square_spec(), &p, 1e-9).unwrap();
        assert!((sol.y0() - 1.0).abs() < 1e-12);
        let c = 0.4;
        let drift = PdeSpec::new("drift", h(), 1.0, Arc::new(Cylindrical::endpoint()), move |_, _, _| c, 0.0);
        let sol = bsde_from_pde(&drift_solution(c, 1.0), &drift, &p, 1e-9).unwrap();
        assert!((sol.y0() - c).abs() < 1e-12);
        assert!(bsde_residual(&sol, &p, &drift).unwrap().rms < 1e-12);
    }

    #[test]
    fn wrong_solution_names_offender() {
        let p = paths(16, 4);
        let err = bsde_from_pde(&Cylindrical::power(2), &square_spec(), &p, 1e-9).unwrap_err();
        assert!(matches!(err, Error::PdeResidual { .. }), "{err}");
    }

    #[test]
    fn perturbed_z_is_detected_linearly() {
        let p = paths(64, 50);
        let spec = endpoint_spec();
        let base = bsde_from_pde(&Cylindrical::endpoint(), &spec, &p, 1e-9).unwrap();
        let shifted = |eps: f64| {
            let mut s = base.clone();
            s.z.iter_mut().flatten().for_each(|z| *z += eps);
            bsde_residual(&s, &p, &spec).unwrap().rms
        };
        let (r1, r2) = (shifted(0.1), shifted(0.2));
        assert!(r1 > 0.01);
        assert!((r2 / r1 - 2.0).abs() < 1e-9, "{r1} {r2}");
    }

    #[test]
    fn z_relation_examples() {
        let p = paths(16, 5);
        let e = Cylindrical::endpoint();
        assert_eq!(z_relation_check(&e, &Cylindrical::constant(-1.0), &p).unwrap(), 0.0);
        assert_eq!(z_relation_check(&e, &Cylindrical::constant(1.0), &p).unwrap(), 2.0);
        let u = square_solution(1.0, h());
        let v = Cylindrical::affine(0.0, -2.0);
        assert!(z_relation_check(&u, &v, &p).unwrap() < 1e-15);
    }

    #[test]
    fn picard_linear_terminal_is_exact_in_one_iteration() {
        let p = paths(32, 300);
        let basis: Vec<SharedFunctional> = vec![Arc::new(Cylindrical::constant(1.0)), Arc::new(Cylindrical::endpoint())];
        let sol = picard_solve(&endpoint_spec(), &PicardConfig::new(basis, 1), &p).unwrap();
        for (y, b) in sol.y.iter().zip(&p) {
            for k in 1..=32 {
                assert!((y[k] - b.values()[k]).abs() < 1e-9);
            }
        }
        assert!(sol.z.iter().flatten().all(|z| (z + 1.0).abs() < 1e-9));
        assert!(sol.y0().abs() < 1e-9);
    }

    #[test]
    fn picard_singular_basis_reports_slice() {
        let p = paths(8, 50);
        let basis: Vec<SharedFunctional> = vec![Arc::new(Cylindrical::endpoint()), Arc::new(Cylindrical::affine(0.0, 2.0))];
        assert!(matches!(
            picard_solve(&endpoint_spec(), &PicardConfig::new(basis, 1), &p),
            Err(Error::SingularRegression { .. })
        ));
    }

    #[test]
    fn picard_fit_is_adapted() {
        let p = paths(16, 200);
        let basis: Vec<SharedFunctional> = vec![
            Arc::new(Cylindrical::constant(1.0)),
            Arc::new(Cylindrical::endpoint()),
            Arc::new(Cylindrical::power(2)),
        ];
        let (_, fit) = picard_fit(&square_spec(), &PicardConfig::new(basis, 2), &p).unwrap();
        let (y, z, _) = fit.evaluate(&p[0]).unwrap();
        let mut values = p[0].values().to_vec();
        for v in &mut values[9..] {
            *v += 3.0;
        }
        let bumped = FbmPath::new(crate::fbm::DiscretePath::new(p[0].grid(), values).unwrap(), h(), 0).unwrap();
        let (y2, z2, _) = fit.evaluate(&bumped).unwrap();
        assert_eq!(y[..9], y2[..9]);
        assert_eq!(z[..9], z2[..9]);
    }

    #[test]
    fn beta_norm_is_monotone_in_beta() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let s = [0.3, 0.1, 0.0, 2.0, 5.0];
        let a = beta_norm(&s, grid, 0.0);
        let b = beta_norm(&s, grid, 1.0);
        assert!(b >= a);
        assert!((a - (2.4f64 * 0.25).sqrt()).abs() < 1e-15);
    }
}
