//! Stopped càdlàg paths, the `d_∞` metric, and functionals on path space.

mod builtins;
mod derivatives;
mod functional;

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::fbm::TimeGrid;

pub use builtins::{
    Cylindrical, PathFn, ProductIntegral, RunningIntegral, RunningMax, TimeFn, WeightedIntegral,
};
pub use derivatives::{
    horizontal_derivative, horizontal_derivative_along, vertical_derivative, vertical_derivative_along, vertical_second,
    vertical_second_along, DerivativeEstimate, Scheme,
};
pub use functional::{
    Functional, LinearCombination, Scaled, SharedFunctional, Smoothness, StepWeighted,
    VerticalDerivative,
};

/// A path `γ_t` stopped at the grid index `cursor`.
///
/// Values after the cursor may be present (the rest of a sampled path) but are
/// never part of `γ_t`; functionals must not read them.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedPath<'a> {
    grid: TimeGrid,
    values: Cow<'a, [f64]>,
    cursor: usize,
}

impl<'a> StoppedPath<'a> {
    pub fn new(grid: TimeGrid, values: Vec<f64>, cursor: usize) -> Result<StoppedPath<'static>> {
        check(grid, values.len(), cursor)?;
        Ok(StoppedPath {
            grid,
            values: Cow::Owned(values),
            cursor,
        })
    }

    pub(crate) fn borrowed(grid: TimeGrid, values: &'a [f64], cursor: usize) -> Self {
        debug_assert!(check(grid, values.len(), cursor).is_ok());
        Self {
            grid,
            values: Cow::Borrowed(values),
            cursor,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Current time `t`.
    pub fn time(&self) -> f64 {
        self.grid.time(self.cursor)
    }

    /// `γ(t)`.
    pub fn current(&self) -> f64 {
        self.values[self.cursor]
    }

    /// Grid values of `γ_t`, i.e. indices `0..=cursor`.
    pub fn prefix(&self) -> &[f64] {
        &self.values[..=self.cursor]
    }

    /// Step-interpolated value `γ_t(r)` for `r ∈ [0, t]`.
    pub fn value_at(&self, r: f64) -> f64 {
        self.values[self.grid.floor_index(r).min(self.cursor)]
    }

    /// `‖γ_t‖ = sup_{r ≤ t} |γ(r)|`.
    pub fn sup_norm(&self) -> f64 {
        self.prefix().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_owned(self) -> StoppedPath<'static> {
        StoppedPath {
            grid: self.grid,
            values: Cow::Owned(self.values.into_owned()),
            cursor: self.cursor,
        }
    }

    /// `γ_t^h`: the current value raised by `h`, earlier values untouched.
    pub fn vertical_bump(&self, h: f64) -> StoppedPath<'static> {
        let mut values = self.prefix().to_vec();
        values[self.cursor] += h;
        StoppedPath {
            grid: self.grid,
            values: Cow::Owned(values),
            cursor: self.cursor,
        }
    }

    /// `γ_{t,s}` with `s = t + steps·Δt`: the path frozen at `γ(t)` on `(t, s]`.
    pub fn horizontal_extend(&self, steps: usize) -> Result<StoppedPath<'static>> {
        let target = self.cursor + steps;
        if target > self.grid.steps() {
            return Err(Error::Domain(format!(
                "cannot extend to index {target} beyond horizon index {}",
                self.grid.steps()
            )));
        }
        let mut values = self.prefix().to_vec();
        values.resize(target + 1, self.current());
        Ok(StoppedPath {
            grid: self.grid,
            values: Cow::Owned(values),
            cursor: target,
        })
    }

    /// Flat extension to the grid time `s ≥ t`.
    pub fn extend_to(&self, s: f64) -> Result<StoppedPath<'static>> {
        let target = self
            .grid
            .index_of(s)
            .ok_or_else(|| Error::Domain(format!("time {s} is not on the grid")))?;
        if target < self.cursor {
            return Err(Error::Domain(format!(
                "extension time {s} precedes current time {}",
                self.time()
            )));
        }
        self.horizontal_extend(target - self.cursor)
    }

    /// The same step path seen on the grid refined `factor` times.
    pub fn refine_view(&self, factor: usize) -> StoppedPath<'static> {
        let grid = TimeGrid::new(self.grid.horizon(), self.grid.steps() * factor)
            .expect("refinement of a valid grid");
        let mut values = Vec::with_capacity(self.cursor * factor + 1);
        for (i, v) in self.prefix().iter().enumerate() {
            let copies = if i == self.cursor { 1 } else { factor };
            values.extend(std::iter::repeat_n(*v, copies));
        }
        StoppedPath {
            grid,
            values: Cow::Owned(values),
            cursor: self.cursor * factor,
        }
    }
}

fn check(grid: TimeGrid, len: usize, cursor: usize) -> Result<()> {
    if cursor > grid.steps() {
        return Err(Error::Domain(format!(
            "cursor {cursor} beyond horizon index {}",
            grid.steps()
        )));
    }
    if len <= cursor || len > grid.steps() + 1 {
        return Err(Error::GridMismatch(format!(
            "{len} values cannot hold cursor {cursor} on a {}-step grid",
            grid.steps()
        )));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `d_∞(γ_t, γ̄_s) = ‖γ_{t,s} − γ̄_s‖ + |t − s|` (the earlier path is flat-extended).
pub fn d_infty(a: &StoppedPath<'_>, b: &StoppedPath<'_>) -> Result<f64> {
    let (ga, gb) = (a.grid(), b.grid());
    if (ga.horizon() - gb.horizon()).abs() > 1e-12 * ga.horizon() {
        return Err(Error::GridMismatch(format!(
            "horizons {} and {} have no common refinement",
            ga.horizon(),
            gb.horizon()
        )));
    }
    let common = ga.steps() / gcd(ga.steps(), gb.steps()) * gb.steps();
    let (fa, fb) = (common / ga.steps(), common / gb.steps());
    let (ta, tb) = (a.time(), b.time());
    let end = (a.cursor() * fa).max(b.cursor() * fb);
    let sample = |p: &StoppedPath<'_>, f: usize, j: usize| p.values[(j / f).min(p.cursor())];
    let mut sup: f64 = 0.0;
    for j in 0..=end {
        sup = sup.max((sample(a, fa, j) - sample(b, fb, j)).abs());
    }
    Ok(sup + (ta - tb).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 4).unwrap()
    }

    #[test]
    fn vertical_bump_examples() {
        let p = StoppedPath::new(grid(), vec![2.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(p.vertical_bump(0.0), p);
        let q = p.vertical_bump(1.0);
        assert_eq!(q.prefix(), &[2.0, 2.0, 3.0]);
        assert_eq!(q.vertical_bump(-1.0), p);
    }

    #[test]
    fn horizontal_extend_examples() {
        let p = StoppedPath::new(grid(), vec![0.0, 1.0, 5.0], 2).unwrap();
        assert_eq!(p.horizontal_extend(0).unwrap(), p);
        let e = p.horizontal_extend(2).unwrap();
        assert_eq!(e.prefix(), &[0.0, 1.0, 5.0, 5.0, 5.0]);
        assert_eq!(e.time(), 1.0);
        assert!(p.horizontal_extend(3).is_err());
        assert!(p.extend_to(0.25).is_err());
        assert_eq!(p.extend_to(0.75).unwrap().cursor(), 3);
    }

    #[test]
    fn d_infty_examples() {
        let p = StoppedPath::new(grid(), vec![0.0, -1.0, 0.5], 2).unwrap();
        assert_eq!(d_infty(&p, &p).unwrap(), 0.0);
        let e = p.horizontal_extend(2).unwrap();
        assert!((d_infty(&e, &p).unwrap() - 0.5).abs() < 1e-15);

        let c1 = StoppedPath::new(grid(), vec![1.5; 3], 2).unwrap();
        let c2 = StoppedPath::new(grid(), vec![-0.25; 3], 2).unwrap();
        assert_eq!(d_infty(&c1, &c2).unwrap(), 1.75);
    }

    #[test]
    fn d_infty_across_grids() {
        let coarse = StoppedPath::new(grid(), vec![0.0, 1.0, 2.0], 2).unwrap();
        let fine = coarse.refine_view(2);
        assert_eq!(d_infty(&coarse, &fine).unwrap(), 0.0);
        let other = StoppedPath::new(TimeGrid::new(2.0, 4).unwrap(), vec![0.0; 3], 2).unwrap();
        assert!(d_infty(&coarse, &other).is_err());
    }

    #[test]
    fn d_infty_with_later_path() {
        // γ = (0, 1) stopped at t = 0.25, γ̄ = (0, 1, 3) stopped at s = 0.5:
        // flat extension of γ gives (0, 1, 1), sup gap 2, time gap 0.25.
        let a = StoppedPath::new(grid(), vec![0.0, 1.0], 1).unwrap();
        let b = StoppedPath::new(grid(), vec![0.0, 1.0, 3.0], 2).unwrap();
        assert_eq!(d_infty(&a, &b).unwrap(), 2.25);
        assert_eq!(d_infty(&b, &a).unwrap(), 2.25);
    }

    #[test]
    fn step_lookup() {
        let p = StoppedPath::new(grid(), vec![0.0, 1.0, 2.0, 9.0], 2).unwrap();
        assert_eq!(p.value_at(0.3), 1.0);
        assert_eq!(p.value_at(0.5), 2.0);
        assert_eq!(p.value_at(0.9), 2.0);
        assert_eq!(p.sup_norm(), 2.0);
    }
}
