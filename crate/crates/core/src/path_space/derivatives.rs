//! Horizontal and vertical derivatives: closed form when the functional
//! supplies one, finite differences otherwise.

use serde::{Deserialize, Serialize};

use super::{Functional, Smoothness, StoppedPath};
use crate::error::{Error, Result};
use crate::fbm::DiscretePath;

/// Relative bump for vertical finite differences.
pub const VERTICAL_BUMP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ClosedForm,
    Forward,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    /// Step used by the difference scheme; zero for closed forms.
    pub bump: f64,
    pub scheme: Scheme,
}

impl DerivativeEstimate {
    fn closed(value: f64) -> Self {
        Self {
            value,
            bump: 0.0,
            scheme: Scheme::ClosedForm,
        }
    }
}

fn finite(value: f64, what: &str, path: &StoppedPath<'_>) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("{what} at time {}", path.time())))
    }
}

fn vertical_step(path: &StoppedPath<'_>) -> f64 {
    VERTICAL_BUMP * path.sup_norm().max(1.0)
}

fn require_vertical(f: &dyn Functional) -> Result<()> {
    if f.smoothness() == Smoothness::C00 {
        Err(Error::DerivativeUnavailable(format!(
            "{} is only continuous; no vertical derivative",
            f.name()
        )))
    } else {
        Ok(())
    }
}

/// `Δ_t F(γ_t)`: closed form, or a forward difference over one grid step
/// Richardson-combined with the same difference on the doubled grid.
pub fn horizontal_derivative(f: &dyn Functional, path: &StoppedPath<'_>) -> Result<DerivativeEstimate> {
    if let Some(v) = f.dt(path) {
        return Ok(DerivativeEstimate::closed(finite(v, "horizontal derivative", path)?));
    }
    if path.cursor() == path.grid().steps() {
        return Err(Error::CursorAtHorizon(format!(
            "horizontal derivative of {} at t = {}",
            f.name(),
            path.time()
        )));
    }
    let h = path.grid().dt();
    let base = f.eval(path);
    let coarse = (f.eval(&path.horizontal_extend(1)?) - base) / h;
    let fine_path = path.refine_view(2);
    let fine = (f.eval(&fine_path.horizontal_extend(1)?) - f.eval(&fine_path)) / (0.5 * h);
    let value = finite(2.0 * fine - coarse, "horizontal difference", path)?;
    Ok(DerivativeEstimate {
        value,
        bump: h,
        scheme: Scheme::Forward,
    })
}

/// `Δ_x F(γ_t)` by closed form or central difference.
pub fn vertical_derivative(f: &dyn Functional, path: &StoppedPath<'_>) -> Result<DerivativeEstimate> {
    if let Some(v) = f.dx(path) {
        return Ok(DerivativeEstimate::closed(finite(v, "vertical derivative", path)?));
    }
    require_vertical(f)?;
    let h = vertical_step(path);
    let up = f.eval(&path.vertical_bump(h));
    let down = f.eval(&path.vertical_bump(-h));
    Ok(DerivativeEstimate {
        value: finite((up - down) / (2.0 * h), "vertical difference", path)?,
        bump: h,
        scheme: Scheme::Central,
    })
}

/// `Δ_xx F(γ_t)` by closed form or second central difference.
pub fn vertical_second(f: &dyn Functional, path: &StoppedPath<'_>) -> Result<DerivativeEstimate> {
    if let Some(v) = f.dxx(path) {
        return Ok(DerivativeEstimate::closed(finite(v, "second vertical derivative", path)?));
    }
    require_vertical(f)?;
    let h = vertical_step(path);
    let up = f.eval(&path.vertical_bump(h));
    let mid = f.eval(path);
    let down = f.eval(&path.vertical_bump(-h));
    Ok(DerivativeEstimate {
        value: finite((up - 2.0 * mid + down) / (h * h), "second vertical difference", path)?,
        bump: h,
        scheme: Scheme::Central,
    })
}

fn along(
    f: &dyn Functional,
    path: &DiscretePath,
    closed: Option<Vec<f64>>,
    pointwise: fn(&dyn Functional, &StoppedPath<'_>) -> Result<DerivativeEstimate>,
) -> Result<Vec<f64>> {
    if let Some(v) = closed {
        if let Some(k) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("derivative of {} at index {k}", f.name())));
        }
        return Ok(v);
    }
    (0..=path.steps())
        .map(|k| pointwise(f, &path.stopped(k)).map(|d| d.value))
        .collect()
}

/// `Δ_x F` at every prefix `0..=n` of a sampled path.
pub fn vertical_derivative_along(f: &dyn Functional, path: &DiscretePath) -> Result<Vec<f64>> {
    along(f, path, f.dx_prefixes(path), vertical_derivative)
}

/// `Δ_xx F` at every prefix `0..=n` of a sampled path.
pub fn vertical_second_along(f: &dyn Functional, path: &DiscretePath) -> Result<Vec<f64>> {
    along(f, path, f.dxx_prefixes(path), vertical_second)
}

/// `Δ_t F` at prefixes `0..n` (the horizon itself is excluded).
pub fn horizontal_derivative_along(f: &dyn Functional, path: &DiscretePath) -> Result<Vec<f64>> {
    let n = path.steps();
    let mut v = along(f, path, f.dt_prefixes(path), |f, p| {
        if p.cursor() == p.grid().steps() {
            Ok(DerivativeEstimate::closed(f64::NAN))
        } else {
            horizontal_derivative(f, p)
        }
    })?;
    v.truncate(n);
    Ok(v)
}
