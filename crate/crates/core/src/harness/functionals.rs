//! Named functionals selectable from the command line.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path_space::{Cylindrical, ProductIntegral, RunningIntegral, RunningMax, SharedFunctional};

pub const FUNCTIONALS: [(&str, &str); 11] = [
    ("endpoint", "γ(t)"),
    ("square", "γ(t)²"),
    ("half_square", "γ(t)²/2"),
    ("cube", "γ(t)³"),
    ("product_integral", "γ(t)·∫₀ᵗγ ds"),
    ("running_integral", "∫₀ᵗγ ds"),
    ("time_square", "t·γ(t)²"),
    ("time_endpoint", "t·γ(t)"),
    ("constant", "c (param c, default 1)"),
    ("affine", "a + b·γ(t) (params a, b)"),
    ("running_max", "sup_{s≤t} γ(s), no vertical derivative"),
];

pub fn functional(id: &str, params: &BTreeMap<String, f64>) -> Result<SharedFunctional> {
    let p = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    Ok(match id {
        "endpoint" => Arc::new(Cylindrical::endpoint()),
        "square" => Arc::new(Cylindrical::power(2)),
        "half_square" => Arc::new(
            Cylindrical::new("half_square", |_, x| 0.5 * x * x).with_derivatives(|_, _| 0.0, |_, x| x, |_, _| 1.0),
        ),
        "cube" => Arc::new(Cylindrical::power(3)),
        "product_integral" => Arc::new(ProductIntegral),
        "running_integral" => Arc::new(RunningIntegral),
        "time_square" => Arc::new(Cylindrical::time_weighted_square()),
        "time_endpoint" => Arc::new(Cylindrical::time_times_endpoint()),
        "constant" => Arc::new(Cylindrical::constant(p("c", 1.0))),
        "affine" => Arc::new(Cylindrical::affine(p("a", 0.0), p("b", 1.0))),
        "running_max" => Arc::new(RunningMax),
        other => return Err(Error::UnknownFunctional(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_id_resolves() {
        let params = BTreeMap::new();
        for (id, _) in FUNCTIONALS {
            assert!(functional(id, &params).is_ok(), "{id}");
        }
        assert!(matches!(functional("nope", &params), Err(Error::UnknownFunctional(_))));
    }
}
