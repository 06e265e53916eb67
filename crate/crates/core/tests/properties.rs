use std::sync::Arc;

use proptest::prelude::*;

use fracito::bsde::{beta_norm, bsde_from_pde, square_solution, PdeSpec};
use fracito::fbm::{covariance, generate_circulant, quadratic_variation, FbmPath, HurstParameter, TimeGrid};
use fracito::formula_lab::{verify, FormulaCase, FormulaId};
use fracito::integrators::{ito_type_sum, wis_sum};
use fracito::malliavin::{indicator_inner_product, step_inner_product, StepFunction};
use fracito::path_space::{
    Cylindrical, ProductIntegral, RunningIntegral, RunningMax, SharedFunctional, StoppedPath,
    WeightedIntegral,
};
use fracito::rng::PathStream;

fn hurst() -> impl Strategy<Value = f64> {
    0.5f64..0.95
}

fn fbm(n: usize, h: f64, seed: u64) -> FbmPath {
    let grid = TimeGrid::new(1.0, n).unwrap();
    generate_circulant(grid, HurstParameter::new(h).unwrap(), &PathStream::new(seed, 0)).unwrap()
}

fn builtins() -> Vec<SharedFunctional> {
    let grid = TimeGrid::new(1.0, 4).unwrap();
    vec![
        Arc::new(Cylindrical::endpoint()),
        Arc::new(Cylindrical::power(2)),
        Arc::new(Cylindrical::power(3)),
        Arc::new(Cylindrical::affine(0.3, -1.7)),
        Arc::new(Cylindrical::time_weighted_square()),
        Arc::new(Cylindrical::time_times_endpoint()),
        Arc::new(RunningIntegral),
        Arc::new(ProductIntegral),
        Arc::new(RunningMax),
        Arc::new(WeightedIntegral::new(StepFunction::new(grid, vec![1.0, -0.5, 2.0, 0.25]).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_symmetric_with_diagonal(s in 0.0f64..5.0, t in 0.0f64..5.0, h in hurst()) {
        let h = HurstParameter::new(h).unwrap();
        prop_assert_eq!(covariance(s, t, h).unwrap(), covariance(t, s, h).unwrap());
        let d = covariance(t, t, h).unwrap();
        prop_assert!((d - t.powf(h.two_h())).abs() <= 1e-15 * d.max(1.0));
    }

    #[test]
    fn indicators_reproduce_covariance(s in 1e-6f64..3.0, t in 1e-6f64..3.0, h in hurst()) {
        let h = HurstParameter::new(h).unwrap();
        let r = covariance(s, t, h).unwrap();
        let ip = indicator_inner_product(0.0, s, 0.0, t, h).unwrap();
        prop_assert!(((ip - r) / r).abs() <= 1e-12);
    }

    #[test]
    fn step_inner_product_is_symmetric_bilinear_psd(
        x in prop::collection::vec(-3.0f64..3.0, 6),
        y in prop::collection::vec(-3.0f64..3.0, 3),
        z in prop::collection::vec(-3.0f64..3.0, 2),
        a in -2.0f64..2.0,
        h in hurst(),
    ) {
        let h = HurstParameter::new(h).unwrap();
        let xi = StepFunction::new(TimeGrid::new(1.5, 6).unwrap(), x.clone()).unwrap();
        let eta = StepFunction::new(TimeGrid::new(1.5, 3).unwrap(), y).unwrap();
        let zeta = StepFunction::new(TimeGrid::new(1.5, 2).unwrap(), z).unwrap();
        let xy = step_inner_product(&xi, &eta, h).unwrap();
        prop_assert!((xy - step_inner_product(&eta, &xi, h).unwrap()).abs() <= 1e-12);
        prop_assert!(step_inner_product(&xi, &xi, h).unwrap() >= -1e-12);

        // bilinearity: ⟨ξ + aζ, η⟩ = ⟨ξ, η⟩ + a⟨ζ, η⟩, with ζ seen on ξ's grid
        let fine = TimeGrid::new(1.5, 6).unwrap();
        let combined: Vec<f64> = (0..6)
            .map(|i| x[i] + a * zeta.value_at(fine.time(i)))
            .collect();
        let sum = StepFunction::new(fine, combined).unwrap();
        let lhs = step_inner_product(&sum, &eta, h).unwrap();
        let rhs = xy + a * step_inner_product(&zeta, &eta, h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn functionals_never_read_past_the_cursor(seed in any::<u64>(), h in hurst(), cursor in 0usize..32, shift in -5.0f64..5.0) {
        let b = fbm(32, h, seed);
        let mut later = b.values().to_vec();
        for v in &mut later[cursor + 1..] {
            *v += shift;
        }
        let grid = b.grid();
        for f in builtins() {
            let original = f.eval(&b.stopped(cursor));
            let modified = f.eval(&StoppedPath::new(grid, later.clone(), cursor).unwrap());
            prop_assert_eq!(original, modified, "{}", f.name());
            let prefixes = f.eval_prefixes(&b);
            prop_assert!((prefixes[cursor] - original).abs() <= 1e-12 * (1.0 + original.abs()), "{}", f.name());
        }
    }

    #[test]
    fn flat_extensions_compose(seed in any::<u64>(), h in hurst(), cursor in 0usize..24, a in 0usize..4, b in 0usize..4) {
        let path = fbm(32, h, seed);
        let stopped = path.stopped(cursor);
        let stepwise = stopped.horizontal_extend(a).unwrap().horizontal_extend(b).unwrap();
        let direct = stopped.horizontal_extend(a + b).unwrap();
        for f in builtins() {
            prop_assert_eq!(f.eval(&stepwise), f.eval(&direct), "{}", f.name());
        }
    }

    #[test]
    fn ito_sum_of_endpoint_is_algebraic(seed in any::<u64>(), h in hurst(), k in 2u32..10) {
        let b = fbm(1 << k, h, seed);
        let s = ito_type_sum(&Cylindrical::endpoint(), &b, &b).unwrap().value;
        let exact = 0.5 * (b.terminal().powi(2) - quadratic_variation(&b));
        prop_assert!((s - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn wis_sum_of_one_is_terminal_value(seed in any::<u64>(), h in 0.55f64..0.95) {
        let b = fbm(64, h, seed);
        let s = wis_sum(&Cylindrical::constant(1.0), &b).unwrap().value;
        prop_assert!((s - b.terminal()).abs() <= 1e-12);
    }

    #[test]
    fn beta_norm_nondecreasing_in_beta(
        squares in prop::collection::vec(0.0f64..10.0, 9),
        b1 in 0.0f64..5.0,
        db in 0.0f64..5.0,
    ) {
        let grid = TimeGrid::new(2.0, 8).unwrap();
        prop_assert!(beta_norm(&squares, grid, b1) <= beta_norm(&squares, grid, b1 + db));
    }

    #[test]
    fn pde_solutions_are_adapted(seed in any::<u64>(), cursor in 0usize..16, shift in -3.0f64..3.0) {
        let h = HurstParameter::new(0.7).unwrap();
        let b = fbm(16, 0.7, seed);
        let mut later = b.values().to_vec();
        for v in &mut later[cursor + 1..] {
            *v += shift;
        }
        let bumped = FbmPath::new(fracito::fbm::DiscretePath::new(b.grid(), later).unwrap(), h, 0).unwrap();
        let spec = PdeSpec::driftless("square", h, 1.0, Arc::new(Cylindrical::power(2)));
        let u = square_solution(1.0, h);
        // the terminal check is path-wise, so solve on both paths separately
        let a = bsde_from_pde(&u, &spec, std::slice::from_ref(&b), 1e-9).unwrap();
        let c = bsde_from_pde(&u, &spec, &[bumped], 1e-9).unwrap();
        prop_assert_eq!(&a.y[0][..=cursor], &c.y[0][..=cursor]);
        prop_assert_eq!(&a.z[0][..=cursor], &c.z[0][..=cursor]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Closed forms against central differences with bump `δ`: `|closed − FD| ≤ C·δ`.
    /// `C = 10` covers `|F'''|/6·δ` for the polynomial builtins on paths with `|γ| < 5`
    /// plus round-off `ε|F|/δ²` in the second difference.
    #[test]
    fn closed_forms_match_finite_differences(seed in any::<u64>(), h in hurst()) {
        const C: f64 = 10.0;
        let delta = 1e-4;
        let b = fbm(32, h, seed);
        for f in builtins() {
            for k in 0..=32 {
                let p = b.stopped(k);
                let up = f.eval(&p.vertical_bump(delta));
                let mid = f.eval(&p);
                let down = f.eval(&p.vertical_bump(-delta));
                if let Some(dx) = f.dx(&p) {
                    let fd = (up - down) / (2.0 * delta);
                    prop_assert!((dx - fd).abs() <= C * delta, "{} Δ_x at {k}: {dx} vs {fd}", f.name());
                }
                if let Some(dxx) = f.dxx(&p) {
                    let fd = (up - 2.0 * mid + down) / (delta * delta);
                    prop_assert!((dxx - fd).abs() <= C * delta, "{} Δ_xx at {k}: {dxx} vs {fd}", f.name());
                }
            }
        }
    }

    #[test]
    fn affine_functionals_have_zero_residual(a in -3.0f64..3.0, slope in -3.0f64..3.0, seed in 0u64..1000, h in 0.55f64..0.9) {
        let f: SharedFunctional = Arc::new(Cylindrical::affine(a, slope));
        for formula in [FormulaId::Theorem20, FormulaId::BmStratonovich, FormulaId::Theorem32, FormulaId::Theorem50] {
            let case = FormulaCase {
                formula,
                functional: f.clone(),
                process: None,
                hurst: if formula.brownian() { HurstParameter::brownian() } else { HurstParameter::new(h).unwrap() },
                horizon: 1.0,
                ladder: vec![8, 16, 32],
                paths: 8,
                seed,
            };
            let report = verify(&case).unwrap();
            for level in &report.levels {
                prop_assert!(level.rms <= 1e-12 * (1.0 + slope.abs()), "{formula} n = {}: {}", level.n, level.rms);
            }
        }
    }
}
