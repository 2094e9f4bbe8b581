use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use stabtune::solvers::{default_grid, ActiveSet, PenaltySpec, Solver};
use stabtune::stability::select_index;
use stabtune::{kappa, Dataset};

fn active_set(p: usize) -> impl Strategy<Value = ActiveSet> {
    proptest::collection::vec(any::<bool>(), p).prop_map(|bits| {
        let p = bits.len();
        ActiveSet::new((0..p).filter(|&j| bits[j]).collect(), p).unwrap()
    })
}

fn pair_of_sets() -> impl Strategy<Value = (ActiveSet, ActiveSet)> {
    (2usize..12).prop_flat_map(|p| (active_set(p), active_set(p)))
}

fn raw_dataset() -> impl Strategy<Value = Dataset> {
    (6usize..30, 1usize..5).prop_flat_map(|(n, p)| {
        (
            proptest::collection::vec(-50.0f64..50.0, n * p),
            proptest::collection::vec(-10.0f64..10.0, n),
            proptest::collection::vec(0.1f64..20.0, p),
        )
            .prop_filter_map("degenerate column", move |(xs, ys, scales)| {
                let x = DMatrix::from_fn(n, p, |i, j| xs[j * n + i] * scales[j]);
                Dataset::from_arrays(x, DVector::from_vec(ys)).ok()
            })
    })
}

/// Centered design with orthogonal columns and `xᵀx = n`.
fn orthogonal_dataset(n: usize, p: usize, seed_vals: &[f64], y: &[f64]) -> Option<Dataset> {
    let mut x = DMatrix::from_fn(n, p, |i, j| seed_vals[j * n + i]);
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let qr = x.qr();
    let r = qr.r();
    if (0..p).any(|j| r[(j, j)].abs() < 1e-6) {
        return None;
    }
    let q = qr.q() * (n as f64).sqrt();
    Dataset::from_arrays(q, DVector::from_column_slice(y)).ok()?.center_and_scale(true).ok()
}

proptest! {
    #[test]
    fn kappa_is_symmetric_and_bounded((a, b) in pair_of_sets()) {
        let k1 = kappa(&a, &b).unwrap();
        let k2 = kappa(&b, &a).unwrap();
        prop_assert_eq!(k1, k2);
        prop_assert!((-1.0..=1.0).contains(&k1), "kappa {}", k1);
    }

    #[test]
    fn kappa_of_a_set_with_itself((a, _) in pair_of_sets()) {
        let k = kappa(&a, &a).unwrap();
        if a.is_empty() || a.is_full() {
            prop_assert_eq!(k, -1.0);
        } else {
            prop_assert!((k - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardizing_twice_changes_nothing(raw in raw_dataset()) {
        let once = raw.center_and_scale(true).unwrap();
        let twice = once.center_and_scale(true).unwrap();
        prop_assert!(once.check_invariants().is_ok());
        prop_assert!((once.x() - twice.x()).amax() < 1e-10);
        prop_assert!((once.y() - twice.y()).amax() < 1e-10);
        prop_assert!((raw.x() - twice.raw_x()).amax() < 1e-9 * raw.x().amax().max(1.0));
        prop_assert!((raw.y() - twice.raw_y()).amax() < 1e-9 * raw.y().amax().max(1.0));
    }

    #[test]
    fn original_scale_predictions_agree(
        raw in raw_dataset(),
        coef in proptest::collection::vec(-3.0f64..3.0, 5),
    ) {
        let ds = raw.center_and_scale(true).unwrap();
        let beta = DVector::from_iterator(ds.p(), coef.into_iter().take(ds.p()));
        let direct = (ds.x() * &beta).add_scalar(ds.y_mean());
        let mapped = ds.predict_original(&beta, raw.x());
        let (b0, b) = ds.coefficients_to_original(&beta);
        let by_hand = (raw.x() * b).add_scalar(b0);
        let scale = direct.amax().max(1.0);
        prop_assert!((&direct - &mapped).amax() < 1e-9 * scale);
        prop_assert!((&direct - &by_hand).amax() < 1e-9 * scale);
    }

    #[test]
    fn lasso_active_sets_nest_for_orthogonal_designs(
        (n, p, vals, y) in (8usize..30, 1usize..6).prop_flat_map(|(n, p)| (
            Just(n),
            Just(p),
            proptest::collection::vec(-1.0f64..1.0, n * p),
            proptest::collection::vec(-3.0f64..3.0, n),
        ))
    ) {
        prop_assume!(p < n);
        let Some(ds) = orthogonal_dataset(n, p, &vals, &y) else { return Ok(()) };
        let solver = Solver::new(&ds).unwrap();
        let path = solver.fit_path(&PenaltySpec::Lasso, &default_grid()).unwrap();
        for w in path.windows(2) {
            // w[0] has the larger lambda
            prop_assert!(w[0].active.is_subset_of(&w[1].active),
                "{:?} at {} not within {:?} at {}", w[0].active, w[0].lambda, w[1].active, w[1].lambda);
        }
    }

    #[test]
    fn objective_never_increases_across_sweeps(
        raw in raw_dataset(),
        frac in 0.01f64..0.9,
        which in 0usize..3,
    ) {
        let ds = raw.center_and_scale(true).unwrap();
        let solver = Solver::new(&ds).unwrap();
        let penalty = match which {
            0 => PenaltySpec::Lasso,
            1 => PenaltySpec::adaptive((0..ds.p()).map(|j| 0.5 + j as f64).collect()).unwrap(),
            _ => PenaltySpec::scad(3.7).unwrap(),
        };
        let lambda = solver.lambda_max().max(1e-3) * frac;
        let (fit, trace) = solver.fit_with_trace(&penalty, lambda, None).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        let direct = solver.objective(&penalty, lambda, &fit.beta);
        prop_assert!((fit.objective - direct).abs() <= 1e-10 * direct.abs().max(1e-300));
        prop_assert_eq!(&fit.active, &ActiveSet::from_coefficients(fit.beta.as_slice()));
    }

    #[test]
    fn kappa_rule_ignores_positive_rescaling(
        s in proptest::collection::vec(-1.0f64..1.0, 2..40),
        c in 0.01f64..100.0,
        alpha in 0.0f64..0.99,
    ) {
        prop_assume!(s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 0.0);
        let grid: Vec<f64> = (0..s.len()).map(|k| 10.0 * 0.8f64.powi(k as i32)).collect();
        let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
        let a = select_index(&grid, &s, alpha).unwrap();
        let b = select_index(&grid, &scaled, alpha).unwrap();
        // rescaling can move a ratio across the threshold only through rounding
        if a != b {
            let top = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let k = a.max(b);
            prop_assert!((s[k] / top - (1.0 - alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn larger_alpha_never_picks_a_larger_lambda(
        s in proptest::collection::vec(-1.0f64..1.0, 2..40),
        a1 in 0.0f64..0.99,
        a2 in 0.0f64..0.99,
    ) {
        prop_assume!(s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 0.0);
        let grid: Vec<f64> = (0..s.len()).map(|k| 10.0 * 0.8f64.powi(k as i32)).collect();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let k_lo = select_index(&grid, &s, lo).unwrap();
        let k_hi = select_index(&grid, &s, hi).unwrap();
        prop_assert!(grid[k_hi] <= grid[k_lo]);
    }
}
