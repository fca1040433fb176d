mod support;

use activefollow::predict::{
    fold_error, grid_search, polyfit3, polyval3, predict_trajectory, svr_dual_objective, svr_duality_gap, svr_fit_with,
    svr_predict, PredictConfig, SolverOptions, SvrGrid, SvrParams, TrackHistory,
};
use proptest::prelude::*;
use support::reference_svr_dual;

/// Sorted distinct inputs in [−1, 0] with targets and weights.
fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (3usize..14).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(0.1f64..3.0, n),
        )
            .prop_map(move |(ys, ws)| {
                let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 / (n - 1) as f64).collect();
                (xs, ys, ws)
            })
    })
}

fn params() -> impl Strategy<Value = SvrParams> {
    (prop::sample::select(vec![1.0, 10.0, 100.0]), 0.0f64..0.2, prop::sample::select(vec![0.5, 1.0, 4.0]))
        .prop_map(|(c, e, g)| SvrParams::new(c, e, g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svr_solution_is_feasible_and_optimal((xs, ys, ws) in problem(), p in params()) {
        let sol = svr_fit_with(&xs, &ys, &ws, p, SolverOptions::default()).unwrap();
        let beta = sol.coefficients();
        prop_assert!(beta.iter().sum::<f64>().abs() < 1e-9);
        for i in 0..xs.len() {
            let cap = ws[i] * p.c;
            prop_assert!(sol.alpha[i] >= -1e-12 && sol.alpha[i] <= cap + 1e-9);
            prop_assert!(sol.alpha_star[i] >= -1e-12 && sol.alpha_star[i] <= cap + 1e-9);
            prop_assert!(sol.alpha[i].min(sol.alpha_star[i]) < 1e-9);
        }
        let primal_gap = svr_duality_gap(&xs, &ys, &ws, &sol);
        let dual = svr_dual_objective(&xs, &ys, &p, &sol.alpha, &sol.alpha_star);
        prop_assert!(primal_gap.abs() < 1e-4 * (1.0 + dual.abs()), "gap {primal_gap}");

        let k: Vec<Vec<f64>> = xs.iter().map(|&a| xs.iter().map(|&b| p.kernel(a, b)).collect()).collect();
        let upper: Vec<f64> = ws.iter().map(|w| w * p.c).collect();
        let (_, reference) = reference_svr_dual(&k, &ys, p.epsilon, &upper, 20_000);
        prop_assert!(dual <= reference + 1e-6 * (1.0 + reference.abs()), "smo {dual} vs reference {reference}");
    }

    #[test]
    fn residuals_beyond_the_tube_hit_the_weighted_bound((xs, ys, ws) in problem(), p in params()) {
        let sol = svr_fit_with(&xs, &ys, &ws, p, SolverOptions::default()).unwrap();
        for i in 0..xs.len() {
            let r = ys[i] - svr_predict(&sol.model, xs[i]);
            let cap = ws[i] * p.c;
            if r > p.epsilon + 1e-6 {
                prop_assert!((sol.alpha[i] - cap).abs() < 1e-6 * (1.0 + cap));
            }
            if r < -p.epsilon - 1e-6 {
                prop_assert!((sol.alpha_star[i] - cap).abs() < 1e-6 * (1.0 + cap));
            }
            if r.abs() < p.epsilon - 1e-6 {
                prop_assert!(sol.alpha[i] < 1e-9 && sol.alpha_star[i] < 1e-9);
            }
        }
    }

    #[test]
    fn shifting_targets_shifts_the_fit((xs, ys, ws) in problem(), p in params(), shift in -5.0f64..5.0) {
        let a = svr_fit_with(&xs, &ys, &ws, p, SolverOptions::default()).unwrap();
        let moved: Vec<f64> = ys.iter().map(|y| y + shift).collect();
        let b = svr_fit_with(&xs, &moved, &ws, p, SolverOptions::default()).unwrap();
        for q in [-1.0, -0.3, 0.0, 0.2, 0.5] {
            let da = svr_predict(&a.model, q) + shift;
            let db = svr_predict(&b.model, q);
            prop_assert!((da - db).abs() < 1e-5 * (1.0 + da.abs()), "{da} vs {db}");
        }
    }

    #[test]
    fn fitting_is_deterministic((xs, ys, ws) in problem(), p in params()) {
        let a = svr_fit_with(&xs, &ys, &ws, p, SolverOptions::default()).unwrap();
        let b = svr_fit_with(&xs, &ys, &ws, p, SolverOptions::default()).unwrap();
        prop_assert_eq!(a.alpha.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.alpha.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.model.bias.to_bits(), b.model.bias.to_bits());
    }

    #[test]
    fn cubic_residual_is_orthogonal_to_the_basis(
        ts in prop::collection::vec(-2.0f64..0.0, 6..20),
        ys in prop::collection::vec(-3.0f64..3.0, 20),
    ) {
        let mut ts = ts;
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 0.05);
        prop_assume!(ts.len() >= 5);
        let ys = &ys[..ts.len()];
        let c = polyfit3(&ts, ys).unwrap();
        let scale: f64 = ys.iter().map(|y| y.abs()).sum::<f64>() + 1.0;
        for k in 0..4 {
            let dot: f64 = ts.iter().zip(ys).map(|(&t, &y)| t.powi(k) * (y - polyval3(&c, t))).sum();
            prop_assert!(dot.abs() < 1e-8 * scale * 8f64.powi(k), "k {k}: {dot}");
        }
    }

    #[test]
    fn cubic_recovers_exact_polynomials(c in prop::array::uniform4(-2.0f64..2.0), n in 4usize..25) {
        let ts: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| polyval3(&c, t)).collect();
        let got = polyfit3(&ts, &ys).unwrap();
        for k in 0..4 {
            prop_assert!((got[k] - c[k]).abs() < 1e-7, "{got:?} vs {c:?}");
        }
    }
}

fn walking_history(turn: f64) -> TrackHistory {
    let samples = (0..30)
        .map(|i| {
            let t = i as f64 * 0.1;
            (t, 0.6 * t, turn * t * t)
        })
        .collect();
    TrackHistory::from_samples(samples, 1.0).unwrap()
}

#[test]
fn grid_search_picks_the_exhaustive_minimum() {
    let cfg = PredictConfig::default();
    let grid = SvrGrid { c: vec![10.0, 1000.0], epsilon: vec![0.001, 0.05], gamma: vec![0.5, 4.0] };
    for turn in [0.0, 0.1] {
        let h = walking_history(turn);
        let chosen = grid_search(&h, &grid, 3, &cfg).unwrap();
        let mut best = None::<(SvrParams, f64)>;
        for &c in &grid.c {
            for &e in &grid.epsilon {
                for &g in &grid.gamma {
                    let p = SvrParams::new(c, e, g);
                    let err = fold_error(&h, p, 3, &cfg).unwrap();
                    if best.is_none_or(|(_, b)| err < b) {
                        best = Some((p, err));
                    }
                }
            }
        }
        assert_eq!(chosen, best.unwrap().0);
    }
}

#[test]
fn straight_walk_keeps_moving_forward() {
    let h = walking_history(0.0);
    let cfg = PredictConfig::default();
    let pts = predict_trajectory(&h, 1.5, 0.1, &cfg).unwrap();
    assert_eq!(pts.len(), 15);
    let mut last_x = 0.6 * 2.9;
    for p in &pts {
        let lead = p.t - 2.9;
        assert!(p.valid);
        assert!(p.x > last_x, "{p:?}");
        assert!((p.x - 0.6 * p.t).abs() < 0.25 * lead, "{p:?}");
        assert!(p.y.abs() < 0.02);
        last_x = p.x;
    }
}
