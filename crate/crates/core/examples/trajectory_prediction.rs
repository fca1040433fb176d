//! A person walks toward a door and turns left through it; the camera loses
//! them mid-turn. Compares the SVR extrapolation with a cubic fit, then runs
//! a small hyper-parameter grid search.

use activefollow::predict::{grid_search, predict_with, PredictConfig, Regressor, SvrGrid, TrackHistory};
use activefollow::geometry::Point2;

fn path(t: f64) -> Point2 {
    let (v, r, t_turn) = (0.5, 0.5, 4.0);
    let s = v * (t - t_turn);
    if s <= 0.0 {
        return Point2::new(s, 0.0);
    }
    let quarter = r * std::f64::consts::FRAC_PI_2;
    if s <= quarter {
        Point2::new(r * (s / r).sin(), r * (1.0 - (s / r).cos()))
    } else {
        Point2::new(r, r + s - quarter)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PredictConfig::default();
    let lost_at = 4.5;
    let samples: Vec<(f64, f64, f64)> = (0..=(lost_at * 10.0) as usize)
        .map(|k| {
            let t = k as f64 * 0.1;
            let p = path(t);
            (t, p.x, p.y)
        })
        .collect();
    let history = TrackHistory::from_samples(samples, cfg.tau_w)?;

    let svr = predict_with(&history, 1.0, 0.1, &cfg, Regressor::Svr)?;
    let cubic = predict_with(&history, 1.0, 0.1, &cfg, Regressor::Cubic)?;
    println!("   t     truth          svr            cubic");
    let (mut es, mut ec) = (0.0, 0.0);
    for (s, c) in svr.iter().zip(&cubic) {
        let truth = path(s.t);
        es += truth.distance(Point2::new(s.x, s.y));
        ec += truth.distance(Point2::new(c.x, c.y));
        println!(
            "{:5.1}  ({:5.2},{:5.2})  ({:5.2},{:5.2})  ({:5.2},{:5.2})",
            s.t, truth.x, truth.y, s.x, s.y, c.x, c.y
        );
    }
    let n = svr.len() as f64;
    println!("mean error: svr {:.3} m, cubic {:.3} m", es / n, ec / n);

    let best = grid_search(&history.recent(cfg.window), &SvrGrid::default(), 3, &cfg)?;
    println!("grid search picked C={} epsilon={} gamma={}", best.c, best.epsilon, best.gamma);
    Ok(())
}
