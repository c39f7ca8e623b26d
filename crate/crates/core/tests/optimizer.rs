use spread_core::closed_form::{loss_collapsed, loss_mu_theta_star, loss_uniform, spread_star};
use spread_core::loss::LossWeights;
use spread_core::metrics::class_spread;
use spread_core::opt::{alpha_sweep, optimize_config, OptProblem};

fn problem(alpha: f64, tau: f64) -> OptProblem {
    let mut p = OptProblem::new(2, 2, 8, LossWeights::new(alpha, tau).unwrap());
    p.parallel = true;
    p
}

#[test]
fn three_regimes_at_tau_half() {
    let low = optimize_config(&problem(0.5, 0.5)).unwrap();
    assert!(class_spread(&low.best_config).mean < 1e-2);

    let w = LossWeights::new(0.7, 0.5).unwrap();
    let mid = optimize_config(&problem(0.7, 0.5)).unwrap();
    let s = class_spread(&mid.best_config).mean;
    assert!((s - 0.224).abs() <= 0.15 * 0.224, "{s}");
    assert!((s - spread_star(w).unwrap()).abs() < 1e-3, "{s}");

    let high = optimize_config(&problem(0.9, 0.5)).unwrap();
    assert!(class_spread(&high.best_config).mean > 0.5);
}

#[test]
fn best_loss_never_exceeds_collapse() {
    for alpha in [0.0, 0.3, 0.6, 0.75, 1.0] {
        let p = problem(alpha, 0.5);
        let r = optimize_config(&p).unwrap();
        assert!(r.best_loss <= loss_collapsed(p.weights, 2).unwrap() + 1e-6, "alpha {alpha}");
    }
}

#[test]
fn matches_best_closed_form_on_the_regime_grid() {
    for alpha in [0.5, 0.7, 0.9] {
        let p = problem(alpha, 0.5);
        let r = optimize_config(&p).unwrap();
        let w = p.weights;
        let mut candidates = vec![loss_collapsed(w, 2).unwrap(), loss_uniform(w, 2).unwrap()];
        if let Ok(m) = loss_mu_theta_star(w) {
            candidates.push(m);
        }
        let best = candidates.into_iter().fold(f64::INFINITY, f64::min);
        assert!((r.best_loss - best).abs() <= 1e-4, "alpha {alpha}: {} vs {best}", r.best_loss);
    }
}

#[test]
fn results_are_reproducible() {
    let mut p = problem(0.7, 0.5);
    let a = optimize_config(&p).unwrap();
    p.parallel = false;
    let b = optimize_config(&p).unwrap();
    assert_eq!(a.best_loss, b.best_loss);
    assert_eq!(a.best_seed, b.best_seed);
    assert_eq!(a.best_config, b.best_config);
    assert_eq!(a.restarts, b.restarts);
}

#[test]
fn sweep_at_small_temperature() {
    let rows = alpha_sweep(&problem(0.5, 0.25), &[0.5, 0.6, 0.69, 0.72]).unwrap();
    assert!(rows.iter().all(|r| r.is_ok()));
    assert!(rows[0].spread < 1e-2 && rows[1].spread < 1e-2);
    assert!(rows[2].spread > 1e-2 && rows[3].spread > rows[2].spread);
    for r in &rows {
        assert!(r.loss <= r.loss_collapsed + 1e-6);
    }
}

#[test]
fn sweep_rows_render_with_full_precision() {
    let rows = alpha_sweep(&problem(0.5, 0.5), &[0.7]).unwrap();
    let line = rows[0].to_csv();
    assert_eq!(line.split(',').count(), 12);
    assert!(line.ends_with(",ok"));
    let loss: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
    assert_eq!(loss, rows[0].loss);
}
