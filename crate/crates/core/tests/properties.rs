use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spread_core::closed_form::{spread_star, theta_star, wiener_constant};
use spread_core::loss::{
    asymptotic_empirical, cnce_batch, spread_batch, spread_batch_parts, supcon_batch, AugmentationMap, LossWeights,
};
use spread_core::metrics::{
    class_spread, delta_separation, gamma_margin_error, matched_f1, mean_classifier, permutation_gap, subclass_stats,
};
use spread_core::numeric::norm;
use spread_core::sphere::{
    make_collapsed, make_mu_theta, make_uniform, random_orthogonal, regular_simplex, rotate_in_plane, EmbeddingConfig,
};
use spread_core::toy::augment;

/// Balanced random config with subclass `2y + (i % 2)`.
fn labeled(k: usize, d: usize, n_y: usize, seed: u64) -> EmbeddingConfig {
    let base = make_uniform(k, d, n_y, seed).unwrap();
    let sub: Vec<usize> = base
        .class_labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| 2 * y + i % 2)
        .collect();
    EmbeddingConfig::new(base.points().clone(), base.class_labels().to_vec(), Some(sub)).unwrap()
}

fn rotate(cfg: &EmbeddingConfig, seed: u64) -> EmbeddingConfig {
    let q = random_orthogonal(cfg.dim(), &mut ChaCha8Rng::seed_from_u64(seed));
    cfg.transformed(&q).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn losses_are_rotation_invariant(k in 2usize..4, d in 2usize..6, n_y in 2usize..5, seed in any::<u64>(),
                                     alpha in 0.0f64..=1.0, tau in 0.1f64..2.0) {
        let cfg = make_uniform(k, d, 2 * n_y, seed).unwrap();
        let rot = rotate(&cfg, seed ^ 1);
        let w = LossWeights::new(alpha, tau).unwrap();
        let aug = AugmentationMap::new(&cfg, (0..cfg.len()).step_by(2).map(|i| (i, i + 1)).collect()).unwrap();
        let pairs = [
            (supcon_batch(&cfg, tau).unwrap(), supcon_batch(&rot, tau).unwrap()),
            (cnce_batch(&cfg, &aug, tau).unwrap(), cnce_batch(&rot, &aug, tau).unwrap()),
            (spread_batch(&cfg, &aug, w).unwrap(), spread_batch(&rot, &aug, w).unwrap()),
            (asymptotic_empirical(&cfg, w).unwrap(), asymptotic_empirical(&rot, w).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn class_fixing_permutations_leave_losses_unchanged(k in 2usize..4, d in 2usize..5, n_y in 2usize..5,
                                                        seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let cfg = make_uniform(k, d, 2 * n_y, seed).unwrap();
        let aug = AugmentationMap::new(&cfg, (0..cfg.len()).step_by(2).map(|i| (i, i + 1)).collect()).unwrap();
        let w = LossWeights::new(alpha, 0.5).unwrap();
        let gap = permutation_gap(&cfg, &aug, w, 10, seed).unwrap();
        prop_assert!(gap.spread_batch <= 1e-10);
        prop_assert!(gap.asymptotic.unwrap() <= 1e-10);
    }

    #[test]
    fn spread_batch_is_lipschitz_in_alpha(seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let cfg = make_uniform(2, 3, 6, seed).unwrap();
        let aug = AugmentationMap::new(&cfg, (0..cfg.len()).step_by(2).map(|i| (i, i + 1)).collect()).unwrap();
        let pa = spread_batch_parts(&cfg, &aug, LossWeights::new(a, 0.5).unwrap()).unwrap();
        let lb = spread_batch(&cfg, &aug, LossWeights::new(b, 0.5).unwrap()).unwrap();
        prop_assert!((pa.total - lb).abs() <= (a - b).abs() * (pa.supcon.abs() + pa.cnce.abs()) + 1e-12);
    }

    #[test]
    fn plane_rotation_preserves_norm(d in 2usize..8, seed in any::<u64>(), theta in -10.0f64..10.0) {
        let v = spread_core::sphere::random_unit_vector(d, &mut ChaCha8Rng::seed_from_u64(seed));
        let i = (seed % d as u64) as usize;
        let j = (i + 1) % d;
        let r = rotate_in_plane(&v, i, j, theta).unwrap();
        prop_assert!((norm(&r) - norm(&v)).abs() <= 1e-12);
    }

    #[test]
    fn simplex_gram_matrix_is_label_symmetric(k in 2usize..7, extra in 0usize..3) {
        let f = regular_simplex(k, (k - 1).max(2) + extra).unwrap();
        for a in 0..k {
            for b in 0..k {
                let g = spread_core::numeric::dot(&f.vertices[a], &f.vertices[b]);
                let expect = if a == b { 1.0 } else { -1.0 / (k as f64 - 1.0) };
                prop_assert!((g - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mu_theta_spread_is_sine(d in 2usize..6, theta in 0.0f64..=std::f64::consts::FRAC_PI_2, m in 1usize..4) {
        prop_assume!(theta > 0.0);
        let cfg = make_mu_theta(2, d, theta, m).unwrap();
        let s = class_spread(&cfg);
        for v in s.per_class {
            prop_assert!((v - theta.sin()).abs() <= 1e-9);
        }
    }

    #[test]
    fn optimal_spread_is_sine_of_optimal_angle(alpha in 0.67f64..0.9, tau in 0.1f64..1.0) {
        let w = LossWeights::new(alpha, tau).unwrap();
        if let (Ok(s), Ok(t)) = (spread_star(w), theta_star(w)) {
            prop_assert!((s - t.sin()).abs() <= 1e-12);
        }
    }

    #[test]
    fn wiener_constant_is_bounded(d in 2usize..200, tau in 0.05f64..5.0) {
        let w = wiener_constant(d, tau).unwrap();
        prop_assert!(w > (-2.0 / tau).exp() && w <= 1.0);
    }

    #[test]
    fn metrics_are_rotation_invariant(seed in any::<u64>(), d in 2usize..6) {
        let cfg = labeled(2, d, 6, seed);
        let rot = rotate(&cfg, seed ^ 7);
        let a = class_spread(&cfg);
        let b = class_spread(&rot);
        for (x, y) in a.per_class.iter().zip(&b.per_class) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        for (x, y) in subclass_stats(&cfg).unwrap().iter().zip(subclass_stats(&rot).unwrap().iter()) {
            prop_assert!((x.sigma - y.sigma).abs() <= 1e-10);
            prop_assert!((x.var - y.var).abs() <= 1e-10);
            prop_assert!(x.var + 1e-15 >= x.sigma * x.sigma);
        }
        let da = delta_separation(&cfg, 0, 1).unwrap();
        let db = delta_separation(&rot, 0, 1).unwrap();
        prop_assert!((da - db).abs() <= 1e-10);
        let err = |c: &EmbeddingConfig| {
            let sub = c.subclass_labels().unwrap();
            let clf = mean_classifier(c.points(), sub).unwrap();
            let idx: Vec<usize> = (0..c.len()).filter(|&i| sub[i] == 0).collect();
            gamma_margin_error(&c.points().select(&idx), clf.weight(0).unwrap(), clf.weight(1).unwrap(), 1.05).unwrap()
        };
        prop_assert_eq!(err(&cfg), err(&rot));
    }

    #[test]
    fn margin_error_is_monotone_in_gamma(seed in any::<u64>(), g1 in 1.0001f64..3.0, g2 in 1.0001f64..3.0) {
        let cfg = labeled(2, 4, 10, seed);
        let sub = cfg.subclass_labels().unwrap();
        let clf = mean_classifier(cfg.points(), sub).unwrap();
        let idx: Vec<usize> = (0..cfg.len()).filter(|&i| sub[i] == 1).collect();
        let pts = cfg.points().select(&idx);
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let e_lo = gamma_margin_error(&pts, clf.weight(1).unwrap(), clf.weight(0).unwrap(), lo).unwrap();
        let e_hi = gamma_margin_error(&pts, clf.weight(1).unwrap(), clf.weight(0).unwrap(), hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&e_lo));
        prop_assert!(e_lo <= e_hi);
    }

    #[test]
    fn f1_ignores_subclass_ids(clusters in proptest::collection::vec(0usize..2, 4..30), shift in 1usize..50) {
        let truth: Vec<usize> = (0..clusters.len()).map(|i| i % 2).collect();
        let relabeled: Vec<usize> = truth.iter().map(|&z| (1 - z) + shift).collect();
        let mut a = matched_f1(&clusters, &truth, 2);
        let mut b = matched_f1(&clusters, &relabeled, 2);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn augmentation_stays_within_epsilon(x in proptest::collection::vec(-5.0f64..5.0, 1..10),
                                         eps in 0.0f64..3.0, seed in any::<u64>()) {
        let a = augment(&x, eps, seed).unwrap();
        prop_assert!(spread_core::numeric::dist(&a, &x) <= eps + 1e-12);
    }
}

#[test]
fn collapse_minimises_the_alignment_and_separation_terms() {
    // With alpha = 0 the estimator is exactly its align + diff part.
    let w = LossWeights::new(0.0, 0.5).unwrap();
    let base = make_collapsed(2, 3, 3).unwrap();
    let at_collapse = asymptotic_empirical(&base, w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let mut pts = base.points().clone();
        for i in 0..pts.len() {
            let dir = spread_core::sphere::random_unit_vector(3, &mut rng);
            let mag = 0.1 * rand::Rng::random::<f64>(&mut rng);
            let row = pts.row_mut(i);
            row.iter_mut().zip(&dir).for_each(|(x, d)| *x += mag * d);
            let r = norm(row);
            row.iter_mut().for_each(|x| *x /= r);
        }
        let moved = base.with_points(pts).unwrap();
        let v = asymptotic_empirical(&moved, w).unwrap();
        assert!(v >= at_collapse - 1e-12, "trial {trial}: {v} < {at_collapse}");
    }
}
