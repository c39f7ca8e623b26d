use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spread_core::loss::LossWeights;
use spread_core::metrics::{
    estimate_lipschitz, max_sigma_spread_ratio, spread_of, LipschitzMode, DEFAULT_LIPSCHITZ_CUTOFF,
};
use spread_core::numeric::{dist, norm};
use spread_core::sphere::PointSet;
use spread_core::toy::autoencoder::{train_autoencoder, train_class_autoencoder};
use spread_core::toy::encoder::{batch_inputs, batch_loss_and_grad};
use spread_core::toy::experiments::ToyExperiment;
use spread_core::toy::lipschitz::{augmentation_pairs, decoder_reverse_pairs, encoder_pairs, sample_pairs};
use spread_core::toy::{
    augment, coarse_to_fine_eval, gen_subclass_data, train_encoder, AutoencoderTraining, Encoder, EncoderTraining,
    LossMode, Routing, Thanos, ToyDataset, ToySpec,
};

fn small_spec(n: usize, seed: u64) -> ToySpec {
    ToySpec::standard(4, 3.0, 1.0, 0.5, n, seed).unwrap()
}

#[test]
fn balanced_proportions_match_the_multinomial() {
    let spec = ToySpec::standard(8, 3.0, 1.0, 0.5, 4000, 12).unwrap();
    let data = gen_subclass_data(&spec).unwrap();
    let n = data.len() as f64;
    for z in 0..4 {
        let count = data.subclass_labels.iter().filter(|&&s| s == z).count() as f64;
        let sd = (n * 0.25 * 0.75).sqrt();
        assert!((count - 0.25 * n).abs() <= 3.0 * sd, "subclass {z}: {count}");
    }
}

#[test]
fn standard_centers_are_four_sigma_apart() {
    let spec = ToyExperiment::default().spec(0).unwrap();
    assert_eq!(spec.n, 2000);
    for y in 0..2 {
        let d = dist(&spec.centers[2 * y], &spec.centers[2 * y + 1]);
        assert!(d >= 4.0 * spec.spreads[2 * y]);
    }
}

#[test]
fn augmented_subclass_spread_obeys_triangle_bound() {
    let data = gen_subclass_data(&small_spec(400, 4)).unwrap();
    let eps = 0.7;
    let members: Vec<usize> = (0..data.len()).filter(|&i| data.subclass_labels[i] == 0).collect();
    let pts = data.inputs.select(&members);
    let mut aug = PointSet::empty(pts.dim());
    for (i, x) in pts.rows().enumerate() {
        aug.push(&augment(x, eps, i as u64).unwrap());
    }
    let sigma = spread_of(&pts, &vec![0; pts.len()]).unwrap().mean;
    let sigma_aug = spread_of(&aug, &vec![0; aug.len()]).unwrap().mean;
    assert!(sigma_aug <= sigma + 2.0 * eps);
}

#[test]
fn encoder_batch_gradient_matches_finite_differences() {
    let data = gen_subclass_data(&small_spec(40, 2)).unwrap();
    let mut enc = Encoder::new(4, &[6, 5], 3, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let members = data.class_members();
    let batch: Vec<usize> = members.iter().flat_map(|m| m[..4].to_vec()).collect();
    let (inputs, labels) = batch_inputs(&data, &batch, 0.3, &mut rng).unwrap();
    for alpha in [0.0, 0.7, 1.0] {
        let w = LossWeights::new(alpha, 0.5).unwrap();
        let (_, grad) = batch_loss_and_grad(&enc, &inputs, &labels, w).unwrap();
        let p = enc.net.params();
        let h = 1e-6;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += h;
            enc.net.set_params(&q).unwrap();
            let up = batch_loss_and_grad(&enc, &inputs, &labels, w).unwrap().0;
            q[i] -= 2.0 * h;
            enc.net.set_params(&q).unwrap();
            let dn = batch_loss_and_grad(&enc, &inputs, &labels, w).unwrap().0;
            let fd = (up - dn) / (2.0 * h);
            num += (fd - grad[i]).powi(2);
            den += fd.powi(2);
        }
        enc.net.set_params(&p).unwrap();
        let rel = (num / den).sqrt();
        assert!(rel <= 1e-4, "alpha {alpha}: relative error {rel}");
    }
}

fn training(mode: LossMode, epsilon: f64, seed: u64) -> EncoderTraining {
    let cfg = ToyExperiment::default();
    cfg.encoder_training(mode, epsilon, seed).unwrap()
}

#[test]
fn training_is_deterministic() {
    let data = gen_subclass_data(&small_spec(200, 1)).unwrap();
    let mut t = training(LossMode::Spread, 0.5, 3);
    t.epochs = 3;
    t.per_class = 8;
    let (a, ha) = train_encoder(&data, &t).unwrap();
    let (b, hb) = train_encoder(&data, &t).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a, b);
    assert_eq!(ha.len(), 3);
}

#[test]
fn divergence_is_reported_with_the_epoch() {
    let data = gen_subclass_data(&small_spec(200, 1)).unwrap();
    let mut t = training(LossMode::SupCon, 0.5, 3);
    t.lr = f64::INFINITY;
    t.epochs = 2;
    let err = train_encoder(&data, &t).unwrap_err();
    assert!(matches!(err, spread_core::Error::TrainingFailure { epoch: 0, .. }), "{err:?}");
}

#[test]
fn supcon_collapses_and_spread_keeps_subclasses_apart() {
    let cfg = ToyExperiment::default();
    let (train, _) = cfg.data(0).unwrap();
    let (sup, _) = train_encoder(&train, &training(LossMode::SupCon, cfg.epsilon, 0)).unwrap();
    let (spr, _) = train_encoder(&train, &training(LossMode::Spread, cfg.epsilon, 0)).unwrap();
    let es = sup.embed_all(&train.inputs);
    let ep = spr.embed_all(&train.inputs);
    let s_sup = spread_of(&es, &train.class_labels).unwrap();
    let s_spr = spread_of(&ep, &train.class_labels).unwrap();
    assert!(s_sup.per_class.iter().all(|&s| s < 0.05), "{:?}", s_sup);
    assert!(s_spr.per_class.iter().all(|&s| s > 0.1), "{:?}", s_spr);
    let r_sup = max_sigma_spread_ratio(&es, &train.class_labels, &train.subclass_labels, 1e-3).unwrap().unwrap();
    let r_spr = max_sigma_spread_ratio(&ep, &train.class_labels, &train.subclass_labels, 1e-3).unwrap().unwrap();
    assert!(r_spr < r_sup, "{r_spr} vs {r_sup}");
}

#[test]
fn linear_autoencoder_recovers_a_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts = PointSet::empty(5);
    let a = [1.0, 0.5, -0.3, 0.0, 0.2];
    let b = [0.0, 0.4, 0.8, -0.5, 0.1];
    for _ in 0..200 {
        let (s, t): (f64, f64) = (rand::Rng::random(&mut rng), rand::Rng::random(&mut rng));
        let x: Vec<f64> = (0..5).map(|j| 2.0 * (s - 0.5) * a[j] + 2.0 * (t - 0.5) * b[j] + 1.0).collect();
        pts.push(&x);
    }
    let cfg = AutoencoderTraining {
        bottleneck: 2,
        hidden: Vec::new(),
        epochs: 4000,
        lr: 0.2,
        seed: 1,
    };
    let ae = train_autoencoder(&pts, &cfg).unwrap();
    assert!(ae.reconstruction_loss(&pts) < 1e-3, "{}", ae.reconstruction_loss(&pts));
    let full = train_autoencoder(&pts, &AutoencoderTraining { bottleneck: 5, ..cfg.clone() }).unwrap();
    assert!(full.reconstruction_loss(&pts) < 1e-3);
    assert!(train_autoencoder(&pts, &AutoencoderTraining { bottleneck: 6, ..cfg }).is_err());
}

#[test]
fn class_autoencoders_see_only_their_class() {
    let data = gen_subclass_data(&small_spec(300, 7)).unwrap();
    let cfg = AutoencoderTraining {
        bottleneck: 1,
        hidden: Vec::new(),
        epochs: 5,
        lr: 0.05,
        seed: 0,
    };
    let (aes, losses) = train_class_autoencoder(&data, &cfg).unwrap();
    assert_eq!(aes.per_class.len(), 2);
    assert_eq!(losses.len(), 2);
    for (y, m) in data.class_members().iter().enumerate() {
        let sub = data.inputs.select(m);
        let mut mean = vec![0.0; 4];
        for x in sub.rows() {
            mean.iter_mut().zip(x).for_each(|(a, v)| *a += v / m.len() as f64);
        }
        for (a, b) in mean.iter().zip(&aes.per_class[y].mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((losses[y] - aes.per_class[y].reconstruction_loss(&sub)).abs() < 1e-12);
    }
}

#[test]
fn thanos_layout_and_routing() {
    let data = gen_subclass_data(&small_spec(200, 3)).unwrap();
    let enc = Encoder::new(4, &[5], 3, 2).unwrap();
    let cfg = AutoencoderTraining {
        bottleneck: 2,
        hidden: Vec::new(),
        epochs: 2,
        lr: 0.05,
        seed: 0,
    };
    let (aes, _) = train_class_autoencoder(&data, &cfg).unwrap();
    let t = Thanos {
        encoder: &enc,
        autoencoders: &aes,
        routing: Routing::TrueClass,
    };
    assert_eq!(t.dim(), 5);
    let v = t.compose(data.inputs.row(0), data.class_labels[0]).unwrap();
    assert_eq!(v.len(), 5);
    assert!((norm(&v[..3]) - 1.0).abs() < 1e-12);
    assert_eq!(&v[3..], aes.encode(data.inputs.row(0), data.class_labels[0]).unwrap().as_slice());
    assert!(matches!(t.compose(&[1.0, 2.0], 0), Err(spread_core::Error::Shape(_))));
    let predicted = Thanos {
        routing: Routing::predicted(&enc, &data).unwrap(),
        ..t.clone()
    };
    assert_eq!(predicted.compose_all(&data).unwrap().len(), data.len());
}

fn one_hot(d: &ToyDataset) -> spread_core::Result<PointSet> {
    let mut out = PointSet::empty(4);
    for &z in &d.subclass_labels {
        let mut v = vec![0.0; 4];
        v[z] = 1.0;
        out.push(&v);
    }
    Ok(out)
}

#[test]
fn coarse_to_fine_extremes() {
    let data = gen_subclass_data(&small_spec(400, 6)).unwrap();
    let (train, eval) = data.split(2).unwrap();
    let truth = coarse_to_fine_eval(one_hot, &train, &eval, 1.5).unwrap();
    assert_eq!(truth.accuracy, 1.0);
    assert!(truth.per_subclass.iter().all(|s| s.margin_error == 0.0));

    let constant = |d: &ToyDataset| -> spread_core::Result<PointSet> {
        let mut out = PointSet::empty(2);
        for &y in &d.class_labels {
            out.push(if y == 0 { &[1.0, 0.0] } else { &[-1.0, 0.0] });
        }
        Ok(out)
    };
    let collapsed = coarse_to_fine_eval(constant, &train, &eval, 1.1).unwrap();
    assert!(collapsed.per_subclass.iter().all(|s| s.margin_error == 1.0));
    // ties resolve to the lower subclass id: exactly the even subclasses are right
    let even = eval.subclass_labels.iter().filter(|&&z| z % 2 == 0).count() as f64;
    assert_eq!(collapsed.accuracy, even / eval.len() as f64);

    // brute-force margin recount
    let emb = one_hot(&eval).unwrap();
    for s in &truth.per_subclass {
        let idx: Vec<usize> = (0..eval.len()).filter(|&i| eval.subclass_labels[i] == s.subclass).collect();
        let sib = s.subclass ^ 1;
        let wz = truth.classifier.weight(s.subclass).unwrap();
        let wo = truth.classifier.weight(sib).unwrap();
        let bad = idx
            .iter()
            .filter(|&&i| {
                let x = emb.row(i);
                x.iter().zip(wz).map(|(a, b)| a * b).sum::<f64>() - x.iter().zip(wo).map(|(a, b)| a * b).sum::<f64>()
                    < 1.5f64.ln()
            })
            .count();
        assert_eq!(s.margin_error, bad as f64 / idx.len() as f64);
    }

    let mut missing = eval.clone();
    missing.subclass_labels.iter_mut().for_each(|z| *z &= !1);
    assert!(coarse_to_fine_eval(one_hot, &train, &missing, 1.5).is_err());
}

#[test]
fn lipschitz_estimates_on_a_trained_encoder() {
    let cfg = ToyExperiment::default();
    let (train, _) = cfg.data(1).unwrap();
    let (enc, _) = train_encoder(&train, &training(LossMode::Spread, cfg.epsilon, 1)).unwrap();
    let pairs = sample_pairs(train.len(), 400, 3).unwrap();
    let anchors: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let k_l = estimate_lipschitz(
        LipschitzMode::Encoder,
        &encoder_pairs(&enc, &train.inputs, &pairs),
        DEFAULT_LIPSCHITZ_CUTOFF,
    )
    .unwrap();
    let k_aug = estimate_lipschitz(
        LipschitzMode::Augmentation,
        &augmentation_pairs(&enc, &train.inputs, &anchors, cfg.epsilon, 10, 4).unwrap(),
        DEFAULT_LIPSCHITZ_CUTOFF,
    )
    .unwrap();
    assert!(k_l.constant > 0.0 && k_aug.constant > 0.0);
    println!("K_aug {} K_L {}", k_aug.constant, k_l.constant);

    let (aes, _) = train_class_autoencoder(&train, &cfg.autoencoder_training(1)).unwrap();
    let members = &train.class_members()[0];
    let sub = train.inputs.select(members);
    let dp = decoder_reverse_pairs(&aes.per_class[0], &sub, &sample_pairs(sub.len(), 200, 5).unwrap());
    let k_g = estimate_lipschitz(LipschitzMode::DecoderReverse, &dp, DEFAULT_LIPSCHITZ_CUTOFF).unwrap();
    assert!(k_g.constant > 0.0 && k_g.constant.is_finite());
}
