use spread_core::metrics::{estimate_lipschitz, subclass_recovery, LipschitzMode, TransferReport};
use spread_core::toy::autoencoder::train_class_autoencoder;
use spread_core::toy::experiments::{run_toy_seed, summarize_encoder, toy_medians, EncoderSummary, ToyExperiment};
use spread_core::toy::lipschitz::{augmentation_pairs, decoder_reverse_pairs, encoder_pairs, sample_pairs};
use spread_core::toy::{train_encoder, LossMode};

use super::{map_seeds, RunContext};
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, CsvTable};
use crate::params::{p, ParamSpec, Params};

fn toy_params() -> Vec<ParamSpec> {
    vec![
        p("input-dim", "8", "input dimension p"),
        p("class-offset", "3", "class centres at +/- this along the first axis"),
        p("subclass-offset", "1", "subclass centres at +/- this off the class centre"),
        p("sigma", "0.5", "within-subclass standard deviation"),
        p("n", "2000", "dataset size"),
        p("eval-every", "2", "every n-th point of each subclass is held out"),
        p("hidden", "32,32", "encoder hidden widths"),
        p("dim", "8", "embedding dimension"),
        p("alpha", "0.7", "spread loss weight"),
        p("tau", "0.5", "temperature"),
        p("epsilon", "1.5", "augmentation radius"),
        p("epochs", "30", "encoder epochs"),
        p("per-class", "32", "anchors per class per batch"),
        p("lr", "0.5", "encoder learning rate"),
        p("bottleneck", "1", "autoencoder code width"),
        p("ae-hidden", "none", "autoencoder hidden widths"),
        p("ae-epochs", "300", "autoencoder epochs"),
        p("ae-lr", "0.05", "autoencoder learning rate"),
        p("gamma", "1.1", "margin ratio of the transfer error"),
        p("clusters", "2", "k-means clusters per class"),
        p("ratio-cutoff", "0.001", "spreads below this leave sigma/s undefined"),
    ]
}

fn with_toy(extra: Vec<ParamSpec>) -> Vec<ParamSpec> {
    let mut v = toy_params();
    v.extend(extra);
    v
}

pub fn experiment(params: &Params) -> Result<ToyExperiment> {
    Ok(ToyExperiment {
        input_dim: params.get("input-dim")?,
        class_offset: params.get("class-offset")?,
        subclass_offset: params.get("subclass-offset")?,
        sigma: params.get("sigma")?,
        n: params.get("n")?,
        eval_every: params.get("eval-every")?,
        hidden: params.list("hidden")?,
        dim: params.get("dim")?,
        alpha: params.get("alpha")?,
        tau: params.get("tau")?,
        epsilon: params.get("epsilon")?,
        epochs: params.get("epochs")?,
        per_class: params.get("per-class")?,
        lr: params.get("lr")?,
        bottleneck: params.get("bottleneck")?,
        ae_hidden: params.list("ae-hidden")?,
        ae_epochs: params.get("ae-epochs")?,
        ae_lr: params.get("ae-lr")?,
        gamma: params.get("gamma")?,
        clusters: params.get("clusters")?,
        ratio_cutoff: params.get("ratio-cutoff")?,
    })
}

fn mode(params: &Params) -> Result<LossMode> {
    match params.raw("mode")? {
        "spread" => Ok(LossMode::Spread),
        "supcon" => Ok(LossMode::SupCon),
        other => Err(CliError::InvalidValue {
            key: "mode".into(),
            value: other.into(),
            detail: "expected spread or supcon".into(),
        }),
    }
}

pub fn train_params() -> Vec<ParamSpec> {
    with_toy(vec![p("mode", "spread", "loss: spread or supcon")])
}

const SUMMARY_HEADER: &str =
    "seed,method,final_loss,class_spread,sigma_spread_ratio,recovery_f1,transfer_accuracy";

fn summary_row(seed: u64, s: &EncoderSummary) -> Vec<String> {
    vec![
        seed.to_string(),
        s.label.clone(),
        num(s.final_loss),
        num(s.class_spread),
        opt_num(s.sigma_ratio),
        num(s.recovery_f1),
        num(s.transfer.accuracy),
    ]
}

pub fn train(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let cfg = experiment(ctx.params)?;
    let mode = mode(ctx.params)?;
    let (train, eval) = cfg.data(ctx.seed)?;
    let (enc, history) = train_encoder(&train, &cfg.encoder_training(mode, cfg.epsilon, ctx.seed)?)?;
    let summary = summarize_encoder(mode.name(), &enc, &history, &train, &eval, &cfg, ctx.seed)?;

    let mut h = CsvTable::new("toy_train_history", "epoch,loss");
    for (e, l) in history.iter().enumerate() {
        h.push(&[e.to_string(), num(*l)]);
    }
    let mut s = CsvTable::new("toy_train_summary", SUMMARY_HEADER);
    s.push(&summary_row(ctx.seed, &summary));
    Ok(vec![s, h])
}

pub fn c2f_params() -> Vec<ParamSpec> {
    with_toy(vec![p("runs", "5", "seeds seed, seed + 1, ..")])
}

fn transfer_rows(t: &mut CsvTable, seed: u64, method: &str, r: &TransferReport) {
    for s in &r.per_subclass {
        t.push(&[
            seed.to_string(),
            method.to_string(),
            s.subclass.to_string(),
            s.class.to_string(),
            s.eval_count.to_string(),
            num(s.margin_error),
            num(s.accuracy),
        ]);
    }
}

pub fn c2f_eval(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let cfg = experiment(ctx.params)?;
    let runs: usize = ctx.params.get("runs")?;
    if runs == 0 {
        return Err(CliError::InvalidValue {
            key: "runs".into(),
            value: "0".into(),
            detail: "needs at least one run".into(),
        });
    }
    let outcomes = map_seeds(ctx.seed, runs, ctx.serial, |s| Ok(run_toy_seed(&cfg, s)?))?;

    let mut enc = CsvTable::new("c2f_encoders", SUMMARY_HEADER);
    let mut acc = CsvTable::new("c2f_eval", "seed,method,transfer_accuracy");
    let mut sub = CsvTable::new(
        "c2f_subclass",
        "seed,method,subclass,class,eval_count,margin_error,accuracy",
    );
    for o in &outcomes {
        for s in [&o.supcon, &o.spread, &o.spread_no_aug] {
            enc.push(&summary_row(o.seed, s));
            acc.push(&[o.seed.to_string(), s.label.clone(), num(s.transfer.accuracy)]);
            transfer_rows(&mut sub, o.seed, &s.label, &s.transfer);
        }
        for (name, r) in [("thanos", &o.thanos), ("thanos-generic", &o.thanos_generic)] {
            acc.push(&[o.seed.to_string(), name.to_string(), num(r.accuracy)]);
            transfer_rows(&mut sub, o.seed, name, r);
        }
    }

    let m = toy_medians(&outcomes);
    let mut med = CsvTable::new("c2f_medians", "quantity,value");
    for (k, v) in [
        ("supcon_accuracy", m.supcon_accuracy),
        ("spread_accuracy", m.spread_accuracy),
        ("thanos_accuracy", m.thanos_accuracy),
        ("thanos_generic_accuracy", m.thanos_generic_accuracy),
        ("supcon_sigma_spread_ratio", m.supcon_ratio),
        ("spread_sigma_spread_ratio", m.spread_ratio),
        ("spread_no_aug_sigma_spread_ratio", m.spread_no_aug_ratio),
        ("spread_recovery_f1", m.spread_f1),
        ("spread_no_aug_recovery_f1", m.spread_no_aug_f1),
    ] {
        med.push(&[k.to_string(), num(v)]);
    }
    Ok(vec![acc, med, enc, sub])
}

pub fn lipschitz_params() -> Vec<ParamSpec> {
    with_toy(vec![
        p("pairs", "400", "random input pairs"),
        p("per-anchor", "10", "augmentations drawn per anchor"),
        p("cutoff", "1e-6", "pairs with input distance at or below this are dropped"),
    ])
}

pub fn lipschitz(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let cfg = experiment(ctx.params)?;
    let count: usize = ctx.params.get("pairs")?;
    let per_anchor: usize = ctx.params.get("per-anchor")?;
    let cutoff: f64 = ctx.params.get("cutoff")?;
    let seed = ctx.seed;
    let (train, _) = cfg.data(seed)?;
    let (enc, _) = train_encoder(&train, &cfg.encoder_training(LossMode::Spread, cfg.epsilon, seed)?)?;
    let (aes, _) = train_class_autoencoder(&train, &cfg.autoencoder_training(seed))?;

    let pairs = sample_pairs(train.len(), count, seed)?;
    let anchors: Vec<usize> = pairs.iter().map(|q| q.0).collect();
    let mut estimates = vec![
        (
            None,
            estimate_lipschitz(LipschitzMode::Encoder, &encoder_pairs(&enc, &train.inputs, &pairs), cutoff)?,
        ),
        (
            None,
            estimate_lipschitz(
                LipschitzMode::Augmentation,
                &augmentation_pairs(&enc, &train.inputs, &anchors, cfg.epsilon, per_anchor, seed)?,
                cutoff,
            )?,
        ),
    ];
    for (y, members) in train.class_members().iter().enumerate() {
        let pts = train.inputs.select(members);
        let cp = sample_pairs(pts.len(), count, seed.wrapping_add(y as u64 + 1))?;
        let scatter = decoder_reverse_pairs(&aes.per_class[y], &pts, &cp);
        estimates.push((Some(y), estimate_lipschitz(LipschitzMode::DecoderReverse, &scatter, cutoff)?));
    }

    let mut t = CsvTable::new("lipschitz", "seed,mode,class,constant,pairs,cutoff");
    for (class, e) in estimates {
        t.push(&[
            seed.to_string(),
            e.mode.name().to_string(),
            class.map(|y| y.to_string()).unwrap_or_default(),
            num(e.constant),
            e.pairs.to_string(),
            num(e.cutoff),
        ]);
    }
    Ok(vec![t])
}

pub fn recover_params() -> Vec<ParamSpec> {
    with_toy(vec![p("runs", "5", "seeds seed, seed + 1, ..")])
}

pub fn recover_subclass(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let cfg = experiment(ctx.params)?;
    let runs: usize = ctx.params.get("runs")?;
    let per_seed = map_seeds(ctx.seed, runs, ctx.serial, |seed| {
        let (train, eval) = cfg.data(seed)?;
        let mut rows = Vec::new();
        for (label, mode, eps) in [
            ("supcon", LossMode::SupCon, cfg.epsilon),
            ("spread", LossMode::Spread, cfg.epsilon),
            ("spread-no-aug", LossMode::Spread, 0.0),
        ] {
            let (enc, _) = train_encoder(&train, &cfg.encoder_training(mode, eps, seed)?)?;
            let emb = enc.embed_all(&eval.inputs);
            let rep = subclass_recovery(&emb, &eval.class_labels, &eval.subclass_labels, cfg.clusters, seed)?;
            for (y, f1) in rep.per_class_f1.iter().enumerate() {
                rows.push(vec![seed.to_string(), label.to_string(), y.to_string(), num(*f1)]);
            }
            rows.push(vec![seed.to_string(), label.to_string(), "all".to_string(), num(rep.overall_f1)]);
        }
        Ok(rows)
    })?;
    let mut t = CsvTable::new("recover_subclass", "seed,method,class,f1");
    for r in per_seed.into_iter().flatten() {
        t.push(&r);
    }
    Ok(vec![t])
}
