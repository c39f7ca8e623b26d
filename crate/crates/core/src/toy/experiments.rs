//! End-to-end toy runs: encoders trained with SupCon and with the spread loss
//! (with and without augmentation), class-conditional and generic
//! autoencoders, and their coarse-to-fine transfer.

use super::autoencoder::{train_class_autoencoder, train_generic_autoencoder, AutoencoderTraining, ClassAutoencoders};
use super::data::{gen_subclass_data, ToyDataset, ToySpec};
use super::encoder::{train_encoder, Encoder, EncoderTraining, LossMode};
use super::thanos::{coarse_to_fine_eval, Routing, Thanos};
use crate::error::Result;
use crate::loss::LossWeights;
use crate::metrics::{max_sigma_spread_ratio, spread_of, subclass_recovery, TransferReport};
use crate::numeric::median;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyExperiment {
    pub input_dim: usize,
    pub class_offset: f64,
    pub subclass_offset: f64,
    pub sigma: f64,
    pub n: usize,
    /// Every `eval_every`-th point of each subclass is held out.
    pub eval_every: usize,
    pub hidden: Vec<usize>,
    pub dim: usize,
    pub alpha: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub per_class: usize,
    pub lr: f64,
    pub bottleneck: usize,
    pub ae_hidden: Vec<usize>,
    pub ae_epochs: usize,
    pub ae_lr: f64,
    pub gamma: f64,
    /// Clusters per class for subclass recovery.
    pub clusters: usize,
    pub ratio_cutoff: f64,
}

impl Default for ToyExperiment {
    fn default() -> Self {
        Self {
            input_dim: 8,
            class_offset: 3.0,
            subclass_offset: 1.0,
            sigma: 0.5,
            n: 2000,
            eval_every: 2,
            hidden: vec![32, 32],
            dim: 8,
            alpha: 0.7,
            tau: 0.5,
            epsilon: 1.5,
            epochs: 30,
            per_class: 32,
            lr: 0.5,
            bottleneck: 1,
            ae_hidden: Vec::new(),
            ae_epochs: 300,
            ae_lr: 0.05,
            gamma: 1.1,
            clusters: 2,
            ratio_cutoff: 1e-3,
        }
    }
}

impl ToyExperiment {
    pub fn spec(&self, seed: u64) -> Result<ToySpec> {
        ToySpec::standard(
            self.input_dim,
            self.class_offset,
            self.subclass_offset,
            self.sigma,
            self.n,
            seed,
        )
    }

    pub fn data(&self, seed: u64) -> Result<(ToyDataset, ToyDataset)> {
        gen_subclass_data(&self.spec(seed)?)?.split(self.eval_every)
    }

    pub fn encoder_training(&self, mode: LossMode, epsilon: f64, seed: u64) -> Result<EncoderTraining> {
        Ok(EncoderTraining {
            mode,
            weights: LossWeights::new(self.alpha, self.tau)?,
            hidden: self.hidden.clone(),
            dim: self.dim,
            epochs: self.epochs,
            per_class: self.per_class,
            lr: self.lr,
            epsilon,
            seed,
        })
    }

    pub fn autoencoder_training(&self, seed: u64) -> AutoencoderTraining {
        AutoencoderTraining {
            bottleneck: self.bottleneck,
            hidden: self.ae_hidden.clone(),
            epochs: self.ae_epochs,
            lr: self.ae_lr,
            seed,
        }
    }
}

/// Representation-level summary of one trained encoder on held-out data.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSummary {
    pub label: String,
    pub final_loss: f64,
    pub class_spread: f64,
    pub sigma_ratio: Option<f64>,
    pub recovery_f1: f64,
    pub transfer: TransferReport,
}

pub fn summarize_encoder(
    label: &str,
    enc: &Encoder,
    history: &[f64],
    train: &ToyDataset,
    eval: &ToyDataset,
    cfg: &ToyExperiment,
    seed: u64,
) -> Result<EncoderSummary> {
    let emb = enc.embed_all(&eval.inputs);
    let spread = spread_of(&emb, &eval.class_labels)?;
    let ratio = max_sigma_spread_ratio(&emb, &eval.class_labels, &eval.subclass_labels, cfg.ratio_cutoff)?;
    let rec = subclass_recovery(&emb, &eval.class_labels, &eval.subclass_labels, cfg.clusters, seed)?;
    let transfer = coarse_to_fine_eval(|d| Ok(enc.embed_all(&d.inputs)), train, eval, cfg.gamma)?;
    Ok(EncoderSummary {
        label: label.to_string(),
        final_loss: history.last().copied().unwrap_or(f64::NAN),
        class_spread: spread.mean,
        sigma_ratio: ratio,
        recovery_f1: rec.overall_f1,
        transfer,
    })
}

pub fn thanos_transfer(
    enc: &Encoder,
    aes: &ClassAutoencoders,
    train: &ToyDataset,
    eval: &ToyDataset,
    gamma: f64,
) -> Result<TransferReport> {
    let t = Thanos {
        encoder: enc,
        autoencoders: aes,
        routing: Routing::TrueClass,
    };
    coarse_to_fine_eval(|d| t.compose_all(d), train, eval, gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySeedOutcome {
    pub seed: u64,
    pub supcon: EncoderSummary,
    pub spread: EncoderSummary,
    pub spread_no_aug: EncoderSummary,
    /// Spread encoder plus class-conditional autoencoders.
    pub thanos: TransferReport,
    /// Spread encoder plus one autoencoder shared by all classes.
    pub thanos_generic: TransferReport,
    pub class_ae_loss: Vec<f64>,
    pub generic_ae_loss: Vec<f64>,
}

/// Trains everything for one seed (single-threaded, deterministic).
pub fn run_toy_seed(cfg: &ToyExperiment, seed: u64) -> Result<ToySeedOutcome> {
    let (train, eval) = cfg.data(seed)?;
    let (sup, h_sup) = train_encoder(&train, &cfg.encoder_training(LossMode::SupCon, cfg.epsilon, seed)?)?;
    let (spr, h_spr) = train_encoder(&train, &cfg.encoder_training(LossMode::Spread, cfg.epsilon, seed)?)?;
    let (spr0, h_spr0) = train_encoder(&train, &cfg.encoder_training(LossMode::Spread, 0.0, seed)?)?;
    let (cae, cae_loss) = train_class_autoencoder(&train, &cfg.autoencoder_training(seed))?;
    let (gae, gae_loss) = train_generic_autoencoder(&train, &cfg.autoencoder_training(seed))?;
    Ok(ToySeedOutcome {
        seed,
        supcon: summarize_encoder("supcon", &sup, &h_sup, &train, &eval, cfg, seed)?,
        spread: summarize_encoder("spread", &spr, &h_spr, &train, &eval, cfg, seed)?,
        spread_no_aug: summarize_encoder("spread-no-aug", &spr0, &h_spr0, &train, &eval, cfg, seed)?,
        thanos: thanos_transfer(&spr, &cae, &train, &eval, cfg.gamma)?,
        thanos_generic: thanos_transfer(&spr, &gae, &train, &eval, cfg.gamma)?,
        class_ae_loss: cae_loss,
        generic_ae_loss: gae_loss,
    })
}

/// Medians over seeds of the quantities the directional checks compare.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyMedians {
    pub supcon_accuracy: f64,
    pub spread_accuracy: f64,
    pub thanos_accuracy: f64,
    pub thanos_generic_accuracy: f64,
    /// Undefined ratios (collapsed classes) count as infinite.
    pub supcon_ratio: f64,
    pub spread_ratio: f64,
    pub spread_no_aug_ratio: f64,
    pub spread_f1: f64,
    pub spread_no_aug_f1: f64,
}

pub fn toy_medians(outcomes: &[ToySeedOutcome]) -> ToyMedians {
    let m = |f: &dyn Fn(&ToySeedOutcome) -> f64| median(&outcomes.iter().map(f).collect::<Vec<_>>());
    let ratio = |s: &EncoderSummary| s.sigma_ratio.unwrap_or(f64::INFINITY);
    ToyMedians {
        supcon_accuracy: m(&|o| o.supcon.transfer.accuracy),
        spread_accuracy: m(&|o| o.spread.transfer.accuracy),
        thanos_accuracy: m(&|o| o.thanos.accuracy),
        thanos_generic_accuracy: m(&|o| o.thanos_generic.accuracy),
        supcon_ratio: m(&|o| ratio(&o.supcon)),
        spread_ratio: m(&|o| ratio(&o.spread)),
        spread_no_aug_ratio: m(&|o| ratio(&o.spread_no_aug)),
        spread_f1: m(&|o| o.spread.recovery_f1),
        spread_no_aug_f1: m(&|o| o.spread_no_aug.recovery_f1),
    }
}
