//! Sphere-normalised MLP encoder trained on batch contrastive losses.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::{augment_with, ToyDataset};
use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::loss::{spread_batch_gradient, AugmentationMap, LossWeights};
use crate::numeric::{dot, norm};
use crate::sphere::{EmbeddingConfig, PointSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub net: Mlp,
}

impl Encoder {
    /// `input -> hidden... -> dim`, tanh hidden layers.
    pub fn new(input_dim: usize, hidden: &[usize], dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(format!("output width {} < 2", dim)));
        }
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(dim);
        Ok(Self {
            net: Mlp::new(&widths, seed)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.net.apply(x);
        let r = norm(&v);
        v.iter_mut().for_each(|a| *a /= r);
        v
    }

    pub fn embed_all(&self, inputs: &PointSet) -> PointSet {
        let mut out = PointSet::empty(self.dim());
        for x in inputs.rows() {
            out.push(&self.embed(x));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    SupCon,
    Spread,
}

impl LossMode {
    pub fn name(&self) -> &'static str {
        match self {
            LossMode::SupCon => "supcon",
            LossMode::Spread => "spread",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderTraining {
    pub mode: LossMode,
    /// Used as given for `Spread`; `SupCon` trains with `alpha = 0`.
    pub weights: LossWeights,
    pub hidden: Vec<usize>,
    pub dim: usize,
    pub epochs: usize,
    /// Anchors drawn from each class per batch.
    pub per_class: usize,
    pub lr: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl EncoderTraining {
    pub fn effective_weights(&self) -> Result<LossWeights> {
        match self.mode {
            LossMode::Spread => Ok(self.weights),
            LossMode::SupCon => LossWeights::new(0.0, self.weights.tau()),
        }
    }
}

/// Mean batch loss and its gradient with respect to the flat parameters of
/// `enc`. `inputs` holds the anchors followed by one augmentation each, with
/// matching `labels`.
pub fn batch_loss_and_grad(
    enc: &Encoder,
    inputs: &PointSet,
    labels: &[usize],
    weights: LossWeights,
) -> Result<(f64, Vec<f64>)> {
    let traces: Vec<_> = inputs.rows().map(|x| enc.net.forward(x)).collect();
    let mut emb = PointSet::empty(enc.dim());
    let mut radii = Vec::with_capacity(traces.len());
    for t in &traces {
        let v = t.output();
        let r = norm(v);
        radii.push(r);
        emb.push(&v.iter().map(|a| a / r).collect::<Vec<_>>());
    }
    let config = EmbeddingConfig::new(emb.clone(), labels.to_vec(), None)?;
    let aug = AugmentationMap::appended(&config)?;
    let (loss, g) = spread_batch_gradient(&emb, labels, &aug, weights)?;
    let mut grad = vec![0.0; enc.net.num_params()];
    for (i, t) in traces.iter().enumerate() {
        let u = emb.row(i);
        let gu = g.row(i);
        let gdot = dot(gu, u);
        // through v / |v|
        let dv: Vec<f64> = gu
            .iter()
            .zip(u)
            .map(|(g, u)| (g - gdot * u) / radii[i])
            .collect();
        enc.net.backward(t, &dv, &mut grad);
    }
    Ok((loss, grad))
}

/// Stratified batches: each holds `per_class` shuffled anchors of every class.
fn batches(data: &ToyDataset, per_class: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut members = data.class_members();
    for m in members.iter_mut() {
        m.shuffle(rng);
    }
    let count = members.iter().map(|m| m.len() / per_class).min().unwrap_or(0);
    (0..count)
        .map(|b| {
            members
                .iter()
                .flat_map(|m| m[b * per_class..(b + 1) * per_class].iter().copied())
                .collect()
        })
        .collect()
}

/// Plain SGD with a fixed learning rate. Returns the encoder and the mean
/// batch loss of every epoch.
pub fn train_encoder(data: &ToyDataset, cfg: &EncoderTraining) -> Result<(Encoder, Vec<f64>)> {
    if cfg.per_class < 2 {
        return Err(Error::Domain("each batch needs at least 2 anchors per class".into()));
    }
    if data.class_members().iter().any(|m| m.len() < cfg.per_class) {
        return Err(Error::InsufficientData(format!(
            "some class has fewer than {} points",
            cfg.per_class
        )));
    }
    let weights = cfg.effective_weights()?;
    let mut enc = Encoder::new(data.input_dim(), &cfg.hidden, cfg.dim, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_a11);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        let plan = batches(data, cfg.per_class, &mut rng);
        for batch in &plan {
            let (inputs, labels) = batch_inputs(data, batch, cfg.epsilon, &mut rng)?;
            let (loss, grad) = batch_loss_and_grad(&enc, &inputs, &labels, weights)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingFailure {
                    epoch,
                    detail: format!("batch loss {}", loss),
                });
            }
            enc.net.step(&grad, cfg.lr);
            if !enc.net.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    detail: "non-finite parameters".into(),
                });
            }
            total += loss;
        }
        history.push(total / plan.len().max(1) as f64);
    }
    Ok((enc, history))
}

/// Anchors followed by one ε-ball augmentation per anchor.
pub fn batch_inputs(
    data: &ToyDataset,
    batch: &[usize],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(PointSet, Vec<usize>)> {
    let mut inputs = PointSet::empty(data.input_dim());
    let mut labels = Vec::with_capacity(2 * batch.len());
    for &i in batch {
        inputs.push(data.inputs.row(i));
        labels.push(data.class_labels[i]);
    }
    for &i in batch {
        inputs.push(&augment_with(data.inputs.row(i), epsilon, rng)?);
        labels.push(data.class_labels[i]);
    }
    Ok((inputs, labels))
}
