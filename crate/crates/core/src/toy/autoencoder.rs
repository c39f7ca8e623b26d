//! Per-class autoencoders trained on mean squared reconstruction error.

use super::data::ToyDataset;
use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::sphere::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
    /// Subtracted before encoding and added back after decoding.
    pub mean: Vec<f64>,
}

impl Autoencoder {
    pub fn bottleneck(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.encoder.apply(&c)
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.decoder.apply(&self.encode(x));
        r.iter_mut().zip(&self.mean).for_each(|(a, m)| *a += m);
        r
    }

    /// `(1/n) sum |g(f(x)) - x|^2`.
    pub fn reconstruction_loss(&self, inputs: &PointSet) -> f64 {
        if inputs.is_empty() {
            return 0.0;
        }
        let s: f64 = inputs
            .rows()
            .map(|x| {
                self.reconstruct(x)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        s / inputs.len() as f64
    }
}

/// One autoencoder per coarse class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAutoencoders {
    pub per_class: Vec<Autoencoder>,
}

impl ClassAutoencoders {
    pub fn bottleneck(&self) -> usize {
        self.per_class[0].bottleneck()
    }

    pub fn encode(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        let ae = self
            .per_class
            .get(class)
            .ok_or_else(|| Error::Label(format!("no autoencoder for class {}", class)))?;
        if x.len() != ae.mean.len() {
            return Err(Error::Shape(format!(
                "input width {} but autoencoder expects {}",
                x.len(),
                ae.mean.len()
            )));
        }
        Ok(ae.encode(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderTraining {
    pub bottleneck: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

/// Full-batch gradient descent on one set of inputs.
pub fn train_autoencoder(inputs: &PointSet, cfg: &AutoencoderTraining) -> Result<Autoencoder> {
    let p = inputs.dim();
    if inputs.is_empty() {
        return Err(Error::InsufficientData("no inputs for the autoencoder".into()));
    }
    if cfg.bottleneck == 0 || cfg.bottleneck > p {
        return Err(Error::Domain(format!(
            "bottleneck {} must lie in 1..={}",
            cfg.bottleneck, p
        )));
    }
    let n = inputs.len() as f64;
    let mut mean = vec![0.0; p];
    for x in inputs.rows() {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
    }
    let centered: Vec<Vec<f64>> = inputs
        .rows()
        .map(|x| x.iter().zip(&mean).map(|(a, m)| a - m).collect())
        .collect();
    let mut ew = vec![p];
    ew.extend_from_slice(&cfg.hidden);
    ew.push(cfg.bottleneck);
    let mut dw = vec![cfg.bottleneck];
    dw.extend(cfg.hidden.iter().rev());
    dw.push(p);
    let mut encoder = Mlp::new(&ew, cfg.seed)?;
    let mut decoder = Mlp::new(&dw, cfg.seed.wrapping_add(1))?;
    let mut ge = vec![0.0; encoder.num_params()];
    let mut gd = vec![0.0; decoder.num_params()];
    for epoch in 0..cfg.epochs {
        ge.iter_mut().for_each(|g| *g = 0.0);
        gd.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for x in &centered {
            let te = encoder.forward(x);
            let td = decoder.forward(te.output());
            let r: Vec<f64> = td.output().iter().zip(x).map(|(a, b)| a - b).collect();
            loss += r.iter().map(|v| v * v).sum::<f64>() / n;
            let d_out: Vec<f64> = r.iter().map(|v| 2.0 * v / n).collect();
            let d_code = decoder.backward(&td, &d_out, &mut gd);
            encoder.backward(&te, &d_code, &mut ge);
        }
        if !loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                detail: format!("reconstruction loss {}", loss),
            });
        }
        encoder.step(&ge, cfg.lr);
        decoder.step(&gd, cfg.lr);
    }
    if !encoder.is_finite() || !decoder.is_finite() {
        return Err(Error::TrainingFailure {
            epoch: cfg.epochs,
            detail: "non-finite parameters".into(),
        });
    }
    Ok(Autoencoder {
        encoder,
        decoder,
        mean,
    })
}

/// Class `y`'s autoencoder sees only the points of class `y`. Returns the
/// models and the final per-class reconstruction loss.
pub fn train_class_autoencoder(
    data: &ToyDataset,
    cfg: &AutoencoderTraining,
) -> Result<(ClassAutoencoders, Vec<f64>)> {
    let mut per_class = Vec::with_capacity(data.num_classes);
    let mut losses = Vec::with_capacity(data.num_classes);
    for (y, members) in data.class_members().iter().enumerate() {
        if members.is_empty() {
            return Err(Error::InsufficientData(format!("class {} is empty", y)));
        }
        let inputs = data.inputs.select(members);
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(1000 * y as u64);
        let ae = train_autoencoder(&inputs, &c)?;
        losses.push(ae.reconstruction_loss(&inputs));
        per_class.push(ae);
    }
    Ok((ClassAutoencoders { per_class }, losses))
}

/// One autoencoder on all data, shared by every class.
pub fn train_generic_autoencoder(
    data: &ToyDataset,
    cfg: &AutoencoderTraining,
) -> Result<(ClassAutoencoders, Vec<f64>)> {
    let ae = train_autoencoder(&data.inputs, cfg)?;
    let losses = data
        .class_members()
        .iter()
        .map(|m| ae.reconstruction_loss(&data.inputs.select(m)))
        .collect();
    Ok((
        ClassAutoencoders {
            per_class: vec![ae; data.num_classes],
        },
        losses,
    ))
}
