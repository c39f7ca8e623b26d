//! Concatenated encoder and class-routed autoencoder representation, and the
//! coarse-to-fine evaluation protocol.

use super::autoencoder::ClassAutoencoders;
use super::data::ToyDataset;
use super::encoder::Encoder;
use crate::error::{Error, Result};
use crate::metrics::{mean_classifier, transfer_report, LabeledEmbeddings, MeanClassifier, TransferReport};
use crate::numeric::dot;
use crate::sphere::PointSet;

/// Which autoencoder a point is sent to.
#[derive(Debug, Clone, PartialEq)]
pub enum Routing {
    TrueClass,
    /// Argmax of a mean classifier over coarse classes on encoder outputs.
    Predicted(MeanClassifier),
}

impl Routing {
    /// Coarse mean classifier fitted on `data`'s encoder embeddings.
    pub fn predicted(encoder: &Encoder, data: &ToyDataset) -> Result<Self> {
        let emb = encoder.embed_all(&data.inputs);
        Ok(Routing::Predicted(mean_classifier(&emb, &data.class_labels)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thanos<'a> {
    pub encoder: &'a Encoder,
    pub autoencoders: &'a ClassAutoencoders,
    pub routing: Routing,
}

impl Thanos<'_> {
    pub fn dim(&self) -> usize {
        self.encoder.dim() + self.autoencoders.bottleneck()
    }

    /// `[f(x) | f_AE,y(x)]`.
    pub fn compose(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        if x.len() != self.encoder.net.input_dim() {
            return Err(Error::Shape(format!(
                "input width {} but encoder expects {}",
                x.len(),
                self.encoder.net.input_dim()
            )));
        }
        let mut out = self.encoder.embed(x);
        let route = match &self.routing {
            Routing::TrueClass => class,
            Routing::Predicted(clf) => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (i, w) in clf.weights.rows().enumerate() {
                    let v = dot(&out, w);
                    if v > best_v {
                        best_v = v;
                        best = i;
                    }
                }
                clf.subclasses[best]
            }
        };
        out.extend(self.autoencoders.encode(x, route)?);
        Ok(out)
    }

    pub fn compose_all(&self, data: &ToyDataset) -> Result<PointSet> {
        let mut out = PointSet::empty(self.dim());
        for (i, x) in data.inputs.rows().enumerate() {
            out.push(&self.compose(x, data.class_labels[i])?);
        }
        Ok(out)
    }
}

/// Mean classifiers from the embedded `labeled` split, errors and accuracy
/// on the embedded `eval` split.
pub fn coarse_to_fine_eval<F>(
    embed: F,
    labeled: &ToyDataset,
    eval: &ToyDataset,
    gamma: f64,
) -> Result<TransferReport>
where
    F: Fn(&ToyDataset) -> Result<PointSet>,
{
    let a = embed(labeled)?;
    let b = embed(eval)?;
    transfer_report(
        LabeledEmbeddings {
            points: &a,
            class_labels: &labeled.class_labels,
            subclass_labels: &labeled.subclass_labels,
        },
        LabeledEmbeddings {
            points: &b,
            class_labels: &eval.class_labels,
            subclass_labels: &eval.subclass_labels,
        },
        gamma,
    )
}
