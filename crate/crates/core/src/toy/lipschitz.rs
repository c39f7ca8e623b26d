//! Distance pairs behind the encoder, decoder and augmentation slopes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::autoencoder::Autoencoder;
use super::data::augment_with;
use super::encoder::Encoder;
use crate::error::{Error, Result};
use crate::numeric::dist;
use crate::sphere::PointSet;

/// Random index pairs `(i, j)`, `i != j`.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect())
}

/// `(|x_i - x_j|, |f(x_i) - f(x_j)|)`.
pub fn encoder_pairs(enc: &Encoder, inputs: &PointSet, pairs: &[(usize, usize)]) -> Vec<(f64, f64)> {
    pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (inputs.row(i), inputs.row(j));
            (dist(a, b), dist(&enc.embed(a), &enc.embed(b)))
        })
        .collect()
}

/// `(|g(f(x_i)) - g(f(x_j))|, |f(x_i) - f(x_j)|)` for one autoencoder.
pub fn decoder_reverse_pairs(ae: &Autoencoder, inputs: &PointSet, pairs: &[(usize, usize)]) -> Vec<(f64, f64)> {
    pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (inputs.row(i), inputs.row(j));
            let (ca, cb) = (ae.encode(a), ae.encode(b));
            let (ra, rb) = (ae.decoder.apply(&ca), ae.decoder.apply(&cb));
            (dist(&ra, &rb), dist(&ca, &cb))
        })
        .collect()
}

/// For every anchor, `per_anchor` augmentations; keeps the one with the
/// largest embedding-to-input distance ratio.
pub fn augmentation_pairs(
    enc: &Encoder,
    inputs: &PointSet,
    anchors: &[usize],
    epsilon: f64,
    per_anchor: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(anchors.len());
    for &i in anchors {
        let x = inputs.row(i);
        let fx = enc.embed(x);
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..per_anchor {
            let a = augment_with(x, epsilon, &mut rng)?;
            let dx = dist(x, &a);
            if dx == 0.0 {
                continue;
            }
            let pair = (dx, dist(&fx, &enc.embed(&a)));
            if best.is_none_or(|b| pair.1 / pair.0 > b.1 / b.0) {
                best = Some(pair);
            }
        }
        if let Some(b) = best {
            out.push(b);
        }
    }
    Ok(out)
}
