//! Batch contrastive losses and the empirical asymptotic loss.
//!
//! Batch losses use the similarity `sigma(x, x') = exp(u . u' / tau)`:
//!
//! - [`supcon_batch`]: per positive, one positive plus all negatives in the
//!   denominator, averaged over positives and anchors.
//! - [`cnce_batch`]: augmentation in the numerator, same-class anchors (self
//!   excluded) in the denominator.
//! - [`spread_batch`]: `(1 - alpha) * supcon + alpha * cnce`.
//!
//! When an [`AugmentationMap`] is present the batch is the set of anchors;
//! augmentation embeddings only enter the cNCE numerators.
//!
//! [`asymptotic_empirical`] is the three-term estimator over a balanced
//! configuration using `exp(-|u - u'|^2 / 2 tau)`, with same-class sums
//! including the self pair. Distances are `2 - 2 u . u'` clamped to `[0, 4]`
//! and the self distance is exactly zero.

use crate::error::{Error, Result};
use crate::numeric::{dot, KahanSum};
use crate::sphere::{EmbeddingConfig, PointSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    alpha: f64,
    tau: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {} outside [0, 1]", alpha)));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau = {} must be positive", tau)));
        }
        Ok(Self { alpha, tau })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Anchor index -> index of its augmentation embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationMap {
    pairs: Vec<(usize, usize)>,
}

impl AugmentationMap {
    /// Checks class agreement and that augmentation slots are distinct from
    /// each other and from every anchor.
    pub fn new(config: &EmbeddingConfig, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = config.len();
        let labels = config.class_labels();
        let mut used = vec![0u8; n];
        for &(a, _) in &pairs {
            if a >= n {
                return Err(Error::IncompleteAugmentation(format!("anchor {} out of range", a)));
            }
            if used[a] != 0 {
                return Err(Error::IncompleteAugmentation(format!("anchor {} listed twice", a)));
            }
            used[a] = 1;
        }
        for &(a, g) in &pairs {
            if g >= n {
                return Err(Error::IncompleteAugmentation(format!(
                    "augmentation {} of anchor {} out of range",
                    g, a
                )));
            }
            if used[g] != 0 {
                return Err(Error::IncompleteAugmentation(format!(
                    "augmentation slot {} is shared or is an anchor",
                    g
                )));
            }
            used[g] = 2;
            if labels[a] != labels[g] {
                return Err(Error::Label(format!(
                    "augmentation {} has class {} but anchor {} has class {}",
                    g, labels[g], a, labels[a]
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Anchors `0..n` with augmentations at `n..2n`.
    pub fn appended(config: &EmbeddingConfig) -> Result<Self> {
        let n = config.len();
        if n % 2 != 0 {
            return Err(Error::IncompleteAugmentation(
                "appended layout needs an even number of points".into(),
            ));
        }
        let half = n / 2;
        Self::new(config, (0..half).map(|i| (i, half + i)).collect())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn anchors(&self) -> Vec<usize> {
        self.pairs.iter().map(|&(a, _)| a).collect()
    }

    pub fn augmentation_of(&self, anchor: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(a, _)| a == anchor).map(|&(_, g)| g)
    }
}

#[inline]
fn sq_dist_on_sphere(u: &[f64], v: &[f64]) -> f64 {
    (2.0 - 2.0 * dot(u, v)).clamp(0.0, 4.0)
}

/// SupCon variant over the anchors `batch` of `points` with labels `labels`.
fn supcon_over(points: &PointSet, labels: &[usize], batch: &[usize], tau: f64) -> Result<f64> {
    let mut total = KahanSum::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &i in batch {
        pos.clear();
        neg.clear();
        for &j in batch {
            if j == i {
                continue;
            }
            let s = dot(points.row(i), points.row(j)) / tau;
            if labels[j] == labels[i] {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        if pos.is_empty() {
            return Err(Error::NoPositive { index: i });
        }
        if neg.is_empty() {
            return Err(Error::NoNegative { index: i });
        }
        let m = pos
            .iter()
            .chain(neg.iter())
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut neg_sum = KahanSum::new();
        for &s in &neg {
            neg_sum.add((s - m).exp());
        }
        let neg_sum = neg_sum.value();
        let mut term = KahanSum::new();
        for &s in &pos {
            // -log(e^s / (e^s + sum_neg)) = log(e^{s-m} + N) - (s - m)
            term.add(((s - m).exp() + neg_sum).ln() - (s - m));
        }
        total.add(term.value() / pos.len() as f64);
    }
    Ok(total.value() / batch.len() as f64)
}

fn cnce_over(
    points: &PointSet,
    labels: &[usize],
    aug: &AugmentationMap,
    tau: f64,
) -> Result<f64> {
    let anchors = aug.anchors();
    let mut total = KahanSum::new();
    let mut pos = Vec::new();
    for &(i, g) in aug.pairs() {
        pos.clear();
        for &j in &anchors {
            if j != i && labels[j] == labels[i] {
                pos.push(dot(points.row(i), points.row(j)) / tau);
            }
        }
        if pos.is_empty() {
            return Err(Error::NoPositive { index: i });
        }
        let num = dot(points.row(i), points.row(g)) / tau;
        let m = pos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut den = KahanSum::new();
        for &s in &pos {
            den.add((s - m).exp());
        }
        total.add(m + den.value().ln() - num);
    }
    Ok(total.value() / aug.pairs().len() as f64)
}

/// SupCon variant averaged over every point of `config`.
pub fn supcon_batch(config: &EmbeddingConfig, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let batch: Vec<usize> = (0..config.len()).collect();
    supcon_over(config.points(), config.class_labels(), &batch, tau)
}

/// Class-conditional InfoNCE averaged over the anchors of `aug`.
pub fn cnce_batch(config: &EmbeddingConfig, aug: &AugmentationMap, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if aug.pairs().is_empty() {
        return Err(Error::IncompleteAugmentation("no anchors".into()));
    }
    cnce_over(config.points(), config.class_labels(), aug, tau)
}

/// `(1 - alpha) * supcon(anchors) + alpha * cnce`.
pub fn spread_batch(
    config: &EmbeddingConfig,
    aug: &AugmentationMap,
    weights: LossWeights,
) -> Result<f64> {
    Ok(spread_batch_parts(config, aug, weights)?.total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadParts {
    pub supcon: f64,
    pub cnce: f64,
    pub total: f64,
}

pub fn spread_batch_parts(
    config: &EmbeddingConfig,
    aug: &AugmentationMap,
    weights: LossWeights,
) -> Result<SpreadParts> {
    if aug.pairs().is_empty() {
        return Err(Error::IncompleteAugmentation("no anchors".into()));
    }
    let anchors = aug.anchors();
    let supcon = supcon_over(config.points(), config.class_labels(), &anchors, weights.tau)?;
    let cnce = cnce_over(config.points(), config.class_labels(), aug, weights.tau)?;
    let a = weights.alpha;
    Ok(SpreadParts {
        supcon,
        cnce,
        total: (1.0 - a) * supcon + a * cnce,
    })
}

/// Gradient of [`spread_batch`] with respect to every point (ambient, no
/// projection), for raw points and labels. Returns `(loss, grad)` with `grad`
/// shaped like `points`.
pub fn spread_batch_gradient(
    points: &PointSet,
    labels: &[usize],
    aug: &AugmentationMap,
    weights: LossWeights,
) -> Result<(f64, PointSet)> {
    let tau = weights.tau;
    let a = weights.alpha;
    let d = points.dim();
    let anchors = aug.anchors();
    let b = anchors.len() as f64;
    let mut grad = PointSet::new(d, vec![0.0; points.len() * d])?;
    let mut loss_sup = KahanSum::new();
    let mut loss_nce = KahanSum::new();

    // d loss / d s_ij, accumulated as pairs; s_ij = u_i . u_j / tau
    let add_pair = |grad: &mut PointSet, i: usize, j: usize, coef: f64| {
        if coef == 0.0 {
            return;
        }
        let c = coef / tau;
        for k in 0..d {
            let ui = points.row(i)[k];
            let uj = points.row(j)[k];
            grad.row_mut(i)[k] += c * uj;
            grad.row_mut(j)[k] += c * ui;
        }
    };

    let mut pos: Vec<(usize, f64)> = Vec::new();
    let mut neg: Vec<(usize, f64)> = Vec::new();
    for &(i, g) in aug.pairs() {
        pos.clear();
        neg.clear();
        for &j in &anchors {
            if j == i {
                continue;
            }
            let s = dot(points.row(i), points.row(j)) / tau;
            if labels[j] == labels[i] {
                pos.push((j, s));
            } else {
                neg.push((j, s));
            }
        }
        if pos.is_empty() {
            return Err(Error::NoPositive { index: i });
        }
        let m = pos
            .iter()
            .chain(neg.iter())
            .map(|&(_, s)| s)
            .fold(f64::NEG_INFINITY, f64::max);

        if a < 1.0 {
            if neg.is_empty() {
                return Err(Error::NoNegative { index: i });
            }
            let w = (1.0 - a) / b;
            let np = pos.len() as f64;
            let neg_sum: f64 = neg.iter().map(|&(_, s)| (s - m).exp()).sum();
            let mut term = 0.0;
            let mut neg_coef = 0.0;
            for &(j, s) in &pos {
                let e = (s - m).exp();
                let den = e + neg_sum;
                term += den.ln() - (s - m);
                // d/ds_p: -(1/|P|)(1 - e/den)
                add_pair(&mut grad, i, j, -w / np * (1.0 - e / den));
                neg_coef += 1.0 / den;
            }
            for &(j, s) in &neg {
                add_pair(&mut grad, i, j, w / np * (s - m).exp() * neg_coef);
            }
            loss_sup.add(term / np);
        }
        if a > 0.0 {
            let w = a / b;
            let mp = pos.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
            let den: f64 = pos.iter().map(|&(_, s)| (s - mp).exp()).sum();
            let num = dot(points.row(i), points.row(g)) / tau;
            loss_nce.add(mp + den.ln() - num);
            add_pair(&mut grad, i, g, -w);
            for &(j, s) in &pos {
                add_pair(&mut grad, i, j, w * (s - mp).exp() / den);
            }
        }
    }
    let loss = (1.0 - a) * loss_sup.value() / b + a * loss_nce.value() / b;
    Ok((loss, grad))
}

/// Three-term empirical asymptotic loss of a balanced configuration.
pub fn asymptotic_empirical(config: &EmbeddingConfig, weights: LossWeights) -> Result<f64> {
    asymptotic_raw(config.points(), config.class_labels(), config.num_classes(), weights)
}

/// Same estimator on raw coordinates (used for finite differences, where rows
/// leave the sphere).
pub fn asymptotic_raw(
    points: &PointSet,
    labels: &[usize],
    num_classes: usize,
    weights: LossWeights,
) -> Result<f64> {
    let n_y = balanced_size(labels, num_classes)?;
    let tau = weights.tau;
    let a = weights.alpha;
    let n = points.len();
    let k = num_classes as f64;
    let ny = n_y as f64;

    let mut diff = KahanSum::new();
    let mut same = KahanSum::new();
    let mut align = KahanSum::new();
    let mut neg = Vec::with_capacity(n);
    let mut pos = Vec::with_capacity(n);
    for i in 0..n {
        neg.clear();
        pos.clear();
        for j in 0..n {
            let d2 = if i == j {
                0.0
            } else {
                sq_dist_on_sphere(points.row(i), points.row(j))
            };
            if labels[j] == labels[i] {
                pos.push(-d2 / (2.0 * tau));
                align.add(d2 / (2.0 * tau));
            } else {
                neg.push(-d2 / (2.0 * tau));
            }
        }
        diff.add(log_mean_exp(&neg, (k - 1.0) * ny));
        same.add(log_mean_exp(&pos, ny));
    }
    let nf = n as f64;
    Ok((1.0 - a) * diff.value() / nf + a * same.value() / nf
        + (1.0 - a) * align.value() / (k * ny * ny))
}

fn log_mean_exp(xs: &[f64], count: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = KahanSum::new();
    for &x in xs {
        s.add((x - m).exp());
    }
    m + (s.value() / count).ln()
}

fn balanced_size(labels: &[usize], num_classes: usize) -> Result<usize> {
    if num_classes < 2 {
        return Err(Error::Domain("the asymptotic loss needs K >= 2".into()));
    }
    let mut counts = vec![0usize; num_classes];
    for &c in labels {
        if c >= num_classes {
            return Err(Error::Label(format!("label {} >= K = {}", c, num_classes)));
        }
        counts[c] += 1;
    }
    let first = counts[0];
    if first == 0 || counts.iter().any(|&c| c != first) {
        return Err(Error::Unbalanced(format!("class counts {:?}", counts)));
    }
    Ok(first)
}

/// Ambient gradient of [`asymptotic_empirical`], one `d`-vector per point.
pub fn asymptotic_gradient(config: &EmbeddingConfig, weights: LossWeights) -> Result<PointSet> {
    Ok(asymptotic_value_and_gradient(
        config.points(),
        config.class_labels(),
        config.num_classes(),
        weights,
    )?
    .1)
}

/// Loss and ambient gradient in one pass over raw coordinates.
pub fn asymptotic_value_and_gradient(
    points: &PointSet,
    labels: &[usize],
    num_classes: usize,
    weights: LossWeights,
) -> Result<(f64, PointSet)> {
    let n_y = balanced_size(labels, num_classes)?;
    let tau = weights.tau;
    let a = weights.alpha;
    let n = points.len();
    let d = points.dim();
    let k = num_classes as f64;
    let ny = n_y as f64;
    let nf = n as f64;

    // kernel exponents e_ij = -d2_ij / 2 tau
    let mut expo = vec![0.0; n * n];
    let mut clamped = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let raw = 2.0 - 2.0 * dot(points.row(i), points.row(j));
                clamped[i * n + j] = !(0.0..=4.0).contains(&raw);
                expo[i * n + j] = -raw.clamp(0.0, 4.0) / (2.0 * tau);
            }
        }
    }

    // softmax weights over negatives (w) and same-class incl. self (v)
    let mut w = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    let mut diff = KahanSum::new();
    let mut same = KahanSum::new();
    let mut align = KahanSum::new();
    for i in 0..n {
        let row = &expo[i * n..(i + 1) * n];
        let mut mneg = f64::NEG_INFINITY;
        let mut mpos = f64::NEG_INFINITY;
        for j in 0..n {
            if labels[j] == labels[i] {
                mpos = mpos.max(row[j]);
                align.add(-row[j]);
            } else {
                mneg = mneg.max(row[j]);
            }
        }
        let mut sneg = 0.0;
        let mut spos = 0.0;
        for j in 0..n {
            if labels[j] == labels[i] {
                let e = (row[j] - mpos).exp();
                v[i * n + j] = e;
                spos += e;
            } else {
                let e = (row[j] - mneg).exp();
                w[i * n + j] = e;
                sneg += e;
            }
        }
        for j in 0..n {
            w[i * n + j] /= sneg;
            v[i * n + j] /= spos;
        }
        diff.add(mneg + (sneg / ((k - 1.0) * ny)).ln());
        same.add(mpos + (spos / ny).ln());
    }
    let loss = (1.0 - a) * diff.value() / nf + a * same.value() / nf
        + (1.0 - a) * align.value() / (k * ny * ny);

    // d e_ij / d u_i = u_j / tau (unclamped, i != j); d2 = 2 - 2 u.u'
    let mut grad = PointSet::new(d, vec![0.0; n * d])?;
    let c_align = -(1.0 - a) * 2.0 / (k * ny * ny * tau);
    for i in 0..n {
        for j in 0..n {
            if i == j || clamped[i * n + j] {
                continue;
            }
            let coef = if labels[j] == labels[i] {
                a / (nf * tau) * (v[i * n + j] + v[j * n + i]) + c_align
            } else {
                (1.0 - a) / (nf * tau) * (w[i * n + j] + w[j * n + i])
            };
            let uj = points.row(j).to_vec();
            grad.row_mut(i)
                .iter_mut()
                .zip(&uj)
                .for_each(|(g, x)| *g += coef * x);
        }
    }
    Ok((loss, grad))
}

/// Removes the radial component `(g . u) u` from each gradient row.
pub fn project_tangent(points: &PointSet, grad: &PointSet) -> PointSet {
    let mut out = grad.clone();
    for i in 0..points.len() {
        let u = points.row(i);
        let r = dot(grad.row(i), u);
        out.row_mut(i)
            .iter_mut()
            .zip(u)
            .for_each(|(g, x)| *g -= r * x);
    }
    out
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau = {} must be positive", tau)))
    }
}
