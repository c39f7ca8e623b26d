//! Representation metrics: class spread, subclass tightness and separation,
//! mean-classifier transfer, subclass recovery, Lipschitz slopes and the
//! class-fixing permutation gap.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::loss::{asymptotic_empirical, spread_batch, AugmentationMap, LossWeights};
use crate::numeric::{dist, dot};
use crate::sphere::{subclass_to_class, EmbeddingConfig, PointSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpread {
    /// `s_f(y)` indexed by class.
    pub per_class: Vec<f64>,
    pub mean: f64,
}

fn centroid(points: &PointSet, members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points.dim()];
    for &i in members {
        c.iter_mut().zip(points.row(i)).for_each(|(a, x)| *a += x);
    }
    let m = members.len() as f64;
    c.iter_mut().for_each(|a| *a /= m);
    c
}

fn groups(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        out.entry(l).or_default().push(i);
    }
    out
}

/// Mean distance to the group centroid and mean squared distance.
fn dispersion(points: &PointSet, members: &[usize]) -> (f64, f64) {
    let c = centroid(points, members);
    let m = members.len() as f64;
    let (mut s, mut v) = (0.0, 0.0);
    for &i in members {
        let r = dist(points.row(i), &c);
        s += r;
        v += r * r;
    }
    (s / m, v / m)
}

/// Spread of arbitrary (not necessarily unit) embeddings grouped by `labels`.
pub fn spread_of(points: &PointSet, labels: &[usize]) -> Result<ClassSpread> {
    if labels.len() != points.len() {
        return Err(Error::Label(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let g = groups(labels);
    if g.len() != k || k == 0 {
        return Err(Error::Label("every class in 0..K must be non-empty".into()));
    }
    let per_class: Vec<f64> = g.values().map(|m| dispersion(points, m).0).collect();
    let mean = per_class.iter().sum::<f64>() / k as f64;
    Ok(ClassSpread { per_class, mean })
}

pub fn class_spread(config: &EmbeddingConfig) -> ClassSpread {
    spread_of(config.points(), config.class_labels()).expect("validated configuration")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclassStats {
    pub subclass: usize,
    pub class: usize,
    pub count: usize,
    /// Mean distance to the subclass centroid.
    pub sigma: f64,
    /// Mean squared distance to the subclass centroid.
    pub var: f64,
}

pub fn subclass_stats_of(
    points: &PointSet,
    class_labels: &[usize],
    subclass_labels: &[usize],
) -> Result<Vec<SubclassStats>> {
    if subclass_labels.len() != points.len() || class_labels.len() != points.len() {
        return Err(Error::Label("label count does not match point count".into()));
    }
    let map = subclass_to_class(subclass_labels, class_labels)?;
    Ok(groups(subclass_labels)
        .into_iter()
        .map(|(z, m)| {
            let (sigma, var) = dispersion(points, &m);
            SubclassStats {
                subclass: z,
                class: map[&z],
                count: m.len(),
                sigma,
                var,
            }
        })
        .collect())
}

pub fn subclass_stats(config: &EmbeddingConfig) -> Result<Vec<SubclassStats>> {
    let sub = config
        .subclass_labels()
        .ok_or_else(|| Error::Label("configuration has no subclass labels".into()))?;
    subclass_stats_of(config.points(), config.class_labels(), sub)
}

pub fn subclass_sigma(config: &EmbeddingConfig) -> Result<BTreeMap<usize, f64>> {
    Ok(subclass_stats(config)?
        .into_iter()
        .map(|s| (s.subclass, s.sigma))
        .collect())
}

pub fn subclass_var(config: &EmbeddingConfig) -> Result<BTreeMap<usize, f64>> {
    Ok(subclass_stats(config)?
        .into_iter()
        .map(|s| (s.subclass, s.var))
        .collect())
}

/// `delta_f(z, z')` with `p(z|y)` from empirical counts.
pub fn delta_separation(config: &EmbeddingConfig, z: usize, z2: usize) -> Result<f64> {
    let stats = subclass_stats(config)?;
    let find = |id: usize| {
        stats
            .iter()
            .find(|s| s.subclass == id)
            .ok_or_else(|| Error::Label(format!("unknown subclass {}", id)))
    };
    let (a, b) = (find(z)?, find(z2)?);
    if a.class != b.class {
        return Err(Error::Mismatch(format!(
            "subclass {} is in class {} but {} is in class {}",
            z, a.class, z2, b.class
        )));
    }
    let n_y = config.class_counts()[a.class] as f64;
    let s = class_spread(config).per_class[a.class];
    let pa = a.count as f64 / n_y;
    let pb = b.count as f64 / n_y;
    Ok((s - pa * pa * a.sigma - pb * pb * b.sigma) / (pa * pb))
}

/// Largest `sigma_f(z) / s_f(y(z))` over subclasses whose class spread
/// exceeds `cutoff`; `None` when no class qualifies.
pub fn max_sigma_spread_ratio(
    points: &PointSet,
    class_labels: &[usize],
    subclass_labels: &[usize],
    cutoff: f64,
) -> Result<Option<f64>> {
    let spread = spread_of(points, class_labels)?;
    let stats = subclass_stats_of(points, class_labels, subclass_labels)?;
    Ok(stats
        .iter()
        .filter(|s| spread.per_class[s.class] > cutoff)
        .map(|s| s.sigma / spread.per_class[s.class])
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r)))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanClassifier {
    /// Subclass ids in increasing order.
    pub subclasses: Vec<usize>,
    /// Row `i` is `W_z` for `subclasses[i]`.
    pub weights: PointSet,
    pub counts: Vec<usize>,
}

impl MeanClassifier {
    pub fn index_of(&self, z: usize) -> Option<usize> {
        self.subclasses.binary_search(&z).ok()
    }

    pub fn weight(&self, z: usize) -> Option<&[f64]> {
        self.index_of(z).map(|i| self.weights.row(i))
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights.rows().map(|w| dot(x, w)).collect()
    }
}

/// `W_z` = arithmetic mean of the embeddings labeled `z`.
pub fn mean_classifier(points: &PointSet, subclass_labels: &[usize]) -> Result<MeanClassifier> {
    if subclass_labels.len() != points.len() {
        return Err(Error::Label("label count does not match point count".into()));
    }
    if points.is_empty() {
        return Err(Error::InsufficientData("no labeled embeddings".into()));
    }
    let g = groups(subclass_labels);
    let mut weights = PointSet::empty(points.dim());
    let mut counts = Vec::with_capacity(g.len());
    for m in g.values() {
        weights.push(&centroid(points, m));
        counts.push(m.len());
    }
    Ok(MeanClassifier {
        subclasses: g.keys().copied().collect(),
        weights,
        counts,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma <= 1.0 {
        return Err(Error::Domain(format!("gamma must exceed 1, got {}", gamma)));
    }
    Ok(())
}

/// Fraction of `points` (all of subclass `z`) whose logit gap
/// `f(x) . (W_z - W_z')` is below `log gamma`.
pub fn gamma_margin_error(points: &PointSet, w_z: &[f64], w_other: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if points.is_empty() {
        return Err(Error::InsufficientData("no evaluation points".into()));
    }
    if w_z.len() != points.dim() || w_other.len() != points.dim() {
        return Err(Error::Shape("classifier width differs from embedding width".into()));
    }
    let diff: Vec<f64> = w_z.iter().zip(w_other).map(|(a, b)| a - b).collect();
    let lg = gamma.ln();
    let bad = points.rows().filter(|x| dot(x, &diff) < lg).count();
    Ok(bad as f64 / points.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclassTransfer {
    pub subclass: usize,
    pub class: usize,
    /// `m_z`, labeled examples behind `W_z`.
    pub train_count: usize,
    pub eval_count: usize,
    /// Worst case over sibling subclasses of the same class.
    pub margin_error: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub gamma: f64,
    pub classifier: MeanClassifier,
    pub per_subclass: Vec<SubclassTransfer>,
    /// Fraction of eval points whose argmax over the subclasses of their own
    /// coarse class is correct.
    pub accuracy: f64,
    /// Per eval point: predicted subclass and whether it met the margin.
    pub predictions: Vec<(usize, bool)>,
}

/// A labeled split of embeddings.
#[derive(Debug, Clone, Copy)]
pub struct LabeledEmbeddings<'a> {
    pub points: &'a PointSet,
    pub class_labels: &'a [usize],
    pub subclass_labels: &'a [usize],
}

impl LabeledEmbeddings<'_> {
    fn check(&self) -> Result<()> {
        let n = self.points.len();
        if self.class_labels.len() != n || self.subclass_labels.len() != n {
            return Err(Error::Label("label count does not match point count".into()));
        }
        Ok(())
    }
}

/// Mean classifiers from `train`, margin errors and accuracy on `eval`.
pub fn transfer_report(
    train: LabeledEmbeddings<'_>,
    eval: LabeledEmbeddings<'_>,
    gamma: f64,
) -> Result<TransferReport> {
    check_gamma(gamma)?;
    train.check()?;
    eval.check()?;
    if train.points.dim() != eval.points.dim() {
        return Err(Error::Shape("train and eval widths differ".into()));
    }
    let map = subclass_to_class(train.subclass_labels, train.class_labels)?;
    let eval_map = subclass_to_class(eval.subclass_labels, eval.class_labels)?;
    for (z, y) in &eval_map {
        if map.get(z) != Some(y) {
            return Err(Error::InsufficientData(format!(
                "subclass {} is missing from the labeled split",
                z
            )));
        }
    }
    for z in map.keys() {
        if !eval_map.contains_key(z) {
            return Err(Error::InsufficientData(format!(
                "subclass {} is missing from the evaluation split",
                z
            )));
        }
    }
    let clf = mean_classifier(train.points, train.subclass_labels)?;
    let siblings = |z: usize| -> Vec<usize> {
        let y = map[&z];
        map.iter()
            .filter(|&(&w, &c)| c == y && w != z)
            .map(|(&w, _)| clf.index_of(w).expect("classifier covers subclass"))
            .collect()
    };
    let lg = gamma.ln();
    let mut predictions = Vec::with_capacity(eval.points.len());
    let mut per: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (i, x) in eval.points.rows().enumerate() {
        let z = eval.subclass_labels[i];
        let zi = clf.index_of(z).expect("checked above");
        let logits = clf.logits(x);
        let sib = siblings(z);
        let gap = sib
            .iter()
            .map(|&s| logits[zi] - logits[s])
            .fold(f64::INFINITY, f64::min);
        // own-class candidates in increasing id order; ties go to the lowest id
        let mut candidates = sib.clone();
        candidates.push(zi);
        candidates.sort_unstable();
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            if logits[c] > logits[best] {
                best = c;
            }
        }
        let margin_ok = gap >= lg;
        predictions.push((clf.subclasses[best], margin_ok));
        let e = per.entry(z).or_insert((0, 0, 0));
        e.0 += 1;
        if !margin_ok {
            e.1 += 1;
        }
        if best == zi {
            e.2 += 1;
        }
    }
    let per_subclass: Vec<SubclassTransfer> = per
        .iter()
        .map(|(&z, &(n, bad, good))| SubclassTransfer {
            subclass: z,
            class: map[&z],
            train_count: clf.counts[clf.index_of(z).unwrap()],
            eval_count: n,
            margin_error: bad as f64 / n as f64,
            accuracy: good as f64 / n as f64,
        })
        .collect();
    let correct: usize = per.values().map(|v| v.2).sum();
    Ok(TransferReport {
        gamma,
        classifier: clf,
        per_subclass,
        accuracy: correct as f64 / eval.points.len().max(1) as f64,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    /// Macro F1 over the subclasses of each class.
    pub per_class_f1: Vec<f64>,
    /// Mean F1 over all subclasses.
    pub overall_f1: f64,
    /// Cluster index within its class for every point.
    pub assignments: Vec<usize>,
}

/// k-means within each coarse class, clusters matched to true subclasses by
/// the best permutation.
pub fn subclass_recovery(
    points: &PointSet,
    class_labels: &[usize],
    true_subclass: &[usize],
    k: usize,
    seed: u64,
) -> Result<RecoveryReport> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if class_labels.len() != points.len() || true_subclass.len() != points.len() {
        return Err(Error::Label("label count does not match point count".into()));
    }
    subclass_to_class(true_subclass, class_labels)?;
    let mut assignments = vec![0usize; points.len()];
    let mut per_class_f1 = Vec::new();
    let mut all_f1 = Vec::new();
    for (y, members) in groups(class_labels) {
        if members.len() < k {
            return Err(Error::Domain(format!(
                "k = {} exceeds the {} points of class {}",
                k,
                members.len(),
                y
            )));
        }
        let sub = points.select(&members);
        let fit = kmeans(&sub, &KMeansConfig::new(k, seed.wrapping_add(y as u64)))?;
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = fit.assignments[j];
        }
        let truth: Vec<usize> = members.iter().map(|&i| true_subclass[i]).collect();
        let f1s = matched_f1(&fit.assignments, &truth, k);
        per_class_f1.push(f1s.iter().sum::<f64>() / f1s.len() as f64);
        all_f1.extend(f1s);
    }
    let overall_f1 = all_f1.iter().sum::<f64>() / all_f1.len() as f64;
    Ok(RecoveryReport {
        per_class_f1,
        overall_f1,
        assignments,
    })
}

/// Per-true-subclass F1 under the one-to-one cluster matching that
/// maximises their sum. Subclasses left without a cluster score 0.
pub fn matched_f1(clusters: &[usize], truth: &[usize], k: usize) -> Vec<f64> {
    let ids: Vec<usize> = groups(truth).keys().copied().collect();
    let m = ids.len();
    let k = k.max(clusters.iter().map(|&c| c + 1).max().unwrap_or(0));
    let mut cluster_sizes = vec![0usize; k];
    for &c in clusters {
        cluster_sizes[c] += 1;
    }
    // table[s][c]
    let mut table = vec![vec![0.0; k]; m];
    for (si, &s) in ids.iter().enumerate() {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == s).collect();
        for c in 0..k {
            let inter = members.iter().filter(|&&i| clusters[i] == c).count();
            let denom = members.len() + cluster_sizes[c];
            if denom > 0 {
                table[si][c] = 2.0 * inter as f64 / denom as f64;
            }
        }
    }
    // enumerate injections from the smaller side into the larger one
    let transpose = m > k;
    let (rows, cols) = if transpose { (k, m) } else { (m, k) };
    let score = |r: usize, c: usize| if transpose { table[c][r] } else { table[r][c] };
    let mut used = vec![false; cols];
    let mut current = vec![0usize; rows];
    let mut best = current.clone();
    let mut best_score = f64::NEG_INFINITY;
    search(0, rows, cols, &score, &mut used, &mut current, 0.0, &mut best, &mut best_score);
    let mut out = vec![0.0; m];
    for r in 0..rows {
        let (s, c) = if transpose { (best[r], r) } else { (r, best[r]) };
        out[s] = table[s][c];
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    r: usize,
    rows: usize,
    cols: usize,
    score: &dyn Fn(usize, usize) -> f64,
    used: &mut [bool],
    current: &mut [usize],
    acc: f64,
    best: &mut Vec<usize>,
    best_score: &mut f64,
) {
    if r == rows {
        if acc > *best_score {
            *best_score = acc;
            best.copy_from_slice(current);
        }
        return;
    }
    for c in 0..cols {
        if !used[c] {
            used[c] = true;
            current[r] = c;
            search(r + 1, rows, cols, score, used, current, acc + score(r, c), best, best_score);
            used[c] = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipschitzMode {
    Encoder,
    DecoderReverse,
    Augmentation,
}

impl LipschitzMode {
    pub fn name(&self) -> &'static str {
        match self {
            LipschitzMode::Encoder => "encoder",
            LipschitzMode::DecoderReverse => "decoder-reverse",
            LipschitzMode::Augmentation => "augmentation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub constant: f64,
    pub mode: LipschitzMode,
    pub pairs: usize,
    pub cutoff: f64,
}

pub const DEFAULT_LIPSCHITZ_CUTOFF: f64 = 1e-6;

/// Slope of the steepest line from the origin through the
/// `(input_distance, output_distance)` scatter.
pub fn estimate_lipschitz(
    mode: LipschitzMode,
    pairs: &[(f64, f64)],
    cutoff: f64,
) -> Result<LipschitzEstimate> {
    let kept: Vec<&(f64, f64)> = pairs.iter().filter(|(a, _)| *a > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateSample(format!(
            "no pair has input distance above {}",
            cutoff
        )));
    }
    let constant = kept.iter().map(|(a, b)| b / a).fold(0.0, f64::max);
    Ok(LipschitzEstimate {
        constant,
        mode,
        pairs: kept.len(),
        cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationGap {
    pub spread_batch: f64,
    /// `None` when the configuration is not class-balanced.
    pub asymptotic: Option<f64>,
}

/// Moves each (anchor, augmentation) embedding pair to the slot of another
/// anchor of the same class according to `perm_of_anchor`.
pub fn apply_pair_permutation(
    config: &EmbeddingConfig,
    aug: &AugmentationMap,
    source_of: &[usize],
) -> Result<EmbeddingConfig> {
    let pairs = aug.pairs();
    if source_of.len() != pairs.len() {
        return Err(Error::Shape("permutation length differs from anchor count".into()));
    }
    let mut pts = config.points().clone();
    for (slot, &src) in source_of.iter().enumerate() {
        let (a, g) = pairs[slot];
        let (sa, sg) = pairs[src];
        pts.row_mut(a).copy_from_slice(config.point(sa));
        pts.row_mut(g).copy_from_slice(config.point(sg));
    }
    config.with_points(pts)
}

fn random_class_fixing(config: &EmbeddingConfig, aug: &AugmentationMap, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let labels = config.class_labels();
    let pairs = aug.pairs();
    let mut source: Vec<usize> = (0..pairs.len()).collect();
    let by_class = groups(&pairs.iter().map(|&(a, _)| labels[a]).collect::<Vec<_>>());
    for slots in by_class.values() {
        let mut shuffled = slots.clone();
        shuffled.shuffle(rng);
        for (s, t) in slots.iter().zip(shuffled) {
            source[*s] = t;
        }
    }
    source
}

fn gaps(
    other: &EmbeddingConfig,
    aug: &AugmentationMap,
    weights: LossWeights,
    base: (f64, Option<f64>),
) -> Result<(f64, Option<f64>)> {
    let s = (spread_batch(other, aug, weights)? - base.0).abs();
    let a = match base.1 {
        Some(b) => Some((asymptotic_empirical(other, weights)? - b).abs()),
        None => None,
    };
    Ok((s, a))
}

fn base_losses(config: &EmbeddingConfig, aug: &AugmentationMap, weights: LossWeights) -> Result<(f64, Option<f64>)> {
    let s = spread_batch(config, aug, weights)?;
    let a = if config.balanced_class_size().is_some() {
        Some(asymptotic_empirical(config, weights)?)
    } else {
        None
    };
    Ok((s, a))
}

/// Largest loss change over `trials` random class-fixing permutations.
pub fn permutation_gap(
    config: &EmbeddingConfig,
    aug: &AugmentationMap,
    weights: LossWeights,
    trials: usize,
    seed: u64,
) -> Result<PermutationGap> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let base = base_losses(config, aug, weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PermutationGap {
        spread_batch: 0.0,
        asymptotic: base.1.map(|_| 0.0),
    };
    for _ in 0..trials {
        let source = random_class_fixing(config, aug, &mut rng);
        let permuted = apply_pair_permutation(config, aug, &source)?;
        let (s, a) = gaps(&permuted, aug, weights, base)?;
        out.spread_batch = out.spread_batch.max(s);
        out.asymptotic = match (out.asymptotic, a) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
    }
    Ok(out)
}

/// Loss change when the embedding pairs of anchor slots `i` and `j` trade
/// places while labels stay put. Not class-fixing when their classes differ.
pub fn swap_gap(
    config: &EmbeddingConfig,
    aug: &AugmentationMap,
    weights: LossWeights,
    i: usize,
    j: usize,
) -> Result<PermutationGap> {
    let n = aug.pairs().len();
    if i >= n || j >= n {
        return Err(Error::Domain("anchor slot out of range".into()));
    }
    let base = base_losses(config, aug, weights)?;
    let mut source: Vec<usize> = (0..n).collect();
    source.swap(i, j);
    let swapped = apply_pair_permutation(config, aug, &source)?;
    let (s, a) = gaps(&swapped, aug, weights, base)?;
    Ok(PermutationGap {
        spread_batch: s,
        asymptotic: a,
    })
}
