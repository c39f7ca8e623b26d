//! Seeded Lloyd k-means with k-means++ seeding.
//!
//! Exact ties (equidistant centroids, all-zero seeding weights) are broken
//! uniformly at random from the restart's generator, so fully coincident
//! inputs split at random rather than into one cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sphere::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: 100,
            restarts: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: PointSet,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(points: &PointSet, cfg: &KMeansConfig) -> Result<KMeansFit> {
    if cfg.k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if points.len() < cfg.k {
        return Err(Error::Domain(format!(
            "k = {} exceeds the number of points {}",
            cfg.k,
            points.len()
        )));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(r as u64));
        let fit = lloyd(points, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(points: &PointSet, k: usize, rng: &mut ChaCha8Rng) -> PointSet {
    let n = points.len();
    let mut centroids = PointSet::empty(points.dim());
    centroids.push(points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = points.rows().map(|p| sq(p, centroids.row(0))).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points.row(pick));
        let c = centroids.len() - 1;
        for (i, p) in points.rows().enumerate() {
            d2[i] = d2[i].min(sq(p, centroids.row(c)));
        }
    }
    centroids
}

fn assign(points: &PointSet, centroids: &PointSet, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let mut out = Vec::with_capacity(points.len());
    let mut inertia = 0.0;
    let mut ties = Vec::new();
    for p in points.rows() {
        let mut best = f64::INFINITY;
        ties.clear();
        for (c, q) in centroids.rows().enumerate() {
            let d = sq(p, q);
            if d < best {
                best = d;
                ties.clear();
                ties.push(c);
            } else if d == best {
                ties.push(c);
            }
        }
        let c = if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        };
        out.push(c);
        inertia += best;
    }
    (out, inertia)
}

fn lloyd(points: &PointSet, cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> KMeansFit {
    let d = points.dim();
    let mut centroids = plus_plus_init(points, cfg.k, rng);
    let (mut assignments, mut inertia) = assign(points, &centroids, rng);
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        iterations = it;
        let mut sums = vec![0.0; cfg.k * d];
        let mut counts = vec![0usize; cfg.k];
        for (p, &c) in points.rows().zip(&assignments) {
            counts[c] += 1;
            sums[c * d..(c + 1) * d]
                .iter_mut()
                .zip(p)
                .for_each(|(s, x)| *s += x);
        }
        for c in 0..cfg.k {
            // empty clusters keep their previous centroid
            if counts[c] > 0 {
                let row = centroids.row_mut(c);
                for j in 0..d {
                    row[j] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
        let (next, next_inertia) = assign(points, &centroids, rng);
        let changed = next != assignments;
        assignments = next;
        inertia = next_inertia;
        if !changed {
            break;
        }
    }
    KMeansFit {
        assignments,
        centroids,
        inertia,
        iterations,
    }
}
