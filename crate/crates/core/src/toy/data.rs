//! Gaussian subclass mixtures and ε-ball augmentation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;
use crate::sphere::{random_unit_vector, PointSet};

/// Generator for `2K` subclasses; subclass `z` belongs to class `z / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub num_classes: usize,
    /// One center per subclass, each of the input width.
    pub centers: Vec<Vec<f64>>,
    /// Isotropic standard deviation per subclass.
    pub spreads: Vec<f64>,
    pub proportions: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl ToySpec {
    /// Two classes on `e0 = +-class_offset`, each split into two subclasses
    /// at `+-subclass_offset` along its own axis (`e1` for class 0, `e2` for
    /// class 1), isotropic `sigma`, balanced proportions.
    pub fn standard(
        input_dim: usize,
        class_offset: f64,
        subclass_offset: f64,
        sigma: f64,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim < 3 {
            return Err(Error::InvalidDimension(format!(
                "input width {} must be at least 3",
                input_dim
            )));
        }
        let mut centers = Vec::new();
        for y in 0..2 {
            for side in [-1.0, 1.0] {
                let mut c = vec![0.0; input_dim];
                c[0] = if y == 0 { -class_offset } else { class_offset };
                c[1 + y] = side * subclass_offset;
                centers.push(c);
            }
        }
        Ok(Self {
            num_classes: 2,
            centers,
            spreads: vec![sigma; 4],
            proportions: vec![0.25; 4],
            n,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    pub fn num_subclasses(&self) -> usize {
        self.centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = 2 * self.num_classes;
        if self.num_classes == 0 || self.centers.len() != m {
            return Err(Error::Domain(format!(
                "expected {} subclass centers, got {}",
                m,
                self.centers.len()
            )));
        }
        let p = self.input_dim();
        if p == 0 || self.centers.iter().any(|c| c.len() != p) {
            return Err(Error::Shape("subclass centers differ in width".into()));
        }
        if self.spreads.len() != m || self.spreads.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Domain("spreads must be non-negative, one per subclass".into()));
        }
        if self.proportions.len() != m
            || self.proportions.iter().any(|q| !(*q >= 0.0))
            || (self.proportions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Domain(format!(
                "proportions {:?} must be non-negative and sum to 1",
                self.proportions
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub inputs: PointSet,
    pub class_labels: Vec<usize>,
    pub subclass_labels: Vec<usize>,
    pub num_classes: usize,
}

impl ToyDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.dim()
    }

    pub fn subset(&self, idx: &[usize]) -> ToyDataset {
        ToyDataset {
            inputs: self.inputs.select(idx),
            class_labels: idx.iter().map(|&i| self.class_labels[i]).collect(),
            subclass_labels: idx.iter().map(|&i| self.subclass_labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Deterministic split: every `eval_every`-th point of each subclass goes
    /// to the second part.
    pub fn split(&self, eval_every: usize) -> Result<(ToyDataset, ToyDataset)> {
        if eval_every < 2 {
            return Err(Error::Domain("eval_every must be at least 2".into()));
        }
        let mut seen = std::collections::BTreeMap::new();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, &z) in self.subclass_labels.iter().enumerate() {
            let c = seen.entry(z).or_insert(0usize);
            if *c % eval_every == eval_every - 1 {
                b.push(i);
            } else {
                a.push(i);
            }
            *c += 1;
        }
        Ok((self.subset(&a), self.subset(&b)))
    }

    /// Indices of each class, in order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &c) in self.class_labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Header `p K n`, then `class subclass x...` per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.input_dim(), self.num_classes, self.len());
        for i in 0..self.len() {
            s.push_str(&format!("{} {}", self.class_labels[i], self.subclass_labels[i]));
            for &x in self.inputs.row(i) {
                s.push(' ');
                s.push_str(&fmt_f64(x));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, detail: &str| Error::Parse {
            line: line + 1,
            detail: detail.to_string(),
        };
        let (no, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(no, "header must be `p K n`"))?;
        if h.len() != 3 {
            return Err(perr(no, "header must be `p K n`"));
        }
        let (p, k, n) = (h[0], h[1], h[2]);
        let mut inputs = PointSet::empty(p);
        let mut class_labels = Vec::with_capacity(n);
        let mut subclass_labels = Vec::with_capacity(n);
        for (no, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != p + 2 {
                return Err(perr(no, "wrong number of fields"));
            }
            let c: usize = t[0].parse().map_err(|_| perr(no, "bad class label"))?;
            let z: usize = t[1].parse().map_err(|_| perr(no, "bad subclass label"))?;
            if c >= k {
                return Err(perr(no, "class label out of range"));
            }
            let x: Vec<f64> = t[2..]
                .iter()
                .map(|v| v.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(no, "bad coordinate"))?;
            inputs.push(&x);
            class_labels.push(c);
            subclass_labels.push(z);
        }
        if inputs.len() != n {
            return Err(perr(0, "row count differs from header"));
        }
        Ok(Self {
            inputs,
            class_labels,
            subclass_labels,
            num_classes: k,
        })
    }
}

/// Draws `z ~ p(z)` then `x ~ N(center_z, spread_z^2 I)`.
pub fn gen_subclass_data(spec: &ToySpec) -> Result<ToyDataset> {
    spec.validate()?;
    let p = spec.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inputs = PointSet::empty(p);
    let mut class_labels = Vec::with_capacity(spec.n);
    let mut subclass_labels = Vec::with_capacity(spec.n);
    let mut x = vec![0.0; p];
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut z = spec.proportions.len() - 1;
        for (i, q) in spec.proportions.iter().enumerate() {
            acc += q;
            if u < acc {
                z = i;
                break;
            }
        }
        for j in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[j] = spec.centers[z][j] + spec.spreads[z] * e;
        }
        inputs.push(&x);
        class_labels.push(z / 2);
        subclass_labels.push(z);
    }
    Ok(ToyDataset {
        inputs,
        class_labels,
        subclass_labels,
        num_classes: spec.num_classes,
    })
}

/// `x` plus a point drawn uniformly from the ball of radius `epsilon`.
pub fn augment_with<R: Rng + ?Sized>(x: &[f64], epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {}", epsilon)));
    }
    if epsilon == 0.0 || x.is_empty() {
        return Ok(x.to_vec());
    }
    let dir = random_unit_vector(x.len(), rng);
    let u: f64 = rng.random();
    let r = epsilon * u.powf(1.0 / x.len() as f64);
    Ok(x.iter().zip(&dir).map(|(a, d)| a + r * d).collect())
}

pub fn augment(x: &[f64], epsilon: f64, seed: u64) -> Result<Vec<f64>> {
    augment_with(x, epsilon, &mut ChaCha8Rng::seed_from_u64(seed))
}
