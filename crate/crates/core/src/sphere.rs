//! Labeled point configurations on the unit hypersphere.
//!
//! An [`EmbeddingConfig`] is the empirical stand-in for a pushforward measure
//! on `S^{d-1}`: a finite list of unit vectors with class labels and optional
//! subclass labels. Constructors cover the regular simplex, the class-collapsed
//! configuration, the two-atom `mu_theta` family and i.i.d. uniform samples.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::{dot, fmt_f64, norm};

/// Maximum deviation of a point's norm from 1.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Row-major list of `n` vectors in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("point dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} coordinates do not split into rows of {}",
                data.len(),
                dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Shape(format!(
                    "row {} has length {}, expected {}",
                    i,
                    r.len(),
                    dim
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "row dimension mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut out = PointSet::empty(self.dim);
        for &i in indices {
            out.push(self.row(i));
        }
        out
    }

    pub fn scaled(&self, c: f64) -> PointSet {
        PointSet {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }
}

/// Labeled unit vectors on `S^{dim-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    points: PointSet,
    class_labels: Vec<usize>,
    subclass_labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl EmbeddingConfig {
    /// Validates norms, class labels (every class in `0..K` non-empty) and the
    /// subclass-to-class map.
    pub fn new(
        points: PointSet,
        class_labels: Vec<usize>,
        subclass_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if points.dim() < 2 {
            return Err(Error::InvalidDimension(format!(
                "sphere dimension d = {} must be at least 2",
                points.dim()
            )));
        }
        let n = points.len();
        if class_labels.len() != n {
            return Err(Error::Label(format!(
                "{} class labels for {} points",
                class_labels.len(),
                n
            )));
        }
        for (i, p) in points.rows().enumerate() {
            let r = norm(p);
            if !((r - 1.0).abs() <= UNIT_NORM_TOL) {
                return Err(Error::Domain(format!("point {} has norm {}", i, r)));
            }
        }
        let num_classes = class_labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; num_classes];
        for &c in &class_labels {
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Label(format!("class {} is empty", empty)));
        }
        if let Some(sub) = &subclass_labels {
            if sub.len() != n {
                return Err(Error::Label(format!(
                    "{} subclass labels for {} points",
                    sub.len(),
                    n
                )));
            }
            subclass_to_class(sub, &class_labels)?;
        }
        Ok(Self {
            points,
            class_labels,
            subclass_labels,
            num_classes,
        })
    }

    /// Projects every row onto the sphere before validating.
    pub fn normalized(
        mut points: PointSet,
        class_labels: Vec<usize>,
        subclass_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        for i in 0..points.len() {
            let row = points.row_mut(i);
            let r = norm(row);
            if r == 0.0 || !r.is_finite() {
                return Err(Error::Domain(format!("row {} cannot be normalized", i)));
            }
            row.iter_mut().for_each(|x| *x /= r);
        }
        Self::new(points, class_labels, subclass_labels)
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn class_labels(&self) -> &[usize] {
        &self.class_labels
    }

    pub fn subclass_labels(&self) -> Option<&[usize]> {
        self.subclass_labels.as_deref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.class_labels {
            counts[c] += 1;
        }
        counts
    }

    /// Points per class when every class has the same count.
    pub fn balanced_class_size(&self) -> Option<usize> {
        let counts = self.class_counts();
        let first = *counts.first()?;
        counts.iter().all(|&c| c == first).then_some(first)
    }

    /// Indices of the members of each class, in index order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_classes];
        for (i, &c) in self.class_labels.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// Sub-configuration restricted to `indices` (labels carried along).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = self.points.select(indices);
        let classes = indices.iter().map(|&i| self.class_labels[i]).collect();
        let subs = self
            .subclass_labels
            .as_ref()
            .map(|s| indices.iter().map(|&i| s[i]).collect());
        Self::new(points, classes, subs)
    }

    /// Same labels, new coordinates (validated).
    pub fn with_points(&self, points: PointSet) -> Result<Self> {
        if points.len() != self.len() || points.dim() != self.dim() {
            return Err(Error::Shape("replacement points differ in shape".into()));
        }
        Self::new(
            points,
            self.class_labels.clone(),
            self.subclass_labels.clone(),
        )
    }

    /// Applies `x -> Q x` to every point, `q` row-major `d x d`.
    pub fn transformed(&self, q: &[f64]) -> Result<Self> {
        let d = self.dim();
        if q.len() != d * d {
            return Err(Error::Shape("transform must be d x d".into()));
        }
        let mut out = PointSet::empty(d);
        for p in self.points.rows() {
            out.push(&mat_vec(q, p));
        }
        Self::normalized(
            out,
            self.class_labels.clone(),
            self.subclass_labels.clone(),
        )
    }

    /// Plain-text form: header `d K n`, then `class subclass x_0 .. x_{d-1}` per
    /// point with 17 significant digits. A missing subclass is written as `-1`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.dim(), self.num_classes, self.len());
        for (i, p) in self.points.rows().enumerate() {
            let sub = self
                .subclass_labels
                .as_ref()
                .map_or("-1".to_string(), |v| v[i].to_string());
            s.push_str(&self.class_labels[i].to_string());
            s.push(' ');
            s.push_str(&sub);
            for x in p {
                s.push(' ');
                s.push_str(&fmt_f64(*x));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            detail: "missing header".into(),
        })?;
        let head: Vec<usize> = parse_fields(header, hl + 1)?;
        if head.len() != 3 {
            return Err(Error::Parse {
                line: hl + 1,
                detail: "header must be `d K n`".into(),
            });
        }
        let (d, k, n) = (head[0], head[1], head[2]);
        let mut data = Vec::with_capacity(n * d);
        let mut classes = Vec::with_capacity(n);
        let mut subs = Vec::with_capacity(n);
        let mut any_missing = false;
        for (ln, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != d + 2 {
                return Err(Error::Parse {
                    line: ln + 1,
                    detail: format!("expected {} fields, found {}", d + 2, fields.len()),
                });
            }
            let perr = |detail: String| Error::Parse {
                line: ln + 1,
                detail,
            };
            classes.push(
                fields[0]
                    .parse::<usize>()
                    .map_err(|e| perr(e.to_string()))?,
            );
            let sub: i64 = fields[1].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
            if sub < 0 {
                any_missing = true;
            }
            subs.push(sub);
            for f in &fields[2..] {
                data.push(f.parse::<f64>().map_err(|e| perr(e.to_string()))?);
            }
        }
        if classes.len() != n {
            return Err(Error::Parse {
                line: hl + 1,
                detail: format!("header declares {} points, found {}", n, classes.len()),
            });
        }
        let subclass_labels = if any_missing {
            None
        } else {
            Some(subs.into_iter().map(|s| s as usize).collect())
        };
        let cfg = Self::new(PointSet::new(d, data)?, classes, subclass_labels)?;
        if cfg.num_classes != k {
            return Err(Error::Parse {
                line: hl + 1,
                detail: format!("header declares K = {}, labels give {}", k, cfg.num_classes),
            });
        }
        Ok(cfg)
    }
}

fn parse_fields(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|f| {
            f.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno,
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Checks that each subclass id appears under exactly one class and returns
/// the map.
pub fn subclass_to_class(subclass: &[usize], class: &[usize]) -> Result<BTreeMap<usize, usize>> {
    let mut map = BTreeMap::new();
    for (&z, &y) in subclass.iter().zip(class) {
        match map.insert(z, y) {
            Some(prev) if prev != y => {
                return Err(Error::Label(format!(
                    "subclass {} appears under classes {} and {}",
                    z, prev, y
                )))
            }
            _ => {}
        }
    }
    Ok(map)
}

fn mat_vec(q: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|r| dot(&q[r * d..(r + 1) * d], v)).collect()
}

/// Regular simplex inscribed in the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFrame {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub pairwise_dot: f64,
}

/// `K` unit vectors with pairwise dot `-1/(K-1)` summing to zero.
///
/// Layout: `K = 2` uses `±e_0`; `K = 3` uses the plane of axes (0, 2) when
/// `d >= 3` (so axis 1 is free for rotations), else axes (0, 1); larger `K`
/// uses centred basis vectors expressed in a Helmert basis of the first
/// `K - 1` coordinates.
pub fn regular_simplex(k: usize, d: usize) -> Result<SimplexFrame> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {} < 2", d)));
    }
    if k < 2 || k > d + 1 {
        return Err(Error::InvalidDimension(format!(
            "a regular simplex with K = {} vertices needs 2 <= K <= d + 1 = {}",
            k,
            d + 1
        )));
    }
    let mut vertices = vec![vec![0.0; d]; k];
    match k {
        2 => {
            vertices[0][0] = 1.0;
            vertices[1][0] = -1.0;
        }
        3 => {
            let second = if d >= 3 { 2 } else { 1 };
            let h = 3f64.sqrt() / 2.0;
            vertices[0][0] = 1.0;
            vertices[1][0] = -0.5;
            vertices[1][second] = h;
            vertices[2][0] = -0.5;
            vertices[2][second] = -h;
        }
        _ => {
            // e_i - 1/K, normalised, in Helmert coordinates.
            let kf = k as f64;
            let scale = (kf / (kf - 1.0)).sqrt();
            for (i, v) in vertices.iter_mut().enumerate() {
                for (m, coord) in v.iter_mut().take(k - 1).enumerate() {
                    // Helmert vector h_m = (1,..,1 (m+1 times), -(m+1), 0..)/sqrt((m+1)(m+2))
                    let mf = (m + 1) as f64;
                    let hn = (mf * (mf + 1.0)).sqrt();
                    let entry = if i <= m {
                        1.0 / hn
                    } else if i == m + 1 {
                        -mf / hn
                    } else {
                        0.0
                    };
                    // centring does not change the projection onto 1^perp
                    *coord = entry * scale;
                }
            }
        }
    }
    Ok(SimplexFrame {
        dim: d,
        vertices,
        pairwise_dot: -1.0 / (k as f64 - 1.0),
    })
}

/// Rotates `v` by `theta` in the plane of axes `i` and `j`.
pub fn rotate_in_plane(v: &[f64], i: usize, j: usize, theta: f64) -> Result<Vec<f64>> {
    let d = v.len();
    if i == j || i >= d || j >= d {
        return Err(Error::InvalidPlane { i, j, dim: d });
    }
    let (s, c) = theta.sin_cos();
    let mut out = v.to_vec();
    out[i] = c * v[i] - s * v[j];
    out[j] = s * v[i] + c * v[j];
    Ok(out)
}

/// Every point of class `y` placed at simplex vertex `v_y`.
pub fn make_collapsed(k: usize, d: usize, n_per_class: usize) -> Result<EmbeddingConfig> {
    if n_per_class == 0 {
        return Err(Error::Domain("n_y must be at least 1".into()));
    }
    let simplex = regular_simplex(k, d)?;
    let mut points = PointSet::empty(d);
    let mut classes = Vec::with_capacity(k * n_per_class);
    for (y, v) in simplex.vertices.iter().enumerate() {
        for _ in 0..n_per_class {
            points.push(v);
            classes.push(y);
        }
    }
    EmbeddingConfig::new(points, classes, None)
}

/// The two-atom family.
///
/// `K = 2`: class `y` holds `n_per_atom` copies each of `R_theta v_y` and
/// `R_{-theta} v_y`, rotation in axes (0, 1). `K = 3`: class `y` holds copies
/// of `v_y` and `R_theta v_y` (rotation in axes (0, 1), simplex in the (0, 2)
/// plane). Subclass `2y + a` labels atom `a` of class `y`.
pub fn make_mu_theta(
    k: usize,
    d: usize,
    theta: f64,
    n_per_atom: usize,
) -> Result<EmbeddingConfig> {
    if n_per_atom == 0 {
        return Err(Error::Domain("n_per_atom must be at least 1".into()));
    }
    let atoms: Vec<[Vec<f64>; 2]> = match k {
        2 => {
            if d < 2 {
                return Err(Error::InvalidDimension("K = 2 needs d >= 2".into()));
            }
            if !(theta > 0.0 && theta <= FRAC_PI_2) {
                return Err(Error::Domain(format!(
                    "theta = {} outside (0, pi/2] for K = 2",
                    theta
                )));
            }
            let s = regular_simplex(2, d)?;
            s.vertices
                .iter()
                .map(|v| {
                    Ok([
                        rotate_in_plane(v, 0, 1, theta)?,
                        rotate_in_plane(v, 0, 1, -theta)?,
                    ])
                })
                .collect::<Result<_>>()?
        }
        3 => {
            if d < 3 {
                return Err(Error::InvalidDimension("K = 3 needs d >= 3".into()));
            }
            if !(0.0..=FRAC_PI_2).contains(&theta) {
                return Err(Error::Domain(format!(
                    "theta = {} outside [0, pi/2] for K = 3",
                    theta
                )));
            }
            let s = regular_simplex(3, d)?;
            s.vertices
                .iter()
                .map(|v| Ok([v.clone(), rotate_in_plane(v, 0, 1, theta)?]))
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::Domain(format!(
                "the mu_theta family is defined for K in {{2, 3}}, got {}",
                k
            )))
        }
    };
    let mut points = PointSet::empty(d);
    let mut classes = Vec::new();
    let mut subs = Vec::new();
    for (y, pair) in atoms.iter().enumerate() {
        for (a, atom) in pair.iter().enumerate() {
            for _ in 0..n_per_atom {
                points.push(atom);
                classes.push(y);
                subs.push(2 * y + a);
            }
        }
    }
    EmbeddingConfig::normalized(points, classes, Some(subs))
}

/// `n_per_class` i.i.d. uniform points per class (normalised standard normals).
pub fn make_uniform(k: usize, d: usize, n_per_class: usize, seed: u64) -> Result<EmbeddingConfig> {
    if k == 0 || n_per_class == 0 {
        return Err(Error::Domain("K and n_y must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {} < 2", d)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = PointSet::empty(d);
    let mut classes = Vec::with_capacity(k * n_per_class);
    for y in 0..k {
        for _ in 0..n_per_class {
            points.push(&random_unit_vector(d, &mut rng));
            classes.push(y);
        }
    }
    EmbeddingConfig::normalized(points, classes, None)
}

pub fn random_unit_vector<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Random orthogonal `d x d` matrix (row-major), Gram-Schmidt on Gaussian rows.
pub fn random_orthogonal<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for r in &rows {
                let p = dot(&v, r);
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            rows.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    rows.concat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dot_matrix(vs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::new();
        for a in vs {
            for b in vs {
                out.push(dot(a, b));
            }
        }
        out
    }

    #[test]
    fn simplex_invariants_hold_for_all_valid_sizes() {
        for d in 2..=7 {
            for k in 2..=d + 1 {
                let s = regular_simplex(k, d).unwrap();
                let c = -1.0 / (k as f64 - 1.0);
                assert_eq!(s.pairwise_dot, c);
                let mut sum = vec![0.0; d];
                for (i, v) in s.vertices.iter().enumerate() {
                    assert!((norm(v) - 1.0).abs() < 1e-12, "k={k} d={d}");
                    v.iter().zip(sum.iter_mut()).for_each(|(x, s)| *s += x);
                    for w in &s.vertices[i + 1..] {
                        assert!((dot(v, w) - c).abs() < 1e-12, "k={k} d={d}");
                    }
                }
                assert!(norm(&sum) < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_examples() {
        let s = regular_simplex(2, 2).unwrap();
        assert_eq!(dot(&s.vertices[0], &s.vertices[1]), -1.0);

        let s = regular_simplex(3, 3).unwrap();
        assert_eq!(s.pairwise_dot, -0.5);
        let d01: f64 = s.vertices[0]
            .iter()
            .zip(&s.vertices[1])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((d01 - 3.0).abs() < 1e-12);
        assert_eq!(s.vertices[0], vec![1.0, 0.0, 0.0]);
        assert!((s.vertices[1][2] - 3f64.sqrt() / 2.0).abs() < 1e-15);

        assert!(matches!(
            regular_simplex(5, 3),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn simplex_relabeling_is_congruent() {
        let s = regular_simplex(4, 5).unwrap();
        let base = dot_matrix(&s.vertices);
        let mut perm = s.vertices.clone();
        perm.rotate_left(1);
        perm.swap(0, 2);
        let pm = dot_matrix(&perm);
        for (a, b) in base.iter().zip(&pm) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_examples() {
        let r = rotate_in_plane(&[1.0, 0.0], 0, 1, PI / 2.0).unwrap();
        assert!((r[0]).abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
        let v = [0.6, 0.0, 0.8];
        assert_eq!(rotate_in_plane(&v, 0, 2, 0.0).unwrap(), v.to_vec());
        let t = 0.37;
        let r = rotate_in_plane(&[1.0, 0.0, 0.0], 0, 1, t).unwrap();
        assert_eq!(r, vec![t.cos(), t.sin(), 0.0]);
        assert!(matches!(
            rotate_in_plane(&v, 1, 1, 0.3),
            Err(Error::InvalidPlane { .. })
        ));
    }

    #[test]
    fn rotation_preserves_norm_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = random_unit_vector(5, &mut rng);
            let t = 2.1;
            let r = rotate_in_plane(&v, 1, 3, t).unwrap();
            assert!((norm(&r) - 1.0).abs() < 1e-12);
            assert_eq!(r[0], v[0]);
            assert_eq!(r[2], v[2]);
            let back = rotate_in_plane(&r, 1, 3, -t).unwrap();
            for (a, b) in back.iter().zip(&v) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collapsed_examples() {
        let c = make_collapsed(2, 2, 3).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c.class_labels(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(c.point(0), &[1.0, 0.0]);
        assert_eq!(c.point(5), &[-1.0, 0.0]);
        assert_eq!(c.balanced_class_size(), Some(3));

        let c = make_collapsed(3, 3, 1).unwrap();
        assert_eq!(c.point(0), &[1.0, 0.0, 0.0]);
        assert_eq!(c.point(2), &[-0.5, 0.0, -(3f64.sqrt()) / 2.0]);
    }

    #[test]
    fn mu_theta_geometry() {
        let t = 0.4;
        let c = make_mu_theta(2, 2, t, 1).unwrap();
        let d2: f64 = c
            .point(0)
            .iter()
            .zip(c.point(1))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((d2 - 4.0 * t.sin().powi(2)).abs() < 1e-12);
        assert_eq!(c.subclass_labels().unwrap(), &[0, 1, 2, 3]);

        let c = make_mu_theta(3, 3, t, 1).unwrap();
        // v_0 vs R_theta v_1
        let d2: f64 = c
            .point(0)
            .iter()
            .zip(c.point(3))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((d2 - (2.0 + t.cos())).abs() < 1e-12);

        let near = make_mu_theta(2, 2, 1e-9, 2).unwrap();
        let col = make_collapsed(2, 2, 4).unwrap();
        for i in 0..8 {
            for (a, b) in near.point(i).iter().zip(col.point(i)) {
                assert!((a - b).abs() < 1e-8);
            }
        }

        assert!(matches!(make_mu_theta(2, 2, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(make_mu_theta(2, 2, 2.0, 1), Err(Error::Domain(_))));
        assert!(make_mu_theta(4, 4, 0.3, 1).is_err());
    }

    #[test]
    fn uniform_examples() {
        let u = make_uniform(2, 3, 1000, 11).unwrap();
        let mut mean = [0.0; 3];
        for p in u.points().rows() {
            assert!((norm(p) - 1.0).abs() < 1e-9);
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x / 2000.0;
            }
        }
        assert!(norm(&mean) <= 0.1);
        assert_eq!(u, make_uniform(2, 3, 1000, 11).unwrap());
        assert_ne!(u, make_uniform(2, 3, 1000, 12).unwrap());
    }

    #[test]
    fn config_validation() {
        let pts = PointSet::from_rows(2, &[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(EmbeddingConfig::new(pts, vec![0, 1], None).is_err());
        let pts = PointSet::from_rows(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            EmbeddingConfig::new(pts.clone(), vec![0, 2], None),
            Err(Error::Label(_))
        ));
        assert!(matches!(
            EmbeddingConfig::new(pts, vec![0, 1], Some(vec![5, 5])),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let c = make_mu_theta(3, 4, 0.3, 2).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("4 3 12\n"));
        assert_eq!(EmbeddingConfig::from_text(&text).unwrap(), c);

        let u = make_uniform(2, 3, 5, 1).unwrap();
        let back = EmbeddingConfig::from_text(&u.to_text()).unwrap();
        assert_eq!(back, u);
        assert!(back.subclass_labels().is_none());

        assert!(EmbeddingConfig::from_text("2 2 3\n0 0 1 0\n").is_err());
    }

    #[test]
    fn orthogonal_matrix_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 6;
        let q = random_orthogonal(d, &mut rng);
        for i in 0..d {
            for j in 0..d {
                let v = dot(&q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
    }
}
