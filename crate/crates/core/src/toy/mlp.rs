//! Fully connected network with tanh hidden layers, a linear output layer and
//! hand-written backpropagation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// `rows x cols`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.w[r * self.cols..(r + 1) * self.cols];
            out.push(self.b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Activations kept from a forward pass: `acts[0]` is the input, `acts[l+1]`
/// the output of layer `l` (after tanh for hidden layers).
#[derive(Debug, Clone)]
pub struct Trace {
    pub acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty trace")
    }
}

impl Mlp {
    /// `widths = [input, hidden..., output]`, Glorot-scaled Gaussian weights
    /// and zero biases.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::Shape(format!("invalid layer widths {:?}", widths)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|p| {
                let (cols, rows) = (p[0], p[1]);
                let scale = (2.0 / (rows + cols) as f64).sqrt();
                let w = (0..rows * cols)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z * scale
                    })
                    .collect();
                Layer {
                    rows,
                    cols,
                    w,
                    b: vec![0.0; rows],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").rows
    }

    pub fn forward(&self, x: &[f64]) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.rows);
            layer.apply(&acts[l], &mut out);
            if l < last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        Trace { acts }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).acts.pop().expect("non-empty")
    }

    /// Accumulates parameter gradients into `grad` (same layout as
    /// [`Mlp::params`]) given `d loss / d output`, and returns
    /// `d loss / d input`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let mut delta = d_out.to_vec();
        let offsets = self.offsets();
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l < last {
                // tanh' = 1 - a^2
                let a = &trace.acts[l + 1];
                delta.iter_mut().zip(a).for_each(|(d, a)| *d *= 1.0 - a * a);
            }
            let input = &trace.acts[l];
            let off = offsets[l];
            for r in 0..layer.rows {
                let g = &mut grad[off + r * layer.cols..off + (r + 1) * layer.cols];
                g.iter_mut().zip(input).for_each(|(g, x)| *g += delta[r] * x);
            }
            let boff = off + layer.rows * layer.cols;
            for r in 0..layer.rows {
                grad[boff + r] += delta[r];
            }
            let mut prev = vec![0.0; layer.cols];
            for r in 0..layer.rows {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += delta[r] * w);
            }
            delta = prev;
        }
        delta
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.layers
            .iter()
            .map(|l| {
                let o = off;
                off += l.rows * l.cols + l.rows;
                o
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.rows * l.cols + l.rows).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} parameters given, network has {}",
                p.len(),
                self.num_params()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.rows * l.cols;
            l.w.copy_from_slice(&p[off..off + nw]);
            off += nw;
            l.b.copy_from_slice(&p[off..off + l.rows]);
            off += l.rows;
        }
        Ok(())
    }

    /// `p <- p - lr * g`.
    pub fn step(&mut self, grad: &[f64], lr: f64) {
        let mut off = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w -= lr * grad[off];
                off += 1;
            }
            for b in l.b.iter_mut() {
                *b -= lr * grad[off];
                off += 1;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }

    /// Parameter block: per layer a `layer r c` weight block followed by a
    /// `layer r 1` bias block, each with one row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.layers {
            block(&mut s, l.rows, l.cols, &l.w);
            block(&mut s, l.rows, 1, &l.b);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut layers = Vec::new();
        while let Some((w_rows, w_cols, w)) = read_block(&mut lines)? {
            let (b_rows, b_cols, b) = read_block(&mut lines)?.ok_or(Error::Parse {
                line: 0,
                detail: "weight block without bias block".into(),
            })?;
            if b_rows != w_rows || b_cols != 1 {
                return Err(Error::Shape(format!(
                    "bias block {}x{} does not match weights {}x{}",
                    b_rows, b_cols, w_rows, w_cols
                )));
            }
            if let Some(prev) = layers.last() {
                let prev: &Layer = prev;
                if prev.rows != w_cols {
                    return Err(Error::Shape("consecutive layers do not chain".into()));
                }
            }
            layers.push(Layer {
                rows: w_rows,
                cols: w_cols,
                w,
                b,
            });
        }
        if layers.is_empty() {
            return Err(Error::Parse {
                line: 0,
                detail: "no layers".into(),
            });
        }
        Ok(Self { layers })
    }
}

fn block(s: &mut String, rows: usize, cols: usize, values: &[f64]) {
    s.push_str(&format!("layer {} {}\n", rows, cols));
    for r in 0..rows {
        let line: Vec<String> = values[r * cols..(r + 1) * cols]
            .iter()
            .map(|&v| fmt_f64(v))
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
}

fn read_block<'a, I: Iterator<Item = (usize, &'a str)>>(
    lines: &mut I,
) -> Result<Option<(usize, usize, Vec<f64>)>> {
    let Some((no, header)) = lines.next() else {
        return Ok(None);
    };
    let parse_err = |line: usize, detail: String| Error::Parse {
        line: line + 1,
        detail,
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "layer" {
        return Err(parse_err(no, format!("expected `layer r c`, got `{}`", header)));
    }
    let rows: usize = parts[1].parse().map_err(|_| parse_err(no, "bad row count".into()))?;
    let cols: usize = parts[2].parse().map_err(|_| parse_err(no, "bad column count".into()))?;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(no, "truncated layer block".into()))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(no, e.to_string()))?;
        if row.len() != cols {
            return Err(parse_err(no, format!("expected {} values, got {}", cols, row.len())));
        }
        values.extend(row);
    }
    Ok(Some((rows, cols, values)))
}
