//! Minimisation of the empirical asymptotic loss over unit-vector
//! configurations.
//!
//! Each restart starts from a seeded uniform draw and takes tangent-projected
//! gradient steps followed by renormalisation. A step that raises the loss is
//! rejected and retried at a smaller size; accepted steps grow the size
//! slightly. The lowest-loss restart wins (ties go to the lowest seed).

use rayon::prelude::*;

use crate::closed_form::{loss_collapsed, loss_mu_theta_star, loss_uniform};
use crate::error::{Error, Result};
use crate::loss::{asymptotic_value_and_gradient, project_tangent, LossWeights};
use crate::metrics::class_spread;
use crate::numeric::{fmt_f64, norm};
use crate::sphere::{make_uniform, EmbeddingConfig, PointSet};

#[derive(Debug, Clone, PartialEq)]
pub struct OptProblem {
    pub k: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub weights: LossWeights,
    pub restarts: usize,
    /// Seed of the first restart; restart `r` uses `seed + r`.
    pub seed: u64,
    pub max_iters: usize,
    pub initial_step: f64,
    /// Multiplier applied to the step after a rejected move.
    pub step_decay: f64,
    /// Multiplier applied after an accepted move (capped at `max_step`).
    pub step_growth: f64,
    pub max_step: f64,
    /// Stop once the loss drops by less than this over `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    pub parallel: bool,
}

impl OptProblem {
    pub fn new(k: usize, dim: usize, n_per_class: usize, weights: LossWeights) -> Self {
        Self {
            k,
            dim,
            n_per_class,
            weights,
            restarts: 5,
            seed: 0,
            max_iters: 5000,
            initial_step: 0.5,
            step_decay: 0.5,
            step_growth: 1.1,
            max_step: 4.0,
            tolerance: 1e-10,
            window: 20,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Domain("K must be at least 2".into()));
        }
        if self.k * self.n_per_class < 2 {
            return Err(Error::Domain("need at least two points".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be at least 1".into()));
        }
        if !(self.initial_step > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::Domain("step and tolerance must be positive".into()));
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) || self.step_growth < 1.0 {
            return Err(Error::Domain("step decay must lie in (0,1), growth >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Domain("window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub seed: u64,
    pub final_loss: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereOptResult {
    pub best_config: EmbeddingConfig,
    pub best_loss: f64,
    pub best_seed: u64,
    pub restarts: Vec<RestartSummary>,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

struct RestartOutcome {
    config: EmbeddingConfig,
    loss: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn run_restart(problem: &OptProblem, seed: u64) -> Result<RestartOutcome> {
    let init = make_uniform(problem.k, problem.dim, problem.n_per_class, seed)?;
    let labels = init.class_labels().to_vec();
    let k = problem.k;
    let w = problem.weights;
    let mut pts = init.points().clone();
    let (mut loss, mut grad) = asymptotic_value_and_gradient(&pts, &labels, k, w)?;
    let fail = |iteration: usize, detail: String| Error::NumericalFailure {
        seed,
        iteration,
        detail,
    };
    if !loss.is_finite() {
        return Err(fail(0, format!("initial loss {}", loss)));
    }
    let mut step = problem.initial_step;
    let mut trace = vec![loss];
    let mut iterations = 0;
    'outer: for it in 1..=problem.max_iters {
        iterations = it;
        let tangent = project_tangent(&pts, &grad);
        if tangent.as_slice().iter().all(|&g| g == 0.0) {
            break;
        }
        loop {
            let cand = retract(&pts, &tangent, step);
            let (l2, g2) = asymptotic_value_and_gradient(&cand, &labels, k, w)?;
            if !l2.is_finite() {
                return Err(fail(it, format!("loss became {} at step {}", l2, step)));
            }
            if l2 <= loss {
                pts = cand;
                loss = l2;
                grad = g2;
                step = (step * problem.step_growth).min(problem.max_step);
                break;
            }
            step *= problem.step_decay;
            if step < 1e-18 {
                break 'outer;
            }
        }
        trace.push(loss);
        let n = trace.len();
        if n > problem.window && trace[n - 1 - problem.window] - loss < problem.tolerance {
            break;
        }
    }
    let config = init.with_points(pts)?;
    Ok(RestartOutcome {
        config,
        loss,
        iterations,
        trace,
    })
}

/// `u - step * g`, each row renormalised.
fn retract(pts: &PointSet, tangent: &PointSet, step: f64) -> PointSet {
    let mut out = pts.clone();
    for i in 0..pts.len() {
        let row = out.row_mut(i);
        row.iter_mut()
            .zip(tangent.row(i))
            .for_each(|(x, g)| *x -= step * g);
        let r = norm(row);
        row.iter_mut().for_each(|x| *x /= r);
    }
    out
}

pub fn optimize_config(problem: &OptProblem) -> Result<SphereOptResult> {
    problem.validate()?;
    let seeds: Vec<u64> = (0..problem.restarts as u64).map(|r| problem.seed + r).collect();
    let outcomes: Vec<Result<RestartOutcome>> = if problem.parallel {
        seeds.par_iter().map(|&s| run_restart(problem, s)).collect()
    } else {
        seeds.iter().map(|&s| run_restart(problem, s)).collect()
    };
    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut summaries = Vec::with_capacity(seeds.len());
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome?;
        summaries.push(RestartSummary {
            seed: seeds[idx],
            final_loss: o.loss,
            iterations: o.iterations,
        });
        let better = match &best {
            None => true,
            Some((_, b)) => o.loss < b.loss,
        };
        if better {
            best = Some((idx, o));
        }
    }
    let (idx, o) = best.expect("at least one restart");
    Ok(SphereOptResult {
        best_config: o.config,
        best_loss: o.loss,
        best_seed: seeds[idx],
        restarts: summaries,
        iterations: o.iterations,
        trace: o.trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub tau: f64,
    pub k: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub seed: Option<u64>,
    pub loss: f64,
    pub spread: f64,
    pub loss_collapsed: f64,
    pub loss_uniform: f64,
    pub loss_mu_theta_star: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "alpha,tau,K,d,n_y,seed,loss,spread,loss_collapsed,loss_uniform,loss_mu_theta_star,status";

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.alpha),
            fmt_f64(self.tau),
            self.k,
            self.dim,
            self.n_per_class,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_f64(self.loss),
            fmt_f64(self.spread),
            fmt_f64(self.loss_collapsed),
            fmt_f64(self.loss_uniform),
            opt(self.loss_mu_theta_star),
            if self.error.is_some() { "failed" } else { "ok" }
        )
    }
}

/// One optimisation per alpha (each cell uses the template's restart seeds).
/// A failing cell is reported in its row without aborting the sweep.
pub fn alpha_sweep(template: &OptProblem, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::Domain("alpha list is empty".into()));
    }
    let tau = template.weights.tau();
    let weights: Vec<LossWeights> = alphas
        .iter()
        .map(|&a| LossWeights::new(a, tau))
        .collect::<Result<_>>()?;
    let cell = |w: &LossWeights| -> Result<SweepRow> {
        let mut p = template.clone();
        p.weights = *w;
        // the sweep already parallelises across cells
        p.parallel = false;
        let loss_c = loss_collapsed(*w, p.k)?;
        let loss_u = loss_uniform(*w, p.dim)?;
        let loss_m = if p.k == 2 {
            loss_mu_theta_star(*w).ok()
        } else {
            None
        };
        let row = match optimize_config(&p) {
            Ok(res) => SweepRow {
                alpha: w.alpha(),
                tau,
                k: p.k,
                dim: p.dim,
                n_per_class: p.n_per_class,
                seed: Some(res.best_seed),
                loss: res.best_loss,
                spread: class_spread(&res.best_config).mean,
                loss_collapsed: loss_c,
                loss_uniform: loss_u,
                loss_mu_theta_star: loss_m,
                error: None,
            },
            Err(e) => SweepRow {
                alpha: w.alpha(),
                tau,
                k: p.k,
                dim: p.dim,
                n_per_class: p.n_per_class,
                seed: None,
                loss: f64::NAN,
                spread: f64::NAN,
                loss_collapsed: loss_c,
                loss_uniform: loss_u,
                loss_mu_theta_star: loss_m,
                error: Some(e.to_string()),
            },
        };
        Ok(row)
    };
    if template.parallel {
        weights.par_iter().map(cell).collect()
    } else {
        weights.iter().map(cell).collect()
    }
}
