use std::f64::consts::FRAC_PI_2;

use spread_core::closed_form::{
    c_tau_d, k3_loss_mu_theta, loss_collapsed, loss_mu_theta, loss_mu_theta_star, loss_uniform, spread_star,
    theta_star, wiener_constant,
};
use spread_core::loss::{asymptotic_empirical, AugmentationMap, LossWeights};
use spread_core::metrics::{permutation_gap, swap_gap};
use spread_core::sphere::{make_mu_theta, make_uniform};

use super::{map_seeds, RunContext};
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, CsvTable};
use crate::params::{p, ParamSpec};

pub fn closed_forms_params() -> Vec<ParamSpec> {
    vec![
        p("alphas", "0.7", "comma-separated alpha values"),
        p("taus", "0.5", "comma-separated temperatures"),
        p("d", "2", "embedding dimension for the uniform loss and c(tau, d)"),
    ]
}

pub fn closed_forms(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let alphas: Vec<f64> = ctx.params.nonempty_list("alphas")?;
    let taus: Vec<f64> = ctx.params.nonempty_list("taus")?;
    let d: usize = ctx.params.get("d")?;
    let mut t = CsvTable::new(
        "closed_forms",
        "alpha,tau,d,theta_star,spread_star,loss_collapsed,loss_mu_theta_star,loss_uniform,c_tau_d,status",
    );
    for &tau in &taus {
        let c = c_tau_d(tau, d).ok();
        for &alpha in &alphas {
            let w = LossWeights::new(alpha, tau)?;
            let theta = theta_star(w);
            let status = match &theta {
                Ok(_) => "ok",
                Err(e) => e.kind(),
            };
            t.push(&[
                num(alpha),
                num(tau),
                d.to_string(),
                opt_num(theta.as_ref().ok().copied()),
                opt_num(spread_star(w).ok()),
                num(loss_collapsed(w, 2)?),
                opt_num(loss_mu_theta_star(w).ok()),
                num(loss_uniform(w, d)?),
                opt_num(c),
                status.to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

pub fn c_window_params() -> Vec<ParamSpec> {
    vec![
        p("taus", "0.1,0.25,0.5,1,2", "comma-separated temperatures"),
        p("d-min", "2", "smallest dimension"),
        p("d-max", "128", "largest dimension"),
    ]
}

pub fn c_window(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let taus: Vec<f64> = ctx.params.nonempty_list("taus")?;
    let lo: usize = ctx.params.get("d-min")?;
    let hi: usize = ctx.params.get("d-max")?;
    if lo > hi {
        return Err(CliError::InvalidValue {
            key: "d-min".into(),
            value: lo.to_string(),
            detail: format!("exceeds d-max = {}", hi),
        });
    }
    let mut t = CsvTable::new("c_window", "tau,d,wiener_constant,c_tau_d");
    for &tau in &taus {
        for d in lo..=hi {
            t.push(&[num(tau), d.to_string(), num(wiener_constant(d, tau)?), opt_num(c_tau_d(tau, d).ok())]);
        }
    }
    Ok(vec![t])
}

pub fn k3_params() -> Vec<ParamSpec> {
    vec![
        p("k", "3", "number of classes (2 or 3)"),
        p("thetas", "20", "angles theta_i = (i + 1) / thetas * pi / 2"),
        p("alphas", "0,0.25,0.5,0.7,1", "comma-separated alpha values"),
        p("taus", "0.25,0.5,1", "comma-separated temperatures"),
        p("d", "3", "embedding dimension"),
        p("n-atom", "2", "copies of each atom"),
    ]
}

pub fn k3_check(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let k: usize = ctx.params.get("k")?;
    let n: usize = ctx.params.get("thetas")?;
    let alphas: Vec<f64> = ctx.params.nonempty_list("alphas")?;
    let taus: Vec<f64> = ctx.params.nonempty_list("taus")?;
    let d: usize = ctx.params.get("d")?;
    let n_atom: usize = ctx.params.get("n-atom")?;
    if k != 2 && k != 3 {
        return Err(CliError::InvalidValue {
            key: "k".into(),
            value: k.to_string(),
            detail: "must be 2 or 3".into(),
        });
    }
    let mut t = CsvTable::new("k3_check", "K,theta,alpha,tau,closed_form,empirical,abs_diff");
    for i in 0..n {
        let theta = (i + 1) as f64 / n as f64 * FRAC_PI_2;
        let cfg = make_mu_theta(k, d, theta, n_atom)?;
        for &alpha in &alphas {
            for &tau in &taus {
                let w = LossWeights::new(alpha, tau)?;
                let closed = if k == 2 {
                    loss_mu_theta(theta, w)?
                } else {
                    k3_loss_mu_theta(theta, w)?
                };
                let emp = asymptotic_empirical(&cfg, w)?;
                t.push(&[
                    k.to_string(),
                    num(theta),
                    num(alpha),
                    num(tau),
                    num(closed),
                    num(emp),
                    num((closed - emp).abs()),
                ]);
            }
        }
    }
    Ok(vec![t])
}

pub fn perm_params() -> Vec<ParamSpec> {
    vec![
        p("configs", "10", "random configurations (seeds seed, seed + 1, ..)"),
        p("trials", "100", "class-fixing permutations per configuration"),
        p("k", "2", "number of classes"),
        p("d", "3", "embedding dimension"),
        p("n-y", "6", "anchors per class, each with one augmentation"),
        p("alpha", "0.7", "spread loss weight"),
        p("tau", "0.5", "temperature"),
    ]
}

pub fn perm_test(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let configs: usize = ctx.params.get("configs")?;
    let trials: usize = ctx.params.get("trials")?;
    let k: usize = ctx.params.get("k")?;
    let d: usize = ctx.params.get("d")?;
    let n_y: usize = ctx.params.get("n-y")?;
    let w = LossWeights::new(ctx.params.get("alpha")?, ctx.params.get("tau")?)?;
    let rows = map_seeds(ctx.seed, configs, ctx.serial, |seed| {
        let cfg = make_uniform(k, d, 2 * n_y, seed)?;
        let aug = AugmentationMap::new(&cfg, (0..cfg.len()).step_by(2).map(|i| (i, i + 1)).collect())?;
        let gap = permutation_gap(&cfg, &aug, w, trials, seed)?;
        let labels = cfg.class_labels();
        let pairs = aug.pairs();
        let other = pairs.iter().position(|&(a, _)| labels[a] != labels[pairs[0].0]);
        let swap = match other {
            Some(j) => Some(swap_gap(&cfg, &aug, w, 0, j)?),
            None => None,
        };
        Ok(vec![
            seed.to_string(),
            num(gap.spread_batch),
            opt_num(gap.asymptotic),
            opt_num(swap.map(|s| s.spread_batch)),
            opt_num(swap.and_then(|s| s.asymptotic)),
        ])
    })?;
    let mut t = CsvTable::new(
        "perm_test",
        "seed,spread_batch_gap,asymptotic_gap,cross_swap_spread_batch_gap,cross_swap_asymptotic_gap",
    );
    for r in rows {
        t.push(&r);
    }
    Ok(vec![t])
}
