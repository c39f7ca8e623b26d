use spread_core::loss::LossWeights;
use spread_core::metrics::class_spread;
use spread_core::opt::{alpha_sweep, optimize_config, OptProblem, SweepRow};

use super::RunContext;
use crate::error::Result;
use crate::output::{num, CsvTable};
use crate::params::{p, ParamSpec};

fn shared() -> Vec<ParamSpec> {
    vec![
        p("k", "2", "number of classes"),
        p("n-y", "8", "points per class"),
        p("restarts", "5", "random restarts (seeds seed, seed + 1, ..)"),
        p("max-iters", "5000", "iteration cap per restart"),
    ]
}

pub fn sweep_params() -> Vec<ParamSpec> {
    let mut v = vec![
        p("alphas", "0.5,0.6,0.67,0.69,0.71,0.73,0.75,0.8,0.9", "comma-separated alpha values"),
        p("taus", "0.25", "comma-separated temperatures"),
        p("dims", "2,5,10", "comma-separated embedding dimensions"),
    ];
    v.extend(shared());
    v
}

fn problem(ctx: &RunContext, dim: usize, weights: LossWeights) -> Result<OptProblem> {
    let mut pr = OptProblem::new(ctx.params.get("k")?, dim, ctx.params.get("n-y")?, weights);
    pr.restarts = ctx.params.get("restarts")?;
    pr.max_iters = ctx.params.get("max-iters")?;
    pr.seed = ctx.seed;
    pr.parallel = !ctx.serial;
    Ok(pr)
}

pub fn sweep(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let alphas: Vec<f64> = ctx.params.nonempty_list("alphas")?;
    let taus: Vec<f64> = ctx.params.nonempty_list("taus")?;
    let dims: Vec<usize> = ctx.params.nonempty_list("dims")?;
    let mut t = CsvTable::new("sweep_alpha", SweepRow::CSV_HEADER);
    for &tau in &taus {
        for &d in &dims {
            let template = problem(ctx, d, LossWeights::new(alphas[0], tau)?)?;
            for row in alpha_sweep(&template, &alphas)? {
                t.rows.push(row.to_csv());
            }
        }
    }
    Ok(vec![t])
}

pub fn optimize_params() -> Vec<ParamSpec> {
    let mut v = vec![
        p("alpha", "0.7", "spread loss weight"),
        p("tau", "0.5", "temperature"),
        p("d", "2", "embedding dimension"),
    ];
    v.extend(shared());
    v
}

pub fn optimize(ctx: &RunContext) -> Result<Vec<CsvTable>> {
    let w = LossWeights::new(ctx.params.get("alpha")?, ctx.params.get("tau")?)?;
    let pr = problem(ctx, ctx.params.get("d")?, w)?;
    let res = optimize_config(&pr)?;

    let coords: Vec<String> = (0..pr.dim).map(|j| format!("u{}", j)).collect();
    let mut points = CsvTable::new("optimize_points", &format!("index,class,{}", coords.join(",")));
    for i in 0..res.best_config.len() {
        let mut f = vec![i.to_string(), res.best_config.class_labels()[i].to_string()];
        f.extend(res.best_config.point(i).iter().map(|&x| num(x)));
        points.push(&f);
    }

    let mut restarts = CsvTable::new("optimize_restarts", "seed,final_loss,iterations,best");
    for r in &res.restarts {
        restarts.push(&[
            r.seed.to_string(),
            num(r.final_loss),
            r.iterations.to_string(),
            (r.seed == res.best_seed).to_string(),
        ]);
    }

    let mut trace = CsvTable::new("optimize_trace", "iteration,loss");
    for (i, l) in res.trace.iter().enumerate() {
        trace.push(&[i.to_string(), num(*l)]);
    }

    let mut summary = CsvTable::new("optimize_summary", "alpha,tau,K,d,n_y,best_seed,best_loss,spread");
    summary.push(&[
        num(w.alpha()),
        num(w.tau()),
        pr.k.to_string(),
        pr.dim.to_string(),
        pr.n_per_class.to_string(),
        res.best_seed.to_string(),
        num(res.best_loss),
        num(class_spread(&res.best_config).mean),
    ]);
    Ok(vec![summary, points, restarts, trace])
}
