//! Subcommand registry. Each entry owns a parameter table and a runner that
//! turns resolved parameters into CSV tables; file I/O happens in the caller.

mod analytic;
mod sphere;
mod toy;

use crate::error::Result;
use crate::output::CsvTable;
use crate::params::{ParamSpec, Params};

pub struct RunContext<'a> {
    pub params: &'a Params,
    pub seed: u64,
    pub serial: bool,
}

pub struct Subcommand {
    pub name: &'static str,
    pub about: &'static str,
    pub params: fn() -> Vec<ParamSpec>,
    pub run: fn(&RunContext) -> Result<Vec<CsvTable>>,
}

pub const SUBCOMMANDS: [Subcommand; 10] = [
    Subcommand {
        name: "closed-forms",
        about: "Optimal angle, optimal spread and candidate losses per (alpha, tau)",
        params: analytic::closed_forms_params,
        run: analytic::closed_forms,
    },
    Subcommand {
        name: "sweep-alpha",
        about: "Optimal spread of the sphere optimiser across alpha, per tau and dimension",
        params: sphere::sweep_params,
        run: sphere::sweep,
    },
    Subcommand {
        name: "optimize",
        about: "Multi-restart sphere optimisation of one configuration",
        params: sphere::optimize_params,
        run: sphere::optimize,
    },
    Subcommand {
        name: "c-window",
        about: "Wiener constant and the upper end c(tau, d) of the alpha window",
        params: analytic::c_window_params,
        run: analytic::c_window,
    },
    Subcommand {
        name: "k3-check",
        about: "Closed-form two-atom loss against the empirical loss of its construction",
        params: analytic::k3_params,
        run: analytic::k3_check,
    },
    Subcommand {
        name: "perm-test",
        about: "Loss gaps under class-fixing permutations and a cross-class swap",
        params: analytic::perm_params,
        run: analytic::perm_test,
    },
    Subcommand {
        name: "toy-train",
        about: "Train one toy encoder and report its geometry and transfer",
        params: toy::train_params,
        run: toy::train,
    },
    Subcommand {
        name: "c2f-eval",
        about: "Coarse-to-fine transfer of SupCon, spread and THANOS embeddings over seeds",
        params: toy::c2f_params,
        run: toy::c2f_eval,
    },
    Subcommand {
        name: "lipschitz",
        about: "Empirical Lipschitz constants of the encoder, augmentations and decoders",
        params: toy::lipschitz_params,
        run: toy::lipschitz,
    },
    Subcommand {
        name: "recover-subclass",
        about: "k-means subclass recovery F1 of toy encoders over seeds",
        params: toy::recover_params,
        run: toy::recover_subclass,
    },
];

pub fn find(name: &str) -> Option<&'static Subcommand> {
    SUBCOMMANDS.iter().find(|s| s.name == name)
}

/// Seeds `seed, seed + 1, ..`, mapped in parallel unless `serial`. Output
/// order follows the seeds either way.
fn map_seeds<T: Send>(
    seed: u64,
    runs: usize,
    serial: bool,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let seeds: Vec<u64> = (0..runs as u64).map(|r| seed + r).collect();
    if serial {
        seeds.into_iter().map(f).collect()
    } else {
        seeds.into_par_iter().map(f).collect()
    }
}
