//! `spreadlab`: seeded experiment runner over `spread-core`.
//!
//! Every subcommand writes `manifest.txt` (all resolved parameters, seed and
//! versions, itself a valid `--config` file) and one or more CSV files into
//! the output directory. Each CSV starts with `# manifest_sha256=<hex>`.

pub mod commands;
pub mod error;
pub mod output;
pub mod params;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::commands::{find, RunContext, Subcommand, SUBCOMMANDS};
use crate::error::{CliError, Result};
use crate::output::{write_outputs, Manifest};
use crate::params::{apply_config, parse_bool, parse_config, Params};

const AFTER_HELP: &str = "Parameters resolve as: table default, then the --config file, then flags.\n\
Config files hold one `key = value` per line (keys as the flag names, plus `seed` and `serial`);\n\
`#` starts a comment and unknown keys are an error. A run's manifest.txt is a valid config.";

pub fn command() -> Command {
    let mut cmd = Command::new("spreadlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Seeded experiments on the hypersphere geometry of supervised contrastive losses")
        .after_help(AFTER_HELP)
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("flat key = value parameter file"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .global(true)
                .default_value("spreadlab-out")
                .help("output directory"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("N")
                .global(true)
                .default_value("0")
                .value_parser(clap::value_parser!(u64))
                .help("base seed"),
        )
        .arg(
            Arg::new("serial")
                .long("serial")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("single-threaded execution"),
        );
    for sub in &SUBCOMMANDS {
        cmd = cmd.subcommand(subcommand(sub));
    }
    cmd
}

fn subcommand(sub: &Subcommand) -> Command {
    let mut c = Command::new(sub.name).about(sub.about).after_help(AFTER_HELP);
    for spec in (sub.params)() {
        c = c.arg(
            Arg::new(spec.key)
                .long(spec.key)
                .value_name("VALUE")
                .allow_negative_numbers(true)
                .default_value(spec.default)
                .help(spec.help),
        );
    }
    c
}

/// A fully resolved run.
pub struct Invocation {
    pub subcommand: &'static Subcommand,
    pub params: Params,
    pub seed: u64,
    pub serial: bool,
    pub out: PathBuf,
}

fn from_cli(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

pub fn resolve(matches: &ArgMatches) -> Result<Invocation> {
    let (name, sm) = matches
        .subcommand()
        .ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
    let sub = find(name).ok_or_else(|| CliError::Usage(format!("unknown subcommand {}", name)))?;
    let specs = (sub.params)();
    let mut params = Params::defaults(&specs);

    if let Some(path) = sm.get_one::<String>("config") {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let entries = parse_config(path, &text)?;
        apply_config(&mut params, &specs, &entries, path, name)?;
    }
    for spec in &specs {
        if from_cli(sm, spec.key) {
            let v = sm.get_one::<String>(spec.key).expect("flag has a value");
            params.set(spec.key, v);
        }
    }

    let seed = if from_cli(sm, "seed") || !params.contains("seed") {
        *sm.get_one::<u64>("seed").expect("seed has a default")
    } else {
        params.get("seed")?
    };
    let serial = sm.get_flag("serial")
        || match params.contains("serial") {
            true => parse_bool("serial", params.raw("serial")?)?,
            false => false,
        };
    let out = PathBuf::from(sm.get_one::<String>("out").expect("out has a default"));
    Ok(Invocation {
        subcommand: sub,
        params,
        seed,
        serial,
        out,
    })
}

pub fn execute(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let ctx = RunContext {
        params: &inv.params,
        seed: inv.seed,
        serial: inv.serial,
    };
    let tables = (inv.subcommand.run)(&ctx)?;
    let manifest = Manifest::new(inv.subcommand.name, inv.seed, inv.serial, &inv.params);
    write_outputs(&inv.out, &manifest, &tables)
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    2
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                    eprintln!("{}", CliError::Usage(first.to_string()).line());
                    2
                }
            };
        }
    };
    match resolve(&matches).and_then(|inv| execute(&inv)) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.line());
            1
        }
    }
}
