//! `weakforms`: dimensions, gap sets, canonical bases, duality sweeps,
//! generating-function checks and Hecke traces for prime level.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::commands::Outcome;

#[derive(Parser, Debug)]
#[command(name = "weakforms", version, about = "Weakly holomorphic modular forms of prime level")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Genus, λ_p and dimensions of S_k, E_k, M_k
    Dims,
    /// Gap sets of the echelon bases of M_k(p) and S_k(p)
    Gaps,
    /// Canonical basis of M♯_k(p) or S♯_k(p) up to a pole order
    Basis,
    /// Check a_k(m,n) = -b_{2-k}(n,m) on a box of indices
    Duality,
    /// Check the generating-function identities (p = 11, 17, 19)
    Genfun,
    /// Traces of Hecke operators T_n on S_k(p)
    Trace,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
enum SpaceArg {
    M,
    S,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum VariantArg {
    F,
    G,
    Both,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Prime level
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Weight
    #[arg(long, global = true, allow_hyphen_values = true)]
    k: Option<i64>,
    /// Inclusive weight range `a..b` (even weights only)
    #[arg(long = "k-range", global = true, allow_hyphen_values = true)]
    k_range: Option<String>,
    /// Space: M (M♯_k) or S (S♯_k)
    #[arg(long, global = true, value_enum, ignore_case = true)]
    space: Option<SpaceArg>,
    /// Largest pole order of the basis elements
    #[arg(long, global = true, allow_hyphen_values = true)]
    mmax: Option<i64>,
    /// Index box: a size `N`, or explicit ranges `m0..m1,n0..n1`
    #[arg(long = "box", global = true, allow_hyphen_values = true)]
    index_box: Option<String>,
    /// Generating-function window `J,I` (or a single `J` used for both)
    #[arg(long, global = true)]
    window: Option<String>,
    /// Precision (exclusive q-exponent cap); may only raise the default
    #[arg(long, global = true)]
    prec: Option<i64>,
    /// Largest n for `trace`
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
    /// Denominator variant for `genfun`
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Run sequentially instead of using the thread pool
    #[arg(long, global = true)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.common.sequential {
        weakforms::exec::set_parallel(false);
    }
    let config = match commands::resolve(cli.command, &cli.common) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}\n\nRun `weakforms {} --help` for usage.", command_name(cli.command));
            return ExitCode::from(2);
        }
    };
    let outcome = commands::run(&config);
    let text = match output::render(&config, &outcome) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &cli.common.out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    } else {
        print!("{text}");
    }
    match outcome {
        Outcome::Done { pass: true, .. } => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Dims => "dims",
        Command::Gaps => "gaps",
        Command::Basis => "basis",
        Command::Duality => "duality",
        Command::Genfun => "genfun",
        Command::Trace => "trace",
    }
}
