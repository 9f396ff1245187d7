//! `pinlab`: runs one experiment per invocation, writing CSV tables and a JSON
//! manifest into the output directory. Exit status is 0 iff every assertion
//! of the run passes, 1 if one fails and 2 on configuration or runtime errors.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use commands::Run;
use config::{parse_overrides, read_config_file, resolve};
use manifest::{aggregate, write_report_csv, Assertion, Manifest};

#[derive(Parser)]
#[command(name = "pinlab", version, about = "Critical disordered pinning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a step law's moment and lattice assumptions.
    ValidateWalk(RunArgs),
    /// Tabulate p_n(0), K(n), u(n) and R_N.
    Kernels(RunArgs),
    /// Solve for the critical-window β_N.
    Beta(RunArgs),
    /// Decomposition identity and chaos/pinning agreement on random fields.
    Partition(RunArgs),
    /// Exact mean and second moment against the field ensemble.
    Moments(RunArgs),
    /// Dickman densities, optionally with the renewal KS check.
    #[command(alias = "dickman-table")]
    Dickman(RunArgs),
    /// Tabulate G_ϑ and check its renewal identity.
    Gtheta(RunArgs),
    /// Coarse-graining experiments (operation = moments | no_triple | convergence).
    Cg(RunArgs),
    /// Mollified stochastic heat equation ensemble.
    She(RunArgs),
    /// Run the command named by the config's `command` key.
    Run(RunArgs),
    /// Aggregate every manifest under a directory into one pass/fail table.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Config keys as `--key value` or `--key=value` (dots for nested keys,
    /// e.g. `--phi.width 0.5`).
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory searched recursively for `*.manifest.json`.
    dir: PathBuf,
    /// CSV destination; default `<dir>/report.csv`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn execute<T, F>(command: &str, args: &RunArgs, run_fn: F) -> Result<bool>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, &mut Run) -> Result<Vec<Assertion>>,
{
    let base = match &args.config {
        Some(p) => read_config_file(p)?,
        None => Value::Null,
    };
    let r = resolve::<T>(command, base, &parse_overrides(&args.overrides)?)?;
    let dir = r.common.out_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = r.common.name.clone().unwrap_or_else(|| command.to_string());
    let mut run = Run { dir: dir.clone(), stem: name.clone(), seed: r.common.seed, workers: r.common.workers, outputs: vec![] };
    if let Some(w) = run.workers {
        if w == 0 {
            bail!("workers must be positive");
        }
    }
    let t = Instant::now();
    let assertions = run_fn(&r.params, &mut run)?;
    let pass = assertions.iter().all(|a| a.pass);
    let m = Manifest {
        command: command.into(),
        name,
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: r.hash,
        config: r.echo,
        seed: r.common.seed,
        workers: r.common.workers,
        assertions,
        pass,
        outputs: run.outputs,
        wall_time_s: t.elapsed().as_secs_f64(),
    };
    let path = m.write(&dir)?;
    for a in &m.assertions {
        println!("{} {}: {:e} (threshold {:e}){}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.value, a.threshold, if a.detail.is_empty() { String::new() } else { format!(" [{}]", a.detail) });
    }
    println!("manifest: {}", path.display());
    Ok(pass)
}

fn dispatch(command: &str, args: &RunArgs) -> Result<bool> {
    match command {
        "validate-walk" => execute(command, args, commands::validate_walk),
        "kernels" => execute(command, args, commands::kernels),
        "beta" => execute(command, args, commands::beta),
        "partition" => execute(command, args, commands::partition),
        "moments" => execute(command, args, commands::moments),
        "dickman" => execute(command, args, commands::dickman),
        "gtheta" => execute(command, args, commands::gtheta),
        "cg" => execute(command, args, commands::cg),
        "she" => execute(command, args, commands::she),
        other => bail!("unknown command `{other}`"),
    }
}

fn report(args: &ReportArgs) -> Result<bool> {
    let rows = aggregate(&args.dir)?;
    if rows.is_empty() {
        bail!("no manifests under {}", args.dir.display());
    }
    let out = args.out.clone().unwrap_or_else(|| args.dir.join("report.csv"));
    write_report_csv(std::io::BufWriter::new(std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?), &rows)?;
    let width = rows.iter().map(|r| r.run.len()).max().unwrap_or(3).max(3);
    println!("{:<width$}  {:<13}  {:>10}  result", "run", "command", "assertions");
    for r in &rows {
        let failed = if r.failed.is_empty() { String::new() } else { format!(" ({})", r.failed.join("; ")) };
        println!("{:<width$}  {:<13}  {:>10}  {}{failed}", r.run, r.command, r.assertions, if r.pass { "PASS" } else { "FAIL" });
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("{passed}/{} runs passed; table written to {}", rows.len(), out.display());
    Ok(passed == rows.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ValidateWalk(a) => dispatch("validate-walk", a),
        Command::Kernels(a) => dispatch("kernels", a),
        Command::Beta(a) => dispatch("beta", a),
        Command::Partition(a) => dispatch("partition", a),
        Command::Moments(a) => dispatch("moments", a),
        Command::Dickman(a) => dispatch("dickman", a),
        Command::Gtheta(a) => dispatch("gtheta", a),
        Command::Cg(a) => dispatch("cg", a),
        Command::She(a) => dispatch("she", a),
        Command::Run(a) => (|| {
            let Some(p) = &a.config else { bail!("`run` needs --config") };
            let v = read_config_file(p)?;
            let Some(c) = v.get("command").and_then(Value::as_str) else { bail!("{}: missing field `command`", p.display()) };
            dispatch(c, a)
        })(),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
