//! Command line driver: run certified grid sweeps, self-check invariants,
//! and reformat saved JSON reports as text tables.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use majorant::experiment::{
    self, emit, run_experiment, rows_to_table, self_check, ReportRow, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "majorant",
    about = "Two-sided guaranteed bounds for distributed elliptic optimal control problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and certify a sequence of grids, emitting a report.
    Run(RunArgs),
    /// Fast invariant self-test on tiny meshes.
    Check,
    /// Format an existing JSON report as an aligned text table.
    Table(TableArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated grid list, e.g. `8,16,32`.
    #[arg(long)]
    grids: Option<String>,
    /// Regularization weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Problem preset: `sine` or `custom` (see config keys f, y_d, u_d, nu).
    #[arg(long)]
    preset: Option<String>,
    /// Enable box constraints on the control.
    #[arg(long)]
    constrained: bool,
    /// Lower control bound expression (with --constrained).
    #[arg(long)]
    ua: Option<String>,
    /// Upper control bound expression (with --constrained).
    #[arg(long)]
    ub: Option<String>,
    /// Relative MINRES residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Reference-mesh factor for combined error norms.
    #[arg(long, value_name = "K")]
    ref_factor: Option<usize>,
    /// Stop MINRES after exactly N iterations instead of the tolerance.
    #[arg(long, value_name = "N")]
    fixed_iters: Option<usize>,
    /// Output path; `-` for stdout.
    #[arg(long)]
    out: Option<String>,
    /// Output format: csv, json, or table.
    #[arg(long)]
    format: Option<String>,
    /// Report wall-clock columns as zero for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
}

fn build_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        config.apply_file(&text).map_err(|e| e.to_string())?;
    }
    let mut set = |key: &str, value: Option<String>| -> Result<(), String> {
        if let Some(v) = value {
            config.apply(key, &v).map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    set("grids", args.grids.clone())?;
    set("lambda", args.lambda.map(|v| v.to_string()))?;
    set("preset", args.preset.clone())?;
    if args.constrained {
        set("constrained", Some("true".to_string()))?;
    }
    set("ua", args.ua.clone())?;
    set("ub", args.ub.clone())?;
    set("tol", args.tol.map(|v| v.to_string()))?;
    set("ref_factor", args.ref_factor.map(|v| v.to_string()))?;
    set("fixed_iters", args.fixed_iters.map(|v| v.to_string()))?;
    set("out", args.out.clone())?;
    set("format", args.format.clone())?;
    if args.no_timing {
        set("timing", Some("false".to_string()))?;
    }
    Ok(config)
}

fn write_output(path: &str, content: &str) -> Result<(), String> {
    if path == "-" {
        io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| e.to_string())
    } else {
        fs::write(path, content).map_err(|e| format!("cannot write {path}: {e}"))
    }
}

fn run(args: &RunArgs) -> Result<ExitCode, String> {
    let config = build_config(args)?;
    let reports = run_experiment(&config).map_err(|e| e.to_string())?;
    let content = emit(&reports, config.format);
    write_output(&config.out, &content)?;
    if config.out != "-" {
        eprintln!("wrote {} grids to {}", reports.len(), config.out);
    }
    let violations = self_check(&reports);
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("guaranteed bound violated: {v}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn check() -> ExitCode {
    let failures = experiment::quick_check();
    if failures.is_empty() {
        println!("all invariant checks passed");
        ExitCode::SUCCESS
    } else {
        for f in &failures {
            println!("FAIL: {f}");
        }
        ExitCode::FAILURE
    }
}

#[derive(Args)]
struct TableArgs {
    /// JSON report produced by `run --format json`; `-` for stdin.
    #[arg(long = "in", value_name = "PATH", default_value = "-")]
    input: String,
    /// Output path; `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

fn table(args: &TableArgs) -> Result<ExitCode, String> {
    let text = if args.input == "-" {
        let mut buf = String::new();
        io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| e.to_string())?;
        buf
    } else {
        fs::read_to_string(&args.input)
            .map_err(|e| format!("cannot read {}: {e}", args.input))?
    };
    let rows: Vec<ReportRow> =
        serde_json::from_str(&text).map_err(|e| format!("invalid report JSON: {e}"))?;
    write_output(&args.out, &rows_to_table(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Check => Ok(check()),
        Command::Table(args) => table(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
