use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drss::dataio::{load_dense_features, load_libsvm_file, LabelMap, PrepareOptions};
use drss::experiment::{
    format_g10, parse_a_grid, radius_for, run_grid, validate_oracle, write_rows, ExperimentConfig,
    LambdaGrid, OracleConfig, RowStatus, Task, DEFAULT_A_GRID,
};
use drss::models::Dataset;
use drss::solver::lambda_max;
use drss::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(name = "drss", version, about = "Distributionally robust safe screening for weighted SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screening rates over a (lambda, a) grid, written as CSV.
    Run(RunArgs),
    /// Certify screening decisions by retraining at sampled weights.
    Validate(ValidateArgs),
    /// Print lambda_max of the L1-regularized model at unit weights.
    LambdaMax(DataArgs),
}

#[derive(Args)]
struct DataArgs {
    /// LIBSVM-format input.
    #[arg(long, conflicts_with = "dense_csv", required_unless_present = "dense_csv")]
    data: Option<PathBuf>,
    /// Dense CSV with a header row and a label column.
    #[arg(long)]
    dense_csv: Option<PathBuf>,
    /// Label column name for --dense-csv.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Raw-to-±1 label mapping, e.g. `0:-1,1:1`.
    #[arg(long)]
    label_map: Option<String>,
    /// Drop every feature column that contains a zero.
    #[arg(long)]
    drop_zero_features: bool,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_parser = ["drsss", "drsfs"])]
    task: String,
    /// `n:0:-0.5:-3`, `lmax:0:-1/3:-2`, `<anchor>:start:step:stop` or a list.
    /// Defaults to the first form for drsss and the second for drsfs.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// `start:stop:step` or a list of a values.
    #[arg(long, default_value = DEFAULT_A_GRID)]
    a_grid: String,
    /// Permit a values outside [0.9, 1.1].
    #[arg(long)]
    allow_wide: bool,
    /// Reference duality gap relative to max(1, P_w(0)).
    #[arg(long, default_value_t = 1e-10)]
    gap_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Weight vectors sampled per grid cell.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Absolute duality gap for every retraining.
    #[arg(long, default_value_t = 1e-11)]
    retrain_gap_tol: f64,
    /// Skip the n·samples budget check.
    #[arg(long)]
    force: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::SolverCapExceeded { .. } | Error::KernelCapExceeded { .. } => EXIT_SOLVER,
        Error::Io(_)
        | Error::Parse(_)
        | Error::Csv(_)
        | Error::InvalidDataset(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite(_) => EXIT_DATA,
        _ => EXIT_SOLVER,
    }
}

fn load(args: &DataArgs) -> Result<(String, Dataset), Error> {
    let map = args.label_map.as_deref().map(LabelMap::parse).transpose()?;
    let name = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    };
    if let Some(path) = &args.data {
        let opts = PrepareOptions {
            label_map: map,
            drop_zero_features: args.drop_zero_features,
            dims: None,
        };
        Ok((name(path), load_libsvm_file(path, &opts)?.dataset))
    } else {
        let path = args.dense_csv.as_ref().expect("clap enforces one input");
        if args.drop_zero_features {
            return Err(Error::Config("--drop-zero-features applies to --data only".into()));
        }
        let ds = load_dense_features(File::open(path)?, &args.label_column, map.as_ref())?;
        Ok((name(path), ds))
    }
}

fn config(name: String, g: &GridArgs) -> Result<ExperimentConfig, Error> {
    let task = Task::parse(&g.task)?;
    let grid_text = g.lambda_grid.clone().unwrap_or_else(|| {
        match task {
            Task::Drsss => "n:0:-0.5:-3",
            Task::Drsfs => "lmax:0:-1/3:-2",
        }
        .to_string()
    });
    if g.gap_tol.is_nan() || g.gap_tol <= 0.0 {
        return Err(Error::Config("--gap-tol must be positive".into()));
    }
    Ok(ExperimentConfig {
        dataset_name: name,
        task,
        lambda_grid: LambdaGrid::parse(&grid_text)?,
        a_grid: parse_a_grid(&g.a_grid, g.allow_wide)?,
        gap_tol: g.gap_tol,
        seed: g.seed,
    })
}

fn cmd_run(args: RunArgs) -> Result<u8, Error> {
    let (name, data) = load(&args.data)?;
    let cfg = config(name, &args.grid)?;
    let rows = run_grid(&cfg, &data)?;
    match &args.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_rows(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_rows(&rows, io::stdout().lock())?,
    }
    let failed = rows.iter().any(|r| r.status == RowStatus::SolverFailed);
    Ok(if failed { EXIT_SOLVER } else { 0 })
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, Error> {
    let (_, data) = load(&args.data)?;
    let cfg = config(String::new(), &args.grid)?;
    let lambdas = cfg.lambda_grid.resolve(&data)?;
    let mut out = io::stdout().lock();
    writeln!(out, "lambda,a,S,screened,total,violations,max_abs_screened")?;
    let mut violations = 0;
    for &lam in &lambdas {
        for &a in &cfg.a_grid {
            let oc = OracleConfig {
                task: cfg.task,
                lambda: lam,
                radius: radius_for(data.n_pos(), a),
                samples: args.samples,
                retrain_gap_tol: args.retrain_gap_tol,
                reference_gap_tol: cfg.gap_tol,
                seed: cfg.seed,
                force: args.force,
            };
            let rep = validate_oracle(&oc, &data)?;
            violations += rep.violations();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_g10(lam),
                format_g10(a),
                format_g10(oc.radius),
                rep.report.count(),
                rep.report.total(),
                rep.violations(),
                format_g10(rep.check.max_abs_screened)
            )?;
        }
    }
    Ok(if violations > 0 { EXIT_VIOLATION } else { 0 })
}

fn cmd_lambda_max(args: DataArgs) -> Result<u8, Error> {
    let (_, data) = load(&args)?;
    let lm = lambda_max(&data, &vec![1.0; data.n()])?;
    println!("{}", format_g10(lm));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Validate(a) => cmd_validate(a),
        Command::LambdaMax(a) => cmd_lambda_max(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
