//! Command-line front end: fit structures over a range of truncation
//! levels, score existing matrices, export pseudo-observations, and check
//! matrix files. Exit codes: 0 success, 1 usage, 2 data or structure
//! problem, 3 resource limit.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use truncvine::dataset::{self, PobsDivisor};
use truncvine::error::{Error, Result};
use truncvine::estimator::{EstimatorConfig, InfoEngine};
use truncvine::grid::DEFAULT_GRID_BUDGET;
use truncvine::pipeline::{run_fit, RunConfig};
use truncvine::scoring;
use truncvine::vine::{self, Orientation, VineMatrix};

#[derive(Parser)]
#[command(
    name = "truncvine",
    about = "Fit truncated vine structures to data and work with their matrix encodings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit structures for each truncation level and write matrices,
    /// structure files, and a report into the output directory.
    Fit(FitArgs),
    /// Score a vine matrix (ours or third party) against a dataset.
    Score(ScoreArgs),
    /// Export the rank-transformed pseudo-observations of a dataset.
    Pobs(PobsArgs),
    /// Check a matrix file against the structural rules.
    Validate(ValidateArgs),
}

fn parse_divisor(s: &str) -> std::result::Result<PobsDivisor, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_orientation(s: &str) -> std::result::Result<Orientation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Column names to drop, comma separated or repeated.
    #[arg(long = "drop", value_delimiter = ',')]
    drop: Vec<String>,
    /// Lowest truncation level (default 3).
    #[arg(long)]
    t_min: Option<usize>,
    /// Highest truncation level (default min(n, 20)).
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighbor order of the information estimator.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Rank divisor: "m" or "m+1".
    #[arg(long, value_parser = parse_divisor, default_value = "m")]
    pobs_divisor: PobsDivisor,
    /// Matrix orientation to emit: "paper" or "r-package".
    #[arg(long, value_parser = parse_orientation, default_value = "paper")]
    orientation: Orientation,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Maximum points a single reference grid may allocate.
    #[arg(long, default_value_t = DEFAULT_GRID_BUDGET)]
    memory_budget: u64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Input CSV the matrix is scored against.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "drop", value_delimiter = ',')]
    drop: Vec<String>,
    /// Matrix CSV to score.
    #[arg(long)]
    matrix: PathBuf,
    /// Meta sidecar; defaults to <matrix>.meta.json when present.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Orientation of a bare matrix file (overrides the sidecar).
    #[arg(long, value_parser = parse_orientation)]
    orientation: Option<Orientation>,
    /// Truncation level to score at (default: the matrix's own level).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_parser = parse_divisor, default_value = "m")]
    pobs_divisor: PobsDivisor,
    /// Write the score JSON here as well as printing a summary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_BUDGET)]
    memory_budget: u64,
}

#[derive(Args)]
struct PobsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "drop", value_delimiter = ',')]
    drop: Vec<String>,
    #[arg(long, value_parser = parse_divisor, default_value = "m")]
    pobs_divisor: PobsDivisor,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Matrix CSV to check.
    #[arg(long)]
    matrix: PathBuf,
    /// Meta sidecar; defaults to <matrix>.meta.json when present.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Orientation of a bare matrix file (overrides the sidecar).
    #[arg(long, value_parser = parse_orientation)]
    orientation: Option<Orientation>,
    /// Truncation level to check against (overrides the sidecar).
    #[arg(long)]
    t: Option<usize>,
}

/// Load a matrix plus whatever meta is available, then apply explicit
/// orientation/level overrides by rewrapping the same cells.
fn load_matrix(
    path: &Path,
    meta_flag: Option<&Path>,
    orientation: Option<Orientation>,
    t: Option<usize>,
) -> Result<VineMatrix> {
    let sidecar = path.with_extension("meta.json");
    let meta = match meta_flag {
        Some(p) => Some(vine::read_matrix_meta(p)?),
        None if sidecar.exists() => Some(vine::read_matrix_meta(&sidecar)?),
        None => None,
    };
    let loaded = vine::read_matrix_csv(path, meta.as_ref())?;
    if orientation.is_none() && t.is_none() {
        return Ok(loaded);
    }
    VineMatrix::from_entries(
        loaded.n(),
        t.unwrap_or(loaded.trunc_level()),
        orientation.unwrap_or(loaded.orientation()),
        loaded.rows().concat(),
    )
}

fn cmd_fit(args: FitArgs) -> Result<i32> {
    let config = RunConfig {
        input: args.input,
        drop_columns: args.drop,
        t_min: args.t_min,
        t_max: args.t_max,
        seed: args.seed,
        k_neighbors: args.k,
        pobs_divisor: args.pobs_divisor,
        orientation: args.orientation,
        out_dir: args.out.clone(),
        grid_budget: args.memory_budget,
    };
    let report = run_fit(&config)?;
    println!(
        "fit: {} variables, {} rows, levels {}..={} (seed {})",
        report.n, report.m, report.t_min, report.t_max, report.seed
    );
    let mut failures = 0;
    for rec in &report.levels {
        match (rec.weight_bits, &rec.error) {
            (Some(w), _) => println!(
                "  t={:<3} weight={:>12.6} bits  {:>8.2}s  {}",
                rec.trunc_level,
                w,
                rec.wall_time_secs,
                rec.matrix_file.as_deref().unwrap_or("")
            ),
            (None, Some(e)) => {
                failures += 1;
                println!("  t={:<3} FAILED: {e}", rec.trunc_level);
            }
            (None, None) => unreachable!("record without weight or error"),
        }
    }
    println!("report: {}", args.out.join("report.json").display());
    // Partial failures are reported in-band; the run itself succeeded.
    let _ = failures;
    Ok(0)
}

fn cmd_score(args: ScoreArgs) -> Result<i32> {
    let matrix = load_matrix(
        &args.matrix,
        args.meta.as_deref(),
        args.orientation,
        args.t,
    )?;
    let level = args.t.unwrap_or(matrix.trunc_level());
    let data = dataset::load_csv(&args.input, &args.drop)?;
    let po = dataset::pobs(&data, args.pobs_divisor);
    if po.n_cols() != matrix.n() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{} but the data has {} columns",
            matrix.n(),
            matrix.n(),
            po.n_cols()
        )));
    }
    let mut est = EstimatorConfig::new(level, args.seed);
    est.k_neighbors = args.k;
    est.grid_budget = args.memory_budget;
    let mut engine = InfoEngine::new(po, est)?;
    let score = scoring::score_external_matrix(&mut engine, &matrix, level)?;
    println!(
        "weight at level {}: {:.6} bits ({} clusters, {} separators)",
        score.trunc_level,
        score.weight,
        score.per_cluster.len(),
        score.per_separator.len()
    );
    let json = scoring::score_json(&score)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &json).map_err(|e| Error::io(out, e))?;
        println!("score: {}", out.display());
    } else {
        print!("{json}");
    }
    Ok(0)
}

fn cmd_pobs(args: PobsArgs) -> Result<i32> {
    let data = dataset::load_csv(&args.input, &args.drop)?;
    let po = dataset::pobs(&data, args.pobs_divisor);
    po.write_csv(&args.out)?;
    println!(
        "pobs: {} rows, {} columns -> {}",
        po.n_rows(),
        po.n_cols(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let matrix = load_matrix(
        &args.matrix,
        args.meta.as_deref(),
        args.orientation,
        args.t,
    )?;
    let violations = vine::validate(&matrix);
    if violations.is_empty() {
        println!(
            "ok: {}x{} matrix, truncation level {}, orientation {}",
            matrix.n(),
            matrix.n(),
            matrix.trunc_level(),
            matrix.orientation()
        );
        return Ok(0);
    }
    println!("{} violation(s):", violations.len());
    for v in &violations {
        println!("  {v}");
    }
    Ok(2)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; real parse errors
            // are usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Score(args) => cmd_score(args),
        Command::Pobs(args) => cmd_pobs(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
