use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stinespring_cli::commands::{self, CatalogArgs, Context, Outcome};
use stinespring_cli::{CliError, TolOverrides};

/// Stinespring subproduct systems, dilations and dequantization of finite
/// quantum channels.
///
/// Exit status: 0 on success, 1 when a channel or check fails, 2 on bad input.
#[derive(Parser)]
#[command(name = "stinespring", version)]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolArgs {
    /// Relative singular-value cutoff for numerical ranks.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Tolerance for residual checks.
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    /// Largest number of words n^m a level may enumerate.
    #[arg(long, global = true)]
    word_cap: Option<usize>,
}

#[derive(Args)]
struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table {
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check unitality and minimality of a channel.
    Validate {
        channel: PathBuf,
        /// Write an equivalent minimal channel document to this path.
        #[arg(long, value_name = "PATH")]
        minimalize: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Dimensions d_m of the subproduct system (CSV: m, d_m, subproduct_residual_max).
    Dims {
        channel: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[command(flatten)]
        table: Table,
    },
    /// Residuals of the subproduct law over all splits m + l <= max-m.
    SubproductCheck {
        channel: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[command(flatten)]
        table: Table,
    },
    /// Stinespring isometry V_m and, at level 1, the unitary dilation W.
    Dilate {
        channel: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Complementary channel output for the document state (default I/d).
    Complementary {
        channel: PathBuf,
        /// State to use instead of the one in the document.
        #[arg(long)]
        state: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Time-m dequantization of an observable.
    Dequantize {
        channel: PathBuf,
        #[arg(long)]
        observable: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Convergence sequences for two observables
    /// (CSV: m, norm_gap, vn_residual, scaled_commutator, limit_state_gap).
    Converge {
        channel: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        observables: Vec<PathBuf>,
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[command(flatten)]
        table: Table,
    },
    /// Emit a channel document for a catalog family.
    Catalog {
        /// identity, unitary, projective, commuting_generic, random_unital or sequential_projective.
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Projection ranks for the projective family.
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Rotation angle for the sequential family.
        #[arg(long)]
        angle: Option<f64>,
        /// Emit the catalog spec instead of explicit Kraus matrices.
        #[arg(long)]
        spec_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => commands::write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

fn finish_report(outcome: Outcome, out: Option<&Path>) -> Result<Option<String>, CliError> {
    emit(out, &outcome.report.to_json())?;
    Ok(outcome.failure)
}

fn finish_table(outcome: Outcome, table: &Table) -> Result<Option<String>, CliError> {
    if let Some(csv) = &outcome.csv {
        emit(table.csv.as_deref(), csv)?;
    }
    if let Some(out) = &table.out {
        commands::write_file(out, &outcome.report.to_json())?;
    }
    Ok(outcome.failure)
}

fn run(cli: Cli, echo: Vec<String>) -> Result<Option<String>, CliError> {
    let over = TolOverrides {
        rank: cli.tol.tol_rank,
        residual: cli.tol.tol_residual,
        word_cap: cli.tol.word_cap,
    };
    let ctx = Context { echo, over };
    match cli.command {
        Command::Validate {
            channel,
            minimalize,
            output,
        } => finish_report(
            commands::validate(&ctx, &channel, minimalize.as_deref())?,
            output.out.as_deref(),
        ),
        Command::Dims { channel, max_m, table } => finish_table(commands::dims(&ctx, &channel, max_m)?, &table),
        Command::SubproductCheck { channel, max_m, table } => {
            finish_table(commands::subproduct_check(&ctx, &channel, max_m)?, &table)
        }
        Command::Dilate { channel, level, output } => {
            finish_report(commands::dilate(&ctx, &channel, level)?, output.out.as_deref())
        }
        Command::Complementary { channel, state, output } => finish_report(
            commands::complementary(&ctx, &channel, state.as_deref())?,
            output.out.as_deref(),
        ),
        Command::Dequantize {
            channel,
            observable,
            level,
            output,
        } => finish_report(
            commands::dequantize_cmd(&ctx, &channel, &observable, level)?,
            output.out.as_deref(),
        ),
        Command::Converge {
            channel,
            observables,
            max_m,
            table,
        } => finish_table(
            commands::converge(&ctx, &channel, &observables[0], &observables[1], max_m)?,
            &table,
        ),
        Command::Catalog {
            family,
            n,
            d,
            seed,
            ranks,
            angle,
            spec_only,
            out,
        } => {
            let args = CatalogArgs {
                family,
                n,
                d,
                seed,
                ranks,
                angle,
                spec_only,
            };
            emit(out.as_deref(), &commands::catalog_doc(&args, over)?.to_json())?;
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, echo) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("check failed: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
