use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pogd_harness::metrics::{write_metrics, MetricsRecord};
use pogd_harness::report::parse_decimal;
use pogd_harness::{
    compare_report, parse_config, run_testfn, ConfigError, Experiment, ExperimentConfig, HarnessError, ReportOptions,
    Result,
};

#[derive(Parser)]
#[command(name = "pogd", version, about = "POGD experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model as described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write per-step rows to `<output>.iter.csv`.
        #[arg(long)]
        iter_log: bool,
        /// Override the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Minimize an analytic test function.
    Testfn {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare runs from metrics CSVs.
    Report {
        #[arg(required = true, num_args = 1..)]
        csv: Vec<PathBuf>,
        /// Report the first epoch reaching this validation accuracy.
        #[arg(long)]
        acc_threshold: Option<String>,
        /// Report the first epoch (and logged step) reaching this loss.
        #[arg(long)]
        loss_threshold: Option<String>,
        /// Where to write the long-format CSV.
        #[arg(long, default_value = "report.long.csv")]
        long: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>, output: Option<PathBuf>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::new(None, format!("{}: {e}", path.display())))?;
    let mut config = parse_config(&text).map_err(|e| ConfigError::new(e.line, format!("{}: {}", path.display(), e.message)))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(output) = output {
        config.output = output;
    }
    Ok(config)
}

fn companion(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy();
    output.with_file_name(format!("{stem}{suffix}"))
}

fn print_row(r: &MetricsRecord) {
    let val = match (r.val_loss, r.val_acc) {
        (Some(l), Some(a)) => format!("  val_loss {l:.4}  val_acc {a:.4}"),
        _ => String::new(),
    };
    eprintln!(
        "{} epoch {}: train_loss {:.4}  train_acc {:.4}{val}  lr {}",
        r.run_id,
        r.epoch,
        r.train_loss,
        r.train_acc.unwrap_or(f64::NAN),
        r.effective_lr.unwrap_or(f64::NAN)
    );
}

/// Writes what finished plus a sidecar describing the failure.
fn record_abort(config: &ExperimentConfig, err: &HarnessError) {
    if let HarnessError::Aborted(abort) = err {
        let _ = write_metrics(&abort.completed, &config.output);
        let _ = fs::write(companion(&config.output, ".abort"), format!("{abort}\n"));
    }
}

fn run(config: PathBuf, seed: Option<u64>, iter_log: bool, output: Option<PathBuf>) -> Result<()> {
    let mut config = load_config(&config, seed, output)?;
    config.iter_log |= iter_log;
    if config.is_testfn() {
        return testfn_with(config);
    }
    let result = if config.epochs == 0 {
        Ok(Default::default())
    } else {
        Experiment::new(&config).and_then(|mut exp| exp.run_with(print_row))
    };
    let out = result.inspect_err(|e| record_abort(&config, e))?;
    write_metrics(&out.records, &config.output)?;
    if config.iter_log {
        write_metrics(&out.iterations, companion(&config.output, ".iter.csv"))?;
    }
    eprintln!("wrote {}", config.output.display());
    Ok(())
}

fn testfn_with(config: ExperimentConfig) -> Result<()> {
    let out = run_testfn(&config).inspect_err(|e| record_abort(&config, e))?;
    write_metrics(&out.records, &config.output)?;
    println!("final f = {:e} at x = {:?}", out.final_f, out.final_x);
    eprintln!("wrote {}", config.output.display());
    Ok(())
}

fn threshold(text: Option<String>, flag: &str) -> Result<Option<pogd_harness::report::Exact>> {
    text.map(|t| parse_decimal(&t).ok_or_else(|| ConfigError::new(None, format!("--{flag}: `{t}` is not a decimal")).into()))
        .transpose()
}

fn main() -> ExitCode {
    // Usage errors are configuration errors: exit 1, not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, seed, iter_log, output } => run(config, seed, iter_log, output),
        Command::Testfn { config, seed, output } => load_config(&config, seed, output).and_then(testfn_with),
        Command::Report { csv, acc_threshold, loss_threshold, long } => (|| {
            let options = ReportOptions {
                acc_threshold: threshold(acc_threshold, "acc-threshold")?,
                loss_threshold: threshold(loss_threshold, "loss-threshold")?,
            };
            let report = compare_report(&csv, &options)?;
            print!("{}", report.text);
            fs::write(&long, &report.long_csv).map_err(|source| HarnessError::Io { path: long.clone(), source })?;
            eprintln!("wrote {}", long.display());
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
