use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use pawl_cli::config::{documented_defaults, ExperimentConfig};
use pawl_cli::{compare_runs, run_seeds, HarnessError};
use pawl_core::binning::BinPartition;
use pawl_core::targets::{
    bundled_pollution, enumerate_psi, format_real, generate_mixture_data, load_pollution_data,
    render_pollution_csv, synthetic_icefloe_image, synthetic_pollution, GPriorTarget, ICEFLOE_SEED,
    MIXTURE_SEED, POLLUTION_SEED,
};

#[derive(Parser)]
#[command(
    name = "pawl",
    version,
    about = "Parallel adaptive Wang-Landau experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifact directory.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds to run concurrently, as `a..b` (exclusive) or `a,b,c`.
        /// Replaces the configured seed.
        #[arg(long)]
        seeds: Option<String>,
        /// Configuration overrides: `--section.key VALUE` or `--key=VALUE`.
        #[arg(
            trailing_var_arg = true,
            allow_hyphen_values = true,
            value_name = "OVERRIDES"
        )]
        overrides: Vec<String>,
    },
    /// Tabulate metrics of finished runs with per-algorithm medians.
    Compare {
        /// Run directories, all on the same target.
        dirs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact per-bin posterior masses of the g-prior target by enumeration.
    EnumeratePsi {
        #[arg(long, default_value_t = 377.0)]
        lo: f64,
        #[arg(long, default_value_t = 450.0)]
        hi: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        log_g: f64,
        /// Pollution CSV; defaults to the bundled data.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regenerate a bundled synthetic data set.
    GenerateData {
        kind: DataKind,
        /// Defaults to the seed of the bundled file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Mixture,
    Icefloe,
    Pollution,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::Config(format!("--seeds: cannot parse {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn emit(text: &str, output: Option<PathBuf>) -> Result<(), HarnessError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run {
            config,
            seeds,
            overrides,
        } => {
            let mut overrides = overrides;
            let cfg_text = match &config {
                Some(p) => std::fs::read_to_string(p).map_err(|e| {
                    HarnessError::Config(format!("cannot read {}: {e}", p.display()))
                })?,
                None => String::new(),
            };
            let seeds = seeds.as_deref().map(parse_seeds).transpose()?;
            // a seed list stands in for the required seed key
            if let Some(first) = seeds.as_ref().and_then(|s| s.first()) {
                overrides.push("--seed".into());
                overrides.push(first.to_string());
            }
            let cfg = ExperimentConfig::from_toml_with_overrides(&cfg_text, &overrides)?;
            let seeds = seeds.unwrap_or_else(|| vec![cfg.seed]);
            let mut first_error = None;
            for (seed, result) in seeds.iter().zip(run_seeds(&cfg, &seeds)) {
                match result {
                    Ok(dir) => println!("{}", dir.display()),
                    Err(e) => {
                        if seeds.len() > 1 {
                            eprintln!("seed {seed}: {e}");
                        }
                        first_error.get_or_insert(e);
                    }
                }
            }
            first_error.map_or(Ok(()), Err)
        }
        Command::Compare { dirs, output } => emit(&compare_runs(&dirs)?.to_csv()?, output),
        Command::EnumeratePsi {
            lo,
            hi,
            bins,
            log_g,
            data,
            output,
        } => {
            let d = match data {
                Some(p) => {
                    load_pollution_data(&p).map_err(|e| HarnessError::Config(e.to_string()))?
                }
                None => bundled_pollution(),
            };
            let partition = BinPartition::equal_width(lo, hi, bins)?;
            let psi = enumerate_psi(&GPriorTarget::new(&d, log_g), &partition);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["bin", "lower", "upper", "psi"])?;
            for (i, p) in psi.iter().enumerate() {
                let (a, b) = partition.bounds(i);
                w.write_record([
                    i.to_string(),
                    format_real(a),
                    format_real(b),
                    format_real(*p),
                ])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            emit(&String::from_utf8_lossy(&bytes), output)
        }
        Command::GenerateData { kind, seed, output } => {
            let text = match kind {
                DataKind::Mixture => generate_mixture_data(seed.unwrap_or(MIXTURE_SEED))
                    .iter()
                    .map(|v| format_real(*v) + "\n")
                    .collect(),
                DataKind::Icefloe => synthetic_icefloe_image(seed.unwrap_or(ICEFLOE_SEED)).render(),
                DataKind::Pollution => {
                    let (names, rows) = synthetic_pollution(seed.unwrap_or(POLLUTION_SEED));
                    render_pollution_csv(&names, &rows)
                }
            };
            emit(&text, output)
        }
    }
}

fn main() -> ExitCode {
    let command = Cli::command().mut_subcommand("run", |c| c.after_help(documented_defaults()));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
