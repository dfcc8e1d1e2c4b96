use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_cumulants::rho_alpha::ScanParameter;
use levy_cumulants::MultiIndex;
use levy_cumulants_cli::commands::{self, ScanRequest, VerifyOptions};
use levy_cumulants_cli::{CliError, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "levycum", version, about = "Joint cumulants of subordinated NIG models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Raw and normalized joint cumulant at one maturity.
    Cumulant {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Multi-index such as `1,2`.
        #[arg(long)]
        index: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Cross cumulants over a grid of rho, a or t.
    Scan {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        orders: Option<u32>,
        /// Output file; standard output when absent from both flags and config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check closed forms against independent routes and simulation.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the multi-index partitions of an index.
    Partitions {
        #[arg(long)]
        index: String,
    },
}

fn load(path: Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(&p),
        None => Ok(RunConfig::default()),
    }
}

fn parse_index(s: &str) -> Result<MultiIndex, CliError> {
    s.parse()
        .map_err(|e: levy_cumulants::Error| CliError::Input(format!("index {s:?}: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cumulant { config, index, t } => {
            let config = load(config)?;
            let report = commands::cmd_cumulant(&config, &parse_index(&index)?, t)?;
            print!("{}", report.render());
        }
        Command::Scan {
            config,
            param,
            from,
            to,
            steps,
            orders,
            out,
            format,
            workers,
        } => {
            let config = load(config)?;
            let mut request = match (&param, from, to, steps) {
                (Some(p), Some(from), Some(to), Some(steps)) => ScanRequest {
                    param: p.parse::<ScanParameter>()?,
                    from,
                    to,
                    steps,
                    orders: config.orders,
                    workers: config.workers(),
                },
                _ => {
                    let mut r = ScanRequest::from_config(&config)?;
                    if let Some(p) = &param {
                        r.param = p.parse()?;
                    }
                    r.from = from.unwrap_or(r.from);
                    r.to = to.unwrap_or(r.to);
                    r.steps = steps.unwrap_or(r.steps);
                    r
                }
            };
            if let Some(o) = orders {
                request.orders = o;
            }
            if let Some(w) = workers {
                request.workers = w.max(1);
            }
            if request.steps == 0 {
                return Err(CliError::Input("scan steps must be at least 1".into()));
            }
            let rows = commands::cmd_scan(&config, &request)?;
            let format = format
                .or(config.output.as_ref().map(|o| o.format))
                .unwrap_or(OutputFormat::Csv);
            let text = commands::render(&rows, format);
            match out.or(config.output.as_ref().map(|o| o.path.clone())) {
                Some(path) => commands::write_output(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Verify {
            config,
            paths,
            seed,
            workers,
        } => {
            let config = load(config)?;
            let mut options = VerifyOptions::from_config(&config);
            options.num_paths = paths.unwrap_or(options.num_paths);
            options.seed = seed.unwrap_or(options.seed);
            options.workers = workers.unwrap_or(options.workers).max(1);
            let report = commands::cmd_verify(&config, &options)?;
            print!("{}", report.render());
            if !report.passed() {
                let names: Vec<String> = report
                    .failures()
                    .iter()
                    .map(|c| format!("{}: {} ({})", c.section, c.name, c.detail))
                    .collect();
                return Err(CliError::Verification(names.join("; ")));
            }
        }
        Command::Partitions { index } => {
            print!("{}", commands::cmd_partitions(&parse_index(&index)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
