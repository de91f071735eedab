use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{run_bench, write_bench, Method};
use crate::checkpoint::{load_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::report::{report, ReportFormat};
use crate::run::Driver;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rfsearch", version, about = "Tree search over generated reward programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start a run from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "rfsearch-run")]
        out: PathBuf,
    },
    /// Continue a run from its checkpoint; outputs go next to the checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print the best path (text) or the best-so-far curve (csv).
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run several methods over several seeds and write median curves.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "mcts,greedy,evolution")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 5)]
        seeds: u32,
        #[arg(long, default_value = "rfsearch-bench")]
        out: PathBuf,
    },
    /// Write the best candidate's source to a file.
    ExportBest {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
}

/// A failure and the exit code it maps to.
struct Failure(i32, String);

fn config_err(e: impl ToString) -> Failure {
    Failure(EXIT_CONFIG, e.to_string())
}

fn runtime_err(e: impl ToString) -> Failure {
    Failure(EXIT_RUNTIME, e.to_string())
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config).map_err(config_err)?;
            let mut driver = Driver::new(cfg.backends, &out);
            driver.on_step = Some(Box::new(|s| eprintln!("t = {:>4}/{}  best = {:?}", s.t, s.config.budget, s.trace.best())));
            let state = driver.start(cfg.search, None).map_err(runtime_err)?;
            print!("{}", report(&state, ReportFormat::Text));
            println!("\nrun directory: {}", out.display());
            Ok(())
        }
        Command::Resume { checkpoint } => {
            let Checkpoint { backends, mut state } = load_checkpoint(&checkpoint).map_err(config_err)?;
            let out = checkpoint.parent().map(Path::to_path_buf).unwrap_or_default();
            let mut driver = Driver::new(backends, &out);
            driver.resume(&mut state, None).map_err(runtime_err)?;
            print!("{}", report(&state, ReportFormat::Text));
            Ok(())
        }
        Command::Inspect { checkpoint, format } => {
            let ckpt = load_checkpoint(&checkpoint).map_err(config_err)?;
            let format = match format {
                Format::Text => ReportFormat::Text,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", report(&ckpt.state, format));
            Ok(())
        }
        Command::Bench {
            config,
            methods,
            seeds,
            out,
        } => {
            let cfg = RunConfig::load(&config).map_err(config_err)?;
            let methods: Vec<Method> = methods.iter().map(|m| m.parse()).collect::<Result<_, _>>().map_err(config_err)?;
            let results = run_bench(&methods, &cfg.search, &cfg.backends, seeds, &out.join("work")).map_err(runtime_err)?;
            write_bench(&out, &results).map_err(runtime_err)?;
            println!("method,median_best");
            for r in &results {
                println!("{},{}", r.method, r.median_best().map(|b| b.to_string()).unwrap_or_default());
            }
            Ok(())
        }
        Command::ExportBest { checkpoint, out } => {
            let ckpt = load_checkpoint(&checkpoint).map_err(config_err)?;
            let best = ckpt.state.best_node().ok_or_else(|| runtime_err("checkpoint has no evaluated node"))?;
            let source = &ckpt.state.tree.node(best).candidate.source_text;
            fs::write(&out, source).map_err(|e| runtime_err(format!("cannot write {}: {e}", out.display())))?;
            println!("node {best} -> {}", out.display());
            Ok(())
        }
    }
}
