//! `warpcurv`: batch front end for the curvature engine.
//!
//! Exit codes: 0 success, 1 verification violation, 2 config error,
//! 3 runtime evaluation error.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Eval(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "warpcurv", version, about = "Curvature of graphs in warped products")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; replaces the config's output list.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Print the catalog model names and exit.
    #[arg(long)]
    list_models: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pointwise report of the graph at one base point.
    Point {
        /// Base point, comma separated; defaults to `point` in the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
    },
    /// Slice curvatures and σ on a grid of heights.
    SliceTable {
        /// Heights, comma separated; defaults to `t_grid` in the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
    },
    /// Identity suite and estimate checks.
    Verify,
    /// Catalog models; plain names unless a format is given.
    ListModels {
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("WARPCURV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("WARPCURV_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("WARPCURV_THREADS: {e}")))
}

fn format_for(path: &Path, flag: Option<Format>) -> Format {
    flag.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    })
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    RunConfig::load(path)
}

/// Everything is rendered before the first byte is written.
fn emit(cli: &Cli, cfg: Option<&RunConfig>, doc: &output::Document, default: Format) -> Result<(), CliError> {
    let mut targets: Vec<(Option<PathBuf>, Format)> = Vec::new();
    if let Some(p) = &cli.out {
        targets.push((Some(p.clone()), format_for(p, cli.format)));
    } else if let Some(c) = cfg.filter(|c| !c.outputs.is_empty()) {
        targets.extend(c.outputs.iter().map(|o| (Some(PathBuf::from(&o.path)), o.format)));
    } else {
        targets.push((None, cli.format.unwrap_or(default)));
    }
    let rendered = targets
        .into_iter()
        .map(|(p, f)| doc.render(f).map(|s| (p, s)))
        .collect::<Result<Vec<_>, _>>()?;
    for (path, text) in rendered {
        match path {
            Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    set_threads()?;
    let command = match (&cli.command, cli.list_models) {
        (Some(c), _) => c,
        (None, true) => &Command::ListModels { dim: 2 },
        (None, false) => return Err(CliError::Config("no command given; see --help".into())),
    };
    if let Command::ListModels { dim } = command {
        if cli.format.is_none() && cli.out.is_none() {
            for name in warpcurv::models::model_names() {
                println!("{name}");
            }
            return Ok(0);
        }
        let outcome = commands::list_models(*dim);
        emit(cli, None, &outcome.doc, Format::Json)?;
        return Ok(0);
    }
    let cfg = load(cli)?;
    let res = cfg.resolve(cli.seed)?;
    let (outcome, default) = match command {
        Command::Point { x } => {
            let x = x
                .clone()
                .or_else(|| cfg.point.clone())
                .ok_or_else(|| CliError::Config("point needs --x or `point` in the config".into()))?;
            let outcome = commands::point(&res, &x).map_err(|e| match e {
                CliError::Eval(m) => CliError::Eval(format!("at x = {x:?}: {m}")),
                other => other,
            })?;
            (outcome, Format::Json)
        }
        Command::SliceTable { t } => (commands::slice_table(&res, t.clone().or_else(|| cfg.t_grid.clone()))?, Format::Csv),
        Command::Verify => (commands::verify(&cfg, &res)?, Format::Json),
        Command::ListModels { .. } => unreachable!("handled above"),
    };
    emit(cli, Some(&cfg), &outcome.doc, default)?;
    Ok(outcome.status as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("warpcurv: {e}");
            ExitCode::from(e.code())
        }
    }
}
