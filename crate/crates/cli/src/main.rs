use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{mpsc, Arc};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use meshkit::{load_library, open, EngineConfig, Mode, PlanLibrary};
use meshkit_cli::chat::run_chat;
use meshkit_cli::service::{serve, ServiceConfig};
use meshkit_cli::simulate::simulate;
use meshkit_cli::store::SessionLog;

#[derive(Parser)]
#[command(name = "meshkit", version, about = "Behaviour-meshing dialog manager")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    GoalTagged,
    GoalFree,
}

#[derive(Subcommand)]
enum Command {
    /// Talk to the engine in the terminal.
    Chat {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Print mesh events as they happen.
        #[arg(long)]
        verbose: bool,
        #[arg(long, default_value = "sessions")]
        sessions_dir: PathBuf,
    },
    /// Replay every scenario script in a directory.
    Simulate {
        dir: PathBuf,
        #[arg(long)]
        update_golden: bool,
    },
    /// Serve sessions as newline-delimited JSON over TCP.
    Serve {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long)]
        sessions_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Errors the user can fix by changing arguments or input files.
struct Usage(anyhow::Error);

fn load(library: &Path, config: Option<&Path>) -> Result<(PlanLibrary, EngineConfig), Usage> {
    let lib = load_library(library).map_err(|e| Usage(e.into()))?;
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Usage)?;
            EngineConfig::from_json(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(Usage)?
        }
        None => EngineConfig::default(),
    };
    Ok((lib, cfg))
}

fn chat(
    library: &Path,
    config: Option<&Path>,
    mode: Option<ModeArg>,
    verbose: bool,
    sessions_dir: &Path,
) -> Result<i32, Usage> {
    let (lib, mut cfg) = load(library, config)?;
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::GoalTagged => Mode::GoalTagged,
            ModeArg::GoalFree => Mode::GoalFree,
        };
    }
    let id = uuid::Uuid::new_v4().to_string();
    let mut log = SessionLog::create(sessions_dir, &id, &library.display().to_string(), &cfg).map_err(Usage)?;
    let (mut dialogue, greeting) = open(Arc::new(lib), cfg);

    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let mut stdout = std::io::stdout();
    let outcome = run_chat(dialogue.as_mut(), greeting, &rx, &mut stdout, verbose);
    let reason = match &outcome {
        Ok(r) => r.as_str(),
        Err(_) => "error",
    };
    log.end(dialogue.transcript(), reason).map_err(Usage)?;
    eprintln!("transcript written to {}", log.path().display());
    outcome.map_err(Usage)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32, Usage> {
    match cli.command {
        Command::Chat {
            library,
            config,
            mode,
            verbose,
            sessions_dir,
        } => chat(&library, config.as_deref(), mode, verbose, &sessions_dir),
        Command::Simulate { dir, update_golden } => {
            simulate(&dir, update_golden, &mut std::io::stdout()).map_err(Usage)
        }
        Command::Serve {
            library,
            port,
            sessions_dir,
            config,
        } => {
            let (lib, engine) = load(&library, config.as_deref())?;
            let service = Arc::new(ServiceConfig {
                library: Arc::new(lib),
                library_ref: library.display().to_string(),
                engine,
                sessions_dir,
            });
            let rt = tokio::runtime::Runtime::new().map_err(|e| Usage(e.into()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
                    .await
                    .with_context(|| format!("binding port {port}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve(listener, service).await
            })
            .map_err(Usage)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
