use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ijack::cli::{self, selfcheck, Engine, RunOptions};

#[derive(Parser)]
#[command(name = "ijack", version, about = "Iterated-jackknife variance bounds")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Mc,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Mc => Engine::Mc,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute bounds for an instance config.
    Run {
        config: PathBuf,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        /// Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized identity battery.
    Selfcheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Directory for the replay file of a failing instance.
        #[arg(long, default_value = ".")]
        replay_dir: PathBuf,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run {
            config,
            engine,
            seed,
            out,
        } => {
            let opts = RunOptions {
                engine: engine.map(Engine::from),
                seed,
                out,
            };
            match cli::run(&config, &opts) {
                Ok((_, outputs)) => {
                    let mut stdout = std::io::stdout().lock();
                    for (target, text) in outputs {
                        if target.is_none() {
                            let _ = stdout.write_all(text.as_bytes());
                        }
                    }
                    cli::EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Selfcheck {
            instances,
            seed,
            replay_dir,
            inject_fault,
        } => {
            let opts = selfcheck::Options {
                fault_injection: inject_fault,
            };
            let summary = selfcheck::selfcheck(instances, seed, &replay_dir, opts);
            println!("{summary}");
            if summary.passed() {
                cli::EXIT_OK
            } else {
                cli::EXIT_CHECK
            }
        }
    };
    ExitCode::from(code as u8)
}
