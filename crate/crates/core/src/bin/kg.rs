use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kindergarten::curriculum::CurriculumConfig;
use kindergarten::gateway::{serve, Seat, ServeConfig};
use kindergarten::harness::{self, replay, Budget, SuiteFile};
use kindergarten::learners::{by_name, Contestant, NAMES};
use kindergarten::session::{Session, SessionConfig, TaskSource};

const OK: u8 = 0;
const USAGE: u8 = 1;
const INVALID: u8 = 2;
const ABORTED: u8 = 3;

/// Teacher, grid world and learner on a shared symbol channel.
///
/// Log verbosity comes from KINDERGARTEN_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "kg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one session and print its report.
    Run {
        /// Task directory; the shipped scripts when omitted.
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long, default_value = "oracle")]
        learner: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        ticks: u64,
        /// Curriculum TOML (levels, window, threshold, time off).
        #[arg(long)]
        curriculum: Option<PathBuf>,
        /// Write a replay file.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Print the transcript as well.
        #[arg(long)]
        transcript: bool,
    },
    /// Score a learner on an evaluation suite.
    Eval {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        learner: String,
        /// Ticks, or wallclock:<n>(ms|s|m).
        #[arg(long, default_value = "10000")]
        budget: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-simulate a replay file and check it.
    Replay { file: PathBuf },
    /// Lint and oracle-certify a task directory.
    Validate {
        dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Serve a session over the local wire protocol.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long)]
        tasks: Option<PathBuf>,
        /// "remote" waits for a learner client; any other name runs in-process.
        #[arg(long, default_value = "remote")]
        learner: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        ticks: u64,
        #[arg(long)]
        paused: bool,
        #[arg(long)]
        ticks_per_second: Option<f64>,
    },
}

fn contestant(name: &str, seed: u64) -> Result<Contestant, u8> {
    by_name(name, seed).ok_or_else(|| {
        eprintln!("unknown learner {name:?}; choose one of {}", NAMES.join(", "));
        USAGE
    })
}

fn source(tasks: Option<PathBuf>) -> TaskSource {
    tasks.map_or(TaskSource::Builtin, TaskSource::Dir)
}

fn run(cli: Cli) -> Result<(), u8> {
    match cli.cmd {
        Cmd::Run { tasks, learner, seed, ticks, curriculum, record, transcript } => {
            let c = contestant(&learner, seed)?;
            let curriculum = match curriculum {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| {
                        eprintln!("{}: {e}", p.display());
                        USAGE
                    })?;
                    Some(CurriculumConfig::from_toml(&text).map_err(|e| {
                        eprintln!("{}: {e}", p.display());
                        INVALID
                    })?)
                }
                None => None,
            };
            let cfg = SessionConfig { tasks: source(tasks), curriculum, ..SessionConfig::new(seed, ticks) };
            let mut s = Session::new(cfg.clone(), c.learner).map_err(|e| {
                eprintln!("{e}");
                INVALID
            })?;
            if let Some(d) = c.door {
                s.attach_side_door(d);
            }
            let report = s.run();
            if transcript {
                for line in kindergarten::channel::transcript(&s.frames) {
                    println!("{line}");
                }
            }
            if let Some(path) = record {
                replay::save(&path, &cfg, &s.frames).map_err(|e| {
                    eprintln!("{}: {e}", path.display());
                    USAGE
                })?;
            }
            println!("{}", report.to_json());
            if report.aborted.is_some() {
                return Err(ABORTED);
            }
        }
        Cmd::Eval { suite, learner, budget, seed } => {
            let budget: Budget = budget.parse().map_err(|e| {
                eprintln!("{e}");
                USAGE
            })?;
            let suite = SuiteFile::load(&suite).map_err(|e| {
                eprintln!("{e}");
                INVALID
            })?;
            let c = contestant(&learner, seed)?;
            match harness::evaluate(c, &suite, budget) {
                Ok((r, _)) => println!("{}", serde_json::to_string_pretty(&r).expect("result serializes")),
                Err(e) => {
                    eprintln!("{e}");
                    return Err(ABORTED);
                }
            }
        }
        Cmd::Replay { file } => {
            let rec = replay::load(&file).map_err(|e| {
                eprintln!("{}: {e}", file.display());
                INVALID
            })?;
            match replay::replay(&rec) {
                Ok(r) => println!("{}", r.to_json()),
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    return Err(INVALID);
                }
            }
        }
        Cmd::Validate { dir, seeds } => {
            let seeds: Vec<u64> = (0..seeds).collect();
            let report = harness::validate(&dir, &seeds).map_err(|e| {
                eprintln!("{e}");
                INVALID
            })?;
            let mut ids: Vec<&str> = report.certificates.iter().map(|c| c.script.as_str()).collect();
            ids.dedup();
            for f in report.failures() {
                eprintln!("FAIL {f}");
            }
            println!("{} scripts, {} certificates, {} failures", ids.len(), report.certificates.len(), report.failures().count());
            if !report.all_ok() {
                return Err(INVALID);
            }
        }
        Cmd::Serve { port, tasks, learner, seed, ticks, paused, ticks_per_second } => {
            let seat = if learner == "remote" { Seat::Remote } else { Seat::InProcess(contestant(&learner, seed)?) };
            let cfg = ServeConfig {
                start_paused: paused,
                ticks_per_second,
                ..ServeConfig::new(SessionConfig { tasks: source(tasks), ..SessionConfig::new(seed, ticks) }, seat)
            };
            match serve(cfg, port) {
                Ok(r) if r.aborted.is_none() => println!("{}", r.to_json()),
                Ok(r) => {
                    println!("{}", r.to_json());
                    return Err(ABORTED);
                }
                Err(e) => {
                    eprintln!("{e}");
                    return Err(INVALID);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KINDERGARTEN_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(OK),
        Err(code) => ExitCode::from(code),
    }
}
