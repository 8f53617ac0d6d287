use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qss6::attacks::AttackStrategy;
use qss6::bounds::{BoundsReport, Objective, DEFAULT_REFINEMENT_ITERS, MIN_RESOLUTION};
use qss6::experiment::{compare_memory_modes, run_experiment, ExperimentConfig, ExperimentError, SCHEMA_VERSION};
use qss6::protocol::{MemoryMode, ProtocolConfig};

const EXIT_ABORT: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "qss6", version, about = "Six-state quantum secret sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run protocol trials, optionally under attack, and write a JSON report.
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Exit with status 2 if any trial aborted.
        #[arg(long)]
        strict: bool,
        /// Also write a per-trial CSV summary here.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Minimise both overlap sums and report the success-probability bounds.
    Bounds {
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// Compass-search iterations after the grid scan.
        #[arg(long, default_value_t = DEFAULT_REFINEMENT_ITERS)]
        refinement: usize,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Compare usable-key fractions with and without quantum memory.
    Efficiency {
        #[command(flatten)]
        setup: Setup,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        setup: Setup,
    },
}

#[derive(Args)]
struct Setup {
    /// TOML experiment file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, env = "QSS6_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// One of none, intercept_resend, single_photon_fake, entangled_fake,
    /// invisible_probe, trojan_multiphoton.
    #[arg(long, value_name = "NAME")]
    attack: Option<String>,
    /// Dishonest Alice, or the Alice whose incoming link is attacked.
    #[arg(long, value_name = "I")]
    attacker_index: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, value_name = "FLOAT")]
    threshold: Option<f64>,
    /// quantum_memory or measure_immediately.
    #[arg(long, value_name = "MODE")]
    memory_mode: Option<MemoryMode>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Failure {
        Failure::Usage(e.to_string())
    }
}

impl Setup {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::new(ProtocolConfig::new(3, 2, 200), 1),
        };
        let p = &mut cfg.protocol;
        let reshaped = self.m.is_some() || self.n.is_some() || self.block_size.is_some();
        p.m = self.m.unwrap_or(p.m);
        p.n = self.n.unwrap_or(p.n);
        p.block_size = self.block_size.unwrap_or(p.block_size);
        if reshaped && p.decoy_counts.len() != p.m.saturating_sub(1) {
            p.decoy_counts = ProtocolConfig::new(p.m, p.n, p.block_size).decoy_counts;
        }
        if let Some(t) = self.threshold {
            p.error_threshold = t;
        }
        if let Some(mode) = self.memory_mode {
            p.memory_mode = mode;
        }
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(name) = &self.attack {
            let kind = AttackStrategy::from_name(name).ok_or_else(|| {
                Failure::Usage(format!("unknown attack `{name}`; expected one of {}", AttackStrategy::NAMES.join(", ")))
            })?;
            cfg.attack = AttackStrategy::new(kind, cfg.attack.attacker_index);
        }
        if self.attacker_index.is_some() {
            cfg.attack.attacker_index = self.attacker_index;
        }
        if self.output.is_some() {
            cfg.output_path = self.output.clone();
        }
        Ok(cfg)
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run { setup, strict, csv } => {
            let cfg = setup.resolve()?;
            let report = run_experiment(&cfg)?;
            emit(&report.to_json(), cfg.output_path.as_deref())?;
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            }
            if cfg.output_path.is_some() {
                eprintln!(
                    "{} trials, {} aborted, {} key bits",
                    report.summary.trials, report.summary.aborted, report.summary.total_key_bits
                );
            }
            Ok(if strict && report.summary.aborted > 0 { EXIT_ABORT } else { 0 })
        }
        Command::Bounds { resolution, refinement, output } => {
            if resolution < MIN_RESOLUTION {
                return Err(Failure::Usage(format!("resolution must be at least {MIN_RESOLUTION}")));
            }
            let compute = |which| BoundsReport::compute(which, resolution, refinement).map_err(|e| Failure::Usage(e.to_string()));
            let s1 = compute(Objective::S1)?;
            let s2 = compute(Objective::S2)?;
            let summary = format!("P1={:.4} P2={:.4}", s1.p1, s2.p2);
            let json = serde_json::json!({ "schema_version": SCHEMA_VERSION, "s1": s1, "s2": s2 });
            let text = serde_json::to_string_pretty(&json).expect("bounds reports serialise");
            if output.is_some() {
                emit(&text, output.as_deref())?;
                println!("{summary}");
            } else {
                println!("{text}");
                eprintln!("{summary}");
            }
            Ok(0)
        }
        Command::Efficiency { setup } => {
            let cfg = setup.resolve()?;
            let report = compare_memory_modes(&cfg.protocol, cfg.trials)?;
            emit(&serde_json::to_string_pretty(&report).expect("efficiency reports serialise"), cfg.output_path.as_deref())?;
            Ok(0)
        }
        Command::Config { setup } => {
            let cfg = setup.resolve()?;
            cfg.protocol.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            cfg.channel.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            print!("{}", cfg.to_toml());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
