use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xsect::config::{self, RawConfig};
use xsect::{run, Command, THREADS_ENV};

#[derive(Parser)]
#[command(name = "xsect", version, about = "Quasi-tilings, castles and entropy of cross-sections")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Quasi-tile a seeded point pattern and verify the result.
    Tile(Flags),
    /// Block entropy of a symbolic system.
    Entropy(Flags),
    /// Induced-map entropy against h/ν(A), with the mean return time.
    Abramov(Flags),
    /// Mixing defect of separated families across radii.
    Mixing(Flags),
    /// Castle ergodic and mean ergodic statistics across Følner scales.
    CastleCheck(Flags),
    /// Castle entropy for a lattice cocycle and its integer recoding.
    Transfer(Flags),
    /// Run whatever command a config file names.
    Run {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// TOML config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// z, z2, z3, z4 or h3.
    #[arg(long)]
    group: Option<String>,
    /// For example bernoulli:0.5, markov:0.9, periodic:0,1 or tower:2,3|bernoulli:0.5.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated scales (Følner scales or separation radii).
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u32>>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long = "samples")]
    sample_size: Option<usize>,
    /// Symbols at position 0, as `x0=0,1` or `0,1`.
    #[arg(long)]
    cylinder: Option<String>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    orbits: Option<usize>,
    #[arg(long)]
    side: Option<i64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    family_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    coding: Option<Vec<u32>>,
    /// JSON record path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_cylinder(s: &str) -> Result<Vec<u32>, String> {
    let body = s.strip_prefix("x0=").unwrap_or(s);
    body.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("cylinder: bad symbol `{x}`")))
        .collect()
}

fn merge(command: Command, f: Flags) -> Result<RawConfig, Vec<String>> {
    let mut raw = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| vec![format!("config {}: {e}", path.display())])?;
            toml::from_str::<RawConfig>(&text).map_err(|e| vec![format!("syntax: {}", e.message())])?
        }
        None => RawConfig::default(),
    };
    if let Some(c) = &raw.command {
        if c != command.name() {
            return Err(vec![format!("command: config names `{c}` but `{}` was invoked", command.name())]);
        }
    }
    raw.command = Some(command.name().to_string());
    macro_rules! set {
        ($($dst:expr => $src:expr),*) => { $( if let Some(v) = $src { $dst = Some(v); } )* };
    }
    set!(
        raw.group => f.group,
        raw.system => f.system,
        raw.seed => f.seed,
        raw.output => f.output,
        raw.csv => f.csv,
        raw.params.delta => f.delta,
        raw.params.eps => f.eps,
        raw.params.scales => f.scales,
        raw.params.window => f.window,
        raw.params.sample_size => f.sample_size,
        raw.params.density => f.density,
        raw.params.orbits => f.orbits,
        raw.params.side => f.side,
        raw.params.tolerance => f.tolerance,
        raw.params.family_size => f.family_size,
        raw.params.coding => f.coding
    );
    if let Some(c) = f.cylinder {
        raw.params.cylinder = Some(parse_cylinder(&c).map_err(|e| vec![e])?);
    }
    Ok(raw)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV} = `{v}` is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<i32, (i32, String)> {
    let config_err = |errs: Vec<String>| (2, config::ConfigErrors(errs).to_string());
    let (raw, thread_flag) = match cli.command {
        Sub::Run { config, threads } => {
            let text = std::fs::read_to_string(&config).map_err(|e| (2, format!("config {}: {e}", config.display())))?;
            let raw: RawConfig = toml::from_str(&text).map_err(|e| config_err(vec![format!("syntax: {}", e.message())]))?;
            (raw, threads)
        }
        sub => {
            let (command, flags) = match sub {
                Sub::Tile(f) => (Command::Tile, f),
                Sub::Entropy(f) => (Command::Entropy, f),
                Sub::Abramov(f) => (Command::Abramov, f),
                Sub::Mixing(f) => (Command::Mixing, f),
                Sub::CastleCheck(f) => (Command::CastleCheck, f),
                Sub::Transfer(f) => (Command::Transfer, f),
                Sub::Run { .. } => unreachable!(),
            };
            let t = flags.threads;
            (merge(command, flags).map_err(config_err)?, t)
        }
    };
    let cfg = config::validate(raw).map_err(|e| (2, e.to_string()))?;
    let threads = threads(thread_flag).map_err(|e| (2, e))?;
    let record = run(&cfg, threads).map_err(|e| (e.exit_code(), e.to_string()))?;
    let json = xsect::emit(&record).map_err(|e| (2, format!("io: {e}")))?;
    if cfg.output.is_none() {
        print!("{json}");
    }
    for (name, ok) in &record.verdicts {
        eprintln!("{}: {name}", if *ok { "pass" } else { "FAIL" });
    }
    Ok(record.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
