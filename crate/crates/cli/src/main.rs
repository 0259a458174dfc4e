mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Classify,
    Nu,
    Exponents,
    CheckNonlinearity,
    Identities,
    Ratio,
    MBounds,
    CBounds,
    Solve,
    Separate,
    TheoremDemo,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Nu => "nu",
            Command::Exponents => "exponents",
            Command::CheckNonlinearity => "check-nonlinearity",
            Command::Identities => "identities",
            Command::Ratio => "ratio",
            Command::MBounds => "m-bounds",
            Command::CBounds => "c-bounds",
            Command::Solve => "solve",
            Command::Separate => "separate",
            Command::TheoremDemo => "theorem-demo",
            Command::ShowConfig => "show-config",
        }
    }
}

/// Experiments for −Δu + A|x|^{−α}u = f(u): exponent arithmetic, level
/// bounds and biradial mountain-pass solutions.
#[derive(Debug, Parser)]
#[command(name = "nonradial", version)]
struct Cli {
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set problem.n=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides threads; 0 uses all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let text = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?),
        None => None,
    };
    let mut sets = cli.set.clone();
    if let Some(o) = &cli.out {
        sets.push(format!("output.dir={}", toml_string(&o.to_string_lossy())));
    }
    if let Some(s) = cli.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(t) = cli.threads {
        sets.push(format!("threads={t}"));
    }
    ExperimentConfig::load(text.as_deref(), &sets).map_err(|e| e.to_string())
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.command == Command::ShowConfig {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let name = cli.command.name();
    debug_assert!(commands::COMMANDS.contains(&name));
    let outcome = match commands::run(name, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = PathBuf::from(&cfg.output.dir);
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    let rep = &outcome.report;
    let mut files = vec![
        (format!("{name}.csv"), rep.to_csv()),
        (format!("{name}.json"), serde_json::to_string_pretty(rep).expect("serializable") + "\n"),
    ];
    files.extend(outcome.files);
    for (file, body) in &files {
        let path = dir.join(file);
        if let Err(e) = fs::write(&path, body) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    println!("{}", rep.table.columns.join(","));
    for row in &rep.table.rows {
        println!("{}", row.join(","));
    }
    print!("{}", rep.summary());
    println!("wrote {} files to {}", files.len(), dir.display());
    if rep.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
