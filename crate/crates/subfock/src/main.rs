use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subfock::cli::{self, CommandOutput};
use subfock::config::{ConfigFile, FlagsSet, RunConfig};
use subfock::report::Format;

/// Numerical workbench for subproduct systems and their Berezin
/// quantization: builders, residual tables and boundary diagnostics.
#[derive(Parser)]
#[command(name = "subfock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Named system: full | symmetric | quantum_plane | monomial
    #[arg(long, global = true)]
    system: Option<String>,

    /// Ideal file (TOML/JSON with n, mode, generators)
    #[arg(long, global = true)]
    ideal: Option<PathBuf>,

    /// TOML config file mirroring these flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Number of variables / dimension of the level-1 fiber
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Truncation level
    #[arg(long = "M", global = true)]
    m_max: Option<usize>,

    /// Deformation parameter for quantum_plane
    #[arg(long, global = true)]
    q: Option<f64>,

    /// Monomial generators for the monomial system (comma separated)
    #[arg(long, global = true, value_delimiter = ',')]
    monomials: Option<Vec<String>>,

    /// Diagonal weights q_1,...,q_n (default all ones)
    #[arg(long, global = true, value_delimiter = ',')]
    weights: Option<Vec<f64>>,

    /// Tolerance override for validation thresholds
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// RNG seed for randomized identity checks (decimal or 0x-hex)
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,

    /// Directory to write the report into (also printed to stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format: csv | json
    #[arg(long, global = true)]
    format: Option<String>,

    /// Shorthand for --format json
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured system and print per-level data
    Build,
    /// Print the fiber dimension table as `m,dim` rows
    Dims,
    /// Validate the subproduct law over all splits
    Validate,
    /// Run the full invariant suite; exit 0 iff every identity passes
    Invariants,
    /// Berezin-transform difference norms per level
    Berezin {
        /// Normally ordered element, e.g. "Z1*Zd1"
        #[arg(long)]
        f: String,
    },
    /// Commutator decay columns (essential normality diagnostics)
    Arveson,
    /// Strict-quantization residuals (Rieffel / von Neumann / Dirac)
    Strict {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Markov fixed-point residuals of a quantized element
    Markov {
        /// Element text; Z/Zd factors in any order, e.g. "Zd1*Z1"
        #[arg(long)]
        x: String,
    },
    /// Weighted-sphere-relation residual per level
    Qsphere,
    /// Per-level limit-state values of an element
    LimitState {
        #[arg(long)]
        x: String,
    },
}

fn parse_seed(text: &str) -> Result<u64, String> {
    let parsed = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        text.parse()
    };
    parsed.map_err(|e| format!("bad seed '{text}': {e}"))
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, subfock::Error> {
    let mut cfg = RunConfig::default();
    let flags = FlagsSet {
        system: cli.system.is_some(),
        ideal: cli.ideal.is_some(),
        n: cli.n.is_some(),
        m_max: cli.m_max.is_some(),
        q: cli.q.is_some(),
        monomials: cli.monomials.is_some(),
        weights: cli.weights.is_some(),
        tol: cli.tol.is_some(),
        seed: cli.seed.is_some(),
        format: cli.format.is_some() || cli.json,
    };
    if let Some(system) = &cli.system {
        cfg.system_name = Some(system.clone());
        cfg.ideal_path = None;
    }
    if let Some(ideal) = &cli.ideal {
        cfg.ideal_path = Some(ideal.display().to_string());
        if cli.system.is_none() {
            cfg.system_name = None;
        }
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(m) = cli.m_max {
        cfg.m_max = m;
    }
    if let Some(q) = cli.q {
        cfg.q = q;
    }
    if let Some(monomials) = &cli.monomials {
        cfg.monomials = monomials.clone();
    }
    if let Some(weights) = &cli.weights {
        cfg.weights = Some(weights.clone());
    }
    cfg.tol = cli.tol;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.json {
        cfg.format = Format::Json;
    }
    if let Some(format) = &cli.format {
        cfg.format = match format.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(subfock::Error::Parse(format!("unknown format '{other}'"))),
        };
    }
    if let Some(path) = &cli.config {
        let file = ConfigFile::load(path)?;
        cfg.overlay_defaults(&file, &flags);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<CommandOutput, subfock::Error> {
    let cfg = resolve_config(cli)?;
    let output = match &cli.command {
        Command::Build => cli::cmd_build(&cfg)?,
        Command::Dims => cli::cmd_dims(&cfg)?,
        Command::Validate => cli::cmd_validate(&cfg)?,
        Command::Invariants => cli::cmd_invariants(&cfg)?,
        Command::Berezin { f } => cli::cmd_berezin(&cfg, f)?,
        Command::Arveson => cli::cmd_arveson(&cfg)?,
        Command::Strict { f, g } => cli::cmd_strict(&cfg, f, g)?,
        Command::Markov { x } => cli::cmd_markov(&cfg, x)?,
        Command::Qsphere => cli::cmd_qsphere(&cfg)?,
        Command::LimitState { x } => cli::cmd_limit_state(&cfg, x)?,
    };
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        let stem = match &cli.command {
            Command::Build => "build",
            Command::Dims => "dims",
            Command::Validate => "validate",
            Command::Invariants => "invariants",
            Command::Berezin { .. } => "berezin",
            Command::Arveson => "arveson",
            Command::Strict { .. } => "strict",
            Command::Markov { .. } => "markov",
            Command::Qsphere => "qsphere",
            Command::LimitState { .. } => "limit_state",
        };
        let ext = match cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        std::fs::write(dir.join(format!("{stem}.{ext}")), &output.text)?;
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            print!("{}", output.text);
            if output.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
