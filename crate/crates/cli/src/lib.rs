//! Command-line layer for gremphase: spec files in, CSV/JSON grids out.

pub mod commands;
pub mod grid;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gremphase_core::{validate, Error, ModelSpec};

pub use grid::Axis;
pub use output::{Cell, Format, Table};

pub const EXIT_OK: i32 = 0;
/// A verification campaign ran but missed its tolerance.
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn spec(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SPEC,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => EXIT_RESOURCE,
            Error::Domain { .. } | Error::Invalid(_) => EXIT_SPEC,
            Error::Unsupported(_)
            | Error::DegenerateSlope
            | Error::InsufficientData(_)
            | Error::NoBracket { .. } => EXIT_CAPABILITY,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gremphase",
    version,
    about = "Phase diagrams of quantum GREM-type spin glasses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Limiting pressure, maximizers, phase and magnetizations on a grid.
    Pressure(GridArgs),
    /// Critical lines, optionally with a power-law fit.
    Critical {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        line: Line,
        /// Append a log-log fit of the shift curve over the h range.
        #[arg(long)]
        fit: bool,
    },
    /// Finite-N checks against the limiting formulas.
    Verify {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        campaign: Campaign,
        /// System sizes N.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Energy depths E_k of the occupation point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        energy: Vec<f64>,
        /// Field depths y_k of the occupation point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        depth: Vec<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// JSON model spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Inverse temperature: a:b:n, v1,v2,... or one value
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Transversal field strength, same syntax
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Longitudinal field strength, same syntax
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Axes to space logarithmically (beta, gamma, h).
    #[arg(long, value_delimiter = ',')]
    pub log: Vec<String>,
    /// Disorder samples per size (verify)
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Write here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Line {
    #[value(name = "atLine")]
    AtLine,
    #[value(name = "gammaRem")]
    GammaRem,
    #[value(name = "gammaHier")]
    GammaHier,
    #[value(name = "gammaSecondary")]
    GammaSecondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Campaign {
    #[value(name = "edTrend")]
    EdTrend,
    #[value(name = "classicalTrend")]
    ClassicalTrend,
    #[value(name = "oracleEquiv")]
    OracleEquiv,
    #[value(name = "occupation")]
    Occupation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    Pressure,
    Critical {
        line: Line,
        fit: bool,
    },
    Verify {
        campaign: Campaign,
        sizes: Vec<usize>,
        energy: Vec<f64>,
        depth: Vec<f64>,
    },
}

/// Everything a run needs, checked.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: CommandKind,
    pub spec_path: Option<PathBuf>,
    pub beta: Option<Axis>,
    pub gamma: Option<Axis>,
    pub h: Option<Axis>,
    pub seeds: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunManifest {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, grid) = match cli.command {
            Commands::Pressure(g) => (CommandKind::Pressure, g),
            Commands::Critical { grid, line, fit } => (CommandKind::Critical { line, fit }, grid),
            Commands::Verify {
                grid,
                campaign,
                sizes,
                energy,
                depth,
            } => (
                CommandKind::Verify {
                    campaign,
                    sizes,
                    energy,
                    depth,
                },
                grid,
            ),
        };
        for name in &grid.log {
            if !["beta", "gamma", "h"].contains(&name.as_str()) {
                return Err(CliError::spec(format!("--log: unknown axis '{name}'")));
            }
        }
        let axis = |name: &str, text: &Option<String>| -> Result<Option<Axis>, CliError> {
            text.as_deref()
                .map(|t| {
                    t.parse::<Axis>()
                        .and_then(|a| a.with_log(grid.log.iter().any(|l| l == name)))
                        .map_err(|e| CliError::spec(format!("--{name}: {e}")))
                })
                .transpose()
        };
        Ok(Self {
            command,
            spec_path: grid.spec.clone(),
            beta: axis("beta", &grid.beta)?,
            gamma: axis("gamma", &grid.gamma)?,
            h: axis("h", &grid.h)?,
            seeds: grid.seeds,
            out: grid.out,
            format: grid.format,
        })
    }

    pub fn load_spec(&self) -> Result<ModelSpec, CliError> {
        let path = self
            .spec_path
            .as_deref()
            .ok_or_else(|| CliError::spec("--spec is required"))?;
        load_spec(path)
    }
}

/// Reads and validates a JSON model spec.
pub fn load_spec(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let spec: ModelSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::spec(format!("{}: {e}", path.display())))?;
    let violations = validate(&spec);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::spec(lines.join("\n")));
    }
    Ok(spec)
}

/// Worker pool capped by `GREMPHASE_THREADS`.
fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("GREMPHASE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::io(e.to_string()))
}

/// Runs a manifest; returns the table and whether every check passed.
pub fn execute(manifest: &RunManifest) -> Result<(Table, bool), CliError> {
    pool()?.install(|| match &manifest.command {
        CommandKind::Pressure => commands::cmd_pressure(manifest).map(|t| (t, true)),
        CommandKind::Critical { line, fit } => {
            commands::cmd_critical(manifest, *line, *fit).map(|t| (t, true))
        }
        CommandKind::Verify {
            campaign,
            sizes,
            energy,
            depth,
        } => commands::cmd_verify(manifest, *campaign, sizes, energy, depth),
    })
}

/// Full run from argv; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
        }
    };
    let result = RunManifest::from_cli(cli).and_then(|m| {
        let (table, pass) = execute(&m)?;
        table.write(m.format, m.out.as_deref())?;
        Ok(pass)
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("gremphase: verification failed");
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("gremphase: {}", e.message);
            e.code
        }
    }
}
