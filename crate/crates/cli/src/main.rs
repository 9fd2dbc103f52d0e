mod commands;
mod config;
mod expr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, SystemSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] cusplab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

/// Cusp slow-fast systems: transitions, sweeps, blow-up charts and checks.
#[derive(Parser, Debug)]
#[command(name = "cusplab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Seed of the randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// principal, stock-flat or a path to an expression file.
    #[arg(long, global = true)]
    system: Option<String>,
    /// Amplitude of the stock flat perturbation.
    #[arg(long, global = true, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long, global = true)]
    a_minus: Option<f64>,
    #[arg(long, global = true)]
    a_plus: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one orbit from Σ⁻ to Σ⁺ and write its trajectory.
    Simulate {
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        z0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        eps: Option<f64>,
    },
    /// Rate and shift over a descending list of ε.
    Sweep {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        z0: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        target_offset: Option<f64>,
    },
    /// Runs at b = μ ε^(2/5) with entry-layer labels.
    Layers {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Option<Vec<f64>>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
    },
    /// Jump offset past the fold and its ε-exponent.
    Fold {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Option<Vec<f64>>,
    },
    /// Chart vector field and coordinate changes at a point.
    Chart {
        /// en, ex, eps, b+ or b-
        chart: String,
        /// r,c1,c2,c3
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Target chart of a coordinate change.
        #[arg(long)]
        to: Option<String>,
    },
    /// Slow divergence integral, closed form next to quadrature.
    Sdi {
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        z_en: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        z_ex: Option<f64>,
        #[arg(long, allow_negative_numbers = true, hide = true)]
        check_offset: Option<f64>,
    },
    /// Full acceptance suite.
    Verify {
        /// Shifts every sweep target; nonzero values force a failure.
        #[arg(long, allow_negative_numbers = true)]
        target_offset: Option<f64>,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn effective_config(g: &Global, cmd: &Command) -> Result<RunConfig, CliError> {
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut c.out, g.out.clone());
    set(&mut c.rtol, g.rtol);
    set(&mut c.atol, g.atol);
    set(&mut c.seed, g.seed);
    set(&mut c.a_minus, g.a_minus);
    set(&mut c.a_plus, g.a_plus);
    match g.system.as_deref() {
        None => {}
        Some("principal") => c.system = SystemSpec::Principal,
        Some("stock-flat") => c.system = SystemSpec::StockFlat { amplitude: 1.0 },
        Some(path) => {
            c.system = SystemSpec::Expression {
                path: PathBuf::from(path),
            }
        }
    }
    if let Some(amp) = g.amplitude {
        match &mut c.system {
            SystemSpec::StockFlat { amplitude } => *amplitude = amp,
            _ => {
                return Err(CliError::Usage(
                    "--amplitude applies only to the stock-flat system".into(),
                ))
            }
        }
    }
    match cmd {
        Command::Simulate { b, z0, eps } => {
            set(&mut c.simulate.b, *b);
            set(&mut c.simulate.z0, *z0);
            set(&mut c.simulate.eps, *eps);
        }
        Command::Sweep {
            b,
            z0,
            eps,
            target_offset,
        } => {
            set(&mut c.sweep.b, b.clone());
            set(&mut c.sweep.z0, *z0);
            set(&mut c.sweep.eps, eps.clone());
            set(&mut c.sweep.target_offset, *target_offset);
        }
        Command::Layers { eps, mu, l, m } => {
            set(&mut c.layers.eps, eps.clone());
            set(&mut c.layers.mu, mu.clone());
            set(&mut c.layer_l, *l);
            set(&mut c.layer_m, *m);
        }
        Command::Fold { eps } => set(&mut c.fold.eps, eps.clone()),
        Command::Chart { .. } => {}
        Command::Sdi {
            b,
            z_en,
            z_ex,
            check_offset,
        } => {
            set(&mut c.sdi.b, *b);
            if z_en.is_some() {
                c.sdi.z_en = *z_en;
            }
            if z_ex.is_some() {
                c.sdi.z_ex = *z_ex;
            }
            set(&mut c.sdi.check_offset, *check_offset);
        }
        Command::Verify {
            target_offset,
            only,
        } => {
            set(&mut c.verify.target_offset, *target_offset);
            set(&mut c.verify.only, only.clone());
        }
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli.global, &cli.command)?;
    match cli.command {
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Layers { .. } => commands::layers(&cfg),
        Command::Fold { .. } => commands::fold(&cfg),
        Command::Chart { chart, point, to } => commands::chart(&cfg, &chart, &point, to.as_deref()),
        Command::Sdi { .. } => commands::sdi(&cfg),
        Command::Verify { .. } => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
