use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rnls_core::config::SimulationConfig;
use rnls_core::run::{self, RunContext, RunOptions};
use rnls_core::{Result, RnlsError};

/// Spectral solver and variational diagnostics for the 3D NLS with averaged nonlinearity.
#[derive(Parser)]
#[command(name = "rnls", version)]
struct Cli {
    /// Worker threads (overrides RNLS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured datum.
    Simulate(Common),
    /// Compute the ground state Q and the threshold d.
    GroundState(Common),
    /// Evolve with the virial monitor W, W', W''.
    Virial(Common),
    /// Evolve with extended diagnostics.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Accumulate scattering norms and the asymptotic profile.
        #[arg(long)]
        scatter: bool,
    },
    /// Compare the sigma = 1 quadrature with the resonant-sum oracle.
    ResonantCheck(Common),
    /// K+/K- membership of the configured datum.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Threshold d (default: ground_state.d or the stored ground-state summary).
        #[arg(long)]
        d: Option<f64>,
    },
}

/// Configuration file plus flags mirroring its keys; flags win.
#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    equation: Option<String>,
    #[arg(long)]
    n_hermite: Option<usize>,
    #[arg(long)]
    m_quad: Option<usize>,
    #[arg(long)]
    n_z: Option<usize>,
    #[arg(long)]
    l_z: Option<f64>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    blowup_multiple: Option<f64>,
    #[arg(long)]
    report_every: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunContext> {
        let mut c = SimulationConfig::from_file(&self.config).map_err(|e| match e {
            RnlsError::Io(io) => RnlsError::Config(format!("{}: {io}", self.config.display())),
            other => other,
        })?;
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field).+ = v;
                }
            };
        }
        set!(sigma => model.sigma);
        set!(lambda => model.lambda);
        set!(equation => model.equation);
        set!(n_hermite => basis.n_hermite);
        set!(m_quad => basis.m_quad);
        set!(n_z => basis.n_z);
        set!(l_z => basis.l_z);
        set!(n_theta => basis.n_theta);
        set!(scheme => time.scheme);
        set!(dt => time.dt);
        set!(t_final => time.t_final);
        set!(blowup_multiple => time.blowup_multiple);
        set!(report_every => diagnostics.report_every);
        set!(checkpoint_every => diagnostics.checkpoint_every);
        set!(output => output.dir);
        set!(weight => virial.weight);
        set!(radius => virial.radius);
        RunContext::new(c)
    }
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serialisable output"));
}

fn thread_cap(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("RNLS_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| RnlsError::Config(format!("RNLS_THREADS = `{s}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = thread_cap(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| RnlsError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(c) => print_json(&run::simulate(&c.load()?, RunOptions::default())?),
        Command::Virial(c) => print_json(&run::simulate(&c.load()?, RunOptions { virial: true, scatter: false })?),
        Command::Diagnose { common, scatter } => {
            print_json(&run::simulate(&common.load()?, RunOptions { virial: false, scatter })?)
        }
        Command::GroundState(c) => print_json(&run::ground_state(&c.load()?)?),
        Command::ResonantCheck(c) => print_json(&run::resonant_check(&c.load()?)?),
        Command::Classify { common, d } => print_json(&run::classify_initial(&common.load()?, d)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rnls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
