mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{CutoffPolicy, RunConfig};
use polaron::basis::DomainKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polaron",
    version,
    about = "Strong-coupling series for the confined Froehlich polaron"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Pekar minimizer, its profile and the assumption report.
    SolvePekar,
    /// Hessian eigenvalues `tau_k` and the ladder spectrum.
    Hessian,
    /// Fock-space spectrum of the Bogoliubov Hamiltonian against the ladder formula.
    BogoliubovSpectrum,
    /// Series coefficients of the selected levels.
    Series,
    /// Bogoliubov identity, momentum diagnostics and residuals of the approximate eigenstates.
    GrossCheck,
    /// Exact levels over the alpha grid and order fits of the remainders.
    Sweep,
    /// Acceptance criteria; exits with 4 when one fails.
    Validate {
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (relative paths resolve against $POLARON_OUTPUT_ROOT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<DomainKind>,
    #[arg(long, global = true)]
    extent: Option<f64>,
    #[arg(long, global = true)]
    n_electron: Option<usize>,
    #[arg(long, global = true)]
    n_phonon: Option<usize>,
    #[arg(long, global = true)]
    coupling: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    level: Option<usize>,
    #[arg(long, global = true)]
    b_max: Option<usize>,
    #[arg(long, global = true)]
    alpha_lo: Option<f64>,
    #[arg(long, global = true)]
    alpha_hi: Option<f64>,
    #[arg(long, global = true)]
    alpha_count: Option<usize>,
    #[arg(long, global = true, value_parser = parse_policy)]
    cutoff_policy: Option<CutoffPolicy>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn parse_kind(s: &str) -> Result<DomainKind, String> {
    match s {
        "interval" => Ok(DomainKind::Interval),
        "ball_radial" => Ok(DomainKind::BallRadial),
        "square" => Ok(DomainKind::Square),
        _ => Err(format!("unknown domain kind {s:?}")),
    }
}

fn parse_policy(s: &str) -> Result<CutoffPolicy, String> {
    match s {
        "infinite" => Ok(CutoffPolicy::Infinite),
        "ladder" => Ok(CutoffPolicy::Ladder),
        "explicit" => Ok(CutoffPolicy::Explicit),
        _ => Err(format!("unknown cutoff policy {s:?}")),
    }
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($flag:ident, $field:expr) => {
                if let Some(v) = self.$flag {
                    $field = v;
                }
            };
        }
        set!(kind, cfg.domain.kind);
        set!(extent, cfg.domain.extent);
        set!(n_electron, cfg.domain.n_electron);
        set!(n_phonon, cfg.domain.n_phonon);
        set!(coupling, cfg.domain.coupling);
        set!(n_max, cfg.fock.n_max);
        set!(level, cfg.series.level);
        set!(b_max, cfg.series.b_max);
        set!(alpha_lo, cfg.alpha.lo);
        set!(alpha_hi, cfg.alpha.hi);
        set!(alpha_count, cfg.alpha.count);
        set!(cutoff_policy, cfg.cutoff.policy);
        set!(seed, cfg.run.seed);
    }
}

fn load(common: &Common) -> Result<RunConfig, commands::Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| commands::Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| commands::Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    common.apply(&mut cfg);
    cfg.validate().map_err(commands::Failure::Config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), commands::Failure> {
    let cfg = load(&cli.common)?;
    let root = std::env::var_os(output::OUTPUT_ROOT_ENV).map(PathBuf::from);
    let dir = output::resolve_dir(
        cli.common.out.as_deref(),
        &cfg.run.output_dir,
        root.as_deref(),
    );
    let hash = output::config_hash(&cfg);
    let name = match &cli.command {
        Command::SolvePekar => "solve-pekar",
        Command::Hessian => "hessian",
        Command::BogoliubovSpectrum => "bogoliubov-spectrum",
        Command::Series => "series",
        Command::GrossCheck => "gross-check",
        Command::Sweep => "sweep",
        Command::Validate { .. } => "validate",
    };
    let mut sink = output::Sink::new(dir, hash, name)?;
    match &cli.command {
        Command::SolvePekar => commands::solve_pekar(&cfg, &mut sink)?,
        Command::Hessian => commands::hessian(&cfg, &mut sink)?,
        Command::BogoliubovSpectrum => commands::bogoliubov_spectrum(&cfg, &mut sink)?,
        Command::Series => commands::series(&cfg, &mut sink)?,
        Command::GrossCheck => commands::gross_check(&cfg, &mut sink)?,
        Command::Sweep => commands::sweep(&cfg, &mut sink)?,
        Command::Validate { criteria } => commands::validate(&cfg, criteria, &mut sink)?,
    }
    for p in &sink.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("polaron: {f}");
            ExitCode::from(f.code())
        }
    }
}
