use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracspde_cli::config::OUTPUT_ENV;
use fracspde_cli::{acceptance, HarnessError, Kind, RunConfig, EXIT_FAILURE, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "fracspde",
    version,
    about = "Time-fractional SPDE experiments on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mittag-Leffler values against closed forms
    Ml(RunArgs),
    /// Fractional-integral semigroup discrepancy
    Fraccalc(RunArgs),
    /// Fundamental solution on the torus
    Kernel(RunArgs),
    /// White-noise Monte Carlo spectrum against the per-mode oracle
    Solve(RunArgs),
    /// Littlewood-Paley ratios over a test family
    Lp(RunArgs),
    /// Regularity gain across beta
    Sweep(RunArgs),
    /// Full acceptance suite
    Selftest {
        /// Output directory (default: $FRACSPDE_OUT/selftest)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 for all cores
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override it
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per axis
    #[arg(long)]
    n: Option<usize>,
    /// Torus side length
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
}

impl RunArgs {
    fn resolve(&self, kind: Kind) -> Result<RunConfig, HarnessError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::new(kind),
        };
        c.kind = kind;
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.seed, c.seed);
        set!(self.replicates, c.replicates);
        set!(self.workers, c.workers);
        set!(self.alpha, c.orders.alpha);
        set!(self.beta, c.orders.beta);
        set!(self.dim, c.grid.dim);
        set!(self.n, c.grid.n);
        set!(self.side, c.grid.side);
        set!(self.t_end, c.time.t_end);
        set!(self.n_steps, c.time.n_steps);
        Ok(c)
    }
}

fn init_workers(workers: usize) {
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn run_kind(kind: Kind, args: &RunArgs) -> i32 {
    let config = match args.resolve(kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    init_workers(config.workers);
    let dir = config.resolve_output(args.out.as_deref());
    match fracspde_cli::run(&config, &dir) {
        Ok(outcome) => {
            print!("{}", outcome.artifacts.summary);
            println!("artifacts in {}", outcome.dir.display());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn selftest(out: Option<PathBuf>, workers: usize) -> i32 {
    init_workers(workers);
    let dir = out.unwrap_or_else(|| {
        std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("fracspde-out"))
            .join("selftest")
    });
    match acceptance::run_all(Some(&dir), |line| println!("{line}")) {
        Ok(reports) => {
            let passed = reports.iter().filter(|r| r.passed).count();
            println!(
                "{passed}/{} criteria passed; tables in {}",
                reports.len(),
                dir.display()
            );
            if passed == reports.len() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Ml(a) => run_kind(Kind::Ml, a),
        Command::Fraccalc(a) => run_kind(Kind::Fraccalc, a),
        Command::Kernel(a) => run_kind(Kind::Kernel, a),
        Command::Solve(a) => run_kind(Kind::Solve, a),
        Command::Lp(a) => run_kind(Kind::Lp, a),
        Command::Sweep(a) => run_kind(Kind::Sweep, a),
        Command::Selftest { out, workers } => selftest(out.clone(), *workers),
    };
    ExitCode::from(code as u8)
}
