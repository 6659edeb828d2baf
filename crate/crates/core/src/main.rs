use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convotron::distributions::NoiseModel;
use convotron::harness::verify::{self, VerifyRange};
use convotron::harness::{
    config, csv, failure_sweep, CovarianceSpec, Experiment, Geometry, SamplerSpec, SweepConfig, TeacherSpec,
};
use convotron::patches::{analyze, format};
use convotron::{build_1d, build_2d, Algorithm, Error, PatchStructure};

#[derive(Parser)]
#[command(
    name = "convotron",
    version,
    about = "Learn a convolutional filter and check the Gram matrix facts it relies on"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Gram-matrix verification suites and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 24)]
        max_n: usize,
        #[arg(long, default_value_t = 10)]
        max_r: usize,
        /// Largest side length for the 2D suite.
        #[arg(long, default_value_t = 8)]
        max_side: usize,
        /// Also check an arbitrary patch structure read from this file.
        #[arg(long)]
        patches: Option<PathBuf>,
    },
    /// Print the spectral report of a patch structure.
    Eig {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, conflicts_with_all = ["n", "r", "d"])]
        patches: Option<PathBuf>,
    },
    /// Train once and print the final relative error.
    Train(TrainArgs),
    /// Run a failure-probability sweep and write the CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Second axis; giving it switches to a 2D layout.
    #[arg(long, requires_all = ["r2", "d2"])]
    n2: Option<usize>,
    #[arg(long, requires = "n2")]
    r2: Option<usize>,
    #[arg(long, requires = "n2")]
    d2: Option<usize>,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<Geometry, String> {
        let (Some(n), Some(r), Some(d)) = (self.n, self.r, self.d) else {
            return Err("--n, --r and --d are required".into());
        };
        Ok(match (self.n2, self.r2, self.d2) {
            (Some(n2), Some(r2), Some(d2)) => Geometry::Stride2D { n1: n, n2, r1: r, r2, d1: d, d2 },
            _ => Geometry::Stride1D { n, r, d },
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, required_unless_present = "auto_eta", conflicts_with = "auto_eta")]
    eta: Option<f64>,
    /// Use the theoretical step size (and iteration count, if --iters is absent).
    #[arg(long)]
    auto_eta: bool,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Scale every input to unit norm.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Target accuracy for --auto-eta.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability for --auto-eta.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_patches(path: &PathBuf) -> Result<PatchStructure, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(format::from_text(&text)?)
}

fn verify_cmd(range: VerifyRange, patches: Option<PathBuf>) -> Result<bool, Failure> {
    let mut reports = verify::all_suites(range);
    if let Some(path) = patches {
        reports.push(verify::arbitrary_structure(&load_patches(&path)?));
    }
    println!("{:<26} {:>6} {:>9}  status", "suite", "cases", "failures");
    for rep in &reports {
        let status = if rep.passed() { "PASS" } else { "FAIL" };
        println!("{:<26} {:>6} {:>9}  {status}", rep.name, rep.cases, rep.failures.len());
        for f in rep.failures.iter().take(5) {
            println!("    {f}");
        }
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn eig_cmd(geometry: &GeometryArgs, patches: Option<PathBuf>) -> Result<(), Failure> {
    let ps = match patches {
        Some(path) => load_patches(&path)?,
        None => match geometry.geometry().map_err(Failure::Usage)? {
            Geometry::Stride1D { n, r, d } => build_1d(n, r, d)?,
            Geometry::Stride2D { n1, n2, r1, r2, d1, d2 } => build_2d(n1, n2, r1, r2, d1, d2)?,
        },
    };
    let report = analyze(&ps, None)?;
    println!("k: {}", ps.k());
    println!("r: {}", ps.r());
    println!("n: {}", ps.n());
    println!("lambda_min: {:.9}", report.lambda_min);
    println!("lambda_max: {:.9}", report.lambda_max);
    println!("gershgorin_lower: {}", report.gershgorin_lower);
    println!("gershgorin_upper: {}", report.gershgorin_upper);
    if let Some(b) = report.lambda_max_bound {
        println!("lambda_max_bound: {b}");
    }
    if let Some(c) = report.inverse_check {
        println!("inverse_identity_residual: {:.3e}", c.max_identity_residual);
        println!("inverse_lambda_max: {:.9}", c.inverse_lambda_max);
    }
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<(), Failure> {
    let geometry = args.geometry.geometry().map_err(Failure::Usage)?;
    let noise = match args.noise_std {
        Some(std) if std > 0.0 => NoiseModel::Gaussian { std },
        Some(std) if std < 0.0 => return Err(Failure::Usage(format!("--noise-std must be non-negative, got {std}"))),
        _ => NoiseModel::None,
    };
    let cfg = SweepConfig {
        geometry,
        teacher: TeacherSpec::RandomUnit(args.seed),
        sampler: SamplerSpec::Gaussian { covariance: CovarianceSpec::Identity, normalize: args.normalize },
        noise,
        alpha: args.alpha,
        algorithms: vec![args.algo],
        base_seed: args.seed,
        ..SweepConfig::default()
    };
    let exp = Experiment::prepare(&cfg)?;
    let (eta, iterations) = if args.auto_eta {
        let (eta, t) = exp.theoretical_schedule(args.epsilon, args.delta)?;
        (eta, args.iters.unwrap_or(t))
    } else {
        let eta = args.eta.expect("clap enforces --eta without --auto-eta");
        (eta, args.iters.ok_or_else(|| Failure::Usage("--iters is required with --eta".into()))?)
    };
    let out = exp.run_trial_for(args.algo, eta, iterations, 0)?;
    println!("algorithm: {}", args.algo);
    println!("eta: {eta:.6e}");
    println!("iterations: {iterations}");
    println!("final_relative_error: {:.6e}", out.relative_error);
    Ok(())
}

fn sweep_cmd(config_path: PathBuf, out: PathBuf) -> Result<(), Failure> {
    let text = fs::read_to_string(&config_path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let cfg = config::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", config_path.display())))?;
    let result = failure_sweep(&cfg)?;
    fs::write(&out, csv::to_csv_string(&result))
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {} rows to {}", result.rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { max_n, max_r, max_side, patches } => {
            verify_cmd(VerifyRange { max_n, max_r, max_side }, patches).map(|ok| {
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            })
        }
        Command::Eig { geometry, patches } => eig_cmd(&geometry, patches).map(|_| ExitCode::SUCCESS),
        Command::Train(args) => train_cmd(args).map(|_| ExitCode::SUCCESS),
        Command::Sweep { config, out } => sweep_cmd(config, out).map(|_| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `convotron --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
