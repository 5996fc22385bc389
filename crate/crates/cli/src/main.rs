use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use poisson_approx::bounds::evaluate_bounds;
use poisson_approx::distances::{chi2_direct, chi2_integral, chi2_parseval, tv_distance, PARSEVAL_DEFAULT_TOL};
use poisson_approx::distributions::pb_pmf;
use poisson_approx::harness::{load_probs, run_sweep, OutputFormat, PDistribution, SweepConfig};
use poisson_approx::{charlier_eval, Error, QuadratureConfig};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "poisson-approx",
    version,
    about = "Exact Poisson-approximation distances and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print χ² and TV distances to the Poisson law.
    Dist {
        /// Comma-separated probabilities, or @path to a file with one per line.
        #[arg(long, allow_hyphen_values = true)]
        probs: String,
        /// Poisson mean to compare against; defaults to the sum of the probabilities.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = RouteArg::All)]
        route: RouteArg,
    },
    /// Print every bound with its validity flag.
    Bounds {
        #[arg(long, allow_hyphen_values = true)]
        probs: String,
    },
    /// Print the Charlier polynomial C_k(λ, x).
    Charlier {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Run a seeded randomized sweep and check every bound.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, default_value_t = 0.7)]
        cap: f64,
        /// Use the same probability for every indicator.
        #[arg(long, conflicts_with = "mixture")]
        equal_p: Option<f64>,
        /// Draw normalized exponential weights scaled to the cap.
        #[arg(long)]
        mixture: bool,
        /// Relative tolerance for route agreement.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Report file; the report goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Direct,
    Parseval,
    Integral,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> poisson_approx::Result<u8> {
    match command {
        Command::Dist { probs, lambda, route } => dist(&probs, lambda, route),
        Command::Bounds { probs } => bounds(&probs),
        Command::Charlier { lambda, k, x } => {
            println!("{}", charlier_eval(lambda, k, x)?);
            Ok(0)
        }
        Command::Verify {
            seed,
            trials,
            n_min,
            n_max,
            cap,
            equal_p,
            mixture,
            tolerance,
            format,
            out,
        } => {
            let p_distribution = match (equal_p, mixture) {
                (Some(p), _) => PDistribution::Equal(p),
                (None, true) => PDistribution::Mixture,
                (None, false) => PDistribution::Uniform,
            };
            let cfg = SweepConfig {
                seed,
                trials,
                n_range: (n_min, n_max),
                p_distribution,
                cap,
                tolerance,
                output_format: format.into(),
                output_path: out,
            };
            verify(&cfg)
        }
    }
}

fn dist(probs: &str, lambda: Option<f64>, route: RouteArg) -> poisson_approx::Result<u8> {
    let params = load_probs(probs)?;
    let matched = params.summaries().lambda;
    let lambda = lambda.unwrap_or(matched);
    let unmatched = lambda != matched;
    if unmatched && matches!(route, RouteArg::Parseval | RouteArg::Integral) {
        return Err(Error::InvalidConfig(format!(
            "the {} route needs λ = Σp = {matched}",
            if route == RouteArg::Parseval {
                "parseval"
            } else {
                "integral"
            }
        )));
    }

    let pmf = pb_pmf(&params);
    println!("n = {}", params.len());
    println!("lambda = {lambda}");
    println!("tv = {}", tv_distance(&pmf, lambda)?);
    if matches!(route, RouteArg::Direct | RouteArg::All) {
        println!("chi2_direct = {}", chi2_direct(&pmf, lambda)?.value);
    }
    if unmatched {
        return Ok(0);
    }
    if matches!(route, RouteArg::Parseval | RouteArg::All) {
        let r = chi2_parseval(&params, PARSEVAL_DEFAULT_TOL)?;
        println!("chi2_parseval = {}", r.value);
    }
    if matches!(route, RouteArg::Integral | RouteArg::All) {
        let r = chi2_integral(&params, &QuadratureConfig::default())?;
        println!("chi2_integral = {}", r.value);
    }
    Ok(0)
}

fn bounds(probs: &str) -> poisson_approx::Result<u8> {
    let params = load_probs(probs)?;
    for b in evaluate_bounds(&params)? {
        match &b.validity_reason {
            Some(reason) if !b.valid => println!("{} = {} (invalid: {reason})", b.name, b.value),
            _ => println!("{} = {} (valid)", b.name, b.value),
        }
    }
    Ok(0)
}

fn verify(cfg: &SweepConfig) -> poisson_approx::Result<u8> {
    let result = run_sweep(cfg)?;
    if cfg.output_path.is_none() {
        let bytes = poisson_approx::harness::render_report(&result, cfg.output_format)?;
        std::io::stdout().write_all(&bytes).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?;
    }

    for v in &result.violations {
        eprintln!("violation: {v}");
    }
    for (id, msg) in &result.failures {
        eprintln!("failure: instance {id}: {msg}");
    }
    for r in &result.reports {
        for msg in &r.failures {
            eprintln!("failure: instance {}: {msg}", r.instance_id);
        }
    }
    eprintln!(
        "{} instances, {} violations",
        result.reports.len() + result.failures.len(),
        result.violations.len()
    );

    Ok(if result.has_violations() {
        EXIT_VIOLATIONS
    } else if result.has_failures() {
        EXIT_NUMERICAL
    } else {
        0
    })
}
