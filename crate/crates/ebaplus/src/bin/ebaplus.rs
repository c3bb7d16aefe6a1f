use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use ebaplus::cli::{
    cmd_assess, cmd_brute_force, cmd_compare, cmd_run, cmd_validate, AttrSource, EXIT_ERROR,
};
use ebaplus::similarity::DeltaMode;
use ebaplus::RunConfig;

/// Checks whether a project dataset supports estimation by analogy, and
/// validates the closest-analogy estimator it implies.
#[derive(Parser)]
#[command(name = "ebaplus", version, about)]
struct Cli {
    /// Worker threads for resampling (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Project dataset as CSV.
    #[arg(long)]
    data: PathBuf,

    /// Column schema as JSON.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Permutation replicates for significance tests.
    #[arg(long)]
    nperm: Option<usize>,

    /// Bootstrap replicates for confidence intervals.
    #[arg(long)]
    nboot: Option<usize>,

    /// Significance level.
    #[arg(long)]
    alpha: Option<f64>,

    /// Master seed; falls back to EBAPLUS_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,

    /// Per-attribute difference: "literal" or "squared".
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Screen every attribute for a significant effort association.
    Assess {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for screening.json instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full assessment and write a report.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for report.json and reduced.csv instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate the closest-analogy estimator on chosen attributes.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated attribute names.
        #[arg(long, value_delimiter = ',', conflicts_with = "from_report")]
        attrs: Vec<String>,
        /// Take attributes and removed projects from a `run` report.
        #[arg(long)]
        from_report: Option<PathBuf>,
        /// Use k-fold cross validation instead of the jackknife.
        #[arg(long)]
        k: Option<usize>,
        /// Directory for validation.json and residuals.csv instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two residual files with a Wilcoxon rank-sum test.
    Compare {
        /// First residuals.csv.
        #[arg(long)]
        a: PathBuf,
        /// Second residuals.csv.
        #[arg(long)]
        b: PathBuf,
    },
    /// Exhaustively search attribute subsets by cross-validated MMRE.
    BruteForce {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Maximum number of subsets to evaluate.
        #[arg(long)]
        budget: Option<usize>,
        /// Directory for brute_force.json and residuals.csv instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_seed(arg: Option<u64>) -> ebaplus::Result<u64> {
    if let Some(seed) = arg {
        return Ok(seed);
    }
    match std::env::var("EBAPLUS_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            ebaplus::Error::InvalidArgument(format!(
                "EBAPLUS_SEED is set to `{text}`, which is not a u64"
            ))
        }),
        Err(_) => Ok(RunConfig::default().seed),
    }
}

fn build_config(args: &ConfigArgs) -> ebaplus::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(n) = args.nperm {
        cfg.n_perm = n;
    }
    if let Some(n) = args.nboot {
        cfg.n_boot = n;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    cfg.seed = resolve_seed(args.seed)?;
    if let Some(text) = &args.delta {
        cfg.delta_mode = DeltaMode::from_str(text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> ebaplus::Result<i32> {
    match cli.command {
        Command::Assess { data, config, out } => {
            let cfg = build_config(&config)?;
            cmd_assess(&data.data, &data.schema, &cfg, out.as_deref())
        }
        Command::Run { data, config, out } => {
            let cfg = build_config(&config)?;
            cmd_run(&data.data, &data.schema, &cfg, out.as_deref())
        }
        Command::Validate {
            data,
            config,
            attrs,
            from_report,
            k,
            out,
        } => {
            let mut cfg = build_config(&config)?;
            if let Some(k) = k {
                cfg.k = k;
            }
            let source = match from_report {
                Some(path) => AttrSource::FromReport(path),
                None => AttrSource::List(attrs),
            };
            cmd_validate(&data.data, &data.schema, &source, k, &cfg, out.as_deref())
        }
        Command::Compare { a, b } => cmd_compare(&a, &b),
        Command::BruteForce {
            data,
            config,
            budget,
            out,
        } => {
            let cfg = build_config(&config)?;
            cmd_brute_force(&data.data, &data.schema, budget, &cfg, out.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
}
