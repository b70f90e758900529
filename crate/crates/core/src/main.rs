use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cone_core::allocation::{DEFAULT_LAMBDA_HI, DEFAULT_LAMBDA_LO};
use cone_core::harness::{self, Algorithm, ExperimentConfig, OracleSpec, PlotSeries};
use cone_core::oracles::CallCenterConfig;
use cone_core::sne::{self, SneParams, DEFAULT_XI};
use cone_core::{Context, Decision, Error, LossMetric, Result};

#[derive(Parser)]
#[command(name = "cone", version, about = "Contextual ranking and selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Cone,
    UsSne,
    UsKrig,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Cone => Algorithm::Cone,
            AlgorithmArg::UsSne => Algorithm::UsSne,
            AlgorithmArg::UsKrig => Algorithm::UsKrig,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Toy,
    Callcenter,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Pfs,
    Eoc,
}

#[derive(Subcommand)]
enum Command {
    /// Run macro trials and write learning curves.
    Run {
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum, default_value = "toy")]
        oracle: OracleArg,
        #[arg(long, default_value_t = harness::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Call-center configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = harness::DEFAULT_CHECKPOINT_EVERY)]
        checkpoint_every: usize,
        #[arg(long, default_value_t = harness::DEFAULT_EVAL_POINTS)]
        eval_points: usize,
        #[arg(long, value_enum, default_value = "pfs")]
        metric: MetricArg,
        #[arg(long, default_value_t = DEFAULT_XI)]
        xi: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_LO)]
        lambda_lo: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_HI)]
        lambda_hi: f64,
        #[arg(long, default_value_t = harness::DEFAULT_BATCH_SIZE)]
        batch_size: usize,
        /// Also write each trial's dataset as dataset_<alg>_<trial>.csv.
        #[arg(long)]
        save_datasets: bool,
    },
    /// Plot every aggregate_*.csv found in a results directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query the neighborhood estimator on a saved dataset.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        /// Zero-based decision index.
        #[arg(long)]
        x: usize,
        /// Comma-separated context coordinates.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// Oracle whose context box and decision count the dataset uses.
        #[arg(long, value_enum, default_value = "toy")]
        oracle: OracleArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_XI)]
        xi: f64,
    },
}

fn oracle_spec(oracle: OracleArg, config: Option<&Path>) -> Result<OracleSpec> {
    match (oracle, config) {
        (OracleArg::Toy, Some(_)) => Err(Error::Config("--config applies to the callcenter oracle only".into())),
        (OracleArg::Toy, None) => Ok(OracleSpec::Toy),
        (OracleArg::Callcenter, Some(p)) => Ok(OracleSpec::Callcenter(CallCenterConfig::load(p)?)),
        (OracleArg::Callcenter, None) => Ok(OracleSpec::Callcenter(CallCenterConfig::default())),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            algorithm,
            oracle,
            budget,
            trials,
            seed,
            config,
            out,
            checkpoint_every,
            eval_points,
            metric,
            xi,
            lambda_lo,
            lambda_hi,
            batch_size,
            save_datasets,
        } => {
            let oracle = oracle_spec(oracle, config.as_deref())?.build()?;
            let mut cfg = ExperimentConfig::new(algorithm.into());
            cfg.budget = budget;
            cfg.n_trials = trials;
            cfg.base_seed = seed;
            cfg.checkpoint_every = checkpoint_every;
            cfg.eval_points = eval_points;
            cfg.metric = match metric {
                MetricArg::Pfs => LossMetric::Pfs,
                MetricArg::Eoc => LossMetric::Eoc,
            };
            cfg.xi = xi;
            cfg.lambda_lo = lambda_lo;
            cfg.lambda_hi = lambda_hi;
            cfg.batch_size = batch_size;
            let result = harness::run_experiment(&cfg, oracle.as_ref())?;
            let mut written = result.write_outputs(&out)?;
            if save_datasets {
                for (k, ds) in result.datasets.iter().enumerate() {
                    let p = out.join(format!("dataset_{}_{k}.csv", cfg.algorithm.slug()));
                    harness::save_dataset(ds, &p)?;
                    written.push(p);
                }
            }
            let s = &result.summary;
            println!(
                "{} on {}: final 1-varpi mean {:.4} std {:.4} over {} trials",
                cfg.algorithm.label(),
                s.oracle,
                s.final_mean,
                s.final_std,
                s.n_trials
            );
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Plot { input, out } => {
            let mut series = Vec::new();
            for alg in Algorithm::ALL {
                let p = input.join(format!("aggregate_{}.csv", alg.slug()));
                if p.exists() {
                    series.push(PlotSeries {
                        label: alg.label().to_string(),
                        rows: harness::read_aggregate(&p)?,
                    });
                }
            }
            if series.is_empty() {
                return Err(Error::Config(format!(
                    "no aggregate_<algorithm>.csv files in {}",
                    input.display()
                )));
            }
            harness::write_svg(&series, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Estimate {
            dataset,
            x,
            y,
            oracle,
            config,
            xi,
        } => {
            let oracle = oracle_spec(oracle, config.as_deref())?.build()?;
            let coords = y
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("'{v}' in --y is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let ds = harness::load_dataset(&dataset, oracle.context_box().clone(), oracle.n_decisions())?;
            let params = SneParams::for_box(ds.context_box(), xi)?;
            let query = Context::new(coords);
            let h = sne::neighborhood(&ds, Decision(x), &query, &params)?;
            let out = serde_json::json!({
                "decision": x,
                "psi": h.psi,
                "mean": h.mean,
                "std": h.std.map(|s| s.max(params.sigma_floor)),
                "radius": h.radius,
                "activation_stage": h.activation_stage,
            });
            println!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } | Error::Argument(_) | Error::Domain(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
