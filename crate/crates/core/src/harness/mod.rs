//! Budget-loop experiments, Monte-Carlo evaluation of the decision loss and
//! macro-trial aggregation.
//!
//! Seeds: trial `k` uses `base_seed + k` (wrapping). Three ChaCha8 streams
//! are derived from that seed: stream 0 drives the policy (proposals,
//! initial contexts, tie-breaks during learning), stream 1 drives the oracle's
//! simulation noise, stream 2 drives evaluation (query contexts, ground-truth
//! estimation, prediction tie-breaks). Evaluation therefore never perturbs
//! learning.

mod io;
mod plot;

pub use io::{
    load_dataset, read_aggregate, save_dataset, write_aggregate_csv, write_curve_csv, write_summary_json,
};
pub use plot::{render_svg, write_svg, PlotSeries};

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{self, ConeParams, DEFAULT_LAMBDA_HI, DEFAULT_LAMBDA_LO, DEFAULT_MAX_REJECTIONS};
use crate::domain::{decision_loss, Context, Dataset, Decision, LossMetric};
use crate::error::{Error, Result};
use crate::kriging::{self, BatchedDesign, GpModel};
use crate::oracles::{CallCenterConfig, CallCenterOracle, Oracle, ToyOracle};
use crate::sne::{self, SneParams, DEFAULT_XI};

pub const DEFAULT_BUDGET: usize = 3000;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_EVAL_POINTS: usize = 20;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 100;
pub const DEFAULT_BATCH_SIZE: usize = 5;

const POLICY_STREAM: u64 = 0;
const ORACLE_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Cone,
    UsSne,
    UsKrig,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Cone, Algorithm::UsSne, Algorithm::UsKrig];

    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::Cone => "cone",
            Algorithm::UsSne => "us-sne",
            Algorithm::UsKrig => "us-krig",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Cone => "CONE",
            Algorithm::UsSne => "US-SNE",
            Algorithm::UsKrig => "US-Krig",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.slug() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Which benchmark to run against.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Toy,
    Callcenter(CallCenterConfig),
}

impl OracleSpec {
    pub fn build(&self) -> Result<Box<dyn Oracle>> {
        Ok(match self {
            OracleSpec::Toy => Box::new(ToyOracle::new()),
            OracleSpec::Callcenter(c) => Box::new(CallCenterOracle::new(c.clone())?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub budget: usize,
    pub n_trials: usize,
    pub eval_points: usize,
    pub checkpoint_every: usize,
    pub base_seed: u64,
    pub metric: LossMetric,
    pub xi: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub max_rejections: usize,
    pub batch_size: usize,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        ExperimentConfig {
            algorithm,
            budget: DEFAULT_BUDGET,
            n_trials: DEFAULT_TRIALS,
            eval_points: DEFAULT_EVAL_POINTS,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            base_seed: 0,
            metric: LossMetric::Pfs,
            xi: DEFAULT_XI,
            lambda_lo: DEFAULT_LAMBDA_LO,
            lambda_hi: DEFAULT_LAMBDA_HI,
            max_rejections: DEFAULT_MAX_REJECTIONS,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    /// Observations spent before the first policy proposal.
    pub fn initialization_cost(&self, n_decisions: usize) -> usize {
        let per_point = match self.algorithm {
            Algorithm::UsKrig => self.batch_size,
            _ => 1,
        };
        allocation::INIT_PER_DECISION * n_decisions * per_point
    }

    pub fn validate(&self, oracle: &dyn Oracle) -> Result<()> {
        let init = self.initialization_cost(oracle.n_decisions());
        if self.budget < init {
            return Err(Error::Config(format!(
                "budget {} is below the initialization cost {init}",
                self.budget
            )));
        }
        if self.eval_points == 0 {
            return Err(Error::Config("eval_points must be at least 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be at least 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.algorithm == Algorithm::UsKrig {
            if self.batch_size < 2 {
                return Err(Error::Config(format!("batch_size must be at least 2, got {}", self.batch_size)));
            }
            if !self.budget.is_multiple_of(self.batch_size) {
                return Err(Error::Config(format!(
                    "budget {} is not a multiple of batch_size {}",
                    self.budget, self.batch_size
                )));
            }
        }
        self.cone_params(oracle)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.metric == LossMetric::Eoc {
            let y = oracle.context_box().sample_uniform(&mut ChaCha8Rng::seed_from_u64(0));
            if oracle.true_mean(Decision(0), &y).is_none() {
                return Err(Error::Config(format!(
                    "oracle '{}' has no closed-form means, required by the eoc metric",
                    oracle.name()
                )));
            }
        }
        Ok(())
    }

    pub fn sne_params(&self, oracle: &dyn Oracle) -> Result<SneParams> {
        SneParams::for_box(oracle.context_box(), self.xi)
    }

    pub fn cone_params(&self, oracle: &dyn Oracle) -> Result<ConeParams> {
        ConeParams::new(self.lambda_lo, self.lambda_hi, self.sne_params(oracle)?, self.max_rejections)
    }

    /// Stages at which the learning curve is recorded.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (1..=self.budget / self.checkpoint_every)
            .map(|k| k * self.checkpoint_every)
            .collect();
        if v.last() != Some(&self.budget) {
            v.push(self.budget);
        }
        v
    }
}

/// The three independent generators of one trial.
pub struct TrialRngs {
    pub policy: ChaCha8Rng,
    pub oracle: ChaCha8Rng,
    pub eval: ChaCha8Rng,
}

impl TrialRngs {
    pub fn new(trial_seed: u64) -> Self {
        let stream = |s| {
            let mut r = ChaCha8Rng::seed_from_u64(trial_seed);
            r.set_stream(s);
            r
        };
        TrialRngs {
            policy: stream(POLICY_STREAM),
            oracle: stream(ORACLE_STREAM),
            eval: stream(EVAL_STREAM),
        }
    }
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub trial: usize,
    pub stage: usize,
    pub one_minus_varpi: f64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub rows: Vec<CurveRow>,
    /// Every charged observation, in order (US-Krig replications included).
    pub dataset: Dataset,
    /// Oracle samples charged, initialization included.
    pub samples_charged: usize,
}

/// A trained context-to-decision mapping.
pub enum Predictor<'a> {
    Sne { dataset: &'a Dataset, params: SneParams },
    Krig { models: Vec<Option<GpModel>> },
}

impl Predictor<'_> {
    pub fn predict<R: Rng + ?Sized>(&self, query: &Context, rng: &mut R) -> Result<Decision> {
        match self {
            Predictor::Sne { dataset, params } => sne::predict_best(dataset, query, params, rng),
            Predictor::Krig { models } => kriging::predict_best_krig(models, query, rng),
        }
    }
}

/// Monte-Carlo estimate of the total decision loss over `eval_points` fresh
/// uniform contexts. For PFS, correctness compares decision indices.
pub fn evaluate_varpi(
    predictor: &Predictor<'_>,
    oracle: &dyn Oracle,
    eval_points: usize,
    metric: LossMetric,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if eval_points == 0 {
        return Err(Error::Config("eval_points must be at least 1".into()));
    }
    let mut total = 0.0;
    for _ in 0..eval_points {
        let y = oracle.context_box().sample_uniform(rng);
        let truth = oracle.true_best(&y, rng)?;
        let chosen = predictor.predict(&y, rng)?;
        total += match metric {
            LossMetric::Pfs => f64::from(u8::from(chosen != truth)),
            LossMetric::Eoc => {
                let mean = |x: Decision| {
                    oracle.true_mean(x, &y).ok_or_else(|| {
                        Error::Config(format!("oracle '{}' has no closed-form means", oracle.name()))
                    })
                };
                decision_loss(metric, mean(chosen)?, mean(truth)?)?
            }
        };
    }
    Ok(total / eval_points as f64)
}

struct Checkpointer {
    stages: Vec<usize>,
    next: usize,
}

impl Checkpointer {
    /// Checkpoint stages reached once `count` observations are in.
    fn crossed(&mut self, count: usize) -> Vec<usize> {
        let start = self.next;
        while self.next < self.stages.len() && self.stages[self.next] <= count {
            self.next += 1;
        }
        self.stages[start..self.next].to_vec()
    }
}

fn fit_models(design: &BatchedDesign) -> Result<Vec<Option<GpModel>>> {
    Ok(kriging::fit(design)?.into_iter().map(Some).collect())
}

/// One macro trial: initialize, learn until the budget is spent, and record
/// `1 - varpi` at each checkpoint.
pub fn run_trial(
    config: &ExperimentConfig,
    oracle: &dyn Oracle,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    config.validate(oracle)?;
    let mut rngs = TrialRngs::new(trial_seed);
    let sne_params = config.sne_params(oracle)?;
    let mut cp = Checkpointer {
        stages: config.checkpoints(),
        next: 0,
    };
    let mut rows = Vec::with_capacity(cp.stages.len());
    let mut record = |stages: Vec<usize>, predictor: &Predictor<'_>, rng: &mut ChaCha8Rng| -> Result<()> {
        for stage in stages {
            let varpi = evaluate_varpi(predictor, oracle, config.eval_points, config.metric, rng)?;
            rows.push(CurveRow {
                trial,
                stage,
                one_minus_varpi: 1.0 - varpi,
            });
        }
        Ok(())
    };

    let dataset = match config.algorithm {
        Algorithm::Cone | Algorithm::UsSne => {
            let mut ds = allocation::initialize(oracle, &mut rngs.policy, &mut rngs.oracle)?;
            let cone = config.cone_params(oracle)?;
            loop {
                let due = cp.crossed(ds.len());
                if !due.is_empty() {
                    let p = Predictor::Sne {
                        dataset: &ds,
                        params: sne_params,
                    };
                    record(due, &p, &mut rngs.eval)?;
                }
                if ds.len() >= config.budget {
                    break;
                }
                let prop = match config.algorithm {
                    Algorithm::Cone => allocation::cone_next(&ds, &cone, &mut rngs.policy)?,
                    _ => allocation::uniform_next(oracle.context_box(), oracle.n_decisions(), &mut rngs.policy),
                };
                let v = oracle.sample(prop.decision, &prop.context, &mut rngs.oracle)?;
                ds.append(prop.decision, prop.context, v)?;
            }
            ds
        }
        Algorithm::UsKrig => {
            let b = config.batch_size;
            let mut ds = Dataset::new(oracle.context_box().clone(), oracle.n_decisions())?;
            let add_batch = |x: Decision, y: Context, ds: &mut Dataset, rngs: &mut TrialRngs| -> Result<()> {
                for _ in 0..b {
                    let v = oracle.sample(x, &y, &mut rngs.oracle)?;
                    ds.append(x, y.clone(), v)?;
                }
                Ok(())
            };
            for x in 0..oracle.n_decisions() {
                for _ in 0..allocation::INIT_PER_DECISION {
                    let y = oracle.context_box().sample_uniform(&mut rngs.policy);
                    add_batch(Decision(x), y, &mut ds, &mut rngs)?;
                }
            }
            loop {
                let due = cp.crossed(ds.len());
                if !due.is_empty() {
                    // refit from everything observed so far
                    let p = Predictor::Krig {
                        models: fit_models(&design_snapshot(&ds, b)?)?,
                    };
                    record(due, &p, &mut rngs.eval)?;
                }
                if ds.len() >= config.budget {
                    break;
                }
                let (prop, _) =
                    allocation::batch_uniform_next(oracle.context_box(), oracle.n_decisions(), b, &mut rngs.policy)?;
                add_batch(prop.decision, prop.context, &mut ds, &mut rngs)?;
            }
            ds
        }
    };
    let samples_charged = dataset.len();
    Ok(TrialOutcome {
        rows,
        dataset,
        samples_charged,
    })
}

/// Rebuild the batched design from a dataset whose observations arrive in
/// consecutive runs of `batch_size` at one (decision, context).
pub fn design_snapshot(dataset: &Dataset, batch_size: usize) -> Result<BatchedDesign> {
    let mut design = BatchedDesign::new(dataset.context_box().clone(), dataset.n_decisions());
    let obs = dataset.observations();
    if !obs.len().is_multiple_of(batch_size) {
        return Err(Error::Argument(format!(
            "{} observations do not split into batches of {batch_size}",
            obs.len()
        )));
    }
    let mut values = Vec::with_capacity(batch_size);
    for chunk in obs.chunks(batch_size) {
        let first = &chunk[0];
        if chunk
            .iter()
            .any(|o| o.decision != first.decision || o.context != first.context)
        {
            return Err(Error::Argument(format!(
                "observations at stages {}..{} are not one batch",
                first.stage,
                first.stage + batch_size - 1
            )));
        }
        values.clear();
        values.extend(chunk.iter().map(|o| o.value));
        design.add_replications(first.decision, first.context.clone(), &values)?;
    }
    Ok(design)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub stage: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub oracle: String,
    pub n_trials: usize,
    pub budget: usize,
    pub final_stage: usize,
    /// Mean of the per-trial final `1 - varpi`.
    pub final_mean: f64,
    /// Sample standard deviation of the per-trial finals.
    pub final_std: f64,
    pub finals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<CurveRow>,
    pub aggregate: Vec<AggregateRow>,
    pub summary: Summary,
    pub datasets: Vec<Dataset>,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Per-stage mean and sample standard deviation across trials.
pub fn aggregate(rows: &[CurveRow]) -> Vec<AggregateRow> {
    let mut stages: Vec<usize> = rows.iter().map(|r| r.stage).collect();
    stages.sort_unstable();
    stages.dedup();
    stages
        .into_iter()
        .map(|stage| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.stage == stage)
                .map(|r| r.one_minus_varpi)
                .collect();
            let (mean, std) = mean_and_std(&v);
            AggregateRow { stage, mean, std }
        })
        .collect()
}

/// Runs every trial (in parallel) and aggregates in trial order.
pub fn run_experiment(config: &ExperimentConfig, oracle: &dyn Oracle) -> Result<ExperimentResult> {
    config.validate(oracle)?;
    let outcomes = (0..config.n_trials)
        .into_par_iter()
        .map(|k| run_trial(config, oracle, k, trial_seed(config.base_seed, k)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let final_stage = config.budget;
    let finals: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            o.rows
                .iter()
                .rev()
                .find(|r| r.stage == final_stage)
                .map(|r| r.one_minus_varpi)
                .expect("every trial records the final stage")
        })
        .collect();
    let (final_mean, final_std) = mean_and_std(&finals);
    let mut rows = Vec::new();
    let mut datasets = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        rows.extend(o.rows);
        datasets.push(o.dataset);
    }
    let aggregate = aggregate(&rows);
    Ok(ExperimentResult {
        config: config.clone(),
        summary: Summary {
            algorithm: config.algorithm,
            oracle: oracle.name().to_string(),
            n_trials: config.n_trials,
            budget: config.budget,
            final_stage,
            final_mean,
            final_std,
            finals,
        },
        rows,
        aggregate,
        datasets,
    })
}

impl ExperimentResult {
    /// Writes `curve_<alg>.csv`, `aggregate_<alg>.csv` and `summary_<alg>.json`
    /// into `dir`, returning the paths written.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let slug = self.config.algorithm.slug();
        let curve = dir.join(format!("curve_{slug}.csv"));
        let agg = dir.join(format!("aggregate_{slug}.csv"));
        let summary = dir.join(format!("summary_{slug}.json"));
        write_curve_csv(&self.rows, &curve)?;
        write_aggregate_csv(&self.aggregate, &agg)?;
        write_summary_json(&self.summary, &self.config, &summary)?;
        Ok(vec![curve, agg, summary])
    }
}
