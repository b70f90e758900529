//! Decisions, contexts, observations, and the append-only dataset shared by
//! the estimator and every allocation policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of one element of the finite decision set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Decision(pub usize);

impl Decision {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of the context space, in its original (unnormalized) units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context(pub Vec<f64>);

impl Context {
    pub fn new(coords: Vec<f64>) -> Self {
        Context(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for Context {
    fn from(v: Vec<f64>) -> Self {
        Context(v)
    }
}

/// Axis-aligned bounded context space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ContextBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Argument("context box needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Argument(format!(
                "bound dimensions differ: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Domain(format!(
                    "invalid bounds on axis {k}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(ContextBox { lower, upper })
    }

    /// The same interval `[lo, hi]` on every one of `dim` axes.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Euclidean diameter in original units.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Diameter after mapping the box onto the unit hypercube, i.e. `sqrt(d)`.
    pub fn normalized_diameter(&self) -> f64 {
        (self.dim() as f64).sqrt()
    }

    pub fn contains(&self, context: &Context) -> bool {
        context.dim() == self.dim()
            && context
                .coords()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn check(&self, context: &Context) -> Result<()> {
        if context.dim() != self.dim() {
            return Err(Error::Argument(format!(
                "context has dimension {}, box has {}",
                context.dim(),
                self.dim()
            )));
        }
        if !self.contains(context) {
            return Err(Error::Domain(format!(
                "context {:?} outside box [{:?}, {:?}]",
                context.coords(),
                self.lower,
                self.upper
            )));
        }
        Ok(())
    }

    /// Affine map onto `[0, 1]^d`, written into `out`.
    pub fn normalize_into(&self, coords: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            coords
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(v, (lo, hi))| (v - lo) / (hi - lo)),
        );
    }

    pub fn normalize(&self, context: &Context) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.normalize_into(context.coords(), &mut out);
        out
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        Context(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        )
    }
}

/// One simulation run. `stage` is 1-based: the t-th observation has stage t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub decision: Decision,
    pub context: Context,
    pub value: f64,
    pub stage: usize,
}

/// Append-only record of observations.
///
/// Storage is 0-based: the observation at position `i` has stage `i + 1`.
/// Normalized context coordinates and per-decision position lists are kept
/// alongside so neighborhood queries need not recompute them.
#[derive(Debug, Clone)]
pub struct Dataset {
    context_box: ContextBox,
    n_decisions: usize,
    observations: Vec<Observation>,
    normalized: Vec<f64>,
    by_decision: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(context_box: ContextBox, n_decisions: usize) -> Result<Self> {
        if n_decisions < 2 {
            return Err(Error::Argument(format!(
                "decision set needs at least 2 elements, got {n_decisions}"
            )));
        }
        Ok(Dataset {
            context_box,
            n_decisions,
            observations: Vec::new(),
            normalized: Vec::new(),
            by_decision: vec![Vec::new(); n_decisions],
        })
    }

    /// Rebuilds a dataset from its observation sequence, checking the stage
    /// numbering.
    pub fn from_observations(
        context_box: ContextBox,
        n_decisions: usize,
        observations: impl IntoIterator<Item = Observation>,
    ) -> Result<Self> {
        let mut ds = Dataset::new(context_box, n_decisions)?;
        for obs in observations {
            let expected = ds.len() + 1;
            if obs.stage != expected {
                return Err(Error::Argument(format!(
                    "observation stage {} out of order, expected {expected}",
                    obs.stage
                )));
            }
            ds.append(obs.decision, obs.context, obs.value)?;
        }
        Ok(ds)
    }

    /// Records one observation and returns its stage.
    pub fn append(&mut self, decision: Decision, context: Context, value: f64) -> Result<usize> {
        if decision.0 >= self.n_decisions {
            return Err(Error::Argument(format!(
                "decision {} out of range for {} decisions",
                decision.0, self.n_decisions
            )));
        }
        self.context_box.check(&context)?;
        if !value.is_finite() {
            return Err(Error::Value(format!("observation value {value} is not finite")));
        }
        let position = self.observations.len();
        let stage = position + 1;
        let mut norm = Vec::with_capacity(context.dim());
        self.context_box.normalize_into(context.coords(), &mut norm);
        self.normalized.extend_from_slice(&norm);
        self.by_decision[decision.0].push(position);
        self.observations.push(Observation {
            decision,
            context,
            value,
            stage,
        });
        Ok(stage)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn n_decisions(&self) -> usize {
        self.n_decisions
    }

    pub fn context_box(&self) -> &ContextBox {
        &self.context_box
    }

    pub fn dim(&self) -> usize {
        self.context_box.dim()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Positions (0-based) of the observations taken at `decision`, in arrival order.
    pub fn positions_for(&self, decision: Decision) -> &[usize] {
        &self.by_decision[decision.0]
    }

    pub fn count_for(&self, decision: Decision) -> usize {
        self.by_decision[decision.0].len()
    }

    /// Normalized coordinates of the observation at `position`.
    pub fn normalized_at(&self, position: usize) -> &[f64] {
        let d = self.dim();
        &self.normalized[position * d..(position + 1) * d]
    }
}

/// Decision-loss metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMetric {
    /// Probability of false selection: 0/1 loss.
    #[default]
    Pfs,
    /// Expected opportunity cost: absolute gap in true means.
    Eoc,
}

/// Loss of selecting a decision with true mean `f_selected` when the optimum is `f_optimal`.
pub fn decision_loss(metric: LossMetric, f_selected: f64, f_optimal: f64) -> Result<f64> {
    if !f_selected.is_finite() || !f_optimal.is_finite() {
        return Err(Error::Value(format!(
            "loss inputs must be finite, got ({f_selected}, {f_optimal})"
        )));
    }
    Ok(match metric {
        LossMetric::Pfs => {
            if f_selected == f_optimal {
                0.0
            } else {
                1.0
            }
        }
        LossMetric::Eoc => (f_selected - f_optimal).abs(),
    })
}

/// Index of the minimum; exact ties are broken uniformly at random.
///
/// The rng is consumed only when a tie occurs.
pub fn argmin_tiebreak<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Argument("argmin of an empty slice".into()));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Value(format!("NaN at index {i}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut ties = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == min)
        .map(|(i, _)| i);
    let first = ties.next().expect("minimum is attained");
    let rest: Vec<usize> = ties.collect();
    if rest.is_empty() {
        return Ok(first);
    }
    let k = rng.random_range(0..rest.len() + 1);
    Ok(if k == 0 { first } else { rest[k - 1] })
}
