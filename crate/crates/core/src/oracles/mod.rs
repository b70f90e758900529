//! Stochastic simulators behind one contract.

use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::domain::{argmin_tiebreak, Context, ContextBox, Decision};
use crate::error::{Error, Result};

pub mod callcenter;
pub mod toy;

pub use callcenter::{CallCenterConfig, CallCenterOracle};
pub use toy::ToyOracle;

pub trait Oracle: Send + Sync {
    fn name(&self) -> &str;

    fn n_decisions(&self) -> usize;

    fn context_box(&self) -> &ContextBox;

    /// One simulation run; always finite.
    fn sample(&self, decision: Decision, context: &Context, rng: &mut dyn RngCore) -> Result<f64>;

    /// Noise-free performance, when known in closed form.
    fn true_mean(&self, _decision: Decision, _context: &Context) -> Option<f64> {
        None
    }

    /// Best decision at `context`. Oracles without a closed form may estimate
    /// it by extra simulation using `rng`; those runs are never charged to a
    /// learning budget.
    fn true_best(&self, _context: &Context, _rng: &mut dyn RngCore) -> Result<Decision> {
        Err(Error::Config(format!(
            "oracle '{}' has no ground-truth mechanism",
            self.name()
        )))
    }
}

type SurfaceFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;

/// Gaussian observations around an arbitrary mean surface with an arbitrary
/// noise standard deviation surface.
#[derive(Clone)]
pub struct GaussianOracle {
    name: String,
    n_decisions: usize,
    context_box: ContextBox,
    mean: SurfaceFn,
    std: SurfaceFn,
}

impl GaussianOracle {
    pub fn new<M, S>(name: impl Into<String>, n_decisions: usize, context_box: ContextBox, mean: M, std: S) -> Result<Self>
    where
        M: Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
        S: Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        if n_decisions < 2 {
            return Err(Error::Argument("decision set needs at least 2 elements".into()));
        }
        Ok(GaussianOracle {
            name: name.into(),
            n_decisions,
            context_box,
            mean: Arc::new(mean),
            std: Arc::new(std),
        })
    }

    pub fn mean_at(&self, decision: Decision, context: &Context) -> f64 {
        (self.mean)(decision.0, context.coords())
    }

    pub fn std_at(&self, decision: Decision, context: &Context) -> f64 {
        (self.std)(decision.0, context.coords())
    }
}

impl std::fmt::Debug for GaussianOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianOracle")
            .field("name", &self.name)
            .field("n_decisions", &self.n_decisions)
            .field("context_box", &self.context_box)
            .finish_non_exhaustive()
    }
}

pub(crate) fn gaussian_draw(mean: f64, std: f64, rng: &mut dyn RngCore) -> Result<f64> {
    if std == 0.0 {
        return Ok(mean);
    }
    let n = Normal::new(mean, std)
        .map_err(|e| Error::Value(format!("bad normal parameters ({mean}, {std}): {e}")))?;
    Ok(n.sample(rng))
}

impl Oracle for GaussianOracle {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_decisions(&self) -> usize {
        self.n_decisions
    }

    fn context_box(&self) -> &ContextBox {
        &self.context_box
    }

    fn sample(&self, decision: Decision, context: &Context, rng: &mut dyn RngCore) -> Result<f64> {
        self.context_box.check(context)?;
        gaussian_draw(self.mean_at(decision, context), self.std_at(decision, context), rng)
    }

    fn true_mean(&self, decision: Decision, context: &Context) -> Option<f64> {
        Some(self.mean_at(decision, context))
    }

    fn true_best(&self, context: &Context, rng: &mut dyn RngCore) -> Result<Decision> {
        let means: Vec<f64> = (0..self.n_decisions)
            .map(|x| self.mean_at(Decision(x), context))
            .collect();
        Ok(Decision(argmin_tiebreak(&means, rng)?))
    }
}
