//! Kriging baseline: one Gaussian-process interpolator per decision with
//! per-point nuggets.
//!
//! Kernel is squared-exponential on normalized contexts with a constant mean
//! equal to the average target. Length-scale and signal variance are picked
//! by maximizing the log marginal likelihood over a fixed log-spaced grid.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::domain::{argmin_tiebreak, Context, ContextBox, Decision};
use crate::error::{Error, Result};

const GRID: usize = 10;
const LENGTH_RANGE: (f64, f64) = (0.05, 2.0);
const SIGNAL_RANGE: (f64, f64) = (0.01, 100.0);
const NUGGET_RANGE: (f64, f64) = (1e-4, 1.0);
const JITTERS: [f64; 7] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5];
const MAX_JITTER: f64 = 1e-4;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// One replicated design point.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub context: Context,
    pub batch_mean: f64,
    /// Sample variance of the replications (divisor `batch_size - 1`).
    pub batch_variance: f64,
    pub batch_size: usize,
}

impl DesignPoint {
    pub fn from_replications(context: Context, values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Argument(format!(
                "a batch needs at least 2 replications, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Ok(DesignPoint {
            context,
            batch_mean: mean,
            batch_variance: var,
            batch_size: values.len(),
        })
    }

    /// Variance of the batch mean.
    pub fn nugget(&self) -> f64 {
        self.batch_variance / self.batch_size as f64
    }
}

/// Batched design points grouped by decision.
#[derive(Debug, Clone)]
pub struct BatchedDesign {
    context_box: ContextBox,
    points: Vec<Vec<DesignPoint>>,
}

impl BatchedDesign {
    pub fn new(context_box: ContextBox, n_decisions: usize) -> Self {
        BatchedDesign {
            context_box,
            points: vec![Vec::new(); n_decisions],
        }
    }

    pub fn add(&mut self, decision: Decision, point: DesignPoint) -> Result<()> {
        if decision.0 >= self.points.len() {
            return Err(Error::Argument(format!("decision {} out of range", decision.0)));
        }
        self.context_box.check(&point.context)?;
        if !point.batch_mean.is_finite() || point.batch_variance.is_nan() || point.batch_variance < 0.0 || point.batch_size < 2 {
            return Err(Error::Value(format!(
                "invalid design point (mean {}, variance {}, size {})",
                point.batch_mean, point.batch_variance, point.batch_size
            )));
        }
        self.points[decision.0].push(point);
        Ok(())
    }

    pub fn add_replications(&mut self, decision: Decision, context: Context, values: &[f64]) -> Result<()> {
        let p = DesignPoint::from_replications(context, values)?;
        self.add(decision, p)
    }

    pub fn n_decisions(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self, decision: Decision) -> &[DesignPoint] {
        &self.points[decision.0]
    }

    pub fn context_box(&self) -> &ContextBox {
        &self.context_box
    }

    pub fn total_points(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }
}

/// A fitted Gaussian-process posterior mean.
#[derive(Debug, Clone)]
pub struct GpModel {
    context_box: ContextBox,
    inputs: Vec<Vec<f64>>,
    /// `(K + diag(nugget))^{-1} (targets - mean)`
    weights: DVector<f64>,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub mean: f64,
    /// Homoscedastic nugget chosen by likelihood, when fitted that way.
    pub noise_variance: Option<f64>,
    pub jitter: f64,
    pub log_likelihood: f64,
}

struct Candidate {
    length_scale: f64,
    signal_variance: f64,
    noise_variance: Option<f64>,
    jitter: f64,
    log_likelihood: f64,
    weights: DVector<f64>,
}

fn sq_distances(inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| {
        inputs[i]
            .iter()
            .zip(&inputs[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    })
}

/// Cholesky of `s2 * base + diag(nuggets)`, escalating a relative jitter
/// until the factorization succeeds.
fn factor(base: &DMatrix<f64>, s2: f64, nuggets: &[f64]) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = nuggets.len();
    for &j in JITTERS.iter().chain(std::iter::once(&MAX_JITTER)) {
        let mut k = base * s2;
        for i in 0..n {
            k[(i, i)] += nuggets[i] + j * s2;
        }
        if let Some(ch) = k.cholesky() {
            if ch.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
                return Some((ch, j));
            }
        }
    }
    None
}

fn evaluate(
    ch: &Cholesky<f64, Dyn>,
    resid: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let alpha = ch.solve(resid);
    let n = resid.len() as f64;
    let log_det: f64 = ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let ll = -0.5 * resid.dot(&alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
    (ll, alpha)
}

impl GpModel {
    /// Fit to `targets` at `contexts` with known per-point nuggets.
    pub fn fit_with_nuggets(
        context_box: &ContextBox,
        contexts: &[Context],
        targets: &[f64],
        nuggets: &[f64],
    ) -> Result<Self> {
        Self::fit_inner(context_box, contexts, targets, Some(nuggets))
    }

    /// Fit assuming one unknown noise level shared by every point; the
    /// nugget joins the likelihood grid as a fraction of the target variance.
    pub fn fit_homoscedastic(context_box: &ContextBox, contexts: &[Context], targets: &[f64]) -> Result<Self> {
        Self::fit_inner(context_box, contexts, targets, None)
    }

    fn fit_inner(
        context_box: &ContextBox,
        contexts: &[Context],
        targets: &[f64],
        nuggets: Option<&[f64]>,
    ) -> Result<Self> {
        let n = contexts.len();
        if n < 2 {
            return Err(Error::Argument(format!("Kriging needs at least 2 points, got {n}")));
        }
        if targets.len() != n || nuggets.is_some_and(|g| g.len() != n) {
            return Err(Error::Argument("contexts, targets and nuggets differ in length".into()));
        }
        for c in contexts {
            context_box.check(c)?;
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Value("Kriging targets must be finite".into()));
        }

        let inputs: Vec<Vec<f64>> = contexts.iter().map(|c| context_box.normalize(c)).collect();
        let mean = targets.iter().sum::<f64>() / n as f64;
        let resid = DVector::from_iterator(n, targets.iter().map(|t| t - mean));
        let var = resid.iter().map(|r| r * r).sum::<f64>() / (n - 1) as f64;
        let scale = if var > 0.0 { var } else { 1.0 };

        let diam = context_box.normalized_diameter();
        let lengths = log_grid(LENGTH_RANGE.0 * diam, LENGTH_RANGE.1 * diam, GRID);
        let signals = log_grid(SIGNAL_RANGE.0 * scale, SIGNAL_RANGE.1 * scale, GRID);
        let noise_levels: Vec<Option<f64>> = match nuggets {
            Some(_) => vec![None],
            None => log_grid(NUGGET_RANGE.0 * scale, NUGGET_RANGE.1 * scale, GRID)
                .into_iter()
                .map(Some)
                .collect(),
        };

        let d2 = sq_distances(&inputs);
        let mut best: Option<Candidate> = None;
        let mut diag = vec![0.0; n];
        for &l in &lengths {
            let base = d2.map(|v| (-v / (2.0 * l * l)).exp());
            for &s2 in &signals {
                for &noise in &noise_levels {
                    match (nuggets, noise) {
                        (Some(g), _) => diag.copy_from_slice(g),
                        (None, Some(v)) => diag.iter_mut().for_each(|d| *d = v),
                        (None, None) => unreachable!(),
                    }
                    let Some((ch, jitter)) = factor(&base, s2, &diag) else {
                        continue;
                    };
                    let (ll, alpha) = evaluate(&ch, &resid);
                    if !ll.is_finite() {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| ll > b.log_likelihood) {
                        best = Some(Candidate {
                            length_scale: l,
                            signal_variance: s2,
                            noise_variance: noise,
                            jitter,
                            log_likelihood: ll,
                            weights: alpha,
                        });
                    }
                }
            }
        }
        let best = best.ok_or_else(|| {
            Error::Numeric("covariance matrix not positive definite at any grid point".into())
        })?;
        Ok(GpModel {
            context_box: context_box.clone(),
            inputs,
            weights: best.weights,
            length_scale: best.length_scale,
            signal_variance: best.signal_variance,
            mean,
            noise_variance: best.noise_variance,
            jitter: best.jitter,
            log_likelihood: best.log_likelihood,
        })
    }

    /// Fit with the kernel hyperparameters held fixed.
    pub fn fit_fixed(
        context_box: &ContextBox,
        contexts: &[Context],
        targets: &[f64],
        nuggets: &[f64],
        length_scale: f64,
        signal_variance: f64,
    ) -> Result<Self> {
        let n = contexts.len();
        if n == 0 || targets.len() != n || nuggets.len() != n {
            return Err(Error::Argument("contexts, targets and nuggets differ in length".into()));
        }
        if !(length_scale > 0.0 && signal_variance > 0.0) {
            return Err(Error::Value("hyperparameters must be positive".into()));
        }
        for c in contexts {
            context_box.check(c)?;
        }
        let inputs: Vec<Vec<f64>> = contexts.iter().map(|c| context_box.normalize(c)).collect();
        let mean = targets.iter().sum::<f64>() / n as f64;
        let resid = DVector::from_iterator(n, targets.iter().map(|t| t - mean));
        let base = sq_distances(&inputs).map(|v| (-v / (2.0 * length_scale * length_scale)).exp());
        let (ch, jitter) = factor(&base, signal_variance, nuggets)
            .ok_or_else(|| Error::Numeric("covariance matrix not positive definite".into()))?;
        let (ll, alpha) = evaluate(&ch, &resid);
        Ok(GpModel {
            context_box: context_box.clone(),
            inputs,
            weights: alpha,
            length_scale,
            signal_variance,
            mean,
            noise_variance: None,
            jitter,
            log_likelihood: ll,
        })
    }

    /// Posterior mean at `query`.
    pub fn predict(&self, query: &Context) -> f64 {
        let q = self.context_box.normalize(query);
        let two_l2 = 2.0 * self.length_scale * self.length_scale;
        let k_dot: f64 = self
            .inputs
            .iter()
            .zip(self.weights.iter())
            .map(|(x, w)| {
                let d2: f64 = x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                self.signal_variance * (-d2 / two_l2).exp() * w
            })
            .sum();
        self.mean + k_dot
    }

    pub fn n_points(&self) -> usize {
        self.inputs.len()
    }
}

/// Fit the model of one decision from its batches.
pub fn fit_decision(design: &BatchedDesign, decision: Decision) -> Result<GpModel> {
    let pts = design.points(decision);
    if pts.len() < 2 {
        return Err(Error::Uninitialized(format!(
            "decision {} has {} design point(s), need 2",
            decision.0,
            pts.len()
        )));
    }
    let contexts: Vec<Context> = pts.iter().map(|p| p.context.clone()).collect();
    let targets: Vec<f64> = pts.iter().map(|p| p.batch_mean).collect();
    let nuggets: Vec<f64> = pts.iter().map(DesignPoint::nugget).collect();
    GpModel::fit_with_nuggets(design.context_box(), &contexts, &targets, &nuggets)
}

/// Fit every decision's model.
pub fn fit(design: &BatchedDesign) -> Result<Vec<GpModel>> {
    (0..design.n_decisions())
        .map(|x| fit_decision(design, Decision(x)))
        .collect()
}

/// Decision with the smallest posterior mean; `None` entries are unfitted.
pub fn predict_best_krig<R: Rng + ?Sized>(
    models: &[Option<GpModel>],
    query: &Context,
    rng: &mut R,
) -> Result<Decision> {
    let means = models
        .iter()
        .enumerate()
        .map(|(x, m)| {
            m.as_ref()
                .map(|m| m.predict(query))
                .ok_or_else(|| Error::Uninitialized(format!("decision {x} has no fitted model")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Decision(argmin_tiebreak(&means, rng)?))
}
