//! Shrinking neighborhood estimation.
//!
//! For a decision `x` and query context `y`, the m-set is the set of
//! observations of `x` whose normalized distance to `y` is strictly below
//! `r_m = c * m^(-xi/d)`. The m-set activates at the first stage at which it
//! holds m observations. The neighborhood is the largest activated m-set,
//! frozen at the stage it activated (the passive-greedy rule), and the
//! estimates are the sample mean and sample standard deviation over it.
//!
//! Everything here is recomputed lazily from the dataset: since at most one
//! observation arrives per stage, the members of the m-set at activation are
//! exactly the first m arrivals closer than `r_m`, and the largest activated
//! level is the largest m whose m-th smallest distance is below `r_m`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{argmin_tiebreak, Context, ContextBox, Dataset, Decision};
use crate::error::{Error, Result};

pub const DEFAULT_XI: f64 = 0.5;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SneParams {
    /// Shrink exponent, in (0, 1).
    pub xi: f64,
    /// Radius scale, in normalized context units.
    pub c: f64,
    /// Context dimension.
    pub d: usize,
    /// Lower bound applied to reported standard deviations.
    pub sigma_floor: f64,
}

impl SneParams {
    pub fn new(xi: f64, c: f64, d: usize, sigma_floor: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::Argument(format!("xi must lie in (0, 1), got {xi}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Argument(format!("c must be positive, got {c}")));
        }
        if d == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        if !(sigma_floor > 0.0 && sigma_floor.is_finite()) {
            return Err(Error::Argument(format!(
                "sigma_floor must be positive, got {sigma_floor}"
            )));
        }
        Ok(SneParams {
            xi,
            c,
            d,
            sigma_floor,
        })
    }

    /// Parameters with `c` from [`default_c`] and the default sigma floor.
    pub fn for_box(context_box: &ContextBox, xi: f64) -> Result<Self> {
        let c = default_c(context_box, xi)?;
        Self::new(xi, c, context_box.dim(), DEFAULT_SIGMA_FLOOR)
    }

    /// Radius of the m-set.
    pub fn radius(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Argument("radius index starts at 1".into()));
        }
        Ok(self.radius_unchecked(m))
    }

    #[inline]
    fn radius_unchecked(&self, m: usize) -> f64 {
        self.c * (m as f64).powf(-self.xi / self.d as f64)
    }
}

/// Radius scale for which the 2-set covers the whole normalized box:
/// `sqrt(d) / 2^(-xi/d)`.
pub fn default_c(context_box: &ContextBox, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Argument(format!("xi must lie in (0, 1), got {xi}")));
    }
    let d = context_box.dim() as f64;
    Ok(context_box.normalized_diameter() / 2f64.powf(-xi / d))
}

pub fn radius(m: usize, params: &SneParams) -> Result<f64> {
    params.radius(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSummary {
    /// Largest activated level; also the number of members.
    pub psi: usize,
    /// Stage at which the chosen level activated (the last member's stage).
    pub activation_stage: Option<usize>,
    /// Member stages in arrival order.
    pub member_stages: Vec<usize>,
    pub mean: Option<f64>,
    /// Raw sample standard deviation (divisor `psi - 1`); `None` when `psi < 2`.
    pub std: Option<f64>,
    /// `r_psi`; `None` when `psi = 0`.
    pub radius: Option<f64>,
}

impl NeighborhoodSummary {
    fn empty() -> Self {
        NeighborhoodSummary {
            psi: 0,
            activation_stage: None,
            member_stages: Vec::new(),
            mean: None,
            std: None,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard deviation floored at `sigma_floor`.
    pub std: f64,
}

fn check_query(dataset: &Dataset, query: &Context, params: &SneParams) -> Result<()> {
    if params.d != dataset.dim() {
        return Err(Error::Argument(format!(
            "parameters are for dimension {}, dataset has {}",
            params.d,
            dataset.dim()
        )));
    }
    dataset.context_box().check(query)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Neighborhood of `decision` at `query` under the passive-greedy rule.
pub fn neighborhood(
    dataset: &Dataset,
    decision: Decision,
    query: &Context,
    params: &SneParams,
) -> Result<NeighborhoodSummary> {
    check_query(dataset, query, params)?;
    if decision.0 >= dataset.n_decisions() {
        return Err(Error::Argument(format!(
            "decision {} out of range",
            decision.0
        )));
    }
    let q = dataset.context_box().normalize(query);
    let mut scratch = Vec::new();
    Ok(neighborhood_normalized(dataset, decision, &q, params, &mut scratch))
}

fn neighborhood_normalized(
    dataset: &Dataset,
    decision: Decision,
    q: &[f64],
    params: &SneParams,
    sorted: &mut Vec<f64>,
) -> NeighborhoodSummary {
    let positions = dataset.positions_for(decision);
    if positions.is_empty() {
        return NeighborhoodSummary::empty();
    }
    let dists: Vec<f64> = positions
        .iter()
        .map(|&p| distance(dataset.normalized_at(p), q))
        .collect();

    sorted.clear();
    sorted.extend_from_slice(&dists);
    sorted.sort_unstable_by(f64::total_cmp);

    // Level m is activated iff at least m distances fall below r_m, i.e. the
    // m-th smallest does. Feasibility is monotone in m, so stop at the first
    // failure.
    let mut psi = 0;
    for (i, &dm) in sorted.iter().enumerate() {
        let m = i + 1;
        if dm < params.radius_unchecked(m) {
            psi = m;
        } else {
            break;
        }
    }
    if psi == 0 {
        // r_1 = c exceeds every normalized distance when c >= sqrt(d); a
        // smaller c can leave a query uncovered.
        return NeighborhoodSummary::empty();
    }

    let r = params.radius_unchecked(psi);
    let members: Vec<usize> = positions
        .iter()
        .zip(&dists)
        .filter(|(_, &d)| d < r)
        .take(psi)
        .map(|(&p, _)| p)
        .collect();
    debug_assert_eq!(members.len(), psi);

    let obs = dataset.observations();
    let values: Vec<f64> = members.iter().map(|&p| obs[p].value).collect();
    let (mean, std) = mean_std(&values);
    let member_stages: Vec<usize> = members.iter().map(|&p| obs[p].stage).collect();

    NeighborhoodSummary {
        psi,
        activation_stage: member_stages.last().copied(),
        member_stages,
        mean: Some(mean),
        std,
        radius: Some(r),
    }
}

/// Sample mean and sample standard deviation (divisor `n - 1`) in input order.
pub fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    (mean, std)
}

/// Neighborhoods of every decision at one query.
pub fn neighborhoods(
    dataset: &Dataset,
    query: &Context,
    params: &SneParams,
) -> Result<Vec<NeighborhoodSummary>> {
    check_query(dataset, query, params)?;
    let q = dataset.context_box().normalize(query);
    let mut scratch = Vec::new();
    Ok((0..dataset.n_decisions())
        .map(|x| neighborhood_normalized(dataset, Decision(x), &q, params, &mut scratch))
        .collect())
}

fn summary_estimate(
    summary: &NeighborhoodSummary,
    decision: Decision,
    params: &SneParams,
) -> Result<Estimate> {
    let mean = summary.mean.ok_or(Error::NoData {
        decision: decision.0,
    })?;
    let std = summary.std.ok_or(Error::StdUnavailable {
        decision: decision.0,
        psi: summary.psi,
    })?;
    Ok(Estimate {
        mean,
        std: std.max(params.sigma_floor),
    })
}

/// Mean and floored standard deviation; needs at least two neighbors.
pub fn estimate(
    dataset: &Dataset,
    decision: Decision,
    query: &Context,
    params: &SneParams,
) -> Result<Estimate> {
    let s = neighborhood(dataset, decision, query, params)?;
    summary_estimate(&s, decision, params)
}

/// Mean only; one neighbor suffices.
pub fn estimate_mean(
    dataset: &Dataset,
    decision: Decision,
    query: &Context,
    params: &SneParams,
) -> Result<f64> {
    neighborhood(dataset, decision, query, params)?
        .mean
        .ok_or(Error::NoData {
            decision: decision.0,
        })
}

/// Estimates for every decision at one query; fails if any lacks a variance.
pub fn estimate_all(dataset: &Dataset, query: &Context, params: &SneParams) -> Result<Vec<Estimate>> {
    neighborhoods(dataset, query, params)?
        .iter()
        .enumerate()
        .map(|(x, s)| summary_estimate(s, Decision(x), params))
        .collect()
}

/// Per-decision SNE means at a query; fails if any decision is unobserved there.
pub fn means(dataset: &Dataset, query: &Context, params: &SneParams) -> Result<Vec<f64>> {
    neighborhoods(dataset, query, params)?
        .iter()
        .enumerate()
        .map(|(x, s)| {
            s.mean.ok_or_else(|| {
                Error::Uninitialized(format!("decision {x} has no neighbors at the query"))
            })
        })
        .collect()
}

/// Decision with the smallest estimated mean at `query`.
pub fn predict_best<R: Rng + ?Sized>(
    dataset: &Dataset,
    query: &Context,
    params: &SneParams,
    rng: &mut R,
) -> Result<Decision> {
    let m = means(dataset, query, params)?;
    Ok(Decision(argmin_tiebreak(&m, rng)?))
}
