//! Budget allocation: the CONE rejection sampler and the uniform baselines.
//!
//! CONE draws `(x, y)` uniformly on the decision set times the context box
//! and accepts with probability `beta(x, y) / lambda_hi`, so accepted pairs
//! follow a density proportional to the truncated field
//!
//! ```text
//! beta(x, y) = clamp( u(zeta) / zeta^(1 + xi), lambda_lo, lambda_hi ),
//! u(zeta)    = -W_{-1}(-exp(-zeta - 1)),
//! ```
//!
//! where `zeta` is the squared gap to the estimated best (or, for the best,
//! to the runner-up) over four times the estimated noise variance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Context, ContextBox, Dataset, Decision};
use crate::error::{Error, Result};
use crate::numerics::neg_w_factor;
use crate::oracles::Oracle;
use crate::sne::{self, SneParams};

pub const DEFAULT_LAMBDA_LO: f64 = 0.01;
pub const DEFAULT_LAMBDA_HI: f64 = 100.0;
pub const DEFAULT_MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub sne: SneParams,
    /// Proposals drawn per call before the last one is accepted unconditionally.
    pub max_rejections: usize,
}

impl ConeParams {
    /// `lambda_lo == lambda_hi` is accepted and makes the field constant.
    pub fn new(lambda_lo: f64, lambda_hi: f64, sne: SneParams, max_rejections: usize) -> Result<Self> {
        if !(lambda_lo > 0.0 && lambda_lo <= lambda_hi && lambda_hi.is_finite()) {
            return Err(Error::Argument(format!(
                "truncation bounds must satisfy 0 < lo <= hi < inf, got [{lambda_lo}, {lambda_hi}]"
            )));
        }
        if max_rejections == 0 {
            return Err(Error::Argument("max_rejections must be positive".into()));
        }
        Ok(ConeParams {
            lambda_lo,
            lambda_hi,
            sne,
            max_rejections,
        })
    }

    pub fn with_defaults(sne: SneParams) -> Self {
        ConeParams {
            lambda_lo: DEFAULT_LAMBDA_LO,
            lambda_hi: DEFAULT_LAMBDA_HI,
            sne,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }
}

/// A stage's sampling pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub decision: Decision,
    pub context: Context,
}

/// Lowest index attaining the minimum.
fn first_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Rate ratio of `decision` given per-decision means and standard deviations.
///
/// The current best is the lowest-index minimum of `means`.
pub fn zeta_from_estimates(means: &[f64], stds: &[f64], decision: Decision) -> Result<f64> {
    if means.len() < 2 || means.len() != stds.len() {
        return Err(Error::Argument(format!(
            "need matching means/stds for at least 2 decisions, got {} and {}",
            means.len(),
            stds.len()
        )));
    }
    let x = decision.0;
    if x >= means.len() {
        return Err(Error::Argument(format!("decision {x} out of range")));
    }
    let best = first_argmin(means);
    let gap = if x == best {
        means
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min)
            - means[best]
    } else {
        means[x] - means[best]
    };
    let s = stds[x];
    Ok(gap * gap / (4.0 * s * s))
}

/// Estimated rate ratio of `decision` at `query`.
pub fn zeta_hat(
    dataset: &Dataset,
    decision: Decision,
    query: &Context,
    params: &SneParams,
) -> Result<f64> {
    let hoods = sne::neighborhoods(dataset, query, params)?;
    if decision.0 >= hoods.len() {
        return Err(Error::Argument(format!("decision {} out of range", decision.0)));
    }
    let mut means = Vec::with_capacity(hoods.len());
    for (x, h) in hoods.iter().enumerate() {
        means.push(h.mean.ok_or_else(|| {
            Error::Uninitialized(format!("decision {x} has no neighbors at the query"))
        })?);
    }
    // Only the evaluated decision's variance enters the ratio.
    let own = &hoods[decision.0];
    let s = own
        .std
        .ok_or_else(|| {
            Error::Uninitialized(format!(
                "variance unavailable for decision {} (psi = {})",
                decision.0, own.psi
            ))
        })?
        .max(params.sigma_floor);
    let mut stds = vec![1.0; means.len()];
    stds[decision.0] = s;
    zeta_from_estimates(&means, &stds, decision)
}

/// Truncated sampling intensity for a given rate ratio.
pub fn beta_from_zeta(zeta: f64, xi: f64, lambda_lo: f64, lambda_hi: f64) -> Result<f64> {
    if zeta == 0.0 {
        return Ok(lambda_hi);
    }
    if zeta.is_infinite() && zeta > 0.0 {
        return Ok(lambda_lo);
    }
    let raw = neg_w_factor(zeta)? / zeta.powf(1.0 + xi);
    Ok(raw.clamp(lambda_lo, lambda_hi))
}

pub fn beta(
    dataset: &Dataset,
    decision: Decision,
    query: &Context,
    params: &ConeParams,
) -> Result<f64> {
    let z = zeta_hat(dataset, decision, query, &params.sne)?;
    beta_from_zeta(z, params.sne.xi, params.lambda_lo, params.lambda_hi)
}

/// Decision uniform over indices, context uniform on the box.
pub fn uniform_next<R: Rng + ?Sized>(context_box: &ContextBox, n_decisions: usize, rng: &mut R) -> Proposal {
    let decision = Decision(rng.random_range(0..n_decisions));
    let context = context_box.sample_uniform(rng);
    Proposal { decision, context }
}

/// A uniform design point together with its replication count.
pub fn batch_uniform_next<R: Rng + ?Sized>(
    context_box: &ContextBox,
    n_decisions: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<(Proposal, usize)> {
    if batch_size < 2 {
        return Err(Error::Argument(format!(
            "batch size must be at least 2 to estimate a variance, got {batch_size}"
        )));
    }
    Ok((uniform_next(context_box, n_decisions, rng), batch_size))
}

/// Rejection sampler over an arbitrary field bounded by `lambda_hi`.
///
/// Draws at most `max_rejections` proposals; the last is accepted
/// unconditionally.
pub fn rejection_next<R, F>(
    context_box: &ContextBox,
    n_decisions: usize,
    lambda_hi: f64,
    max_rejections: usize,
    rng: &mut R,
    mut field: F,
) -> Result<Proposal>
where
    R: Rng + ?Sized,
    F: FnMut(Decision, &Context) -> Result<f64>,
{
    if max_rejections == 0 {
        return Err(Error::Argument("max_rejections must be positive".into()));
    }
    for attempt in 1..=max_rejections {
        let p = uniform_next(context_box, n_decisions, rng);
        let threshold = lambda_hi * rng.random::<f64>();
        if attempt == max_rejections || threshold <= field(p.decision, &p.context)? {
            return Ok(p);
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Number of observations `initialize` takes per decision.
pub const INIT_PER_DECISION: usize = 2;

fn check_initialized(dataset: &Dataset) -> Result<()> {
    for x in 0..dataset.n_decisions() {
        let n = dataset.count_for(Decision(x));
        if n < INIT_PER_DECISION {
            return Err(Error::Uninitialized(format!(
                "decision {x} has {n} observation(s), need {INIT_PER_DECISION}"
            )));
        }
    }
    Ok(())
}

/// Next CONE sampling pair for the current dataset.
pub fn cone_next<R: Rng + ?Sized>(dataset: &Dataset, params: &ConeParams, rng: &mut R) -> Result<Proposal> {
    check_initialized(dataset)?;
    rejection_next(
        dataset.context_box(),
        dataset.n_decisions(),
        params.lambda_hi,
        params.max_rejections,
        rng,
        |x, y| beta(dataset, x, y, params),
    )
}

/// Two uniform contexts per decision, one observation each.
///
/// Contexts come from `policy_rng`, simulation noise from `oracle_rng`.
pub fn initialize<R1, R2>(oracle: &dyn Oracle, policy_rng: &mut R1, oracle_rng: &mut R2) -> Result<Dataset>
where
    R1: Rng + ?Sized,
    R2: rand::RngCore,
{
    let mut ds = Dataset::new(oracle.context_box().clone(), oracle.n_decisions())?;
    for x in 0..oracle.n_decisions() {
        for _ in 0..INIT_PER_DECISION {
            let y = oracle.context_box().sample_uniform(policy_rng);
            let v = oracle.sample(Decision(x), &y, oracle_rng)?;
            ds.append(Decision(x), y, v)?;
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ToyOracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeta_examples() {
        let means = [1.0, 0.0, 2.0];
        let stds = [1.0, 1.0, 1.0];
        assert_eq!(zeta_from_estimates(&means, &stds, Decision(0)).unwrap(), 0.25);
        assert_eq!(zeta_from_estimates(&means, &stds, Decision(2)).unwrap(), 1.0);
        assert_eq!(zeta_from_estimates(&means, &stds, Decision(1)).unwrap(), 0.25);

        let means = [1.0, 0.0];
        let stds = [2.0, 1.0];
        assert_eq!(zeta_from_estimates(&means, &stds, Decision(0)).unwrap(), 0.0625);
        assert_eq!(zeta_from_estimates(&means, &stds, Decision(1)).unwrap(), 0.25);

        let means = [0.5, 0.5, 3.0];
        assert_eq!(zeta_from_estimates(&means, &[1.0; 3], Decision(1)).unwrap(), 0.0);
        assert_eq!(zeta_from_estimates(&means, &[1.0; 3], Decision(0)).unwrap(), 0.0);
    }

    #[test]
    fn beta_examples() {
        let b = beta_from_zeta(0.25, 0.5, 0.01, 100.0).unwrap();
        let expected = neg_w_factor(0.25).unwrap() / 0.125;
        assert_eq!(b, expected);
        // 1.88271475258259476... / 0.125
        assert!((b - 15.061_718_020_660_758).abs() < 1e-11, "{b}");

        assert_eq!(beta_from_zeta(0.0, 0.5, 0.01, 100.0).unwrap(), 100.0);

        let raw = neg_w_factor(50.0).unwrap() / 50f64.powf(1.5);
        assert!((raw - 0.1556).abs() < 1e-3, "{raw}");
        assert_eq!(beta_from_zeta(50.0, 0.5, 1.0, 100.0).unwrap(), 1.0);
        assert_eq!(beta_from_zeta(f64::INFINITY, 0.5, 0.01, 100.0).unwrap(), 0.01);
    }

    #[test]
    fn beta_decreasing_and_bounded() {
        let (lo, hi) = (0.01, 100.0);
        let mut prev = f64::INFINITY;
        for i in 0..2000 {
            let z = 1e-4 * 1.01f64.powi(i);
            let b = beta_from_zeta(z, 0.5, lo, hi).unwrap();
            assert!((lo..=hi).contains(&b));
            assert!(b <= prev, "not monotone at zeta={z}");
            let raw = neg_w_factor(z).unwrap() / z.powf(1.5);
            if raw > lo && raw < hi {
                assert_eq!(b, raw);
            }
            prev = b;
        }
    }

    #[test]
    fn params_validation() {
        let b = ContextBox::cube(1, 0.0, 1.0).unwrap();
        let s = SneParams::for_box(&b, 0.5).unwrap();
        assert!(ConeParams::new(0.0, 1.0, s, 10).is_err());
        assert!(ConeParams::new(2.0, 1.0, s, 10).is_err());
        assert!(ConeParams::new(1.0, f64::INFINITY, s, 10).is_err());
        assert!(ConeParams::new(1.0, 1.0, s, 0).is_err());
        assert!(ConeParams::new(1.0, 1.0, s, 1).is_ok());
    }

    #[test]
    fn constant_field_accepts_first_proposal() {
        let b = ContextBox::cube(1, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut calls = 0;
        for _ in 0..100 {
            rejection_next(&b, 3, 5.0, 10, &mut rng, |_, _| {
                calls += 1;
                Ok(5.0)
            })
            .unwrap();
        }
        assert_eq!(calls, 100);
    }

    #[test]
    fn two_level_field_frequency() {
        let b = ContextBox::cube(1, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hi = 9.0;
        let n = 20_000;
        let zeros = (0..n)
            .filter(|_| {
                rejection_next(&b, 2, hi, 1000, &mut rng, |x, _| {
                    Ok(if x.0 == 0 { hi } else { hi / 3.0 })
                })
                .unwrap()
                .decision
                    == Decision(0)
            })
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.75).abs() < 0.02, "{freq}");
    }

    #[test]
    fn cap_forces_acceptance() {
        let b = ContextBox::cube(1, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut calls = 0;
        let p = rejection_next(&b, 2, 100.0, 1, &mut rng, |_, _| {
            calls += 1;
            Ok(1e-9)
        })
        .unwrap();
        assert_eq!(calls, 0);
        assert!(b.contains(&p.context));
    }

    #[test]
    fn uniform_next_is_uniform() {
        let b = ContextBox::cube(1, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut zeros = 0;
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let p = uniform_next(&b, 2, &mut rng);
            zeros += (p.decision == Decision(0)) as usize;
            ys.push(p.context.0[0]);
        }
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
        let mean = ys.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02);
        ys.sort_by(f64::total_cmp);
        let ks = ys
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let f = y / 2.0;
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn batch_examples() {
        let b = ContextBox::cube(1, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, reps) = batch_uniform_next(&b, 3, 5, &mut rng).unwrap();
        assert_eq!(reps, 5);
        assert!(batch_uniform_next(&b, 3, 1, &mut rng).is_err());
        assert_eq!(3000 / reps, 600);
    }

    #[test]
    fn initialize_covers_every_decision() {
        let oracle = ToyOracle::new();
        let mut p = ChaCha8Rng::seed_from_u64(6);
        let mut o = ChaCha8Rng::seed_from_u64(7);
        let ds = initialize(&oracle, &mut p, &mut o).unwrap();
        assert_eq!(ds.len(), 6);
        let params = SneParams::for_box(ds.context_box(), 0.5).unwrap();
        for _ in 0..100 {
            let q = ds.context_box().sample_uniform(&mut p);
            for h in sne::neighborhoods(&ds, &q, &params).unwrap() {
                assert!(h.psi >= 2);
            }
        }
        // every field value is available right after initialization
        let cp = ConeParams::with_defaults(params);
        let q = Context::new(vec![1.0]);
        for x in 0..3 {
            let b = beta(&ds, Decision(x), &q, &cp).unwrap();
            assert!((cp.lambda_lo..=cp.lambda_hi).contains(&b));
        }
        cone_next(&ds, &cp, &mut p).unwrap();
    }

    #[test]
    fn cone_next_requires_initialization() {
        let b = ContextBox::cube(1, 0.0, 2.0).unwrap();
        let mut ds = Dataset::new(b.clone(), 2).unwrap();
        ds.append(Decision(0), Context::new(vec![1.0]), 0.0).unwrap();
        ds.append(Decision(0), Context::new(vec![0.5]), 0.0).unwrap();
        ds.append(Decision(1), Context::new(vec![0.5]), 0.0).unwrap();
        let cp = ConeParams::with_defaults(SneParams::for_box(&b, 0.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(matches!(cone_next(&ds, &cp, &mut rng), Err(Error::Uninitialized(_))));
        assert!(matches!(
            zeta_hat(&ds, Decision(1), &Context::new(vec![0.5]), &cp.sne),
            Err(Error::Uninitialized(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_truncated_and_nonincreasing(
                a in 0.0f64..50.0,
                b in 0.0f64..50.0,
                xi in 0.1f64..2.0,
                lo in 1e-3f64..1.0,
                span in 1.0f64..1e3,
            ) {
                let hi = lo * span;
                let (a, b) = (a.min(b), a.max(b));
                let ba = beta_from_zeta(a, xi, lo, hi).unwrap();
                let bb = beta_from_zeta(b, xi, lo, hi).unwrap();
                prop_assert!((lo..=hi).contains(&ba) && (lo..=hi).contains(&bb));
                prop_assert!(ba >= bb);
            }

            #[test]
            fn zeta_nonnegative_and_symmetric_in_scale(
                means in prop::collection::vec(-10.0f64..10.0, 2..6),
                s in 0.1f64..5.0,
                k in 0.1f64..10.0,
            ) {
                let stds = vec![s; means.len()];
                let scaled: Vec<f64> = means.iter().map(|m| m * k).collect();
                let scaled_stds: Vec<f64> = stds.iter().map(|v| v * k).collect();
                for x in 0..means.len() {
                    let z = zeta_from_estimates(&means, &stds, Decision(x)).unwrap();
                    let zk = zeta_from_estimates(&scaled, &scaled_stds, Decision(x)).unwrap();
                    prop_assert!(z >= 0.0);
                    prop_assert!((z - zk).abs() <= 1e-9 * (1.0 + z));
                }
            }
        }
    }
}
