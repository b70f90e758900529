//! One-dimensional heteroscedastic benchmark on `y ∈ [0, 2]` with three
//! decisions whose best switches several times across the interval.
//!
//! Decision indices 0, 1, 2 correspond to the benchmark's x = 1, 2, 3.

use rand::RngCore;

use super::{gaussian_draw, Oracle};
use crate::domain::{Context, ContextBox, Decision};
use crate::error::{Error, Result};

pub const TOY_LOWER: f64 = 0.0;
pub const TOY_UPPER: f64 = 2.0;
pub const TOY_DECISIONS: usize = 3;

fn check(decision: Decision, y: f64) -> Result<()> {
    if decision.0 >= TOY_DECISIONS {
        return Err(Error::Argument(format!(
            "toy benchmark has {TOY_DECISIONS} decisions, got index {}",
            decision.0
        )));
    }
    if !(TOY_LOWER..=TOY_UPPER).contains(&y) {
        return Err(Error::Domain(format!("toy context {y} outside [0, 2]")));
    }
    Ok(())
}

pub fn toy_mean(decision: Decision, y: f64) -> Result<f64> {
    check(decision, y)?;
    Ok(match decision.0 {
        0 => 10.0 / ((y + 1.0) * (y + 1.0)) * (y + 1.0).exp().sin(),
        1 => 0.0,
        _ => -10.0 / ((y + 0.8) * (y + 0.8)) * (y + 0.8).exp().sin(),
    })
}

pub fn toy_std(decision: Decision, y: f64) -> Result<f64> {
    check(decision, y)?;
    let freq = match decision.0 {
        0 => 16.0,
        1 => 8.0,
        _ => 4.0,
    };
    Ok(0.5 * ((freq * y).sin() + 1.2))
}

/// Closed-form best decision; exact ties go to the lowest index.
pub fn toy_true_best(y: f64) -> Result<Decision> {
    let mut best = Decision(0);
    let mut best_mean = toy_mean(best, y)?;
    for x in 1..TOY_DECISIONS {
        let m = toy_mean(Decision(x), y)?;
        if m < best_mean {
            best = Decision(x);
            best_mean = m;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct ToyOracle {
    context_box: ContextBox,
    noise_scale: f64,
}

impl Default for ToyOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl ToyOracle {
    pub fn new() -> Self {
        Self::with_noise_scale(1.0)
    }

    /// Multiplies every noise level by `scale`; `0.0` makes sampling exact.
    pub fn with_noise_scale(scale: f64) -> Self {
        ToyOracle {
            context_box: ContextBox::cube(1, TOY_LOWER, TOY_UPPER).expect("valid box"),
            noise_scale: scale,
        }
    }

    pub fn sample_at(&self, decision: Decision, y: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let mean = toy_mean(decision, y)?;
        let std = toy_std(decision, y)? * self.noise_scale;
        gaussian_draw(mean, std, rng)
    }
}

fn scalar(context: &Context) -> Result<f64> {
    match context.coords() {
        [y] => Ok(*y),
        c => Err(Error::Argument(format!(
            "toy contexts are 1-dimensional, got {}",
            c.len()
        ))),
    }
}

impl Oracle for ToyOracle {
    fn name(&self) -> &str {
        "toy"
    }

    fn n_decisions(&self) -> usize {
        TOY_DECISIONS
    }

    fn context_box(&self) -> &ContextBox {
        &self.context_box
    }

    fn sample(&self, decision: Decision, context: &Context, rng: &mut dyn RngCore) -> Result<f64> {
        self.sample_at(decision, scalar(context)?, rng)
    }

    fn true_mean(&self, decision: Decision, context: &Context) -> Option<f64> {
        toy_mean(decision, scalar(context).ok()?).ok()
    }

    fn true_best(&self, context: &Context, _rng: &mut dyn RngCore) -> Result<Decision> {
        toy_true_best(scalar(context)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_values() {
        for y in [0.0, 0.3, 1.7, 2.0] {
            assert_eq!(toy_mean(Decision(1), y).unwrap(), 0.0);
        }
        // 10 sin(e)
        assert!((toy_mean(Decision(0), 0.0).unwrap() - 4.107_812_905_029_088).abs() < 1e-12);
        // -(10 / 0.64) sin(e^0.8)
        assert!((toy_mean(Decision(2), 0.0).unwrap() - -12.393_804_382_375_66).abs() < 1e-12);
        assert!(toy_mean(Decision(0), 2.1).is_err());
        assert!(toy_mean(Decision(0), -0.1).is_err());
        assert!(toy_mean(Decision(3), 1.0).is_err());
    }

    #[test]
    fn std_values() {
        assert!((toy_std(Decision(0), 0.0).unwrap() - 0.6).abs() < 1e-15);
        let y = std::f64::consts::PI / 32.0;
        assert!((toy_std(Decision(0), y).unwrap() - 1.1).abs() < 1e-15);
        for i in 0..=2000 {
            let y = 2.0 * i as f64 / 2000.0;
            for x in 0..3 {
                assert!(toy_std(Decision(x), y).unwrap() >= 0.1 - 1e-15);
            }
        }
    }

    #[test]
    fn sampling_moments() {
        let oracle = ToyOracle::new();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| oracle.sample_at(Decision(0), 0.5, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let mu = toy_mean(Decision(0), 0.5).unwrap();
        let sd = toy_std(Decision(0), 0.5).unwrap();
        assert!((mean - mu).abs() < 3.0 * sd / (n as f64).sqrt());
        assert!((var.sqrt() / sd - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_noise_is_exact() {
        let oracle = ToyOracle::with_noise_scale(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for y in [0.0, 0.77, 2.0] {
            for x in 0..3 {
                assert_eq!(
                    oracle.sample_at(Decision(x), y, &mut rng).unwrap(),
                    toy_mean(Decision(x), y).unwrap()
                );
            }
        }
    }

    fn bisect_crossing(mut a: f64, mut b: f64) -> f64 {
        let g = |y: f64| toy_mean(Decision(0), y).unwrap() - toy_mean(Decision(2), y).unwrap();
        let ga = g(a);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if (g(m) > 0.0) == (ga > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn true_best_examples() {
        assert_eq!(toy_true_best(0.0).unwrap(), Decision(2));

        // f_1 - f_3 changes sign on a fine grid; the winner flips across each root
        let n = 4000;
        let grid: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
        let mut crossings = 0;
        for w in grid.windows(2) {
            let g = |y: f64| toy_mean(Decision(0), y).unwrap() - toy_mean(Decision(2), y).unwrap();
            if g(w[0]).signum() != g(w[1]).signum() {
                let root = bisect_crossing(w[0], w[1]);
                let (l, r) = (root - 1e-9, root + 1e-9);
                let f1l = toy_mean(Decision(0), l).unwrap();
                let f3l = toy_mean(Decision(2), l).unwrap();
                // where both beat the zero decision, the winner flips
                if f1l.min(f3l) < 0.0 && toy_true_best(l).unwrap() != Decision(1) {
                    assert_ne!(toy_true_best(l).unwrap(), toy_true_best(r).unwrap());
                    crossings += 1;
                }
            }
        }
        assert!(crossings >= 1);

        for &y in &grid {
            let f1 = toy_mean(Decision(0), y).unwrap();
            let f3 = toy_mean(Decision(2), y).unwrap();
            if f1 > 0.0 && f3 > 0.0 {
                assert_eq!(toy_true_best(y).unwrap(), Decision(1));
            }
        }
    }
}
