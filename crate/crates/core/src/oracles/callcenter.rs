//! Two-line call-center staffing simulator.
//!
//! A fixed pool of staff is split between the appointment (AP) and general
//! enquiry (GE) lines for a whole shift. Each line is a multi-server FCFS
//! queue fed by a Poisson process whose rate is constant within each slot;
//! callers abandon when service has not started before their
//! willingness-to-wait (WTW) expires. The performance of a split is the
//! shift's overall abandonment rate.
//!
//! Contexts are arrival-rate profiles of length `2 * n_slots`, slot-major:
//! `[slot0_ap, slot0_ge, slot1_ap, slot1_ge, ...]`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::Oracle;
use crate::domain::{argmin_tiebreak, Context, ContextBox, Decision};
use crate::error::{Error, Result};

pub const DEFAULT_TRUTH_REPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Ap = 0,
    Ge = 1,
}

impl Line {
    pub const BOTH: [Line; 2] = [Line::Ap, Line::Ge];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerLine<T> {
    pub ap: T,
    pub ge: T,
}

impl<T> PerLine<T> {
    pub fn get(&self, line: Line) -> &T {
        match line {
            Line::Ap => &self.ap,
            Line::Ge => &self.ge,
        }
    }
}

/// Willingness-to-wait distribution, in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WtwSpec {
    /// `ln(WTW) ~ N(mu, sigma^2)`; the median is `exp(mu)`.
    Lognormal { mu: f64, sigma: f64 },
    /// Piecewise-linear CDF through `(minutes, probability)` knots, sampled by
    /// inverse transform. Knots are nondecreasing in both coordinates, the
    /// first probability is 0 and the last is 1.
    PiecewiseLinear { points: Vec<(f64, f64)> },
    /// Callers never abandon.
    Infinite,
}

impl WtwSpec {
    pub fn lognormal_median(median: f64, sigma: f64) -> Self {
        WtwSpec::Lognormal {
            mu: median.ln(),
            sigma,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WtwSpec::Lognormal { mu, sigma } => {
                if !mu.is_finite() || !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::Config(format!(
                        "invalid lognormal WTW (mu={mu}, sigma={sigma})"
                    )));
                }
            }
            WtwSpec::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(Error::Config("piecewise WTW CDF needs at least 2 knots".into()));
                }
                if points[0].1 != 0.0 || points[points.len() - 1].1 != 1.0 {
                    return Err(Error::Config(
                        "piecewise WTW CDF must start at probability 0 and end at 1".into(),
                    ));
                }
                if points[0].0 < 0.0 || points.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
                    return Err(Error::Config("piecewise WTW knots must be finite, times >= 0".into()));
                }
                if points.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
                    return Err(Error::Config("piecewise WTW knots must be nondecreasing".into()));
                }
            }
            WtwSpec::Infinite => {}
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WtwSpec::Lognormal { mu, sigma } => {
                if *sigma == 0.0 {
                    mu.exp()
                } else {
                    LogNormal::new(*mu, *sigma).expect("validated").sample(rng)
                }
            }
            WtwSpec::PiecewiseLinear { points } => {
                let u: f64 = rng.random();
                inverse_cdf(points, u)
            }
            WtwSpec::Infinite => f64::INFINITY,
        }
    }
}

fn inverse_cdf(points: &[(f64, f64)], u: f64) -> f64 {
    // first knot whose probability reaches u
    let k = points.partition_point(|(_, p)| *p < u);
    if k == 0 {
        return points[0].0;
    }
    let (t0, p0) = points[k - 1];
    let (t1, p1) = points[k.min(points.len() - 1)];
    if p1 <= p0 {
        return t1;
    }
    t0 + (t1 - t0) * (u - p0) / (p1 - p0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSlotConfig {
    /// Lower bound of this coordinate of the context box (calls/minute).
    pub rate_min: f64,
    /// Upper bound of this coordinate of the context box (calls/minute).
    pub rate_max: f64,
    pub wtw: WtwSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotConfig {
    pub ap: LineSlotConfig,
    pub ge: LineSlotConfig,
}

impl SlotConfig {
    fn line(&self, line: Line) -> &LineSlotConfig {
        match line {
            Line::Ap => &self.ap,
            Line::Ge => &self.ge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallCenterConfig {
    pub total_staff: usize,
    pub min_per_line: usize,
    pub slot_minutes: f64,
    /// Mean of the exponential service time, per line.
    pub service_mean_minutes: PerLine<f64>,
    pub slots: Vec<SlotConfig>,
    /// Replications per split when estimating the best split for evaluation.
    #[serde(default = "default_truth_reps")]
    pub truth_reps: usize,
}

fn default_truth_reps() -> usize {
    DEFAULT_TRUTH_REPS
}

impl Default for CallCenterConfig {
    /// 60 staff, at least 5 per line, eight 30-minute slots, rates in
    /// [0.2, 4.0] calls/minute, 3-minute mean service, lognormal WTW with a
    /// 2-minute median.
    fn default() -> Self {
        let cell = LineSlotConfig {
            rate_min: 0.2,
            rate_max: 4.0,
            wtw: WtwSpec::lognormal_median(2.0, 1.0),
        };
        CallCenterConfig {
            total_staff: 60,
            min_per_line: 5,
            slot_minutes: 30.0,
            service_mean_minutes: PerLine { ap: 3.0, ge: 3.0 },
            slots: vec![
                SlotConfig {
                    ap: cell.clone(),
                    ge: cell
                };
                8
            ],
            truth_reps: DEFAULT_TRUTH_REPS,
        }
    }
}

impl CallCenterConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: CallCenterConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("call-center config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: CallCenterConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_per_line == 0 || self.total_staff < 2 * self.min_per_line {
            return Err(Error::Config(format!(
                "cannot give {} staff at least {} per line",
                self.total_staff, self.min_per_line
            )));
        }
        if self.n_decisions() < 2 {
            return Err(Error::Config("staffing admits fewer than 2 splits".into()));
        }
        if self.slots.is_empty() {
            return Err(Error::Config("at least one slot is required".into()));
        }
        if !(self.slot_minutes > 0.0 && self.slot_minutes.is_finite()) {
            return Err(Error::Config(format!("slot_minutes must be positive, got {}", self.slot_minutes)));
        }
        for line in Line::BOTH {
            let m = *self.service_mean_minutes.get(line);
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("service mean must be positive, got {m}")));
            }
        }
        if self.truth_reps == 0 {
            return Err(Error::Config("truth_reps must be positive".into()));
        }
        for (s, slot) in self.slots.iter().enumerate() {
            for line in Line::BOTH {
                let c = slot.line(line);
                if !(c.rate_min >= 0.0 && c.rate_min < c.rate_max && c.rate_max.is_finite()) {
                    return Err(Error::Config(format!(
                        "slot {s} {line:?}: rate bounds [{}, {}] invalid",
                        c.rate_min, c.rate_max
                    )));
                }
                c.wtw.validate()?;
            }
        }
        Ok(())
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn context_dim(&self) -> usize {
        2 * self.n_slots()
    }

    /// Number of admissible splits.
    pub fn n_decisions(&self) -> usize {
        self.total_staff.saturating_sub(2 * self.min_per_line) + 1
    }

    /// `(n_ap, n_ge)` staffing for split index `split`.
    pub fn staffing(&self, split: Decision) -> Result<PerLine<usize>> {
        if split.0 >= self.n_decisions() {
            return Err(Error::Argument(format!(
                "split {} out of range for {} splits",
                split.0,
                self.n_decisions()
            )));
        }
        Ok(PerLine {
            ap: self.min_per_line + split.0,
            ge: self.total_staff - self.min_per_line - split.0,
        })
    }

    pub fn context_box(&self) -> Result<ContextBox> {
        let mut lo = Vec::with_capacity(self.context_dim());
        let mut hi = Vec::with_capacity(self.context_dim());
        for slot in &self.slots {
            for line in Line::BOTH {
                lo.push(slot.line(line).rate_min);
                hi.push(slot.line(line).rate_max);
            }
        }
        ContextBox::new(lo, hi)
    }

    pub fn shift_minutes(&self) -> f64 {
        self.slot_minutes * self.n_slots() as f64
    }
}

/// A caller's attributes, all drawn at generation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caller {
    pub arrival: f64,
    pub patience: f64,
    pub service: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineOutcome {
    pub arrivals: usize,
    pub abandoned: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShiftOutcome {
    pub ap: LineOutcome,
    pub ge: LineOutcome,
}

impl ShiftOutcome {
    pub fn abandonment_rate(&self) -> f64 {
        let arrivals = self.ap.arrivals + self.ge.arrivals;
        if arrivals == 0 {
            0.0
        } else {
            (self.ap.abandoned + self.ge.abandoned) as f64 / arrivals as f64
        }
    }
}

/// Callers of one line over the shift. Within each slot, arrivals follow a
/// homogeneous Poisson process; for each caller the gap, WTW, and service
/// time are drawn in that order.
pub fn generate_callers<R: Rng + ?Sized>(
    config: &CallCenterConfig,
    profile: &[f64],
    line: Line,
    rng: &mut R,
) -> Result<Vec<Caller>> {
    let service = Exp::new(1.0 / config.service_mean_minutes.get(line))
        .map_err(|e| Error::Config(format!("service distribution: {e}")))?;
    let mut callers = Vec::new();
    for (s, slot) in config.slots.iter().enumerate() {
        let rate = profile[2 * s + line as usize];
        if rate == 0.0 {
            continue;
        }
        let gap = Exp::new(rate).map_err(|e| Error::Value(format!("arrival rate {rate}: {e}")))?;
        let start = s as f64 * config.slot_minutes;
        let end = start + config.slot_minutes;
        let wtw = &slot.line(line).wtw;
        let mut t = start;
        loop {
            t += gap.sample(rng);
            if t >= end {
                break;
            }
            let patience = wtw.sample(rng);
            callers.push(Caller {
                arrival: t,
                patience,
                service: service.sample(rng),
            });
        }
    }
    Ok(callers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    // At equal times a freed server starts the next caller before any
    // deadline at that instant is processed.
    Departure = 0,
    Deadline = 1,
    Arrival = 2,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    seq: u64,
    caller: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CallerState {
    Pending,
    Waiting,
    InService,
    Abandoned,
}

/// Event-driven FCFS multi-server queue with abandonment. Runs until every
/// caller is served or has abandoned.
pub fn run_line(callers: &[Caller], servers: usize) -> LineOutcome {
    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::with_capacity(2 * callers.len());
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Reverse<Event>>, time, kind, caller| {
        heap.push(Reverse(Event {
            time,
            kind,
            seq,
            caller,
        }));
        seq += 1;
    };
    for (i, c) in callers.iter().enumerate() {
        push(&mut heap, c.arrival, EventKind::Arrival, i);
    }

    let mut state = vec![CallerState::Pending; callers.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut free = servers;
    let mut abandoned = 0;

    while let Some(Reverse(ev)) = heap.pop() {
        match ev.kind {
            EventKind::Arrival => {
                let c = callers[ev.caller];
                if free > 0 {
                    free -= 1;
                    state[ev.caller] = CallerState::InService;
                    push(&mut heap, ev.time + c.service, EventKind::Departure, ev.caller);
                } else {
                    state[ev.caller] = CallerState::Waiting;
                    queue.push_back(ev.caller);
                    if c.patience.is_finite() {
                        push(&mut heap, ev.time + c.patience, EventKind::Deadline, ev.caller);
                    }
                }
            }
            EventKind::Departure => {
                free += 1;
                while let Some(next) = queue.pop_front() {
                    if state[next] == CallerState::Waiting {
                        free -= 1;
                        state[next] = CallerState::InService;
                        push(&mut heap, ev.time + callers[next].service, EventKind::Departure, next);
                        break;
                    }
                }
            }
            EventKind::Deadline => {
                if state[ev.caller] == CallerState::Waiting {
                    // removed lazily from the queue
                    state[ev.caller] = CallerState::Abandoned;
                    abandoned += 1;
                }
            }
        }
    }

    LineOutcome {
        arrivals: callers.len(),
        abandoned,
    }
}

fn check_profile(config: &CallCenterConfig, profile: &Context) -> Result<()> {
    if profile.dim() != config.context_dim() {
        return Err(Error::Argument(format!(
            "arrival profile has {} coordinates, expected {}",
            profile.dim(),
            config.context_dim()
        )));
    }
    if let Some(r) = profile.coords().iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::Argument(format!("arrival rate {r} must be finite and >= 0")));
    }
    Ok(())
}

/// Full shift under one split.
pub fn simulate_shift<R: Rng + ?Sized>(
    split: Decision,
    profile: &Context,
    config: &CallCenterConfig,
    rng: &mut R,
) -> Result<ShiftOutcome> {
    check_profile(config, profile)?;
    let staff = config.staffing(split)?;
    let ap = generate_callers(config, profile.coords(), Line::Ap, rng)?;
    let ge = generate_callers(config, profile.coords(), Line::Ge, rng)?;
    Ok(ShiftOutcome {
        ap: run_line(&ap, staff.ap),
        ge: run_line(&ge, staff.ge),
    })
}

/// Overall abandonment rate of one simulated shift.
pub fn callcenter_simulate<R: Rng + ?Sized>(
    split: Decision,
    profile: &Context,
    config: &CallCenterConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(simulate_shift(split, profile, config, rng)?.abandonment_rate())
}

/// Best split by averaging `reps` runs per split.
pub fn callcenter_estimate_best<R: Rng + ?Sized>(
    profile: &Context,
    config: &CallCenterConfig,
    reps: usize,
    rng: &mut R,
) -> Result<Decision> {
    if reps == 0 {
        return Err(Error::Argument("reps must be positive".into()));
    }
    let means = split_means(profile, config, reps, rng)?;
    Ok(Decision(argmin_tiebreak(&means, rng)?))
}

/// Average abandonment rate of every split over `reps` runs each.
pub fn split_means<R: Rng + ?Sized>(
    profile: &Context,
    config: &CallCenterConfig,
    reps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..config.n_decisions())
        .map(|s| {
            let mut total = 0.0;
            for _ in 0..reps {
                total += callcenter_simulate(Decision(s), profile, config, rng)?;
            }
            Ok(total / reps as f64)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CallCenterOracle {
    config: CallCenterConfig,
    context_box: ContextBox,
}

impl CallCenterOracle {
    pub fn new(config: CallCenterConfig) -> Result<Self> {
        config.validate()?;
        let context_box = config.context_box()?;
        Ok(CallCenterOracle {
            config,
            context_box,
        })
    }

    pub fn config(&self) -> &CallCenterConfig {
        &self.config
    }
}

impl Oracle for CallCenterOracle {
    fn name(&self) -> &str {
        "callcenter"
    }

    fn n_decisions(&self) -> usize {
        self.config.n_decisions()
    }

    fn context_box(&self) -> &ContextBox {
        &self.context_box
    }

    fn sample(&self, decision: Decision, context: &Context, rng: &mut dyn RngCore) -> Result<f64> {
        callcenter_simulate(decision, context, &self.config, rng)
    }

    fn true_best(&self, context: &Context, rng: &mut dyn RngCore) -> Result<Decision> {
        callcenter_estimate_best(context, &self.config, self.config.truth_reps, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// FCFS with abandonment via the waiting-time recursion: each caller, in
    /// arrival order, takes the earliest-free server if it frees no later
    /// than the caller's deadline.
    fn recursion_oracle(callers: &[Caller], servers: usize) -> LineOutcome {
        let mut free_at: BinaryHeap<Reverse<OrdF64>> = (0..servers).map(|_| Reverse(OrdF64(0.0))).collect();
        let mut abandoned = 0;
        for c in callers {
            let Reverse(OrdF64(earliest)) = *free_at.peek().unwrap();
            let start = earliest.max(c.arrival);
            if start <= c.arrival + c.patience {
                free_at.pop();
                free_at.push(Reverse(OrdF64(start + c.service)));
            } else {
                abandoned += 1;
            }
        }
        LineOutcome {
            arrivals: callers.len(),
            abandoned,
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    struct OrdF64(f64);
    impl Eq for OrdF64 {}
    impl PartialOrd for OrdF64 {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for OrdF64 {
        fn cmp(&self, o: &Self) -> Ordering {
            self.0.total_cmp(&o.0)
        }
    }

    fn profile(rate: f64, config: &CallCenterConfig) -> Context {
        Context::new(vec![rate; config.context_dim()])
    }

    #[test]
    fn default_config_shape() {
        let c = CallCenterConfig::default();
        c.validate().unwrap();
        assert_eq!(c.n_decisions(), 51);
        assert_eq!(c.context_dim(), 16);
        assert_eq!(c.staffing(Decision(0)).unwrap(), PerLine { ap: 5, ge: 55 });
        assert_eq!(c.staffing(Decision(50)).unwrap(), PerLine { ap: 55, ge: 5 });
        assert!(c.staffing(Decision(51)).is_err());
        assert_eq!(c.shift_minutes(), 240.0);
    }

    #[test]
    fn event_engine_matches_recursion() {
        let config = CallCenterConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200 {
            let rate = 0.2 + 3.8 * rng.random::<f64>();
            let callers =
                generate_callers(&config, profile(rate, &config).coords(), Line::Ap, &mut rng).unwrap();
            let servers = 1 + trial % 15;
            assert_eq!(run_line(&callers, servers), recursion_oracle(&callers, servers));
        }
    }

    #[test]
    fn departure_precedes_deadline_at_equal_times() {
        let callers = [
            Caller { arrival: 0.0, patience: 1.0, service: 2.0 },
            Caller { arrival: 1.0, patience: 1.0, service: 1.0 },
        ];
        // server frees at 2.0, exactly the second caller's deadline
        assert_eq!(run_line(&callers, 1).abandoned, 0);
        let late = [
            Caller { arrival: 0.0, patience: 1.0, service: 2.5 },
            Caller { arrival: 1.0, patience: 1.0, service: 1.0 },
        ];
        assert_eq!(run_line(&late, 1).abandoned, 1);
    }

    #[test]
    fn zero_arrivals() {
        let config = CallCenterConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = profile(0.0, &config);
        for s in [0, 25, 50] {
            assert_eq!(callcenter_simulate(Decision(s), &p, &config, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn infinite_patience() {
        let mut config = CallCenterConfig::default();
        for slot in &mut config.slots {
            slot.ap.wtw = WtwSpec::Infinite;
            slot.ge.wtw = WtwSpec::Infinite;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = profile(4.0, &config);
        assert_eq!(callcenter_simulate(Decision(0), &p, &config, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn single_arrival_is_served() {
        let callers = [Caller { arrival: 10.0, patience: 0.0, service: 5.0 }];
        assert_eq!(run_line(&callers, 1), LineOutcome { arrivals: 1, abandoned: 0 });
    }

    #[test]
    fn profile_dimension_checked() {
        let config = CallCenterConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bad = Context::new(vec![1.0; 15]);
        assert!(matches!(
            callcenter_simulate(Decision(0), &bad, &config, &mut rng),
            Err(Error::Argument(_))
        ));
        let neg = Context::new(vec![-1.0; 16]);
        assert!(callcenter_simulate(Decision(0), &neg, &config, &mut rng).is_err());
    }

    #[test]
    fn rate_in_unit_interval_and_reproducible() {
        let config = CallCenterConfig::default();
        let p = profile(3.0, &config);
        for s in [0, 10, 40] {
            let a = callcenter_simulate(Decision(s), &p, &config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            let b = callcenter_simulate(Decision(s), &p, &config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn piecewise_inverse_cdf() {
        let pts = vec![(0.0, 0.0), (1.0, 0.5), (3.0, 1.0)];
        assert_eq!(inverse_cdf(&pts, 0.0), 0.0);
        assert_eq!(inverse_cdf(&pts, 0.25), 0.5);
        assert_eq!(inverse_cdf(&pts, 0.75), 2.0);
        assert_eq!(inverse_cdf(&pts, 1.0), 3.0);
        let spec = WtwSpec::PiecewiseLinear { points: pts };
        spec.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let below = (0..n).filter(|_| spec.sample(&mut rng) < 1.0).count();
        assert!((below as f64 / n as f64 - 0.5).abs() < 0.02);
        assert!(WtwSpec::PiecewiseLinear { points: vec![(0.0, 0.1), (1.0, 1.0)] }
            .validate()
            .is_err());
        assert!(WtwSpec::PiecewiseLinear { points: vec![(0.0, 0.0), (1.0, 0.6), (0.5, 1.0)] }
            .validate()
            .is_err());
    }

    #[test]
    fn config_json_roundtrip_and_validation() {
        let c = CallCenterConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(CallCenterConfig::from_json_str(&text).unwrap(), c);

        let mut bad = c.clone();
        bad.min_per_line = 31;
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.slots[3].ge.rate_min = 5.0;
        assert!(bad.validate().is_err());
        assert!(CallCenterConfig::from_json_str("{\"total_staff\": 3}").is_err());
    }

    #[test]
    fn split_means_cover_every_split() {
        let config = CallCenterConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = profile(1.0, &config);
        let m = split_means(&p, &config, 10, &mut rng).unwrap();
        assert_eq!(m.len(), 51);
        assert!(m.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
