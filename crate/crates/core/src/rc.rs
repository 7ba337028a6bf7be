//! Random Chemistry: stochastic subset reduction along a size schedule,
//! followed by an exhaustive bottom-up search of the final subset.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{sample, sample_universe, KSet, NodeId, Oracle, TestLedger};
use crate::rng::RunStreams;
use crate::run::{digest, Algorithm, Outcome, RunResult};
use crate::subsets::shuffled_combinations;

/// Sizes above this are halved; at or below it they shrink by 1.5.
pub const HALVING_THRESHOLD: usize = 20;

pub const DEFAULT_T_MAX: usize = 20;

/// Strictly decreasing subset sizes `[a0, a1, …, a_final]`, all above `k_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSchedule(Vec<usize>);

impl ReductionSchedule {
    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn a0(&self) -> usize {
        self.0[0]
    }

    pub fn a_final(&self) -> usize {
        *self.0.last().expect("schedule is non-empty")
    }
}

/// `a_i = ⌈a_{i−1}/c⌉` with `c = 2` while `a_{i−1} > 20` and `c = 1.5` after,
/// stopping before the first size `≤ k_max`.
pub fn build_schedule(a0: usize, k_max: usize) -> Result<ReductionSchedule> {
    if a0 <= k_max {
        return Err(Error::InvalidA0 { a0, k_max });
    }
    let mut sizes = vec![a0];
    let mut cur = a0;
    loop {
        let next = if cur > HALVING_THRESHOLD {
            cur.div_ceil(2)
        } else {
            // ⌈2·cur/3⌉
            (2 * cur).div_ceil(3)
        };
        if next <= k_max || next >= cur {
            return Ok(ReductionSchedule(sizes));
        }
        sizes.push(next);
        cur = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcConfig {
    pub a0: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub t_max: usize,
}

impl RcConfig {
    pub fn new(a0: usize, k_min: usize, k_max: usize) -> Self {
        Self {
            a0,
            k_min,
            k_max,
            t_max: DEFAULT_T_MAX,
        }
    }

    pub fn with_t_max(mut self, t_max: usize) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self, universe: usize) -> Result<()> {
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= k_min <= k_max (k_min={}, k_max={})",
                self.k_min, self.k_max
            )));
        }
        if self.a0 <= self.k_max || self.a0 >= universe {
            return Err(Error::InvalidConfig(format!(
                "need k_max < a0 < N (a0={}, k_max={}, N={universe})",
                self.a0, self.k_max
            )));
        }
        if self.t_max < 1 {
            return Err(Error::InvalidConfig("t_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<ReductionSchedule> {
        build_schedule(self.a0, self.k_max)
    }
}

/// Tests every subset of `s` of size `k_min..=min(k_max, |s|)`, ascending in
/// size and in random order within a size; returns the first defective one.
pub fn bottom_up_rc<R: Rng + ?Sized, N: Rng + ?Sized>(
    s: &[NodeId],
    k_min: usize,
    k_max: usize,
    oracle: &Oracle<'_>,
    noise: &mut N,
    choice: &mut R,
    ledger: &mut TestLedger,
) -> Outcome {
    for k in k_min..=k_max.min(s.len()) {
        for subset in shuffled_combinations(s, k, choice) {
            if oracle.is_defective(&subset, noise, ledger) {
                return Outcome::Found(KSet::new(subset).expect("k_min >= 2"));
            }
        }
    }
    Outcome::AbortNoMinimal
}

/// One RC run on a fresh sample of size `a0` drawn from `streams.init`.
pub fn run_rc(universe: usize, config: &RcConfig, oracle: &Oracle<'_>, streams: &mut RunStreams) -> Result<RunResult> {
    config.validate(universe)?;
    let schedule = config.schedule()?;
    let s = sample_universe(universe, config.a0, &mut streams.init)?;
    Ok(run_rc_on(s, &schedule, config, oracle, streams))
}

/// One RC run on the given initial sample; `schedule[0]` must equal `|s|`.
pub fn run_rc_on(
    s: Vec<NodeId>,
    schedule: &ReductionSchedule,
    config: &RcConfig,
    oracle: &Oracle<'_>,
    streams: &mut RunStreams,
) -> RunResult {
    debug_assert_eq!(schedule.a0(), s.len());
    let initial_digest = digest(&s);
    let mut ledger = TestLedger::default();
    let finish = |outcome: Outcome, ledger: TestLedger, search_ledger: TestLedger| RunResult {
        algorithm: Algorithm::Rc,
        outcome,
        ledger,
        search_ledger,
        a0: schedule.a0(),
        initial_digest,
    };
    if !oracle.is_defective(&s, &mut streams.init, &mut ledger) {
        return finish(Outcome::AbortInitial, ledger, ledger);
    }

    let mut current = s;
    for (step, &size) in schedule.sizes().iter().enumerate().skip(1) {
        let mut accepted = None;
        for _ in 0..config.t_max {
            let candidate = sample(&current, size, &mut streams.choice).expect("schedule decreases");
            if oracle.is_defective(&candidate, &mut streams.noise, &mut ledger) {
                accepted = Some(candidate);
                break;
            }
        }
        match accepted {
            Some(next) => current = next,
            None => return finish(Outcome::AbortAtStep(step), ledger, ledger),
        }
    }

    let search_ledger = ledger;
    let outcome = bottom_up_rc(
        &current,
        config.k_min,
        config.k_max,
        oracle,
        &mut streams.noise,
        &mut streams.choice,
        &mut ledger,
    );
    finish(outcome, ledger, search_ledger)
}
