//! SIGHT: deterministic binary splitting over a randomly ordered sample.
//!
//! The sampler grows a list `D` one element at a time. Each element is the
//! leftmost position `m` of the current sample `S` such that `D ⧺ S[..m]` is
//! defective, found by [`bin_search`]. Once `D` itself tests defective, a
//! bottom-up pass over its untested subsets certifies minimality.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{sample_universe, KSet, NodeId, Oracle, TestLedger};
use crate::rng::{RunStreams, StreamRng};
use crate::run::{digest, Algorithm, Outcome, RunResult};
use crate::subsets::shuffled_combinations;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SightConfig {
    pub a0: usize,
    pub k_min: usize,
    pub k_max: usize,
}

impl SightConfig {
    pub fn new(a0: usize, k_min: usize, k_max: usize) -> Self {
        Self { a0, k_min, k_max }
    }

    /// Requires `2 ≤ k_min ≤ k_max ≤ a0 < N`.
    pub fn validate(&self, universe: usize) -> Result<()> {
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= k_min <= k_max (k_min={}, k_max={})",
                self.k_min, self.k_max
            )));
        }
        if self.a0 < self.k_max || self.a0 >= universe {
            return Err(Error::InvalidConfig(format!(
                "need k_max <= a0 < N (a0={}, k_max={}, N={universe})",
                self.a0, self.k_max
            )));
        }
        Ok(())
    }
}

/// Oracle access for one SIGHT run with a registry of every set already
/// tested. A set found in the registry is answered from it at no charge.
pub struct TestSession<'o, 'f> {
    oracle: &'o Oracle<'f>,
    noise: StreamRng,
    pub ledger: TestLedger,
    tested: HashMap<KSet, bool>,
}

impl<'o, 'f> TestSession<'o, 'f> {
    pub fn new(oracle: &'o Oracle<'f>, noise: StreamRng) -> Self {
        Self {
            oracle,
            noise,
            ledger: TestLedger::default(),
            tested: HashMap::new(),
        }
    }

    pub fn test(&mut self, list: &[NodeId]) -> bool {
        let key = KSet::new(list.iter().copied()).expect("tested sets are non-empty");
        if let Some(&answer) = self.tested.get(&key) {
            return answer;
        }
        let answer = self.oracle.is_defective(key.members(), &mut self.noise, &mut self.ledger);
        self.tested.insert(key, answer);
        answer
    }

    /// Records an answer obtained outside the session (the initial test).
    pub fn record(&mut self, list: &[NodeId], answer: bool) {
        if let Ok(key) = KSet::new(list.iter().copied()) {
            self.tested.insert(key, answer);
        }
    }

    pub fn lookup(&self, set: &KSet) -> Option<bool> {
        self.tested.get(set).copied()
    }

    pub fn tested_count(&self) -> usize {
        self.tested.len()
    }
}

/// Shortest prefix length `m` (1-based) such that `D ⧺ S[..m]` tests
/// defective, by halving the index range of `s`.
///
/// Uses at most `⌈log₂ |s|⌉` tests. Under false negatives the answer may be
/// off; the caller tolerates that.
pub fn bin_search(s: &[NodeId], d: &[NodeId], mut test: impl FnMut(&[NodeId]) -> bool) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut candidate = Vec::with_capacity(d.len() + s.len());
    let (mut l, mut r) = (1usize, s.len());
    while l < r {
        let i = (r - l).div_ceil(2);
        candidate.clear();
        candidate.extend_from_slice(d);
        candidate.extend_from_slice(&s[..r - i]);
        if test(&candidate) {
            r -= i;
        } else {
            l = r - i + 1;
        }
    }
    Ok(r)
}

/// Minimality pass over a defective `d`: tests its subsets of size
/// `k_min..|d|` in ascending size, random order within a size, skipping any
/// already in the registry. Returns the first defective subset, else `d`.
pub fn bottom_up_sight<R: Rng + ?Sized>(
    d: &[NodeId],
    k_min: usize,
    k_max: usize,
    session: &mut TestSession<'_, '_>,
    rng: &mut R,
) -> KSet {
    let top = d.len().min(k_max + 1);
    for k in k_min..top {
        for subset in shuffled_combinations(d, k, rng) {
            let key = KSet::new(subset).expect("k_min >= 2");
            let hit = match session.lookup(&key) {
                Some(answer) => answer,
                None => session.test(key.members()),
            };
            if hit {
                return key;
            }
        }
    }
    KSet::new(d.iter().copied()).expect("d is non-empty")
}

/// One SIGHT run on a fresh sample of size `a0` drawn from `streams.init`.
pub fn run_sight(
    universe: usize,
    config: &SightConfig,
    oracle: &Oracle<'_>,
    streams: &mut RunStreams,
) -> Result<RunResult> {
    config.validate(universe)?;
    let s = sample_universe(universe, config.a0, &mut streams.init)?;
    Ok(run_sight_on(s, config, oracle, streams))
}

/// One SIGHT run on the given ordered initial sample. The initial test draws
/// its noise from `streams.init`; everything after from `streams.noise`.
pub fn run_sight_on(s: Vec<NodeId>, config: &SightConfig, oracle: &Oracle<'_>, streams: &mut RunStreams) -> RunResult {
    let initial_digest = digest(&s);
    let mut initial_ledger = TestLedger::default();
    let initial = oracle.is_defective(&s, &mut streams.init, &mut initial_ledger);
    let mut session = TestSession::new(oracle, streams.noise.clone());
    session.ledger = initial_ledger;
    session.record(&s, initial);

    let finish = |outcome: Outcome, ledger: TestLedger, search_ledger: TestLedger| RunResult {
        algorithm: Algorithm::Sight,
        outcome,
        ledger,
        search_ledger,
        a0: s.len(),
        initial_digest,
    };
    if !initial {
        return finish(Outcome::AbortInitial, session.ledger, session.ledger);
    }

    let mut s_cur = s.clone();
    let mut d: Vec<NodeId> = Vec::with_capacity(config.k_max);
    while d.len() < config.k_max {
        // only reachable under false negatives: nothing left to search
        if s_cur.is_empty() {
            break;
        }
        let m = bin_search(&s_cur, &d, |c| session.test(c)).expect("non-empty");
        d.push(s_cur[m - 1]);
        if d.len() >= config.k_min && session.test(&d) {
            let search_ledger = session.ledger;
            let found = bottom_up_sight(&d, config.k_min, config.k_max, &mut session, &mut streams.choice);
            return finish(Outcome::Found(found), session.ledger, search_ledger);
        }
        s_cur.truncate(m - 1);
    }
    finish(Outcome::AbortTooLarge, session.ledger, session.ledger)
}
