//! Planted test problems and the defectiveness oracle.
//!
//! A [`PlantedFamily`] is an antichain of node sets standing in for the
//! unknown family of minimal defective sets. A query set is defective iff it
//! contains some planted set; the [`Oracle`] adds Bernoulli false negatives
//! on top of that truth and charges every call to a [`TestLedger`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::binomial;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRole};

/// Index of a node in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A set of nodes in canonical (strictly ascending) form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct KSet(Vec<NodeId>);

impl KSet {
    /// Canonicalizes `members` (sort + dedup). Fails on an empty input.
    pub fn new(members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut v: Vec<NodeId> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(Self(v))
    }

    pub fn from_ids(ids: &[u32]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| NodeId(i)))
    }

    pub fn members(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &KSet) -> bool {
        // both sorted
        let mut it = other.0.iter();
        self.0.iter().all(|x| it.by_ref().any(|y| y == x))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.0.iter().map(|n| n.0).collect()
    }
}

impl<'de> Deserialize<'de> for KSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<NodeId>::deserialize(d)?;
        let n = raw.len();
        let set = KSet::new(raw).map_err(serde::de::Error::custom)?;
        if set.len() != n {
            return Err(serde::de::Error::custom("k-set members must be distinct"));
        }
        Ok(set)
    }
}

impl fmt::Display for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("}")
    }
}

/// Positive/negative test counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestLedger {
    pub positives: u64,
    pub negatives: u64,
}

impl TestLedger {
    pub fn new(positives: u64, negatives: u64) -> Self {
        Self { positives, negatives }
    }

    pub fn total(&self) -> u64 {
        self.positives + self.negatives
    }

    /// Time units with each negative costing 1 and each positive costing `rho`.
    pub fn cost(&self, rho: f64) -> f64 {
        self.positives as f64 * rho + self.negatives as f64
    }

    pub fn add(&mut self, other: &TestLedger) {
        self.positives += other.positives;
        self.negatives += other.negatives;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub false_negative_rate: f64,
    pub positive_cost: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            false_negative_rate: 0.0,
            positive_cost: 1.0,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.false_negative_rate) {
            return Err(Error::InvalidConfig(format!(
                "false-negative rate {} outside [0, 1)",
                self.false_negative_rate
            )));
        }
        if !self.positive_cost.is_finite() || self.positive_cost <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "positive cost {} must be positive",
                self.positive_cost
            )));
        }
        Ok(())
    }
}

/// Flat membership index: each planted set is filed under its smallest member
/// together with its second member, which rejects most candidates without
/// touching `flat`.
#[derive(Debug, Clone, Default)]
struct Index {
    by_min: Vec<Vec<(u32, u32, u32)>>,
    flat: Vec<u32>,
}

impl Index {
    fn new(universe: usize) -> Self {
        Self {
            by_min: vec![Vec::new(); universe],
            flat: Vec::new(),
        }
    }

    fn push(&mut self, set: &KSet) {
        let start = self.flat.len() as u32;
        self.flat.extend(set.members().iter().map(|n| n.0));
        let m = set.members();
        let second = m.get(1).unwrap_or(&m[0]).0;
        self.by_min[m[0].index()].push((second, start, set.len() as u32));
    }

    /// Calls `f` with the members of every indexed set contained in `mask`,
    /// scanning only sets whose smallest member is in `nodes`. Stops when `f`
    /// returns true.
    fn any_contained(&self, nodes: &[NodeId], mask: &Bitmask, mut f: impl FnMut(&[u32]) -> bool) -> bool {
        for &x in nodes {
            for &(second, start, len) in &self.by_min[x.index()] {
                if !mask.get(second as usize) {
                    continue;
                }
                let m = &self.flat[start as usize..(start + len) as usize];
                if m[2..].iter().all(|&y| mask.get(y as usize)) && f(m) {
                    return true;
                }
            }
        }
        false
    }
}

struct Bitmask(Vec<u64>);

impl Bitmask {
    fn from_nodes(universe: usize, nodes: &[NodeId]) -> Self {
        let mut words = vec![0u64; universe.div_ceil(64)];
        for n in nodes {
            words[n.index() / 64] |= 1 << (n.index() % 64);
        }
        Self(words)
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    universe_size: usize,
    planted: Vec<KSet>,
    seed: u64,
}

/// Ground-truth antichain of minimal defective sets over `[0, universe_size)`.
#[derive(Debug, Clone)]
pub struct PlantedFamily {
    universe_size: usize,
    planted: Vec<KSet>,
    seed: u64,
    index: Index,
}

impl PlantedFamily {
    /// Builds a family from explicit sets, validating range, size and the
    /// antichain property.
    pub fn from_sets(universe_size: usize, planted: Vec<KSet>, seed: u64) -> Result<Self> {
        let mut index = Index::new(universe_size);
        for set in &planted {
            if set.len() < 2 {
                return Err(Error::InvalidK(set.len()));
            }
            if let Some(&n) = set.members().iter().find(|n| n.index() >= universe_size) {
                return Err(Error::NodeOutOfRange {
                    node: n.0,
                    universe: universe_size,
                });
            }
            index.push(set);
        }
        let family = Self {
            universe_size,
            planted,
            seed,
            index,
        };
        if let Some((a, b)) = family.antichain_violation() {
            return Err(Error::InvalidConfig(format!(
                "planted sets are not an antichain: {} is contained in {}",
                family.planted[a], family.planted[b]
            )));
        }
        Ok(family)
    }

    pub fn empty(universe_size: usize) -> Self {
        Self {
            universe_size,
            planted: Vec::new(),
            seed: 0,
            index: Index::new(universe_size),
        }
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn planted(&self) -> &[KSet] {
        &self.planted
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts_by_k(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.planted {
            *counts.entry(s.len()).or_insert(0) += 1;
        }
        counts
    }

    pub fn is_planted(&self, set: &KSet) -> bool {
        let mask = Bitmask::from_nodes(self.universe_size, set.members());
        let first = [set.members()[0]];
        self.index
            .any_contained(&first, &mask, |m| m.len() == set.len())
    }

    /// Noise-free truth: does `s` (any order, duplicates allowed) contain a
    /// planted set?
    pub fn contains_defective(&self, s: &[NodeId]) -> bool {
        if self.planted.is_empty() || s.is_empty() {
            return false;
        }
        let mask = Bitmask::from_nodes(self.universe_size, s);
        self.index.any_contained(s, &mask, |_| true)
    }

    /// All planted sets contained in `s`.
    pub fn planted_within(&self, s: &[NodeId]) -> Vec<KSet> {
        let mask = Bitmask::from_nodes(self.universe_size, s);
        let mut out = Vec::new();
        let mut uniq: Vec<NodeId> = s.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        self.index.any_contained(&uniq, &mask, |m| {
            out.push(KSet(m.iter().map(|&i| NodeId(i)).collect()));
            false
        });
        out
    }

    /// First pair `(a, b)` of distinct planted indices with `planted[a] ⊆ planted[b]`.
    fn antichain_violation(&self) -> Option<(usize, usize)> {
        let mut seen = HashMap::with_capacity(self.planted.len());
        for (b, set) in self.planted.iter().enumerate() {
            if let Some(a) = seen.insert(set, b) {
                return Some((a, b));
            }
        }
        for (b, set) in self.planted.iter().enumerate() {
            let mut hit = None;
            let mask = Bitmask::from_nodes(self.universe_size, set.members());
            self.index.any_contained(set.members(), &mask, |m| {
                if m.len() < set.len() {
                    hit = Some(KSet(m.iter().map(|&i| NodeId(i)).collect()));
                    true
                } else {
                    false
                }
            });
            if let Some(sub) = hit {
                let a = self.planted.iter().position(|p| *p == sub).unwrap_or(b);
                return Some((a, b));
            }
        }
        None
    }

    pub fn to_json(&self) -> String {
        let file = FamilyFile {
            universe_size: self.universe_size,
            planted: self.planted.clone(),
            seed: self.seed,
        };
        serde_json::to_string(&file).expect("family serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("family file: {e}")))?;
        Self::from_sets(file.universe_size, file.planted, file.seed)
    }
}

/// Consecutive rejected candidates tolerated before giving up on a size tier.
const MAX_REJECTIONS: usize = 20_000;

/// Draws an antichain with exactly `counts_by_k[k]` planted sets of each size.
///
/// Sizes are placed in ascending order; a candidate is rejected when it
/// duplicates an existing set or contains a smaller planted set.
pub fn generate_family(
    universe_size: usize,
    counts_by_k: &BTreeMap<usize, usize>,
    seed: u64,
) -> Result<PlantedFamily> {
    for (&k, &count) in counts_by_k {
        if k < 2 && count > 0 {
            return Err(Error::InvalidK(k));
        }
        if count > 0 && binomial(universe_size as u64, k as u64) < (count as u64).into() {
            return Err(Error::InfeasibleCounts {
                k,
                wanted: count,
                placed: 0,
                universe: universe_size,
            });
        }
    }
    let mut rng = rng::stream(seed, StreamRole::Family);
    let mut index = Index::new(universe_size);
    let mut planted = Vec::new();
    for (&k, &count) in counts_by_k.iter().filter(|(_, &c)| c > 0) {
        let mut tier: HashSet<KSet> = HashSet::with_capacity(count);
        let mut rejections = 0;
        while tier.len() < count {
            let candidate = KSet::new(sample_universe(universe_size, k, &mut rng)?)?;
            let mask = Bitmask::from_nodes(universe_size, candidate.members());
            let nested = index.any_contained(candidate.members(), &mask, |_| true);
            if nested || tier.contains(&candidate) {
                rejections += 1;
                if rejections > MAX_REJECTIONS {
                    return Err(Error::InfeasibleCounts {
                        k,
                        wanted: count,
                        placed: tier.len(),
                        universe: universe_size,
                    });
                }
                continue;
            }
            rejections = 0;
            tier.insert(candidate.clone());
            planted.push(candidate);
        }
        // same-size sets never nest, so the tier joins the index only now
        for set in &planted[planted.len() - count..] {
            index.push(set);
        }
    }
    Ok(PlantedFamily {
        universe_size,
        planted,
        seed,
        index,
    })
}

/// `count` distinct elements of `pool`, uniformly chosen, in uniformly random order.
pub fn sample<R: Rng + ?Sized>(pool: &[NodeId], count: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    if count > pool.len() {
        return Err(Error::CountExceedsPool {
            count,
            pool: pool.len(),
        });
    }
    Ok(rand::seq::index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// [`sample`] from the full universe `[0, universe_size)`.
pub fn sample_universe<R: Rng + ?Sized>(universe_size: usize, count: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    if count > universe_size {
        return Err(Error::CountExceedsPool {
            count,
            pool: universe_size,
        });
    }
    Ok(rand::seq::index::sample(rng, universe_size, count)
        .into_iter()
        .map(|i| NodeId(i as u32))
        .collect())
}

/// Answers noisy defectiveness queries against a shared family.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'f> {
    family: &'f PlantedFamily,
    false_negative_rate: f64,
}

impl<'f> Oracle<'f> {
    pub fn new(family: &'f PlantedFamily, false_negative_rate: f64) -> Result<Self> {
        OracleConfig {
            false_negative_rate,
            ..Default::default()
        }
        .validate()?;
        Ok(Self {
            family,
            false_negative_rate,
        })
    }

    pub fn family(&self) -> &'f PlantedFamily {
        self.family
    }

    pub fn false_negative_rate(&self) -> f64 {
        self.false_negative_rate
    }

    /// One charged test. A truly defective set reads negative with
    /// probability `p_fn` and is then charged as a negative.
    pub fn is_defective<R: Rng + ?Sized>(&self, s: &[NodeId], rng: &mut R, ledger: &mut TestLedger) -> bool {
        let truth = self.family.contains_defective(s);
        let observed = truth && !(self.false_negative_rate > 0.0 && rng.gen_bool(self.false_negative_rate));
        if observed {
            ledger.positives += 1;
        } else {
            ledger.negatives += 1;
        }
        observed
    }
}
