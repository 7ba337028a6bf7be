//! Run outcomes shared by both samplers, and their JSON run-log records.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{KSet, NodeId, TestLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sight,
    Rc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Sight, Algorithm::Rc];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sight => "sight",
            Algorithm::Rc => "rc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Found(KSet),
    /// The initial sample tested non-defective.
    AbortInitial,
    /// SIGHT accumulated `k_max` elements without a defective set.
    AbortTooLarge,
    /// RC exhausted `t_max` attempts at the given (1-based) reduction step.
    AbortAtStep(usize),
    /// RC's bottom-up search found no defective subset of size ≤ `k_max`.
    AbortNoMinimal,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Found(_) => "found",
            Outcome::AbortInitial => "abort_initial",
            Outcome::AbortTooLarge => "abort_too_large",
            Outcome::AbortAtStep(_) => "abort_at_step",
            Outcome::AbortNoMinimal => "abort_no_minimal",
        }
    }

    pub fn found(&self) -> Option<&KSet> {
        match self {
            Outcome::Found(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_initial_abort(&self) -> bool {
        matches!(self, Outcome::AbortInitial)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub outcome: Outcome,
    pub ledger: TestLedger,
    /// Tests charged before the bottom-up minimality search started (the whole
    /// ledger when it never started).
    pub search_ledger: TestLedger,
    pub a0: usize,
    /// Fingerprint of the ordered initial sample.
    pub initial_digest: u64,
}

impl RunResult {
    pub fn found_k(&self) -> Option<usize> {
        self.outcome.found().map(KSet::len)
    }

    pub fn to_record(&self, seed: u64, pair: u64) -> RunRecord {
        RunRecord {
            algorithm: self.algorithm,
            outcome: self.outcome.label().to_string(),
            abort_step: match (self.algorithm, &self.outcome) {
                (Algorithm::Sight, _) => None,
                (Algorithm::Rc, Outcome::AbortAtStep(i)) => Some(Some(*i)),
                (Algorithm::Rc, _) => Some(None),
            },
            found_set: self.outcome.found().map(KSet::ids),
            k: self.found_k(),
            positives: self.ledger.positives,
            negatives: self.ledger.negatives,
            a0: self.a0,
            seed,
            pair,
        }
    }
}

/// One line of the newline-delimited run log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub outcome: String,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "double_option"
    )]
    pub abort_step: Option<Option<usize>>,
    pub found_set: Option<Vec<u32>>,
    pub k: Option<usize>,
    pub positives: u64,
    pub negatives: u64,
    pub a0: usize,
    pub seed: u64,
    pub pair: u64,
}

mod double_option {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Option<usize>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().and_then(|x| *x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<usize>>, D::Error> {
        Option::<usize>::deserialize(d).map(Some)
    }
}

impl RunRecord {
    pub fn ledger(&self) -> TestLedger {
        TestLedger::new(self.positives, self.negatives)
    }

    pub fn outcome(&self) -> Result<Outcome> {
        let bad = || Error::InvalidConfig(format!("malformed run record outcome {:?}", self.outcome));
        Ok(match self.outcome.as_str() {
            "found" => {
                let ids = self.found_set.as_ref().ok_or_else(bad)?;
                Outcome::Found(KSet::from_ids(ids)?)
            }
            "abort_initial" => Outcome::AbortInitial,
            "abort_too_large" => Outcome::AbortTooLarge,
            "abort_at_step" => Outcome::AbortAtStep(self.abort_step.flatten().ok_or_else(bad)?),
            "abort_no_minimal" => Outcome::AbortNoMinimal,
            _ => return Err(bad()),
        })
    }

    /// Rebuilds the run; search ledger and digest are not logged.
    pub fn to_result(&self) -> Result<RunResult> {
        Ok(RunResult {
            algorithm: self.algorithm,
            outcome: self.outcome()?,
            ledger: self.ledger(),
            search_ledger: self.ledger(),
            a0: self.a0,
            initial_digest: 0,
        })
    }
}

/// FNV-1a over the ordered node ids.
pub fn digest(nodes: &[NodeId]) -> u64 {
    nodes.iter().fold(0xcbf2_9ce4_8422_2325, |h, n| {
        n.0.to_le_bytes()
            .iter()
            .fold(h, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(algorithm: Algorithm, outcome: Outcome) -> RunResult {
        RunResult {
            algorithm,
            outcome,
            ledger: TestLedger::new(3, 5),
            search_ledger: TestLedger::new(3, 5),
            a0: 16,
            initial_digest: 0,
        }
    }

    #[test]
    fn sight_record_has_no_abort_step() {
        let r = result(Algorithm::Sight, Outcome::Found(KSet::from_ids(&[4, 2]).unwrap()));
        let json = serde_json::to_string(&r.to_record(7, 0)).unwrap();
        assert_eq!(
            json,
            r#"{"algorithm":"sight","outcome":"found","found_set":[2,4],"k":2,"positives":3,"negatives":5,"a0":16,"seed":7,"pair":0}"#
        );
    }

    #[test]
    fn rc_record_carries_abort_step() {
        let r = result(Algorithm::Rc, Outcome::AbortAtStep(3));
        let json = serde_json::to_string(&r.to_record(7, 1)).unwrap();
        assert_eq!(
            json,
            r#"{"algorithm":"rc","outcome":"abort_at_step","abort_step":3,"found_set":null,"k":null,"positives":3,"negatives":5,"a0":16,"seed":7,"pair":1}"#
        );
        let r = result(Algorithm::Rc, Outcome::AbortInitial);
        let json = serde_json::to_string(&r.to_record(7, 1)).unwrap();
        assert!(json.contains(r#""abort_step":null"#));
    }

    #[test]
    fn records_parse_back() {
        let outcomes = [
            Outcome::Found(KSet::from_ids(&[1, 9, 3]).unwrap()),
            Outcome::AbortInitial,
            Outcome::AbortTooLarge,
            Outcome::AbortAtStep(2),
            Outcome::AbortNoMinimal,
        ];
        for alg in Algorithm::ALL {
            for o in &outcomes {
                if alg == Algorithm::Sight && matches!(o, Outcome::AbortAtStep(_) | Outcome::AbortNoMinimal) {
                    continue;
                }
                let r = result(alg, o.clone());
                let line = serde_json::to_string(&r.to_record(1, 2)).unwrap();
                let back: RunRecord = serde_json::from_str(&line).unwrap();
                assert_eq!(back.to_result().unwrap().outcome, *o);
            }
        }
    }

    #[test]
    fn digest_depends_on_order() {
        let a = [NodeId(1), NodeId(2)];
        let b = [NodeId(2), NodeId(1)];
        assert_ne!(digest(&a), digest(&b));
        assert_eq!(digest(&a), digest(&a.clone()));
    }
}
