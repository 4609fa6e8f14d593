use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::id::NodeId;

use super::oracle::ContactTruth;

/// Decrypted store contents: owner -> (peer -> last_seen).
pub type ContactMap = BTreeMap<NodeId, BTreeMap<NodeId, u64>>;

pub type Pair = (NodeId, NodeId);

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Undirected pairs `(a, b)` with `a < b`.
    pub detected: BTreeSet<Pair>,
    pub missed: BTreeSet<Pair>,
    /// Directed `(owner, peer)` entries with no supporting truth.
    pub spurious: BTreeSet<Pair>,
}

impl DetectionReport {
    pub fn is_clean(&self) -> bool {
        self.missed.is_empty() && self.spurious.is_empty()
    }
}

/// Scores stores against a single truth.
///
/// A pair with at least one interval of length `>= min_overlap` must be
/// present in both endpoints' stores to count as detected, otherwise it is
/// missed. Shorter intervals are neither required nor penalised. Any stored
/// entry whose pair never appears in the truth is spurious.
pub fn compare(contacts: &ContactMap, truth: &ContactTruth, min_overlap: u64) -> DetectionReport {
    compare_banded(contacts, truth, truth, min_overlap)
}

/// Like [`compare`], but requires detections from `required` and checks
/// spurious entries against a looser `permitted` truth, so pairs sitting on
/// the radius boundary count neither way.
pub fn compare_banded(
    contacts: &ContactMap,
    required: &ContactTruth,
    permitted: &ContactTruth,
    min_overlap: u64,
) -> DetectionReport {
    let holds = |owner: NodeId, peer: NodeId| {
        contacts
            .get(&owner)
            .is_some_and(|peers| peers.contains_key(&peer))
    };
    let mut report = DetectionReport::default();
    let must: BTreeSet<Pair> = required
        .intervals
        .iter()
        .filter(|iv| iv.span() >= min_overlap)
        .map(|iv| iv.pair())
        .collect();
    for (a, b) in must {
        if holds(a, b) && holds(b, a) {
            report.detected.insert((a, b));
        } else {
            report.missed.insert((a, b));
        }
    }
    let allowed = permitted.pairs();
    for (&owner, peers) in contacts {
        for &peer in peers.keys() {
            let key = if owner < peer {
                (owner, peer)
            } else {
                (peer, owner)
            };
            if !allowed.contains(&key) {
                report.spurious.insert((owner, peer));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::oracle::ContactInterval;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    fn truth(ivs: &[(u64, u64, u64, u64)]) -> ContactTruth {
        ContactTruth {
            intervals: ivs
                .iter()
                .map(|&(a, b, start, end)| ContactInterval {
                    a: id(a),
                    b: id(b),
                    start,
                    end,
                })
                .collect(),
        }
    }

    fn contacts(entries: &[(u64, u64)]) -> ContactMap {
        let mut m = ContactMap::new();
        for &(o, p) in entries {
            m.entry(id(o)).or_default().insert(id(p), 0);
        }
        m
    }

    #[test]
    fn empty_result_misses_everything() {
        let t = truth(&[(1, 2, 0, 600), (2, 3, 0, 600)]);
        let r = compare(&ContactMap::new(), &t, 120);
        assert_eq!(r.missed.len(), 2);
        assert!(r.detected.is_empty());
    }

    #[test]
    fn short_interval_not_required() {
        let t = truth(&[(1, 2, 0, 30)]);
        let r = compare(&ContactMap::new(), &t, 120);
        assert!(r.is_clean());
        assert!(r.detected.is_empty());
    }

    #[test]
    fn one_sided_store_is_a_miss() {
        let t = truth(&[(1, 2, 0, 600)]);
        let r = compare(&contacts(&[(1, 2)]), &t, 120);
        assert_eq!(r.missed, BTreeSet::from([(id(1), id(2))]));
        assert!(r.spurious.is_empty());
    }

    #[test]
    fn unsupported_entry_is_spurious() {
        let t = truth(&[(1, 2, 0, 600)]);
        let r = compare(&contacts(&[(1, 2), (2, 1), (3, 1)]), &t, 120);
        assert_eq!(r.detected, BTreeSet::from([(id(1), id(2))]));
        assert_eq!(r.spurious, BTreeSet::from([(id(3), id(1))]));
    }

    #[test]
    fn band_tolerates_boundary_pairs() {
        let required = truth(&[]);
        let permitted = truth(&[(1, 3, 10, 10)]);
        let r = compare_banded(&contacts(&[(1, 3), (3, 1)]), &required, &permitted, 120);
        assert!(r.is_clean());
    }
}
