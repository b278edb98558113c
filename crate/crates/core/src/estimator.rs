//! MAP source estimation over a suspect set with a uniform prior.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::centrality::{centrality_all, rumor_centrality};
use crate::error::{Error, Result};
use crate::topology::{shortest_path, Graph, NodeId, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SuspectPattern {
    All,
    Connected { k: usize },
    Two { d: u32 },
    General,
}

/// A-priori suspects; every member carries prior weight `1/k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspectSet {
    members: BTreeSet<NodeId>,
    pattern: SuspectPattern,
}

impl SuspectSet {
    /// An arbitrary suspect set (pattern `general`).
    pub fn general(members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let members: BTreeSet<NodeId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::Validation("suspect set is empty".into()));
        }
        Ok(SuspectSet { members, pattern: SuspectPattern::General })
    }

    /// Suspects with explicit prior weights. Only a uniform prior is
    /// supported, so unequal weights are rejected.
    pub fn with_prior(members: &[NodeId], weights: &[f64]) -> Result<Self> {
        if members.len() != weights.len() {
            return Err(Error::Argument("one weight per suspect is required".into()));
        }
        if let Some(&w0) = weights.first() {
            if weights.iter().any(|&w| w != w0 || w <= 0.0) {
                return Err(Error::Config("only a uniform prior over suspects is supported".into()));
            }
        }
        Self::general(members.iter().copied())
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn pattern(&self) -> SuspectPattern {
        self.pattern
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.contains(&v)
    }

    pub fn prior(&self) -> f64 {
        1.0 / self.members.len() as f64
    }
}

pub fn make_suspects_all(snap: &Snapshot) -> SuspectSet {
    SuspectSet { members: snap.nodes().iter().copied().collect(), pattern: SuspectPattern::All }
}

/// The first `k` nodes of a breadth-first walk from `anchor` (neighbors in
/// ascending id order).
pub fn make_suspects_connected(g: &Graph, anchor: NodeId, k: usize) -> Result<SuspectSet> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if !g.contains(anchor) {
        return Err(Error::Argument(format!("anchor {anchor} is not in the graph")));
    }
    let mut members = BTreeSet::from([anchor]);
    let mut queue = VecDeque::from([anchor]);
    'walk: while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if members.len() == k {
                break 'walk;
            }
            if members.insert(w) {
                queue.push_back(w);
            }
        }
    }
    if members.len() < k {
        return Err(Error::Capacity(format!("only {} nodes reachable from {anchor}, need {k}", members.len())));
    }
    Ok(SuspectSet { members, pattern: SuspectPattern::Connected { k } })
}

pub fn make_suspects_two(g: &Graph, a: NodeId, b: NodeId) -> Result<SuspectSet> {
    if a == b {
        return Err(Error::Validation(format!("two suspects must differ, got {a} twice")));
    }
    let d = (shortest_path(g, a, b)?.len() - 1) as u32;
    Ok(SuspectSet { members: BTreeSet::from([a, b]), pattern: SuspectPattern::Two { d } })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    TreeExact,
    BfsHeuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimate {
    pub chosen: NodeId,
    pub argmax_set: BTreeSet<NodeId>,
    pub method: EstimateMethod,
    pub tie_broken: bool,
}

/// Suspect of maximal rumor centrality among the infected suspects, with a
/// fair random choice among ties.
///
/// Trees use exact centralities; snapshots with cycles score each candidate
/// on its own breadth-first tree.
pub fn map_estimate(snap: &Snapshot, suspects: &SuspectSet, tie_seed: u64) -> Result<Estimate> {
    let candidates: Vec<NodeId> = suspects.members.iter().copied().filter(|&v| snap.contains(v)).collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidate);
    }
    let method = if snap.is_tree() { EstimateMethod::TreeExact } else { EstimateMethod::BfsHeuristic };
    let scores: Vec<BigUint> = if candidates.len() == 1 {
        vec![BigUint::default()]
    } else if method == EstimateMethod::TreeExact {
        let report = centrality_all(snap)?;
        candidates.iter().map(|&v| report.get(v).map(|r| r.centrality.clone()).unwrap_or_default()).collect()
    } else {
        candidates.iter().map(|&v| Ok(rumor_centrality(&snap.bfs_tree(v)?, v)?.exact)).collect::<Result<_>>()?
    };
    let best = scores.iter().max().expect("candidates are non-empty");
    let argmax: Vec<NodeId> = candidates.iter().zip(&scores).filter(|(_, s)| *s == best).map(|(&v, _)| v).collect();
    let chosen = if argmax.len() == 1 {
        argmax[0]
    } else {
        argmax[ChaCha8Rng::seed_from_u64(tie_seed).random_range(0..argmax.len())]
    };
    Ok(Estimate { chosen, tie_broken: argmax.len() > 1, argmax_set: argmax.into_iter().collect(), method })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{load_edge_list, regular_tree};

    fn snap(text: &str) -> (Graph, Snapshot) {
        let g = load_edge_list(text).unwrap();
        let s = Snapshot::induced(&g, g.nodes()).unwrap();
        (g, s)
    }

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    #[test]
    fn path_examples() {
        let (_, s) = snap("0 1\n1 2");
        let e = map_estimate(&s, &make_suspects_all(&s), 0).unwrap();
        assert_eq!((e.chosen, e.tie_broken), (NodeId(1), false));
        let ends = SuspectSet::general(ids(&[0, 2])).unwrap();
        let mut seen = BTreeSet::new();
        for seed in 0..64 {
            let e = map_estimate(&s, &ends, seed).unwrap();
            assert_eq!(e.argmax_set, ids(&[0, 2]));
            assert!(e.tie_broken);
            seen.insert(e.chosen);
        }
        assert_eq!(seen.len(), 2);
        let one = SuspectSet::general(ids(&[0])).unwrap();
        assert_eq!(map_estimate(&s, &one, 5).unwrap().chosen, NodeId(0));
        let absent = SuspectSet::general(ids(&[7])).unwrap();
        assert_eq!(map_estimate(&s, &absent, 0), Err(Error::NoCandidate));
    }

    #[test]
    fn deterministic_given_seed() {
        let (_, s) = snap("0 1\n1 2\n2 3");
        let all = make_suspects_all(&s);
        assert_eq!(map_estimate(&s, &all, 11).unwrap(), map_estimate(&s, &all, 11).unwrap());
    }

    #[test]
    fn cyclic_snapshot_uses_heuristic() {
        let (_, s) = snap("0 1\n1 2\n2 3\n3 0\n0 4");
        let e = map_estimate(&s, &make_suspects_all(&s), 0).unwrap();
        assert_eq!(e.method, EstimateMethod::BfsHeuristic);
        assert_eq!(e.chosen, NodeId(0));
    }

    #[test]
    fn constructors() {
        let (g, s) = snap("0 1\n1 2\n2 3\n3 4");
        assert_eq!(make_suspects_all(&s).len(), 5);
        assert_eq!(make_suspects_two(&g, NodeId(0), NodeId(4)).unwrap().pattern(), SuspectPattern::Two { d: 4 });
        assert_eq!(make_suspects_two(&g, NodeId(1), NodeId(2)).unwrap().pattern(), SuspectPattern::Two { d: 1 });
        assert!(matches!(make_suspects_two(&g, NodeId(1), NodeId(1)), Err(Error::Validation(_))));
        let t = regular_tree(3, 2).unwrap();
        assert_eq!(make_suspects_connected(&t, NodeId(0), 1).unwrap().members(), &ids(&[0]));
        assert_eq!(make_suspects_connected(&t, NodeId(0), 4).unwrap().members(), &ids(&[0, 1, 2, 3]));
        assert!(matches!(make_suspects_connected(&t, NodeId(0), 11), Err(Error::Capacity(_))));
        let u = SuspectSet::with_prior(&[NodeId(1), NodeId(2)], &[0.5, 0.5]).unwrap();
        assert_eq!(u.prior(), 0.5);
        assert!(matches!(SuspectSet::with_prior(&[NodeId(1), NodeId(2)], &[0.3, 0.7]), Err(Error::Config(_))));
    }
}
