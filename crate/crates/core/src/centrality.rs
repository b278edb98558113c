//! Rumor centrality: the number of infection orderings of a tree snapshot
//! that start at a given node, `R(s) = n! / ∏_u |T_u^s|`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::topology::{bfs_tree, Graph, NodeId, Snapshot};
use crate::urn::factorial;

/// An exact rumor centrality with its natural log for display.
#[derive(Debug, Clone, PartialEq)]
pub struct Centrality {
    pub exact: BigUint,
    pub log: f64,
}

pub fn rumor_centrality(snap: &Snapshot, root: NodeId) -> Result<Centrality> {
    let r = snap.require_local(root)?;
    let (size, _, _) = snap.subtree_sizes(r)?;
    let n = snap.n() as u64;
    let mut den = BigUint::from(1u32);
    let mut log = ln_gamma(n as f64 + 1.0);
    for &s in &size {
        den *= s;
        log -= (s as f64).ln();
    }
    Ok(Centrality { exact: factorial(n) / den, log })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityRow {
    pub node: NodeId,
    /// `|T_node|` when the tree is rooted at the rumor center.
    pub subtree_size: u32,
    pub log_centrality: f64,
    #[serde(serialize_with = "decimal")]
    pub centrality: BigUint,
}

fn decimal<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    /// Rows in ascending node order.
    pub rows: Vec<CentralityRow>,
}

impl CentralityReport {
    pub fn get(&self, v: NodeId) -> Option<&CentralityRow> {
        self.rows.binary_search_by_key(&v, |r| r.node).ok().map(|i| &self.rows[i])
    }

    /// Nodes of maximal centrality, ascending.
    pub fn centers(&self) -> Vec<NodeId> {
        let Some(best) = self.rows.iter().map(|r| &r.centrality).max() else {
            return Vec::new();
        };
        self.rows.iter().filter(|r| &r.centrality == best).map(|r| r.node).collect()
    }
}

/// Centralities of every node: one rooted pass, then `R(u) = R(v)·s/(n-s)`
/// across each edge `(v, u)` with `s = |T_u^v|`.
pub fn centrality_all(snap: &Snapshot) -> Result<CentralityReport> {
    let n = snap.n();
    let (size, parent, order) = snap.subtree_sizes(0)?;
    let root = rumor_centrality(snap, snap.node_at(0))?;
    let mut exact = vec![BigUint::default(); n];
    let mut log = vec![0.0; n];
    exact[0] = root.exact;
    log[0] = root.log;
    for &u in order.iter().skip(1) {
        let p = parent[u];
        let s = size[u] as u64;
        let rest = n as u64 - s;
        exact[u] = &exact[p] * s / rest;
        log[u] = log[p] + (s as f64).ln() - (rest as f64).ln();
    }
    // Rumor centers have every branch of size <= n/2.
    let center = (0..n).max_by(|&a, &b| exact[a].cmp(&exact[b]).then(b.cmp(&a))).unwrap_or(0);
    let (center_size, _, _) = snap.subtree_sizes(center)?;
    let rows = exact
        .into_iter()
        .zip(log)
        .enumerate()
        .map(|(i, (centrality, log_centrality))| CentralityRow {
            node: snap.node_at(i),
            subtree_size: center_size[i],
            log_centrality,
            centrality,
        })
        .collect();
    Ok(CentralityReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalCenterVerdict {
    pub is_center: bool,
    pub tied_neighbor: Option<NodeId>,
}

/// Whether `omega` dominates the listed neighbors: every listed neighbor's
/// branch holds at most `n/2` nodes. A branch of exactly `n/2` is a tie.
pub fn local_rumor_center(
    snap: &Snapshot,
    omega: NodeId,
    sub_neighborhood: &BTreeSet<NodeId>,
) -> Result<LocalCenterVerdict> {
    let w = snap.require_local(omega)?;
    let (size, _, _) = snap.subtree_sizes(w)?;
    let n = snap.n() as u64;
    let mut is_center = true;
    let mut tied_neighbor = None;
    for &u in sub_neighborhood {
        let lu = snap.require_local(u)?;
        if !snap.local_neighbors(w).contains(&lu) {
            return Err(Error::Argument(format!("{u} is not a neighbor of {omega}")));
        }
        let s = 2 * size[lu] as u64;
        if s > n {
            is_center = false;
        } else if s == n {
            tied_neighbor = Some(u);
        }
    }
    Ok(LocalCenterVerdict { is_center, tied_neighbor })
}

/// Exact ordering of `R(u)` against `R(v)` from the product of
/// `|T_w|/(n-|T_w|)` over the path `u → v`.
pub fn compare_centrality(snap: &Snapshot, u: NodeId, v: NodeId) -> Result<Ordering> {
    let lu = snap.require_local(u)?;
    let lv = snap.require_local(v)?;
    let (size, parent, _) = snap.subtree_sizes(lu)?;
    let n = snap.n() as u64;
    // R(v)/R(u) = num/den.
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    let mut w = lv;
    while w != lu {
        let s = size[w] as u64;
        num *= s;
        den *= n - s;
        w = parent[w];
    }
    Ok(den.cmp(&num))
}

/// Centrality of `s` in the breadth-first tree of `nodes` rooted at `s`; the
/// standard heuristic when the infected subgraph has cycles.
pub fn bfs_heuristic_centrality(g: &Graph, nodes: &BTreeSet<NodeId>, s: NodeId) -> Result<Centrality> {
    let tree = bfs_tree(g, s, nodes)?;
    rumor_centrality(&tree, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{load_edge_list, regular_tree};

    fn snap(text: &str) -> Snapshot {
        let g = load_edge_list(text).unwrap();
        Snapshot::induced(&g, g.nodes()).unwrap()
    }

    fn r(s: &Snapshot, v: u32) -> u64 {
        (&rumor_centrality(s, NodeId(v)).unwrap().exact).try_into().unwrap()
    }

    #[test]
    fn small_examples() {
        let single = Snapshot::from_edges(&[NodeId(4)], &[]).unwrap();
        assert_eq!(r(&single, 4), 1);
        let path = snap("0 1\n1 2");
        assert_eq!((r(&path, 0), r(&path, 1), r(&path, 2)), (1, 2, 1));
        let star = snap("0 1\n0 2\n0 3");
        assert_eq!((r(&star, 0), r(&star, 3)), (6, 2));
        let cyc = snap("0 1\n1 2\n2 0");
        assert!(matches!(rumor_centrality(&cyc, NodeId(0)), Err(Error::NotATree { .. })));
    }

    #[test]
    fn all_matches_per_node() {
        let p4 = snap("0 1\n1 2\n2 3");
        let rep = centrality_all(&p4).unwrap();
        let vals: Vec<u64> = rep.rows.iter().map(|x| (&x.centrality).try_into().unwrap()).collect();
        assert_eq!(vals, vec![1, 3, 3, 1]);
        assert_eq!(rep.centers(), vec![NodeId(1), NodeId(2)]);
        let g = regular_tree(3, 3).unwrap();
        let s = Snapshot::induced(&g, g.nodes()).unwrap();
        let rep = centrality_all(&s).unwrap();
        for row in &rep.rows {
            let c = rumor_centrality(&s, row.node).unwrap();
            assert_eq!(row.centrality, c.exact);
            assert!((row.log_centrality - c.log).abs() < 1e-9);
        }
        assert_eq!(rep.centers(), vec![NodeId(0)]);
        assert_eq!(rep.get(NodeId(0)).unwrap().subtree_size, 22);
    }

    #[test]
    fn local_center_examples() {
        let path = snap("0 1\n1 2");
        let v = local_rumor_center(&path, NodeId(1), &[NodeId(0), NodeId(2)].into()).unwrap();
        assert_eq!(v, LocalCenterVerdict { is_center: true, tied_neighbor: None });
        let edge = snap("0 1");
        let v = local_rumor_center(&edge, NodeId(0), &[NodeId(1)].into()).unwrap();
        assert_eq!(v, LocalCenterVerdict { is_center: true, tied_neighbor: Some(NodeId(1)) });
        let p4 = snap("0 1\n1 2\n2 3");
        let v = local_rumor_center(&p4, NodeId(0), &[NodeId(1)].into()).unwrap();
        assert!(!v.is_center);
        assert!(local_rumor_center(&p4, NodeId(0), &[NodeId(2)].into()).is_err());
        assert!(local_rumor_center(&p4, NodeId(9), &BTreeSet::new()).is_err());
    }

    #[test]
    fn comparisons() {
        let path = snap("0 1\n1 2");
        assert_eq!(compare_centrality(&path, NodeId(0), NodeId(1)).unwrap(), Ordering::Less);
        assert_eq!(compare_centrality(&path, NodeId(0), NodeId(2)).unwrap(), Ordering::Equal);
        assert_eq!(compare_centrality(&path, NodeId(1), NodeId(1)).unwrap(), Ordering::Equal);
        let p4 = snap("0 1\n1 2\n2 3");
        assert_eq!(compare_centrality(&p4, NodeId(1), NodeId(2)).unwrap(), Ordering::Equal);
        assert_eq!(compare_centrality(&p4, NodeId(2), NodeId(0)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn bfs_heuristic() {
        let g = load_edge_list("0 1\n1 2\n2 3\n3 0").unwrap();
        let all: BTreeSet<NodeId> = g.nodes().collect();
        // BFS tree from 0: 0-1, 0-3, 1-2; branches of sizes 2 and 1.
        let c = bfs_heuristic_centrality(&g, &all, NodeId(0)).unwrap();
        assert_eq!(c.exact, BigUint::from(3u32));
        let t = load_edge_list("0 1\n1 2\n1 3").unwrap();
        let nodes: BTreeSet<NodeId> = t.nodes().collect();
        let s = Snapshot::induced(&t, t.nodes()).unwrap();
        for v in t.nodes() {
            assert_eq!(bfs_heuristic_centrality(&t, &nodes, v).unwrap(), rumor_centrality(&s, v).unwrap());
        }
        let one: BTreeSet<NodeId> = [NodeId(2)].into();
        assert_eq!(bfs_heuristic_centrality(&g, &one, NodeId(2)).unwrap().exact, BigUint::from(1u32));
        let gap: BTreeSet<NodeId> = [NodeId(0), NodeId(2)].into();
        assert!(matches!(bfs_heuristic_centrality(&g, &gap, NodeId(0)), Err(Error::Validation(_))));
    }
}
