//! SI spreading: grow an infected set from a single source until `n` nodes
//! are infected.
//!
//! Two backends produce identically distributed snapshots on trees:
//!
//! * [`Backend::ExponentialClocks`] draws an `Exp(1)` delay for every edge
//!   leaving the infected set and infects in order of arrival time. Works on
//!   any graph.
//! * [`Backend::UniformBoundary`] infects a uniformly chosen member of the
//!   rumor boundary at each step. On a tree every boundary node has exactly
//!   one infected neighbor, so this is the memoryless embedding of the clocks.

use std::borrow::Cow;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Graph, NodeId, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    ExponentialClocks,
    #[default]
    UniformBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpreadConfig {
    pub source: NodeId,
    pub n: usize,
    pub backend: Backend,
    pub seed: u64,
}

/// Deterministic per-trial generator: stream `index` of the ChaCha8 key
/// derived from `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Susceptible nodes adjacent to the infected set, each paired with the
/// infected neighbor whose edge would carry the rumor.
#[derive(Debug, Clone, Default)]
pub struct RumorBoundary {
    entries: Vec<(NodeId, NodeId)>,
}

impl RumorBoundary {
    pub fn entries(&self) -> &[(NodeId, NodeId)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, susceptible: NodeId, via: NodeId) {
        self.entries.push((susceptible, via));
    }

    fn take_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (NodeId, NodeId) {
        let i = rng.random_range(0..self.entries.len());
        self.entries.swap_remove(i)
    }
}

/// Result of one spreading run, with the infection order retained.
#[derive(Debug, Clone)]
pub struct Spread {
    pub snapshot: Snapshot,
    /// `(node, infector)` in infection order; the source has no infector.
    pub order: Vec<(NodeId, Option<NodeId>)>,
}

pub fn simulate_si(g: &Graph, cfg: &SpreadConfig) -> Result<Snapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    simulate_with_rng(g, cfg.source, cfg.n, cfg.backend, &mut rng).map(|s| s.snapshot)
}

/// Runs the spreading process with a caller-supplied generator.
///
/// Lazy regular trees are grown on a private copy, so `g` is never mutated.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    g: &Graph,
    source: NodeId,
    n: usize,
    backend: Backend,
    rng: &mut R,
) -> Result<Spread> {
    if n == 0 {
        return Err(Error::Argument("target infected count must be at least 1".into()));
    }
    if !g.contains(source) {
        return Err(Error::Argument(format!("source {source} is not in the graph")));
    }
    if backend == Backend::UniformBoundary && !g.component_is_tree(source) {
        return Err(Error::Backend("uniform-boundary spreading requires a tree; use exponential clocks".into()));
    }
    let mut work: Cow<'_, Graph> = Cow::Borrowed(g);
    let order = match backend {
        Backend::UniformBoundary => spread_uniform(&mut work, source, n, rng)?,
        Backend::ExponentialClocks => spread_clocks(&mut work, source, n, rng)?,
    };
    let snapshot = Snapshot::induced(&work, order.iter().map(|&(v, _)| v))?.with_source(source)?;
    Ok(Spread { snapshot, order })
}

fn ensure_expanded(work: &mut Cow<'_, Graph>, v: NodeId) -> Result<()> {
    if !work.is_expanded(v) {
        work.to_mut().expand(v)?;
    }
    Ok(())
}

fn mark(infected: &mut Vec<bool>, bound: usize, v: NodeId) {
    if infected.len() < bound {
        infected.resize(bound, false);
    }
    infected[v.index()] = true;
}

fn is_marked(infected: &[bool], v: NodeId) -> bool {
    infected.get(v.index()).copied().unwrap_or(false)
}

fn spread_uniform<R: Rng + ?Sized>(
    work: &mut Cow<'_, Graph>,
    source: NodeId,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(NodeId, Option<NodeId>)>> {
    let mut infected = Vec::new();
    let mut order = Vec::with_capacity(n);
    let mut boundary = RumorBoundary::default();
    let mut infect =
        |v: NodeId, via: Option<NodeId>, work: &mut Cow<'_, Graph>, boundary: &mut RumorBoundary| -> Result<()> {
            ensure_expanded(work, v)?;
            mark(&mut infected, work.id_bound(), v);
            order.push((v, via));
            for &w in work.neighbors(v) {
                if Some(w) != via {
                    boundary.push(w, v);
                }
            }
            Ok(())
        };
    infect(source, None, work, &mut boundary)?;
    for _ in 1..n {
        if boundary.is_empty() {
            return Err(reachable_error(n));
        }
        let (v, via) = boundary.take_uniform(rng);
        infect(v, Some(via), work, &mut boundary)?;
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival(f64);

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn spread_clocks<R: Rng + ?Sized>(
    work: &mut Cow<'_, Graph>,
    source: NodeId,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(NodeId, Option<NodeId>)>> {
    let mut infected = Vec::new();
    let mut order = Vec::with_capacity(n);
    let mut queue: BinaryHeap<Reverse<(Arrival, NodeId, NodeId)>> = BinaryHeap::new();
    let mut now = 0.0;
    let mut current = Some((source, None));
    loop {
        if let Some((v, via)) = current.take() {
            ensure_expanded(work, v)?;
            mark(&mut infected, work.id_bound(), v);
            order.push((v, via));
            if order.len() == n {
                return Ok(order);
            }
            for &w in work.neighbors(v) {
                if !is_marked(&infected, w) {
                    let delay: f64 = rng.sample(Exp1);
                    queue.push(Reverse((Arrival(now + delay), w, v)));
                }
            }
        }
        let Some(Reverse((Arrival(t), w, via))) = queue.pop() else {
            return Err(reachable_error(n));
        };
        if !is_marked(&infected, w) {
            now = t;
            current = Some((w, Some(via)));
        }
    }
}

fn reachable_error(n: usize) -> Error {
    Error::Capacity(format!("the source's component has fewer than {n} nodes"))
}

/// Sizes of the subtrees hanging off `root`, one per neighbor of `root` in
/// the snapshot (ascending neighbor id). They sum to `n - 1`.
pub fn subtree_counts(snap: &Snapshot, root: NodeId) -> Result<Vec<u32>> {
    let r = snap.require_local(root)?;
    let (size, _, _) = snap.subtree_sizes(r)?;
    Ok(snap.local_neighbors(r).iter().map(|&w| size[w]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{load_edge_list, regular_tree};

    #[test]
    fn single_infection_is_the_source() {
        let g = regular_tree(3, 0).unwrap();
        for backend in [Backend::UniformBoundary, Backend::ExponentialClocks] {
            let cfg = SpreadConfig { source: NodeId(0), n: 1, backend, seed: 1 };
            let snap = simulate_si(&g, &cfg).unwrap();
            assert_eq!(snap.nodes(), &[NodeId(0)]);
        }
    }

    #[test]
    fn lazy_tree_grows_without_touching_input() {
        let g = regular_tree(3, 0).unwrap();
        let cfg = SpreadConfig { source: NodeId(0), n: 200, backend: Backend::UniformBoundary, seed: 9 };
        let snap = simulate_si(&g, &cfg).unwrap();
        assert_eq!(snap.n(), 200);
        assert!(snap.is_tree());
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn every_infection_has_an_infected_neighbor() {
        let g = load_edge_list("0 1\n1 2\n2 3\n3 0\n2 4\n4 5\n5 6\n6 2").unwrap();
        let mut rng = trial_rng(3, 0);
        let spread = simulate_with_rng(&g, NodeId(0), 6, Backend::ExponentialClocks, &mut rng).unwrap();
        let mut seen = vec![NodeId(0)];
        for &(v, via) in &spread.order[1..] {
            let via = via.unwrap();
            assert!(seen.contains(&via));
            assert!(g.neighbors(v).contains(&via));
            seen.push(v);
        }
    }

    #[test]
    fn determinism() {
        let g = regular_tree(4, 0).unwrap();
        for backend in [Backend::UniformBoundary, Backend::ExponentialClocks] {
            let cfg = SpreadConfig { source: NodeId(0), n: 50, backend, seed: 77 };
            assert_eq!(simulate_si(&g, &cfg).unwrap(), simulate_si(&g, &cfg).unwrap());
        }
    }

    #[test]
    fn capacity_and_backend_errors() {
        let g = load_edge_list("0 1\n1 2").unwrap();
        let cfg = SpreadConfig { source: NodeId(0), n: 4, backend: Backend::ExponentialClocks, seed: 0 };
        assert!(matches!(simulate_si(&g, &cfg), Err(Error::Capacity(_))));
        let cyc = load_edge_list("0 1\n1 2\n2 0").unwrap();
        let cfg = SpreadConfig { source: NodeId(0), n: 2, backend: Backend::UniformBoundary, seed: 0 };
        assert!(matches!(simulate_si(&cyc, &cfg), Err(Error::Backend(_))));
    }

    #[test]
    fn subtree_counts_examples() {
        let path = load_edge_list("0 1\n1 2").unwrap();
        let snap = Snapshot::induced(&path, path.nodes()).unwrap();
        assert_eq!(subtree_counts(&snap, NodeId(1)).unwrap(), vec![1, 1]);
        assert_eq!(subtree_counts(&snap, NodeId(0)).unwrap(), vec![2]);
        let star = regular_tree(3, 1).unwrap();
        let snap = Snapshot::induced(&star, star.nodes()).unwrap();
        assert_eq!(subtree_counts(&snap, NodeId(0)).unwrap(), vec![1, 1, 1]);
        assert!(matches!(subtree_counts(&snap, NodeId(9)), Err(Error::Argument(_))));
    }
}
