//! Host graphs, regular trees, edge-list ingestion, shortest paths and
//! snapshot (infected subgraph) views.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of materialized nodes in one graph.
pub const MAX_NODES: usize = 1 << 26;

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
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Explicit,
    /// Ball of an infinite `delta`-regular tree that grows on demand.
    LazyRegular {
        delta: u32,
        origin: NodeId,
    },
}

/// Undirected simple graph with dense integer node ids.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    present: Vec<bool>,
    node_count: usize,
    edge_count: usize,
    kind: GraphKind,
}

impl Graph {
    /// Builds an explicit graph from an edge iterator. Duplicate edges are
    /// collapsed; self-loops are rejected.
    pub fn from_edges<I>(edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut sets: Vec<BTreeSet<NodeId>> = Vec::new();
        let mut present = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Validation(format!("self-loop at node {u}")));
            }
            let hi = u.index().max(v.index());
            if hi >= MAX_NODES {
                return Err(Error::Capacity(format!("node id {hi} exceeds limit {MAX_NODES}")));
            }
            if hi >= sets.len() {
                sets.resize_with(hi + 1, BTreeSet::new);
                present.resize(hi + 1, false);
            }
            sets[u.index()].insert(v);
            sets[v.index()].insert(u);
            present[u.index()] = true;
            present[v.index()] = true;
        }
        let adj: Vec<Vec<NodeId>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        let node_count = present.iter().filter(|&&p| p).count();
        Ok(Graph { adj, present, node_count, edge_count, kind: GraphKind::Explicit })
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// One past the largest id ever materialized.
    pub fn id_bound(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.present.get(v.index()).copied().unwrap_or(false)
    }

    /// Sorted neighbors of `v` (empty for unknown nodes).
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.adj.get(v.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.neighbors(v).len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.present.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| NodeId(i as u32))
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Whether a lazy-regular node already has all of its `delta` neighbors.
    /// Explicit graphs are always fully expanded.
    pub fn is_expanded(&self, v: NodeId) -> bool {
        match self.kind {
            GraphKind::Explicit => true,
            GraphKind::LazyRegular { delta, .. } => self.degree(v) == delta as usize,
        }
    }

    /// Materializes the missing children of `v` in a lazy regular tree.
    /// No-op on explicit graphs and on already expanded nodes.
    pub fn expand(&mut self, v: NodeId) -> Result<()> {
        let GraphKind::LazyRegular { delta, .. } = self.kind else {
            return Ok(());
        };
        let missing = (delta as usize).saturating_sub(self.degree(v));
        if missing == 0 {
            return Ok(());
        }
        let first = self.adj.len();
        if first + missing > MAX_NODES {
            return Err(Error::Capacity(format!("regular tree exceeds {MAX_NODES} nodes")));
        }
        for i in 0..missing {
            let child = NodeId((first + i) as u32);
            self.adj.push(vec![v]);
            self.present.push(true);
            self.adj[v.index()].push(child);
        }
        // Children ids are larger than anything already attached to v.
        self.node_count += missing;
        self.edge_count += missing;
        Ok(())
    }

    /// BFS hop distances from `source` within its component.
    pub fn distances_from(&self, source: NodeId) -> HashMap<NodeId, u32> {
        let mut dist = HashMap::new();
        if !self.contains(source) {
            return dist;
        }
        dist.insert(source, 0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &w in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// True if the connected component of `v` has no cycle.
    pub fn component_is_tree(&self, v: NodeId) -> bool {
        if let GraphKind::LazyRegular { .. } = self.kind {
            return true;
        }
        let comp = self.distances_from(v);
        let degree_sum: usize = comp.keys().map(|&u| self.degree(u)).sum();
        degree_sum / 2 + 1 == comp.len()
    }
}

/// Number of nodes in the radius-`radius` ball of a `delta`-regular tree,
/// or `None` on overflow.
pub fn regular_ball_size(delta: u32, radius: u32) -> Option<usize> {
    let mut total: usize = 1;
    let mut layer: usize = 1;
    for depth in 0..radius {
        let fan = if depth == 0 { delta as usize } else { delta as usize - 1 };
        layer = layer.checked_mul(fan)?;
        total = total.checked_add(layer)?;
    }
    Some(total)
}

/// Ball of radius `radius` around the origin (node 0) of the infinite
/// `delta`-regular tree. Ids are assigned in BFS order; boundary nodes stay
/// unexpanded and can be grown later with [`Graph::expand`].
pub fn regular_tree(delta: u32, radius: u32) -> Result<Graph> {
    if delta < 2 {
        return Err(Error::Domain(format!("regular tree needs delta >= 2, got {delta}")));
    }
    match regular_ball_size(delta, radius) {
        Some(size) if size <= MAX_NODES => {}
        _ => {
            return Err(Error::Capacity(format!(
                "regular tree (delta={delta}, radius={radius}) exceeds {MAX_NODES} nodes"
            )))
        }
    }
    let mut g = Graph {
        adj: vec![Vec::new()],
        present: vec![true],
        node_count: 1,
        edge_count: 0,
        kind: GraphKind::LazyRegular { delta, origin: NodeId(0) },
    };
    let mut frontier = vec![NodeId(0)];
    for _ in 0..radius {
        let mut next = Vec::new();
        for v in frontier {
            let before = g.adj.len();
            g.expand(v)?;
            next.extend((before..g.adj.len()).map(|i| NodeId(i as u32)));
        }
        frontier = next;
    }
    Ok(g)
}

/// Parses whitespace-separated `u v` pairs, one per line. Blank lines and
/// lines starting with `#` are ignored.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected two node ids, found {} tokens", tokens.len()),
            });
        }
        let parse = |t: &str| {
            t.parse::<u32>()
                .map(NodeId)
                .map_err(|e| Error::Parse { line: i + 1, msg: format!("bad node id {t:?}: {e}") })
        };
        edges.push((parse(tokens[0])?, parse(tokens[1])?));
    }
    Graph::from_edges(edges)
}

/// BFS shortest path from `u` to `v`, both endpoints included.
pub fn shortest_path(g: &Graph, u: NodeId, v: NodeId) -> Result<Vec<NodeId>> {
    for x in [u, v] {
        if !g.contains(x) {
            return Err(Error::Argument(format!("node {x} is not in the graph")));
        }
    }
    if u == v {
        return Ok(vec![u]);
    }
    let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
    parent.insert(u, u);
    let mut queue = VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        for &w in g.neighbors(x) {
            if parent.contains_key(&w) {
                continue;
            }
            parent.insert(w, x);
            if w == v {
                let mut path = vec![v];
                let mut cur = v;
                while cur != u {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Ok(path);
            }
            queue.push_back(w);
        }
    }
    Err(Error::NoPath(u, v))
}

/// BFS spanning tree of the subgraph induced by `restrict`, rooted at `root`.
pub fn bfs_tree(g: &Graph, root: NodeId, restrict: &BTreeSet<NodeId>) -> Result<Snapshot> {
    if !restrict.contains(&root) {
        return Err(Error::Argument(format!("root {root} is not in the restricted set")));
    }
    Snapshot::induced(g, restrict.iter().copied())?.bfs_tree(root)
}

/// A connected set of infected nodes together with the edges among them.
///
/// Nodes are held in ascending id order; local indices follow that order,
/// so "lowest local index" and "lowest node id" coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    nodes: Vec<NodeId>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    source: Option<NodeId>,
    parent: Option<Vec<Option<usize>>>,
}

impl Snapshot {
    /// Subgraph of `g` induced by `nodes`.
    pub fn induced<I>(g: &Graph, nodes: I) -> Result<Snapshot>
    where
        I: IntoIterator<Item = NodeId>,
    {
        let set: BTreeSet<NodeId> = nodes.into_iter().collect();
        if let Some(missing) = set.iter().find(|v| !g.contains(**v)) {
            return Err(Error::Argument(format!("node {missing} is not in the graph")));
        }
        let nodes: Vec<NodeId> = set.into_iter().collect();
        let index = local_index(&nodes);
        let adj =
            nodes.iter().map(|&u| g.neighbors(u).iter().filter_map(|w| index.get(w).copied()).collect()).collect();
        Snapshot::build(nodes, adj, None)
    }

    /// Snapshot from an explicit node list and edge list.
    pub fn from_edges(nodes: &[NodeId], edges: &[(NodeId, NodeId)]) -> Result<Snapshot> {
        let set: BTreeSet<NodeId> = nodes.iter().copied().collect();
        let nodes: Vec<NodeId> = set.into_iter().collect();
        let index = local_index(&nodes);
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Validation(format!("self-loop at node {u}")));
            }
            let (Some(&a), Some(&b)) = (index.get(&u), index.get(&v)) else {
                return Err(Error::Validation(format!("edge ({u}, {v}) leaves the node list")));
            };
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let adj = adj.into_iter().map(|s| s.into_iter().collect()).collect();
        Snapshot::build(nodes, adj, None)
    }

    fn build(nodes: Vec<NodeId>, adj: Vec<Vec<usize>>, parent: Option<Vec<Option<usize>>>) -> Result<Snapshot> {
        if nodes.is_empty() {
            return Err(Error::Validation("snapshot must contain at least one node".into()));
        }
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        let snap = Snapshot { nodes, adj, edge_count, source: None, parent };
        if snap.reachable_from(0).len() != snap.n() {
            return Err(Error::Validation("infected nodes do not form a connected subgraph".into()));
        }
        Ok(snap)
    }

    /// Records the ground-truth source (bookkeeping only).
    pub fn with_source(mut self, source: NodeId) -> Result<Snapshot> {
        if !self.contains(source) {
            return Err(Error::Argument(format!("source {source} is not in the snapshot")));
        }
        self.source = Some(source);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn source(&self) -> Option<NodeId> {
        self.source
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count + 1 == self.n()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn local(&self, v: NodeId) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    pub(crate) fn require_local(&self, v: NodeId) -> Result<usize> {
        self.local(v).ok_or_else(|| Error::Argument(format!("node {v} is not in the snapshot")))
    }

    pub fn node_at(&self, local: usize) -> NodeId {
        self.nodes[local]
    }

    pub(crate) fn local_neighbors(&self, local: usize) -> &[usize] {
        &self.adj[local]
    }

    /// Neighbors of `v` inside the snapshot.
    pub fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        match self.local(v) {
            Some(i) => self.adj[i].iter().map(|&j| self.nodes[j]).collect(),
            None => Vec::new(),
        }
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (i, ns) in self.adj.iter().enumerate() {
            for &j in ns {
                if i < j {
                    out.push((self.nodes[i], self.nodes[j]));
                }
            }
        }
        out
    }

    /// Parent of `v` in a rooted snapshot (as produced by [`Snapshot::bfs_tree`]).
    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        let parent = self.parent.as_ref()?;
        let i = self.local(v)?;
        parent[i].map(|p| self.nodes[p])
    }

    pub fn root(&self) -> Option<NodeId> {
        let parent = self.parent.as_ref()?;
        parent.iter().position(Option::is_none).map(|i| self.nodes[i])
    }

    fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        let mut order = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
        order
    }

    /// BFS spanning tree rooted at `root`. Every non-root node hangs off its
    /// lowest-id neighbor one level closer to the root.
    pub fn bfs_tree(&self, root: NodeId) -> Result<Snapshot> {
        let r = self.require_local(root)?;
        let n = self.n();
        let mut depth = vec![u32::MAX; n];
        depth[r] = 0;
        for &u in &self.reachable_from(r) {
            for &w in &self.adj[u] {
                if depth[w] == u32::MAX {
                    depth[w] = depth[u] + 1;
                }
            }
        }
        let mut parent = vec![None; n];
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            if v == r {
                continue;
            }
            // adjacency is sorted, so the first hit is the lowest id
            let p = *self.adj[v].iter().find(|&&u| depth[u] + 1 == depth[v]).expect("connected snapshot");
            parent[v] = Some(p);
            adj[v].push(p);
            adj[p].push(v);
        }
        for ns in &mut adj {
            ns.sort_unstable();
        }
        let mut snap = Snapshot::build(self.nodes.clone(), adj, Some(parent))?;
        snap.source = self.source;
        Ok(snap)
    }

    /// Rooted traversal of a tree snapshot: BFS order and local parents.
    pub(crate) fn rooted(&self, root: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if !self.is_tree() {
            return Err(Error::NotATree { nodes: self.n(), edges: self.edge_count });
        }
        let n = self.n();
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        let mut order = Vec::with_capacity(n);
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &self.adj[u] {
                if w != parent[u] {
                    parent[w] = u;
                    order.push(w);
                }
            }
        }
        Ok((order, parent))
    }

    /// Subtree sizes `|T_u^root|` for every node, plus the rooted parent array.
    pub(crate) fn subtree_sizes(&self, root: usize) -> Result<(Vec<u32>, Vec<usize>, Vec<usize>)> {
        let (order, parent) = self.rooted(root)?;
        let mut size = vec![1u32; self.n()];
        for &u in order.iter().rev() {
            if u != root {
                size[parent[u]] += size[u];
            }
        }
        Ok((size, parent, order))
    }

    pub fn to_document(&self) -> SnapshotDocument {
        SnapshotDocument {
            n: self.n(),
            source: self.source,
            nodes: self.nodes.clone(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_document(doc: &SnapshotDocument) -> Result<Snapshot> {
        let edges: Vec<(NodeId, NodeId)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        let snap = Snapshot::from_edges(&doc.nodes, &edges)?;
        if snap.n() != doc.n || doc.nodes.len() != doc.n {
            return Err(Error::Validation(format!("declared n={} but {} distinct nodes listed", doc.n, snap.n())));
        }
        match doc.source {
            Some(s) => snap.with_source(s),
            None => Ok(snap),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Snapshot> {
        let doc: SnapshotDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        Snapshot::from_document(&doc)
    }
}

fn local_index(nodes: &[NodeId]) -> HashMap<NodeId, usize> {
    nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect()
}

/// Serialized snapshot: `{n, source?, nodes, edges}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<[NodeId; 2]>,
}
