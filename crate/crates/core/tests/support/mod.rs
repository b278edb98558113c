//! Brute-force oracles, written without the library's formulas.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rumor_core::topology::{regular_tree, Graph, NodeId};

pub fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Number of orderings of the nodes `0..n` that start at `root` and keep
/// every prefix connected, by dynamic programming over node subsets.
pub fn count_orderings(adj: &[Vec<usize>], root: usize) -> u64 {
    let n = adj.len();
    assert!(n <= 20);
    let nbr: Vec<u32> = adj.iter().map(|a| a.iter().fold(0u32, |m, &v| m | 1 << v)).collect();
    let mut ways = vec![0u64; 1 << n];
    ways[1 << root] = 1;
    for mask in 0..(1u32 << n) {
        let w = ways[mask as usize];
        if w == 0 {
            continue;
        }
        let reach = (0..n).filter(|&u| mask & 1 << u != 0).fold(0u32, |m, u| m | nbr[u]) & !mask;
        for v in 0..n {
            if reach & 1 << v != 0 {
                ways[(mask | 1 << v) as usize] += w;
            }
        }
    }
    ways[(1 << n) - 1]
}

/// Uniform random labelled tree on `n` nodes via a Prüfer sequence.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if n == 1 {
        return Vec::new();
    }
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::new();
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    // Shuffle labels so that node ids carry no structure.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    edges.into_iter().map(|(a, b)| (perm[a], perm[b])).collect()
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Law of the color counts after `draws` draws, by walking every draw
/// sequence of the urn.
pub fn urn_by_sequences(initial: &[u64], increment: u64, draws: u64) -> BTreeMap<Vec<u64>, BigRational> {
    fn walk(
        balls: &mut Vec<u64>,
        counts: &mut Vec<u64>,
        p: BigRational,
        left: u64,
        inc: u64,
        out: &mut BTreeMap<Vec<u64>, BigRational>,
    ) {
        if left == 0 {
            *out.entry(counts.clone()).or_insert_with(BigRational::zero) += p;
            return;
        }
        let total: u64 = balls.iter().sum();
        for c in 0..balls.len() {
            if balls[c] == 0 {
                continue;
            }
            let q = &p * rat(balls[c] as i64, total as i64);
            balls[c] += inc;
            counts[c] += 1;
            walk(balls, counts, q, left - 1, inc, out);
            balls[c] -= inc;
            counts[c] -= 1;
        }
    }
    let mut out = BTreeMap::new();
    let mut balls = initial.to_vec();
    let mut counts = vec![0; initial.len()];
    walk(&mut balls, &mut counts, BigRational::one(), draws, increment, &mut out);
    out
}

/// Suspect layouts on a regular tree, anchored at the origin.
#[derive(Debug, Clone, Copy)]
pub enum Layout {
    /// Every infected node is a suspect; the source is the origin.
    All,
    /// The first `k` nodes in breadth-first order around the origin.
    Connected(usize),
    /// The origin and one node at distance `d`.
    Two(u32),
}

/// Exact detection probability by enumerating every infection sequence of
/// `n` nodes on the `delta`-regular tree. Each step infects a uniformly
/// chosen boundary node. The estimate is a suspect with the largest count of
/// connected orderings, and a tie among `t` suspects scores `1/t`.
pub fn micro_pc(delta: u32, n: usize, layout: Layout) -> BigRational {
    let reach = match layout {
        Layout::All => 0,
        Layout::Connected(k) => (1..).find(|&r| ball(delta, r) >= k).unwrap(),
        Layout::Two(d) => d,
    };
    let g = regular_tree(delta, reach + n as u32).unwrap();
    let suspects: Option<Vec<NodeId>> = match layout {
        Layout::All => None,
        Layout::Connected(k) => Some((0..k as u32).map(NodeId).collect()),
        Layout::Two(d) => {
            let dist = g.distances_from(NodeId(0));
            let far = dist.iter().filter(|&(_, &r)| r == d).map(|(&v, _)| v).min().unwrap();
            Some(vec![NodeId(0), far])
        }
    };
    let sources = suspects.clone().unwrap_or_else(|| vec![NodeId(0)]);
    let mut total = BigRational::zero();
    let mut memo = HashMap::new();
    for &s in &sources {
        let mut acc = BigRational::zero();
        let mut infected = vec![s];
        grow(&g, n, &mut infected, BigRational::one(), &suspects, &mut memo, &mut acc);
        total += acc;
    }
    total / BigRational::from_integer(BigInt::from(sources.len()))
}

fn ball(delta: u32, r: u32) -> usize {
    let mut total = 1usize;
    let mut layer = 1usize;
    for depth in 0..r {
        layer *= if depth == 0 { delta } else { delta - 1 } as usize;
        total += layer;
    }
    total
}

fn grow(
    g: &Graph,
    n: usize,
    infected: &mut Vec<NodeId>,
    p: BigRational,
    suspects: &Option<Vec<NodeId>>,
    memo: &mut HashMap<(BTreeSet<NodeId>, NodeId), BigRational>,
    acc: &mut BigRational,
) {
    if infected.len() == n {
        let key: BTreeSet<NodeId> = infected.iter().copied().collect();
        let source = infected[0];
        let score = memo.entry((key.clone(), source)).or_insert_with(|| map_score(g, &key, source, suspects)).clone();
        *acc += p * score;
        return;
    }
    let boundary: Vec<NodeId> =
        infected.iter().flat_map(|&u| g.neighbors(u).iter().copied()).filter(|v| !infected.contains(v)).collect();
    let share = rat(1, boundary.len() as i64);
    for v in boundary {
        infected.push(v);
        grow(g, n, infected, &p * &share, suspects, memo, acc);
        infected.pop();
    }
}

/// Probability that the MAP rule returns `source` on the infected set.
fn map_score(g: &Graph, infected: &BTreeSet<NodeId>, source: NodeId, suspects: &Option<Vec<NodeId>>) -> BigRational {
    let nodes: Vec<NodeId> = infected.iter().copied().collect();
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj: Vec<Vec<usize>> =
        nodes.iter().map(|&u| g.neighbors(u).iter().filter_map(|v| index.get(v).copied()).collect()).collect();
    let candidates: Vec<NodeId> = match suspects {
        None => nodes.clone(),
        Some(s) => s.iter().copied().filter(|v| infected.contains(v)).collect(),
    };
    let scores: Vec<u64> = candidates.iter().map(|v| count_orderings(&adj, index[v])).collect();
    let best = *scores.iter().max().unwrap();
    let winners: Vec<NodeId> = candidates.iter().zip(&scores).filter(|(_, &s)| s == best).map(|(&v, _)| v).collect();
    if winners.contains(&source) {
        rat(1, winners.len() as i64)
    } else {
        BigRational::zero()
    }
}
