//! Deterministic graph families and seeded surrogates for the benchmark networks.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

pub fn complete(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidArgument(
            "a cycle needs at least 3 nodes".into(),
        ));
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn path(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Result<Graph> {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i)))
}

/// Parts `0..a` and `a..a+b`.
pub fn complete_bipartite(a: usize, b: usize) -> Result<Graph> {
    Graph::from_edges(a + b, (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j))))
}

/// Uniform random spanning tree plus `extra` distinct random edges.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Result<Graph> {
    let max_extra = n * (n - 1) / 2 - (n - 1);
    if extra > max_extra {
        return Err(Error::InvalidArgument(format!(
            "{extra} extra edges do not fit on {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = EdgeSet::new(n);
    for i in 1..n {
        set.add(i, rng.random_range(0..i));
    }
    let target = n - 1 + extra;
    while set.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        set.add(a, b);
    }
    set.into_graph()
}

/// Stand-in for the 62-node, 159-edge dolphin social network: a random tree
/// densified by degree-biased attachment and triadic closure.
pub fn dolphins_like(seed: u64) -> Result<Graph> {
    clustered_social(62, 159, 0.5, seed)
}

/// Random tree plus edges whose first endpoint is drawn with weight `deg + 1`;
/// with probability `closure` the second endpoint closes a triangle.
pub fn clustered_social(n: usize, m: usize, closure: f64, seed: u64) -> Result<Graph> {
    if m < n - 1 || m > n * (n - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "{m} edges impossible for a connected graph on {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = EdgeSet::new(n);
    for i in 1..n {
        set.add(i, rng.random_range(0..i));
    }
    while set.len() < m {
        let weights: Vec<usize> = set.adj.iter().map(|s| s.len() + 1).collect();
        let pick = WeightedIndex::new(&weights).expect("positive weights");
        let a = pick.sample(&mut rng);
        if rng.random::<f64>() < closure {
            let nbrs = set.sorted_neighbors(a);
            let b0 = nbrs[rng.random_range(0..nbrs.len())];
            let cand: Vec<usize> = set
                .sorted_neighbors(b0)
                .into_iter()
                .filter(|&c| c != a && !set.adj[a].contains(&c))
                .collect();
            if !cand.is_empty() {
                let c = cand[rng.random_range(0..cand.len())];
                set.add(a, c);
                continue;
            }
        }
        let b = pick.sample(&mut rng);
        set.add(a, b);
    }
    set.into_graph()
}

/// Stand-in for the 4039-node, 88234-edge Facebook ego-network union: ten ego
/// hubs, each joined to its own circle, with heavy-tailed attachment inside
/// circles and a small share of cross-circle edges.
pub fn facebook_like(seed: u64) -> Result<Graph> {
    ego_circles(
        4039,
        88234,
        &[1000, 760, 720, 520, 330, 215, 160, 150, 60],
        seed,
    )
}

/// `sizes` lists all circles but the last, which takes the remaining nodes.
pub fn ego_circles(n: usize, m: usize, sizes: &[usize], seed: u64) -> Result<Graph> {
    let egos = sizes.len() + 1;
    let listed: usize = sizes.iter().sum();
    if listed + egos + 1 > n {
        return Err(Error::InvalidArgument(
            "circle sizes exceed node count".into(),
        ));
    }
    let mut sizes = sizes.to_vec();
    sizes.push(n - listed - egos);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = EdgeSet::new(n);
    let mut circles = Vec::with_capacity(egos);
    let mut next = egos;
    for (ego, &size) in sizes.iter().enumerate() {
        let members: Vec<usize> = (next..next + size).collect();
        next += size;
        for &v in &members {
            set.add(ego, v);
        }
        circles.push(members);
    }
    for ego in 0..egos {
        set.add(ego, (ego + 1) % egos);
    }
    if m > set.len()
        + circles
            .iter()
            .map(|c| c.len() * (c.len() - 1) / 2)
            .sum::<usize>()
    {
        return Err(Error::InvalidArgument(format!("{m} edges do not fit")));
    }

    let circle_pick = WeightedIndex::new(&sizes).expect("positive sizes");
    let member_picks: Vec<WeightedIndex<f64>> = circles
        .iter()
        .map(|c| {
            let w: Vec<f64> = (0..c.len())
                .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5))
                .collect();
            WeightedIndex::new(&w).expect("positive weights")
        })
        .collect();
    while set.len() < m {
        let c = circle_pick.sample(&mut rng);
        let a = circles[c][member_picks[c].sample(&mut rng)];
        if rng.random::<f64>() < 0.03 {
            let h = rng.random_range(0..egos);
            let b = circles[h][rng.random_range(0..circles[h].len())];
            set.add(a, b);
        } else {
            let b = circles[c][member_picks[c].sample(&mut rng)];
            set.add(a, b);
        }
    }
    set.into_graph()
}

struct EdgeSet {
    adj: Vec<HashSet<usize>>,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    fn new(n: usize) -> Self {
        EdgeSet {
            adj: vec![HashSet::new(); n],
            edges: Vec::new(),
        }
    }

    fn add(&mut self, a: usize, b: usize) -> bool {
        if a == b || self.adj[a].contains(&b) {
            return false;
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        self.edges.push((a, b));
        true
    }

    fn len(&self) -> usize {
        self.edges.len()
    }

    // HashSet iteration order is randomised per process; sort for reproducibility.
    fn sorted_neighbors(&self, a: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.adj[a].iter().copied().collect();
        v.sort_unstable();
        v
    }

    fn into_graph(self) -> Result<Graph> {
        Graph::from_edges(self.adj.len(), self.edges)
    }
}
