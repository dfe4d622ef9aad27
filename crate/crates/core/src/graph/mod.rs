//! Undirected graphs in CSR form with the adjacency operations the solvers need.

mod io;
pub mod synth;

use std::collections::{HashSet, VecDeque};

use sha2::{Digest, Sha256};

use crate::error::{check_len, Error, Result};

pub use io::{
    load_edge_list, parse_edge_list, write_edge_list, Indexing, LoadOptions, LoadedGraph,
};

/// Simple, connected, undirected, unweighted graph on nodes `0..n`.
///
/// Adjacency is stored once per direction, so `a_ij = a_ji` holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    bipartite: bool,
}

/// Result of building a graph from a raw edge list.
#[derive(Debug, Clone)]
pub struct BuildReport {
    pub graph: Graph,
    pub duplicates_dropped: usize,
}

impl Graph {
    /// Build from undirected edges. Duplicate edges (in either orientation) are
    /// dropped; self-loops and disconnected input are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Ok(Self::build(n, edges)?.graph)
    }

    /// Like [`Graph::from_edges`], also reporting how many duplicates were dropped.
    pub fn build<I>(n: usize, edges: I) -> Result<BuildReport>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let (offsets, targets, duplicates_dropped) = csr(n, edges)?;
        let components = count_components(&offsets, &targets);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        let bipartite = two_colourable(&offsets, &targets);
        Ok(BuildReport {
            graph: Graph {
                offsets,
                targets,
                bipartite,
            },
            duplicates_dropped,
        })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| i < j)
                .map(move |j| (i, j))
        })
    }

    /// `A z`.
    pub fn matvec(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), z.len())?;
        let mut out = vec![0.0; self.n()];
        self.matvec_into(z, &mut out);
        Ok(out)
    }

    /// `out = A z` without length checks (callers guarantee `n`-length slices).
    pub(crate) fn matvec_into(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.neighbors(i).iter().map(|&j| z[j as usize]).sum();
        }
    }

    /// SHA-256 of the canonical edge list, used to identify graphs in run manifests.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        for (i, j) in self.edges() {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Largest connected component of an arbitrary edge set, with its nodes
    /// renumbered in ascending order of their old index. Returns the graph and
    /// the old index of every new node.
    pub fn largest_component<I>(n: usize, edges: I) -> Result<(BuildReport, Vec<usize>)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let (offsets, targets, duplicates_dropped) = csr(n, edges)?;
        let labels = component_labels(&offsets, &targets);
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        // Ties go to the component containing the smallest node index.
        let best = (0..k).fold(0, |b, c| if sizes[c] > sizes[b] { c } else { b });
        let keep: Vec<usize> = (0..n).filter(|&i| labels[i] == best).collect();
        let mut new_index = vec![usize::MAX; n];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let mut edges = Vec::new();
        for &old in &keep {
            for &j in &targets[offsets[old]..offsets[old + 1]] {
                let j = j as usize;
                if old < j {
                    edges.push((new_index[old], new_index[j]));
                }
            }
        }
        let mut report = Graph::build(keep.len(), edges)?;
        report.duplicates_dropped = duplicates_dropped;
        Ok((report, keep))
    }
}

fn csr<I>(n: usize, edges: I) -> Result<(Vec<usize>, Vec<u32>, usize)>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if n > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("too many nodes: {n}")));
    }
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    let mut pairs = Vec::new();
    for (a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!(
                "edge ({a}, {b}) out of range for {n} nodes"
            )));
        }
        if a == b {
            return Err(Error::SelfLoop {
                line: 0,
                node: a as i64,
            });
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push(key);
        } else {
            duplicates += 1;
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut deg = vec![0usize; n];
    for &(a, b) in &pairs {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + deg[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; offsets[n]];
    for &(a, b) in &pairs {
        targets[fill[a]] = b as u32;
        fill[a] += 1;
        targets[fill[b]] = a as u32;
        fill[b] += 1;
    }
    for i in 0..n {
        targets[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    Ok((offsets, targets, duplicates))
}

fn component_labels(offsets: &[usize], targets: &[u32]) -> Vec<usize> {
    let n = offsets.len() - 1;
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if labels[s] != usize::MAX {
            continue;
        }
        labels[s] = next;
        queue.push_back(s);
        while let Some(i) = queue.pop_front() {
            for &j in &targets[offsets[i]..offsets[i + 1]] {
                let j = j as usize;
                if labels[j] == usize::MAX {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    labels
}

fn count_components(offsets: &[usize], targets: &[u32]) -> usize {
    component_labels(offsets, targets)
        .into_iter()
        .max()
        .map_or(0, |m| m + 1)
}

fn two_colourable(offsets: &[usize], targets: &[u32]) -> bool {
    let n = offsets.len() - 1;
    let mut colour = vec![u8::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if colour[s] != u8::MAX {
            continue;
        }
        colour[s] = 0;
        queue.push_back(s);
        while let Some(i) = queue.pop_front() {
            for &j in &targets[offsets[i]..offsets[i + 1]] {
                let j = j as usize;
                if colour[j] == u8::MAX {
                    colour[j] = 1 - colour[i];
                    queue.push_back(j);
                } else if colour[j] == colour[i] {
                    return false;
                }
            }
        }
    }
    true
}
