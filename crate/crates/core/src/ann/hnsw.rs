//! Single-partition HNSW graph over unit vectors with `1 - dot` distance.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::Vector;

/// Distance paired with a node index, ordered by distance then index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Neighbor {
    pub distance: f64,
    pub node: u32,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Graph {
    pub dim: usize,
    pub ids: Vec<String>,
    /// Row-major `ids.len() * dim`.
    pub vectors: Vec<f64>,
    /// `links[node][layer]` is the neighbor list of `node` on `layer`.
    pub links: Vec<Vec<Vec<u32>>>,
    pub entry: Option<u32>,
    pub positions: HashMap<String, u32>,
}

impl Graph {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            links: Vec::new(),
            entry: None,
            positions: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn vector(&self, node: u32) -> &[f64] {
        let start = node as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    fn level_of(&self, node: u32) -> usize {
        self.links[node as usize].len() - 1
    }

    fn top_level(&self) -> usize {
        self.entry.map_or(0, |e| self.level_of(e))
    }

    pub fn distance_to(&self, query: &[f64], node: u32) -> f64 {
        1.0 - crate::embedding::vector::dot(query, self.vector(node))
    }

    fn neighbor(&self, query: &[f64], node: u32) -> Neighbor {
        Neighbor {
            distance: self.distance_to(query, node),
            node,
        }
    }

    /// Beam search on one layer. Returns up to `ef` nearest nodes, ascending.
    fn search_layer(&self, query: &[f64], entries: &[Neighbor], ef: usize, layer: usize) -> Vec<Neighbor> {
        let mut visited = vec![false; self.len()];
        let mut candidates: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
        let mut results: BinaryHeap<Neighbor> = BinaryHeap::new();
        for &e in entries {
            if !visited[e.node as usize] {
                visited[e.node as usize] = true;
                candidates.push(Reverse(e));
                results.push(e);
            }
        }
        while results.len() > ef {
            results.pop();
        }

        while let Some(Reverse(current)) = candidates.pop() {
            if let Some(worst) = results.peek() {
                if results.len() >= ef && current.distance > worst.distance {
                    break;
                }
            }
            for &n in &self.links[current.node as usize][layer] {
                if visited[n as usize] {
                    continue;
                }
                visited[n as usize] = true;
                let cand = self.neighbor(query, n);
                let admit = results.len() < ef || results.peek().is_some_and(|w| cand < *w);
                if admit {
                    candidates.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    fn greedy_descend(&self, query: &[f64], from_level: usize, to_level: usize) -> Neighbor {
        let mut best = self.neighbor(query, self.entry.expect("nonempty graph"));
        for layer in (to_level..=from_level).rev() {
            loop {
                let mut improved = false;
                for &n in &self.links[best.node as usize][layer] {
                    let cand = self.neighbor(query, n);
                    if cand < best {
                        best = cand;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        best
    }

    pub fn insert(&mut self, id: String, vector: &Vector, m: usize, ef_construction: usize, rng: &mut ChaCha8Rng) {
        debug_assert_eq!(vector.len(), self.dim);
        let node = self.ids.len() as u32;
        let level = sample_level(m, rng);
        self.positions.insert(id.clone(), node);
        self.ids.push(id);
        self.vectors.extend_from_slice(vector.as_slice());
        self.links.push(vec![Vec::new(); level + 1]);

        let Some(entry) = self.entry else {
            self.entry = Some(node);
            return;
        };
        let query: Vec<f64> = vector.as_slice().to_vec();
        let top = self.top_level();
        let mut entries = if level < top {
            vec![self.greedy_descend(&query, top, level + 1)]
        } else {
            vec![self.neighbor(&query, entry)]
        };

        for layer in (0..=level.min(top)).rev() {
            let found = self.search_layer(&query, &entries, ef_construction, layer);
            let max_links = if layer == 0 { 2 * m } else { m };
            let chosen = self.select_neighbors(&found, max_links);
            self.links[node as usize][layer] = chosen.clone();
            for peer in chosen {
                self.links[peer as usize][layer].push(node);
                if self.links[peer as usize][layer].len() > max_links {
                    self.prune(peer, layer, max_links);
                }
            }
            entries = found;
        }
        if level > top {
            self.entry = Some(node);
        }
    }

    /// Diversity heuristic over candidates sorted ascending: a candidate is
    /// kept when it is closer to the base than to every neighbor kept so far.
    /// Discarded candidates then fill any remaining room in order.
    fn select_neighbors(&self, sorted: &[Neighbor], m: usize) -> Vec<u32> {
        let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
        let mut skipped: Vec<Neighbor> = Vec::new();
        for &c in sorted {
            if kept.len() >= m {
                break;
            }
            let cv = self.vector(c.node);
            if kept.iter().all(|k| self.distance_to(cv, k.node) > c.distance) {
                kept.push(c);
            } else {
                skipped.push(c);
            }
        }
        kept.extend(skipped.into_iter().take(m - kept.len()));
        kept.into_iter().map(|n| n.node).collect()
    }

    /// Reselects the neighbors of `node` on `layer` down to `max_links`.
    fn prune(&mut self, node: u32, layer: usize, max_links: usize) {
        let base: Vec<f64> = self.vector(node).to_vec();
        let mut scored: Vec<Neighbor> = self.links[node as usize][layer]
            .iter()
            .map(|&n| self.neighbor(&base, n))
            .collect();
        scored.sort();
        self.links[node as usize][layer] = self.select_neighbors(&scored, max_links);
    }

    /// Nearest `ef` nodes to `query` on the base layer, ascending.
    pub fn search(&self, query: &[f64], ef: usize) -> Vec<Neighbor> {
        if self.entry.is_none() {
            return Vec::new();
        }
        let top = self.top_level();
        let start = if top > 0 {
            self.greedy_descend(query, top, 1)
        } else {
            self.neighbor(query, self.entry.unwrap())
        };
        self.search_layer(query, &[start], ef.max(1), 0)
    }
}

/// Geometric level draw with normalization factor `1 / ln(m)`.
fn sample_level(m: usize, rng: &mut ChaCha8Rng) -> usize {
    let ml = 1.0 / (m as f64).ln();
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    ((-u.ln() * ml).floor() as usize).min(16)
}
