//! All-pairs shortest paths on weighted neighbor graphs.
//!
//! Dense fields up to [`FW_MAX_POINTS`] nodes use a blocked Floyd–Warshall
//! that parallelizes over rows; larger graphs run one binary-heap Dijkstra
//! per source. Missing edges and disconnected pairs are `f64::INFINITY`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest node count routed to Floyd–Warshall by [`ApspMethod::Auto`].
pub const FW_MAX_POINTS: usize = 3000;

const BLOCK: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApspMethod {
    #[default]
    Auto,
    FloydWarshall,
    Dijkstra,
}

/// Undirected weighted graph in compressed adjacency form.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl Graph {
    /// Builds a graph from per-node neighbor lists and a weight callback.
    /// Infinite weights are dropped.
    pub fn from_neighbors<F>(neighbors: &[Vec<usize>], mut weight: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = neighbors.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                let w = weight(i, j);
                if w.is_finite() {
                    targets.push(j);
                    weights.push(w);
                }
            }
            offsets.push(targets.len());
        }
        Self {
            n,
            offsets,
            targets,
            weights,
        }
    }

    /// Builds a graph from an edge-weight vector aligned with `neighbors`
    /// (one weight per listed neighbor, in order).
    pub fn from_edge_weights(neighbors: &[Vec<usize>], edge_weights: &[Vec<f64>]) -> Self {
        Self::from_neighbors(neighbors, {
            let mut cursor: Vec<usize> = vec![0; neighbors.len()];
            move |i, _| {
                let w = edge_weights[i][cursor[i]];
                cursor[i] += 1;
                w
            }
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// Dense matrix with edge weights, zero diagonal and +∞ elsewhere.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![f64::INFINITY; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
            for (j, w) in self.edges(i) {
                let cell = &mut d[i * n + j];
                *cell = cell.min(w);
            }
        }
        d
    }
}

/// All-pairs distance matrix, row-major.
pub fn shortest_paths(graph: &Graph, method: ApspMethod) -> Vec<f64> {
    let method = match method {
        ApspMethod::Auto if graph.len() <= FW_MAX_POINTS => ApspMethod::FloydWarshall,
        ApspMethod::Auto => ApspMethod::Dijkstra,
        m => m,
    };
    match method {
        ApspMethod::FloydWarshall => {
            let mut d = graph.dense();
            floyd_warshall_blocked(&mut d, graph.len());
            d
        }
        _ => dijkstra_all(graph),
    }
}

/// Textbook triple loop, kept as the reference implementation.
pub fn floyd_warshall_naive(d: &mut [f64], n: usize) {
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
}

#[inline]
fn relax_row(row: &mut [f64], pivots: std::ops::Range<usize>, panel: &[f64], n: usize) {
    let k0 = pivots.start;
    for k in pivots {
        let dik = row[k];
        if dik == f64::INFINITY {
            continue;
        }
        let pk = &panel[(k - k0) * n..(k - k0 + 1) * n];
        for (r, p) in row.iter_mut().zip(pk) {
            let via = dik + p;
            if via < *r {
                *r = via;
            }
        }
    }
}

/// Floyd–Warshall over pivot blocks of [`BLOCK`] nodes.
///
/// For each block `K` the rows of `K` are closed first (their pivots are
/// their own rows), then copied into a panel that every other row relaxes
/// against in parallel. Row `i` only ever reads its own entries and the
/// panel, so rows are independent within a block.
pub fn floyd_warshall_blocked(d: &mut [f64], n: usize) {
    let mut panel = Vec::with_capacity(BLOCK * n);
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + BLOCK).min(n);
        for k in k0..k1 {
            let (head, tail) = d.split_at_mut(k * n);
            let (pivot, tail) = tail.split_at_mut(n);
            let relax = |row: &mut [f64]| {
                let dik = row[k];
                if dik == f64::INFINITY {
                    return;
                }
                for (r, p) in row.iter_mut().zip(pivot.iter()) {
                    let via = dik + p;
                    if via < *r {
                        *r = via;
                    }
                }
            };
            for i in k0..k {
                relax(&mut head[i * n..(i + 1) * n]);
            }
            for i in (k + 1)..k1 {
                relax(&mut tail[(i - k - 1) * n..(i - k) * n]);
            }
        }
        panel.clear();
        panel.extend_from_slice(&d[k0 * n..k1 * n]);
        d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if i < k0 || i >= k1 {
                relax_row(row, k0..k1, &panel, n);
            }
        });
        k0 = k1;
    }
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances from `src`.
pub fn dijkstra(graph: &Graph, src: usize, out: &mut [f64]) {
    out.fill(f64::INFINITY);
    out[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(State {
        dist: 0.0,
        node: src,
    });
    while let Some(State { dist, node }) = heap.pop() {
        if dist > out[node] {
            continue;
        }
        for (j, w) in graph.edges(node) {
            let nd = dist + w;
            if nd < out[j] {
                out[j] = nd;
                heap.push(State { dist: nd, node: j });
            }
        }
    }
}

pub fn dijkstra_all(graph: &Graph) -> Vec<f64> {
    let n = graph.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| dijkstra(graph, i, row));
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[allow(clippy::needless_range_loop)]
    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(p) {
                    let x = rng.gen_range(0.01..2.0);
                    w[i][j] = x;
                    w[j][i] = x;
                }
            }
        }
        let nb: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|j| w[i][*j].is_finite()).collect())
            .collect();
        Graph::from_neighbors(&nb, |i, j| w[i][j])
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        for (x, y) in a.iter().zip(b) {
            if x.is_infinite() || y.is_infinite() {
                assert_eq!(x, y);
            } else {
                assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn blocked_matches_naive_and_dijkstra() {
        // 150 nodes spans three pivot blocks, the last one partial
        for (seed, p) in [(1, 0.03), (2, 0.1), (3, 0.01)] {
            let g = random_graph(150, p, seed);
            let mut naive = g.dense();
            floyd_warshall_naive(&mut naive, g.len());
            let blocked = shortest_paths(&g, ApspMethod::FloydWarshall);
            let dij = shortest_paths(&g, ApspMethod::Dijkstra);
            assert_close(&blocked, &naive);
            assert_close(&dij, &naive);
        }
    }

    #[test]
    fn disconnected_pairs_stay_infinite() {
        let nb = vec![vec![1], vec![0], vec![]];
        let g = Graph::from_neighbors(&nb, |_, _| 1.0);
        let d = shortest_paths(&g, ApspMethod::Auto);
        assert_eq!(d[1], 1.0);
        assert_eq!(d[2], f64::INFINITY);
        assert_eq!(d[8], 0.0);
    }

    #[test]
    fn edge_weight_vectors_follow_neighbor_order() {
        let nb = vec![vec![1, 2], vec![0], vec![0]];
        let g = Graph::from_edge_weights(&nb, &[vec![1.0, 5.0], vec![1.0], vec![5.0]]);
        let d = shortest_paths(&g, ApspMethod::Auto);
        assert_eq!(d[3 + 2], 6.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn methods_agree(n in 1usize..90, p in 0.0f64..0.3, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let a = shortest_paths(&g, ApspMethod::FloydWarshall);
            let b = shortest_paths(&g, ApspMethod::Dijkstra);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x == y || (x - y).abs() <= 1e-12);
            }
        }
    }
}
