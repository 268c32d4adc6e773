use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::sampling::estimate_node_measure;

/// A simple undirected graph stored as sorted neighbor lists, together with
/// its degree-based node measure.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedGraph {
    neighbors: Vec<Vec<u32>>,
    measure: Array1<f64>,
}

impl ObservedGraph {
    /// Builds a graph from an edge list. Duplicate edges and both orientations
    /// collapse to one undirected edge; self-loops are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(Error::domain("graph must have at least one node"));
        }
        if node_count > u32::MAX as usize {
            return Err(Error::domain("too many nodes"));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::domain(format!(
                    "edge ({u},{v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at node {u}")));
            }
            neighbors[u].push(v as u32);
            neighbors[v].push(u as u32);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::from_neighbors(neighbors))
    }

    pub(crate) fn from_neighbors(neighbors: Vec<Vec<u32>>) -> Self {
        let degrees: Vec<usize> = neighbors.iter().map(Vec::len).collect();
        let measure = estimate_node_measure(&degrees);
        ObservedGraph { neighbors, measure }
    }

    /// Builds a graph from a dense 0/1 matrix (nonzero entries are edges).
    pub fn from_dense(adjacency: ArrayView2<f64>) -> Result<Self> {
        let (n, m) = adjacency.dim();
        if n != m {
            return Err(Error::dims("square adjacency", format!("{n}x{m}")));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if adjacency[[i, j]] != adjacency[[j, i]] {
                    return Err(Error::domain(format!("adjacency not symmetric at ({i},{j})")));
                }
                if j > i && adjacency[[i, j]] != 0.0 {
                    edges.push((i, j));
                }
            }
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::domain(format!("nonzero diagonal at node {i}")));
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn measure(&self) -> &Array1<f64> {
        &self.measure
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut a = Array2::zeros((n, n));
        for (u, list) in self.neighbors.iter().enumerate() {
            for &v in list {
                a[[u, v as usize]] = 1.0;
            }
        }
        a
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::domain("not a permutation of the node set"));
        }
        let edges = self.edges().map(|(u, v)| (perm[u], perm[v]));
        Self::from_edges(n, edges)
    }

    /// Sparse product `A * t` for a dense `N x K` matrix.
    pub fn mul_dense(&self, t: ArrayView2<f64>) -> Array2<f64> {
        let (n, k) = t.dim();
        debug_assert_eq!(n, self.node_count());
        let mut out = Array2::zeros((n, k));
        for (u, list) in self.neighbors.iter().enumerate() {
            let mut row = out.row_mut(u);
            for &v in list {
                row += &t.row(v as usize);
            }
        }
        out
    }
}
