use crate::scalar::Scalar;

/// Undirected weighted graph over nodes `0..n` stored as adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    adj: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Add an undirected edge. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize, w: T) {
        if a == b {
            return;
        }
        self.adj[a].push((b, w));
        self.adj[b].push((a, w));
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> T {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(a, b, w)` with `a < b`, ordered.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let mut out: Vec<(usize, usize, T)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&(b, _)| a < b).map(move |&(b, w)| (a, b, w)))
            .collect();
        out.sort_by_key(|x| (x.0, x.1));
        out
    }

    pub(crate) fn sort_adjacency(&mut self) {
        for ns in &mut self.adj {
            ns.sort_by_key(|&(b, _)| b);
        }
    }

    /// Subgraph induced by `nodes`; local node `i` is `nodes[i]`.
    pub fn induced(&self, nodes: &[usize]) -> WeightedGraph<T> {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &n) in nodes.iter().enumerate() {
            local[n] = i;
        }
        let adj = nodes
            .iter()
            .map(|&n| {
                self.adj[n]
                    .iter()
                    .filter(|&&(m, _)| local[m] != usize::MAX)
                    .map(|&(m, w)| (local[m], w))
                    .collect()
            })
            .collect();
        WeightedGraph { adj }
    }

    /// Connected components, each sorted ascending, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.len() <= 1 || self.components().len() == 1
    }

    /// Total weight of edges with exactly one endpoint in `in_a`.
    pub fn cut_weight(&self, in_a: &[bool]) -> T {
        self.edges()
            .into_iter()
            .filter(|&(a, b, _)| in_a[a] != in_a[b])
            .map(|(_, _, w)| w)
            .sum()
    }
}

/// `cut · (1/|A| + 1/|B|)`.
pub fn ratio_cut_value<T: Scalar>(cut: T, size_a: usize, size_b: usize) -> T {
    cut * (T::one() / T::from_count(size_a) + T::one() / T::from_count(size_b))
}
