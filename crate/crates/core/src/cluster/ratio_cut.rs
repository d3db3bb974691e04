//! Spectral Ratio-Cut bipartition: Fiedler vector plus a sweep cut.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::eigen::{fiedler_power, laplacian, symmetric_eigen};
use super::graph::{ratio_cut_value, WeightedGraph};

/// Components up to this size use the dense eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 2_000;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
/// Low Laplacian eigenvectors swept on the dense path.
pub const SPECTRAL_CANDIDATES: usize = 3;
pub const MAX_REFINE_PASSES: usize = 20;

/// Result of a two-way split. `a` always contains node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Bipartition<T> {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// Ratio-Cut objective `cut(A,B) · (1/|A| + 1/|B|)`.
    pub cut_value: T,
    /// Total weight of crossing edges.
    pub cut_weight: T,
    /// Best single-node split seen in the sweep, for auditing.
    pub best_trivial: T,
}

/// Bipartition a connected graph by sorting nodes on the Fiedler vector of
/// the unnormalized Laplacian and taking the prefix split with the smallest
/// Ratio Cut. Ties prefer the more balanced split, then the split whose
/// `A` side sorts first.
///
/// On the dense path the next two Laplacian eigenvectors are swept as well
/// (the Fiedler vector is arbitrary within a repeated eigenvalue) and the
/// best sweep is polished with [`refine`].
pub fn ratio_cut_bipartition<T: Scalar>(g: &WeightedGraph<T>) -> Result<Bipartition<T>> {
    let n = g.len();
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let vectors = if n <= DENSE_EIGEN_LIMIT {
        let eig = symmetric_eigen(&laplacian(g));
        eig.vectors.into_iter().skip(1).take(SPECTRAL_CANDIDATES).collect()
    } else {
        vec![fiedler_power(g, T::lit(POWER_TOL), POWER_MAX_ITER)]
    };
    let mut best: Option<Bipartition<T>> = None;
    for v in &vectors {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
        let bp = sweep(g, &order);
        if best.as_ref().is_none_or(|b| bp.cut_value < b.cut_value) {
            best = Some(bp);
        }
    }
    let best = best.expect("n >= 2");
    Ok(if n <= DENSE_EIGEN_LIMIT { refine(g, best) } else { best })
}

/// Kernighan-Lin style local search. Each pass moves every node once,
/// always taking the best move among unmoved nodes even if it raises the
/// Ratio Cut, then keeps the best prefix of the pass. Passes repeat while
/// they improve by more than the tie tolerance. Never empties a side.
pub fn refine<T: Scalar>(g: &WeightedGraph<T>, start: Bipartition<T>) -> Bipartition<T> {
    let n = g.len();
    let mut in_a = vec![false; n];
    for &i in &start.a {
        in_a[i] = true;
    }
    let mut size_a = start.a.len();
    let mut cut = start.cut_weight;
    let mut current = ratio_cut_value(cut, size_a, n - size_a);
    for _ in 0..MAX_REFINE_PASSES {
        let mut moved = vec![false; n];
        let mut trial = in_a.clone();
        let (mut t_size, mut t_cut) = (size_a, cut);
        let mut history = Vec::with_capacity(n);
        let mut best_prefix = (current, 0usize, cut, size_a);
        for step in 1..=n {
            let mut pick: Option<(T, usize, T)> = None;
            for v in (0..n).filter(|&v| !moved[v]) {
                let (from, to) = if trial[v] { (t_size, n - t_size) } else { (n - t_size, t_size) };
                if from == 1 {
                    continue;
                }
                let (mut same, mut other) = (T::zero(), T::zero());
                for &(u, w) in g.neighbors(v) {
                    if trial[u] == trial[v] {
                        same = same + w;
                    } else {
                        other = other + w;
                    }
                }
                let new_cut = t_cut + same - other;
                let rc = ratio_cut_value(new_cut, from - 1, to + 1);
                if pick.is_none_or(|(b, _, _)| rc < b) {
                    pick = Some((rc, v, new_cut));
                }
            }
            let Some((rc, v, new_cut)) = pick else { break };
            if trial[v] {
                t_size -= 1;
            } else {
                t_size += 1;
            }
            trial[v] = !trial[v];
            moved[v] = true;
            t_cut = new_cut;
            history.push(v);
            if rc < best_prefix.0 {
                best_prefix = (rc, step, new_cut, t_size);
            }
        }
        let (rc, steps, new_cut, new_size) = best_prefix;
        if current - rc <= T::tie_eps() * current.abs().max(T::one()) {
            break;
        }
        for &v in &history[..steps] {
            in_a[v] = !in_a[v];
        }
        cut = new_cut;
        size_a = new_size;
        current = rc;
    }
    let a: Vec<usize> = (0..n).filter(|&i| in_a[i]).collect();
    let b: Vec<usize> = (0..n).filter(|&i| !in_a[i]).collect();
    let (a, b) = canonical_sides(&a, &b);
    let mut mask = vec![false; n];
    for &i in &a {
        mask[i] = true;
    }
    let cut_weight = g.cut_weight(&mask);
    Bipartition {
        cut_value: ratio_cut_value(cut_weight, a.len(), b.len()),
        cut_weight,
        best_trivial: start.best_trivial,
        a,
        b,
    }
}

/// Best prefix split of `order`.
pub fn sweep<T: Scalar>(g: &WeightedGraph<T>, order: &[usize]) -> Bipartition<T> {
    let n = g.len();
    let mut in_a = vec![false; n];
    let mut cut = T::zero();
    let mut best: Option<(T, usize)> = None;
    let mut best_trivial = T::infinity();
    let eps = T::tie_eps();
    let mut candidates: Vec<(T, usize)> = Vec::with_capacity(n - 1);
    for (k, &v) in order.iter().take(n - 1).enumerate() {
        let mut to_a = T::zero();
        let mut deg = T::zero();
        for &(u, w) in g.neighbors(v) {
            deg = deg + w;
            if in_a[u] {
                to_a = to_a + w;
            }
        }
        cut = cut + deg - T::lit(2.0) * to_a;
        in_a[v] = true;
        let size = k + 1;
        let rc = ratio_cut_value(cut, size, n - size);
        if size == 1 || size == n - 1 {
            best_trivial = best_trivial.min(rc);
        }
        candidates.push((rc, size));
        best = match best {
            Some((b, _)) if rc >= b => best,
            _ => Some((rc, size)),
        };
    }
    let (best_rc, _) = best.expect("n >= 2");
    let tol = eps * best_rc.abs().max(T::one());

    // Among near-ties, prefer balance, then lexicographically smallest A.
    let mut winner: Option<(usize, Vec<usize>, Vec<usize>)> = None;
    for &(rc, size) in &candidates {
        if rc - best_rc > tol {
            continue;
        }
        let (a, b) = canonical_sides(&order[..size], &order[size..]);
        let balance = a.len().min(b.len());
        let better = match &winner {
            None => true,
            Some((wb, wa, _)) => balance > *wb || (balance == *wb && a < *wa),
        };
        if better {
            winner = Some((balance, a, b));
        }
    }
    let (_, a, b) = winner.expect("at least one candidate");
    let mut mask = vec![false; n];
    for &i in &a {
        mask[i] = true;
    }
    let cut_weight = g.cut_weight(&mask);
    Bipartition {
        cut_value: ratio_cut_value(cut_weight, a.len(), b.len()),
        cut_weight,
        best_trivial,
        a,
        b,
    }
}

fn canonical_sides(x: &[usize], y: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut x = x.to_vec();
    let mut y = y.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    if x.first() <= y.first() || y.is_empty() {
        (x, y)
    } else {
        (y, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cliques_split_on_bridge() {
        let mut g = WeightedGraph::<f64>::new(6);
        for (a, b) in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)] {
            g.add_edge(a, b, 1.0);
        }
        g.add_edge(2, 3, 0.8);
        let bp = ratio_cut_bipartition(&g).unwrap();
        assert_eq!(bp.a, vec![0, 1, 2]);
        assert_eq!(bp.b, vec![3, 4, 5]);
        assert!((bp.cut_value - 0.8 * (2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn k4_prefers_balanced_split() {
        let mut g = WeightedGraph::<f64>::new(4);
        for a in 0..4 {
            for b in a + 1..4 {
                g.add_edge(a, b, 1.0);
            }
        }
        let bp = ratio_cut_bipartition(&g).unwrap();
        assert_eq!(bp.a.len(), 2);
        assert_eq!(bp.a[0], 0);
        assert!((bp.cut_value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_disconnected_and_tiny() {
        let g = WeightedGraph::<f64>::new(3);
        assert!(matches!(ratio_cut_bipartition(&g), Err(Error::Disconnected)));
        let g = WeightedGraph::<f64>::new(1);
        assert!(matches!(ratio_cut_bipartition(&g), Err(Error::TooSmall(1))));
    }

    #[test]
    fn works_in_single_precision() {
        let mut g = WeightedGraph::<f32>::new(4);
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 0.1);
        g.add_edge(2, 3, 1.0);
        let bp = ratio_cut_bipartition(&g).unwrap();
        assert_eq!(bp.a, vec![0, 1]);
    }
}
