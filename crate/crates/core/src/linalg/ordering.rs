//! Fill-reducing ordering for sparse symmetric factorizations.
//!
//! Minimum degree on the explicit elimination graph. Nodes whose initial degree
//! exceeds `max(16, 10·√n)` are treated as dense: they are removed from the
//! graph up front and ordered last, in index order. Ties between nodes of equal
//! degree are broken by the lowest original index, so the ordering (and the
//! resulting fill) is deterministic.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

/// Dense-node threshold used by [`minimum_degree`].
pub fn dense_degree_threshold(n: usize) -> usize {
    let root = libm::sqrt(n as f64) as usize;
    (10 * root).max(16)
}

/// Returns `perm` with `perm[new] = old`.
///
/// `adjacency[i]` lists the neighbours of `i`; self loops and duplicates are
/// ignored. The graph is assumed symmetric.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let threshold = dense_degree_threshold(n);
    let mut adj: Vec<Vec<usize>> = adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let mut v: Vec<usize> = nb.iter().copied().filter(|&j| j != i).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();

    let mut dense = vec![false; n];
    let mut dense_nodes = Vec::new();
    if n > 1 {
        for i in 0..n {
            if adj[i].len() > threshold {
                dense[i] = true;
                dense_nodes.push(i);
            }
        }
    }
    if !dense_nodes.is_empty() {
        for list in adj.iter_mut() {
            list.retain(|j| !dense[*j]);
        }
        for &d in &dense_nodes {
            adj[d].clear();
        }
    }

    let mut eliminated = dense.clone();
    let mut queue: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        if !dense[i] {
            queue.insert((adj[i].len(), i));
        }
    }

    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        perm.push(v);
        eliminated[v] = true;
        let nbrs = core::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let old_deg = adj[u].len();
            // adj[u] <- (adj[u] ∪ nbrs) \ {u, v}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let x = match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if x != u && x != v && !eliminated[x] {
                    merged.push(x);
                }
            }
            core::mem::swap(&mut adj[u], &mut merged);
            let new_deg = adj[u].len();
            if new_deg != old_deg {
                queue.remove(&(old_deg, u));
                queue.insert((new_deg, u));
            }
        }
    }
    perm.extend(dense_nodes);
    perm
}

/// Inverse permutation: `inv[old] = new`.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}
