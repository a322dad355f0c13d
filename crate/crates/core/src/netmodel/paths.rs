//! Yen's k-shortest loopless paths by hop count.

use std::collections::{BTreeSet, HashSet, VecDeque};

/// Shortest path by hop count from `source` to `target`, avoiding the
/// removed nodes and edges. Neighbours are explored in adjacency order so the
/// result is deterministic.
fn bfs_path(
    adjacency: &[Vec<usize>],
    source: usize,
    target: usize,
    removed_nodes: &HashSet<usize>,
    removed_edges: &HashSet<(usize, usize)>,
) -> Option<Vec<usize>> {
    if removed_nodes.contains(&source) {
        return None;
    }
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::new();
    seen[source] = true;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        if u == target {
            let mut path = vec![target];
            let mut cur = target;
            while cur != source {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adjacency[u] {
            if seen[v] || removed_nodes.contains(&v) || removed_edges.contains(&(u, v)) {
                continue;
            }
            seen[v] = true;
            prev[v] = u;
            queue.push_back(v);
        }
    }
    None
}

/// Up to `k` loopless paths from `source` to `target`, ordered by hop count
/// (ties broken lexicographically on node indices).
pub fn k_shortest_paths(
    adjacency: &[Vec<usize>],
    source: usize,
    target: usize,
    k: usize,
) -> Vec<Vec<usize>> {
    let mut accepted: Vec<Vec<usize>> = Vec::new();
    if k == 0 || source >= adjacency.len() || target >= adjacency.len() {
        return accepted;
    }
    let Some(first) = bfs_path(adjacency, source, target, &HashSet::new(), &HashSet::new()) else {
        return accepted;
    };
    accepted.push(first);
    // candidates ordered by (length, nodes)
    let mut candidates: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();

    while accepted.len() < k {
        let last = accepted.last().unwrap().clone();
        for spur_idx in 0..last.len() - 1 {
            let spur = last[spur_idx];
            let root = &last[..=spur_idx];
            let mut removed_edges = HashSet::new();
            for p in &accepted {
                if p.len() > spur_idx && &p[..=spur_idx] == root {
                    removed_edges.insert((p[spur_idx], p[spur_idx + 1]));
                }
            }
            let removed_nodes: HashSet<usize> = root[..spur_idx].iter().copied().collect();
            if let Some(spur_path) =
                bfs_path(adjacency, spur, target, &removed_nodes, &removed_edges)
            {
                let mut total = root[..spur_idx].to_vec();
                total.extend(spur_path);
                if !accepted.contains(&total) {
                    candidates.insert((total.len(), total));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => accepted.push(p),
            None => break,
        }
    }
    accepted
}
