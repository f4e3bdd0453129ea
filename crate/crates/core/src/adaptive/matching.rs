//! Maximum bipartite matching (Hopcroft–Karp).

use std::collections::VecDeque;

const INF: usize = usize::MAX;

/// Maximum matching between `adj.len()` left vertices and `n_right` right
/// vertices. Returns, for every left vertex, its matched right vertex.
///
/// Deterministic: neighbours are tried in the order given.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut left_match = vec![None; n_left];
    let mut right_match: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![INF; n_left];

    loop {
        // layered BFS from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if left_match[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match right_match[v] {
                    None => found = true,
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        for u in 0..n_left {
            if left_match[u].is_none() {
                augment(u, adj, &mut left_match, &mut right_match, &mut dist);
            }
        }
    }
    left_match
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    left_match: &mut [Option<usize>],
    right_match: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let ok = match right_match[v] {
            None => true,
            Some(w) => dist[w] == dist[u] + 1 && augment(w, adj, left_match, right_match, dist),
        };
        if ok {
            left_match[u] = Some(v);
            right_match[v] = Some(u);
            return true;
        }
    }
    dist[u] = INF;
    false
}

pub fn matching_size(m: &[Option<usize>]) -> usize {
    m.iter().flatten().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        assert_eq!(matching_size(&hopcroft_karp(&[], 3)), 0);
        let adj = vec![vec![0, 1], vec![0], vec![1]];
        assert_eq!(matching_size(&hopcroft_karp(&adj, 2)), 2);
        // greedy would take 0-0 and block 1
        let adj = vec![vec![0, 1], vec![0]];
        let m = hopcroft_karp(&adj, 2);
        assert_eq!(m, vec![Some(1), Some(0)]);
    }

    #[test]
    fn result_is_a_matching() {
        let adj = vec![vec![0, 2], vec![0, 1], vec![1, 2], vec![2], vec![]];
        let m = hopcroft_karp(&adj, 3);
        assert_eq!(matching_size(&m), 3);
        let mut used = [false; 3];
        for (u, v) in m.iter().enumerate() {
            if let Some(v) = *v {
                assert!(adj[u].contains(&v));
                assert!(!used[v]);
                used[v] = true;
            }
        }
    }
}
