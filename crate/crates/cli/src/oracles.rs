//! Slow, obviously-correct reference computations used by `verify`.

/// Every demand vector in `[0, n)^k`, lexicographic.
pub fn all_demand_vectors(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n).map(move |f| {
                    let mut v = v.clone();
                    v.push(f);
                    v
                })
            })
            .collect();
    }
    out
}

/// `t`-subsets of `0..k` from bitmasks, sorted lexicographically.
pub fn bitmask_subsets(k: usize, t: usize) -> Vec<Vec<usize>> {
    assert!(k < 32, "bitmask oracle needs k < 32");
    let mut out: Vec<Vec<usize>> = (0u32..1 << k)
        .filter(|m| m.count_ones() as usize == t)
        .map(|m| (0..k).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// Maximum matching size by trying every assignment.
pub fn brute_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn go(adj: &[Vec<usize>], used: &mut [bool], i: usize) -> usize {
        if i == adj.len() {
            return 0;
        }
        let mut best = go(adj, used, i + 1);
        for &v in &adj[i] {
            if !used[v] {
                used[v] = true;
                best = best.max(1 + go(adj, used, i + 1));
                used[v] = false;
            }
        }
        best
    }
    go(adj, &mut vec![false; n_right], 0)
}

/// Lower convex envelope at `m` as the minimum over all points at `m` and
/// all chords spanning `m`; clamps outside the range of the points.
pub fn chord_envelope(points: &[(f64, f64)], m: f64) -> f64 {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let m = m.clamp(lo, hi);
    let mut best = f64::INFINITY;
    for a in points {
        if a.0 == m {
            best = best.min(a.1);
        }
        for b in points {
            if a.0 < m && m < b.0 {
                best = best.min(a.1 + (b.1 - a.1) * (m - a.0) / (b.0 - a.0));
            }
        }
    }
    best
}
