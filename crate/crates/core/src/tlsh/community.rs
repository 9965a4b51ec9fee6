//! Greedy agglomerative modularity maximization (Clauset–Newman–Moore).
//!
//! Starting from singletons, the adjacent pair of communities with the
//! largest modularity gain is merged until no merge has a positive gain.
//! Gains live in one sparse row per community. Each community caches its
//! best entry, and a global max-heap holds those cached bests; entries that
//! no longer match a community's cache are skipped when popped.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rustc_hash::FxHashMap;

use super::graph::SimilarityGraph;

#[derive(Debug, Clone, Copy)]
struct Merge {
    gain: f64,
    a: u32,
    b: u32,
}

impl PartialEq for Merge {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Merge {}

impl PartialOrd for Merge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Merge {
    // Largest gain first; equal gains go to the lexicographically lowest pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

fn merge_entry(gain: f64, x: u32, y: u32) -> Merge {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    Merge { gain, a, b }
}

/// Best entry of one row: largest gain, then lowest partner.
fn row_best(row: &FxHashMap<u32, f64>) -> Option<(u32, f64)> {
    row.iter()
        .map(|(&p, &g)| (p, g))
        .max_by(|x, y| x.1.total_cmp(&y.1).then_with(|| y.0.cmp(&x.0)))
}

fn beats(candidate: (u32, f64), current: (u32, f64)) -> bool {
    match candidate.1.total_cmp(&current.1) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => candidate.0 < current.0,
    }
}

/// Adjacency of the subgraph induced by `nodes`, in local indices.
fn induced_adjacency(g: &SimilarityGraph, nodes: &[u32]) -> Vec<Vec<u32>> {
    let local: HashMap<u32, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    nodes
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .filter_map(|w| local.get(w).copied())
                .collect()
        })
        .collect()
}

/// Splits `component` into communities at the modularity-maximal point of
/// the greedy merge sequence, computed on the induced subgraph. Communities
/// are returned sorted, ordered by smallest member. A component with no
/// internal edges comes back as singletons.
pub fn greedy_modularity_split(g: &SimilarityGraph, component: &[u32]) -> Vec<Vec<u32>> {
    let mut nodes = component.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let adj = induced_adjacency(g, &nodes);
    let two_m: usize = adj.iter().map(Vec::len).sum();
    if two_m == 0 {
        return nodes.into_iter().map(|v| vec![v]).collect();
    }
    let inv_two_m = 1.0 / two_m as f64;

    let k = nodes.len();
    // a_i: fraction of edge ends attached to community i.
    let mut share: Vec<f64> = adj.iter().map(|l| l.len() as f64 * inv_two_m).collect();
    let mut rows: Vec<FxHashMap<u32, f64>> = Vec::with_capacity(k);
    for (i, list) in adj.iter().enumerate() {
        let mut row = FxHashMap::with_capacity_and_hasher(list.len(), Default::default());
        for &j in list {
            // Each edge contributes e_ij = e_ji = 1/(2m).
            row.insert(j, 2.0 * (inv_two_m - share[i] * share[j as usize]));
        }
        rows.push(row);
    }
    let mut best: Vec<Option<(u32, f64)>> = rows.iter().map(row_best).collect();
    let mut heap: BinaryHeap<Merge> = best
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|(p, gain)| merge_entry(gain, i as u32, p)))
        .collect();
    let mut alive = vec![true; k];
    let mut members: Vec<Vec<u32>> = (0..k as u32).map(|i| vec![i]).collect();
    let mut stale = Vec::new();

    while let Some(Merge { gain, a, b }) = heap.pop() {
        if !alive[a as usize] || !alive[b as usize] {
            continue;
        }
        let current = |x: u32, y: u32| {
            matches!(best[x as usize], Some((p, g)) if p == y && g.to_bits() == gain.to_bits())
        };
        if !current(a, b) && !current(b, a) {
            continue;
        }
        if gain <= 0.0 {
            break;
        }

        // Fold the smaller row into the larger one.
        let (keep, gone) = if rows[a as usize].len() >= rows[b as usize].len() {
            (a, b)
        } else {
            (b, a)
        };
        let gone_row = std::mem::take(&mut rows[gone as usize]);
        let mut keep_row = std::mem::take(&mut rows[keep as usize]);
        keep_row.remove(&gone);
        let (share_keep, share_gone) = (share[keep as usize], share[gone as usize]);

        for (&other, &g_gone) in &gone_row {
            if other == keep {
                continue;
            }
            let updated = match keep_row.get(&other) {
                Some(&g_keep) => g_keep + g_gone,
                None => g_gone - 2.0 * share_keep * share[other as usize],
            };
            keep_row.insert(other, updated);
        }
        for (&other, g_keep) in keep_row.iter_mut() {
            if !gone_row.contains_key(&other) {
                *g_keep -= 2.0 * share_gone * share[other as usize];
            }
        }
        for (&other, &updated) in &keep_row {
            let row = &mut rows[other as usize];
            row.remove(&gone);
            row.insert(keep, updated);
            match best[other as usize] {
                Some((p, _)) if p == keep || p == gone => stale.push(other),
                Some(cur) if !beats((keep, updated), cur) => {}
                _ => {
                    best[other as usize] = Some((keep, updated));
                    heap.push(merge_entry(updated, other, keep));
                }
            }
        }
        for other in stale.drain(..) {
            best[other as usize] = row_best(&rows[other as usize]);
            if let Some((p, g)) = best[other as usize] {
                heap.push(merge_entry(g, other, p));
            }
        }
        best[keep as usize] = row_best(&keep_row);
        if let Some((p, g)) = best[keep as usize] {
            heap.push(merge_entry(g, keep, p));
        }
        best[gone as usize] = None;
        rows[keep as usize] = keep_row;
        share[keep as usize] += share_gone;
        share[gone as usize] = 0.0;
        alive[gone as usize] = false;
        let moved = std::mem::take(&mut members[gone as usize]);
        members[keep as usize].extend(moved);
    }

    let mut out: Vec<Vec<u32>> = members
        .into_iter()
        .zip(&alive)
        .filter(|(_, &live)| live)
        .map(|(m, _)| {
            let mut c: Vec<u32> = m.into_iter().map(|i| nodes[i as usize]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort_unstable_by_key(|c| c[0]);
    out
}

/// Modularity `Σ_c (e_c / m - (d_c / 2m)^2)` of `communities` on the
/// subgraph induced by their union. Zero when that subgraph has no edges.
pub fn modularity(g: &SimilarityGraph, communities: &[Vec<u32>]) -> f64 {
    let mut label: HashMap<u32, usize> = HashMap::new();
    for (c, members) in communities.iter().enumerate() {
        for &v in members {
            label.insert(v, c);
        }
    }
    let mut inside = vec![0usize; communities.len()];
    let mut degree = vec![0usize; communities.len()];
    let mut two_m = 0usize;
    for (&v, &c) in &label {
        for w in g.neighbors(v) {
            if let Some(&cw) = label.get(w) {
                two_m += 1;
                degree[c] += 1;
                if cw == c {
                    inside[c] += 1;
                }
            }
        }
    }
    if two_m == 0 {
        return 0.0;
    }
    let m = two_m as f64 / 2.0;
    inside
        .iter()
        .zip(&degree)
        .map(|(&e2, &d)| (e2 as f64 / 2.0) / m - (d as f64 / two_m as f64).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique_edges(nodes: std::ops::Range<u32>) -> Vec<(u32, u32)> {
        let v: Vec<u32> = nodes.collect();
        let mut e = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i + 1..] {
                e.push((a, b));
            }
        }
        e
    }

    #[test]
    fn triangle_stays_whole() {
        let g = SimilarityGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(greedy_modularity_split(&g, &[0, 1, 2]), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn two_leaf_star_stays_whole() {
        let g = SimilarityGraph::from_edges(3, &[(0, 1), (0, 2)]);
        assert_eq!(greedy_modularity_split(&g, &[0, 1, 2]), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn bridged_cliques_split() {
        let mut e = clique_edges(0..10);
        e.extend(clique_edges(10..20));
        e.push((9, 10));
        let g = SimilarityGraph::from_edges(20, &e);
        let all: Vec<u32> = (0..20).collect();
        let split = greedy_modularity_split(&g, &all);
        assert_eq!(split, vec![(0..10).collect::<Vec<_>>(), (10..20).collect()]);
        assert!(modularity(&g, &split) > modularity(&g, &[all]));
    }

    #[test]
    fn modularity_closed_forms() {
        let g = SimilarityGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!((modularity(&g, &[vec![0, 1, 2]]) - 0.0).abs() < 1e-12);
        assert!((modularity(&g, &[vec![0], vec![1], vec![2]]) + 1.0 / 3.0).abs() < 1e-12);
        assert!((modularity(&g, &[vec![0, 1], vec![2]]) + 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn respects_induced_subgraph() {
        // Outside node 4 is connected to everything but is not in the component.
        let mut e = clique_edges(0..4);
        e.extend((0..4).map(|v| (v, 4)));
        let g = SimilarityGraph::from_edges(5, &e);
        assert_eq!(greedy_modularity_split(&g, &[3, 1, 2, 0]), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn edgeless_component_gives_singletons() {
        let g = SimilarityGraph::from_edges(3, &[]);
        assert_eq!(greedy_modularity_split(&g, &[2, 0]), vec![vec![0], vec![2]]);
    }
}
