use crate::corpus::Pair;
use crate::eval::BlockingPartition;

/// Simple undirected graph on record indices `0..n`, in CSR form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SimilarityGraph {
    /// Self-loops and repeated edges are dropped.
    pub fn from_edges(n: usize, edges: &[Pair]) -> Self {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend(list);
            offsets.push(neighbors.len());
        }
        SimilarityGraph { offsets, neighbors }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.neighbors(v).len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// Connected components; isolated nodes become singleton blocks.
pub fn connected_components(g: &SimilarityGraph) -> BlockingPartition {
    let n = g.n();
    let mut uf = UnionFind::new(n);
    for v in 0..n as u32 {
        for &w in g.neighbors(v) {
            if v < w {
                uf.union(v, w);
            }
        }
    }
    let roots: Vec<u32> = (0..n as u32).map(|v| uf.find(v)).collect();
    BlockingPartition::from_labels(&roots)
}

/// Components of the subgraph induced by `nodes`, each sorted, ordered by
/// smallest member.
pub fn induced_components(g: &SimilarityGraph, nodes: &[u32]) -> Vec<Vec<u32>> {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let local = |v: u32| sorted.binary_search(&v).ok();
    let mut uf = UnionFind::new(sorted.len());
    for (i, &v) in sorted.iter().enumerate() {
        for &w in g.neighbors(v) {
            if let Some(j) = local(w) {
                if i < j {
                    uf.union(i as u32, j as u32);
                }
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    let mut order = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let r = uf.find(i as u32);
        by_root
            .entry(r)
            .or_insert_with(|| {
                order.push(r);
                Vec::new()
            })
            .push(v);
    }
    order.into_iter().map(|r| by_root.remove(&r).unwrap()).collect()
}
