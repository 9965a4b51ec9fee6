//! Transitive LSH blocking.
//!
//! Records are shingled and minhashed, banded signatures link records into a
//! similarity graph, and its connected components become blocks. Any block
//! above the size cap is split into modularity communities, repeatedly, until
//! every block fits. A block the greedy split cannot divide is cut into
//! `ceil(size / cap)` chunks of nodes ordered by descending degree.

mod community;
mod graph;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use community::{greedy_modularity_split, modularity};
pub use graph::{connected_components, induced_components, SimilarityGraph};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::eval::{BlockingPartition, Timings};
use crate::minhash::{band_and_bucket, band_ranges, minhash_signatures, MinHashFamily};
use crate::shingle::{build_vocabulary, shingle_dataset, IncidenceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlshParams {
    pub shingle_k: usize,
    pub permutations: usize,
    pub bands: usize,
    pub max_block: usize,
    pub seed: u64,
}

impl Default for TlshParams {
    fn default() -> Self {
        TlshParams {
            shingle_k: 5,
            permutations: 100,
            bands: 26,
            max_block: 500,
            seed: 0,
        }
    }
}

impl TlshParams {
    /// k = 5, p = 100, b = 26, t = 500.
    pub fn rldata(seed: u64) -> Self {
        TlshParams {
            seed,
            ..Default::default()
        }
    }

    /// As [`TlshParams::rldata`] with b = 22.
    pub fn noisy(seed: u64) -> Self {
        TlshParams {
            bands: 22,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shingle_k == 0 {
            return Err(Error::Param("shingle length must be at least 1".into()));
        }
        if self.max_block == 0 {
            return Err(Error::Param("max block size must be at least 1".into()));
        }
        band_ranges(self.permutations, self.bands).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct TlshOutput {
    pub partition: BlockingPartition,
    pub timings: Timings,
    pub vocab_size: usize,
    pub edges: usize,
    /// Blocks before any community splitting.
    pub components: usize,
}

pub fn tlsh_block(ds: &Dataset, params: &TlshParams) -> Result<TlshOutput> {
    params.validate()?;
    let n = ds.n();
    if n == 0 {
        return Err(Error::Param("dataset is empty".into()));
    }
    let mut timings = Timings::default();

    let bags = timings.time("shingle", || shingle_dataset(ds, params.shingle_k))?;
    let (vocab_size, sig) = timings.time("minhash", || -> Result<_> {
        let vocab = build_vocabulary(&bags, n)?;
        let incidence = IncidenceMatrix::from_bags(&vocab, &bags);
        let family = MinHashFamily::new(params.permutations, params.seed)?;
        Ok((vocab.len(), minhash_signatures(&incidence, &family)))
    })?;
    let edges = timings.time("band", || band_and_bucket(&sig, params.bands))?;
    let (graph, components) = timings.time("graph", || {
        let g = SimilarityGraph::from_edges(n, edges.edges());
        let c = connected_components(&g);
        (g, c)
    });
    let partition = timings.time("split", || {
        split_oversized(&graph, components.blocks(), params.max_block)
    })?;

    Ok(TlshOutput {
        partition,
        timings,
        vocab_size,
        edges: edges.len(),
        components: components.num_blocks(),
    })
}

/// Splits every block larger than `cap` until all blocks fit.
pub fn split_oversized(
    g: &SimilarityGraph,
    blocks: Vec<Vec<u32>>,
    cap: usize,
) -> Result<BlockingPartition> {
    if cap == 0 {
        return Err(Error::Param("max block size must be at least 1".into()));
    }
    let (mut pending, mut done): (Vec<_>, Vec<_>) = blocks.into_iter().partition(|b| b.len() > cap);
    while !pending.is_empty() {
        let parts: Vec<Vec<Vec<u32>>> = pending.par_iter().map(|b| split_once(g, b, cap)).collect();
        pending = Vec::new();
        for part in parts.into_iter().flatten() {
            if part.len() > cap {
                pending.push(part);
            } else {
                done.push(part);
            }
        }
    }
    BlockingPartition::from_blocks(g.n(), &done)
}

/// One refinement step; always returns at least two parts.
fn split_once(g: &SimilarityGraph, block: &[u32], cap: usize) -> Vec<Vec<u32>> {
    let pieces = induced_components(g, block);
    if pieces.len() > 1 {
        return pieces;
    }
    let communities = greedy_modularity_split(g, block);
    if communities.len() > 1 {
        return communities;
    }
    forced_split(g, block, cap)
}

/// Nodes sorted by descending induced degree (ties by index), cut into
/// `ceil(len / cap)` near-equal consecutive chunks.
pub fn forced_split(g: &SimilarityGraph, block: &[u32], cap: usize) -> Vec<Vec<u32>> {
    let mut sorted = block.to_vec();
    sorted.sort_unstable();
    let degree = |v: u32| {
        g.neighbors(v)
            .iter()
            .filter(|w| sorted.binary_search(w).is_ok())
            .count()
    };
    let mut order: Vec<(usize, u32)> = sorted.iter().map(|&v| (degree(v), v)).collect();
    order.sort_unstable_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));

    let len = order.len();
    let chunks = len.div_ceil(cap).max(1);
    let (base, extra) = (len / chunks, len % chunks);
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let size = base + usize::from(c < extra);
        out.push(order[start..start + size].iter().map(|&(_, v)| v).collect());
        start += size;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::Preset;

    #[test]
    fn forced_split_chunks() {
        let g = SimilarityGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let parts = forced_split(&g, &[0, 1, 2, 3, 4], 2);
        assert_eq!(parts, vec![vec![0, 1], vec![2, 3], vec![4]]);
        let parts = forced_split(&g, &[0, 1, 2, 3, 4], 1);
        assert_eq!(parts.len(), 5);
    }

    #[test]
    fn split_respects_cap() {
        // A 6-clique cannot be split by modularity; forcing is required.
        let mut e = Vec::new();
        for a in 0..6u32 {
            for b in a + 1..6 {
                e.push((a, b));
            }
        }
        let g = SimilarityGraph::from_edges(6, &e);
        let p = split_oversized(&g, vec![(0..6).collect()], 4).unwrap();
        assert!(p.max_block_size() <= 4);
        assert_eq!(p.num_blocks(), 2);
    }

    #[test]
    fn parameter_errors() {
        let ds = Preset::Rldata500Analog.generate(1).unwrap();
        let bad = [
            TlshParams { bands: 0, ..Default::default() },
            TlshParams { bands: 101, ..Default::default() },
            TlshParams { max_block: 0, ..Default::default() },
            TlshParams { shingle_k: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(tlsh_block(&ds, &p), Err(Error::Param(_))), "{p:?}");
        }
    }

    #[test]
    fn cap_at_least_n_gives_components() {
        let ds = Preset::Rldata500Analog.generate(2).unwrap();
        let params = TlshParams {
            max_block: 500,
            ..TlshParams::rldata(4)
        };
        let out = tlsh_block(&ds, &params).unwrap();
        assert_eq!(out.partition.num_blocks(), out.components);

        let single = TlshParams {
            max_block: 1,
            ..params
        };
        let out = tlsh_block(&ds, &single).unwrap();
        assert_eq!(out.partition, BlockingPartition::singletons(500));
    }
}
