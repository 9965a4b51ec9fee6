use std::collections::BTreeMap;

use crate::corpus::Pair;
use crate::error::{Error, Result};

/// Assignment of every record index to exactly one block.
///
/// Block ids are canonical: contiguous from 0 and numbered in order of each
/// block's smallest record index, so two partitions with the same blocks
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingPartition {
    assignment: Vec<u32>,
    sizes: Vec<u32>,
}

impl BlockingPartition {
    /// Relabels arbitrary block labels canonically.
    pub fn from_labels<L: Copy + Ord>(labels: &[L]) -> Self {
        let mut map: BTreeMap<L, u32> = BTreeMap::new();
        let mut sizes: Vec<u32> = Vec::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len() as u32;
                let id = *map.entry(*l).or_insert(next);
                if id as usize == sizes.len() {
                    sizes.push(0);
                }
                sizes[id as usize] += 1;
                id
            })
            .collect();
        BlockingPartition { assignment, sizes }
    }

    /// Builds from explicit blocks, which must cover `0..n` exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<u32>]) -> Result<Self> {
        let mut labels = vec![u32::MAX; n];
        for (b, members) in blocks.iter().enumerate() {
            for &r in members {
                let slot = labels.get_mut(r as usize).ok_or_else(|| {
                    Error::Integrity(format!("record {r} out of range for n = {n}"))
                })?;
                if *slot != u32::MAX {
                    return Err(Error::Integrity(format!("record {r} in two blocks")));
                }
                *slot = b as u32;
            }
        }
        if let Some(r) = labels.iter().position(|&l| l == u32::MAX) {
            return Err(Error::Integrity(format!("record {r} is in no block")));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        BlockingPartition {
            assignment: (0..n as u32).collect(),
            sizes: vec![1; n],
        }
    }

    pub fn one_block(n: usize) -> Self {
        BlockingPartition {
            assignment: vec![0; n],
            sizes: if n == 0 { vec![] } else { vec![n as u32] },
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn block_of(&self, record: u32) -> u32 {
        self.assignment[record as usize]
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn max_block_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0) as usize
    }

    /// Members of each block, in block-id order, each sorted ascending.
    pub fn blocks(&self) -> Vec<Vec<u32>> {
        let mut blocks: Vec<Vec<u32>> = self
            .sizes
            .iter()
            .map(|&s| Vec::with_capacity(s as usize))
            .collect();
        for (r, &b) in self.assignment.iter().enumerate() {
            blocks[b as usize].push(r as u32);
        }
        blocks
    }

    pub fn same_block(&self, a: u32, b: u32) -> bool {
        self.assignment[a as usize] == self.assignment[b as usize]
    }

    /// `Σ C(size, 2)` over blocks.
    pub fn candidate_pair_count(&self) -> u64 {
        self.sizes
            .iter()
            .map(|&s| s as u64 * (s as u64).saturating_sub(1) / 2)
            .sum()
    }

    /// Every within-block pair, block by block.
    pub fn candidate_pairs(&self) -> CandidatePairs {
        CandidatePairs {
            blocks: self.blocks(),
            block: 0,
            i: 0,
            j: 1,
        }
    }

    /// Block size → number of blocks of that size.
    pub fn size_histogram(&self) -> BTreeMap<u32, u32> {
        let mut h = BTreeMap::new();
        for &s in &self.sizes {
            *h.entry(s).or_insert(0) += 1;
        }
        h
    }

    /// Union of two blocks, canonically relabeled.
    pub fn merge_blocks(&self, a: u32, b: u32) -> Self {
        let labels: Vec<u32> = self
            .assignment
            .iter()
            .map(|&l| if l == b { a } else { l })
            .collect();
        Self::from_labels(&labels)
    }
}

/// Iterator over within-block pairs of a [`BlockingPartition`].
pub struct CandidatePairs {
    blocks: Vec<Vec<u32>>,
    block: usize,
    i: usize,
    j: usize,
}

impl Iterator for CandidatePairs {
    type Item = Pair;

    fn next(&mut self) -> Option<Pair> {
        loop {
            let members = self.blocks.get(self.block)?;
            if self.j < members.len() {
                let p = (members[self.i], members[self.j]);
                self.j += 1;
                return Some(p);
            }
            self.i += 1;
            self.j = self.i + 1;
            if self.j >= members.len() {
                self.block += 1;
                self.i = 0;
                self.j = 1;
            }
        }
    }
}
