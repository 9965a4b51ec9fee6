//! Minhash signatures over the incidence matrix, and LSH banding into
//! candidate edges.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use xxhash_rust::xxh3::xxh3_64;

use crate::corpus::Pair;
use crate::error::{Error, Result};
use crate::shingle::IncidenceMatrix;

/// 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Signature value of a record with no tokens.
pub const EMPTY_SIGNATURE: u64 = u64::MAX;

#[inline]
fn mod_mersenne(y: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let r = (y & p) + (y >> 61);
    let mut r = (r & p) + (r >> 61);
    if r >= p {
        r -= p;
    }
    r as u64
}

/// `p` hash functions `h_i(x) = (a_i x + b_i) mod (2^61 - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashFamily {
    seed: u64,
    params: Vec<(u64, u64)>,
}

impl MinHashFamily {
    pub fn new(p: usize, seed: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::Param("number of minhash functions must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..p)
            .map(|_| {
                (
                    rng.random_range(1..MERSENNE_61),
                    rng.random_range(0..MERSENNE_61),
                )
            })
            .collect();
        Ok(MinHashFamily { seed, params })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[(u64, u64)] {
        &self.params
    }

    #[inline]
    pub fn hash(&self, i: usize, x: u64) -> u64 {
        let (a, b) = self.params[i];
        mod_mersenne(a as u128 * x as u128 + b as u128)
    }
}

/// Scrambles a token index before the linear hashes. Linear hashes of
/// consecutive integers are far from min-wise independent, and token indices
/// of co-occurring shingles tend to be adjacent.
#[inline]
pub fn token_key(t: u32) -> u64 {
    let mut z = (t as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) % MERSENNE_61
}

/// Dense `p × n` signature matrix, stored column by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMatrix {
    p: usize,
    n: usize,
    data: Vec<u64>,
}

impl SignatureMatrix {
    pub fn from_columns(p: usize, columns: &[Vec<u64>]) -> Self {
        let mut data = Vec::with_capacity(p * columns.len());
        for c in columns {
            assert_eq!(c.len(), p, "signature column length");
            data.extend_from_slice(c);
        }
        SignatureMatrix {
            p,
            n: columns.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.p
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[u64] {
        &self.data[j * self.p..(j + 1) * self.p]
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[col * self.p + row]
    }

    /// Fraction of rows on which columns `a` and `b` agree.
    pub fn agreement(&self, a: usize, b: usize) -> f64 {
        let same = self
            .column(a)
            .iter()
            .zip(self.column(b))
            .filter(|(x, y)| x == y)
            .count();
        same as f64 / self.p as f64
    }
}

pub fn minhash_signatures(incidence: &IncidenceMatrix, family: &MinHashFamily) -> SignatureMatrix {
    let p = family.len();
    let columns: Vec<Vec<u64>> = incidence
        .columns()
        .par_iter()
        .map(|tokens| {
            let mut sig = vec![EMPTY_SIGNATURE; p];
            for &t in tokens {
                let x = token_key(t);
                for (i, s) in sig.iter_mut().enumerate() {
                    let h = family.hash(i, x);
                    if h < *s {
                        *s = h;
                    }
                }
            }
            sig
        })
        .collect();
    SignatureMatrix::from_columns(p, &columns)
}

/// Row ranges of the `b` bands: `p / b` rows each, the remainder going to
/// the last band.
pub fn band_ranges(p: usize, b: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if b == 0 || b > p {
        return Err(Error::Param(format!(
            "bands must satisfy 1 <= b <= p (b = {b}, p = {p})"
        )));
    }
    let r = p / b;
    Ok((0..b)
        .map(|i| {
            let end = if i + 1 == b { p } else { (i + 1) * r };
            i * r..end
        })
        .collect())
}

/// 64-bit bucket key of one column's slice of signature rows.
pub fn band_key(values: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    xxh3_64(&bytes)
}

/// Deduplicated undirected edges among `n` records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    n: usize,
    edges: Vec<Pair>,
    /// Pairs emitted by bucket loops before deduplication across bands.
    emitted: u64,
}

impl EdgeList {
    /// Sorts, deduplicates, and drops self-loops.
    pub fn new(n: usize, mut edges: Vec<Pair>) -> Self {
        let emitted = edges.len() as u64;
        edges.retain(|&(a, b)| a != b);
        for e in &mut edges {
            *e = crate::corpus::pair(e.0, e.1);
        }
        edges.par_sort_unstable();
        edges.dedup();
        EdgeList { n, edges, emitted }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Pair] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }
}

/// Hashes each band of every column to a bucket and links all columns that
/// share a bucket in any band.
pub fn band_and_bucket(sig: &SignatureMatrix, b: usize) -> Result<EdgeList> {
    let ranges = band_ranges(sig.rows(), b)?;
    let n = sig.cols();
    let per_band: Vec<Vec<Pair>> = ranges
        .par_iter()
        .map(|range| {
            let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
            for j in 0..n {
                let key = band_key(&sig.column(j)[range.clone()]);
                buckets.entry(key).or_default().push(j as u32);
            }
            let mut pairs = Vec::new();
            for members in buckets.values().filter(|m| m.len() > 1) {
                for (x, &a) in members.iter().enumerate() {
                    for &c in &members[x + 1..] {
                        pairs.push((a, c));
                    }
                }
            }
            pairs
        })
        .collect();
    let edges: Vec<Pair> = per_band.into_iter().flatten().collect();
    Ok(EdgeList::new(n, edges))
}
