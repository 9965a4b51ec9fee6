//! Character shingling, the shingle vocabulary with IDF weights, and the
//! binary token/record incidence matrix.

use std::collections::HashMap;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::corpus::{Dataset, Record};
use crate::error::{Error, Result};

/// Placed between field values before shingling. It never occurs in
/// normalized values, so a shingle spanning two fields always contains it.
pub const FIELD_SEPARATOR: char = '\u{1F}';

/// Multiset of length-`k` character substrings, in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleBag {
    k: usize,
    counts: IndexMap<String, u32>,
}

impl ShingleBag {
    /// Shingles `s`. A non-empty string shorter than `k` becomes one token.
    pub fn from_text(s: &str, k: usize) -> Self {
        assert!(k >= 1, "shingle length must be at least 1");
        let chars: Vec<char> = s.chars().collect();
        let mut counts = IndexMap::new();
        if chars.is_empty() {
            return ShingleBag { k, counts };
        }
        if chars.len() < k {
            counts.insert(s.to_string(), 1);
            return ShingleBag { k, counts };
        }
        for w in chars.windows(k) {
            *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
        }
        ShingleBag { k, counts }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &IndexMap<String, u32> {
        &self.counts
    }

    pub fn get(&self, token: &str) -> u32 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Number of distinct tokens.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

impl FromIterator<(String, u32)> for ShingleBag {
    /// Builds a bag from explicit tokens; `k` is taken from the first token.
    fn from_iter<I: IntoIterator<Item = (String, u32)>>(iter: I) -> Self {
        let mut counts = IndexMap::new();
        for (t, c) in iter {
            if c > 0 {
                *counts.entry(t).or_insert(0) += c;
            }
        }
        let k = counts.keys().next().map_or(1, |t: &String| t.chars().count());
        ShingleBag { k, counts }
    }
}

/// The record's values joined by [`FIELD_SEPARATOR`].
pub fn record_text(rec: &Record) -> String {
    let mut s = String::new();
    for (i, v) in rec.values.iter().enumerate() {
        if i > 0 {
            s.push(FIELD_SEPARATOR);
        }
        s.push_str(v);
    }
    s
}

pub fn shingle_record(rec: &Record, k: usize) -> ShingleBag {
    ShingleBag::from_text(&record_text(rec), k)
}

pub fn shingle_dataset(ds: &Dataset, k: usize) -> Result<Vec<ShingleBag>> {
    if k == 0 {
        return Err(Error::Param("shingle length k must be at least 1".into()));
    }
    Ok(ds.records().par_iter().map(|r| shingle_record(r, k)).collect())
}

/// Jaccard similarity of the two bags' supports; two empty bags give 0.
pub fn jaccard(a: &ShingleBag, b: &ShingleBag) -> f64 {
    let (small, large) = if a.support_len() <= b.support_len() {
        (a, b)
    } else {
        (b, a)
    };
    let inter = small.tokens().filter(|t| large.counts.contains_key(*t)).count();
    let union = a.support_len() + b.support_len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Distinct tokens across a collection of bags, with document frequencies
/// and `idf = ln(n / doc_freq)`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    doc_freq: Vec<u32>,
    idf: Vec<f64>,
    n: usize,
}

pub fn build_vocabulary(bags: &[ShingleBag], n: usize) -> Result<Vocabulary> {
    if n == 0 || n != bags.len() {
        return Err(Error::Param(format!(
            "vocabulary needs n == bag count >= 1 (n = {n}, bags = {})",
            bags.len()
        )));
    }
    let mut tokens = Vec::new();
    let mut index = HashMap::new();
    let mut doc_freq: Vec<u32> = Vec::new();
    for bag in bags {
        for t in bag.tokens() {
            match index.get(t) {
                Some(&id) => doc_freq[id as usize] += 1,
                None => {
                    index.insert(t.to_string(), tokens.len() as u32);
                    tokens.push(t.to_string());
                    doc_freq.push(1);
                }
            }
        }
    }
    let idf = doc_freq
        .iter()
        .map(|&df| (n as f64 / df as f64).ln())
        .collect();
    Ok(Vocabulary {
        tokens,
        index,
        doc_freq,
        idf,
        n,
    })
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// `(token id, count)` pairs in the bag's order. Unknown tokens are skipped.
    pub fn encode(&self, bag: &ShingleBag) -> Vec<(u32, u32)> {
        bag.counts()
            .iter()
            .filter_map(|(t, &c)| self.id(t).map(|id| (id, c)))
            .collect()
    }
}

/// Sparse binary matrix: rows are vocabulary tokens, columns are records.
/// Stored by column as sorted token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    n_tokens: usize,
    columns: Vec<Vec<u32>>,
}

impl IncidenceMatrix {
    pub fn from_bags(vocab: &Vocabulary, bags: &[ShingleBag]) -> Self {
        let columns = bags
            .par_iter()
            .map(|b| {
                let mut ids: Vec<u32> = b.tokens().filter_map(|t| vocab.id(t)).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        IncidenceMatrix {
            n_tokens: vocab.len(),
            columns,
        }
    }

    /// Builds directly from per-column token ids (sorted and deduplicated here).
    pub fn from_columns(n_tokens: usize, mut columns: Vec<Vec<u32>>) -> Self {
        for c in &mut columns {
            c.sort_unstable();
            c.dedup();
            debug_assert!(c.iter().all(|&t| (t as usize) < n_tokens));
        }
        IncidenceMatrix { n_tokens, columns }
    }

    /// `(tokens, records)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.n_tokens, self.columns.len())
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn get(&self, token: u32, record: usize) -> bool {
        self.columns[record].binary_search(&token).is_ok()
    }
}
