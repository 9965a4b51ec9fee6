#![allow(dead_code)]

use std::collections::HashSet;

use linkblock::corpus::{Dataset, Field, FieldKind, FieldSchema, Pair, Record};
use linkblock::eval::Blocking;
use proptest::prelude::*;

/// Three short text fields over a tiny alphabet, so agreements are common.
pub fn small_schema() -> FieldSchema {
    FieldSchema::new(vec![
        Field::new("a", FieldKind::Text),
        Field::new("b", FieldKind::Text),
        Field::new("c", FieldKind::Text),
    ])
    .unwrap()
}

pub fn dataset_from(rows: &[(u64, [String; 3])]) -> Dataset {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (entity, values))| Record {
            record_id: i as u64,
            entity_id: *entity,
            values: values.to_vec(),
        })
        .collect();
    Dataset::new(small_schema(), records).unwrap()
}

pub fn arb_value() -> impl Strategy<Value = String> {
    "[AB]{0,4}"
}

pub fn arb_dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((0u64..6, [arb_value(), arb_value(), arb_value()]), 2..max_n)
        .prop_map(|rows| dataset_from(&rows))
}

/// Every unordered pair, in lexicographic order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = Pair> {
    (0..n as u32).flat_map(move |i| (i + 1..n as u32).map(move |j| (i, j)))
}

/// Recall and RR counted pair by pair from the explicit blocks or pairs.
pub fn brute_scores(blocking: &Blocking, truth: &[Pair]) -> (f64, f64, u64) {
    let n = blocking.n();
    let candidates: HashSet<Pair> = match blocking {
        Blocking::Partition(p) => p
            .blocks()
            .iter()
            .flat_map(|b| {
                b.iter()
                    .flat_map(move |&x| b.iter().filter(move |&&y| x < y).map(move |&y| (x, y)))
            })
            .collect(),
        Blocking::Pairs(s) => s.pairs().iter().copied().collect(),
    };
    let mut comparable = 0u64;
    let mut total = 0u64;
    for p in all_pairs(n) {
        total += 1;
        if candidates.contains(&p) {
            comparable += 1;
        }
    }
    let kept = truth.iter().filter(|p| candidates.contains(p)).count();
    let recall = if truth.is_empty() {
        100.0
    } else {
        100.0 * kept as f64 / truth.len() as f64
    };
    let rr = if total == 0 {
        100.0
    } else {
        100.0 * (1.0 - comparable as f64 / total as f64)
    };
    (recall, rr, comparable)
}

/// Largest modularity over every partition of `0..n`, with the number of
/// partitions attaining it.
pub fn brute_max_modularity(n: usize, edges: &[Pair]) -> f64 {
    let groups: Vec<usize> = (0..n).collect();
    max_modularity_up_to_symmetry(n, edges, &groups).0
}

/// Exhaustive modularity maximization over partitions of `0..n`, treating
/// nodes with equal `group` as interchangeable. Such nodes must be
/// contiguous and have identical neighborhoods apart from each other; then
/// every partition is equivalent to one whose labels are non-decreasing
/// within each group, and only those are enumerated. Returns the maximum and
/// how many enumerated partitions attain it.
pub fn max_modularity_up_to_symmetry(n: usize, edges: &[Pair], group: &[usize]) -> (f64, usize) {
    if edges.is_empty() {
        return (0.0, 1);
    }
    let m = edges.len() as f64;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    struct Search<'a> {
        adj: &'a [Vec<usize>],
        group: &'a [usize],
        m: f64,
        labels: Vec<usize>,
        inside: Vec<usize>,
        degree: Vec<usize>,
        best: (f64, usize),
    }
    impl Search<'_> {
        fn go(&mut self, v: usize, used: usize) {
            let n = self.labels.len();
            if v == n {
                let q: f64 = (0..used)
                    .map(|c| self.inside[c] as f64 / self.m - (self.degree[c] as f64 / (2.0 * self.m)).powi(2))
                    .sum();
                if q > self.best.0 + 1e-12 {
                    self.best = (q, 1);
                } else if (q - self.best.0).abs() <= 1e-12 {
                    self.best.1 += 1;
                }
                return;
            }
            let low = if v > 0 && self.group[v] == self.group[v - 1] {
                self.labels[v - 1]
            } else {
                0
            };
            for c in low..=used {
                let gained = self.adj[v].iter().filter(|&&w| w < v && self.labels[w] == c).count();
                if c == used {
                    self.inside.push(0);
                    self.degree.push(0);
                }
                self.labels[v] = c;
                self.inside[c] += gained;
                self.degree[c] += self.adj[v].len();
                self.go(v + 1, used.max(c + 1));
                self.inside[c] -= gained;
                self.degree[c] -= self.adj[v].len();
                if c == used {
                    self.inside.pop();
                    self.degree.pop();
                }
            }
        }
    }
    let mut s = Search {
        adj: &adj,
        group,
        m,
        labels: vec![0; n],
        inside: Vec::new(),
        degree: Vec::new(),
        best: (f64::NEG_INFINITY, 0),
    };
    s.go(0, 0);
    s.best
}
