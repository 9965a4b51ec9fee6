//! Recall and reduction ratio of blocking output, block-size statistics,
//! stage timings, and parameter sweeps.

mod partition;
mod sweep;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use partition::{BlockingPartition, CandidatePairs};
pub use sweep::{
    expand_grid, log_log_slope, scaling_csv, scaling_sweep, sensitivity_sweep, ScalingRow,
    SweepGrid,
};

use crate::corpus::{pair, Pair};
use crate::error::{Error, Result};

/// Surviving comparisons of a pair-producing method, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidatePairSet {
    n: usize,
    pairs: Vec<Pair>,
}

impl CandidatePairSet {
    pub fn new(n: usize, pairs: Vec<Pair>) -> Result<Self> {
        let mut pairs: Vec<Pair> = pairs.into_iter().map(|(a, b)| pair(a, b)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a == b || b as usize >= n) {
            return Err(Error::Integrity(format!(
                "pair ({a}, {b}) is not a pair of distinct records below {n}"
            )));
        }
        Ok(CandidatePairSet { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        self.pairs.binary_search(&pair(a, b)).is_ok()
    }
}

/// Output of any blocking method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blocking {
    Partition(BlockingPartition),
    Pairs(CandidatePairSet),
}

impl Blocking {
    pub fn n(&self) -> usize {
        match self {
            Blocking::Partition(p) => p.n(),
            Blocking::Pairs(s) => s.n(),
        }
    }

    pub fn candidate_pair_count(&self) -> u64 {
        match self {
            Blocking::Partition(p) => p.candidate_pair_count(),
            Blocking::Pairs(s) => s.len() as u64,
        }
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        match self {
            Blocking::Partition(p) => p.same_block(a, b),
            Blocking::Pairs(s) => s.contains(a, b),
        }
    }

    pub fn as_partition(&self) -> Option<&BlockingPartition> {
        match self {
            Blocking::Partition(p) => Some(p),
            Blocking::Pairs(_) => None,
        }
    }
}

impl From<BlockingPartition> for Blocking {
    fn from(p: BlockingPartition) -> Self {
        Blocking::Partition(p)
    }
}

impl From<CandidatePairSet> for Blocking {
    fn from(s: CandidatePairSet) -> Self {
        Blocking::Pairs(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock seconds per pipeline stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timings(pub Vec<StageTime>);

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(stage, start.elapsed().as_secs_f64());
        out
    }

    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.0.push(StageTime {
            stage: stage.to_string(),
            seconds,
        });
    }

    pub fn total(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, s| acc + s.seconds)
    }

    pub fn stages(&self) -> &[StageTime] {
        &self.0
    }
}

/// `C(n, 2)`.
pub fn total_pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Recall and reduction ratio of one blocking, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub recall: f64,
    pub reduction_ratio: f64,
    pub candidate_pairs: u64,
    pub true_pairs: u64,
    pub true_pairs_preserved: u64,
}

pub fn score(blocking: &Blocking, truth: &[Pair]) -> Scores {
    let preserved = truth
        .iter()
        .filter(|&&(a, b)| blocking.contains(a, b))
        .count() as u64;
    let candidates = blocking.candidate_pair_count();
    let total = total_pairs(blocking.n());
    let recall = if truth.is_empty() {
        100.0
    } else {
        100.0 * preserved as f64 / truth.len() as f64
    };
    let reduction_ratio = if total == 0 {
        100.0
    } else {
        100.0 * (1.0 - candidates as f64 / total as f64)
    };
    Scores {
        recall,
        reduction_ratio,
        candidate_pairs: candidates,
        true_pairs: truth.len() as u64,
        true_pairs_preserved: preserved,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub n: usize,
    #[serde(flatten)]
    pub scores: Scores,
    pub num_blocks: Option<usize>,
    pub max_block_size: Option<usize>,
    /// Block size → number of blocks; absent for pair-set output.
    pub block_size_histogram: Option<BTreeMap<u32, u32>>,
    pub wall_time_seconds: Timings,
}

impl EvalReport {
    pub fn new(
        method: impl Into<String>,
        params: serde_json::Value,
        seed: Option<u64>,
        blocking: &Blocking,
        truth: &[Pair],
        timings: Timings,
    ) -> Self {
        let part = blocking.as_partition();
        EvalReport {
            method: method.into(),
            params,
            seed,
            n: blocking.n(),
            scores: score(blocking, truth),
            num_blocks: part.map(BlockingPartition::num_blocks),
            max_block_size: part.map(BlockingPartition::max_block_size),
            block_size_histogram: part.map(BlockingPartition::size_histogram),
            wall_time_seconds: timings,
        }
    }

    /// Copy with all timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for s in &mut r.wall_time_seconds.0 {
            s.seconds = 0.0;
        }
        r
    }
}

/// Aligned plain-text table, one row per report.
pub fn render_table(reports: &[(String, EvalReport)]) -> String {
    let header = ["Criterion", "Recall (%)", "RR (%)", "Candidates", "Blocks", "Seconds"];
    let rows: Vec<[String; 6]> = reports
        .iter()
        .map(|(label, r)| {
            [
                label.clone(),
                format!("{:.2}", r.scores.recall),
                format!("{:.2}", r.scores.reduction_ratio),
                r.scores.candidate_pairs.to_string(),
                r.num_blocks.map_or("-".into(), |b| b.to_string()),
                format!("{:.3}", r.wall_time_seconds.total()),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_scores() {
        let p = BlockingPartition::from_labels(&[0, 0, 1, 1]);
        let s = score(&p.into(), &[]);
        assert_eq!(s.candidate_pairs, 2);
        assert!((s.reduction_ratio - 100.0 * (1.0 - 2.0 / 6.0)).abs() < 1e-12);
        assert_eq!(s.recall, 100.0);

        let one = score(&BlockingPartition::one_block(7).into(), &[(0, 1)]);
        assert_eq!((one.recall, one.reduction_ratio), (100.0, 0.0));
        let single = score(&BlockingPartition::singletons(7).into(), &[(0, 1)]);
        assert_eq!((single.recall, single.reduction_ratio), (0.0, 100.0));
    }

    #[test]
    fn recall_examples() {
        let p: Blocking = BlockingPartition::from_labels(&[0, 0, 1]).into();
        assert_eq!(score(&p, &[(0, 1)]).recall, 100.0);
        assert_eq!(score(&p, &[(0, 2)]).recall, 0.0);
    }

    #[test]
    fn pair_sets() {
        let s = CandidatePairSet::new(4, vec![(3, 1), (1, 3), (0, 2)]).unwrap();
        assert_eq!(s.pairs(), &[(0, 2), (1, 3)]);
        let sc = score(&s.into(), &[(1, 3), (0, 1)]);
        assert_eq!(sc.true_pairs_preserved, 1);
        assert_eq!(sc.candidate_pairs, 2);
        assert!(CandidatePairSet::new(4, vec![(1, 1)]).is_err());
        assert!(CandidatePairSet::new(4, vec![(1, 4)]).is_err());
    }

    #[test]
    fn report_json_and_table() {
        let p: Blocking = BlockingPartition::from_labels(&[0, 0, 1]).into();
        let mut t = Timings::default();
        t.record("split", 0.5);
        let r = EvalReport::new("tlsh", serde_json::json!({"b": 26}), Some(3), &p, &[(0, 1)], t);
        let json = serde_json::to_string(&r).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(json.contains("\"recall\":100.0"));
        assert_eq!(r.without_timings().wall_time_seconds.total(), 0.0);

        let table = render_table(&[("t1c9".into(), r)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("t1c9"));
        assert_eq!(lines[0].len(), lines[2].len());
    }
}
