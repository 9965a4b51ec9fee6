//! Greedy clustering baselines: threshold and size-bounded nearest-neighbor
//! growth, and canopies.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Dataset, Pair};
use crate::error::{Error, Result};
use crate::eval::BlockingPartition;
use crate::klsh::ProjectedMatrix;
use crate::shingle::{build_vocabulary, shingle_dataset};
use crate::tlsh::{connected_components, SimilarityGraph};

/// Points with a pairwise distance.
pub trait PointSet: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn distance(&self, i: usize, j: usize) -> f64;
}

impl PointSet for ProjectedMatrix {
    fn len(&self) -> usize {
        self.n()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// TF-IDF shingle vectors scaled to unit length, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfVectors {
    rows: Vec<Vec<(u32, f64)>>,
}

impl TfIdfVectors {
    pub fn from_dataset(ds: &Dataset, k: usize) -> Result<Self> {
        let bags = shingle_dataset(ds, k)?;
        let vocab = build_vocabulary(&bags, ds.n())?;
        let idf = vocab.idf();
        let rows = bags
            .par_iter()
            .map(|bag| {
                let mut row: Vec<(u32, f64)> = vocab
                    .encode(bag)
                    .into_iter()
                    .map(|(w, c)| (w, c as f64 * idf[w as usize]))
                    .filter(|&(_, x)| x != 0.0)
                    .collect();
                row.sort_unstable_by_key(|e| e.0);
                let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                row.iter_mut().for_each(|e| e.1 /= norm);
                row
            })
            .collect();
        Ok(TfIdfVectors { rows })
    }

    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        TfIdfVectors { rows }
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }
}

fn sq_norm(row: &[(u32, f64)]) -> f64 {
    row.iter().map(|e| e.1 * e.1).sum()
}

impl PointSet for TfIdfVectors {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.rows[i], &self.rows[j]);
        let (mut x, mut y, mut dot) = (0, 0, 0.0);
        while x < a.len() && y < b.len() {
            match a[x].0.cmp(&b[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    dot += a[x].1 * b[y].1;
                    x += 1;
                    y += 1;
                }
            }
        }
        (sq_norm(a) + sq_norm(b) - 2.0 * dot).max(0.0).sqrt()
    }
}

/// Order in which base records are picked: ascending index, or a seeded
/// shuffle.
pub fn base_order(n: usize, randomize: Option<u64>) -> Vec<u32> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    if let Some(seed) = randomize {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// Grows one cluster from `base` over the unassigned points, always adding
/// the unassigned point nearest to any member (ties to the lower index),
/// while `keep_growing(size, nearest_distance)` holds.
fn grow<P: PointSet>(
    points: &P,
    base: u32,
    assigned: &[bool],
    mut keep_growing: impl FnMut(usize, f64) -> bool,
) -> Vec<u32> {
    let mut cluster = vec![base];
    let mut frontier: Vec<(u32, f64)> = (0..points.len() as u32)
        .into_par_iter()
        .filter(|&j| j != base && !assigned[j as usize])
        .map(|j| (j, points.distance(base as usize, j as usize)))
        .collect();
    while let Some(best) = frontier
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(x.1 .0.cmp(&y.1 .0)))
        .map(|(pos, _)| pos)
    {
        let (j, d) = frontier[best];
        if !keep_growing(cluster.len(), d) {
            break;
        }
        frontier.swap_remove(best);
        cluster.push(j);
        frontier.par_iter_mut().for_each(|(other, dist)| {
            *dist = dist.min(points.distance(j as usize, *other as usize));
        });
    }
    cluster
}

fn to_partition(n: usize, clusters: &[Vec<u32>]) -> BlockingPartition {
    BlockingPartition::from_blocks(n, clusters).expect("clusters cover every record once")
}

/// Threshold nearest neighbors: clusters grow while the nearest outside
/// point is within `t`.
pub fn tnn_block<P: PointSet>(points: &P, t: f64, order: &[u32]) -> Result<BlockingPartition> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Param(format!("threshold must be non-negative (got {t})")));
    }
    let n = points.len();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for &base in order {
        if assigned[base as usize] {
            continue;
        }
        let c = grow(points, base, &assigned, |_, d| d <= t);
        for &j in &c {
            assigned[j as usize] = true;
        }
        clusters.push(c);
    }
    Ok(to_partition(n, &clusters))
}

/// Size-bounded nearest neighbors: clusters grow to exactly `k_min` members.
/// A final undersized cluster joins the existing cluster containing its
/// nearest outside point.
pub fn knn_block<P: PointSet>(points: &P, k_min: usize, order: &[u32]) -> Result<BlockingPartition> {
    let n = points.len();
    if k_min == 0 {
        return Err(Error::Param("minimum block size must be at least 1".into()));
    }
    if k_min >= n {
        return Ok(BlockingPartition::one_block(n));
    }
    let mut assigned = vec![false; n];
    let mut label = vec![u32::MAX; n];
    let mut clusters: Vec<Vec<u32>> = Vec::new();
    for &base in order {
        if assigned[base as usize] {
            continue;
        }
        let c = grow(points, base, &assigned, |size, _| size < k_min);
        for &j in &c {
            assigned[j as usize] = true;
        }
        if c.len() < k_min {
            // Only the last cluster can come up short.
            let (_, _, target) = c
                .iter()
                .flat_map(|&a| {
                    label
                        .iter()
                        .enumerate()
                        .filter(|(_, &l)| l != u32::MAX)
                        .map(move |(b, &l)| (points.distance(a as usize, b), b, l))
                })
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .expect("k_min < n leaves an earlier cluster");
            clusters[target as usize].extend(c);
            break;
        }
        for &j in &c {
            label[j as usize] = clusters.len() as u32;
        }
        clusters.push(c);
    }
    Ok(to_partition(n, &clusters))
}

/// Possibly overlapping canopies; every record is in at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct CanopyCover {
    pub n: usize,
    pub t1: f64,
    pub t2: f64,
    pub canopies: Vec<Vec<u32>>,
}

impl CanopyCover {
    /// Pairs sharing at least one canopy, sorted.
    pub fn candidate_pairs(&self) -> Vec<Pair> {
        let mut pairs: Vec<Pair> = self
            .canopies
            .iter()
            .flat_map(|c| {
                c.iter()
                    .enumerate()
                    .flat_map(move |(i, &a)| c[i + 1..].iter().map(move |&b| crate::corpus::pair(a, b)))
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// Canopies with loose threshold `t1` and tight threshold `t2`.
///
/// The next base is the first remaining candidate in `order`. Its canopy is
/// every remaining candidate within `t1`; candidates within `t2`, and the
/// base itself, stop being candidates. With `t1 == t2` the canopies are
/// disjoint.
pub fn canopies<P: PointSet>(points: &P, t1: f64, t2: f64, order: &[u32]) -> Result<CanopyCover> {
    if t1.is_nan() || t2.is_nan() || t2 < 0.0 || t2 > t1 {
        return Err(Error::Param(format!(
            "canopy thresholds must satisfy 0 <= t2 <= t1 (t1 = {t1}, t2 = {t2})"
        )));
    }
    let n = points.len();
    let mut candidate = vec![true; n];
    let mut out = Vec::new();
    for &base in order {
        if !candidate[base as usize] {
            continue;
        }
        let near: Vec<(u32, f64)> = (0..n as u32)
            .into_par_iter()
            .filter(|&j| candidate[j as usize])
            .map(|j| (j, points.distance(base as usize, j as usize)))
            .filter(|&(_, d)| d <= t1)
            .collect();
        candidate[base as usize] = false;
        for &(j, d) in &near {
            if d <= t2 {
                candidate[j as usize] = false;
            }
        }
        let mut canopy: Vec<u32> = near.into_iter().map(|e| e.0).collect();
        if !canopy.contains(&base) {
            canopy.push(base);
        }
        canopy.sort_unstable();
        out.push(canopy);
    }
    Ok(CanopyCover {
        n,
        t1,
        t2,
        canopies: out,
    })
}

/// Connected components of the "shares a canopy" relation.
pub fn canopy_to_blocks(cover: &CanopyCover) -> BlockingPartition {
    let edges: Vec<Pair> = cover
        .canopies
        .iter()
        .flat_map(|c| c.windows(2).map(|w| (w[0], w[1])))
        .collect();
    connected_components(&SimilarityGraph::from_edges(cover.n, &edges))
}
