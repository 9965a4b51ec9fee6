//! KLSH blocking: IDF-weighted shingle counts are projected onto `p` random
//! unit vectors and the projected records are clustered with k-means.

mod kmeans;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, KMeansResult};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::eval::{BlockingPartition, Timings};
use crate::shingle::{build_vocabulary, shingle_dataset, ShingleBag, Vocabulary};

/// `p` unit vectors over a vocabulary, stored token-major so one token's
/// weights across all vectors are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVectors {
    dim: usize,
    p: usize,
    data: Vec<f64>,
}

impl UnitVectors {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.p
    }

    /// Component `w` of every vector.
    pub fn token(&self, w: usize) -> &[f64] {
        &self.data[w * self.p..(w + 1) * self.p]
    }

    pub fn get(&self, m: usize, w: usize) -> f64 {
        self.data[w * self.p + m]
    }

    /// Vector `m` as a dense slice-free copy.
    pub fn vector(&self, m: usize) -> Vec<f64> {
        (0..self.dim).map(|w| self.get(m, w)).collect()
    }
}

/// Gaussian vectors scaled to unit length. Vector `m` is drawn from its own
/// stream of the seeded generator.
pub fn random_unit_vectors(dim: usize, p: usize, seed: u64) -> Result<UnitVectors> {
    if dim == 0 || p == 0 {
        return Err(Error::Param(format!(
            "unit vectors need dim >= 1 and p >= 1 (dim = {dim}, p = {p})"
        )));
    }
    let vectors: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect();
    let mut data = vec![0.0; dim * p];
    for (m, v) in vectors.iter().enumerate() {
        for (w, &x) in v.iter().enumerate() {
            data[w * p + m] = x;
        }
    }
    Ok(UnitVectors { dim, p, data })
}

/// Dense `n × p` matrix of projected records, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl ProjectedMatrix {
    pub fn from_rows(p: usize, data: Vec<f64>) -> Self {
        assert!(p > 0 && data.len().is_multiple_of(p), "row length");
        ProjectedMatrix {
            n: data.len() / p,
            p,
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.p
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.p..(j + 1) * self.p]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `r[j][m] = Σ_w u_m[w] · count_j(w) · idf(w)`, one sparse pass per record.
pub fn project(bags: &[ShingleBag], vocab: &Vocabulary, units: &UnitVectors) -> Result<ProjectedMatrix> {
    if units.dim() != vocab.len() {
        return Err(Error::Param(format!(
            "unit vectors have dimension {} but the vocabulary has {} tokens",
            units.dim(),
            vocab.len()
        )));
    }
    let p = units.count();
    let idf = vocab.idf();
    let rows: Vec<Vec<f64>> = bags
        .par_iter()
        .map(|bag| {
            let mut row = vec![0.0; p];
            for (w, count) in vocab.encode(bag) {
                let weight = count as f64 * idf[w as usize];
                if weight == 0.0 {
                    continue;
                }
                for (r, u) in row.iter_mut().zip(units.token(w as usize)) {
                    *r += weight * u;
                }
            }
            row
        })
        .collect();
    Ok(ProjectedMatrix::from_rows(p, rows.concat()))
}

/// How the number of clusters is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockCount {
    Fixed(usize),
    /// `ceil(n / a)` clusters.
    AvgSize(usize),
    /// `ceil(sqrt(n))` clusters.
    Sqrt,
}

impl BlockCount {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let c = match self {
            BlockCount::Fixed(c) => c,
            BlockCount::AvgSize(0) => {
                return Err(Error::Param("average block size must be at least 1".into()))
            }
            BlockCount::AvgSize(a) => n.div_ceil(a),
            BlockCount::Sqrt => (n as f64).sqrt().ceil() as usize,
        };
        if c == 0 || c > n {
            return Err(Error::Param(format!(
                "number of blocks must satisfy 1 <= c <= n (c = {c}, n = {n})"
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KlshParams {
    pub shingle_k: usize,
    pub projections: usize,
    pub blocks: BlockCount,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KlshParams {
    fn default() -> Self {
        KlshParams {
            shingle_k: 2,
            projections: 100,
            blocks: BlockCount::AvgSize(25),
            max_iter: 100,
            seed: 0,
        }
    }
}

impl KlshParams {
    /// k = 2, p = 100.
    pub fn rldata(seed: u64) -> Self {
        KlshParams {
            seed,
            ..Default::default()
        }
    }

    /// k = 2, p = 150.
    pub fn noisy(seed: u64) -> Self {
        KlshParams {
            projections: 150,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<usize> {
        if self.shingle_k == 0 {
            return Err(Error::Param("shingle length must be at least 1".into()));
        }
        if self.projections == 0 {
            return Err(Error::Param("number of projections must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Param("max iterations must be at least 1".into()));
        }
        self.blocks.resolve(n)
    }
}

#[derive(Debug, Clone)]
pub struct KlshOutput {
    pub partition: BlockingPartition,
    pub timings: Timings,
    pub vocab_size: usize,
    pub clusters: usize,
    pub kmeans_iterations: usize,
}

pub fn klsh_block(ds: &Dataset, params: &KlshParams) -> Result<KlshOutput> {
    let n = ds.n();
    let c = params.validate(n)?;
    let mut timings = Timings::default();

    let bags = timings.time("shingle", || shingle_dataset(ds, params.shingle_k))?;
    let (vocab_size, points) = timings.time("project", || -> Result<_> {
        let vocab = build_vocabulary(&bags, n)?;
        let points = if vocab.is_empty() {
            ProjectedMatrix::from_rows(params.projections, vec![0.0; n * params.projections])
        } else {
            let units = random_unit_vectors(vocab.len(), params.projections, params.seed)?;
            project(&bags, &vocab, &units)?
        };
        Ok((vocab.len(), points))
    })?;
    let result = timings.time("cluster", || kmeans(&points, c, params.max_iter, params.seed))?;

    Ok(KlshOutput {
        partition: BlockingPartition::from_labels(&result.assignment),
        timings,
        vocab_size,
        clusters: c,
        kmeans_iterations: result.iterations_run,
    })
}
