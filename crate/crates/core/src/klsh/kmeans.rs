use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ProjectedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster of each point, in `0..c`.
    pub assignment: Vec<u32>,
    /// `c × p`, row-major.
    pub centers: Vec<f64>,
    pub dims: usize,
    pub iterations_run: usize,
    /// Sum of squared distances to assigned centers, after the final
    /// assignment step.
    pub inertia: f64,
    /// Inertia after every assignment step, including the first.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn num_clusters(&self) -> usize {
        self.centers.len().checked_div(self.dims).unwrap_or(0)
    }

    pub fn center(&self, c: usize) -> &[f64] {
        &self.centers[c * self.dims..(c + 1) * self.dims]
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center for each point (ties to the lower index) and its squared
/// distance.
fn assign(points: &ProjectedMatrix, centers: &[f64]) -> Vec<(u32, f64)> {
    let p = points.dims();
    (0..points.n())
        .into_par_iter()
        .map(|j| {
            let x = points.row(j);
            let mut best = (0u32, f64::INFINITY);
            for (c, center) in centers.chunks_exact(p.max(1)).enumerate() {
                let d = sq_dist(x, center);
                if d < best.1 {
                    best = (c as u32, d);
                }
            }
            best
        })
        .collect()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn seed_centers(points: &ProjectedMatrix, c: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, p) = (points.n(), points.dims());
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = points.row(first).to_vec();
    let mut nearest: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| sq_dist(points.row(j), points.row(first)))
        .collect();
    for _ in 1..c {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (j, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(j);
                    break;
                }
            }
            // Rounding can leave `target` just past the running sum.
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            chosen.iter().position(|&used| !used).unwrap()
        };
        chosen[next] = true;
        let row = points.row(next);
        centers.extend_from_slice(row);
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(j, d)| *d = d.min(sq_dist(points.row(j), row)));
    }
    debug_assert_eq!(centers.len(), c * p);
    centers
}

/// Means of assigned points; clusters left empty take the points farthest
/// from their own new centers.
fn update_centers(points: &ProjectedMatrix, assignment: &[u32], old: &[f64], c: usize) -> Vec<f64> {
    let p = points.dims();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); c];
    for (j, &a) in assignment.iter().enumerate() {
        members[a as usize].push(j as u32);
    }
    let mut centers: Vec<f64> = members
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, m)| {
            if m.is_empty() {
                return old[k * p..(k + 1) * p].to_vec();
            }
            let mut sum = vec![0.0; p];
            for &j in m {
                for (s, x) in sum.iter_mut().zip(points.row(j as usize)) {
                    *s += x;
                }
            }
            let inv = 1.0 / m.len() as f64;
            sum.iter_mut().for_each(|s| *s *= inv);
            sum
        })
        .collect();

    let empty: Vec<usize> = (0..c).filter(|&k| members[k].is_empty()).collect();
    if !empty.is_empty() {
        let mut far: Vec<(f64, u32)> = assignment
            .par_iter()
            .enumerate()
            .map(|(j, &a)| {
                let a = a as usize;
                (sq_dist(points.row(j), &centers[a * p..(a + 1) * p]), j as u32)
            })
            .collect();
        far.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        for (k, &(_, j)) in empty.iter().zip(&far) {
            centers[k * p..(k + 1) * p].copy_from_slice(points.row(j as usize));
        }
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding. Stops when an assignment step
/// changes nothing or after `max_iter` updates.
pub fn kmeans(points: &ProjectedMatrix, c: usize, max_iter: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.n();
    if c == 0 || c > n {
        return Err(Error::Param(format!(
            "number of clusters must satisfy 1 <= c <= n (c = {c}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, c, &mut rng);
    let step = assign(points, &centers);
    let mut inertia_history = vec![step.iter().map(|s| s.1).sum::<f64>()];
    let mut assignment: Vec<u32> = step.into_iter().map(|s| s.0).collect();
    let mut iterations_run = 0;

    while iterations_run < max_iter {
        iterations_run += 1;
        let next_centers = update_centers(points, &assignment, &centers, c);
        let step = assign(points, &next_centers);
        centers = next_centers;
        inertia_history.push(step.iter().map(|s| s.1).sum());
        let next: Vec<u32> = step.into_iter().map(|s| s.0).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }

    Ok(KMeansResult {
        inertia: *inertia_history.last().unwrap(),
        assignment,
        centers,
        dims: points.dims(),
        iterations_run,
        inertia_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> ProjectedMatrix {
        ProjectedMatrix::from_rows(rows[0].len(), rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    #[test]
    fn one_cluster_is_global_mean() {
        let m = matrix(&[&[0.0, 0.0], &[2.0, 0.0], &[4.0, 6.0]]);
        let r = kmeans(&m, 1, 100, 1).unwrap();
        assert_eq!(r.assignment, vec![0, 0, 0]);
        assert!((r.center(0)[0] - 2.0).abs() < 1e-12);
        assert!((r.center(0)[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c_equals_n() {
        let m = matrix(&[&[0.0], &[1.0], &[5.0], &[9.0]]);
        let r = kmeans(&m, 4, 100, 7).unwrap();
        let mut seen = r.assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn bad_cluster_counts() {
        let m = matrix(&[&[0.0], &[1.0]]);
        assert!(matches!(kmeans(&m, 3, 10, 0), Err(Error::Param(_))));
        assert!(matches!(kmeans(&m, 0, 10, 0), Err(Error::Param(_))));
    }

    #[test]
    fn duplicate_points_still_seed() {
        let m = matrix(&[&[1.0], &[1.0], &[1.0]]);
        let r = kmeans(&m, 3, 10, 0).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert_eq!(r.num_clusters(), 3);
    }
}
