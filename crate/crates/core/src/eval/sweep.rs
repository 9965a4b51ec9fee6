use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalReport;
use crate::corpus::{true_pairs, Dataset};
use crate::error::{Error, Result};
use crate::method::Method;
use crate::synthgen::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seconds: f64,
    pub vocab_size: Option<usize>,
}

/// Dataset seed used for size `n` of a scaling sweep.
pub fn scaling_seed(seed: u64, n: usize) -> u64 {
    seed.wrapping_add(n as u64)
}

/// Generates one dataset per size and times the method end to end on each.
/// Runs are sequential so they do not compete for cores.
pub fn scaling_sweep(preset: Preset, method: &Method, sizes: &[usize], seed: u64) -> Result<Vec<ScalingRow>> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Param(
            "scaling sizes must be strictly ascending with at least two entries".into(),
        ));
    }
    method.validate()?;
    sizes
        .iter()
        .map(|&n| {
            let ds = preset.generate_sized(n, scaling_seed(seed, n))?;
            let out = method.run(&ds)?;
            Ok(ScalingRow {
                n,
                seconds: out.timings.total(),
                vocab_size: out.vocab_size,
            })
        })
        .collect()
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("n,seconds,vocab_size\n");
    for r in rows {
        let vocab = r.vocab_size.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{:.6},{}", r.n, r.seconds, vocab);
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Param("slope needs at least two (x, y) points".into()));
    }
    if xs.iter().chain(ys).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Param("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Param("slope needs at least two distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// A base method and lists of values for some of its parameters.
///
/// ```json
/// {"base": {"method": "tlsh", "shingle_k": 5, "permutations": 100,
///           "bands": 26, "max_block": 500, "seed": 1},
///  "grid": {"bands": [18, 22, 26], "shingle_k": [2, 5]}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: Method,
    pub grid: BTreeMap<String, Vec<serde_json::Value>>,
}

/// Cartesian product of the grid, parameters in key order with the last key
/// varying fastest.
pub fn expand_grid(grid: &SweepGrid) -> Result<Vec<Method>> {
    let base = serde_json::to_value(&grid.base)?;
    let fields = base.as_object().expect("methods serialize as objects");
    for (key, values) in &grid.grid {
        if key == "method" || !fields.contains_key(key) {
            return Err(Error::Param(format!(
                "`{key}` is not a parameter of method `{}`",
                grid.base.name()
            )));
        }
        if values.is_empty() {
            return Err(Error::Param(format!("grid for `{key}` is empty")));
        }
    }
    let mut points = vec![base];
    for (key, values) in &grid.grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q[key.as_str()] = v.clone();
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|p| {
            serde_json::from_value::<Method>(p).map_err(|e| Error::Param(format!("invalid grid point: {e}")))
        })
        .collect()
}

/// Runs and scores every method on one dataset. Points run in parallel;
/// reports come back in input order.
pub fn sensitivity_sweep(ds: &Dataset, methods: &[Method]) -> Result<Vec<EvalReport>> {
    if methods.is_empty() {
        return Err(Error::Param("sweep grid is empty".into()));
    }
    for m in methods {
        m.validate()?;
    }
    let truth = true_pairs(ds);
    methods
        .par_iter()
        .map(|m| {
            let out = m.run(ds)?;
            Ok(EvalReport::new(
                m.name(),
                m.params_json(),
                m.seed(),
                &out.blocking,
                &truth,
                out.timings,
            ))
        })
        .collect()
}
