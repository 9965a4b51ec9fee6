//! One entry point for every blocking method.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    base_order, canopies, canopy_to_blocks, knn_block, rule_block, rule_preset, tnn_block,
    CanopyDistance, CanopyParams, NonMatchRule, TfIdfVectors,
};
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::eval::{Blocking, Timings};
use crate::klsh::{klsh_block, project, random_unit_vectors, BlockCount, KlshParams, ProjectedMatrix};
use crate::shingle::{build_vocabulary, shingle_dataset};
use crate::tlsh::{tlsh_block, TlshParams};

/// A blocking method with its parameters. Serializes with a `method` tag,
/// e.g. `{"method": "tlsh", "shingle_k": 5, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Tlsh(TlshParams),
    Klsh(KlshParams),
    /// `rule` is a preset name such as `t1c10` or an expression.
    Rule { rule: String },
    Tnn {
        shingle_k: usize,
        threshold: f64,
        randomize_bases: Option<u64>,
    },
    Knn {
        shingle_k: usize,
        k_min: usize,
        randomize_bases: Option<u64>,
    },
    Canopy(CanopyParams),
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub blocking: Blocking,
    pub timings: Timings,
    /// Shingle vocabulary size, for methods that build one.
    pub vocab_size: Option<usize>,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Tlsh(_) => "tlsh",
            Method::Klsh(_) => "klsh",
            Method::Rule { .. } => "rule",
            Method::Tnn { .. } => "tnn",
            Method::Knn { .. } => "knn",
            Method::Canopy(_) => "canopy",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Method::Tlsh(p) => Some(p.seed),
            Method::Klsh(p) => Some(p.seed),
            Method::Rule { .. } => None,
            Method::Tnn { randomize_bases, .. } | Method::Knn { randomize_bases, .. } => {
                *randomize_bases
            }
            Method::Canopy(p) => match p.distance {
                CanopyDistance::Projection { seed, .. } => Some(seed),
                CanopyDistance::Tfidf => p.randomize_bases,
            },
        }
    }

    /// Parameters as JSON, without the method tag.
    pub fn params_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("method parameters serialize");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("method");
        }
        v
    }

    /// Expression of a rule method, with presets expanded.
    pub fn rule_expression(rule: &str) -> &str {
        rule_preset(rule).map_or(rule, |p| p.2)
    }

    /// Checks parameters that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let k_ok = |k: usize| {
            if k == 0 {
                Err(Error::Param("shingle length must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        match self {
            Method::Tlsh(p) => p.validate(),
            Method::Klsh(p) => {
                k_ok(p.shingle_k)?;
                if p.projections == 0 || p.max_iter == 0 {
                    return Err(Error::Param(
                        "projections and max iterations must be at least 1".into(),
                    ));
                }
                match p.blocks {
                    BlockCount::Fixed(0) | BlockCount::AvgSize(0) => {
                        Err(Error::Param("number of blocks must be at least 1".into()))
                    }
                    _ => Ok(()),
                }
            }
            Method::Rule { rule } => NonMatchRule::parse(Self::rule_expression(rule)).map(|_| ()),
            Method::Tnn { shingle_k, threshold, .. } => {
                k_ok(*shingle_k)?;
                if threshold.is_nan() || *threshold < 0.0 {
                    return Err(Error::Param("threshold must be non-negative".into()));
                }
                Ok(())
            }
            Method::Knn { shingle_k, k_min, .. } => {
                k_ok(*shingle_k)?;
                if *k_min == 0 {
                    return Err(Error::Param("minimum block size must be at least 1".into()));
                }
                Ok(())
            }
            Method::Canopy(p) => {
                k_ok(p.shingle_k)?;
                if p.t1.is_nan() || p.t2.is_nan() || p.t2 < 0.0 || p.t2 > p.t1 {
                    return Err(Error::Param(format!(
                        "canopy thresholds must satisfy 0 <= t2 <= t1 (t1 = {}, t2 = {})",
                        p.t1, p.t2
                    )));
                }
                if let CanopyDistance::Projection { projections: 0, .. } = p.distance {
                    return Err(Error::Param("number of projections must be at least 1".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self, ds: &Dataset) -> Result<MethodOutput> {
        self.validate()?;
        let n = ds.n();
        match self {
            Method::Tlsh(p) => {
                let out = tlsh_block(ds, p)?;
                Ok(MethodOutput {
                    blocking: out.partition.into(),
                    timings: out.timings,
                    vocab_size: Some(out.vocab_size),
                })
            }
            Method::Klsh(p) => {
                let out = klsh_block(ds, p)?;
                Ok(MethodOutput {
                    blocking: out.partition.into(),
                    timings: out.timings,
                    vocab_size: Some(out.vocab_size),
                })
            }
            Method::Rule { rule } => {
                let mut timings = Timings::default();
                let compiled =
                    NonMatchRule::parse(Self::rule_expression(rule))?.compile(ds.schema())?;
                let pairs = timings.time("filter", || rule_block(ds, &compiled));
                Ok(MethodOutput {
                    blocking: pairs.into(),
                    timings,
                    vocab_size: None,
                })
            }
            Method::Tnn { shingle_k, threshold, randomize_bases } => {
                let mut timings = Timings::default();
                let v = timings.time("vectors", || TfIdfVectors::from_dataset(ds, *shingle_k))?;
                let order = base_order(n, *randomize_bases);
                let p = timings.time("cluster", || tnn_block(&v, *threshold, &order))?;
                Ok(MethodOutput {
                    blocking: p.into(),
                    timings,
                    vocab_size: None,
                })
            }
            Method::Knn { shingle_k, k_min, randomize_bases } => {
                let mut timings = Timings::default();
                let v = timings.time("vectors", || TfIdfVectors::from_dataset(ds, *shingle_k))?;
                let order = base_order(n, *randomize_bases);
                let p = timings.time("cluster", || knn_block(&v, *k_min, &order))?;
                Ok(MethodOutput {
                    blocking: p.into(),
                    timings,
                    vocab_size: None,
                })
            }
            Method::Canopy(p) => {
                let mut timings = Timings::default();
                let order = base_order(n, p.randomize_bases);
                let cover = match p.distance {
                    CanopyDistance::Tfidf => {
                        let v = timings.time("vectors", || TfIdfVectors::from_dataset(ds, p.shingle_k))?;
                        timings.time("canopies", || canopies(&v, p.t1, p.t2, &order))?
                    }
                    CanopyDistance::Projection { projections, seed } => {
                        let points = timings.time("vectors", || -> Result<_> {
                            let bags = shingle_dataset(ds, p.shingle_k)?;
                            let vocab = build_vocabulary(&bags, n)?;
                            if vocab.is_empty() {
                                return Ok(ProjectedMatrix::from_rows(
                                    projections,
                                    vec![0.0; n * projections],
                                ));
                            }
                            let units = random_unit_vectors(vocab.len(), projections, seed)?;
                            project(&bags, &vocab, &units)
                        })?;
                        timings.time("canopies", || canopies(&points, p.t1, p.t2, &order))?
                    }
                };
                let blocks = timings.time("blocks", || canopy_to_blocks(&cover));
                Ok(MethodOutput {
                    blocking: blocks.into(),
                    timings,
                    vocab_size: None,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let methods = [
            Method::Tlsh(TlshParams::rldata(3)),
            Method::Klsh(KlshParams::noisy(1)),
            Method::Rule { rule: "t1c9".into() },
            Method::Tnn { shingle_k: 2, threshold: 0.5, randomize_bases: None },
        ];
        for m in methods {
            let json = serde_json::to_string(&m).unwrap();
            assert!(json.contains(&format!("\"method\":\"{}\"", m.name())));
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert_eq!(Method::rule_expression("t1c3"), "dis(by)");
        assert_eq!(Method::rule_expression("dis(x)"), "dis(x)");
    }

    #[test]
    fn validation() {
        assert!(Method::Rule { rule: "dis(".into() }.validate().is_err());
        assert!(Method::Knn { shingle_k: 2, k_min: 0, randomize_bases: None }.validate().is_err());
        let bad = KlshParams {
            blocks: BlockCount::Fixed(0),
            ..KlshParams::default()
        };
        assert!(Method::Klsh(bad).validate().unwrap_err().is_param_error());
    }
}
