use std::path::PathBuf;

use clap::Args;
use linkblock::baselines::{CanopyDistance, CanopyParams};
use linkblock::klsh::{BlockCount, KlshParams};
use linkblock::tlsh::TlshParams;
use linkblock::{Error, Method, Result};

use crate::io::read_to_string;

/// Method selection and parameters. Flags that do not belong to the chosen
/// method are rejected.
#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// rule, tnn, knn, canopy, tlsh, klsh, or a bundle: tlsh-rldata (k=5,
    /// p=100, b=26, t=500), tlsh-noisy (b=22), klsh-rldata (k=2, p=100),
    /// klsh-noisy (k=2, p=150).
    #[arg(long, value_name = "NAME", required_unless_present = "config")]
    pub method: Option<String>,

    /// Method as JSON, e.g. {"method": "tlsh", "shingle_k": 5, ...}.
    /// Replaces --method and the parameter flags.
    #[arg(long, value_name = "FILE", conflicts_with = "method")]
    pub config: Option<PathBuf>,

    /// Seed for tlsh minhash, klsh projections and k-means, and canopy
    /// projections. Default 0.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Shingle length. Default 5 for tlsh, 2 otherwise.
    #[arg(long, value_name = "K")]
    pub shingle_k: Option<usize>,

    /// tlsh: minhash permutations. Default 100.
    #[arg(long, value_name = "P")]
    pub permutations: Option<usize>,

    /// tlsh: number of bands. Default 26.
    #[arg(long, value_name = "B")]
    pub bands: Option<usize>,

    /// tlsh: maximum block size. Default 500.
    #[arg(long, value_name = "T")]
    pub max_block: Option<usize>,

    /// klsh, canopy: number of random projections. Default 100.
    #[arg(long, value_name = "P")]
    pub projections: Option<usize>,

    /// klsh: exact number of blocks.
    #[arg(long, value_name = "C", conflicts_with_all = ["avg_block_size", "sqrt_blocks"])]
    pub num_blocks: Option<usize>,

    /// klsh: blocks = ceil(n / A). Default 25 when no block count is given.
    #[arg(long, value_name = "A", conflicts_with = "sqrt_blocks")]
    pub avg_block_size: Option<usize>,

    /// klsh: blocks = ceil(sqrt(n)).
    #[arg(long)]
    pub sqrt_blocks: bool,

    /// klsh: maximum k-means iterations. Default 100.
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,

    /// rule: expression or preset name (t1c1..t1c12, t2c1..t2c8).
    #[arg(long, value_name = "RULE")]
    pub rule: Option<String>,

    /// tnn: distance threshold on unit TF-IDF vectors. Required for tnn.
    #[arg(long, value_name = "D")]
    pub threshold: Option<f64>,

    /// knn: minimum block size. Required for knn.
    #[arg(long, value_name = "K")]
    pub k_min: Option<usize>,

    /// canopy: loose threshold. Required for canopy.
    #[arg(long, value_name = "D")]
    pub t1: Option<f64>,

    /// canopy: tight threshold, at most t1. Required for canopy.
    #[arg(long, value_name = "D")]
    pub t2: Option<f64>,

    /// canopy: `projection` (default) or `tfidf`.
    #[arg(long, value_name = "KIND")]
    pub canopy_distance: Option<String>,

    /// tnn, knn, canopy: visit bases in a random order drawn from this seed
    /// instead of ascending record order.
    #[arg(long, value_name = "N")]
    pub randomize_bases: Option<u64>,
}

impl MethodArgs {
    fn given(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("--seed", self.seed.is_some()),
            ("--shingle-k", self.shingle_k.is_some()),
            ("--permutations", self.permutations.is_some()),
            ("--bands", self.bands.is_some()),
            ("--max-block", self.max_block.is_some()),
            ("--projections", self.projections.is_some()),
            ("--num-blocks", self.num_blocks.is_some()),
            ("--avg-block-size", self.avg_block_size.is_some()),
            ("--sqrt-blocks", self.sqrt_blocks),
            ("--max-iter", self.max_iter.is_some()),
            ("--rule", self.rule.is_some()),
            ("--threshold", self.threshold.is_some()),
            ("--k-min", self.k_min.is_some()),
            ("--t1", self.t1.is_some()),
            ("--t2", self.t2.is_some()),
            ("--canopy-distance", self.canopy_distance.is_some()),
            ("--randomize-bases", self.randomize_bases.is_some()),
        ]
    }

    fn allow(&self, method: &str, allowed: &[&str]) -> Result<()> {
        let stray: Vec<&str> = self
            .given()
            .into_iter()
            .filter(|(flag, set)| *set && !allowed.contains(flag))
            .map(|(flag, _)| flag)
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(Error::Param(format!(
                "{} not valid for method `{method}`",
                stray.join(", ")
            )))
        }
    }

    fn required<T: Copy>(value: Option<T>, flag: &str, method: &str) -> Result<T> {
        value.ok_or_else(|| Error::Param(format!("method `{method}` requires {flag}")))
    }

    pub fn build(&self) -> Result<Method> {
        let method = if let Some(path) = &self.config {
            self.allow("config", &[])?;
            let text = read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Param(format!("{}: {e}", path.display())))?
        } else {
            self.method_from_flags(self.method.as_deref().unwrap_or_default())?
        };
        method.validate()?;
        Ok(method)
    }

    fn method_from_flags(&self, name: &str) -> Result<Method> {
        let seed = self.seed.unwrap_or(0);
        let tlsh = |base: TlshParams| -> Result<Method> {
            self.allow(name, &["--seed", "--shingle-k", "--permutations", "--bands", "--max-block"])?;
            Ok(Method::Tlsh(TlshParams {
                shingle_k: self.shingle_k.unwrap_or(base.shingle_k),
                permutations: self.permutations.unwrap_or(base.permutations),
                bands: self.bands.unwrap_or(base.bands),
                max_block: self.max_block.unwrap_or(base.max_block),
                seed,
            }))
        };
        let klsh = |base: KlshParams| -> Result<Method> {
            self.allow(
                name,
                &[
                    "--seed",
                    "--shingle-k",
                    "--projections",
                    "--num-blocks",
                    "--avg-block-size",
                    "--sqrt-blocks",
                    "--max-iter",
                ],
            )?;
            let blocks = match (self.num_blocks, self.avg_block_size, self.sqrt_blocks) {
                (Some(c), _, _) => BlockCount::Fixed(c),
                (_, Some(a), _) => BlockCount::AvgSize(a),
                (_, _, true) => BlockCount::Sqrt,
                _ => base.blocks,
            };
            Ok(Method::Klsh(KlshParams {
                shingle_k: self.shingle_k.unwrap_or(base.shingle_k),
                projections: self.projections.unwrap_or(base.projections),
                blocks,
                max_iter: self.max_iter.unwrap_or(base.max_iter),
                seed,
            }))
        };
        match name {
            "tlsh" => tlsh(TlshParams::default()),
            "tlsh-rldata" => tlsh(TlshParams::rldata(seed)),
            "tlsh-noisy" => tlsh(TlshParams::noisy(seed)),
            "klsh" => klsh(KlshParams::default()),
            "klsh-rldata" => klsh(KlshParams::rldata(seed)),
            "klsh-noisy" => klsh(KlshParams::noisy(seed)),
            "rule" => {
                self.allow(name, &["--rule"])?;
                Ok(Method::Rule {
                    rule: self
                        .rule
                        .clone()
                        .ok_or_else(|| Error::Param("method `rule` requires --rule".into()))?,
                })
            }
            "tnn" => {
                self.allow(name, &["--shingle-k", "--threshold", "--randomize-bases"])?;
                Ok(Method::Tnn {
                    shingle_k: self.shingle_k.unwrap_or(2),
                    threshold: Self::required(self.threshold, "--threshold", name)?,
                    randomize_bases: self.randomize_bases,
                })
            }
            "knn" => {
                self.allow(name, &["--shingle-k", "--k-min", "--randomize-bases"])?;
                Ok(Method::Knn {
                    shingle_k: self.shingle_k.unwrap_or(2),
                    k_min: Self::required(self.k_min, "--k-min", name)?,
                    randomize_bases: self.randomize_bases,
                })
            }
            "canopy" => {
                let distance = self.canopy_distance.as_deref().unwrap_or("projection");
                let mut allowed = vec!["--shingle-k", "--t1", "--t2", "--canopy-distance", "--randomize-bases"];
                if distance == "projection" {
                    allowed.extend(["--seed", "--projections"]);
                }
                self.allow(name, &allowed)?;
                let distance = match distance {
                    "projection" => CanopyDistance::Projection {
                        projections: self.projections.unwrap_or(100),
                        seed,
                    },
                    "tfidf" => CanopyDistance::Tfidf,
                    other => {
                        return Err(Error::Param(format!(
                            "unknown canopy distance `{other}` (expected projection or tfidf)"
                        )))
                    }
                };
                Ok(Method::Canopy(CanopyParams {
                    shingle_k: self.shingle_k.unwrap_or(2),
                    t1: Self::required(self.t1, "--t1", name)?,
                    t2: Self::required(self.t2, "--t2", name)?,
                    distance,
                    randomize_bases: self.randomize_bases,
                }))
            }
            other => Err(Error::Param(format!(
                "unknown method `{other}` (expected rule, tnn, knn, canopy, tlsh, klsh, \
                 tlsh-rldata, tlsh-noisy, klsh-rldata or klsh-noisy)"
            ))),
        }
    }
}
