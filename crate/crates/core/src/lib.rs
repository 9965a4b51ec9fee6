//! Blocking for record linkage.
//!
//! Blocking splits a file of records into groups so that expensive pairwise
//! comparisons only happen within a group. This crate provides two
//! locality-sensitive hashing methods ([`tlsh`] and [`klsh`]), the
//! traditional baselines they are compared against ([`baselines`]), a
//! synthetic data generator with ground truth ([`synthgen`]), and scoring by
//! recall and reduction ratio ([`eval`]).
//!
//! ```
//! use linkblock::{corpus::true_pairs, eval::score, synthgen::Preset, tlsh};
//!
//! let ds = Preset::Rldata500Analog.generate(7).unwrap();
//! let out = tlsh::tlsh_block(&ds, &tlsh::TlshParams::rldata(7)).unwrap();
//! let s = score(&out.partition.into(), &true_pairs(&ds));
//! assert!(s.reduction_ratio > 90.0);
//! ```

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod klsh;
pub mod method;
pub mod minhash;
pub mod shingle;
pub mod synthgen;
pub mod tlsh;

pub use error::{Error, Result};
pub use method::{Method, MethodOutput};
