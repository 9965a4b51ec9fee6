//! Labeled synthetic datasets with controlled duplicate corruption.
//!
//! Originals are drawn field by field from [`ValueSource`]s; a seeded subset of
//! originals then receives corrupted copies (same entity id, fresh record id)
//! appended after all originals. Every record draws from its own ChaCha
//! stream keyed by `(seed, record_id)`, so output does not depend on the
//! number of worker threads.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, FieldKind, FieldSchema, Record};
use crate::error::{Error, Result};

const FORENAMES: &str = include_str!("../data/forenames.txt");
const SURNAMES: &str = include_str!("../data/surnames.txt");
const CITIES: &str = include_str!("../data/cities.txt");

/// Stream used for choosing which originals get duplicated.
const ASSIGNMENT_STREAM: u64 = u64::MAX;

pub fn record_rng(seed: u64, record_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record_id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    SubstituteChar,
    DeleteChar,
    InsertChar,
    TransposeAdjacent,
    SwapFields,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorWeights {
    pub substitute: f64,
    pub delete: f64,
    pub insert: f64,
    pub transpose: f64,
    pub swap_fields: f64,
}

impl Default for ErrorWeights {
    fn default() -> Self {
        ErrorWeights {
            substitute: 1.0,
            delete: 1.0,
            insert: 1.0,
            transpose: 1.0,
            swap_fields: 0.0,
        }
    }
}

impl ErrorWeights {
    fn as_array(&self) -> [(ErrorKind, f64); 5] {
        [
            (ErrorKind::SubstituteChar, self.substitute),
            (ErrorKind::DeleteChar, self.delete),
            (ErrorKind::InsertChar, self.insert),
            (ErrorKind::TransposeAdjacent, self.transpose),
            (ErrorKind::SwapFields, self.swap_fields),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Share of the final dataset made of duplicates, in the open interval (0, 1).
    pub duplicate_fraction: f64,
    pub errors_per_duplicate: u32,
    pub max_duplicates_per_original: u32,
    #[serde(default)]
    pub error_weights: ErrorWeights,
    pub seed: u64,
}

impl CorruptionSpec {
    /// 10% duplicates, one error each, at most one duplicate per original.
    pub fn rldata(seed: u64) -> Self {
        CorruptionSpec {
            duplicate_fraction: 0.10,
            errors_per_duplicate: 1,
            max_duplicates_per_original: 1,
            error_weights: ErrorWeights::default(),
            seed,
        }
    }

    /// Five errors per duplicate, up to five duplicates per original.
    pub fn noisy(duplicate_fraction: f64, seed: u64) -> Self {
        CorruptionSpec {
            duplicate_fraction,
            errors_per_duplicate: 5,
            max_duplicates_per_original: 5,
            error_weights: ErrorWeights::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.duplicate_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Spec(format!(
                "duplicate_fraction must lie in (0, 1), got {f}"
            )));
        }
        if self.errors_per_duplicate == 0 {
            return Err(Error::Spec("errors_per_duplicate must be at least 1".into()));
        }
        if self.max_duplicates_per_original == 0 {
            return Err(Error::Spec(
                "max_duplicates_per_original must be at least 1".into(),
            ));
        }
        let weights = self.error_weights.as_array();
        if weights.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::Spec("error weights must be finite and nonnegative".into()));
        }
        if weights.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::Spec("error weights are all zero".into()));
        }
        Ok(())
    }

    /// Number of duplicates `d` such that `d = ceil(fraction * (originals + d))`.
    pub fn duplicate_count(&self, n_originals: usize) -> usize {
        let f = self.duplicate_fraction;
        let exact = f * n_originals as f64 / (1.0 - f);
        (exact - 1e-9).ceil().max(0.0) as usize
    }
}

/// How one field's values are drawn for original records.
#[derive(Debug, Clone)]
pub enum ValueSource {
    /// Draws from a list; entry `r` (0-based) has weight `1 / (r + 1)^exponent`.
    Lexicon {
        values: Arc<[String]>,
        exponent: f64,
    },
    /// Empty with probability `1 - probability`, otherwise drawn from `inner`.
    Optional {
        probability: f64,
        inner: Box<ValueSource>,
    },
    Year { from: u32, to: u32 },
    Month,
    /// Day valid for the month and year already drawn in the given fields.
    DayOfMonth { year_field: usize, month_field: usize },
    Digits { len: usize },
    IntRange { lo: u32, hi: u32 },
    Choice(Vec<String>),
}

impl ValueSource {
    pub fn lexicon(values: &[String], exponent: f64) -> Self {
        ValueSource::Lexicon {
            values: values.into(),
            exponent,
        }
    }

    fn is_empty_pool(&self) -> bool {
        match self {
            ValueSource::Lexicon { values, .. } => values.is_empty(),
            ValueSource::Optional { inner, .. } => inner.is_empty_pool(),
            ValueSource::Choice(v) => v.is_empty(),
            _ => false,
        }
    }
}

/// Per-field value sources, aligned with a schema.
#[derive(Debug, Clone)]
pub struct Lexicon {
    sources: Vec<ValueSource>,
}

pub fn bundled_forenames() -> Vec<String> {
    lines(FORENAMES)
}

pub fn bundled_surnames() -> Vec<String> {
    lines(SURNAMES)
}

pub fn bundled_cities() -> Vec<String> {
    lines(CITIES)
}

fn lines(s: &str) -> Vec<String> {
    s.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

impl Lexicon {
    pub fn new(sources: Vec<ValueSource>) -> Self {
        Lexicon { sources }
    }

    /// Sources for [`FieldSchema::rldata`].
    pub fn rldata() -> Self {
        let fore = bundled_forenames();
        let sur = bundled_surnames();
        Lexicon::new(vec![
            ValueSource::lexicon(&fore, 0.75),
            ValueSource::Optional {
                probability: 0.05,
                inner: Box::new(ValueSource::lexicon(&fore, 0.75)),
            },
            ValueSource::lexicon(&sur, 0.85),
            ValueSource::Optional {
                probability: 0.02,
                inner: Box::new(ValueSource::lexicon(&sur, 0.85)),
            },
            ValueSource::Year { from: 1920, to: 1999 },
            ValueSource::Month,
            ValueSource::DayOfMonth {
                year_field: 4,
                month_field: 5,
            },
        ])
    }

    /// Sources for [`FieldSchema::noisy`].
    pub fn noisy() -> Self {
        Lexicon::new(vec![
            ValueSource::lexicon(&bundled_forenames(), 0.75),
            ValueSource::lexicon(&bundled_surnames(), 0.85),
            ValueSource::Choice(vec!["F".into(), "M".into()]),
            ValueSource::Digits { len: 5 },
            ValueSource::lexicon(&bundled_cities(), 1.0),
            ValueSource::Digits { len: 10 },
            ValueSource::Digits { len: 16 },
            ValueSource::IntRange { lo: 18, hi: 90 },
        ])
    }

    pub fn sources(&self) -> &[ValueSource] {
        &self.sources
    }
}

/// Lexicon weights, precomputed once per generation run.
enum Sampler {
    Weighted(Arc<[String]>, WeightedIndex<f64>),
    Optional(f64, Box<Sampler>),
    Plain(ValueSource),
}

impl Sampler {
    fn build(src: &ValueSource) -> Result<Self> {
        Ok(match src {
            ValueSource::Lexicon { values, exponent } => {
                let w = (0..values.len()).map(|r| 1.0 / ((r + 1) as f64).powf(*exponent));
                let dist = WeightedIndex::new(w)
                    .map_err(|e| Error::Spec(format!("bad lexicon weights: {e}")))?;
                Sampler::Weighted(values.clone(), dist)
            }
            ValueSource::Optional { probability, inner } => {
                Sampler::Optional(*probability, Box::new(Sampler::build(inner)?))
            }
            other => Sampler::Plain(other.clone()),
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, values: &[String]) -> String {
        match self {
            Sampler::Weighted(pool, dist) => pool[dist.sample(rng)].clone(),
            Sampler::Optional(p, inner) => {
                if rng.random_bool(*p) {
                    inner.draw(rng, values)
                } else {
                    String::new()
                }
            }
            Sampler::Plain(src) => match src {
                ValueSource::Year { from, to } => rng.random_range(*from..=*to).to_string(),
                ValueSource::Month => format!("{:02}", rng.random_range(1..=12u32)),
                ValueSource::DayOfMonth {
                    year_field,
                    month_field,
                } => {
                    let year = values.get(*year_field).and_then(|v| v.parse().ok()).unwrap_or(2001);
                    let month = values.get(*month_field).and_then(|v| v.parse().ok()).unwrap_or(1);
                    format!("{:02}", rng.random_range(1..=days_in_month(year, month)))
                }
                ValueSource::Digits { len } => (0..*len)
                    .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
                    .collect(),
                ValueSource::IntRange { lo, hi } => rng.random_range(*lo..=*hi).to_string(),
                ValueSource::Choice(options) => options[rng.random_range(0..options.len())].clone(),
                ValueSource::Lexicon { .. } | ValueSource::Optional { .. } => unreachable!(),
            },
        }
    }
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

/// Characters a corrupted field may gain.
pub fn alphabet(kind: FieldKind) -> &'static [char] {
    const LETTERS: [char; 26] = [
        'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R',
        'S', 'T', 'U', 'V', 'W', 'X', 'Y', 'Z',
    ];
    const DIGITS: [char; 10] = ['0', '1', '2', '3', '4', '5', '6', '7', '8', '9'];
    match kind {
        FieldKind::Text | FieldKind::Categorical => &LETTERS,
        FieldKind::Date { .. } | FieldKind::Numeric => &DIGITS,
    }
}

/// One single-character edit at an explicit position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Substitute { pos: usize, ch: char },
    Delete { pos: usize },
    Insert { pos: usize, ch: char },
    /// Swaps the characters at `pos` and `pos + 1`.
    Transpose { pos: usize },
}

/// Applies an edit; positions index characters, not bytes.
pub fn apply_edit(value: &str, edit: Edit) -> String {
    let mut chars: Vec<char> = value.chars().collect();
    match edit {
        Edit::Substitute { pos, ch } => chars[pos] = ch,
        Edit::Delete { pos } => {
            chars.remove(pos);
        }
        Edit::Insert { pos, ch } => chars.insert(pos, ch),
        Edit::Transpose { pos } => chars.swap(pos, pos + 1),
    }
    chars.into_iter().collect()
}

/// Applies one random edit of `kind` to `value`; the result always differs.
///
/// Kinds that need existing content fall back to an insertion on an empty
/// value. A transposition with no unequal adjacent characters becomes a
/// substitution. Fixed-width date parts only receive substitutions and
/// transpositions, because zero-padding would undo a deletion of a leading
/// zero on reload.
pub fn corrupt_value<R: Rng>(value: &str, kind: ErrorKind, field: FieldKind, rng: &mut R) -> String {
    let edit = draw_edit(value, kind, field, rng);
    apply_edit(value, edit)
}

fn draw_edit<R: Rng>(value: &str, kind: ErrorKind, field: FieldKind, rng: &mut R) -> Edit {
    let chars: Vec<char> = value.chars().collect();
    let alpha = alphabet(field);
    let len = chars.len();
    if len == 0 {
        return Edit::Insert {
            pos: 0,
            ch: alpha[rng.random_range(0..alpha.len())],
        };
    }
    let fixed_width = matches!(field, FieldKind::Date { .. });
    let kind = match kind {
        ErrorKind::DeleteChar | ErrorKind::InsertChar if fixed_width => ErrorKind::SubstituteChar,
        ErrorKind::SwapFields => ErrorKind::SubstituteChar,
        k => k,
    };
    match kind {
        ErrorKind::DeleteChar => Edit::Delete {
            pos: rng.random_range(0..len),
        },
        ErrorKind::InsertChar => Edit::Insert {
            pos: rng.random_range(0..=len),
            ch: alpha[rng.random_range(0..alpha.len())],
        },
        ErrorKind::TransposeAdjacent => {
            let candidates: Vec<usize> = (0..len.saturating_sub(1))
                .filter(|&i| chars[i] != chars[i + 1])
                .collect();
            if candidates.is_empty() {
                substitute(&chars, alpha, rng)
            } else {
                Edit::Transpose {
                    pos: candidates[rng.random_range(0..candidates.len())],
                }
            }
        }
        _ => substitute(&chars, alpha, rng),
    }
}

fn substitute<R: Rng>(chars: &[char], alpha: &[char], rng: &mut R) -> Edit {
    let pos = rng.random_range(0..chars.len());
    let current = chars[pos];
    let choices: Vec<char> = alpha.iter().copied().filter(|&c| c != current).collect();
    Edit::Substitute {
        pos,
        ch: choices[rng.random_range(0..choices.len())],
    }
}

/// Generates `n_originals` records plus corrupted duplicates.
pub fn generate(
    n_originals: usize,
    schema: &FieldSchema,
    lexicon: &Lexicon,
    spec: &CorruptionSpec,
) -> Result<Dataset> {
    spec.validate()?;
    if n_originals == 0 {
        return Err(Error::Spec("need at least one original record".into()));
    }
    if lexicon.sources().len() != schema.len() {
        return Err(Error::Spec(format!(
            "lexicon has {} sources for {} schema fields",
            lexicon.sources().len(),
            schema.len()
        )));
    }
    if let Some(i) = lexicon.sources().iter().position(ValueSource::is_empty_pool) {
        return Err(Error::Spec(format!(
            "value pool for field `{}` is empty",
            schema.fields()[i].name
        )));
    }
    let n_dup = spec.duplicate_count(n_originals);
    let capacity = n_originals * spec.max_duplicates_per_original as usize;
    if n_dup > capacity {
        return Err(Error::Spec(format!(
            "{n_dup} duplicates needed but {n_originals} originals allow at most {capacity}"
        )));
    }

    let samplers = lexicon
        .sources()
        .iter()
        .map(Sampler::build)
        .collect::<Result<Vec<_>>>()?;

    let originals: Vec<Record> = (0..n_originals as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = record_rng(spec.seed, id);
            let mut values: Vec<String> = Vec::with_capacity(samplers.len());
            for s in &samplers {
                let v = s.draw(&mut rng, &values);
                values.push(v);
            }
            Record {
                record_id: id,
                entity_id: id,
                values,
            }
        })
        .collect();

    // Each original owns `max_duplicates_per_original` slots; sampling distinct
    // slots caps every group without rejection loops.
    let mut assign_rng = record_rng(spec.seed, ASSIGNMENT_STREAM);
    let per = spec.max_duplicates_per_original as usize;
    let mut slots = index::sample(&mut assign_rng, capacity, n_dup).into_vec();
    slots.sort_unstable();
    let sources: Vec<usize> = slots.into_iter().map(|s| s / per).collect();

    let kinds: Vec<FieldKind> = schema.fields().iter().map(|f| f.kind).collect();
    let duplicates: Vec<Record> = sources
        .par_iter()
        .enumerate()
        .map(|(d, &orig)| {
            let record_id = (n_originals + d) as u64;
            let mut rng = record_rng(spec.seed, record_id);
            let original = &originals[orig];
            let values = corrupt_record(&original.values, &kinds, spec, &mut rng);
            Record {
                record_id,
                entity_id: original.entity_id,
                values,
            }
        })
        .collect();

    let mut records = originals;
    records.extend(duplicates);
    Dataset::new(schema.clone(), records)
}

fn corrupt_record<R: Rng>(
    original: &[String],
    kinds: &[FieldKind],
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Vec<String> {
    let weighted = spec.error_weights.as_array();
    let dist = WeightedIndex::new(weighted.iter().map(|(_, w)| *w)).expect("validated weights");
    loop {
        let mut values = original.to_vec();
        for _ in 0..spec.errors_per_duplicate {
            let kind = weighted[dist.sample(rng)].0;
            if kind == ErrorKind::SwapFields && values.len() >= 2 {
                let a = rng.random_range(0..values.len());
                let mut b = rng.random_range(0..values.len() - 1);
                if b >= a {
                    b += 1;
                }
                if values[a] != values[b] {
                    values.swap(a, b);
                    continue;
                }
            }
            let f = rng.random_range(0..values.len());
            values[f] = corrupt_value(&values[f], kind, kinds[f], rng);
        }
        // Several edits on one field can cancel out.
        if values != original {
            return values;
        }
    }
}

/// Named generator configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Rldata500Analog,
    Rldata10000Analog,
    Noisy10Analog,
    Noisy30Analog,
    Noisy50Analog,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Rldata500Analog,
        Preset::Rldata10000Analog,
        Preset::Noisy10Analog,
        Preset::Noisy30Analog,
        Preset::Noisy50Analog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Rldata500Analog => "rldata500-analog",
            Preset::Rldata10000Analog => "rldata10000-analog",
            Preset::Noisy10Analog => "noisy10-analog",
            Preset::Noisy30Analog => "noisy30-analog",
            Preset::Noisy50Analog => "noisy50-analog",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn is_rldata(self) -> bool {
        matches!(self, Preset::Rldata500Analog | Preset::Rldata10000Analog)
    }

    pub fn total_records(self) -> usize {
        match self {
            Preset::Rldata500Analog => 500,
            _ => 10_000,
        }
    }

    pub fn schema(self) -> FieldSchema {
        if self.is_rldata() {
            FieldSchema::rldata()
        } else {
            FieldSchema::noisy()
        }
    }

    pub fn lexicon(self) -> Lexicon {
        if self.is_rldata() {
            Lexicon::rldata()
        } else {
            Lexicon::noisy()
        }
    }

    pub fn spec(self, seed: u64) -> CorruptionSpec {
        match self {
            Preset::Rldata500Analog | Preset::Rldata10000Analog => CorruptionSpec::rldata(seed),
            Preset::Noisy10Analog => CorruptionSpec::noisy(0.10, seed),
            Preset::Noisy30Analog => CorruptionSpec::noisy(0.30, seed),
            Preset::Noisy50Analog => CorruptionSpec::noisy(0.50, seed),
        }
    }

    /// Originals needed for `total` records at this preset's duplicate share.
    pub fn originals_for(self, total: usize) -> usize {
        let f = self.spec(0).duplicate_fraction;
        ((total as f64) * (1.0 - f)).round().max(1.0) as usize
    }

    pub fn generate(self, seed: u64) -> Result<Dataset> {
        self.generate_sized(self.total_records(), seed)
    }

    /// Same shape as the preset, scaled to about `total` records.
    pub fn generate_sized(self, total: usize, seed: u64) -> Result<Dataset> {
        generate(
            self.originals_for(total),
            &self.schema(),
            &self.lexicon(),
            &self.spec(seed),
        )
    }
}
