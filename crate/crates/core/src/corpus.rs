//! Labeled record datasets: schema, records, ground truth, and CSV ingestion.
//!
//! Every value is normalized on the way in (uppercased, trimmed, internal
//! whitespace collapsed, date parts zero-padded) so that all blocking methods
//! see the same strings.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unordered pair of record indices, stored with `.0 < .1`.
pub type Pair = (u32, u32);

/// Orders a pair so the smaller index comes first.
#[inline]
pub fn pair(a: u32, b: u32) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Values read as missing when ingesting CSV files (R's `write.csv` emits `NA`).
const MISSING_MARKERS: &[&str] = &["NA"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Text,
    Categorical,
    /// A date component stored as digits, zero-padded to `width`.
    Date { width: usize },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(flatten)]
    pub kind: FieldKind,
}

impl Field {
    pub fn new(name: impl Into<String>, kind: FieldKind) -> Self {
        Field {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldSchema {
    fields: Vec<Field>,
}

impl<'de> Deserialize<'de> for FieldSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            fields: Vec<Field>,
        }
        let raw = Raw::deserialize(d)?;
        FieldSchema::new(raw.fields).map_err(serde::de::Error::custom)
    }
}

impl FieldSchema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Schema("schema needs at least one field".into()));
        }
        let mut seen = HashSet::new();
        for f in &fields {
            if f.name.trim().is_empty() {
                return Err(Error::Schema("field names must be non-empty".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate field name `{}`", f.name)));
            }
        }
        Ok(FieldSchema { fields })
    }

    /// First/last name (each with an optional second component) plus a
    /// birth date split into year, month and day.
    pub fn rldata() -> Self {
        use FieldKind::*;
        FieldSchema::new(vec![
            Field::new("fname_c1", Text),
            Field::new("fname_c2", Text),
            Field::new("lname_c1", Text),
            Field::new("lname_c2", Text),
            Field::new("by", Date { width: 4 }),
            Field::new("bm", Date { width: 2 }),
            Field::new("bd", Date { width: 2 }),
        ])
        .expect("static schema is valid")
    }

    /// Names, gender, postal code, city, telephone, credit card and age.
    pub fn noisy() -> Self {
        use FieldKind::*;
        FieldSchema::new(vec![
            Field::new("fname", Text),
            Field::new("lname", Text),
            Field::new("gender", Categorical),
            Field::new("postcode", Numeric),
            Field::new("city", Text),
            Field::new("phone", Numeric),
            Field::new("ccn", Numeric),
            Field::new("age", Numeric),
        ])
        .expect("static schema is valid")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub record_id: u64,
    /// Ground-truth label; records sharing it refer to the same entity.
    pub entity_id: u64,
    pub values: Vec<String>,
}

/// An immutable, validated collection of records over one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: FieldSchema,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: FieldSchema, records: Vec<Record>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(records.len());
        for (row, r) in records.iter().enumerate() {
            if r.values.len() != schema.len() {
                return Err(Error::Integrity(format!(
                    "record {} has {} values, schema has {} fields",
                    r.record_id,
                    r.values.len(),
                    schema.len()
                )));
            }
            if !ids.insert(r.record_id) {
                return Err(Error::Integrity(format!(
                    "duplicate record_id {} (row {row})",
                    r.record_id
                )));
            }
        }
        if records.len() > u32::MAX as usize {
            return Err(Error::Integrity("dataset too large".into()));
        }
        Ok(Dataset { schema, records })
    }

    pub fn schema(&self) -> &FieldSchema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn record_ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.record_id).collect()
    }

    pub fn entity_ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.entity_id).collect()
    }

    /// Keeps the first `n` records.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: self.records[..n.min(self.records.len())].to_vec(),
        }
    }

    /// Writes the dataset as CSV with `id_column`, `entity_column`, then the
    /// schema fields in order.
    pub fn write_csv<W: Write>(&self, out: W, id_column: &str, entity_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![id_column.to_string(), entity_column.to_string()];
        header.extend(self.schema.names().map(str::to_string));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.record_id.to_string(), r.entity_id.to_string()];
            row.extend(r.values.iter().cloned());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Uppercases, trims, and collapses internal whitespace; date parts made only
/// of digits are left-padded with zeros to their width.
pub fn normalize_value(raw: &str, kind: FieldKind) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_uppercase));
    }
    if let FieldKind::Date { width } = kind {
        let len = out.chars().count();
        if len > 0 && len < width && out.chars().all(|c| c.is_ascii_digit()) {
            let mut padded = "0".repeat(width - len);
            padded.push_str(&out);
            return padded;
        }
    }
    out
}

/// Loads a labeled dataset from a CSV file. See [`load_csv_reader`].
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &FieldSchema,
    id_column: &str,
    entity_column: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_reader(file, schema, id_column, entity_column)
}

/// Reads comma-separated, double-quoted UTF-8 CSV with a header row.
///
/// The id column is optional: when the header lacks it, the 0-based row index
/// becomes the record id. The entity column and every schema field must be
/// present.
pub fn load_csv_reader<R: Read>(
    input: R,
    schema: &FieldSchema,
    id_column: &str,
    entity_column: &str,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers().map_err(parse_error)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);

    let id_idx = column(id_column);
    let entity_idx = column(entity_column).ok_or_else(|| {
        Error::Integrity(format!("missing ground-truth column `{entity_column}`"))
    })?;
    let field_idx = schema
        .fields()
        .iter()
        .map(|f| column(&f.name).ok_or_else(|| Error::Schema(format!("missing column `{}`", f.name))))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result.map_err(parse_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let int_at = |idx: usize, what: &str| -> Result<u64> {
            let raw = rec.get(idx).unwrap_or("").trim();
            raw.parse::<u64>().map_err(|_| Error::Parse {
                line,
                message: format!("{what} `{raw}` is not a non-negative integer"),
            })
        };
        let record_id = match id_idx {
            Some(idx) => int_at(idx, "record id")?,
            None => row as u64,
        };
        let entity_id = int_at(entity_idx, "entity id")?;
        let values = field_idx
            .iter()
            .zip(schema.fields())
            .map(|(&idx, f)| {
                let raw = rec.get(idx).unwrap_or("");
                if MISSING_MARKERS.contains(&raw.trim()) {
                    String::new()
                } else {
                    normalize_value(raw, f.kind)
                }
            })
            .collect();
        records.push(Record {
            record_id,
            entity_id,
            values,
        });
    }
    Dataset::new(schema.clone(), records)
}

fn parse_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// All unordered index pairs whose records share an entity id, sorted.
pub fn true_pairs(ds: &Dataset) -> Vec<Pair> {
    true_pairs_from_labels(&ds.entity_ids())
}

pub fn true_pairs_from_labels(labels: &[u64]) -> Vec<Pair> {
    let mut groups: HashMap<u64, Vec<u32>> = HashMap::new();
    for (i, &e) in labels.iter().enumerate() {
        groups.entry(e).or_default().push(i as u32);
    }
    let mut pairs = Vec::new();
    for members in groups.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                pairs.push(pair(i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}
