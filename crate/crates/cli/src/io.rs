use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use linkblock::corpus::{load_csv, true_pairs_from_labels, Dataset, FieldSchema, Pair};
use linkblock::eval::{Blocking, BlockingPartition, CandidatePairSet};
use linkblock::synthgen::Preset;
use linkblock::{Error, Result};

/// Where the input records come from.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Labeled CSV file to block.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    pub data: Option<PathBuf>,

    /// Generate the input with a synthetic preset instead of reading a file:
    /// rldata500-analog, rldata10000-analog, noisy10-analog, noisy30-analog or
    /// noisy50-analog.
    #[arg(long, value_name = "NAME", value_parser = parse_preset)]
    pub preset: Option<Preset>,

    /// Generator seed used with --preset.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub data_seed: u64,

    /// Field schema of --data: `rldata`, `noisy`, or a JSON file
    /// `{"fields": [{"name": ..., "kind": ...}, ...]}`. Defaults to the
    /// preset's schema, otherwise `rldata`.
    #[arg(long, value_name = "SCHEMA")]
    pub schema: Option<String>,

    /// Record id column of --data; row numbers are used when it is absent.
    #[arg(long, value_name = "NAME", default_value = "rec_id")]
    pub id_column: String,

    /// Ground-truth entity column of --data.
    #[arg(long, value_name = "NAME", default_value = "ent_id")]
    pub entity_column: String,
}

impl DataArgs {
    pub fn load(&self) -> Result<Dataset> {
        match (&self.data, self.preset) {
            (Some(path), _) => {
                let schema = self.resolve_schema(None)?;
                load_csv(path, &schema, &self.id_column, &self.entity_column)
            }
            (None, Some(preset)) => {
                if self.schema.is_some() {
                    return Err(Error::Param("--schema only applies to --data".into()));
                }
                preset.generate(self.data_seed)
            }
            (None, None) => Err(Error::Param("one of --data or --preset is required".into())),
        }
    }

    pub fn resolve_schema(&self, preset: Option<Preset>) -> Result<FieldSchema> {
        match self.schema.as_deref() {
            None => Ok(preset.map_or_else(FieldSchema::rldata, Preset::schema)),
            Some(spec) => parse_schema(spec),
        }
    }
}

pub fn parse_schema(spec: &str) -> Result<FieldSchema> {
    match spec {
        "rldata" => Ok(FieldSchema::rldata()),
        "noisy" => Ok(FieldSchema::noisy()),
        path => {
            let text = read_to_string(Path::new(path))?;
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{path}: {e}")))
        }
    }
}

pub fn parse_preset(name: &str) -> std::result::Result<Preset, String> {
    Preset::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset `{name}` (expected one of {})", names.join(", "))
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn csv_bytes(header: [&str; 2], rows: impl IntoIterator<Item = (u64, u64)>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv output>", e.into_error()))
}

/// `(record_id, block_id)` for a partition, `(id_a, id_b)` for a pair set.
/// Returns the file name used.
pub fn write_blocking(dir: &Path, ids: &[u64], blocking: &Blocking) -> Result<PathBuf> {
    let (name, bytes) = match blocking {
        Blocking::Partition(p) => (
            "partition.csv",
            csv_bytes(
                ["record_id", "block_id"],
                ids.iter().zip(p.assignment()).map(|(&id, &b)| (id, b as u64)),
            )?,
        ),
        Blocking::Pairs(s) => (
            "pairs.csv",
            csv_bytes(
                ["id_a", "id_b"],
                s.pairs().iter().map(|&(a, b)| (ids[a as usize], ids[b as usize])),
            )?,
        ),
    };
    let path = dir.join(name);
    write_atomic(&path, &bytes)?;
    Ok(path)
}

fn read_two_columns(path: &Path, header: [&str; 2]) -> Result<Vec<(u64, u64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    let idx = header.map(|h| headers.iter().position(|c| c.trim() == h));
    let [Some(ia), Some(ib)] = idx else {
        return Err(Error::Schema(format!(
            "{}: expected columns `{}` and `{}`",
            path.display(),
            header[0],
            header[1]
        )));
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| -> Result<u64> {
            let raw = row.get(i).unwrap_or("").trim();
            raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{}: `{raw}` is not a non-negative integer", path.display()),
            })
        };
        out.push((get(ia)?, get(ib)?));
    }
    Ok(out)
}

/// Ground truth: record ids in file order and the true pairs over their
/// indices.
pub struct Truth {
    pub ids: Vec<u64>,
    pub index: HashMap<u64, u32>,
    pub pairs: Vec<Pair>,
}

pub fn read_truth(path: &Path, id_column: &str, entity_column: &str) -> Result<Truth> {
    let rows = read_two_columns(path, [id_column, entity_column])?;
    let ids: Vec<u64> = rows.iter().map(|r| r.0).collect();
    let mut index = HashMap::with_capacity(ids.len());
    for (i, &id) in ids.iter().enumerate() {
        if index.insert(id, i as u32).is_some() {
            return Err(Error::Integrity(format!(
                "{}: duplicate record id {id}",
                path.display()
            )));
        }
    }
    let labels: Vec<u64> = rows.iter().map(|r| r.1).collect();
    Ok(Truth {
        pairs: true_pairs_from_labels(&labels),
        ids,
        index,
    })
}

impl Truth {
    fn lookup(&self, path: &Path, id: u64) -> Result<u32> {
        self.index.get(&id).copied().ok_or_else(|| {
            Error::Integrity(format!(
                "{}: record id {id} is not in the truth file",
                path.display()
            ))
        })
    }

    pub fn read_partition(&self, path: &Path) -> Result<Blocking> {
        let rows = read_two_columns(path, ["record_id", "block_id"])?;
        let mut labels: Vec<Option<u64>> = vec![None; self.ids.len()];
        for (id, block) in rows {
            let i = self.lookup(path, id)? as usize;
            if labels[i].replace(block).is_some() {
                return Err(Error::Integrity(format!(
                    "{}: record id {id} is assigned twice",
                    path.display()
                )));
            }
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| {
                    Error::Integrity(format!(
                        "{}: record id {} has no block",
                        path.display(),
                        self.ids[i]
                    ))
                })
            })
            .collect::<Result<Vec<u64>>>()?;
        Ok(BlockingPartition::from_labels(&labels).into())
    }

    pub fn read_pairs(&self, path: &Path) -> Result<Blocking> {
        let rows = read_two_columns(path, ["id_a", "id_b"])?;
        let pairs = rows
            .into_iter()
            .map(|(a, b)| Ok((self.lookup(path, a)?, self.lookup(path, b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidatePairSet::new(self.ids.len(), pairs)?.into())
    }
}
