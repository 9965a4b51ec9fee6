mod io;
mod method_args;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linkblock::baselines::{rule_preset, RulePreset, TABLE1_PRESETS, TABLE2_PRESETS};
use linkblock::corpus::{true_pairs, Dataset};
use linkblock::eval::{
    expand_grid, log_log_slope, render_table, scaling_csv, scaling_sweep, sensitivity_sweep,
    EvalReport, SweepGrid, Timings,
};
use linkblock::synthgen::{self, CorruptionSpec, Preset};
use linkblock::{Error, Method, Result};
use serde::Serialize;

use io::{parse_preset, read_to_string, read_truth, write_atomic, write_blocking, DataArgs};
use method_args::MethodArgs;

#[derive(Debug, Parser)]
#[command(name = "linkblock", version, about = "Blocking for record linkage")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "LINKBLOCK_OUT_DIR", default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,

    /// Worker threads. Defaults to the available parallelism; results do not
    /// depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset as CSV, with its corruption
    /// spec as JSON next to it.
    Generate {
        /// rldata500-analog, rldata10000-analog, noisy10-analog,
        /// noisy30-analog or noisy50-analog.
        #[arg(long, value_name = "NAME", value_parser = parse_preset)]
        preset: Preset,

        /// Generator seed. Default 0, or the seed in --spec.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,

        /// Approximate total number of records. Default: the preset's size.
        #[arg(long, value_name = "N")]
        records: Option<usize>,

        /// Corruption spec JSON replacing the preset's.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,

        /// Output CSV. Default: <out-dir>/<preset>-seed<seed>.csv.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,

        #[arg(long, value_name = "NAME", default_value = "rec_id")]
        id_column: String,

        #[arg(long, value_name = "NAME", default_value = "ent_id")]
        entity_column: String,
    },

    /// Block a dataset and score the result against its ground truth.
    /// Writes partition.csv or pairs.csv, report.json and report.txt.
    Block {
        #[command(flatten)]
        data: DataArgs,

        #[command(flatten)]
        method: MethodArgs,

        /// Report all timings as zero so reports are byte-reproducible.
        #[arg(long)]
        zero_timings: bool,
    },

    /// Score an existing partition or pair set. Writes report.json and
    /// report.txt.
    Evaluate {
        /// Partition CSV with columns record_id, block_id.
        #[arg(long, value_name = "FILE", required_unless_present = "pairs", conflicts_with = "pairs")]
        partition: Option<PathBuf>,

        /// Candidate pair CSV with columns id_a, id_b.
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,

        /// CSV with record ids and ground-truth entity ids, such as the
        /// dataset itself.
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,

        #[arg(long, value_name = "NAME", default_value = "rec_id")]
        id_column: String,

        #[arg(long, value_name = "NAME", default_value = "ent_id")]
        entity_column: String,

        /// Method name echoed in the report.
        #[arg(long, value_name = "NAME", default_value = "external")]
        label: String,
    },

    /// Run every point of a parameter grid on one dataset. Writes
    /// report.json and report.txt.
    Sweep {
        /// JSON `{"base": <method>, "grid": {"param": [values, ...]}}`.
        #[arg(long, value_name = "FILE")]
        grid: PathBuf,

        #[command(flatten)]
        data: DataArgs,

        /// Report all timings as zero so reports are byte-reproducible.
        #[arg(long)]
        zero_timings: bool,
    },

    /// Time a method on generated datasets of increasing size. Writes
    /// scaling.csv, report.json and report.txt.
    Bench {
        #[command(flatten)]
        method: MethodArgs,

        /// Generator preset scaled to each size.
        #[arg(long, value_name = "NAME", value_parser = parse_preset, default_value = "rldata10000-analog")]
        preset: Preset,

        /// Strictly ascending dataset sizes.
        #[arg(long, value_name = "N,N,...", value_delimiter = ',', default_value = "1000,2000,4000,8000")]
        sizes: Vec<usize>,

        /// Generator seed; size n uses seed + n.
        #[arg(long, value_name = "N", default_value_t = 0)]
        data_seed: u64,
    },

    /// Run the rule presets of both criteria tables on a dataset. Tables
    /// whose fields are missing from the schema are skipped. Writes
    /// report.json and report.txt.
    ReproduceTables {
        #[command(flatten)]
        data: DataArgs,

        /// Report all timings as zero so reports are byte-reproducible.
        #[arg(long)]
        zero_timings: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_param_error() { 4 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Param("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Param(format!("cannot start {n} worker threads: {e}")))?;
    }
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Generate {
            preset,
            seed,
            records,
            spec,
            output,
            id_column,
            entity_column,
        } => generate(out, preset, seed, records, spec, output, &id_column, &entity_column),
        Command::Block {
            data,
            method,
            zero_timings,
        } => block(out, &data, &method, zero_timings),
        Command::Evaluate {
            partition,
            pairs,
            truth,
            id_column,
            entity_column,
            label,
        } => {
            let truth = read_truth(&truth, &id_column, &entity_column)?;
            let blocking = match (partition, pairs) {
                (Some(p), _) => truth.read_partition(&p)?,
                (None, Some(p)) => truth.read_pairs(&p)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let report = EvalReport::new(
                label.clone(),
                serde_json::Value::Null,
                None,
                &blocking,
                &truth.pairs,
                Timings::default(),
            );
            write_reports(out, &report, &render_table(&[(label, report.clone())]))
        }
        Command::Sweep {
            grid,
            data,
            zero_timings,
        } => sweep(out, &grid, &data, zero_timings),
        Command::Bench {
            method,
            preset,
            sizes,
            data_seed,
        } => bench(out, &method.build()?, preset, &sizes, data_seed),
        Command::ReproduceTables { data, zero_timings } => {
            reproduce_tables(out, &data.load()?, zero_timings)
        }
    }
}

fn write_reports<T: Serialize>(dir: &Path, json: &T, text: &str) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(json)?;
    bytes.push(b'\n');
    write_atomic(&dir.join("report.json"), &bytes)?;
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn finish(report: EvalReport, zero_timings: bool) -> EvalReport {
    if zero_timings {
        report.without_timings()
    } else {
        report
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    out: &Path,
    preset: Preset,
    seed: Option<u64>,
    records: Option<usize>,
    spec_path: Option<PathBuf>,
    output: Option<PathBuf>,
    id_column: &str,
    entity_column: &str,
) -> Result<()> {
    let mut spec = match &spec_path {
        Some(path) => serde_json::from_str::<CorruptionSpec>(&read_to_string(path)?)
            .map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?,
        None => preset.spec(0),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let total = records.unwrap_or_else(|| preset.total_records());
    if total == 0 {
        return Err(Error::Param("--records must be at least 1".into()));
    }
    let originals = ((total as f64) * (1.0 - spec.duplicate_fraction)).round().max(1.0) as usize;
    let ds = synthgen::generate(originals, &preset.schema(), &preset.lexicon(), &spec)?;

    let csv_path =
        output.unwrap_or_else(|| out.join(format!("{}-seed{}.csv", preset.name(), spec.seed)));
    let mut bytes = Vec::new();
    ds.write_csv(&mut bytes, id_column, entity_column)?;
    write_atomic(&csv_path, &bytes)?;
    let mut spec_json = serde_json::to_vec_pretty(&spec)?;
    spec_json.push(b'\n');
    write_atomic(&csv_path.with_extension("spec.json"), &spec_json)?;
    println!(
        "wrote {} records ({} true pairs) to {}",
        ds.n(),
        true_pairs(&ds).len(),
        csv_path.display()
    );
    Ok(())
}

fn block(out: &Path, data: &DataArgs, method: &MethodArgs, zero_timings: bool) -> Result<()> {
    let method = method.build()?;
    let ds = data.load()?;
    let result = method.run(&ds)?;
    let written = write_blocking(out, &ds.record_ids(), &result.blocking)?;
    let report = finish(
        EvalReport::new(
            method.name(),
            method.params_json(),
            method.seed(),
            &result.blocking,
            &true_pairs(&ds),
            result.timings,
        ),
        zero_timings,
    );
    let mut text = render_table(&[(method.name().to_string(), report.clone())]);
    let _ = writeln!(text, "\nparams: {}", report.params);
    let _ = writeln!(text, "blocking: {}", written.display());
    write_reports(out, &report, &text)
}

/// `key=value` for every grid parameter of one point.
fn grid_label(method: &Method, keys: &[&String]) -> String {
    let params = serde_json::to_value(method).unwrap_or_default();
    keys.iter()
        .map(|k| format!("{k}={}", params[k.as_str()]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sweep(out: &Path, grid_path: &Path, data: &DataArgs, zero_timings: bool) -> Result<()> {
    let grid: SweepGrid = serde_json::from_str(&read_to_string(grid_path)?)
        .map_err(|e| Error::Param(format!("{}: {e}", grid_path.display())))?;
    let methods = expand_grid(&grid)?;
    let ds = data.load()?;
    let reports: Vec<EvalReport> = sensitivity_sweep(&ds, &methods)?
        .into_iter()
        .map(|r| finish(r, zero_timings))
        .collect();
    let keys: Vec<&String> = grid.grid.keys().collect();
    let rows: Vec<(String, EvalReport)> = methods
        .iter()
        .map(|m| grid_label(m, &keys))
        .zip(reports.iter().cloned())
        .collect();
    write_reports(out, &reports, &render_table(&rows))
}

#[derive(Serialize)]
struct BenchReport<'a> {
    method: &'a str,
    params: serde_json::Value,
    preset: &'a str,
    rows: &'a [linkblock::eval::ScalingRow],
    time_slope: f64,
    vocab_slope: Option<f64>,
}

fn bench(out: &Path, method: &Method, preset: Preset, sizes: &[usize], seed: u64) -> Result<()> {
    let rows = scaling_sweep(preset, method, sizes, seed)?;
    write_atomic(&out.join("scaling.csv"), scaling_csv(&rows).as_bytes())?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let times: Vec<f64> = rows.iter().map(|r| r.seconds.max(1e-9)).collect();
    let time_slope = log_log_slope(&xs, &times)?;
    let vocab: Option<Vec<f64>> = rows.iter().map(|r| r.vocab_size.map(|v| v as f64)).collect();
    let vocab_slope = vocab.map(|v| log_log_slope(&xs, &v)).transpose()?;

    let mut text = String::from(&scaling_csv(&rows));
    let _ = writeln!(text, "\ntime slope (log-log): {time_slope:.3}");
    if let Some(b) = vocab_slope {
        let _ = writeln!(text, "vocabulary slope (log-log): {b:.3}");
    }
    let report = BenchReport {
        method: method.name(),
        params: method.params_json(),
        preset: preset.name(),
        rows: &rows,
        time_slope,
        vocab_slope,
    };
    write_reports(out, &report, &text)
}

#[derive(Serialize)]
struct TableReport {
    table: String,
    criteria: Vec<CriterionReport>,
}

#[derive(Serialize)]
struct CriterionReport {
    preset: String,
    description: String,
    rule: String,
    #[serde(flatten)]
    report: EvalReport,
}

fn reproduce_tables(out: &Path, ds: &Dataset, zero_timings: bool) -> Result<()> {
    let tables: [(&str, &[RulePreset]); 2] = [("Table 1", &TABLE1_PRESETS), ("Table 2", &TABLE2_PRESETS)];
    let truth = true_pairs(ds);
    let mut json = Vec::new();
    let mut text = String::new();
    for (title, presets) in tables {
        let methods: Vec<Method> = presets
            .iter()
            .map(|p| Method::Rule { rule: p.0.to_string() })
            .collect();
        // A table applies when all of its rules compile against the schema.
        let compiles = presets.iter().all(|p| {
            linkblock::baselines::NonMatchRule::parse(p.2)
                .and_then(|r| r.compile(ds.schema()))
                .is_ok()
        });
        if !compiles {
            let _ = writeln!(text, "{title}: skipped, the schema lacks its fields\n");
            continue;
        }
        let mut rows = Vec::new();
        let mut criteria = Vec::new();
        for m in &methods {
            let result = m.run(ds)?;
            let Method::Rule { rule } = m else { unreachable!() };
            let (name, description, expr) = rule_preset(rule).expect("preset names are valid");
            let report = finish(
                EvalReport::new("rule", m.params_json(), None, &result.blocking, &truth, result.timings),
                zero_timings,
            );
            rows.push((format!("{name}  {description}"), report.clone()));
            criteria.push(CriterionReport {
                preset: name.into(),
                description: description.into(),
                rule: expr.into(),
                report,
            });
        }
        let _ = writeln!(text, "{title}\n{}", render_table(&rows));
        json.push(TableReport {
            table: title.into(),
            criteria,
        });
    }
    if json.is_empty() {
        return Err(Error::Schema(
            "no criteria table applies to this schema".into(),
        ));
    }
    write_reports(out, &BTreeMap::from([("tables", json)]), &text)
}
