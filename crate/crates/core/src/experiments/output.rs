//! CSV and JSON serialisation of result rows.
//!
//! CSV files start with one `# config: <json>` line holding the resolved
//! run configuration, followed by a header with the columns of
//! [`CSV_COLUMNS`] in that order. Optional values are empty cells, and the
//! pump profile is a `;`-separated list. Floats are written in shortest
//! round-trip form, so a row read back re-evaluates bit-for-bit.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::Serialize;

use super::ResultRow;
use crate::error::{invalid, Result};

pub const CONFIG_PREFIX: &str = "# config: ";

pub const CSV_COLUMNS: [&str; 24] = [
    "v_r",
    "v_t",
    "v_b",
    "v_d",
    "source",
    "strategy",
    "mode",
    "n_units",
    "n_opt",
    "n_ref",
    "p1_max",
    "scalar_lambda",
    "bound_clamped",
    "converged",
    "evaluations",
    "seed",
    "baseline_strategy",
    "baseline_mode",
    "baseline_n_units",
    "baseline_p1",
    "delta",
    "delta_minus",
    "delta_plus",
    "lambdas",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn to_record(row: &ResultRow) -> Vec<String> {
    vec![
        row.v_r.to_string(),
        row.v_t.to_string(),
        row.v_b.to_string(),
        row.v_d.to_string(),
        row.source.to_string(),
        row.strategy.to_string(),
        row.mode.to_string(),
        row.n_units.to_string(),
        opt(&row.n_opt),
        opt(&row.n_ref),
        row.p1_max.to_string(),
        opt(&row.scalar_lambda),
        row.bound_clamped.to_string(),
        row.converged.to_string(),
        row.evaluations.to_string(),
        row.seed.to_string(),
        opt(&row.baseline_strategy),
        opt(&row.baseline_mode),
        opt(&row.baseline_n_units),
        opt(&row.baseline_p1),
        opt(&row.delta),
        opt(&row.delta_minus),
        opt(&row.delta_plus),
        row.lambdas.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
    ]
}

pub fn from_record(record: &csv::StringRecord) -> Result<ResultRow> {
    if record.len() != CSV_COLUMNS.len() {
        return Err(invalid(format!(
            "expected {} columns, found {}",
            CSV_COLUMNS.len(),
            record.len()
        )));
    }
    let field = |i: usize| record.get(i).unwrap_or("");
    fn parse<T: std::str::FromStr>(name: &str, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| invalid(format!("bad value '{s}' in column {name}")))
    }
    let get = |i: usize| field(i);
    let optional = |i: usize| -> Option<&str> { Some(get(i)).filter(|s| !s.is_empty()) };
    macro_rules! req {
        ($i:expr) => {
            parse(CSV_COLUMNS[$i], get($i))?
        };
    }
    macro_rules! maybe {
        ($i:expr) => {
            match optional($i) {
                Some(s) => Some(parse(CSV_COLUMNS[$i], s)?),
                None => None,
            }
        };
    }
    let lambdas = match optional(23) {
        Some(s) => s
            .split(';')
            .map(|t| parse("lambdas", t))
            .collect::<Result<Vec<f64>>>()?,
        None => Vec::new(),
    };
    Ok(ResultRow {
        v_r: req!(0),
        v_t: req!(1),
        v_b: req!(2),
        v_d: req!(3),
        source: req!(4),
        strategy: req!(5),
        mode: req!(6),
        n_units: req!(7),
        n_opt: maybe!(8),
        n_ref: maybe!(9),
        p1_max: req!(10),
        scalar_lambda: maybe!(11),
        bound_clamped: req!(12),
        converged: req!(13),
        evaluations: req!(14),
        seed: req!(15),
        baseline_strategy: maybe!(16),
        baseline_mode: maybe!(17),
        baseline_n_units: maybe!(18),
        baseline_p1: maybe!(19),
        delta: maybe!(20),
        delta_minus: maybe!(21),
        delta_plus: maybe!(22),
        lambdas,
        wall_time: Default::default(),
    })
}

fn config_line(config: &impl Serialize) -> Result<String> {
    Ok(format!("{CONFIG_PREFIX}{}\n", serde_json::to_string(config)?))
}

/// Writes a complete CSV document.
pub fn write_csv<W: Write>(mut out: W, config: &impl Serialize, rows: &[ResultRow]) -> Result<()> {
    out.write_all(config_line(config)?.as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for row in rows {
        writer.write_record(to_record(row))?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads rows (and the embedded config, if present) from a CSV document.
pub fn read_csv<R: Read>(input: R) -> Result<(Option<serde_json::Value>, Vec<ResultRow>)> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let config = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix(CONFIG_PREFIX))
        .map(serde_json::from_str)
        .transpose()?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = reader.records().map(|r| from_record(&r?)).collect::<Result<Vec<_>>>()?;
    Ok((config, rows))
}

#[derive(Serialize)]
struct JsonDocument<'a, C: Serialize> {
    config: &'a C,
    rows: &'a [ResultRow],
}

pub fn write_json<W: Write>(mut out: W, config: &impl Serialize, rows: &[ResultRow]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &JsonDocument { config, rows })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Append-only CSV file that survives interruption: rows are flushed as
/// they arrive, and reopening with the same config continues where the
/// previous run stopped.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    /// Opens `path` for `config`. An existing file written for the same
    /// config is resumed; the keys of its rows are returned so the caller
    /// can skip them. A partial trailing line is discarded. A file written
    /// for a different config is an error.
    pub fn open(path: &Path, config: &impl Serialize) -> Result<(CsvSink, HashSet<String>)> {
        let header = config_line(config)?;
        let mut done = HashSet::new();
        if path.exists() && std::fs::metadata(path)?.len() > 0 {
            let mut file = OpenOptions::new().read(true).write(true).open(path)?;
            let mut first = String::new();
            BufReader::new(&mut file).read_line(&mut first)?;
            if first != header {
                return Err(invalid(format!(
                    "{} was written with a different configuration",
                    path.display()
                )));
            }
            let mut text = String::new();
            file.seek(SeekFrom::Start(0))?;
            file.read_to_string(&mut text)?;
            let complete = text.rfind('\n').map_or(0, |i| i + 1);
            file.set_len(complete as u64)?;
            let (_, rows) = read_csv(&text.as_bytes()[..complete])?;
            done.extend(rows.iter().map(ResultRow::key));
            let has_header = text[header.len()..complete].lines().next().is_some();
            file.seek(SeekFrom::End(0))?;
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            if !has_header {
                writer.write_record(CSV_COLUMNS)?;
                writer.flush()?;
            }
            return Ok((CsvSink { writer }, done));
        }
        let mut file = File::create(path)?;
        file.write_all(header.as_bytes())?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(CSV_COLUMNS)?;
        writer.flush()?;
        Ok((CsvSink { writer }, done))
    }

    pub fn append(&mut self, rows: &[ResultRow]) -> Result<()> {
        for row in rows {
            self.writer.write_record(to_record(row))?;
        }
        self.writer.flush()?;
        Ok(())
    }
}
