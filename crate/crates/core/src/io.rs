//! CSV and JSON files: datasets, partitions, final states and summaries.
//!
//! Dataset files hold coordinate columns followed by an optional integer
//! column named `label`. Indices are 0-based in every file; cluster ids start
//! at 1. Floats are written in shortest round-trip form so files are
//! byte-stable across runs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::clustering::{ClusterSummary, Partition};
use crate::error::{domain, Error, Result};
use crate::state::State;
use crate::synthdata::LabeledDataset;

pub const SUMMARY_SCHEMA: &str = "sms-clusters/1";

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a dataset. A header row is optional; when present, a final column
/// named `label` holds integer labels.
pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut has_label = false;
    let mut width: Option<usize> = None;
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(row + 1, |p| p.line() as usize);
        if row == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            has_label = rec.iter().next_back().is_some_and(|f| f.eq_ignore_ascii_case("label"));
            width = Some(rec.len());
            continue;
        }
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(parse_err(line, format!("expected {w} fields, found {}", rec.len())));
            }
            _ => {}
        }
        let coords = if has_label { rec.len() - 1 } else { rec.len() };
        for (c, field) in rec.iter().take(coords).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: `{field}` is not a number", c + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", c + 1)));
            }
            flat.push(v);
        }
        if has_label {
            let field = rec.get(coords).unwrap_or_default();
            let l: u32 = field
                .parse()
                .map_err(|_| parse_err(line, format!("label `{field}` is not a non-negative integer")))?;
            labels.push(l);
        }
    }
    let d = width.map(|w| if has_label { w - 1 } else { w }).unwrap_or(0);
    if flat.is_empty() || d == 0 {
        return Err(domain("dataset has no coordinate data"));
    }
    Ok(LabeledDataset {
        points: State::new(flat, d)?,
        labels,
        spec: None,
    })
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d).map(|c| format!("x{c}")).collect()
}

/// Writes `x1..xd` and, if the dataset carries labels, `label`.
pub fn write_dataset<W: Write>(data: &LabeledDataset, writer: W) -> Result<()> {
    let labelled = !data.labels.is_empty();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = coordinate_header(data.points.dim());
    if labelled {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, x) in data.points.points().enumerate() {
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        if labelled {
            row.push(data.labels[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_state<W: Write>(s: &State, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(coordinate_header(s.dim()))?;
    for x in s.points() {
        w.write_record(x.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `index,cluster_id` rows.
pub fn write_partition<W: Write>(p: &Partition, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "cluster_id"])?;
    for (i, c) in p.assignment().iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_partition<R: Read>(reader: R) -> Result<Partition> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut ids = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let index: usize = rec
            .get(0)
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err(line, "bad index"))?;
        if index != row {
            return Err(parse_err(line, format!("expected index {row}, found {index}")));
        }
        let id: u32 = rec
            .get(1)
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err(line, "bad cluster id"))?;
        ids.push(id);
    }
    Ok(Partition::from_labels(&ids))
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    schema: &'static str,
    clusters: &'a [ClusterSummary],
}

pub fn write_cluster_summary<W: Write>(summary: &[ClusterSummary], writer: W) -> Result<()> {
    write_json(
        &SummaryFile {
            schema: SUMMARY_SCHEMA,
            clusters: summary,
        },
        writer,
    )
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Creates `path` (and missing parents) for buffered writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
