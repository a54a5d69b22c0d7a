//! Comma-separated label and truth files.
//!
//! Label files start with the header `item,worker,label`, truth files with
//! `item,label`. Identifiers are re-indexed densely in first-appearance order.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{LabelSet, TruthMap};
use crate::error::{Error, Result};

const LABEL_HEADER: &str = "item,worker,label";
const TRUTH_HEADER: &str = "item,label";

/// Yields `(line_number, fields)` for every non-blank record after the header.
fn records<R: BufRead>(
    reader: R,
    header: &str,
) -> Result<impl Iterator<Item = Result<(usize, Vec<String>)>>> {
    records_with_prefix(reader, header, false).map(|(_, it)| it)
}

/// Like [`records`], but with `prefix` the header only has to start with
/// `header`; the full header is returned and fixes the record width.
#[allow(clippy::type_complexity)]
fn records_with_prefix<R: BufRead>(
    reader: R,
    header: &str,
    prefix: bool,
) -> Result<(Vec<String>, impl Iterator<Item = Result<(usize, Vec<String>)>>)> {
    let mut lines = reader.lines().enumerate();
    let first = loop {
        match lines.next() {
            None => return Err(Error::EmptyInput(format!("expected header `{header}`"))),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let got: Vec<&str> = first.trim_start_matches('\u{feff}').split(',').map(str::trim).collect();
    let want: Vec<&str> = header.split(',').collect();
    let ok = if prefix { got.starts_with(&want) } else { got == want };
    if !ok {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{header}`, found `{}`", first.trim()),
        });
    }
    let width = got.len();
    let names = got.iter().map(|s| s.to_string()).collect();
    let iter = lines.filter_map(move |(n, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let line_no = n + 1;
        if line.trim().is_empty() {
            return None;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Some(Err(Error::Parse {
                line: line_no,
                message: format!("expected {width} fields, found {}", fields.len()),
            }));
        }
        Some(Ok((line_no, fields)))
    });
    Ok((names, iter))
}

fn parse_class(raw: &str, line: usize, num_classes: Option<usize>) -> Result<usize> {
    let value: i64 = raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("label is not an integer: {raw:?}"),
    })?;
    let in_range = value >= 1 && num_classes.is_none_or(|c| value as usize <= c);
    if !in_range {
        return Err(Error::LabelOutOfRange {
            line,
            label: raw.to_string(),
        });
    }
    Ok(value as usize - 1)
}

/// Parses a label file.
///
/// The class count is the largest observed label unless `num_classes` is
/// given, in which case larger labels are rejected.
pub fn parse_labels<R: BufRead>(reader: R, num_classes: Option<usize>) -> Result<LabelSet> {
    let mut item_ids: Vec<String> = Vec::new();
    let mut worker_ids: Vec<String> = Vec::new();
    let mut item_index: HashMap<String, usize> = HashMap::new();
    let mut worker_index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triples = Vec::new();
    let mut max_class = 0;

    for rec in records(reader, LABEL_HEADER)? {
        let (line, fields) = rec?;
        let class = parse_class(&fields[2], line, num_classes)?;
        let i = *item_index.entry(fields[0].clone()).or_insert_with(|| {
            item_ids.push(fields[0].clone());
            item_ids.len() - 1
        });
        let k = *worker_index.entry(fields[1].clone()).or_insert_with(|| {
            worker_ids.push(fields[1].clone());
            worker_ids.len() - 1
        });
        if let Some(&first_line) = seen.get(&(i, k)) {
            return Err(Error::DuplicateLabel {
                item: fields[0].clone(),
                worker: fields[1].clone(),
                first_line,
                second_line: line,
            });
        }
        seen.insert((i, k), line);
        max_class = max_class.max(class + 1);
        triples.push((i, k, class));
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput("label file has no records".into()));
    }
    LabelSet::with_ids(num_classes.unwrap_or(max_class), item_ids, worker_ids, triples)
}

/// Truth parsed against a label set, with warnings for skipped records.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTruth {
    pub truth: TruthMap,
    pub warnings: Vec<String>,
}

/// Parses a truth file, keyed by the label set's item indexing.
///
/// Items unknown to `labels` are skipped with a warning.
pub fn parse_ground_truth<R: BufRead>(reader: R, labels: &LabelSet) -> Result<ParsedTruth> {
    parse_truth_indexed(reader, &labels.item_index(), Some(labels.num_classes()), false)
}

/// Parses a truth file against a list of item identifiers. Unknown items are
/// an error.
pub fn parse_truth_for_ids<R: BufRead>(reader: R, ids: &[String]) -> Result<TruthMap> {
    let index: HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    Ok(parse_truth_indexed(reader, &index, None, true)?.truth)
}

fn parse_truth_indexed<R: BufRead>(
    reader: R,
    index: &HashMap<&str, usize>,
    num_classes: Option<usize>,
    strict: bool,
) -> Result<ParsedTruth> {
    let mut truth = TruthMap::new();
    let mut lines_of: HashMap<usize, usize> = HashMap::new();
    let mut warnings = Vec::new();
    for rec in records(reader, TRUTH_HEADER)? {
        let (line, fields) = rec?;
        let class = parse_class(&fields[1], line, num_classes)?;
        let Some(&i) = index.get(fields[0].as_str()) else {
            if strict {
                return Err(Error::Mismatch(format!(
                    "line {line}: item {:?} has no prediction",
                    fields[0]
                )));
            }
            let msg = format!("line {line}: unknown item {:?} skipped", fields[0]);
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        };
        if let Some(&first_line) = lines_of.get(&i) {
            return Err(Error::DuplicateTruth {
                item: fields[0].clone(),
                first_line,
                second_line: line,
            });
        }
        lines_of.insert(i, line);
        truth.insert(i, class);
    }
    Ok(ParsedTruth { truth, warnings })
}

/// Hard predictions read back from a predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub item_ids: Vec<String>,
    pub classes: Vec<usize>,
    /// Present when the file has a `level` column.
    pub levels: Option<Vec<usize>>,
}

/// Parses a file whose header starts with `item,label`, optionally followed
/// by `level` and further columns, which are ignored.
pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Predictions> {
    let (header, recs) = records_with_prefix(reader, TRUTH_HEADER, true)?;
    let has_level = header.get(2).is_some_and(|h| h == "level");
    let mut item_ids = Vec::new();
    let mut classes = Vec::new();
    let mut levels = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for rec in recs {
        let (line, fields) = rec?;
        if let Some(&first_line) = seen.get(&fields[0]) {
            return Err(Error::Parse {
                line,
                message: format!("item {:?} already predicted on line {first_line}", fields[0]),
            });
        }
        seen.insert(fields[0].clone(), line);
        classes.push(parse_class(&fields[1], line, None)?);
        if has_level {
            levels.push(parse_class(&fields[2], line, None)?);
        }
        item_ids.push(fields[0].clone());
    }
    if item_ids.is_empty() {
        return Err(Error::EmptyInput("no predictions".into()));
    }
    Ok(Predictions {
        item_ids,
        classes,
        levels: has_level.then_some(levels),
    })
}

/// Writes labels in insertion order so that re-parsing reproduces the set.
pub fn write_labels<W: Write>(labels: &LabelSet, mut out: W) -> Result<()> {
    writeln!(out, "{LABEL_HEADER}")?;
    for &(i, k, c) in labels.records() {
        writeln!(out, "{},{},{}", labels.item_ids()[i], labels.worker_ids()[k], c + 1)?;
    }
    Ok(())
}

pub fn write_truth<W: Write>(truth: &TruthMap, labels: &LabelSet, mut out: W) -> Result<()> {
    writeln!(out, "{TRUTH_HEADER}")?;
    for (i, c) in truth.iter() {
        writeln!(out, "{},{}", labels.item_ids()[i], c + 1)?;
    }
    Ok(())
}

/// Sidecar mapping dense indices back to the original identifiers.
pub fn write_index_map<W: Write>(labels: &LabelSet, mut out: W) -> Result<()> {
    writeln!(out, "kind,index,id")?;
    for (i, id) in labels.item_ids().iter().enumerate() {
        writeln!(out, "item,{i},{id}")?;
    }
    for (k, id) in labels.worker_ids().iter().enumerate() {
        writeln!(out, "worker,{k},{id}")?;
    }
    Ok(())
}
