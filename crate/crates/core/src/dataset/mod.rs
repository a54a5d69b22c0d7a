//! Observed labels, ground truth, and the synthetic benchmark generator.
//!
//! Classes are stored zero-based (`0..C`); every file format uses `1..=C`.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

mod io;
mod synth;

pub use io::{
    parse_ground_truth, parse_labels, parse_predictions, parse_truth_for_ids, write_index_map,
    write_labels, write_truth, ParsedTruth, Predictions,
};
pub use synth::{generate_synthetic, SynthConfig, SyntheticData};

/// Sparse item x worker label matrix.
///
/// Invariants: every stored class is `< num_classes`, there is at most one
/// label per (item, worker) pair, and `workers_of(i)` lists exactly the
/// workers that labeled item `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    num_items: usize,
    num_workers: usize,
    num_classes: usize,
    /// (item, worker, class) in insertion order.
    records: Vec<(usize, usize, usize)>,
    by_item: Vec<Vec<(usize, usize)>>,
    by_worker: Vec<Vec<(usize, usize)>>,
    item_ids: Vec<String>,
    worker_ids: Vec<String>,
}

impl LabelSet {
    /// Builds a label set from zero-based `(item, worker, class)` triples.
    /// Identifiers default to `i<index>` and `w<index>`.
    pub fn from_triples(
        num_items: usize,
        num_workers: usize,
        num_classes: usize,
        triples: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let item_ids = (0..num_items).map(|i| format!("i{i}")).collect();
        let worker_ids = (0..num_workers).map(|k| format!("w{k}")).collect();
        Self::with_ids(num_classes, item_ids, worker_ids, triples)
    }

    pub fn with_ids(
        num_classes: usize,
        item_ids: Vec<String>,
        worker_ids: Vec<String>,
        triples: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let num_items = item_ids.len();
        let num_workers = worker_ids.len();
        if num_classes == 0 {
            return Err(Error::config("number of classes must be positive"));
        }
        let mut by_item = vec![Vec::new(); num_items];
        let mut by_worker = vec![Vec::new(); num_workers];
        let mut records = Vec::new();
        for (i, k, c) in triples {
            if i >= num_items || k >= num_workers {
                return Err(Error::config(format!(
                    "label ({i}, {k}) outside {num_items} items x {num_workers} workers"
                )));
            }
            if c >= num_classes {
                return Err(Error::config(format!(
                    "class {c} outside 0..{num_classes} for item {i}, worker {k}"
                )));
            }
            let row: &mut Vec<(usize, usize)> = &mut by_item[i];
            match row.binary_search_by_key(&k, |&(w, _)| w) {
                Ok(_) => {
                    return Err(Error::config(format!(
                        "duplicate label for item {i}, worker {k}"
                    )))
                }
                Err(pos) => row.insert(pos, (k, c)),
            }
            let col: &mut Vec<(usize, usize)> = &mut by_worker[k];
            let pos = col.partition_point(|&(j, _)| j < i);
            col.insert(pos, (i, c));
            records.push((i, k, c));
        }
        Ok(Self {
            num_items,
            num_workers,
            num_classes,
            records,
            by_item,
            by_worker,
            item_ids,
            worker_ids,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_labels(&self) -> usize {
        self.records.len()
    }

    /// `(worker, class)` pairs for item `i`, sorted by worker.
    pub fn workers_of(&self, item: usize) -> &[(usize, usize)] {
        &self.by_item[item]
    }

    /// `(item, class)` pairs for worker `k`, sorted by item.
    pub fn items_of(&self, worker: usize) -> &[(usize, usize)] {
        &self.by_worker[worker]
    }

    pub fn label(&self, item: usize, worker: usize) -> Option<usize> {
        let row = &self.by_item[item];
        row.binary_search_by_key(&worker, |&(w, _)| w)
            .ok()
            .map(|p| row[p].1)
    }

    /// `(item, worker, class)` triples in insertion order.
    pub fn records(&self) -> &[(usize, usize, usize)] {
        &self.records
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn worker_ids(&self) -> &[String] {
        &self.worker_ids
    }

    pub fn item_index(&self) -> HashMap<&str, usize> {
        self.item_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    pub fn unlabeled_items(&self) -> Vec<usize> {
        (0..self.num_items)
            .filter(|&i| self.by_item[i].is_empty())
            .collect()
    }
}

/// Ground-truth classes for a (possibly partial) subset of items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruthMap {
    truth: BTreeMap<usize, usize>,
}

impl TruthMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full truth vector, one zero-based class per item.
    pub fn from_dense(classes: &[usize]) -> Self {
        Self {
            truth: classes.iter().copied().enumerate().collect(),
        }
    }

    pub fn insert(&mut self, item: usize, class: usize) -> Option<usize> {
        self.truth.insert(item, class)
    }

    pub fn get(&self, item: usize) -> Option<usize> {
        self.truth.get(&item).copied()
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.truth.iter().map(|(&i, &c)| (i, c))
    }
}
