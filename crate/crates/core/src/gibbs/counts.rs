use crate::dataset::LabelSet;

/// Sufficient statistics of a complete assignment of classes and levels.
///
/// * `label_count(k, h, t, c)`: labels `c` given by worker `k` to items with
///   class `t` at level `h`;
/// * `label_total(k, h, t)`: the same summed over `c`;
/// * `class_count(t)`, `level_count(h)`: items per class and per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountCache {
    levels: usize,
    classes: usize,
    n_l: Vec<u32>,
    n_l_total: Vec<u32>,
    n_t: Vec<u32>,
    n_q: Vec<u32>,
}

impl CountCache {
    pub fn empty(workers: usize, levels: usize, classes: usize) -> Self {
        Self {
            levels,
            classes,
            n_l: vec![0; workers * levels * classes * classes],
            n_l_total: vec![0; workers * levels * classes],
            n_t: vec![0; classes],
            n_q: vec![0; levels],
        }
    }

    /// Counts recomputed from scratch.
    pub fn from_assignments(
        labels: &LabelSet,
        classes: &[usize],
        levels: &[usize],
        num_levels: usize,
    ) -> Self {
        let mut cache = Self::empty(labels.num_workers(), num_levels, labels.num_classes());
        for i in 0..labels.num_items() {
            cache.add_item(labels, i, classes[i], levels[i]);
        }
        cache
    }

    #[inline]
    fn row_index(&self, worker: usize, level: usize, truth: usize) -> usize {
        (worker * self.levels + level) * self.classes + truth
    }

    pub fn add_item(&mut self, labels: &LabelSet, item: usize, class: usize, level: usize) {
        self.n_t[class] += 1;
        self.n_q[level] += 1;
        for &(k, c) in labels.workers_of(item) {
            let r = self.row_index(k, level, class);
            self.n_l_total[r] += 1;
            self.n_l[r * self.classes + c] += 1;
        }
    }

    pub fn remove_item(&mut self, labels: &LabelSet, item: usize, class: usize, level: usize) {
        self.n_t[class] -= 1;
        self.n_q[level] -= 1;
        for &(k, c) in labels.workers_of(item) {
            let r = self.row_index(k, level, class);
            self.n_l_total[r] -= 1;
            self.n_l[r * self.classes + c] -= 1;
        }
    }

    #[inline]
    pub fn label_count(&self, worker: usize, level: usize, truth: usize, observed: usize) -> u32 {
        self.n_l[self.row_index(worker, level, truth) * self.classes + observed]
    }

    #[inline]
    pub fn label_row(&self, worker: usize, level: usize, truth: usize) -> &[u32] {
        let o = self.row_index(worker, level, truth) * self.classes;
        &self.n_l[o..o + self.classes]
    }

    #[inline]
    pub fn label_total(&self, worker: usize, level: usize, truth: usize) -> u32 {
        self.n_l_total[self.row_index(worker, level, truth)]
    }

    pub fn class_counts(&self) -> &[u32] {
        &self.n_t
    }

    pub fn level_counts(&self) -> &[u32] {
        &self.n_q
    }

    pub fn label_counts(&self) -> &[u32] {
        &self.n_l
    }

    pub fn num_levels(&self) -> usize {
        self.levels
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }
}
