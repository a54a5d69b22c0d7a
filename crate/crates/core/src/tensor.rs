/// Row-stochastic confusion matrices, one per (worker, difficulty level).
///
/// Entry `(k, h, t, c)` is the probability that worker `k` reports class `c`
/// for an item whose true class is `t` and whose difficulty level is `h`.
/// A Dawid-Skene model is the special case with a single level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionTensor {
    workers: usize,
    levels: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ConfusionTensor {
    pub fn filled(workers: usize, levels: usize, classes: usize, value: f64) -> Self {
        Self {
            workers,
            levels,
            classes,
            data: vec![value; workers * levels * classes * classes],
        }
    }

    pub fn uniform(workers: usize, levels: usize, classes: usize) -> Self {
        Self::filled(workers, levels, classes, 1.0 / classes as f64)
    }

    pub fn zeros(workers: usize, levels: usize, classes: usize) -> Self {
        Self::filled(workers, levels, classes, 0.0)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    fn offset(&self, worker: usize, level: usize, truth: usize) -> usize {
        debug_assert!(worker < self.workers && level < self.levels && truth < self.classes);
        ((worker * self.levels + level) * self.classes + truth) * self.classes
    }

    #[inline]
    pub fn get(&self, worker: usize, level: usize, truth: usize, observed: usize) -> f64 {
        self.data[self.offset(worker, level, truth) + observed]
    }

    #[inline]
    pub fn row(&self, worker: usize, level: usize, truth: usize) -> &[f64] {
        let o = self.offset(worker, level, truth);
        &self.data[o..o + self.classes]
    }

    #[inline]
    pub fn row_mut(&mut self, worker: usize, level: usize, truth: usize) -> &mut [f64] {
        let o = self.offset(worker, level, truth);
        let c = self.classes;
        &mut self.data[o..o + c]
    }

    pub fn set_row(&mut self, worker: usize, level: usize, truth: usize, row: &[f64]) {
        self.row_mut(worker, level, truth).copy_from_slice(row);
    }

    /// Copies one `C x C` matrix into the slice of every worker at `level`.
    pub fn set_level_matrix(&mut self, level: usize, matrix: &[Vec<f64>]) {
        for k in 0..self.workers {
            for (t, row) in matrix.iter().enumerate() {
                self.set_row(k, level, t, row);
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        self.data
            .chunks(self.classes.max(1))
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
