use crate::math::argmax;
use crate::tensor::ConfusionTensor;

/// Posterior summary accumulated over post-burn-in sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Per-item marginal over true classes.
    pub class_marginals: Vec<Vec<f64>>,
    /// Per-item marginal over difficulty levels.
    pub level_marginals: Vec<Vec<f64>>,
    pub pi_mean: ConfusionTensor,
    pub alpha_mean: Vec<f64>,
    pub beta_mean: Vec<f64>,
    /// Marginal argmax per item (ties to the smallest class).
    pub classes: Vec<usize>,
    pub levels: Vec<usize>,
    pub samples: usize,
}

impl PosteriorSummary {
    pub(crate) fn from_parts(
        class_marginals: Vec<Vec<f64>>,
        level_marginals: Vec<Vec<f64>>,
        pi_mean: ConfusionTensor,
        alpha_mean: Vec<f64>,
        beta_mean: Vec<f64>,
        samples: usize,
    ) -> Self {
        let classes = class_marginals.iter().map(|m| argmax(m)).collect();
        let levels = level_marginals.iter().map(|m| argmax(m)).collect();
        Self {
            class_marginals,
            level_marginals,
            pi_mean,
            alpha_mean,
            beta_mean,
            classes,
            levels,
            samples,
        }
    }

    /// Pools independent chains, weighting each by its number of samples.
    ///
    /// Panics if `chains` is empty or the chains disagree in shape.
    pub fn merge(chains: &[PosteriorSummary]) -> Self {
        let total: usize = chains.iter().map(|c| c.samples).sum();
        let first = &chains[0];
        let weight = |c: &PosteriorSummary| c.samples as f64 / total as f64;
        let pool_rows = |get: fn(&PosteriorSummary) -> &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let mut out: Vec<Vec<f64>> = get(first).iter().map(|r| vec![0.0; r.len()]).collect();
            for c in chains {
                let w = weight(c);
                for (acc, row) in out.iter_mut().zip(get(c)) {
                    acc.iter_mut().zip(row).for_each(|(a, x)| *a += w * x);
                }
            }
            out
        };
        let pool_vec = |get: fn(&PosteriorSummary) -> &Vec<f64>| -> Vec<f64> {
            let mut out = vec![0.0; get(first).len()];
            for c in chains {
                let w = weight(c);
                out.iter_mut().zip(get(c)).for_each(|(a, x)| *a += w * x);
            }
            out
        };
        let mut pi = ConfusionTensor::zeros(
            first.pi_mean.workers(),
            first.pi_mean.levels(),
            first.pi_mean.classes(),
        );
        for c in chains {
            let w = weight(c);
            pi.as_mut_slice()
                .iter_mut()
                .zip(c.pi_mean.as_slice())
                .for_each(|(a, x)| *a += w * x);
        }
        Self::from_parts(
            pool_rows(|s| &s.class_marginals),
            pool_rows(|s| &s.level_marginals),
            pi,
            pool_vec(|s| &s.alpha_mean),
            pool_vec(|s| &s.beta_mean),
            total,
        )
    }
}
