//! Truth inference for crowdsourced labels.
//!
//! Noisy labels from many workers are aggregated into per-item posteriors over
//! the true class. Besides majority voting and Dawid-Skene EM, the crate
//! implements a difficulty-aware generative model in which every
//! (worker, difficulty level) pair owns its own confusion matrix. That model is
//! fitted either with a Gibbs sampler ([`gibbs`]) or with collapsed variational
//! inference ([`cvi`]), both initialized from a cheap logistic
//! ability/difficulty fit ([`initpredict`]).

pub mod baselines;
pub mod cli;
pub mod cvi;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod initpredict;
pub mod math;
pub mod runner;
pub mod tensor;

pub use dataset::{LabelSet, SynthConfig, TruthMap};
pub use error::{Error, Result};
pub use gibbs::{Hyperparams, Model, PosteriorSummary};
pub use tensor::ConfusionTensor;
