//! One entry point for every aggregation method, shared by model selection
//! and the command line.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{ds_em, ds_m_step, majority_vote, one_hot, DsOptions};
use crate::cvi::{run_cvi, CviConfig};
use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::eval::{nll_confusion, nll_idbla};
use crate::gibbs::{run_gibbs, GibbsConfig, Hyperparams, Model};
use crate::initpredict::{preliminary_prediction, random_init, InitOptions, InitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MajorityVote,
    DawidSkene,
    Idbla,
    FixedIdbla,
    Cvi,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MajorityVote,
        Method::DawidSkene,
        Method::Idbla,
        Method::FixedIdbla,
        Method::Cvi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MajorityVote => "mv",
            Method::DawidSkene => "dsem",
            Method::Idbla => "idbla",
            Method::FixedIdbla => "fidbla",
            Method::Cvi => "cvi",
        }
    }

    /// Whether the method models difficulty levels.
    pub fn has_levels(self) -> bool {
        matches!(self, Method::Idbla | Method::FixedIdbla | Method::Cvi)
    }

    fn model(self) -> Model {
        match self {
            Method::FixedIdbla => Model::FixedIdbla,
            _ => Model::Idbla,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// Majority vote plus logistic difficulty fit.
    #[default]
    Glad,
    Random,
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glad" => Ok(InitMethod::Glad),
            "random" => Ok(InitMethod::Random),
            _ => Err(Error::config(format!("unknown init {s:?}"))),
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMethod::Glad => "glad",
            InitMethod::Random => "random",
        })
    }
}

/// Everything a run needs except the seed. Seeds in the nested configs are
/// overwritten by the run seed.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub hyper: Hyperparams,
    pub init: InitMethod,
    pub init_opts: InitOptions,
    pub gibbs: GibbsConfig,
    pub cvi: CviConfig,
    pub ds: DsOptions,
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub classes: Vec<usize>,
    pub class_marginals: Vec<Vec<f64>>,
    pub levels: Option<Vec<usize>>,
    pub level_marginals: Option<Vec<Vec<f64>>>,
    /// Plug-in negative log likelihood of the labels at the fitted parameters.
    pub nll: f64,
    /// DS-EM: penalized objective per iteration. CVI: max change per sweep.
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub fn initialize(labels: &LabelSet, opts: &RunOptions, seed: u64) -> Result<InitResult> {
    match opts.init {
        InitMethod::Glad => {
            let init_opts = InitOptions { seed, ..opts.init_opts };
            preliminary_prediction(labels, opts.hyper.levels, &init_opts)
        }
        InitMethod::Random => random_init(labels, opts.hyper.levels, seed),
    }
}

pub fn run_method(
    method: Method,
    labels: &LabelSet,
    opts: &RunOptions,
    seed: u64,
) -> Result<MethodOutput> {
    if labels.num_items() == 0 {
        return Err(Error::EmptyInput("no items".into()));
    }
    match method {
        Method::MajorityVote => {
            let classes = majority_vote(labels, seed)?;
            let marginals = one_hot(&classes, labels.num_classes());
            // plug-in confusion matrices estimated from the hard votes
            let (phi, _) = ds_m_step(labels, &marginals, opts.ds.smoothing);
            let nll = nll_confusion(labels, &phi, &classes)?;
            Ok(MethodOutput {
                classes,
                class_marginals: marginals,
                levels: None,
                level_marginals: None,
                nll,
                trace: Vec::new(),
                converged: true,
            })
        }
        Method::DawidSkene => {
            let init = majority_vote(labels, seed)?;
            let fit = ds_em(labels, &init, &opts.ds)?;
            let classes = fit.state.predictions();
            let nll = nll_confusion(labels, &fit.state.phi, &classes)?;
            Ok(MethodOutput {
                classes,
                class_marginals: fit.state.posterior,
                levels: None,
                level_marginals: None,
                nll,
                trace: fit.objective,
                converged: fit.converged,
            })
        }
        Method::Idbla | Method::FixedIdbla => {
            let init = initialize(labels, opts, seed)?;
            let cfg = GibbsConfig { seed, ..opts.gibbs };
            let s = run_gibbs(method.model(), labels, &init, &opts.hyper, &cfg)?;
            let nll = nll_idbla(labels, &s.pi_mean, &s.classes, &s.levels)?;
            Ok(MethodOutput {
                classes: s.classes,
                class_marginals: s.class_marginals,
                levels: Some(s.levels),
                level_marginals: Some(s.level_marginals),
                nll,
                trace: Vec::new(),
                converged: true,
            })
        }
        Method::Cvi => {
            let init = initialize(labels, opts, seed)?;
            let fit = run_cvi(labels, &init, &opts.hyper, &opts.cvi)?;
            let s = fit.summary(labels, &opts.hyper);
            let nll = nll_idbla(labels, &s.pi_mean, &s.classes, &s.levels)?;
            Ok(MethodOutput {
                classes: s.classes,
                class_marginals: s.class_marginals,
                levels: Some(s.levels),
                level_marginals: Some(s.level_marginals),
                nll,
                trace: fit.trace,
                converged: fit.converged,
            })
        }
    }
}
