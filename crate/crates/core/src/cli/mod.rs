//! Command-line front end.
//!
//! Every command writes `manifest.txt` into its output directory. The
//! manifest holds the resolved options as `key=value` lines and can be fed
//! back through `replay` to reproduce the outputs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::DsOptions;
use crate::cvi::CviConfig;
use crate::dataset::{
    generate_synthetic, parse_ground_truth, parse_labels, parse_predictions, parse_truth_for_ids,
    write_index_map, write_labels, write_truth, LabelSet, SynthConfig, TruthMap,
};
use crate::error::{Error, Result};
use crate::eval::{difficulty_quality, error_rate, evaluate, select_levels, EvalReport};
use crate::gibbs::{GibbsConfig, Hyperparams};
use crate::initpredict::InitOptions;
use crate::math::{mean, std_dev};
use crate::runner::{run_method, InitMethod, Method, MethodOutput, RunOptions};

mod report;

use report::{fmt6, opt6, Table};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "idbla", version, about = "Difficulty-aware truth inference for crowd labels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Infer true labels with one method, optionally over several seeds.
    Aggregate(AggregateArgs),
    /// Score a predictions file against ground truth.
    Evaluate(EvaluateArgs),
    /// Choose the number of difficulty levels by label likelihood.
    SelectH(SelectArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `key=value` generator config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Options shared by every inference command.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.8)]
    pub delta: f64,
    /// Scale from worker correct-rate to ability in the initializer.
    #[arg(long, default_value_t = crate::initpredict::DEFAULT_ABILITY_SCALE)]
    pub ability_scale: f64,
    /// `glad` (vote + difficulty fit) or `random`.
    #[arg(long, default_value_t = InitMethod::Glad)]
    pub init: InitMethod,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub burnin: usize,
    /// CVI stopping threshold on the largest parameter change.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Sweep cap for CVI and iteration cap for DS-EM.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub em_tol: f64,
    #[arg(long, default_value_t = crate::baselines::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long)]
    pub seed: u64,
}

impl ModelArgs {
    fn options(&self, levels: usize) -> RunOptions {
        RunOptions {
            hyper: Hyperparams {
                omega: self.omega,
                gamma_alpha: self.gamma_alpha,
                gamma_beta: self.gamma_beta,
                psi: self.psi,
                nu: self.nu,
                delta: self.delta,
                levels,
            },
            init: self.init,
            init_opts: InitOptions {
                ability_scale: self.ability_scale,
                ..InitOptions::default()
            },
            gibbs: GibbsConfig {
                samples: self.samples,
                burn_in: self.burnin,
                seed: self.seed,
            },
            cvi: CviConfig {
                max_iters: self.max_iters,
                tol: self.tol,
                ..CviConfig::default()
            },
            ds: DsOptions {
                max_iters: self.max_iters,
                tol: self.em_tol,
                smoothing: self.smoothing,
            },
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("omega", self.omega.to_string()),
            ("gamma_alpha", self.gamma_alpha.to_string()),
            ("gamma_beta", self.gamma_beta.to_string()),
            ("psi", self.psi.to_string()),
            ("nu", self.nu.to_string()),
            ("delta", self.delta.to_string()),
            ("ability_scale", self.ability_scale.to_string()),
            ("init", self.init.to_string()),
            ("samples", self.samples.to_string()),
            ("burnin", self.burnin.to_string()),
            ("tol", self.tol.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("em_tol", self.em_tol.to_string()),
            ("smoothing", self.smoothing.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of classes; defaults to the largest label seen.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Require ground truth and report error rates.
    #[arg(long)]
    pub evaluate: bool,
    /// mv, dsem, idbla, fidbla or cvi.
    #[arg(long)]
    pub method: Method,
    /// Number of difficulty levels H.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Labels file; with a `level` column in the predictions it enables the
    /// per-level labeling error.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub candidates: Vec<usize>,
    /// idbla, fidbla or cvi.
    #[arg(long, default_value_t = Method::Idbla)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit status for an error: 1 for bad options, 2 for bad data or I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 1,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Aggregate(a) => cmd_aggregate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::SelectH(a) => cmd_select_h(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

/// Parses `argv` (without the program name) and runs it, returning the exit
/// status. Diagnostics go to stderr.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("idbla"))
        .chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

// ---- manifests ----

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("expected key=value, found {line:?}"),
        })?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("repeated key {:?}", k.trim()),
            });
        }
    }
    Ok(out)
}

fn write_manifest(dir: &Path, command: &str, pairs: &[(&str, String)]) -> Result<()> {
    let mut text = format!("command={command}\n");
    for (k, v) in pairs {
        text.push_str(&format!("{k}={v}\n"));
    }
    fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

fn path_value(p: &Path) -> Result<String> {
    Ok(fs::canonicalize(p)?.display().to_string())
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let mut pairs = read_pairs(&a.manifest)?;
    let command = pairs
        .remove("command")
        .ok_or_else(|| Error::config("manifest has no command"))?;
    let out = a.out.display().to_string();
    if command == "synth" {
        fs::create_dir_all(&a.out)?;
        let cfg = SynthConfig::from_pairs(&pairs)?;
        return synth_to(&cfg, &a.out);
    }
    if !matches!(command.as_str(), "aggregate" | "evaluate" | "select-h") {
        return Err(Error::config(format!("cannot replay command {command:?}")));
    }
    let mut argv = vec![command.clone()];
    for (k, v) in &pairs {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => argv.push(flag),
            "false" => {}
            _ => argv.extend([flag, v.clone()]),
        }
    }
    argv.extend(["--out".to_string(), out]);
    let cli = Cli::try_parse_from(std::iter::once("idbla".to_string()).chain(argv))
        .map_err(|e| Error::config(format!("manifest does not form a valid command: {e}")))?;
    run(cli)
}

// ---- synth ----

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let mut pairs = read_pairs(p)?;
            // a synth manifest doubles as a config file
            if pairs.remove("command").is_some_and(|c| c != "synth") {
                return Err(Error::config("config file is a manifest of another command"));
            }
            SynthConfig::from_pairs(&pairs)?
        }
        None => SynthConfig::default(),
    };
    if let Some(n) = a.items {
        cfg.num_items = n;
    }
    if let Some(n) = a.workers {
        cfg.num_workers = n;
        if a.config.is_none() || cfg.participation.as_ref().is_some_and(|p| p.len() != n) {
            cfg.participation = None;
        }
        if cfg.accuracies.as_ref().is_some_and(|p| p.len() != n) {
            cfg.accuracies = None;
        }
    }
    if let Some(c) = a.classes {
        if c != cfg.num_classes {
            cfg.num_classes = c;
            cfg.class_probs = vec![1.0 / c as f64; c];
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    fs::create_dir_all(&a.out)?;
    synth_to(&cfg, &a.out)
}

fn synth_to(cfg: &SynthConfig, out: &Path) -> Result<()> {
    let data = generate_synthetic(cfg)?;
    let mut labels = Vec::new();
    write_labels(&data.labels, &mut labels)?;
    let mut truth = Vec::new();
    write_truth(&data.truth, &data.labels, &mut truth)?;
    let mut difficulty = String::from("item,level\n");
    for (i, d) in data.difficulty.iter().enumerate() {
        difficulty.push_str(&format!("{},{}\n", data.labels.item_ids()[i], d + 1));
    }
    let mut workers = String::from("worker,participation,accuracy\n");
    for k in 0..data.labels.num_workers() {
        workers.push_str(&format!(
            "{},{},{}\n",
            data.labels.worker_ids()[k],
            fmt6(data.participation[k]),
            fmt6(data.worker_accuracy[k])
        ));
    }
    fs::write(out.join("labels.csv"), labels)?;
    fs::write(out.join("truth.csv"), truth)?;
    fs::write(out.join("difficulty.csv"), difficulty)?;
    fs::write(out.join("workers.csv"), workers)?;
    let pairs: Vec<(String, String)> = cfg.to_pairs();
    let pairs: Vec<(&str, String)> = pairs.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    write_manifest(out, "synth", &pairs)?;
    log::info!(
        "wrote {} labels on {} items to {}",
        data.labels.num_labels(),
        data.labels.num_items(),
        out.display()
    );
    Ok(())
}

// ---- aggregate ----

fn load_labels(path: &Path, classes: Option<usize>) -> Result<LabelSet> {
    parse_labels(BufReader::new(File::open(path)?), classes)
}

fn load_truth(path: &Path, labels: &LabelSet) -> Result<TruthMap> {
    let parsed = parse_ground_truth(BufReader::new(File::open(path)?), labels)?;
    if parsed.truth.is_empty() {
        return Err(Error::Mismatch("no truth item matches the labels file".into()));
    }
    Ok(parsed.truth)
}

fn validate_method_options(method: Method, levels: usize, model: &ModelArgs) -> Result<RunOptions> {
    let opts = model.options(levels);
    if method.has_levels() {
        let m = match method {
            Method::FixedIdbla => crate::gibbs::Model::FixedIdbla,
            _ => crate::gibbs::Model::Idbla,
        };
        opts.hyper.validate(m)?;
    }
    if matches!(method, Method::Idbla | Method::FixedIdbla) && model.samples == 0 {
        return Err(Error::config("--samples must be positive"));
    }
    if !(model.tol > 0.0) || !(model.em_tol > 0.0) || !(model.smoothing >= 0.0) {
        return Err(Error::config("tolerances must be positive, smoothing non-negative"));
    }
    Ok(opts)
}

struct RunRecord {
    seed: u64,
    output: MethodOutput,
    error_rate: Option<f64>,
    level_error: Option<Vec<Option<f64>>>,
}

fn cmd_aggregate(a: &AggregateArgs) -> Result<()> {
    if a.repeat == 0 {
        return Err(Error::config("--repeat must be at least 1"));
    }
    if a.evaluate && a.truth.is_none() {
        return Err(Error::config("--evaluate needs --truth"));
    }
    let opts = validate_method_options(a.method, a.levels, &a.model)?;
    let labels = load_labels(&a.labels, a.classes)?;
    let truth = a.truth.as_deref().map(|p| load_truth(p, &labels)).transpose()?;

    let mut runs = Vec::with_capacity(a.repeat);
    for r in 0..a.repeat {
        let seed = a.model.seed.wrapping_add(r as u64);
        log::info!("{} run {r} (seed {seed})", a.method);
        let output = run_method(a.method, &labels, &opts, seed)?;
        let error_rate = truth.as_ref().map(|t| error_rate(&output.classes, t)).transpose()?;
        let level_error = match (&truth, &output.levels) {
            (Some(t), Some(lv)) => Some(difficulty_quality(&labels, t, lv, a.levels)),
            _ => None,
        };
        runs.push(RunRecord {
            seed,
            output,
            error_rate,
            level_error,
        });
    }

    fs::create_dir_all(&a.out)?;
    let mut pairs = vec![("labels", path_value(&a.labels)?)];
    if let Some(c) = a.classes {
        pairs.push(("classes", c.to_string()));
    }
    if let Some(t) = &a.truth {
        pairs.push(("truth", path_value(t)?));
    }
    pairs.extend([
        ("evaluate", a.evaluate.to_string()),
        ("method", a.method.to_string()),
        ("levels", a.levels.to_string()),
        ("repeat", a.repeat.to_string()),
    ]);
    pairs.extend(a.model.pairs());
    write_manifest(&a.out, "aggregate", &pairs)?;
    let mut index_map = Vec::new();
    write_index_map(&labels, &mut index_map)?;
    fs::write(a.out.join("index_map.csv"), index_map)?;

    for (r, run) in runs.iter().enumerate() {
        let dir = a.out.join(format!("run_{r:03}"));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("predictions.csv"), predictions_csv(&labels, &run.output))?;
        if !run.output.trace.is_empty() {
            let column = if a.method == Method::Cvi { "max_change" } else { "objective" };
            let mut s = format!("iteration,{column}\n");
            for (it, v) in run.output.trace.iter().enumerate() {
                s.push_str(&format!("{},{}\n", it + 1, fmt6(*v)));
            }
            fs::write(dir.join("trace.csv"), s)?;
        }
        if let Some(le) = &run.level_error {
            let mut s = String::from("level,items,mean_label_error\n");
            let lv = run.output.levels.as_ref().expect("levels present");
            for (h, e) in le.iter().enumerate() {
                let n = lv.iter().filter(|&&x| x == h).count();
                s.push_str(&format!("{},{},{}\n", h + 1, n, opt6(*e)));
            }
            fs::write(dir.join("levels.csv"), s)?;
        }
    }
    write_summary(&a.out, a.method, &runs)
}

fn predictions_csv(labels: &LabelSet, out: &MethodOutput) -> String {
    let c = labels.num_classes();
    let mut s = String::from("item,label");
    if out.levels.is_some() {
        s.push_str(",level");
    }
    for t in 1..=c {
        s.push_str(&format!(",p_{t}"));
    }
    s.push('\n');
    for (i, id) in labels.item_ids().iter().enumerate() {
        s.push_str(&format!("{id},{}", out.classes[i] + 1));
        if let Some(lv) = &out.levels {
            s.push_str(&format!(",{}", lv[i] + 1));
        }
        for p in &out.class_marginals[i] {
            s.push(',');
            s.push_str(&fmt6(*p));
        }
        s.push('\n');
    }
    s
}

fn write_summary(out: &Path, method: Method, runs: &[RunRecord]) -> Result<()> {
    let mut csv = String::from("run,seed,error_rate,nll,iterations,converged\n");
    let mut table = Table::new(&["run", "seed", "error_rate", "nll", "iterations", "converged"]);
    for (r, run) in runs.iter().enumerate() {
        let row = [
            r.to_string(),
            run.seed.to_string(),
            opt6(run.error_rate),
            fmt6(run.output.nll),
            run.output.trace.len().to_string(),
            run.output.converged.to_string(),
        ];
        csv.push_str(&row.join(","));
        csv.push('\n');
        table.row(&row);
    }
    let nll: Vec<f64> = runs.iter().map(|r| r.output.nll).collect();
    let errors: Vec<f64> = runs.iter().filter_map(|r| r.error_rate).collect();
    let mut text = format!("method: {method}\nruns: {}\n\n{}\n", runs.len(), table.render());
    if !errors.is_empty() {
        text.push_str(&format!(
            "error_rate mean {} std {}\n",
            fmt6(mean(&errors)),
            fmt6(std_dev(&errors))
        ));
    }
    text.push_str(&format!("nll mean {}\n", fmt6(mean(&nll))));
    fs::write(out.join("summary.csv"), csv)?;
    fs::write(out.join("summary.txt"), text)?;
    Ok(())
}

// ---- evaluate ----

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let pred = parse_predictions(BufReader::new(File::open(&a.pred)?))?;
    let truth_by_pred = parse_truth_for_ids(BufReader::new(File::open(&a.truth)?), &pred.item_ids)?;
    let report = match &a.labels {
        None => evaluate(&pred.classes, &truth_by_pred, None, None, None)?,
        Some(path) => {
            let labels = load_labels(path, None)?;
            let index = labels.item_index();
            let mut order = Vec::with_capacity(pred.item_ids.len());
            for id in &pred.item_ids {
                let i = index.get(id.as_str()).ok_or_else(|| {
                    Error::Mismatch(format!("predicted item {id:?} is not in the labels file"))
                })?;
                order.push(*i);
            }
            if order.len() != labels.num_items() {
                return Err(Error::Mismatch(format!(
                    "{} predictions for {} labeled items",
                    order.len(),
                    labels.num_items()
                )));
            }
            let mut classes = vec![0; labels.num_items()];
            for (p, &i) in order.iter().enumerate() {
                classes[i] = pred.classes[p];
            }
            let mut truth = TruthMap::new();
            for (p, t) in truth_by_pred.iter() {
                truth.insert(order[p], t);
            }
            match &pred.levels {
                Some(pl) => {
                    let h = pl.iter().max().map_or(1, |m| m + 1);
                    let mut levels = vec![0; labels.num_items()];
                    for (p, &i) in order.iter().enumerate() {
                        levels[i] = pl[p];
                    }
                    evaluate(&classes, &truth, Some(&labels), Some((&levels, h)), None)?
                }
                None => evaluate(&classes, &truth, None, None, None)?,
            }
        }
    };

    fs::create_dir_all(&a.out)?;
    let mut pairs = vec![("pred", path_value(&a.pred)?), ("truth", path_value(&a.truth)?)];
    if let Some(l) = &a.labels {
        pairs.push(("labels", path_value(l)?));
    }
    let (csv, text) = report_files(&report);
    fs::write(a.out.join("report.csv"), csv)?;
    fs::write(a.out.join("report.txt"), &text)?;
    write_manifest(&a.out, "evaluate", &pairs)?;
    print!("{text}");
    Ok(())
}

fn report_files(r: &EvalReport) -> (String, String) {
    let mut csv = String::from("metric,level,value\n");
    csv.push_str(&format!("error_rate,,{}\n", fmt6(r.error_rate)));
    csv.push_str(&format!("items_evaluated,,{}\n", r.evaluated));
    if let Some(nll) = r.nll {
        csv.push_str(&format!("nll,,{}\n", fmt6(nll)));
    }
    let mut table = Table::new(&["metric", "level", "value"]);
    table.row(&["error_rate".into(), String::new(), fmt6(r.error_rate)]);
    table.row(&["items_evaluated".into(), String::new(), r.evaluated.to_string()]);
    for (h, e) in r.level_error.iter().enumerate() {
        csv.push_str(&format!("level_error,{},{}\n", h + 1, opt6(*e)));
        let shown = e.map_or_else(|| "undefined".to_string(), fmt6);
        table.row(&["level_error".into(), (h + 1).to_string(), shown]);
    }
    (csv, table.render())
}

// ---- select-h ----

fn cmd_select_h(a: &SelectArgs) -> Result<()> {
    if !a.method.has_levels() {
        return Err(Error::config(format!("{} has no difficulty levels", a.method)));
    }
    let mut opts = None;
    for &h in &a.candidates {
        opts = Some(validate_method_options(a.method, h, &a.model)?);
    }
    let opts = opts.expect("clap requires a candidate");
    let labels = load_labels(&a.labels, a.classes)?;
    let truth = a.truth.as_deref().map(|p| load_truth(p, &labels)).transpose()?;
    let sel = select_levels(
        &labels,
        &a.candidates,
        a.method,
        &opts,
        a.model.seed,
        truth.as_ref(),
    )?;

    fs::create_dir_all(&a.out)?;
    let mut csv = String::from("levels,nll,error_rate,chosen\n");
    let mut table = Table::new(&["levels", "nll", "error_rate", "chosen"]);
    for row in &sel.table {
        let cells = [
            row.levels.to_string(),
            fmt6(row.nll),
            opt6(row.error_rate),
            (row.levels == sel.chosen).to_string(),
        ];
        csv.push_str(&cells.join(","));
        csv.push('\n');
        table.row(&cells);
    }
    let text = format!(
        "method: {}\nchosen levels: {}\n\n{}\nnll is evaluated at plug-in estimates: posterior-mean \
         confusion matrices with argmax classes and levels.\nerror_rate is reported for reference \
         and plays no part in the choice.\n",
        a.method,
        sel.chosen,
        table.render()
    );
    let mut pairs = vec![("labels", path_value(&a.labels)?)];
    if let Some(c) = a.classes {
        pairs.push(("classes", c.to_string()));
    }
    if let Some(t) = &a.truth {
        pairs.push(("truth", path_value(t)?));
    }
    let cands: Vec<String> = a.candidates.iter().map(|c| c.to_string()).collect();
    pairs.push(("candidates", cands.join(",")));
    pairs.push(("method", a.method.to_string()));
    pairs.extend(a.model.pairs());
    fs::write(a.out.join("select_h.csv"), csv)?;
    fs::write(a.out.join("select_h.txt"), &text)?;
    write_manifest(&a.out, "select-h", &pairs)?;
    print!("{text}");
    Ok(())
}
